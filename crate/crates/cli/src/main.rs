use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;
use stratdesign::catalog;
use stratdesign::models::FisherAtoms;
use stratdesign::optimizer::{
    constrained_lift_one, objective, original_lift_one_within, relative_efficiency, LiftOneConfig,
};
use stratdesign::region::{proportional_allocation, Allocation};
use stratdesign::samplers::{proportional_counts, uniform_counts};
use stratdesign::sim::{run_study, SimReport};
use stratdesign::study::{Criterion, DesignReport, Study};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "stratdesign",
    version,
    about = "Constrained D-optimal stratified allocations"
)]
struct Cli {
    /// Overrides the optimizer seed, or the simulation seed for `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print the JSON report on stdout instead of the summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a study and round the result to integer counts.
    Design {
        study: PathBuf,
        #[arg(long, value_enum, default_value = "local")]
        criterion: CriterionArg,
        #[arg(long, default_value = "constrained-lift-one")]
        algorithm: String,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classical allocation that ignores the model.
    Allocate {
        study: PathBuf,
        #[arg(long, value_enum)]
        sampler: SamplerArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relative efficiency `(f(target) / f(baseline))^(1/p)`.
    Efficiency {
        study: PathBuf,
        /// `proportional`, `uniform`, `local`, `ew`, or a JSON file with an `allocation` field.
        #[arg(long)]
        baseline: String,
        #[arg(long)]
        target: String,
        /// Information matrix used to compare the two allocations.
        #[arg(long, value_enum, default_value = "local")]
        criterion: CriterionArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo comparison of samplers.
    Simulate {
        study: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the mean/sd table as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Clipped lift-one against the constrained algorithm on the built-in three-stratum region.
    Counterexample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Local,
    Ew,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Local => Criterion::Local,
            CriterionArg::Ew => Criterion::Ew,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplerArg {
    Proportional,
    Uniform,
}

impl SamplerArg {
    fn name(self) -> &'static str {
        match self {
            SamplerArg::Proportional => "proportional",
            SamplerArg::Uniform => "uniform",
        }
    }
}

#[derive(Serialize)]
struct AllocateReport {
    schema_version: u32,
    study: Option<String>,
    sampler: String,
    budget: u64,
    exact: Vec<u64>,
    allocation: Vec<f64>,
}

#[derive(Serialize)]
struct EfficiencyReport {
    schema_version: u32,
    study: Option<String>,
    criterion: Criterion,
    baseline: String,
    target: String,
    baseline_allocation: Vec<f64>,
    target_allocation: Vec<f64>,
    baseline_log_det: f64,
    target_log_det: f64,
    efficiency: f64,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema_version: u32,
    study: Option<String>,
    #[serde(flatten)]
    report: &'a SimReport,
}

#[derive(Serialize)]
struct CounterexampleReport {
    schema_version: u32,
    seed: u64,
    start: Vec<f64>,
    constrained: Vec<f64>,
    constrained_log_det: f64,
    constrained_lp_value: Option<f64>,
    constrained_converged: bool,
    original: Vec<f64>,
    original_log_det: f64,
    original_moved: bool,
    efficiency: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// `Ok(false)` signals an uncertified optimum.
fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Design {
            study,
            criterion,
            algorithm,
            out,
        } => {
            let s = load(study)?;
            let report = s.design((*criterion).into(), algorithm, cli.seed)?;
            emit(cli.json, out.as_deref(), &report, || {
                design_summary(&report)
            })?;
            Ok(report.converged)
        }
        Command::Allocate {
            study,
            sampler,
            out,
        } => {
            let s = load(study)?;
            let counts = s.file.counts();
            let budget = s.file.budget;
            let exact = match sampler {
                SamplerArg::Proportional => proportional_counts(&counts, budget)?,
                SamplerArg::Uniform => uniform_counts(&counts, budget)?,
            };
            let report = AllocateReport {
                schema_version: SCHEMA_VERSION,
                study: s.file.name.clone(),
                sampler: sampler.name().into(),
                budget,
                allocation: exact.iter().map(|&k| k as f64 / budget as f64).collect(),
                exact,
            };
            emit(cli.json, out.as_deref(), &report, || {
                format!(
                    "{} allocation (n = {}): {}\n",
                    report.sampler,
                    budget,
                    join(&report.exact)
                )
            })?;
            Ok(true)
        }
        Command::Efficiency {
            study,
            baseline,
            target,
            criterion,
            out,
        } => {
            let s = load(study)?;
            let criterion = Criterion::from(*criterion);
            let (atoms, _) = s.atoms(criterion)?;
            let base = allocation_source(&s, baseline, cli.seed)
                .with_context(|| format!("baseline '{baseline}'"))?;
            let tgt = allocation_source(&s, target, cli.seed)
                .with_context(|| format!("target '{target}'"))?;
            let efficiency = relative_efficiency(&atoms, &tgt, &base).context("baseline")?;
            let report = EfficiencyReport {
                schema_version: SCHEMA_VERSION,
                study: s.file.name.clone(),
                criterion,
                baseline: baseline.clone(),
                target: target.clone(),
                baseline_log_det: log_det(&atoms, &base),
                target_log_det: log_det(&atoms, &tgt),
                baseline_allocation: base.into_vec(),
                target_allocation: tgt.into_vec(),
                efficiency,
            };
            emit(cli.json, out.as_deref(), &report, || {
                format!(
                    "efficiency of {} relative to {}: {:.2}%\nlog|F| target {:.10} baseline {:.10}\n",
                    report.target,
                    report.baseline,
                    100.0 * report.efficiency,
                    report.target_log_det,
                    report.baseline_log_det
                )
            })?;
            Ok(true)
        }
        Command::Simulate {
            study,
            replicates,
            out,
            csv,
        } => {
            let s = load(study)?;
            let mut cfg = s.sim_config()?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(r) = replicates {
                cfg.replicates = *r;
            }
            let report = run_study(&cfg)?;
            if let Some(path) = csv {
                let f = fs::File::create(path)
                    .with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(f)?;
            }
            let wrapped = SimulateReport {
                schema_version: SCHEMA_VERSION,
                study: s.file.name.clone(),
                report: &report,
            };
            emit(cli.json, out.as_deref(), &wrapped, || {
                simulate_summary(&report)
            })?;
            Ok(true)
        }
        Command::Counterexample { out } => {
            let report = counterexample(cli.seed.unwrap_or(0))?;
            emit(cli.json, out.as_deref(), &report, || {
                format!(
                    "start:       {}\nclipped:     {} (log|F| {:.10}, moved: {})\nconstrained: {} (log|F| {:.10}, certified: {})\nefficiency of clipped result: {:.4}%\n",
                    fmt_weights(&report.start),
                    fmt_weights(&report.original),
                    report.original_log_det,
                    report.original_moved,
                    fmt_weights(&report.constrained),
                    report.constrained_log_det,
                    report.constrained_converged,
                    100.0 * report.efficiency
                )
            })?;
            Ok(report.constrained_converged)
        }
    }
}

fn load(path: &Path) -> Result<Study> {
    Study::load(path).with_context(|| format!("loading study {}", path.display()))
}

fn log_det(atoms: &FisherAtoms, w: &Allocation) -> f64 {
    objective(atoms, w).ln()
}

fn allocation_source(study: &Study, source: &str, seed: Option<u64>) -> Result<Allocation> {
    match source {
        "proportional" => Ok(proportional_allocation(&study.file.counts())?),
        "uniform" => Ok(study.uniform_weights()?),
        "local" | "ew" => {
            let criterion = if source == "local" {
                Criterion::Local
            } else {
                Criterion::Ew
            };
            let report = study.design(criterion, "constrained-lift-one", seed)?;
            if !report.converged {
                bail!("optimizer did not certify the {source} optimum");
            }
            Ok(Allocation::new(report.allocation)?)
        }
        path => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            let value: Value =
                serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
            let weights = value
                .get("allocation")
                .context("allocation: field missing")?;
            let weights: Vec<f64> =
                serde_json::from_value(weights.clone()).context("allocation")?;
            Ok(Allocation::new(weights).context("allocation")?)
        }
    }
}

fn counterexample(seed: u64) -> Result<CounterexampleReport> {
    let spec = catalog::counterexample_model();
    let atoms = spec.fisher_atoms(&[0.0; 3])?;
    let region = catalog::counterexample_region();
    let start = catalog::counterexample_start();
    let cfg = LiftOneConfig {
        start: Some(start.clone()),
        ..LiftOneConfig::with_seed(seed)
    };
    let fixed = constrained_lift_one(&atoms, &region, &cfg)?;
    let clipped = original_lift_one_within(&atoms, &region, &cfg)?;
    let efficiency = relative_efficiency(&atoms, &clipped.allocation, &fixed.allocation)?;
    let moved = clipped
        .allocation
        .as_slice()
        .iter()
        .zip(start.as_slice())
        .any(|(a, b)| (a - b).abs() > 1e-12);
    Ok(CounterexampleReport {
        schema_version: SCHEMA_VERSION,
        seed,
        start: start.into_vec(),
        constrained_log_det: fixed.log_objective,
        constrained_lp_value: fixed.lp_value,
        constrained_converged: fixed.converged,
        constrained: fixed.allocation.into_vec(),
        original_log_det: clipped.log_objective,
        original_moved: moved,
        original: clipped.allocation.into_vec(),
        efficiency,
    })
}

fn emit<T: Serialize>(
    json: bool,
    out: Option<&Path>,
    report: &T,
    summary: impl FnOnce() -> String,
) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Some(path) = out {
        fs::write(path, format!("{text}\n"))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if json {
        println!("{text}");
    } else {
        print!("{}", summary());
    }
    Ok(())
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn fmt_weights(w: &[f64]) -> String {
    w.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn design_summary(r: &DesignReport) -> String {
    let mut s = String::new();
    if let Some(name) = &r.study {
        s.push_str(&format!("study: {name}\n"));
    }
    let criterion = match r.criterion {
        Criterion::Local => "local",
        Criterion::Ew => "ew",
    };
    s.push_str(&format!(
        "criterion: {criterion}  algorithm: {}  seed: {}\n",
        r.algorithm, r.seed
    ));
    s.push_str(&format!("weights: {}\n", fmt_weights(&r.allocation)));
    match (&r.exact, &r.round_off_error) {
        (Some(n), _) => s.push_str(&format!("exact (n = {}): {}\n", r.budget, join(n))),
        (None, Some(e)) => s.push_str(&format!("exact: unavailable ({e})\n")),
        (None, None) => {}
    }
    s.push_str(&format!("log|F|: {:.10}\n", r.log_det));
    if let Some(g) = r.lp_value {
        s.push_str(&format!("certificate: max LP value {g:.3e}\n"));
    }
    s.push_str(&format!(
        "outer iterations: {}  sweeps: {}  converged: {}\n",
        r.outer_iterations, r.sweeps, r.converged
    ));
    if r.skipped_prior_draws > 0 {
        s.push_str(&format!("skipped prior draws: {}\n", r.skipped_prior_draws));
    }
    s
}

fn simulate_summary(r: &SimReport) -> String {
    let width = r
        .rows
        .iter()
        .map(|row| row.name.len())
        .max()
        .unwrap_or(0)
        .max(7);
    let mut s = format!("replicates: {}  seed: {}\n", r.replicates, r.seed);
    s.push_str(&format!("{:width$}", "sampler"));
    for n in &r.index_sets {
        s.push_str(&format!("  {n:>22}"));
    }
    s.push_str("  fits  separated\n");
    for row in &r.rows {
        s.push_str(&format!("{:width$}", row.name));
        for (m, sd) in row.mean.iter().zip(&row.sd) {
            let cell = match sd {
                Some(sd) => format!("{m:.3} ({sd:.3})"),
                None => format!("{m:.3}"),
            };
            s.push_str(&format!("  {cell:>22}"));
        }
        s.push_str(&format!("  {:>4}  {:>9}\n", row.fits, row.separated));
    }
    s
}
