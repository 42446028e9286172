//! Monte Carlo comparison of samplers by refitted-coefficient RMSE.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{log_det_psd, solve_linear, SquareMatrix};
use crate::models::{FamilyLink, FisherAtoms, GlmSpec, PriorSpec};
use crate::optimizer::LiftOneConfig;
use crate::region::FeasibleRegion;
use crate::samplers::{sampler, Plan, Population, SamplingContext};

const MAX_ITERATIONS: usize = 100;
const SCORE_TOL: f64 = 1e-8;
const SEPARATION_ETA: f64 = 15.0;
const MAX_HALVINGS: usize = 40;
/// Relative log-likelihood loss tolerated as rounding near the optimum.
const LL_SLACK: f64 = 1e-12;

fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

fn require_logit(model: &GlmSpec) -> Result<()> {
    if model.link != FamilyLink::Logit {
        return Err(Error::Invalid(
            "simulation supports the logistic model only".into(),
        ));
    }
    Ok(())
}

/// Bernoulli(expit(η_i)) responses, `counts[i]` of them for stratum `i`.
pub fn generate_responses<R: Rng + ?Sized>(
    model: &GlmSpec,
    theta: &[f64],
    counts: &[u64],
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    require_logit(model)?;
    check_len(model.strata.len(), counts.len(), "stratum counts")?;
    let eta = model.linear_predictors(theta)?;
    Ok(eta
        .iter()
        .zip(counts)
        .map(|(&e, &n)| {
            let mu = expit(e);
            (0..n).map(|_| rng.random_bool(mu)).collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub estimate: Vec<f64>,
    pub converged: bool,
    /// Some fitted `|η_i|` exceeds 15.
    pub separated: bool,
    pub iterations: usize,
    pub score_norm: f64,
}

/// Logistic maximum likelihood on grouped data by Newton-Raphson with step
/// halving; strata with zero trials are ignored.
pub fn fit_logistic(rows: &[Vec<f64>], trials: &[u64], successes: &[u64]) -> Result<FitResult> {
    check_len(rows.len(), trials.len(), "trials")?;
    check_len(rows.len(), successes.len(), "successes")?;
    let p = rows.first().map_or(0, Vec::len);
    if p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::Invalid(
            "design rows must share a positive length".into(),
        ));
    }
    if trials.iter().zip(successes).any(|(n, y)| y > n) {
        return Err(Error::Invalid("successes exceed trials".into()));
    }
    let used: Vec<usize> = (0..rows.len()).filter(|&i| trials[i] > 0).collect();
    let gram = used.iter().fold(SquareMatrix::zeros(p), |mut g, &i| {
        g.add_scaled(&SquareMatrix::outer(&rows[i], 1.0), 1.0);
        g
    });
    if used.len() < p || log_det_psd(&gram)? == f64::NEG_INFINITY {
        return Err(Error::RankDeficient);
    }
    let eta_of = |beta: &[f64], i: usize| rows[i].iter().zip(beta).map(|(x, b)| x * b).sum::<f64>();
    let loglik = |beta: &[f64]| {
        used.iter()
            .map(|&i| {
                let e = eta_of(beta, i);
                successes[i] as f64 * e - trials[i] as f64 * softplus(e)
            })
            .sum::<f64>()
    };
    let mut beta = vec![0.0; p];
    let mut ll = loglik(&beta);
    let mut iterations = 0;
    let mut converged = false;
    let mut score_norm;
    loop {
        let mut score = vec![0.0; p];
        let mut info = SquareMatrix::zeros(p);
        for &i in &used {
            let mu = expit(eta_of(&beta, i));
            let n = trials[i] as f64;
            let resid = successes[i] as f64 - n * mu;
            for (s, x) in score.iter_mut().zip(&rows[i]) {
                *s += resid * x;
            }
            info.add_scaled(&SquareMatrix::outer(&rows[i], n * mu * (1.0 - mu)), 1.0);
        }
        score_norm = score.iter().map(|s| s * s).sum::<f64>().sqrt();
        if score_norm <= SCORE_TOL {
            converged = true;
            break;
        }
        if iterations >= MAX_ITERATIONS {
            break;
        }
        let Ok(step) = solve_linear(&info, &score) else {
            break;
        };
        let mut scale = 1.0;
        let mut moved = false;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let tl = loglik(&trial);
            if tl >= ll - LL_SLACK * ll.abs().max(1.0) {
                moved = trial != beta;
                beta = trial;
                ll = tl;
                break;
            }
            scale *= 0.5;
        }
        iterations += 1;
        if !moved {
            break;
        }
    }
    let separated = used
        .iter()
        .any(|&i| eta_of(&beta, i).abs() > SEPARATION_ETA);
    Ok(FitResult {
        estimate: beta,
        converged,
        separated,
        iterations,
        score_norm,
    })
}

/// `[Σ_{i∈I} (θ̂_i − θ_i)² / |I|]^{1/2}`.
pub fn rmse(theta_hat: &[f64], theta: &[f64], indices: &[usize]) -> Result<f64> {
    check_len(theta.len(), theta_hat.len(), "estimate")?;
    if indices.is_empty() {
        return Err(Error::Invalid("RMSE index set is empty".into()));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= theta.len()) {
        return Err(Error::Invalid(format!("RMSE index {bad} out of range")));
    }
    let ss: f64 = indices
        .iter()
        .map(|&i| (theta_hat[i] - theta[i]).powi(2))
        .sum();
    Ok((ss / indices.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerEntry {
    /// Row label; defaults to the sampler kind.
    #[serde(default)]
    pub label: Option<String>,
    pub kind: String,
    /// Prior for `ew_d_optimal`.
    #[serde(default)]
    pub prior: Option<PriorSpec>,
}

impl SamplerEntry {
    pub fn new(kind: &str) -> Self {
        Self {
            label: None,
            kind: kind.to_string(),
            prior: None,
        }
    }

    fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSet {
    pub name: String,
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub replicates: usize,
    pub counts: Vec<u64>,
    pub budget: u64,
    pub theta: Vec<f64>,
    pub model: GlmSpec,
    /// Parameter assumed by `d_optimal`; defaults to `theta`.
    pub design_theta: Option<Vec<f64>>,
    pub samplers: Vec<SamplerEntry>,
    pub index_sets: Vec<IndexSet>,
    pub seed: u64,
    pub full_data: bool,
    pub optimizer: LiftOneConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        require_logit(&self.model)?;
        self.model.validate()?;
        if self.replicates == 0 {
            return Err(Error::Invalid("replicates must be at least 1".into()));
        }
        check_len(self.model.strata.len(), self.counts.len(), "stratum counts")?;
        check_len(self.model.dim(), self.theta.len(), "theta")?;
        if let Some(t) = &self.design_theta {
            check_len(self.model.dim(), t.len(), "design theta")?;
        }
        let total: u64 = self.counts.iter().sum();
        if self.budget == 0 || self.budget > total {
            return Err(Error::Invalid(format!(
                "budget {} must lie in 1..={total}",
                self.budget
            )));
        }
        if self.index_sets.is_empty() {
            return Err(Error::Invalid(
                "at least one RMSE index set is required".into(),
            ));
        }
        for set in &self.index_sets {
            rmse(&self.theta, &self.theta, &set.indices)
                .map_err(|e| Error::Invalid(format!("index set '{}': {e}", set.name)))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplerRow {
    /// Labels joined by `/` when several samplers share one allocation.
    pub name: String,
    pub samplers: Vec<String>,
    pub allocation: Option<Vec<u64>>,
    /// Per index set, over the fits that were not rank deficient.
    pub mean: Vec<f64>,
    /// Sample standard deviation; `None` with fewer than two fits.
    pub sd: Vec<Option<f64>>,
    pub fits: usize,
    pub separated: usize,
    pub not_converged: usize,
    /// Replicates whose sample gave a rank-deficient design.
    pub excluded: usize,
}

impl SamplerRow {
    pub fn mean_for(&self, report: &SimReport, index_set: &str) -> Option<f64> {
        let k = report.index_sets.iter().position(|n| n == index_set)?;
        Some(self.mean[k])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub replicates: usize,
    pub seed: u64,
    pub index_sets: Vec<String>,
    pub rows: Vec<SamplerRow>,
}

impl SimReport {
    pub fn row(&self, name: &str) -> Option<&SamplerRow> {
        self.rows
            .iter()
            .find(|r| r.name == name || r.samplers.iter().any(|s| s == name))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "sampler".to_string(),
            "fits".into(),
            "separated".into(),
            "not_converged".into(),
            "excluded".into(),
        ];
        for n in &self.index_sets {
            header.push(format!("mean_{n}"));
            header.push(format!("sd_{n}"));
        }
        let io = |e: csv::Error| Error::Invalid(format!("writing CSV: {e}"));
        w.write_record(&header).map_err(io)?;
        for r in &self.rows {
            let mut rec = vec![
                r.name.clone(),
                r.fits.to_string(),
                r.separated.to_string(),
                r.not_converged.to_string(),
                r.excluded.to_string(),
            ];
            for (m, s) in r.mean.iter().zip(&r.sd) {
                rec.push(format!("{m:.6}"));
                rec.push(s.map_or(String::new(), |s| format!("{s:.6}")));
            }
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Invalid(format!("writing CSV: {e}")))
    }
}

struct Row {
    labels: Vec<String>,
    plan: Plan,
}

fn plans(cfg: &SimConfig) -> Result<Vec<Row>> {
    let region = FeasibleRegion::from_counts(&cfg.counts, cfg.budget)?;
    let design_theta = cfg.design_theta.as_deref().unwrap_or(&cfg.theta);
    let local: FisherAtoms = cfg.model.fisher_atoms(design_theta)?;
    let mut rows: Vec<Row> = Vec::new();
    if cfg.full_data {
        rows.push(Row {
            labels: vec!["full_data".into()],
            plan: Plan::Stratified(cfg.counts.clone()),
        });
    }
    for entry in &cfg.samplers {
        let ew = match (&entry.prior, entry.kind.as_str()) {
            (Some(prior), _) => Some(cfg.model.ew_fisher_atoms(prior)?),
            (None, "ew_d_optimal") => {
                return Err(Error::Invalid(format!(
                    "sampler '{}' needs a prior",
                    entry.label()
                )));
            }
            _ => None,
        };
        let ctx = SamplingContext {
            counts: &cfg.counts,
            budget: cfg.budget,
            region: &region,
            local_atoms: Some(&local),
            ew_atoms: ew.as_ref(),
            optimizer: &cfg.optimizer,
        };
        let plan = sampler(&entry.kind)?.plan(&ctx)?;
        let label = entry.label().to_string();
        let shared = rows
            .iter_mut()
            .skip(usize::from(cfg.full_data))
            .find(|r| matches!(plan, Plan::Stratified(_)) && r.plan == plan);
        match shared {
            Some(r) => r.labels.push(label),
            None => rows.push(Row {
                labels: vec![label],
                plan,
            }),
        }
    }
    Ok(rows)
}

enum Outcome {
    Fit {
        rmse: Vec<f64>,
        separated: bool,
        converged: bool,
    },
    Excluded,
}

fn replicate(
    cfg: &SimConfig,
    rows: &[Row],
    pop: &Population,
    design: &[Vec<f64>],
    r: usize,
) -> Result<Vec<Outcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r as u64);
    let responses: Vec<bool> = generate_responses(&cfg.model, &cfg.theta, &cfg.counts, &mut rng)?
        .into_iter()
        .flatten()
        .collect();
    let membership = pop.membership();
    rows.iter()
        .map(|row| {
            let chosen = row.plan.draw(pop, &mut rng)?;
            let m = cfg.counts.len();
            let (mut trials, mut successes) = (vec![0u64; m], vec![0u64; m]);
            for &u in &chosen {
                let s = membership[u].expect("sampled a population member");
                trials[s] += 1;
                successes[s] += u64::from(responses[u]);
            }
            match fit_logistic(design, &trials, &successes) {
                Ok(fit) => Ok(Outcome::Fit {
                    rmse: cfg
                        .index_sets
                        .iter()
                        .map(|set| rmse(&fit.estimate, &cfg.theta, &set.indices))
                        .collect::<Result<_>>()?,
                    separated: fit.separated,
                    converged: fit.converged,
                }),
                Err(Error::RankDeficient) => Ok(Outcome::Excluded),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Runs every replicate and summarizes RMSE per sampler. Replicate `r` draws
/// from stream `r` of a ChaCha8 generator seeded with `cfg.seed`, so results
/// do not depend on the thread count.
pub fn run_study(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let rows = plans(cfg)?;
    let pop = Population::from_counts(&cfg.model.strata, &cfg.counts)?;
    let design = cfg.model.design_rows()?;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate(cfg, &rows, &pop, &design, r))
        .collect::<Result<_>>()?;
    let k = cfg.index_sets.len();
    let summary = rows
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let mut values: Vec<Vec<f64>> = vec![Vec::new(); k];
            let (mut separated, mut not_converged, mut excluded) = (0, 0, 0);
            for rep in &outcomes {
                match &rep[j] {
                    Outcome::Fit {
                        rmse,
                        separated: s,
                        converged,
                    } => {
                        for (v, x) in values.iter_mut().zip(rmse) {
                            v.push(*x);
                        }
                        separated += usize::from(*s);
                        not_converged += usize::from(!converged);
                    }
                    Outcome::Excluded => excluded += 1,
                }
            }
            let fits = values[0].len();
            let mean: Vec<f64> = values
                .iter()
                .map(|v| {
                    if fits == 0 {
                        f64::NAN
                    } else {
                        v.iter().sum::<f64>() / fits as f64
                    }
                })
                .collect();
            let sd = values
                .iter()
                .zip(&mean)
                .map(|(v, m)| {
                    (fits >= 2).then(|| {
                        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (fits - 1) as f64).sqrt()
                    })
                })
                .collect();
            SamplerRow {
                name: row.labels.join("/"),
                samplers: row.labels.clone(),
                allocation: row.plan.allocation().map(<[u64]>::to_vec),
                mean,
                sd,
                fits,
                separated,
                not_converged,
                excluded,
            }
        })
        .collect();
    Ok(SimReport {
        replicates: cfg.replicates,
        seed: cfg.seed,
        index_sets: cfg.index_sets.iter().map(|s| s.name.clone()).collect(),
        rows: summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::models::Term;

    fn intercept_rows(n: usize) -> Vec<Vec<f64>> {
        vec![vec![1.0]; n]
    }

    #[test]
    fn responses_follow_the_mean() {
        let model = GlmSpec::new(FamilyLink::Logit, vec![Term::Intercept], vec![vec![]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = generate_responses(&model, &[-50.0], &[1000], &mut rng).unwrap();
        assert!(y[0].iter().all(|&v| !v));
        let y = generate_responses(&model, &[0.0], &[100_000], &mut rng).unwrap();
        let frac = y[0].iter().filter(|&&v| v).count() as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.005);
        let a =
            generate_responses(&model, &[0.3], &[50], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b =
            generate_responses(&model, &[0.3], &[50], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn intercept_only_fits() {
        let fit = fit_logistic(&intercept_rows(1), &[100], &[50]).unwrap();
        assert!(fit.converged && fit.estimate[0].abs() < 1e-8);
        let fit = fit_logistic(&intercept_rows(1), &[100], &[75]).unwrap();
        assert!(fit.converged && (fit.estimate[0] - 3f64.ln()).abs() < 1e-6);
        assert!(!fit.separated);
    }

    #[test]
    fn all_successes_is_flagged() {
        let fit = fit_logistic(&intercept_rows(1), &[20], &[20]).unwrap();
        assert!(fit.separated);
        assert!(fit.estimate[0] > SEPARATION_ETA);
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let rows = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(
            fit_logistic(&rows, &[10, 0], &[3, 0]),
            Err(Error::RankDeficient)
        );
        assert!(fit_logistic(&rows, &[10, 10], &[3, 4]).is_ok());
    }

    #[test]
    fn consistency_at_large_samples() {
        let model = catalog::example1_model();
        let theta = catalog::EXAMPLE1_THETA;
        let counts = [100_000u64; 6];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = generate_responses(&model, &theta, &counts, &mut rng).unwrap();
        let successes: Vec<u64> = y
            .iter()
            .map(|s| s.iter().filter(|&&v| v).count() as u64)
            .collect();
        let fit = fit_logistic(&model.design_rows().unwrap(), &counts, &successes).unwrap();
        assert!(fit.converged);
        for (e, t) in fit.estimate.iter().zip(theta) {
            assert!((e - t).abs() < 0.05, "{:?}", fit.estimate);
        }
    }

    #[test]
    fn bootstrap_refit_stays_within_three_sd() {
        let model = catalog::example1_interaction_model();
        let theta = [0.0, -0.1, -0.5, -2.0, -0.5, -1.0];
        let counts = [400u64; 6];
        let design = model.design_rows().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let y = generate_responses(&model, &theta, &counts, &mut rng).unwrap();
        let s: Vec<u64> = y
            .iter()
            .map(|v| v.iter().filter(|&&b| b).count() as u64)
            .collect();
        let hat = fit_logistic(&design, &counts, &s).unwrap().estimate;
        let atoms = model.fisher_atoms(&hat).unwrap();
        let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let info = atoms.information(&w);
        let y = generate_responses(&model, &hat, &counts, &mut rng).unwrap();
        let s: Vec<u64> = y
            .iter()
            .map(|v| v.iter().filter(|&&b| b).count() as u64)
            .collect();
        let boot = fit_logistic(&design, &counts, &s).unwrap().estimate;
        for k in 0..6 {
            let mut e = vec![0.0; 6];
            e[k] = 1.0;
            let var = solve_linear(&info, &e).unwrap()[k];
            assert!(
                (boot[k] - hat[k]).abs() <= 3.0 * var.sqrt(),
                "coefficient {k}"
            );
        }
    }

    #[test]
    fn rmse_examples() {
        let theta = [0.0, 3.0, 3.0, 3.0];
        assert_eq!(rmse(&theta, &theta, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert_eq!(rmse(&[2.0, 3.0, 3.0, 3.0], &theta, &[0]).unwrap(), 2.0);
        let r = rmse(&[9.0, 6.0, 3.0, 7.0], &theta, &[1, 2, 3]).unwrap();
        assert!((r - 5.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&theta, &theta, &[]).is_err());
        assert!(rmse(&theta, &theta, &[4]).is_err());
    }

    fn example1_config(replicates: usize) -> SimConfig {
        SimConfig {
            replicates,
            counts: catalog::EXAMPLE1_COUNTS.to_vec(),
            budget: 200,
            theta: catalog::EXAMPLE1_THETA.to_vec(),
            model: catalog::example1_model(),
            design_theta: None,
            samplers: ["srswor", "proportional", "uniform", "d_optimal"]
                .into_iter()
                .map(SamplerEntry::new)
                .collect(),
            index_sets: vec![
                IndexSet {
                    name: "beta0".into(),
                    indices: vec![0],
                },
                IndexSet {
                    name: "all_except_beta0".into(),
                    indices: vec![1, 2, 3],
                },
            ],
            seed: 2024,
            full_data: true,
            optimizer: LiftOneConfig::default(),
        }
    }

    #[test]
    fn single_replicate_full_data_matches_direct_fit() {
        let cfg = SimConfig {
            samplers: vec![],
            ..example1_config(1)
        };
        let report = run_study(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(0);
        let y = generate_responses(&cfg.model, &cfg.theta, &cfg.counts, &mut rng).unwrap();
        let s: Vec<u64> = y
            .iter()
            .map(|v| v.iter().filter(|&&b| b).count() as u64)
            .collect();
        let fit = fit_logistic(&cfg.model.design_rows().unwrap(), &cfg.counts, &s).unwrap();
        let row = report.row("full_data").unwrap();
        assert_eq!(
            row.mean[1],
            rmse(&fit.estimate, &cfg.theta, &[1, 2, 3]).unwrap()
        );
        assert_eq!(row.sd[1], None);
    }

    #[test]
    fn study_is_deterministic_across_thread_counts() {
        let cfg = example1_config(8);
        let a = run_study(&cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| run_study(&cfg)).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(
            text.starts_with("sampler,fits,separated,not_converged,excluded,mean_beta0,sd_beta0")
        );
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn identical_allocations_share_a_row() {
        let mut cfg = example1_config(2);
        cfg.model = catalog::example1_interaction_model();
        cfg.theta = vec![0.0, -0.1, -0.5, -2.0, -0.5, -1.0];
        cfg.samplers = ["uniform", "d_optimal"]
            .into_iter()
            .map(SamplerEntry::new)
            .collect();
        let report = run_study(&cfg).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[1].name, "uniform/d_optimal");
        assert_eq!(
            report.rows[1].allocation.as_deref(),
            Some(&[38, 38, 10, 38, 38, 38][..])
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = example1_config(0);
        assert!(run_study(&cfg).is_err());
        cfg.replicates = 1;
        cfg.budget = 501;
        assert!(run_study(&cfg).is_err());
        cfg.budget = 200;
        cfg.samplers = vec![SamplerEntry::new("ew_d_optimal")];
        assert!(run_study(&cfg).is_err());
    }
}
