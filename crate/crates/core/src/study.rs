//! Study files: strata, budget, constraints, model, parameters and prior.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    read_theta_samples, FamilyLink, FisherAtoms, GlmSpec, LogitType, Marginal, MultinomialSpec,
    Odds, PriorSpec, Term, DEFAULT_PRIOR_DRAWS,
};
use crate::optimizer::{algorithm, round_off, LiftOneConfig, OptimResult};
use crate::region::{water_filling, Allocation, FeasibleRegion, LinearConstraint};
use crate::sim::{IndexSet, SamplerEntry, SimConfig};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumSpec {
    pub covariates: Vec<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    #[default]
    Le,
    Ge,
}

/// Whether constraint coefficients apply to weights `w` or counts `n w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Weights,
    Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub coefficients: Vec<f64>,
    pub bound: f64,
    #[serde(default)]
    pub sense: Sense,
    #[serde(default)]
    pub units: Units,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Glm {
        link: FamilyLink,
        terms: Vec<Term>,
    },
    Multinomial {
        link: LogitType,
        odds: Odds,
        categories: usize,
        terms: Vec<Term>,
    },
}

fn default_draws() -> usize {
    DEFAULT_PRIOR_DRAWS
}

/// Prior as written in a study file; CSV paths are relative to the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSource {
    Product {
        marginals: Vec<Marginal>,
        #[serde(default = "default_draws")]
        draws: usize,
        #[serde(default)]
        seed: u64,
    },
    Samples(Vec<Vec<f64>>),
    SamplesCsv(String),
}

fn default_replicates() -> usize {
    100
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    pub samplers: Vec<SamplerEntry>,
    pub index_sets: Vec<IndexSet>,
    #[serde(default = "yes")]
    pub full_data: bool,
    /// Parameter assumed by the D-optimal sampler; defaults to `parameters`.
    #[serde(default)]
    pub design_parameters: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub description: Option<String>,
    pub strata: Vec<StratumSpec>,
    pub budget: u64,
    /// Add `n w_i ≤ N_i` for every stratum.
    #[serde(default = "yes")]
    pub caps_from_counts: bool,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub model: ModelSpec,
    #[serde(default)]
    pub parameters: Option<Vec<f64>>,
    #[serde(default)]
    pub prior: Option<PriorSource>,
    #[serde(default)]
    pub optimizer: LiftOneConfig,
    #[serde(default)]
    pub simulation: Option<SimulationSpec>,
}

/// A fitted model family with a common atom interface.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Glm(GlmSpec),
    Multinomial(MultinomialSpec),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Glm(m) => m.dim(),
            Model::Multinomial(m) => m.dim(),
        }
    }

    pub fn fisher_atoms(&self, theta: &[f64]) -> Result<FisherAtoms> {
        match self {
            Model::Glm(m) => m.fisher_atoms(theta),
            Model::Multinomial(m) => m.fisher_atoms(theta),
        }
    }

    /// EW atoms and the number of prior draws skipped as infeasible.
    pub fn ew_fisher_atoms(&self, prior: &PriorSpec) -> Result<(FisherAtoms, usize)> {
        match self {
            Model::Glm(m) => Ok((m.ew_fisher_atoms(prior)?, 0)),
            Model::Multinomial(m) => m.ew_fisher_atoms(&prior.draws(m.dim())?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Local,
    Ew,
}

/// A validated study with resolved prior.
#[derive(Debug, Clone, PartialEq)]
pub struct Study {
    pub file: StudyFile,
    pub prior: Option<PriorSpec>,
}

impl StudyFile {
    /// Parses JSON; errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Invalid(format!("{path}: {}", e.into_inner()))
        })
    }

    pub fn counts(&self) -> Vec<u64> {
        self.strata.iter().map(|s| s.count).collect()
    }

    pub fn covariates(&self) -> Vec<Vec<f64>> {
        self.strata.iter().map(|s| s.covariates.clone()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.strata.is_empty() {
            return Err(Error::Invalid(
                "strata: at least one stratum is required".into(),
            ));
        }
        if let Some(i) = self.strata.iter().position(|s| s.count == 0) {
            return Err(Error::Invalid(format!(
                "strata[{i}].count: must be positive"
            )));
        }
        let total: u64 = self.counts().iter().sum();
        if self.budget == 0 || self.budget > total {
            return Err(Error::Invalid(format!(
                "budget: must lie in 1..={total}, got {}",
                self.budget
            )));
        }
        let m = self.strata.len();
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != m {
                return Err(Error::Invalid(format!(
                    "constraints[{k}].coefficients: expected {m} entries, got {}",
                    c.coefficients.len()
                )));
            }
        }
        let p = self.model()?.dim();
        if let Some(theta) = &self.parameters {
            if theta.len() != p {
                return Err(Error::Invalid(format!(
                    "parameters: expected {p} entries, got {}",
                    theta.len()
                )));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<Model> {
        let strata = self.covariates();
        match &self.model {
            ModelSpec::Glm { link, terms } => Ok(Model::Glm(
                GlmSpec::new(*link, terms.clone(), strata)
                    .map_err(|e| Error::Invalid(format!("model: {e}")))?,
            )),
            ModelSpec::Multinomial {
                link,
                odds,
                categories,
                terms,
            } => {
                let spec = MultinomialSpec {
                    link: *link,
                    odds: *odds,
                    categories: *categories,
                    terms: terms.clone(),
                    strata,
                };
                spec.validate()
                    .map_err(|e| Error::Invalid(format!("model: {e}")))?;
                Ok(Model::Multinomial(spec))
            }
        }
    }

    pub fn region(&self) -> Result<FeasibleRegion> {
        let n = self.budget as f64;
        let caps = self.caps_from_counts.then(|| {
            self.strata
                .iter()
                .map(|s| (s.count as f64 / n).min(1.0))
                .collect()
        });
        let linear = self
            .constraints
            .iter()
            .map(|c| {
                let sign = match c.sense {
                    Sense::Le => 1.0,
                    Sense::Ge => -1.0,
                };
                let scale = match c.units {
                    Units::Weights => 1.0,
                    Units::Counts => 1.0 / n,
                };
                LinearConstraint::new(
                    c.coefficients.iter().map(|g| sign * g).collect(),
                    sign * c.bound * scale,
                )
            })
            .collect();
        FeasibleRegion::new(self.strata.len(), caps, linear)
    }
}

impl Study {
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let file = StudyFile::from_json(text)?;
        file.validate()?;
        let p = file.model()?.dim();
        let prior = match &file.prior {
            None => None,
            Some(PriorSource::Product {
                marginals,
                draws,
                seed,
            }) => Some(PriorSpec::Product {
                marginals: marginals.clone(),
                draws: *draws,
                seed: *seed,
            }),
            Some(PriorSource::Samples(s)) => Some(PriorSpec::Samples(s.clone())),
            Some(PriorSource::SamplesCsv(path)) => {
                let full = base.map_or_else(|| Path::new(path).to_path_buf(), |b| b.join(path));
                let f = std::fs::File::open(&full).map_err(|e| {
                    Error::Invalid(format!("prior.samples_csv: {}: {e}", full.display()))
                })?;
                Some(PriorSpec::Samples(read_theta_samples(f)?))
            }
        };
        if let Some(PriorSpec::Product { marginals, .. }) = &prior {
            if marginals.len() != p {
                return Err(Error::Invalid(format!(
                    "prior.product.marginals: expected {p} entries, got {}",
                    marginals.len()
                )));
            }
        }
        Ok(Self { file, prior })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    pub fn model(&self) -> Result<Model> {
        self.file.model()
    }

    pub fn region(&self) -> Result<FeasibleRegion> {
        self.file.region()
    }

    pub fn parameters(&self) -> Result<&[f64]> {
        self.file
            .parameters
            .as_deref()
            .ok_or_else(|| Error::Invalid("parameters: required for the local criterion".into()))
    }

    /// Atoms under `criterion` and the number of prior draws skipped.
    pub fn atoms(&self, criterion: Criterion) -> Result<(FisherAtoms, usize)> {
        let model = self.model()?;
        match criterion {
            Criterion::Local => Ok((model.fisher_atoms(self.parameters()?)?, 0)),
            Criterion::Ew => {
                let prior = self
                    .prior
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("prior: required for the ew criterion".into()))?;
                model.ew_fisher_atoms(prior)
            }
        }
    }

    /// Optimizes, rounds off and packages the result.
    pub fn design(
        &self,
        criterion: Criterion,
        algorithm_name: &str,
        seed: Option<u64>,
    ) -> Result<DesignReport> {
        let (atoms, skipped) = self.atoms(criterion)?;
        let region = self.region()?;
        let mut cfg = self.file.optimizer.clone();
        if let Some(s) = seed {
            cfg.seed = s;
        }
        let result: OptimResult = algorithm(algorithm_name)?.optimize(&atoms, &region, &cfg)?;
        let (exact, round_off_error) =
            match round_off(&atoms, &region, &result.allocation, self.file.budget) {
                Ok(n) => (Some(n), None),
                Err(e) => (None, Some(e.to_string())),
            };
        Ok(DesignReport {
            schema_version: REPORT_SCHEMA_VERSION,
            study: self.file.name.clone(),
            criterion,
            algorithm: algorithm_name.to_string(),
            seed: cfg.seed,
            budget: self.file.budget,
            allocation: result.allocation.into_vec(),
            exact,
            round_off_error,
            objective: result.objective,
            log_det: result.log_objective,
            derivatives: result.derivatives,
            lp_value: result.lp_value,
            outer_iterations: result.outer_iterations,
            sweeps: result.sweeps,
            converged: result.converged,
            skipped_prior_draws: skipped,
        })
    }

    /// Constrained uniform weights from the stratum caps, or uniform weights
    /// when caps are not derived from counts.
    pub fn uniform_weights(&self) -> Result<Allocation> {
        match self.region()?.caps() {
            Some(caps) => water_filling(caps),
            None => Ok(Allocation::uniform(self.file.strata.len())),
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let sim = self
            .file
            .simulation
            .as_ref()
            .ok_or_else(|| Error::Invalid("simulation: section missing".into()))?;
        let Model::Glm(model) = self.model()? else {
            return Err(Error::Invalid("simulation: requires a GLM".into()));
        };
        Ok(SimConfig {
            replicates: sim.replicates,
            counts: self.file.counts(),
            budget: self.file.budget,
            theta: self.parameters()?.to_vec(),
            model,
            design_theta: sim.design_parameters.clone(),
            samplers: sim.samplers.clone(),
            index_sets: sim.index_sets.clone(),
            seed: sim.seed,
            full_data: sim.full_data,
            optimizer: self.file.optimizer.clone(),
        })
    }
}

/// Machine-readable output of a design run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub study: Option<String>,
    pub criterion: Criterion,
    pub algorithm: String,
    pub seed: u64,
    pub budget: u64,
    pub allocation: Vec<f64>,
    /// `None` when the region is outside round-off's scope.
    pub exact: Option<Vec<u64>>,
    pub round_off_error: Option<String>,
    pub objective: f64,
    pub log_det: f64,
    pub derivatives: Vec<f64>,
    pub lp_value: Option<f64>,
    pub outer_iterations: usize,
    pub sweeps: usize,
    pub converged: bool,
    pub skipped_prior_draws: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "name": "tiny",
        "strata": [
            {"covariates": [0], "count": 30},
            {"covariates": [1], "count": 10},
            {"covariates": [2], "count": 40}
        ],
        "budget": 40,
        "constraints": [{"coefficients": [1, 1, 0], "bound": 25, "units": "counts"}],
        "model": {"type": "glm", "link": {"family": "logit"},
                  "terms": [{"type": "intercept"}, {"type": "continuous", "covariate": 0}]},
        "parameters": [0.5, -1.0]
    }"#;

    #[test]
    fn parses_and_builds_region() {
        let study = Study::from_json(EXAMPLE, None).unwrap();
        let region = study.region().unwrap();
        assert_eq!(region.caps().unwrap(), &[0.75, 0.25, 1.0][..]);
        assert_eq!(region.linear_constraints()[0].bound, 25.0 / 40.0);
        let report = study
            .design(Criterion::Local, "constrained-lift-one", None)
            .unwrap();
        assert!(report.converged);
        let exact = report.exact.unwrap();
        assert_eq!(exact.iter().sum::<u64>(), 40);
        assert!(exact[0] + exact[1] <= 25);
    }

    #[test]
    fn ge_constraints_flip_sign() {
        let text = EXAMPLE.replace(
            r#""bound": 25, "units": "counts""#,
            r#""bound": 0.5, "sense": "ge""#,
        );
        let study = Study::from_json(&text, None).unwrap();
        let region = study.region().unwrap();
        let c = &region.linear_constraints()[0];
        assert_eq!(c.coefficients, vec![-1.0, -1.0, 0.0]);
        assert_eq!(c.bound, -0.5);
    }

    #[test]
    fn errors_name_the_field_path() {
        let text = EXAMPLE.replace(r#""count": 10"#, r#""count": "ten""#);
        let err = StudyFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("strata[1].count"), "{err}");
        let text = EXAMPLE.replace(r#""family": "logit""#, r#""family": "logot""#);
        let err = StudyFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("model"), "{err}");
        let text = EXAMPLE.replace(r#""budget": 40"#, r#""budget": 400"#);
        let err = Study::from_json(&text, None).unwrap_err().to_string();
        assert!(err.contains("budget"), "{err}");
        let text = EXAMPLE.replace(r#""count": 10"#, r#""count": 0"#);
        let err = Study::from_json(&text, None).unwrap_err().to_string();
        assert!(err.contains("strata[1].count"), "{err}");
        let text = EXAMPLE.replace(r#""parameters": [0.5, -1.0]"#, r#""parameters": [0.5]"#);
        assert!(Study::from_json(&text, None)
            .unwrap_err()
            .to_string()
            .contains("parameters"));
        let text = EXAMPLE.replace(r#""budget""#, r#""budgte""#);
        assert!(StudyFile::from_json(&text).is_err());
    }

    #[test]
    fn ew_requires_a_prior() {
        let study = Study::from_json(EXAMPLE, None).unwrap();
        assert!(study.atoms(Criterion::Ew).is_err());
        let text = EXAMPLE.replace(
            r#""parameters""#,
            r#""prior": {"product": {"marginals": [{"dist": "point", "value": 0.5}, {"dist": "point", "value": -1.0}]}}, "parameters""#,
        );
        let study = Study::from_json(&text, None).unwrap();
        let (ew, _) = study.atoms(Criterion::Ew).unwrap();
        let (local, _) = study.atoms(Criterion::Local).unwrap();
        assert_eq!(ew, local);
    }

    #[test]
    fn prior_samples_from_csv() {
        let dir = std::env::temp_dir().join(format!("stratdesign-study-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("theta.csv"), "0.5,-1.0\n0.4,-0.9\n").unwrap();
        let text = EXAMPLE.replace(
            r#""parameters""#,
            r#""prior": {"samples_csv": "theta.csv"}, "parameters""#,
        );
        let study = Study::from_json(&text, Some(&dir)).unwrap();
        assert_eq!(
            study.prior,
            Some(PriorSpec::Samples(vec![vec![0.5, -1.0], vec![0.4, -0.9]]))
        );
        std::fs::remove_dir_all(dir).unwrap();
    }
}
