//! Constrained lift-one, its unconstrained ancestor, round-off and efficiency.

mod lift_one;
mod line_search;
mod round_off;
mod univariate;

pub use lift_one::{
    constrained_lift_one, directional_derivatives, original_lift_one, original_lift_one_within,
};
pub use line_search::{
    fit_h_polynomial, h_value, maximize_h, polynomial_derivative, polynomial_value,
};
pub use round_off::{relative_efficiency, round_off};
pub use univariate::{
    lift_profile_coeffs, lift_profile_derivative, lift_profile_value, maximize_lift_general,
    maximize_restricted_univariate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::determinant;
use crate::models::FisherAtoms;
use crate::region::{Allocation, FeasibleRegion};

/// `f(w) = |Σ w_i F_i|`; the weights need not sum to one.
pub fn objective(atoms: &FisherAtoms, w: &Allocation) -> f64 {
    objective_raw(atoms, w.as_slice())
}

pub fn objective_raw(atoms: &FisherAtoms, w: &[f64]) -> f64 {
    let f = determinant(&atoms.information(w));
    if f.is_finite() {
        f
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftOneConfig {
    pub seed: u64,
    /// Sweeps stop once one raises `ln f` by at most this much.
    pub sweep_tol: f64,
    pub certificate_tol: f64,
    pub max_outer: usize,
    pub max_sweeps: usize,
    pub analytic_glm: bool,
    /// Polish each restart point with pairwise exchange moves.
    pub exchange_steps: bool,
    /// Starting allocation; defaults to the region's interior start.
    pub start: Option<Allocation>,
}

impl Default for LiftOneConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sweep_tol: 1e-10,
            certificate_tol: 1e-8,
            max_outer: 200,
            max_sweeps: 10_000,
            analytic_glm: true,
            exchange_steps: true,
            start: None,
        }
    }
}

impl LiftOneConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sweep_tol > 0.0 && self.certificate_tol > 0.0) {
            return Err(Error::Invalid("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_sweeps == 0 {
            return Err(Error::Invalid("iteration limits must be at least 1".into()));
        }
        Ok(())
    }
}

/// Optimizer output with its optimality certificate.
///
/// `derivatives[i]` is `(1 − w_i) f_i'(w_i) / f(w)` and `lp_value` is
/// `max_S g / f(w)`, both scale-free; `lp_value` bounds the log-gap
/// `max_S ln f − ln f(w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    pub allocation: Allocation,
    pub objective: f64,
    pub log_objective: f64,
    pub derivatives: Vec<f64>,
    pub lp_value: Option<f64>,
    pub outer_iterations: usize,
    pub sweeps: usize,
    pub converged: bool,
    /// `ln f` after the start and after every accepted move.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// A design optimizer selectable by name.
pub trait DesignAlgorithm: Send + Sync {
    fn name(&self) -> &'static str;
    fn optimize(
        &self,
        atoms: &FisherAtoms,
        region: &FeasibleRegion,
        cfg: &LiftOneConfig,
    ) -> Result<OptimResult>;
}

struct ConstrainedLiftOne;

impl DesignAlgorithm for ConstrainedLiftOne {
    fn name(&self) -> &'static str {
        "constrained-lift-one"
    }

    fn optimize(
        &self,
        atoms: &FisherAtoms,
        region: &FeasibleRegion,
        cfg: &LiftOneConfig,
    ) -> Result<OptimResult> {
        constrained_lift_one(atoms, region, cfg)
    }
}

/// Ignores every constraint except the simplex.
struct OriginalLiftOne;

impl DesignAlgorithm for OriginalLiftOne {
    fn name(&self) -> &'static str {
        "original-lift-one"
    }

    fn optimize(
        &self,
        atoms: &FisherAtoms,
        _region: &FeasibleRegion,
        cfg: &LiftOneConfig,
    ) -> Result<OptimResult> {
        original_lift_one(atoms, cfg)
    }
}

pub fn algorithms() -> Vec<Box<dyn DesignAlgorithm>> {
    vec![Box::new(ConstrainedLiftOne), Box::new(OriginalLiftOne)]
}

pub fn algorithm(name: &str) -> Result<Box<dyn DesignAlgorithm>> {
    algorithms()
        .into_iter()
        .find(|a| a.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "algorithm",
            name: name.to_string(),
        })
}
