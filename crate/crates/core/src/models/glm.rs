use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::prior::PriorSpec;
use super::{predictors, FisherAtoms, Term};
use crate::error::{check_len, Error, Result};
use crate::linalg::SquareMatrix;

/// Family and link pair of a generalized linear model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyLink {
    /// Normal response, identity link, known variance `σ²`.
    Normal {
        variance: f64,
    },
    Logit,
    Probit,
    Cloglog,
    Loglog,
    Cauchit,
    Poisson,
    /// Gamma response, reciprocal link, known shape `k`.
    Gamma {
        shape: f64,
    },
    /// Inverse Gaussian response, inverse-squared link, known `λ`.
    InverseGaussian {
        lambda: f64,
    },
}

impl FamilyLink {
    pub fn validate(&self) -> Result<()> {
        let (name, value) = match *self {
            FamilyLink::Normal { variance } => ("variance", variance),
            FamilyLink::Gamma { shape } => ("shape", shape),
            FamilyLink::InverseGaussian { lambda } => ("lambda", lambda),
            _ => return Ok(()),
        };
        if value.is_finite() && value > 0.0 {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "{name} must be positive, got {value}"
            )))
        }
    }

    /// Inverse link `μ = g⁻¹(η)`.
    pub fn mean(&self, eta: f64) -> Result<f64> {
        Ok(match *self {
            FamilyLink::Normal { .. } => eta,
            FamilyLink::Logit => expit(eta),
            FamilyLink::Probit => 0.5 * erfc(-eta / std::f64::consts::SQRT_2),
            FamilyLink::Cloglog => -(-eta.exp()).exp_m1(),
            FamilyLink::Loglog => (-(-eta).exp()).exp(),
            FamilyLink::Cauchit => 0.5 + eta.atan() / PI,
            FamilyLink::Poisson => eta.exp(),
            FamilyLink::Gamma { .. } => positive_eta(eta, "reciprocal")?.recip(),
            FamilyLink::InverseGaussian { .. } => {
                positive_eta(eta, "inverse squared")?.sqrt().recip()
            }
        })
    }
}

pub(crate) fn expit(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn positive_eta(eta: f64, link: &str) -> Result<f64> {
    if eta > 0.0 {
        Ok(eta)
    } else {
        Err(Error::Domain(format!(
            "{link} link requires η > 0, got {eta}"
        )))
    }
}

fn cloglog_nu(eta: f64) -> f64 {
    // e^{2η} / (exp(e^η) − 1) rewritten to avoid overflow.
    let t = eta.exp();
    if t == 0.0 {
        return 0.0;
    }
    (2.0 * eta - t).exp() / -(-t).exp_m1()
}

fn log_upper_normal_tail(x: f64) -> f64 {
    // log(1 − Φ(x))
    let tail = 0.5 * erfc(x / std::f64::consts::SQRT_2);
    if tail > 0.0 {
        tail.ln()
    } else {
        -0.5 * x * x - x.ln() - 0.5 * (2.0 * PI).ln() + (1.0 - 1.0 / (x * x)).ln()
    }
}

/// `ν(η)` such that the unit Fisher information is `ν(η) h hᵀ`.
pub fn nu(link: FamilyLink, eta: f64) -> Result<f64> {
    if !eta.is_finite() {
        return Err(Error::Domain(format!("η must be finite, got {eta}")));
    }
    link.validate()?;
    Ok(match link {
        FamilyLink::Normal { variance } => variance.recip(),
        FamilyLink::Logit => {
            let e = (-eta.abs()).exp();
            e / ((1.0 + e) * (1.0 + e))
        }
        FamilyLink::Probit => {
            let x = eta.abs();
            let log_phi = -0.5 * x * x - 0.5 * (2.0 * PI).ln();
            let log_lower = (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln();
            (2.0 * log_phi - log_lower - log_upper_normal_tail(x)).exp()
        }
        FamilyLink::Cloglog => cloglog_nu(eta),
        FamilyLink::Loglog => cloglog_nu(-eta),
        FamilyLink::Cauchit => {
            let x = eta.abs();
            let a = x.atan();
            let gap = if x > 1.0 {
                (1.0 / x).atan()
            } else {
                FRAC_PI_2 - a
            };
            let q = 1.0 + x * x;
            1.0 / (q * q * gap * (FRAC_PI_2 + a))
        }
        FamilyLink::Poisson => eta.exp(),
        FamilyLink::Gamma { shape } => shape / positive_eta(eta, "reciprocal")?.powi(2),
        FamilyLink::InverseGaussian { lambda } => {
            lambda * positive_eta(eta, "inverse squared")?.powf(-1.5) / 4.0
        }
    })
}

/// A GLM over a fixed list of strata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmSpec {
    pub link: FamilyLink,
    pub terms: Vec<Term>,
    pub strata: Vec<Vec<f64>>,
}

impl GlmSpec {
    pub fn new(link: FamilyLink, terms: Vec<Term>, strata: Vec<Vec<f64>>) -> Result<Self> {
        let spec = Self {
            link,
            terms,
            strata,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.terms.is_empty() {
            return Err(Error::Invalid("model needs at least one term".into()));
        }
        if self.strata.is_empty() {
            return Err(Error::Invalid("model needs at least one stratum".into()));
        }
        self.design_rows().map(|_| ())
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    /// Rows `h(x_i)ᵀ` of the stratum-level design matrix.
    pub fn design_rows(&self) -> Result<Vec<Vec<f64>>> {
        self.strata
            .iter()
            .map(|x| predictors(&self.terms, x))
            .collect()
    }

    /// `η_i = h(x_i)ᵀθ`.
    pub fn linear_predictors(&self, theta: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), theta.len(), "θ length")?;
        Ok(self
            .design_rows()?
            .iter()
            .map(|h| h.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn nus(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.linear_predictors(theta)?
            .into_iter()
            .map(|eta| nu(self.link, eta))
            .collect()
    }

    fn atoms_from_nus(&self, nus: &[f64]) -> Result<FisherAtoms> {
        let atoms = self
            .design_rows()?
            .iter()
            .zip(nus)
            .map(|(h, &v)| SquareMatrix::outer(h, v))
            .collect();
        FisherAtoms::new_rank_one(atoms)
    }

    /// Locally optimal atoms `F_i = ν(h(x_i)ᵀθ) h(x_i)h(x_i)ᵀ`.
    pub fn fisher_atoms(&self, theta: &[f64]) -> Result<FisherAtoms> {
        let nus = self.nus(theta)?;
        self.atoms_from_nus(&nus)
    }

    /// `E[ν_i]` under a prior on θ.
    pub fn expected_nus(&self, prior: &PriorSpec) -> Result<Vec<f64>> {
        let rows = self.design_rows()?;
        let mut sums = vec![0.0; rows.len()];
        let mut count = 0usize;
        prior.for_each_draw(self.dim(), |theta| {
            for (s, h) in sums.iter_mut().zip(&rows) {
                let eta: f64 = h.iter().zip(theta).map(|(a, b)| a * b).sum();
                *s += nu(self.link, eta)?;
            }
            count += 1;
            Ok(())
        })?;
        if count == 1 {
            return Ok(sums);
        }
        Ok(sums.into_iter().map(|s| s / count as f64).collect())
    }

    /// EW atoms `E[ν_i] h(x_i)h(x_i)ᵀ`.
    pub fn ew_fisher_atoms(&self, prior: &PriorSpec) -> Result<FisherAtoms> {
        let nus = self.expected_nus(prior)?;
        self.atoms_from_nus(&nus)
    }
}
