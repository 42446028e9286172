//! Per-stratum unit Fisher information for GLMs and multinomial logit models.

mod glm;
mod multinomial;
mod prior;

pub use glm::{nu, FamilyLink, GlmSpec};
pub use multinomial::{
    category_link, category_links, read_theta_samples, CategoryLink, LogitType, MultinomialSpec,
    Odds,
};
pub use prior::{Marginal, PriorSpec, DEFAULT_PRIOR_DRAWS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{weighted_sum, SquareMatrix};

/// One predictor `h_k(x)` evaluated on a stratum's covariate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Intercept,
    Continuous {
        covariate: usize,
    },
    /// Treatment-coded indicator `1{x_c = level}`.
    Indicator {
        covariate: usize,
        level: f64,
    },
    Interaction {
        left: Box<Term>,
        right: Box<Term>,
    },
}

impl Term {
    pub fn interaction(left: Term, right: Term) -> Self {
        Term::Interaction {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let covariate = |c: usize| {
            x.get(c).copied().ok_or_else(|| {
                Error::Invalid(format!(
                    "term references covariate {c} but stratum has {}",
                    x.len()
                ))
            })
        };
        Ok(match self {
            Term::Intercept => 1.0,
            Term::Continuous { covariate: c } => covariate(*c)?,
            Term::Indicator {
                covariate: c,
                level,
            } => {
                if covariate(*c)? == *level {
                    1.0
                } else {
                    0.0
                }
            }
            Term::Interaction { left, right } => left.evaluate(x)? * right.evaluate(x)?,
        })
    }

    pub fn is_intercept(&self) -> bool {
        matches!(self, Term::Intercept)
    }
}

/// `h(x) = (h_1(x), …, h_p(x))`.
pub fn predictors(terms: &[Term], x: &[f64]) -> Result<Vec<f64>> {
    terms.iter().map(|t| t.evaluate(x)).collect()
}

/// Treatment coding: one indicator per non-reference level.
pub fn factor(covariate: usize, levels: &[f64]) -> Vec<Term> {
    levels
        .iter()
        .map(|&level| Term::Indicator { covariate, level })
        .collect()
}

/// Unit Fisher information matrices `F_1, …, F_m`, one per stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherAtoms {
    atoms: Vec<SquareMatrix>,
    rank_one: bool,
}

impl FisherAtoms {
    pub fn new(atoms: Vec<SquareMatrix>) -> Result<Self> {
        Self::build(atoms, false)
    }

    /// Atoms known to be of the form `ν h hᵀ`, enabling closed-form lift steps.
    pub fn new_rank_one(atoms: Vec<SquareMatrix>) -> Result<Self> {
        Self::build(atoms, true)
    }

    fn build(atoms: Vec<SquareMatrix>, rank_one: bool) -> Result<Self> {
        let Some(first) = atoms.first() else {
            return Err(Error::Invalid(
                "at least one Fisher atom is required".into(),
            ));
        };
        let p = first.order();
        for a in &atoms {
            if a.order() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    got: a.order(),
                    context: "Fisher atom order",
                });
            }
            if a.asymmetry() > 1e-9 * a.max_abs().max(1.0) {
                return Err(Error::NotSymmetric {
                    asymmetry: a.asymmetry(),
                });
            }
        }
        Ok(Self { atoms, rank_one })
    }

    /// Parameter dimension `p`.
    pub fn dim(&self) -> usize {
        self.atoms[0].order()
    }

    /// Number of strata `m`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_rank_one(&self) -> bool {
        self.rank_one
    }

    pub fn atoms(&self) -> &[SquareMatrix] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &SquareMatrix {
        &self.atoms[i]
    }

    /// `Σ w_i F_i`.
    pub fn information(&self, weights: &[f64]) -> SquareMatrix {
        weighted_sum(&self.atoms, weights)
    }

    /// Every atom multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|a| a.scaled(gamma)).collect(),
            rank_one: self.rank_one,
        }
    }

    /// Entrywise average of several atom lists over the same strata.
    pub fn average(lists: &[FisherAtoms]) -> Result<Self> {
        let Some(first) = lists.first() else {
            return Err(Error::Invalid("nothing to average".into()));
        };
        let (m, p) = (first.len(), first.dim());
        let mut sums = vec![SquareMatrix::zeros(p); m];
        for list in lists {
            if list.len() != m || list.dim() != p {
                return Err(Error::Invalid("atom lists disagree in shape".into()));
            }
            for (acc, a) in sums.iter_mut().zip(&list.atoms) {
                acc.add_scaled(a, 1.0);
            }
        }
        let k = lists.len() as f64;
        let atoms = sums.into_iter().map(|s| s.scaled(1.0 / k)).collect();
        Self::build(atoms, lists.iter().all(|l| l.rank_one))
    }
}
