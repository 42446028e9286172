use std::io::Read;

use serde::{Deserialize, Serialize};

use super::glm::expit;
use super::{predictors, FisherAtoms, Term};
use crate::error::{check_len, Error, Result};
use crate::linalg::SquareMatrix;

/// Maps the `J − 1` category-equation predictors to `J` probabilities.
pub trait CategoryLink: Send + Sync {
    fn name(&self) -> &'static str;

    fn probabilities(&self, eta: &[f64]) -> Result<Vec<f64>>;

    /// `∂π/∂η` as `J` rows of length `J − 1`.
    fn jacobian(&self, eta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let k = eta.len();
        let mut d = vec![vec![0.0; k]; k + 1];
        let mut shifted = eta.to_vec();
        for c in 0..k {
            let h = 1e-6 * eta[c].abs().max(1.0);
            shifted[c] = eta[c] + h;
            let up = self.probabilities(&shifted)?;
            shifted[c] = eta[c] - h;
            let down = self.probabilities(&shifted)?;
            shifted[c] = eta[c];
            for (row, (u, l)) in d.iter_mut().zip(up.iter().zip(&down)) {
                row[c] = (u - l) / (2.0 * h);
            }
        }
        Ok(d)
    }
}

fn check_positive(pi: Vec<f64>, link: &str) -> Result<Vec<f64>> {
    if pi.iter().all(|&v| v > 0.0 && v.is_finite()) {
        Ok(pi)
    } else {
        Err(Error::InfeasibleParameter(format!(
            "{link} probabilities are not strictly positive: {pi:?}"
        )))
    }
}

struct BaselineCategory;

impl BaselineCategory {
    fn softmax(eta: &[f64]) -> Vec<f64> {
        let top = eta.iter().copied().fold(0.0, f64::max);
        let mut e: Vec<f64> = eta.iter().map(|v| (v - top).exp()).collect();
        e.push((-top).exp());
        let total: f64 = e.iter().sum();
        e.into_iter().map(|v| v / total).collect()
    }
}

impl CategoryLink for BaselineCategory {
    fn name(&self) -> &'static str {
        "baseline_category"
    }

    fn probabilities(&self, eta: &[f64]) -> Result<Vec<f64>> {
        check_positive(Self::softmax(eta), self.name())
    }

    fn jacobian(&self, eta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let pi = self.probabilities(eta)?;
        let k = eta.len();
        Ok((0..=k)
            .map(|j| {
                (0..k)
                    .map(|c| {
                        let delta = if j == c { 1.0 } else { 0.0 };
                        pi[j] * (delta - pi[c])
                    })
                    .collect()
            })
            .collect())
    }
}

struct Cumulative;

impl Cumulative {
    fn gammas(eta: &[f64]) -> Result<Vec<f64>> {
        if let Some(w) = eta.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InfeasibleParameter(format!(
                "cumulative predictors must increase across categories, got {} then {}",
                w[0], w[1]
            )));
        }
        Ok(eta.iter().map(|&v| expit(v)).collect())
    }
}

impl CategoryLink for Cumulative {
    fn name(&self) -> &'static str {
        "cumulative"
    }

    fn probabilities(&self, eta: &[f64]) -> Result<Vec<f64>> {
        let g = Self::gammas(eta)?;
        let k = g.len();
        let mut pi = Vec::with_capacity(k + 1);
        pi.push(g[0]);
        for j in 1..k {
            pi.push(g[j] - g[j - 1]);
        }
        pi.push(expit(-eta[k - 1]));
        check_positive(pi, self.name())
    }

    fn jacobian(&self, eta: &[f64]) -> Result<Vec<Vec<f64>>> {
        let g = Self::gammas(eta)?;
        let k = g.len();
        let mut d = vec![vec![0.0; k]; k + 1];
        for (j, row) in d.iter_mut().enumerate() {
            if j < k {
                row[j] = g[j] * (1.0 - g[j]);
            }
            if j > 0 {
                row[j - 1] = -g[j - 1] * (1.0 - g[j - 1]);
            }
        }
        Ok(d)
    }
}

struct AdjacentCategories;

impl CategoryLink for AdjacentCategories {
    fn name(&self) -> &'static str {
        "adjacent_categories"
    }

    fn probabilities(&self, eta: &[f64]) -> Result<Vec<f64>> {
        // log π_j − log π_J = Σ_{k ≥ j} η_k
        let mut scores = vec![0.0; eta.len()];
        let mut acc = 0.0;
        for (s, v) in scores.iter_mut().zip(eta).rev() {
            acc += v;
            *s = acc;
        }
        check_positive(BaselineCategory::softmax(&scores), self.name())
    }
}

struct ContinuationRatio;

impl CategoryLink for ContinuationRatio {
    fn name(&self) -> &'static str {
        "continuation_ratio"
    }

    fn probabilities(&self, eta: &[f64]) -> Result<Vec<f64>> {
        // logit P(Y = j | Y ≥ j) = η_j
        let mut pi = Vec::with_capacity(eta.len() + 1);
        let mut remaining = 1.0;
        for &v in eta {
            pi.push(remaining * expit(v));
            remaining *= expit(-v);
        }
        pi.push(remaining);
        check_positive(pi, self.name())
    }
}

static BASELINE: BaselineCategory = BaselineCategory;
static CUMULATIVE: Cumulative = Cumulative;
static ADJACENT: AdjacentCategories = AdjacentCategories;
static CONTINUATION: ContinuationRatio = ContinuationRatio;

/// Registered category links, looked up by name.
pub fn category_links() -> [&'static dyn CategoryLink; 4] {
    [&BASELINE, &CUMULATIVE, &ADJACENT, &CONTINUATION]
}

pub fn category_link(name: &str) -> Result<&'static dyn CategoryLink> {
    category_links()
        .into_iter()
        .find(|l| l.name() == name)
        .ok_or_else(|| Error::Unknown {
            kind: "logit type",
            name: name.to_string(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogitType {
    BaselineCategory,
    Cumulative,
    AdjacentCategories,
    ContinuationRatio,
}

impl LogitType {
    pub fn link(self) -> &'static dyn CategoryLink {
        match self {
            LogitType::BaselineCategory => &BASELINE,
            LogitType::Cumulative => &CUMULATIVE,
            LogitType::AdjacentCategories => &ADJACENT,
            LogitType::ContinuationRatio => &CONTINUATION,
        }
    }
}

/// Proportional odds shares non-intercept coefficients across equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Odds {
    Po,
    Npo,
}

/// Multinomial logit model over fixed strata.
///
/// Coefficients are ordered term-major: for npo, `θ[t(J−1) + j]` multiplies
/// term `t` in equation `j`. Under po, intercept terms keep one coefficient
/// per equation and every other term has a single shared coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultinomialSpec {
    pub link: LogitType,
    pub odds: Odds,
    pub categories: usize,
    pub terms: Vec<Term>,
    pub strata: Vec<Vec<f64>>,
}

impl MultinomialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.categories < 2 {
            return Err(Error::Invalid(
                "a multinomial response needs at least 2 categories".into(),
            ));
        }
        if self.terms.is_empty() || self.strata.is_empty() {
            return Err(Error::Invalid("model needs terms and strata".into()));
        }
        for x in &self.strata {
            predictors(&self.terms, x)?;
        }
        Ok(())
    }

    fn equations(&self) -> usize {
        self.categories - 1
    }

    fn shares(&self, term: &Term) -> bool {
        self.odds == Odds::Po && !term.is_intercept()
    }

    pub fn dim(&self) -> usize {
        let k = self.equations();
        self.terms
            .iter()
            .map(|t| if self.shares(t) { 1 } else { k })
            .sum()
    }

    /// `(J − 1) × p` matrix mapping θ to the equation predictors of stratum `i`.
    pub fn design(&self, i: usize) -> Result<Vec<Vec<f64>>> {
        let h = predictors(&self.terms, &self.strata[i])?;
        let k = self.equations();
        let mut z = vec![vec![0.0; self.dim()]; k];
        let mut col = 0;
        for (t, &value) in self.terms.iter().zip(&h) {
            if self.shares(t) {
                for row in z.iter_mut() {
                    row[col] = value;
                }
                col += 1;
            } else {
                for (j, row) in z.iter_mut().enumerate() {
                    row[col + j] = value;
                }
                col += k;
            }
        }
        Ok(z)
    }

    pub fn linear_predictors(&self, theta: &[f64], i: usize) -> Result<Vec<f64>> {
        check_len(self.dim(), theta.len(), "θ length")?;
        Ok(self
            .design(i)?
            .iter()
            .map(|row| row.iter().zip(theta).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn probabilities(&self, theta: &[f64], i: usize) -> Result<Vec<f64>> {
        self.link
            .link()
            .probabilities(&self.linear_predictors(theta, i)?)
    }

    /// `∂π/∂θ` for stratum `i`, one row per category.
    pub fn probability_gradients(&self, theta: &[f64], i: usize) -> Result<Vec<Vec<f64>>> {
        let z = self.design(i)?;
        let eta = self.linear_predictors(theta, i)?;
        let d = self.link.link().jacobian(&eta)?;
        let p = self.dim();
        Ok(d.iter()
            .map(|drow| {
                (0..p)
                    .map(|c| drow.iter().zip(&z).map(|(dv, zrow)| dv * zrow[c]).sum())
                    .collect()
            })
            .collect())
    }

    /// Checks θ against the parameter space at every stratum.
    pub fn check_parameter(&self, theta: &[f64]) -> Result<()> {
        for i in 0..self.strata.len() {
            self.probabilities(theta, i)?;
        }
        Ok(())
    }

    /// Single-trial information `Σ_j π_j⁻¹ ∇π_j ∇π_jᵀ` for stratum `i`.
    pub fn fisher_atom(&self, theta: &[f64], i: usize) -> Result<SquareMatrix> {
        let pi = self.probabilities(theta, i)?;
        let grads = self.probability_gradients(theta, i)?;
        let mut f = SquareMatrix::zeros(self.dim());
        for (g, &prob) in grads.iter().zip(&pi) {
            f.add_scaled(&SquareMatrix::outer(g, 1.0), 1.0 / prob);
        }
        // Symmetrize round-off.
        let m = f.as_matrix();
        Ok(SquareMatrix::from((m + m.transpose()) * 0.5))
    }

    pub fn fisher_atoms(&self, theta: &[f64]) -> Result<FisherAtoms> {
        let atoms = (0..self.strata.len())
            .map(|i| self.fisher_atom(theta, i))
            .collect::<Result<Vec<_>>>()?;
        FisherAtoms::new(atoms)
    }

    /// Averaged atoms over θ samples; infeasible samples are skipped and counted.
    pub fn ew_fisher_atoms(&self, samples: &[Vec<f64>]) -> Result<(FisherAtoms, usize)> {
        if samples.is_empty() {
            return Err(Error::Invalid("θ sample list is empty".into()));
        }
        let mut lists = Vec::with_capacity(samples.len());
        let mut skipped = 0;
        for theta in samples {
            match self.fisher_atoms(theta) {
                Ok(a) => lists.push(a),
                Err(Error::InfeasibleParameter(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        if lists.is_empty() {
            return Err(Error::InfeasibleParameter(format!(
                "all {skipped} θ samples are outside the parameter space"
            )));
        }
        Ok((FisherAtoms::average(&lists)?, skipped))
    }
}

/// Reads θ vectors from headerless CSV, one per line.
pub fn read_theta_samples<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record =
            record.map_err(|e| Error::Invalid(format!("θ samples line {}: {e}", line + 1)))?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::Invalid(format!("θ samples line {}: '{field}': {e}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = out.first() {
            check_len(Vec::len(first), row.len(), "θ sample row length")?;
        }
        out.push(row);
    }
    Ok(out)
}
