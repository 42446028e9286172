//! Feasible allocation regions: the probability simplex intersected with
//! per-stratum caps and general linear inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::lp::{LinearProgram, Sense};

/// Tolerance used when checking membership of optimizer output.
pub const FEASIBILITY_TOL: f64 = 1e-9;
const SUM_TOL: f64 = 1e-10;

/// Approximate allocation: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Allocation(Vec<f64>);

impl TryFrom<Vec<f64>> for Allocation {
    type Error = Error;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<Allocation> for Vec<f64> {
    fn from(w: Allocation) -> Self {
        w.0
    }
}

impl Allocation {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Invalid(
                "allocation must have at least one stratum".into(),
            ));
        }
        if weights
            .iter()
            .any(|w| !w.is_finite() || *w < -SUM_TOL || *w > 1.0 + SUM_TOL)
        {
            return Err(Error::Invalid(format!(
                "allocation weights must lie in [0,1]: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Invalid(format!(
                "allocation weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    /// Clamp tiny negatives and rescale to sum exactly to one.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::Invalid("cannot normalize a zero allocation".into()));
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(weights)
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Weights `counts / Σ counts` of an exact allocation.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Invalid("counts sum to zero".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Lift coordinate `i` to `z`, rescaling the others by `(1−z)/(1−w_i)`.
    pub fn lifted(&self, i: usize, z: f64) -> Vec<f64> {
        let scale = (1.0 - z) / (1.0 - self.0[i]);
        self.0
            .iter()
            .enumerate()
            .map(|(j, &w)| if j == i { z } else { w * scale })
            .collect()
    }
}

/// `coefficients · w ≤ bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl LinearConstraint {
    pub fn new(coefficients: Vec<f64>, bound: f64) -> Self {
        Self {
            coefficients,
            bound,
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.coefficients.iter().zip(w).map(|(g, x)| g * x).sum()
    }
}

/// The set `S = { w ∈ simplex : w_i ≤ c_i, g_k·w ≤ h_k }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    strata: usize,
    caps: Option<Vec<f64>>,
    linear: Vec<LinearConstraint>,
}

impl FeasibleRegion {
    /// The whole simplex over `m` strata.
    pub fn simplex(m: usize) -> Self {
        Self {
            strata: m,
            caps: None,
            linear: Vec::new(),
        }
    }

    pub fn with_caps(caps: Vec<f64>) -> Result<Self> {
        Self::new(caps.len(), Some(caps), Vec::new())
    }

    /// Caps `min(1, N_i / n)` from stratum sizes and the budget.
    pub fn from_counts(counts: &[u64], budget: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::Invalid("budget must be positive".into()));
        }
        let caps = counts
            .iter()
            .map(|&c| (c as f64 / budget as f64).min(1.0))
            .collect();
        Self::with_caps(caps)
    }

    pub fn new(m: usize, caps: Option<Vec<f64>>, linear: Vec<LinearConstraint>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("region needs at least one stratum".into()));
        }
        if let Some(c) = &caps {
            check_len(m, c.len(), "caps")?;
            if c.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
                return Err(Error::Invalid(format!("caps must lie in (0, 1]: {c:?}")));
            }
            let total: f64 = c.iter().sum();
            if total < 1.0 - 1e-12 {
                return Err(Error::Infeasible(format!("caps sum to {total} < 1")));
            }
        }
        for g in &linear {
            check_len(m, g.coefficients.len(), "linear constraint coefficients")?;
            if g.coefficients.iter().any(|v| !v.is_finite()) || !g.bound.is_finite() {
                return Err(Error::Invalid("linear constraints must be finite".into()));
            }
        }
        let region = Self {
            strata: m,
            caps,
            linear,
        };
        if !region.linear.is_empty() {
            // Phase one of the LP doubles as the emptiness check.
            region.maximize_linear(&vec![0.0; m])?;
        }
        Ok(region)
    }

    /// Append a constraint; the region must stay nonempty.
    pub fn and(mut self, constraint: LinearConstraint) -> Result<Self> {
        self.linear.push(constraint);
        Self::new(self.strata, self.caps, self.linear)
    }

    pub fn strata(&self) -> usize {
        self.strata
    }

    pub fn caps(&self) -> Option<&[f64]> {
        self.caps.as_deref()
    }

    pub fn linear_constraints(&self) -> &[LinearConstraint] {
        &self.linear
    }

    pub fn is_caps_only(&self) -> bool {
        self.linear.is_empty()
    }

    fn cap(&self, i: usize) -> f64 {
        self.caps.as_ref().map_or(1.0, |c| c[i])
    }

    /// Caps, linear constraints and nonnegativity, without the sum-to-one
    /// condition. Used for partial (scaled) count vectors during round-off.
    pub fn satisfies_inequalities(&self, v: &[f64], tol: f64) -> bool {
        v.iter()
            .enumerate()
            .all(|(i, &x)| x >= -tol && x <= self.cap(i) + tol)
            && self.linear.iter().all(|g| g.value(v) <= g.bound + tol)
    }

    pub fn contains(&self, w: &[f64], tol: f64) -> Result<bool> {
        check_len(self.strata, w.len(), "allocation")?;
        let sum: f64 = w.iter().sum();
        Ok((sum - 1.0).abs() <= tol && self.satisfies_inequalities(w, tol))
    }

    /// Closed interval of `z` for which lifting coordinate `i` to `z`
    /// stays inside the region.
    pub fn lift_interval(&self, w: &Allocation, i: usize) -> Result<(f64, f64)> {
        check_len(self.strata, w.len(), "allocation")?;
        if i >= self.strata {
            return Err(Error::Invalid(format!("stratum index {i} out of range")));
        }
        if !self.contains(w.as_slice(), FEASIBILITY_TOL)? {
            return Err(Error::OutsideRegion(format!("{:?}", w.as_slice())));
        }
        let w = w.as_slice();
        let wi = w[i];
        if wi >= 1.0 {
            return Err(Error::Invalid(format!(
                "cannot lift stratum {i} with weight 1"
            )));
        }
        let rest = 1.0 - wi;
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;

        if self.caps.is_some() {
            hi = hi.min(self.cap(i));
            for (j, &wj) in w.iter().enumerate() {
                if j != i && wj > 0.0 {
                    lo = lo.max(1.0 - self.cap(j) * rest / wj);
                }
            }
        }
        for g in &self.linear {
            // g_i z + s (1 − z) ≤ h with s the rescaled contribution of the others.
            let s: f64 = w
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &wj)| g.coefficients[j] * wj)
                .sum::<f64>()
                / rest;
            let slope = g.coefficients[i] - s;
            let room = g.bound - s;
            let scale = 1.0 + g.coefficients.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if slope > 1e-14 * scale {
                hi = hi.min(room / slope);
            } else if slope < -1e-14 * scale {
                lo = lo.max(room / slope);
            }
        }
        // w_i itself is feasible; absorb round-off at degenerate intervals.
        Ok((lo.min(wi).max(0.0), hi.max(wi).min(1.0)))
    }

    /// Largest `t ≥ 0` with `w + t (e_i − e_j)` still in the region.
    pub fn exchange_limit(&self, w: &[f64], i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let mut t = w[j].max(0.0).min(self.cap(i) - w[i]);
        for g in &self.linear {
            let slope = g.coefficients[i] - g.coefficients[j];
            if slope > 0.0 {
                t = t.min((g.bound - g.value(w)) / slope);
            }
        }
        t.max(0.0)
    }

    /// `argmax_{w ∈ S} a·w`.
    pub fn maximize_linear(&self, a: &[f64]) -> Result<Allocation> {
        check_len(self.strata, a.len(), "linear objective")?;
        if self.is_caps_only() {
            return Ok(self.maximize_linear_by_ranks(a));
        }
        let m = self.strata;
        let mut lp = LinearProgram::maximize(a.to_vec());
        lp.constrain(vec![1.0; m], Sense::Eq, 1.0);
        self.add_rows(&mut lp, m, 0);
        let sol = lp.solve()?;
        Allocation::normalized(sol.x)
    }

    /// Caps-only closed form: fill strata in decreasing `a_i` up to their
    /// caps; ties go to the lowest index.
    fn maximize_linear_by_ranks(&self, a: &[f64]) -> Allocation {
        let m = self.strata;
        let caps: Vec<f64> = (0..m).map(|i| self.cap(i)).collect();
        let total: f64 = caps.iter().sum();
        if (total - 1.0).abs() <= 1e-12 {
            return Allocation(caps);
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&x, &y| a[y].partial_cmp(&a[x]).unwrap_or(std::cmp::Ordering::Equal));
        let mut w = vec![0.0; m];
        let mut remaining = 1.0;
        for i in order {
            if remaining <= 0.0 {
                break;
            }
            let take = caps[i].min(remaining);
            w[i] = take;
            remaining -= take;
        }
        Allocation(w)
    }

    /// Rows for caps and linear constraints over the first `m` LP columns,
    /// padded with `extra` zero columns.
    fn add_rows(&self, lp: &mut LinearProgram, m: usize, extra: usize) {
        if let Some(caps) = &self.caps {
            for (i, &c) in caps.iter().enumerate() {
                if c < 1.0 {
                    let mut row = vec![0.0; m + extra];
                    row[i] = 1.0;
                    lp.constrain(row, Sense::Le, c);
                }
            }
        }
        for g in &self.linear {
            let mut row = g.coefficients.clone();
            row.resize(m + extra, 0.0);
            lp.constrain(row, Sense::Le, g.bound);
        }
    }

    /// A deterministic, as-interior-as-possible starting allocation.
    pub fn interior_start(&self) -> Result<Allocation> {
        let m = self.strata;
        if self.is_caps_only() {
            return match &self.caps {
                Some(c) => water_filling(c),
                None => Ok(Allocation::uniform(m)),
            };
        }
        // maximize t subject to w ∈ S, w_i ≥ t.
        let mut objective = vec![0.0; m + 1];
        objective[m] = 1.0;
        let mut lp = LinearProgram::maximize(objective);
        let mut sum_row = vec![1.0; m + 1];
        sum_row[m] = 0.0;
        lp.constrain(sum_row, Sense::Eq, 1.0);
        for i in 0..m {
            let mut row = vec![0.0; m + 1];
            row[i] = -1.0;
            row[m] = 1.0;
            lp.constrain(row, Sense::Le, 0.0);
        }
        self.add_rows(&mut lp, m, 1);
        let mut sol = lp.solve()?.x;
        sol.truncate(m);
        Allocation::normalized(sol)
    }
}

/// Constrained uniform allocation maximizing `∏ w_i` under `w_i ≤ c_i`.
pub fn water_filling(caps: &[f64]) -> Result<Allocation> {
    let m = caps.len();
    if m == 0 {
        return Err(Error::Invalid("no strata".into()));
    }
    if caps.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
        return Err(Error::Invalid(format!("caps must lie in (0, 1]: {caps:?}")));
    }
    let total: f64 = caps.iter().sum();
    if total < 1.0 - 1e-12 {
        return Err(Error::Infeasible(format!("caps sum to {total} < 1")));
    }
    let uniform = 1.0 / m as f64;
    if caps.iter().all(|&c| c >= uniform) {
        return Ok(Allocation::uniform(m));
    }
    if (total - 1.0).abs() <= 1e-12 {
        return Allocation::normalized(caps.to_vec());
    }
    let mut sorted = caps.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite caps"));
    // Level u on segment k solves Σ_{l<k} c_(l) + (m − k) u = 1 with u ≥ c_(k-1).
    let mut filled = 0.0;
    let mut level = sorted[m - 1];
    for (k, &c) in sorted.iter().enumerate() {
        if filled + (m - k) as f64 * c >= 1.0 {
            level = (1.0 - filled) / (m - k) as f64;
            break;
        }
        filled += c;
    }
    Allocation::normalized(caps.iter().map(|&c| c.min(level)).collect())
}

/// `w_i = N_i / Σ N_j`.
pub fn proportional_allocation(counts: &[u64]) -> Result<Allocation> {
    if counts.contains(&0) {
        return Err(Error::Invalid("stratum counts must be positive".into()));
    }
    Allocation::from_counts(counts)
}
