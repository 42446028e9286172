use crate::error::{check_len, Error, Result};
use crate::linalg::determinant;
use crate::models::FisherAtoms;
use crate::region::{Allocation, FeasibleRegion, FEASIBILITY_TOL};

use super::objective;

/// Slack on `n w_i` before flooring so that e.g. `0.29 · 100` floors to 29.
const FLOOR_SLACK: f64 = 1e-6;

fn fits(region: &FeasibleRegion, counts: &[u64], n: u64) -> bool {
    let v: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    region.satisfies_inequalities(&v, FEASIBILITY_TOL)
}

fn count_objective(atoms: &FisherAtoms, counts: &[u64]) -> f64 {
    let w: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    determinant(&atoms.information(&w))
}

/// Exact allocation `n` summing to `budget` with `n / budget ∈ S`: floor,
/// then greedily add units maximizing the determinant.
pub fn round_off(
    atoms: &FisherAtoms,
    region: &FeasibleRegion,
    w: &Allocation,
    budget: u64,
) -> Result<Vec<u64>> {
    check_len(atoms.len(), w.len(), "allocation")?;
    check_len(region.strata(), w.len(), "region strata")?;
    if budget == 0 {
        return Err(Error::Invalid("budget must be positive".into()));
    }
    if let Some(g) = region
        .linear_constraints()
        .iter()
        .find(|g| g.coefficients.iter().any(|&c| c < 0.0) || g.bound <= 0.0)
    {
        return Err(Error::Invalid(format!(
            "round-off needs constraints with nonnegative coefficients and positive bound, got {g:?}"
        )));
    }
    let ws = w.as_slice();
    let nf = budget as f64;
    let mut counts: Vec<u64> = ws
        .iter()
        .map(|&x| (nf * x + FLOOR_SLACK).floor().max(0.0) as u64)
        .collect();
    if counts.iter().sum::<u64>() > budget || !fits(region, &counts, budget) {
        counts = ws
            .iter()
            .map(|&x| (nf * x).floor().max(0.0) as u64)
            .collect();
    }
    if !fits(region, &counts, budget) {
        return Err(Error::Infeasible(
            "floored allocation violates the constraints".into(),
        ));
    }
    let mut remaining = budget - counts.iter().sum::<u64>();
    let mut candidates: Vec<usize> = (0..ws.len()).filter(|&i| ws[i] > 0.0).collect();
    while remaining > 0 {
        candidates.retain(|&c| {
            let mut next = counts.clone();
            next[c] += 1;
            fits(region, &next, budget)
        });
        let mut best: Option<(usize, f64)> = None;
        for &i in &candidates {
            counts[i] += 1;
            let d = count_objective(atoms, &counts);
            counts[i] -= 1;
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        let Some((i, _)) = best else {
            return Err(Error::Infeasible(format!(
                "no stratum can take the remaining {remaining} units"
            )));
        };
        counts[i] += 1;
        remaining -= 1;
    }
    Ok(counts)
}

/// `(f(w1) / f(w2))^{1/p}`.
pub fn relative_efficiency(atoms: &FisherAtoms, w1: &Allocation, w2: &Allocation) -> Result<f64> {
    let f2 = objective(atoms, w2);
    if !(f2 > 0.0) {
        return Err(Error::Invalid(
            "reference allocation has zero objective".into(),
        ));
    }
    let f1 = objective(atoms, w1).max(0.0);
    Ok((f1 / f2).powf(1.0 / atoms.dim() as f64))
}
