//! `h(α) = f((1−α) w* + α w_o)` as a degree-p polynomial and its maximizer.

use crate::error::{check_len, Error, Result};
use crate::linalg::{determinant, solve_linear, SquareMatrix};
use crate::models::FisherAtoms;

const BISECTION_WIDTH: f64 = 1e-12;

fn mix(w_star: &[f64], w_o: &[f64], alpha: f64) -> Vec<f64> {
    w_star
        .iter()
        .zip(w_o)
        .map(|(s, o)| (1.0 - alpha) * s + alpha * o)
        .collect()
}

/// Direct evaluation of `h(α)`.
pub fn h_value(atoms: &FisherAtoms, w_star: &[f64], w_o: &[f64], alpha: f64) -> f64 {
    determinant(&atoms.information(&mix(w_star, w_o, alpha)))
}

/// Coefficients `c_0, …, c_p` of `h(α) = Σ c_t α^t`, from `h` at `α = s/p`.
pub fn fit_h_polynomial(atoms: &FisherAtoms, w_star: &[f64], w_o: &[f64]) -> Result<Vec<f64>> {
    check_len(atoms.len(), w_star.len(), "w*")?;
    check_len(atoms.len(), w_o.len(), "w_o")?;
    let p = atoms.dim();
    let c0 = h_value(atoms, w_star, w_o, 0.0);
    if !(c0 > 0.0) {
        return Err(Error::Invalid(format!("h(0) must be positive, got {c0}")));
    }
    let pf = p as f64;
    let mut entries = Vec::with_capacity(p * p);
    let mut rhs = Vec::with_capacity(p);
    for s in 1..=p {
        let x = s as f64 / pf;
        entries.extend((1..=p).map(|t| x.powi(t as i32)));
        rhs.push(h_value(atoms, w_star, w_o, x) / c0 - 1.0);
    }
    let b = SquareMatrix::from_row_slice(p, &entries)?;
    let tail = solve_linear(&b, &rhs)?;
    let mut coeffs = Vec::with_capacity(p + 1);
    coeffs.push(c0);
    coeffs.extend(tail.into_iter().map(|c| c * c0));
    Ok(coeffs)
}

pub fn polynomial_value(coeffs: &[f64], alpha: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * alpha + c)
}

pub fn polynomial_derivative(coeffs: &[f64], alpha: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (t, c)| acc * alpha + t as f64 * c)
}

/// `argmax_{α ∈ [0,1]} h(α)` given `h(0) > 0` and `h'(0) > 0`.
pub fn maximize_h(coeffs: &[f64]) -> Result<f64> {
    let h0 = polynomial_value(coeffs, 0.0);
    let d0 = polynomial_derivative(coeffs, 0.0);
    if !(h0 > 0.0 && d0 > 0.0) {
        return Err(Error::Invalid(format!(
            "line search needs h(0) > 0 and h'(0) > 0, got {h0} and {d0}"
        )));
    }
    let h1 = polynomial_value(coeffs, 1.0);
    let d1 = polynomial_derivative(coeffs, 1.0);
    if h1 > 0.0 && d1 >= 0.0 && h1 >= h0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if polynomial_derivative(coeffs, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FamilyLink, GlmSpec, Term};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counterexample_atoms() -> (FisherAtoms, f64) {
        let spec = GlmSpec::new(
            FamilyLink::Logit,
            vec![
                Term::Intercept,
                Term::Continuous { covariate: 0 },
                Term::Continuous { covariate: 1 },
            ],
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0]],
        )
        .unwrap();
        let theta = [0.0, 0.0, 0.0];
        let c = 16.0 * spec.nus(&theta).unwrap().iter().product::<f64>();
        (spec.fisher_atoms(&theta).unwrap(), c)
    }

    #[test]
    fn counterexample_polynomial() {
        let (atoms, c) = counterexample_atoms();
        let ws = [3.0 / 11.0, 2.0 / 11.0, 6.0 / 11.0];
        let wo = [3.0 / 11.0, 8.0 / 11.0, 0.0];
        let coeffs = fit_h_polynomial(&atoms, &ws, &wo).unwrap();
        let want = [36.0 / 1331.0, 72.0 / 1331.0, -108.0 / 1331.0, 0.0];
        for (got, want) in coeffs.iter().zip(want) {
            assert!((got / c - want).abs() < 1e-12, "{got} vs {want}");
        }
        let alpha = maximize_h(&coeffs).unwrap();
        assert!((alpha - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn constant_h_when_directions_coincide() {
        let (atoms, _) = counterexample_atoms();
        let w = [0.2, 0.3, 0.5];
        let coeffs = fit_h_polynomial(&atoms, &w, &w).unwrap();
        assert!(coeffs[1..].iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn fitted_polynomial_reproduces_h() {
        let (atoms, _) = counterexample_atoms();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ws = [0.5, 0.3, 0.2];
        let wo = [0.1, 0.1, 0.8];
        let coeffs = fit_h_polynomial(&atoms, &ws, &wo).unwrap();
        for _ in 0..10 {
            let a = rng.random::<f64>();
            let direct = h_value(&atoms, &ws, &wo, a);
            assert!((polynomial_value(&coeffs, a) - direct).abs() <= 1e-9 * direct.abs());
        }
    }

    #[test]
    fn increasing_h_returns_one() {
        assert_eq!(maximize_h(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn rejects_nonascending_start() {
        assert!(maximize_h(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn grid_oracle_on_random_concave_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            // h(α) = c ∏ (1 + r_k α) with roots outside [0,1) is log-concave.
            let roots: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..3.0)).collect();
            let mut coeffs = vec![1.0];
            for r in &roots {
                let mut next = vec![0.0; coeffs.len() + 1];
                for (t, c) in coeffs.iter().enumerate() {
                    next[t] += c;
                    next[t + 1] += c * r;
                }
                coeffs = next;
            }
            if polynomial_derivative(&coeffs, 0.0) <= 0.0 {
                continue;
            }
            let alpha = maximize_h(&coeffs).unwrap();
            let best = polynomial_value(&coeffs, alpha);
            for k in 0..=1000 {
                let a = k as f64 / 1000.0;
                assert!(best >= polynomial_value(&coeffs, a) - 1e-12);
            }
        }
    }
}
