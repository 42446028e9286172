//! One-coordinate lift problems `max f_i(z)` over `[r1, r2]`.

use crate::error::{Error, Result};
use crate::linalg::{determinant, trace_solve, SquareMatrix};
use crate::models::FisherAtoms;
use crate::region::Allocation;

const MAX_BISECTIONS: usize = 200;

/// Closed-form maximizer of `a z(1−z)^{p−1} + b(1−z)^p` on `[r1, r2]`.
pub fn maximize_restricted_univariate(a: f64, b: f64, p: usize, r1: f64, r2: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
        return Err(Error::Invalid(format!(
            "lift profile needs a, b ≥ 0 and a + b > 0, got ({a}, {b})"
        )));
    }
    if !(0.0 <= r1 && r1 <= r2 && r2 <= 1.0) {
        return Err(Error::Invalid(format!(
            "invalid lift interval [{r1}, {r2}]"
        )));
    }
    if p == 0 {
        return Err(Error::Invalid(
            "parameter dimension must be positive".into(),
        ));
    }
    let pf = p as f64;
    if a > b * pf {
        let delta = (a - b * pf) / ((a - b) * pf);
        if delta > r2 {
            return Ok(r2);
        }
        if delta >= r1 {
            return Ok(delta);
        }
    }
    Ok(r1)
}

/// `f_i'(z) = [a − bp + (b−a)pz](1−z)^{p−2}`.
pub fn lift_profile_derivative(a: f64, b: f64, p: usize, z: f64) -> f64 {
    let pf = p as f64;
    let lead = a - b * pf + (b - a) * pf * z;
    if p >= 2 {
        lead * (1.0 - z).powi(p as i32 - 2)
    } else {
        lead / (1.0 - z)
    }
}

/// `f_i(z) = a z(1−z)^{p−1} + b(1−z)^p`.
pub fn lift_profile_value(a: f64, b: f64, p: usize, z: f64) -> f64 {
    let q = 1.0 - z;
    a * z * q.powi(p as i32 - 1) + b * q.powi(p as i32)
}

/// Information matrix of the other strata rescaled to total weight one,
/// `Σ_{j≠i} w_j F_j / (1 − w_i)`.
pub(crate) fn complement_information(
    atoms: &FisherAtoms,
    w: &[f64],
    i: usize,
) -> Result<SquareMatrix> {
    let rest = 1.0 - w[i];
    if rest <= 0.0 {
        return Err(Error::Invalid(format!(
            "cannot lift stratum {i} with weight 1"
        )));
    }
    let mut m = SquareMatrix::zeros(atoms.dim());
    for (j, (a, &wj)) in atoms.atoms().iter().zip(w).enumerate() {
        if j != i && wj != 0.0 {
            m.add_scaled(a, wj / rest);
        }
    }
    Ok(m)
}

/// `f_i(z) = |(1−z) A + z F_i|` with `A` the complement information.
pub(crate) fn lift_objective(complement: &SquareMatrix, atom: &SquareMatrix, z: f64) -> f64 {
    let mut m = complement.scaled(1.0 - z);
    m.add_scaled(atom, z);
    determinant(&m)
}

/// `(a, b)` of the rank-one lift profile of stratum `i` at `w`.
pub fn lift_profile_coeffs(atoms: &FisherAtoms, w: &Allocation, i: usize) -> Result<(f64, f64)> {
    let w = w.as_slice();
    let complement = complement_information(atoms, w, i)?;
    let f = determinant(&atoms.information(w));
    profile_coeffs_with(atoms, w, i, &complement, f)
}

pub(crate) fn profile_coeffs_with(
    atoms: &FisherAtoms,
    w: &[f64],
    i: usize,
    complement: &SquareMatrix,
    f: f64,
) -> Result<(f64, f64)> {
    let p = atoms.dim() as i32;
    let wi = w[i];
    let b = determinant(complement);
    let a = if wi > 0.0 {
        (f - b * (1.0 - wi).powi(p)) / (wi * (1.0 - wi).powi(p - 1))
    } else {
        lift_objective(complement, atoms.atom(i), 0.5) * 2f64.powi(p) - b
    };
    let scale = f.abs().max(b.abs()).max(a.abs());
    let clamp = |v: f64| {
        if v < 0.0 && v >= -1e-12 * scale {
            0.0
        } else {
            v
        }
    };
    Ok((clamp(a), clamp(b)))
}

/// Maximizer of the concave `z ↦ ln |(1−z) A + z B|` on `[r1, r2]` by
/// bisection on its derivative `tr(M(z)⁻¹ (B − A))`.
pub(crate) fn maximize_log_det_segment(
    a: &SquareMatrix,
    b: &SquareMatrix,
    r1: f64,
    r2: f64,
) -> f64 {
    if r2 - r1 <= 0.0 {
        return r1;
    }
    let mut diff = b.clone();
    diff.add_scaled(a, -1.0);
    let slope = |z: f64, singular: f64| {
        let mut m = a.scaled(1.0 - z);
        m.add_scaled(b, z);
        match trace_solve(&m, &diff) {
            Ok(v) if v.is_finite() => v,
            _ => singular,
        }
    };
    if slope(r1, f64::INFINITY) <= 0.0 {
        return r1;
    }
    if slope(r2, f64::NEG_INFINITY) >= 0.0 {
        return r2;
    }
    let (mut lo, mut hi) = (r1, r2);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if slope(mid, 0.0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximizer of `f_i` over `[r1, r2]`: closed form for rank-one atoms when
/// `analytic` is set, derivative bisection on the log otherwise.
pub fn maximize_lift_general(
    atoms: &FisherAtoms,
    w: &Allocation,
    i: usize,
    r1: f64,
    r2: f64,
    analytic: bool,
) -> Result<f64> {
    let ws = w.as_slice();
    let complement = complement_information(atoms, ws, i)?;
    if r2 - r1 <= 0.0 {
        return Ok(r1);
    }
    if analytic && atoms.is_rank_one() {
        let f = determinant(&atoms.information(ws));
        let (a, b) = profile_coeffs_with(atoms, ws, i, &complement, f)?;
        let s = a.max(b);
        return maximize_restricted_univariate(a / s, b / s, atoms.dim(), r1, r2);
    }
    Ok(maximize_log_det_segment(&complement, atoms.atom(i), r1, r2))
}
