//! Dense small-matrix numerics: determinants, PSD log-determinants and
//! linear solves. Orders stay small (p ≤ ~20), so everything is O(p³) dense.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Pivots smaller than this (relative to the largest entry) count as singular.
pub const PIVOT_TOL: f64 = 1e-12;
/// Allowed asymmetry (relative to the largest entry) for PSD inputs.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// A square matrix of order `p ≥ 1` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(DMatrix<f64>);

impl SquareMatrix {
    /// Build from row-major entries.
    pub fn from_row_slice(order: usize, entries: &[f64]) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("matrix order must be at least 1".into()));
        }
        if entries.len() != order * order {
            return Err(Error::DimensionMismatch {
                expected: order * order,
                got: entries.len(),
                context: "square matrix entries",
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(DMatrix::from_row_slice(order, order, entries)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let order = rows.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        if rows.iter().any(|r| r.len() != order) {
            return Err(Error::Invalid(
                "rows must all have length equal to the row count".into(),
            ));
        }
        Self::from_row_slice(order, &flat)
    }

    pub fn zeros(order: usize) -> Self {
        Self(DMatrix::zeros(order, order))
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    /// `scale · v vᵀ`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        let col = DVector::from_column_slice(v);
        Self(&col * col.transpose() * scale)
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order())
            .map(|i| (0..self.order()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &SquareMatrix, scale: f64) {
        self.0 += &other.0 * scale;
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self(&self.0 * scale)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let p = self.order();
        let mut worst = 0.0_f64;
        for i in 0..p {
            for j in (i + 1)..p {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn mul(&self, other: &SquareMatrix) -> SquareMatrix {
        SquareMatrix(&self.0 * &other.0)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (&self.0 * DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect()
    }
}

impl From<DMatrix<f64>> for SquareMatrix {
    fn from(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "SquareMatrix requires a square matrix");
        Self(m)
    }
}

/// `Σ weights[i] · matrices[i]`.
pub fn weighted_sum(matrices: &[SquareMatrix], weights: &[f64]) -> SquareMatrix {
    let p = matrices.first().map_or(1, SquareMatrix::order);
    let mut acc = DMatrix::zeros(p, p);
    for (m, &w) in matrices.iter().zip(weights) {
        if w != 0.0 {
            acc += &m.0 * w;
        }
    }
    SquareMatrix(acc)
}

/// Determinant via LU with partial pivoting (closed forms for p ≤ 3).
/// Singular input returns 0.
pub fn determinant(m: &SquareMatrix) -> f64 {
    m.0.determinant()
}

/// Log-determinant of a symmetric PSD matrix via Cholesky.
///
/// Returns `f64::NEG_INFINITY` when the factorization breaks down, which is
/// how singular (rank-deficient) PSD inputs are reported.
pub fn log_det_psd(m: &SquareMatrix) -> Result<f64> {
    let scale = m.max_abs().max(1.0);
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    let Some(chol) = m.0.clone().cholesky() else {
        return Ok(f64::NEG_INFINITY);
    };
    let l = chol.l_dirty();
    let diag_scale = (0..m.order()).fold(0.0_f64, |a, k| a.max(m.0[(k, k)].abs()));
    let mut log_det = 0.0;
    for k in 0..m.order() {
        let lkk = l[(k, k)];
        if !(lkk * lkk > PIVOT_TOL * diag_scale) {
            return Ok(f64::NEG_INFINITY);
        }
        log_det += 2.0 * lkk.ln();
    }
    Ok(log_det)
}

/// Solve `A x = b` by LU with partial pivoting.
pub fn solve_linear(a: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: b.len(),
            context: "right-hand side",
        });
    }
    let lu = a.0.clone().lu();
    let scale = a.max_abs();
    let u = lu.u();
    let min_pivot = (0..a.order()).fold(f64::INFINITY, |m, k| m.min(u[(k, k)].abs()));
    if !(min_pivot > PIVOT_TOL * scale) {
        return Err(Error::Singular { pivot: min_pivot });
    }
    let x = lu
        .solve(&DVector::from_column_slice(b))
        .ok_or(Error::Singular { pivot: min_pivot })?;
    Ok(x.iter().copied().collect())
}

/// `tr(A⁻¹ B)` for nonsingular `A`.
pub fn trace_solve(a: &SquareMatrix, b: &SquareMatrix) -> Result<f64> {
    let lu = a.0.clone().lu();
    let scale = a.max_abs();
    let u = lu.u();
    let min_pivot = (0..a.order()).fold(f64::INFINITY, |m, k| m.min(u[(k, k)].abs()));
    if !(min_pivot > PIVOT_TOL * scale) {
        return Err(Error::Singular { pivot: min_pivot });
    }
    let x = lu.solve(&b.0).ok_or(Error::Singular { pivot: min_pivot })?;
    Ok(x.trace())
}

/// `ln(|A + Δ| / |A|) = ln |I + A⁻¹ Δ|` for nonsingular `A`, accurate when
/// `Δ` is small. Returns `f64::NEG_INFINITY` if `|A + Δ| / |A| ≤ 0`.
pub fn log_det_ratio(a: &SquareMatrix, delta: &SquareMatrix) -> Result<f64> {
    let lu = a.0.clone().lu();
    let scale = a.max_abs();
    let u = lu.u();
    let min_pivot = (0..a.order()).fold(f64::INFINITY, |m, k| m.min(u[(k, k)].abs()));
    if !(min_pivot > PIVOT_TOL * scale) {
        return Err(Error::Singular { pivot: min_pivot });
    }
    let x = lu
        .solve(&delta.0)
        .ok_or(Error::Singular { pivot: min_pivot })?;
    let norm = x
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if norm <= 0.5 {
        let mut power = x.clone();
        let mut sum = 0.0;
        for k in 1..=200 {
            let term = power.trace() / k as f64;
            sum += if k % 2 == 1 { term } else { -term };
            if term.abs() <= 1e-18 * sum.abs() || norm.powi(k) < 1e-300 {
                break;
            }
            power = &power * &x;
        }
        return Ok(sum);
    }
    let mut y = x;
    for k in 0..a.order() {
        y[(k, k)] += 1.0;
    }
    let det = y.determinant();
    Ok(if det > 0.0 {
        det.ln()
    } else {
        f64::NEG_INFINITY
    })
}
