//! Dense complex linear algebra shared by the solver and the oracle.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Singular values below this absolute floor are always discarded.
///
/// A metric assembled from differences of O(1) overlaps that is zero in exact
/// arithmetic comes out at the 1e-16 level, and a purely relative cutoff
/// would keep that noise as signal.
pub const SINGULAR_VALUE_FLOOR: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Outcome of a truncated-pseudoinverse solve.
#[derive(Clone, Debug)]
pub struct RegularizedSolve {
    pub solution: CMatrix,
    /// Number of singular values discarded by the cutoff.
    pub discarded: usize,
    /// Set when the discarded directions leave a residual that is not small
    /// relative to the right-hand side.
    pub residual_warning: bool,
}

fn cutoff(singular_values: &[f64], rel_cutoff: f64, floor: f64) -> f64 {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    (rel_cutoff * smax).max(floor).max(SINGULAR_VALUE_FLOOR)
}

/// Truncated pseudoinverse: singular values below
/// `max(rel_cutoff · σ_max, SINGULAR_VALUE_FLOOR)` are dropped.
pub fn pseudo_inverse(a: &CMatrix, rel_cutoff: f64) -> Result<(CMatrix, usize)> {
    pseudo_inverse_with_floor(a, rel_cutoff, 0.0)
}

/// [`pseudo_inverse`] with an extra absolute floor, e.g. the noise level of
/// a sampled matrix.
pub fn pseudo_inverse_with_floor(a: &CMatrix, rel_cutoff: f64, floor: f64) -> Result<(CMatrix, usize)> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension { what: "square matrix", expected: a.nrows(), found: a.ncols() });
    }
    let n = a.nrows();
    if n == 0 {
        return Ok((CMatrix::zeros(0, 0), 0));
    }
    let svd = a.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(crate::error::invalid("singular value decomposition failed")),
    };
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let cut = cutoff(&sv, rel_cutoff, floor);
    let mut discarded = 0;
    let mut inv = CMatrix::zeros(n, n);
    for (k, &s) in sv.iter().enumerate() {
        if s < cut || !s.is_finite() {
            discarded += 1;
            continue;
        }
        let vk = v_t.row(k).adjoint();
        let uk = u.column(k).adjoint();
        inv += (vk * uk) * Complex64::new(1.0 / s, 0.0);
    }
    Ok((inv, discarded))
}

/// Minimum-norm least-squares solve `A x ≈ rhs` through the truncated
/// pseudoinverse. `rhs` may hold several columns.
pub fn solve_regularized(a: &CMatrix, rhs: &CMatrix, rel_cutoff: f64) -> Result<RegularizedSolve> {
    solve_regularized_with_floor(a, rhs, rel_cutoff, 0.0)
}

pub fn solve_regularized_with_floor(
    a: &CMatrix,
    rhs: &CMatrix,
    rel_cutoff: f64,
    floor: f64,
) -> Result<RegularizedSolve> {
    if rhs.nrows() != a.nrows() {
        return Err(Error::Dimension { what: "right-hand side", expected: a.nrows(), found: rhs.nrows() });
    }
    let (inv, discarded) = pseudo_inverse_with_floor(a, rel_cutoff, floor)?;
    let solution = &inv * rhs;
    let residual = (a * &solution - rhs).norm();
    let scale = rhs.norm().max(1.0);
    Ok(RegularizedSolve {
        solution,
        discarded,
        residual_warning: residual > 1e-8 * scale,
    })
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn hermitian_min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let h = hermitian_part(m);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `⟨a|b⟩`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    num_traits::Float::sqrt(a.iter().map(|x| x.norm_sqr()).sum::<f64>())
}

/// `|a⟩⟨b|` as a dense matrix.
pub fn outer(a: &[Complex64], b: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(a.len(), b.len(), |i, j| a[i] * b[j].conj())
}

/// Column-stacking vectorization.
pub fn vectorize(m: &CMatrix) -> Vec<Complex64> {
    m.as_slice().to_vec()
}

pub fn unvectorize(v: &[Complex64], dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v)
}
