use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{
    ensure_finite, real, ComplexMatrix, ComplexVector, DensityOperator, DEFAULT_DIM_CAP, DIM_CAP_ENV, TOLERANCE,
};
use crate::{Error, Result};

/// Reads the dimension cap from `QBC_DIM_CAP`, falling back to the default.
pub fn dim_cap_from_env() -> usize {
    std::env::var(DIM_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DEFAULT_DIM_CAP)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    DMatrix::identity(dim, dim)
}

/// Kronecker product `x ⊗ y` under the default dimension cap.
pub fn tensor(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_capped(x, y, DEFAULT_DIM_CAP)
}

pub fn tensor_capped(x: &ComplexMatrix, y: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    for (a, b) in [(x.nrows(), y.nrows()), (x.ncols(), y.ncols())] {
        let requested = a.saturating_mul(b);
        if requested > cap {
            return Err(Error::DimensionCap { requested, cap });
        }
    }
    ensure_finite(x, "tensor factor")?;
    ensure_finite(y, "tensor factor")?;
    Ok(x.kronecker(y))
}

/// `a† · b`.
pub fn adjoint_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.ad_mul(b)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted descending.
/// Column `k` of the returned matrix is the eigenvector for eigenvalue `k`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let sym = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues at rounding-noise level are treated as exact zeros: the
/// square root would otherwise inflate a 1e-16 perturbation to 1e-8.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&min) = values.last() {
        if min < -TOLERANCE {
            return Err(Error::NegativeEigenvalue(min));
        }
    }
    let scale = values.first().map_or(0.0, |v| v.abs()).max(1.0);
    let noise = 16.0 * f64::EPSILON * values.len() as f64 * scale;
    let roots =
        DVector::from_iterator(values.len(), values.iter().map(|&v| real(if v > noise { v.sqrt() } else { 0.0 })));
    let scaled = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, c)] * roots[c]);
    Ok(scaled * vectors.adjoint())
}

pub fn matrix_sqrt(rho: &DensityOperator) -> Result<ComplexMatrix> {
    psd_sqrt(rho.matrix())
}

/// Polar decomposition `m = W · P` with `W` unitary and `P = sqrt(m† m)`.
///
/// Built from the SVD `m = U Σ V†`: `W = U V†`, `P = V Σ V†`. On the null
/// space of a singular `m`, `W` inherits whatever completion the SVD
/// produced, which is deterministic for a given input.
pub fn polar_decompose(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "polar decomposition needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m, "polar input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V†");
    let w = &u * &v_t;
    let sigma = DMatrix::from_diagonal(&svd.singular_values.map(real));
    let p = v_t.adjoint() * sigma * &v_t;
    Ok((w, p))
}

/// Unitary factor of the polar decomposition.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    polar_decompose(m).map(|(w, _)| w)
}

/// Max entrywise deviation of `u† u` from the identity.
pub fn unitary_deviation(u: &ComplexMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let gram = u.ad_mul(u);
    let id = identity(u.nrows());
    (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_unitary(u: &ComplexMatrix) -> bool {
    unitary_deviation(u) <= TOLERANCE
}

/// Orthonormal basis for the orthogonal complement of the column span of
/// `q` (whose columns must already be orthonormal).
pub fn orthonormal_complement(q: &ComplexMatrix) -> ComplexMatrix {
    let dim = q.nrows();
    let target = dim.saturating_sub(q.ncols());
    let existing: Vec<ComplexVector> = q.column_iter().map(|c| c.into_owned()).collect();
    let found = index_order_basis(dim, target, &existing, |v| v);
    columns_to_matrix(dim, &found)
}

/// Deterministic orthonormal basis obtained by feeding computational basis
/// vectors `e_0, e_1, ...` through `project`, orthogonalizing each against
/// `existing` and the vectors already accepted, and keeping those whose
/// residual survives. The first nonzero component of each accepted vector
/// is made real positive.
pub(crate) fn index_order_basis<F>(
    dim: usize,
    target: usize,
    existing: &[ComplexVector],
    project: F,
) -> Vec<ComplexVector>
where
    F: Fn(ComplexVector) -> ComplexVector,
{
    let mut accepted: Vec<ComplexVector> = Vec::with_capacity(target);
    if target == 0 {
        return accepted;
    }
    // Some candidate always has residual >= 1/sqrt(dim) while the span is
    // incomplete, so a single pass with this threshold cannot stall.
    let threshold = 0.5 / (dim as f64).sqrt();
    for i in 0..dim {
        if accepted.len() == target {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[i] = real(1.0);
        let mut v = project(v);
        // Two rounds of classical Gram-Schmidt.
        for _ in 0..2 {
            for u in existing.iter().chain(accepted.iter()) {
                let c = u.dotc(&v);
                v -= u * c;
            }
        }
        let norm = v.norm();
        if norm > threshold {
            v /= real(norm);
            accepted.push(fix_leading_phase(v));
        }
    }
    accepted
}

/// Multiplies `v` by a phase so that its first non-negligible component is
/// real positive.
pub(crate) fn fix_leading_phase(v: ComplexVector) -> ComplexVector {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() > 1e-8 * scale) {
        Some(lead) => {
            let phase = lead.conj() / lead.norm();
            v * phase
        }
        None => v,
    }
}

pub(crate) fn columns_to_matrix(rows: usize, cols: &[ComplexVector]) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}
