//! Dense complex linear algebra for small bipartite systems.
//!
//! Everything here operates on `nalgebra` dynamic matrices of `Complex<f64>`.
//! A bipartite vector over `A ⊗ B` stores amplitude `(i, k)` at index
//! `i * dim_b + k`, which is the ordering produced by the Kronecker product.

mod linalg;
mod measures;
mod state;

pub use linalg::{
    adjoint_product, dim_cap_from_env, hermitian_eigen, identity, is_unitary, matrix_sqrt, orthonormal_complement,
    polar_decompose, polar_unitary, psd_sqrt, tensor, tensor_capped, unitary_deviation,
};
pub use measures::{distinguishing_probability, fidelity, trace_distance};
pub use state::{
    partial_trace_a, partial_trace_b, schmidt_decompose, BipartitePureState, DensityOperator, SchmidtForm,
};

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Tolerance for normalization, unitarity and Hermiticity checks.
pub const TOLERANCE: f64 = 1e-9;

/// Schmidt weights `λ_k` at or below this value are dropped.
pub const SCHMIDT_FLOOR: f64 = 1e-12;

/// Schmidt weights closer than this are treated as one degenerate block.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Default cap on any composite dimension (`dim_a * dim_b`).
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

/// Environment variable overriding [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "QBC_DIM_CAP";

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Builds a column vector from real components.
pub fn real_vector(values: &[f64]) -> ComplexVector {
    DVector::from_iterator(values.len(), values.iter().map(|&v| real(v)))
}

/// Kronecker product of two column vectors.
pub fn kron_vec(x: &ComplexVector, y: &ComplexVector) -> ComplexVector {
    let mut out = DVector::zeros(x.len() * y.len());
    for (i, xi) in x.iter().enumerate() {
        for (k, yk) in y.iter().enumerate() {
            out[i * y.len() + k] = xi * yk;
        }
    }
    out
}

/// `|⟨x|y⟩|²` for two column vectors.
pub fn overlap_sq(x: &ComplexVector, y: &ComplexVector) -> f64 {
    x.dotc(y).norm_sqr()
}

pub(crate) fn ensure_finite(m: &ComplexMatrix, what: &'static str) -> crate::Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(crate::Error::NonFinite(what))
    }
}
