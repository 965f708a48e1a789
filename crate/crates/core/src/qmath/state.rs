use nalgebra::{DMatrix, DVector};

use super::linalg::{columns_to_matrix, fix_leading_phase, hermitian_eigen, index_order_basis};
use super::{
    ensure_finite, real, ComplexMatrix, ComplexVector, C64, DEFAULT_DIM_CAP, DEGENERACY_TOL, SCHMIDT_FLOOR, TOLERANCE,
};
use crate::{Error, Result};

/// Pure state on `A ⊗ B`, amplitude `(i, k)` stored at `i * dim_b + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: ComplexVector,
}

impl BipartitePureState {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: ComplexVector) -> Result<Self> {
        check_dims(dim_a, dim_b, amplitudes.len(), DEFAULT_DIM_CAP)?;
        let state = Self { dim_a, dim_b, amplitudes };
        state.check_finite()?;
        let norm = state.amplitudes.norm();
        if (norm - 1.0).abs() > TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(dim_a: usize, dim_b: usize, amplitudes: ComplexVector) -> Result<Self> {
        check_dims(dim_a, dim_b, amplitudes.len(), DEFAULT_DIM_CAP)?;
        let state = Self { dim_a, dim_b, amplitudes };
        state.check_finite()?;
        let norm = state.amplitudes.norm();
        if norm <= f64::EPSILON {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes: state.amplitudes / real(norm), ..state })
    }

    /// `|a⟩ ⊗ |b⟩`.
    pub fn product(a: &ComplexVector, b: &ComplexVector) -> Result<Self> {
        Self::new(a.len(), b.len(), super::kron_vec(a, b))
    }

    /// Builds a state from its `dim_a × dim_b` amplitude matrix.
    pub fn from_amplitude_matrix(m: &ComplexMatrix) -> Result<Self> {
        let (dim_a, dim_b) = m.shape();
        let amps = DVector::from_fn(dim_a * dim_b, |idx, _| m[(idx / dim_b, idx % dim_b)]);
        Self::new(dim_a, dim_b, amps)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Amplitudes reshaped to a `dim_a × dim_b` matrix.
    pub fn amplitude_matrix(&self) -> ComplexMatrix {
        DMatrix::from_fn(self.dim_a, self.dim_b, |i, k| self.amplitudes[i * self.dim_b + k])
    }

    /// `(u ⊗ I_B)|self⟩`.
    pub fn apply_local_a(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.nrows() != self.dim_a || u.ncols() != self.dim_a {
            return Err(Error::Shape(format!(
                "local operator is {}x{}, A-register has dimension {}",
                u.nrows(),
                u.ncols(),
                self.dim_a
            )));
        }
        let m = u * self.amplitude_matrix();
        let amps = DVector::from_fn(self.amplitudes.len(), |idx, _| m[(idx / self.dim_b, idx % self.dim_b)]);
        Ok(Self { amplitudes: amps, ..self.clone() })
    }

    /// Embeds the A-register into a larger space by appending zero amplitudes.
    pub fn padded_a(&self, dim_a: usize) -> Result<Self> {
        if dim_a < self.dim_a {
            return Err(Error::Shape(format!("cannot pad A from {} down to {}", self.dim_a, dim_a)));
        }
        check_dims(dim_a, self.dim_b, dim_a * self.dim_b, DEFAULT_DIM_CAP)?;
        let mut amps = DVector::zeros(dim_a * self.dim_b);
        amps.rows_mut(0, self.amplitudes.len()).copy_from(&self.amplitudes);
        Ok(Self { dim_a, dim_b: self.dim_b, amplitudes: amps })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.same_shape(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `min_θ ‖self − e^{iθ} other‖`, i.e. the distance between the rays.
    pub fn phase_aligned_distance(&self, other: &Self) -> Result<f64> {
        let ip = self.inner(other)?;
        // Differencing the vectors avoids the cancellation in 2 − 2|⟨a|b⟩|.
        let phase = if ip.norm() > 0.0 { ip.conj() / ip.norm() } else { C64::new(1.0, 0.0) };
        Ok((&self.amplitudes - &other.amplitudes * phase).norm())
    }

    /// Representative of the ray with its largest-magnitude amplitude real
    /// positive (lowest index wins ties).
    pub fn canonical(&self) -> Self {
        let mut best = 0;
        for (i, z) in self.amplitudes.iter().enumerate() {
            if z.norm() > self.amplitudes[best].norm() + 1e-15 {
                best = i;
            }
        }
        let lead = self.amplitudes[best];
        if lead.norm() == 0.0 {
            return self.clone();
        }
        let phase = lead.conj() / lead.norm();
        Self { amplitudes: &self.amplitudes * phase, ..self.clone() }
    }

    /// Swaps the roles of `A` and `B`.
    pub fn swapped(&self) -> Self {
        let m = self.amplitude_matrix().transpose();
        Self::from_amplitude_matrix(&m).expect("swap preserves normalization")
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim_a != other.dim_a || self.dim_b != other.dim_b {
            return Err(Error::Shape(format!(
                "states over {}x{} and {}x{}",
                self.dim_a, self.dim_b, other.dim_a, other.dim_b
            )));
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("state amplitudes"))
        }
    }
}

fn check_dims(dim_a: usize, dim_b: usize, len: usize, cap: usize) -> Result<()> {
    let requested = dim_a.saturating_mul(dim_b);
    if requested > cap {
        return Err(Error::DimensionCap { requested, cap });
    }
    if dim_a == 0 || dim_b == 0 || requested != len {
        return Err(Error::Shape(format!("{len} amplitudes do not fit {dim_a}x{dim_b}")));
    }
    Ok(())
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Shape(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        ensure_finite(&matrix, "density matrix")?;
        let herm_dev = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_dev > TOLERANCE {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {herm_dev:e})")));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TOLERANCE || trace.im.abs() > TOLERANCE {
            return Err(Error::InvalidDensity(format!("trace {trace} is not 1")));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if let Some(&min) = values.last() {
            if min < -TOLERANCE {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        Ok(Self { matrix })
    }

    /// `|v⟩⟨v|` for a unit vector.
    pub fn pure(v: &ComplexVector) -> Result<Self> {
        Self::new(v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: DMatrix::identity(dim, dim) * real(1.0 / dim as f64) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigenvalues (descending) and eigenvectors.
    pub fn eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        hermitian_eigen(&self.matrix)
    }

    /// Number of eigenvalues above the Schmidt floor.
    pub fn rank(&self) -> usize {
        self.eigen().0.iter().filter(|&&v| v > SCHMIDT_FLOOR).count()
    }

    /// Largest entrywise deviation from another operator.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return f64::INFINITY;
        }
        (&self.matrix - &other.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// `Tr_A |ψ⟩⟨ψ|`, the state of the B-register.
pub fn partial_trace_a(state: &BipartitePureState) -> Result<DensityOperator> {
    let norm = state.norm();
    if (norm - 1.0).abs() > TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    let m = state.amplitude_matrix();
    // ρ_B[k, l] = Σ_i ψ[i, k] conj(ψ[i, l])
    let rho = m.transpose() * m.map(|z| z.conj());
    DensityOperator::new(hermitize(rho))
}

/// `Tr_B |ψ⟩⟨ψ|`, the state of the A-register.
pub fn partial_trace_b(state: &BipartitePureState) -> Result<DensityOperator> {
    partial_trace_a(&state.swapped())
}

fn hermitize(m: ComplexMatrix) -> ComplexMatrix {
    (&m + m.adjoint()) * real(0.5)
}

/// Schmidt decomposition `Σ_k c_k |a_k⟩ ⊗ |b_k⟩` with `c_k = √λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtForm {
    /// `√λ_k`, sorted descending.
    pub coefficients: Vec<f64>,
    /// Columns `|a_k⟩`, orthonormal, `dim_a × rank`.
    pub basis_a: ComplexMatrix,
    /// Columns `|b_k⟩`, orthonormal, `dim_b × rank`.
    pub basis_b: ComplexMatrix,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// The Schmidt weights `λ_k`.
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    pub fn reconstruct(&self) -> ComplexVector {
        let (dim_a, dim_b) = (self.basis_a.nrows(), self.basis_b.nrows());
        let mut out = DVector::zeros(dim_a * dim_b);
        for (k, &c) in self.coefficients.iter().enumerate() {
            let a = self.basis_a.column(k).into_owned();
            let b = self.basis_b.column(k).into_owned();
            out += super::kron_vec(&a, &b) * real(c);
        }
        out
    }

    /// Index ranges of blocks whose weights agree within the degeneracy tolerance.
    pub fn degenerate_blocks(&self) -> Vec<std::ops::Range<usize>> {
        blocks(&self.weights())
    }
}

fn blocks(weights: &[f64]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=weights.len() {
        if k == weights.len() || (weights[start] - weights[k]).abs() > DEGENERACY_TOL {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Schmidt decomposition from the SVD of the amplitude matrix.
///
/// Within each degenerate block the A-vectors are replaced by the canonical
/// basis of the same subspace (projected computational vectors in index
/// order, leading component real positive); every B-vector is then
/// recomputed as `(⟨a_k| ⊗ I)|ψ⟩ / c_k`, which keeps the decomposition exact.
pub fn schmidt_decompose(state: &BipartitePureState) -> Result<SchmidtForm> {
    let norm = state.norm();
    if (norm - 1.0).abs() > TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    let m = state.amplitude_matrix();
    let (dim_a, dim_b) = m.shape();
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]).then(i.cmp(&j)));
    order.retain(|&i| svd.singular_values[i].powi(2) > SCHMIDT_FLOOR);

    let coefficients: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let raw_a: Vec<ComplexVector> = order.iter().map(|&i| u.column(i).into_owned()).collect();

    let mut basis_a: Vec<ComplexVector> = Vec::with_capacity(raw_a.len());
    for block in blocks(&coefficients.iter().map(|c| c * c).collect::<Vec<_>>()) {
        if block.len() == 1 {
            basis_a.push(fix_leading_phase(raw_a[block.start].clone()));
            continue;
        }
        let span = &raw_a[block.clone()];
        let project = |v: ComplexVector| {
            let mut out = DVector::zeros(v.len());
            for q in span {
                out += q * q.dotc(&v);
            }
            out
        };
        basis_a.extend(index_order_basis(dim_a, block.len(), &basis_a, project));
    }

    let basis_b: Vec<ComplexVector> =
        basis_a.iter().zip(&coefficients).map(|(a, &c)| (m.adjoint() * a).map(|z| z.conj()) / real(c)).collect();

    Ok(SchmidtForm {
        coefficients,
        basis_a: columns_to_matrix(dim_a, &basis_a),
        basis_b: columns_to_matrix(dim_b, &basis_b),
    })
}
