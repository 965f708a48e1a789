use nalgebra::DMatrix;

use crate::protocol::{committed_state, CommitmentScheme, CommittedBit};
use crate::qmath::{
    fidelity, orthonormal_complement, partial_trace_a, polar_unitary, real, schmidt_decompose, unitary_deviation,
    BipartitePureState, ComplexMatrix, DensityOperator, SCHMIDT_FLOOR, TOLERANCE,
};
use crate::{Error, Result};

/// Tolerance on the "same reduced state" precondition between purifications.
pub const PURIFICATION_TOL: f64 = 1e-8;

/// A unitary acting on Alice's register alone.
#[derive(Debug, Clone, PartialEq)]
pub struct CheatUnitary {
    matrix: ComplexMatrix,
}

impl CheatUnitary {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dev = unitary_deviation(&matrix);
        if dev > TOLERANCE {
            return Err(Error::Shape(format!("cheat operator is not unitary (deviation {dev:e})")));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Max entrywise deviation of `U†U` from the identity.
    pub fn deviation(&self) -> f64 {
        unitary_deviation(&self.matrix)
    }

    /// `(U ⊗ I)|state⟩`, padding the A-register if the unitary is larger.
    pub fn apply(&self, state: &BipartitePureState) -> Result<BipartitePureState> {
        let state = if state.dim_a() < self.dim() { state.padded_a(self.dim())? } else { state.clone() };
        state.apply_local_a(&self.matrix)
    }
}

/// Local unitary taking `source` to `target`, both purifying the same
/// B-state and living on the same A-dimension.
///
/// Schmidt-decompose the source as `Σ c_k |a_k⟩|b_k⟩`, contract the target
/// against the same B-vectors to get `|a'_k⟩ = (I ⊗ ⟨b_k|)|target⟩ / c_k`,
/// snap those to the nearest isometry, then send `a_k ↦ a'_k` and the
/// orthogonal complement of `{a_k}` onto that of `{a'_k}`.
fn map_purification(source: &BipartitePureState, target: &BipartitePureState) -> Result<CheatUnitary> {
    let form = schmidt_decompose(source)?;
    let dim_a = source.dim_a();
    let rank = form.rank();
    let target_m = target.amplitude_matrix();
    let mut images = DMatrix::zeros(dim_a, rank);
    for k in 0..rank {
        let b_conj = form.basis_b.column(k).map(|z| z.conj());
        let col = &target_m * b_conj / real(form.coefficients[k]);
        images.set_column(k, &col);
    }
    let svd = images.svd(true, true);
    let isometry = svd.u.expect("requested U") * svd.v_t.expect("requested V†");
    let source_complement = orthonormal_complement(&form.basis_a);
    let target_complement = orthonormal_complement(&isometry);
    let u = &isometry * form.basis_a.adjoint() + target_complement * source_complement.adjoint();
    CheatUnitary::new(u)
}

fn pad_pair(x: &BipartitePureState, y: &BipartitePureState) -> Result<(BipartitePureState, BipartitePureState)> {
    if x.dim_b() != y.dim_b() {
        return Err(Error::Shape(format!("B-registers of dimension {} and {}", x.dim_b(), y.dim_b())));
    }
    let dim_a = x.dim_a().max(y.dim_a());
    Ok((x.padded_a(dim_a)?, y.padded_a(dim_a)?))
}

/// The unitary `U_A` with `(U_A ⊗ I)|0⟩ = |1⟩` for a scheme whose two
/// reduced B-states coincide.
pub fn build_ideal_cheat_unitary(scheme: &CommitmentScheme) -> Result<CheatUnitary> {
    let zero = committed_state(scheme, CommittedBit::Zero)?;
    let one = committed_state(scheme, CommittedBit::One)?;
    let f = fidelity(&partial_trace_a(&zero)?, &partial_trace_a(&one)?)?;
    if f < 1.0 - TOLERANCE {
        return Err(Error::NonIdealScheme { fidelity: f });
    }
    map_purification(&zero, &one)
}

/// Purification of `rho0` whose overlap with `reference` equals the
/// fidelity between `rho0` and the reference's reduced B-state.
///
/// Starting from the standard purification `|s⟩ = Σ_k √p_k |k⟩|v_k⟩`, every
/// other purification is `(V ⊗ I)|s⟩` and `⟨ref|(V ⊗ I)|s⟩ = Tr(V S R†)`
/// where `S`, `R` are the amplitude matrices. With `S R† = W P` (polar),
/// `V = W†` attains `Tr P`, the trace norm.
pub fn maximally_parallel_purification(
    rho0: &DensityOperator,
    reference: &BipartitePureState,
) -> Result<BipartitePureState> {
    if rho0.dim() != reference.dim_b() {
        return Err(Error::Shape(format!(
            "density operator of dimension {} vs reference B-register {}",
            rho0.dim(),
            reference.dim_b()
        )));
    }
    let (values, vectors) = rho0.eigen();
    let rank = values.iter().filter(|&&v| v > SCHMIDT_FLOOR).count().max(1);
    let dim_a = reference.dim_a().max(rank);
    let reference = reference.padded_a(dim_a)?;
    let dim_b = rho0.dim();
    let mut s = DMatrix::zeros(dim_a, dim_b);
    for k in 0..rank {
        let weight = real(values[k].max(0.0).sqrt());
        for m in 0..dim_b {
            s[(k, m)] = weight * vectors[(m, k)];
        }
    }
    let trace = s.norm_squared();
    s /= real(trace.sqrt());
    let cross = &s * reference.amplitude_matrix().adjoint();
    let w = polar_unitary(&cross)?;
    BipartitePureState::from_amplitude_matrix(&(w.adjoint() * s))
}

/// Unitary on A taking `state0` to `psi0`, which must purify the same B-state.
pub fn build_nonideal_cheat_unitary(state0: &BipartitePureState, psi0: &BipartitePureState) -> Result<CheatUnitary> {
    let (state0, psi0) = pad_pair(state0, psi0)?;
    let deviation = partial_trace_a(&state0)?.max_deviation(&partial_trace_a(&psi0)?);
    if deviation > PURIFICATION_TOL {
        return Err(Error::PurificationMismatch { deviation });
    }
    map_purification(&state0, &psi0)
}
