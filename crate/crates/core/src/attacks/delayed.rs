use rand::Rng;

use super::unitary::{
    build_ideal_cheat_unitary, build_nonideal_cheat_unitary, maximally_parallel_purification, CheatUnitary,
};
use super::AttackKind;
use crate::protocol::{committed_state, sample_index, Announcement, CommitmentScheme, CommittedBit};
use crate::qmath::{
    fidelity, partial_trace_a, real, BipartitePureState, ComplexMatrix, ComplexVector, DensityOperator, TOLERANCE,
};
use crate::{Error, Result};

/// Everything Alice precomputes for the delayed-choice attack on a scheme.
#[derive(Debug, Clone)]
pub struct DelayedChoicePlan {
    kind: AttackKind,
    fidelity: f64,
    committed_b: DensityOperator,
    prepared: BipartitePureState,
    cheated: BipartitePureState,
    unitary: CheatUnitary,
}

/// Alice's opening after the delayed choice.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedOpening {
    /// `None` if her outcome fell outside the announced bit's A-vectors.
    pub announcement: Option<Announcement>,
    /// Bob's register conditioned on Alice's outcome.
    pub held_b: Option<ComplexVector>,
}

/// The B-register as Bob holds it at commit time and after Alice's opening.
#[derive(Debug, Clone, PartialEq)]
pub struct BTrajectory {
    pub at_commit: DensityOperator,
    pub at_opening: Option<ComplexVector>,
}

impl DelayedChoicePlan {
    /// Picks the ideal unitary when the reduced states coincide within
    /// tolerance, and the purification-based one otherwise.
    pub fn prepare(scheme: &CommitmentScheme) -> Result<Self> {
        let zero = committed_state(scheme, CommittedBit::Zero)?;
        let one = committed_state(scheme, CommittedBit::One)?;
        let f = fidelity(&partial_trace_a(&zero)?, &partial_trace_a(&one)?)?;
        let kind = if f >= 1.0 - TOLERANCE { AttackKind::IdealEpr } else { AttackKind::NonidealUhlmann };
        Self::prepare_with(scheme, kind)
    }

    /// Forces a construction. `IdealEpr` fails on non-ideal schemes.
    pub fn prepare_with(scheme: &CommitmentScheme, kind: AttackKind) -> Result<Self> {
        let prepared = committed_state(scheme, CommittedBit::Zero)?;
        let one = committed_state(scheme, CommittedBit::One)?;
        let committed_b = partial_trace_a(&prepared)?;
        let fidelity = fidelity(&committed_b, &partial_trace_a(&one)?)?;
        let unitary = match kind {
            AttackKind::IdealEpr => build_ideal_cheat_unitary(scheme)?,
            AttackKind::NonidealUhlmann => {
                let psi0 = maximally_parallel_purification(&committed_b, &one)?;
                build_nonideal_cheat_unitary(&prepared, &psi0)?
            }
            other => {
                return Err(Error::InvalidParameter(format!("{} is not a delayed-choice attack", other.name())));
            }
        };
        if unitary.dim() != scheme.dim_a() {
            return Err(Error::Shape(format!(
                "cheat unitary needs an A-register of dimension {}, scheme has {}",
                unitary.dim(),
                scheme.dim_a()
            )));
        }
        let cheated = unitary.apply(&prepared)?;
        Ok(Self { kind, fidelity, committed_b, prepared, cheated, unitary })
    }

    pub fn kind(&self) -> AttackKind {
        self.kind
    }

    /// Fidelity between the two reduced B-states, `1 − δ`.
    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn unitary(&self) -> &CheatUnitary {
        &self.unitary
    }

    pub fn committed_b(&self) -> &DensityOperator {
        &self.committed_b
    }

    /// Joint state just before Alice's opening measurement.
    pub fn state_at_opening(&self, bit: CommittedBit) -> &BipartitePureState {
        match bit {
            CommittedBit::Zero => &self.prepared,
            CommittedBit::One => &self.cheated,
        }
    }

    /// Alice measures A in the announced bit's basis and announces the result.
    pub fn open<R: Rng + ?Sized>(&self, scheme: &CommitmentScheme, bit: CommittedBit, rng: &mut R) -> DelayedOpening {
        let branches = conditional_b_states(self.state_at_opening(bit), scheme.branch(bit).basis_a());
        let weights: Vec<f64> = branches.iter().map(|v| v.norm_squared()).collect();
        match sample_index(&weights, rng) {
            Some(index) => {
                let v = &branches[index];
                DelayedOpening { announcement: Some(Announcement { bit, index }), held_b: Some(v / real(v.norm())) }
            }
            None => DelayedOpening { announcement: None, held_b: None },
        }
    }
}

/// Unnormalized B-states `(⟨e_j| ⊗ I)|ψ⟩` for each column `e_j` of `basis`.
pub(crate) fn conditional_b_states(state: &BipartitePureState, basis: &ComplexMatrix) -> Vec<ComplexVector> {
    let m = state.amplitude_matrix();
    basis.column_iter().map(|e| m.transpose() * e.map(|z| z.conj())).collect()
}

/// Delayed-choice attack for one session: Alice always prepares `|0⟩`,
/// sends B, and decides the bit only at opening.
pub fn delayed_choice_attack<R: Rng + ?Sized>(
    scheme: &CommitmentScheme,
    chosen_bit: CommittedBit,
    rng: &mut R,
) -> Result<(Option<Announcement>, BTrajectory)> {
    let plan = DelayedChoicePlan::prepare(scheme)?;
    let opening = plan.open(scheme, chosen_bit, rng);
    Ok((opening.announcement, BTrajectory { at_commit: plan.committed_b.clone(), at_opening: opening.held_b }))
}
