//! Cheating strategies against the commitment protocol.
//!
//! The core attack is the delayed choice: Alice prepares `|0⟩`, keeps
//! register A coherent instead of measuring it, and at opening applies a
//! unitary on A that turns her share into a purification matching `|1⟩`
//! (exactly when the reduced states coincide, up to fidelity otherwise).

mod bb84;
mod delayed;
mod unitary;

pub use bb84::{
    bb84_epr_attack, naive_cheat_bb84, naive_exact_probability, naive_heuristic_probability, Bb84EprAttack,
    NaiveCheatEstimate, PairConvention,
};
pub use delayed::{delayed_choice_attack, BTrajectory, DelayedChoicePlan, DelayedOpening};
pub use unitary::{
    build_ideal_cheat_unitary, build_nonideal_cheat_unitary, maximally_parallel_purification, CheatUnitary,
    PURIFICATION_TOL,
};

use serde::{Deserialize, Serialize};

use crate::montecarlo::{tally, Tally};
use crate::protocol::{
    acceptance_probability, committed_state, AliceStrategy, Announcement, BobMode, CommitmentScheme, CommittedBit,
    SessionRunner,
};
use crate::qmath::{fidelity, partial_trace_a, real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    /// Delayed choice with the Schmidt-basis unitary (ideal schemes).
    IdealEpr,
    /// Delayed choice with the maximally parallel purification.
    NonidealUhlmann,
    /// Commit to the other bit and guess the index.
    Naive,
    /// Entangled-pair attack on the photon scheme.
    Bb84Epr,
    /// No cheating.
    Honest,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] =
        [AttackKind::IdealEpr, AttackKind::NonidealUhlmann, AttackKind::Naive, AttackKind::Bb84Epr, AttackKind::Honest];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::IdealEpr => "ideal-epr",
            AttackKind::NonidealUhlmann => "nonideal-uhlmann",
            AttackKind::Naive => "naive",
            AttackKind::Bb84Epr => "bb84-epr",
            AttackKind::Honest => "honest",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidParameter(format!("unknown attack `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// Aggregate result of a batch of attack sessions.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AttackReport {
    pub scheme_label: String,
    pub attack_kind: AttackKind,
    pub trials: u64,
    pub accept_count0: u64,
    pub accept_count1: u64,
    /// `F(ρ0, ρ1) = 1 − δ` for the scheme's reduced B-states.
    pub fidelity_bound: f64,
    pub exact_accept_prob: Option<f64>,
    pub seed: u64,
}

impl AttackReport {
    pub fn accept_rate(&self) -> f64 {
        (self.accept_count0 + self.accept_count1) as f64 / self.trials as f64
    }
}

/// Fidelity between the scheme's two reduced B-states.
pub fn scheme_fidelity(scheme: &CommitmentScheme) -> Result<f64> {
    let rho0 = partial_trace_a(&committed_state(scheme, CommittedBit::Zero)?)?;
    let rho1 = partial_trace_a(&committed_state(scheme, CommittedBit::One)?)?;
    fidelity(&rho0, &rho1)
}

/// Exact acceptance probability against Bob's projective test (store mode).
///
/// For a delayed-choice attack this is `Σ_j |(⟨e'_j| ⊗ ⟨φ'_j|)|ψ⟩|²` with
/// `|ψ⟩` the joint state right before Alice's opening measurement.
pub fn exact_accept_probability(scheme: &CommitmentScheme, kind: AttackKind, bit: CommittedBit) -> Result<f64> {
    exact_accept_probability_in_mode(scheme, kind, bit, BobMode::Store)
}

/// [`exact_accept_probability`] for either Bob mode.
pub fn exact_accept_probability_in_mode(
    scheme: &CommitmentScheme,
    kind: AttackKind,
    bit: CommittedBit,
    mode: BobMode,
) -> Result<f64> {
    let p = match kind {
        AttackKind::Honest => {
            let branch = scheme.branch(bit);
            let mut total = 0.0;
            for (index, w) in branch.weights().into_iter().enumerate() {
                let ann = Announcement { bit, index };
                total += w * acceptance_probability(scheme, &ann, &branch.evidence()[index], mode)?;
            }
            total
        }
        AttackKind::IdealEpr | AttackKind::NonidealUhlmann => {
            let plan = DelayedChoicePlan::prepare_with(scheme, kind)?;
            let basis = scheme.branch(bit).basis_a();
            let mut total = 0.0;
            for (index, v) in delayed::conditional_b_states(plan.state_at_opening(bit), basis).into_iter().enumerate() {
                let w = v.norm_squared();
                if w <= 0.0 {
                    continue;
                }
                let ann = Announcement { bit, index };
                total += w * acceptance_probability(scheme, &ann, &(v / real(w.sqrt())), mode)?;
            }
            total
        }
        AttackKind::Naive => match (scheme.photons(), mode, bit) {
            (Some(s), BobMode::MeasureAtCommit, CommittedBit::One) => naive_exact_probability(s),
            _ => {
                let committed = scheme.branch(bit.flipped());
                let announced = scheme.branch(bit).len();
                let mut total = 0.0;
                for (i, w) in committed.weights().into_iter().enumerate() {
                    for index in 0..announced {
                        let ann = Announcement { bit, index };
                        total += w * acceptance_probability(scheme, &ann, &committed.evidence()[i], mode)?
                            / announced as f64;
                    }
                }
                total
            }
        },
        AttackKind::Bb84Epr => {
            Bb84EprAttack::for_scheme(scheme.clone(), PairConvention::PhiPlus)?.exact_accept_probability(bit, mode)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Runs `trials` seeded sessions of an attack and aggregates the outcome.
pub fn run_attack(
    scheme: &CommitmentScheme,
    kind: AttackKind,
    bit: CommittedBit,
    mode: BobMode,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    run_attack_with(scheme, kind, bit, mode, PairConvention::default(), trials, seed)
}

pub fn run_attack_with(
    scheme: &CommitmentScheme,
    kind: AttackKind,
    bit: CommittedBit,
    mode: BobMode,
    convention: PairConvention,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let t: Tally = match kind {
        AttackKind::Bb84Epr => {
            let attack = Bb84EprAttack::for_scheme(scheme.clone(), convention)?;
            tally(trials, |trial| attack.run(bit, mode, seed, trial))?
        }
        AttackKind::IdealEpr | AttackKind::NonidealUhlmann => {
            let plan = DelayedChoicePlan::prepare_with(scheme, kind)?;
            let runner = SessionRunner::with_plan(scheme, bit, mode, plan)?;
            tally(trials, |trial| runner.run(seed, trial))?
        }
        AttackKind::Naive => {
            let runner = SessionRunner::new(scheme, AliceStrategy::NaiveCheat(bit), mode)?;
            tally(trials, |trial| runner.run(seed, trial))?
        }
        AttackKind::Honest => {
            let runner = SessionRunner::new(scheme, AliceStrategy::Honest(bit), mode)?;
            tally(trials, |trial| runner.run(seed, trial))?
        }
    };
    let exact = match kind {
        AttackKind::Bb84Epr => {
            Bb84EprAttack::for_scheme(scheme.clone(), convention)?.exact_accept_probability(bit, mode).clamp(0.0, 1.0)
        }
        _ => exact_accept_probability_in_mode(scheme, kind, bit, mode)?,
    };
    Ok(AttackReport {
        scheme_label: scheme.label().to_string(),
        attack_kind: kind,
        trials,
        accept_count0: t.accepted[0],
        accept_count1: t.accepted[1],
        fidelity_bound: scheme_fidelity(scheme)?,
        exact_accept_prob: Some(exact),
        seed,
    })
}
