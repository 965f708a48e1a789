//! The generic one-way commitment protocol.
//!
//! 1. Alice prepares `|b⟩ = Σ_i amp_i |e_i⟩_A ⊗ |φ_i⟩_B`.
//! 2. An honest Alice measures register A and learns `i`.
//! 3. Register B goes to Bob.
//! 4. Alice opens by announcing `b` and `i`.
//! 5. Bob checks his register against the announcement.

pub mod photon;
mod scheme;

pub use scheme::{committed_state, Branch, CommitmentScheme, CommittedBit};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::attacks::DelayedChoicePlan;
use crate::qmath::{BipartitePureState, ComplexVector};
use crate::{Error, Result};

/// How Bob handles the register he receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobMode {
    /// Keep the register and apply the projective test for the announced
    /// evidence state after the opening.
    #[default]
    Store,
    /// Measure every photon at commit time in a random basis, then compare
    /// with the announcement. Photon schemes only.
    MeasureAtCommit,
}

impl BobMode {
    pub const ALL: [BobMode; 2] = [BobMode::Store, BobMode::MeasureAtCommit];

    pub fn name(self) -> &'static str {
        match self {
            BobMode::Store => "store",
            BobMode::MeasureAtCommit => "measure-at-commit",
        }
    }
}

impl std::str::FromStr for BobMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown bob mode `{s}` (expected store or measure-at-commit)"))
        })
    }
}

/// What Alice kept after committing.
#[derive(Debug, Clone, PartialEq)]
pub enum HeldRegister {
    /// She measured register A and got this index.
    Measured(usize),
    /// She skipped the measurement; the joint state is still coherent.
    Coherent(BipartitePureState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AliceRecord {
    pub bit: CommittedBit,
    pub held: HeldRegister,
}

/// Alice's opening message: the bit and the index into that bit's evidence list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Announcement {
    pub bit: CommittedBit,
    pub index: usize,
}

impl Announcement {
    pub fn new(scheme: &CommitmentScheme, bit: CommittedBit, index: usize) -> Result<Self> {
        let len = scheme.branch(bit).len();
        if index >= len {
            return Err(Error::IndexOutOfRange { index, len });
        }
        Ok(Self { bit, index })
    }
}

/// Bit recorded at commit time, or `delayed` when Alice postponed her choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommitChoice {
    Bit(CommittedBit),
    Delayed,
}

impl Serialize for CommitChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CommitChoice::Bit(b) => s.serialize_u8((*b).into()),
            CommitChoice::Delayed => s.serialize_str("delayed"),
        }
    }
}

/// Record of one complete session.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Transcript {
    pub scheme_label: String,
    pub bit_committed: CommitChoice,
    pub bit_announced: CommittedBit,
    /// `None` when Alice's outcome fell outside the announced bit's index
    /// set and she had nothing valid to announce.
    pub outcome_index: Option<usize>,
    pub bob_mode: BobMode,
    pub accepted: bool,
    pub seed: u64,
    pub trial: u64,
}

/// Alice's behavior for a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceStrategy {
    Honest(CommittedBit),
    /// Prepare `|0⟩`, skip the measurement, choose the bit at opening.
    DelayedChoice(CommittedBit),
    /// Commit honestly to the other bit, then announce this one with a
    /// uniformly guessed index.
    NaiveCheat(CommittedBit),
}

impl AliceStrategy {
    pub fn announced_bit(self) -> CommittedBit {
        match self {
            AliceStrategy::Honest(b) | AliceStrategy::DelayedChoice(b) | AliceStrategy::NaiveCheat(b) => b,
        }
    }
}

/// Per-trial random stream: ChaCha8 keyed by the master seed, with the
/// trial index as the stream id.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Inverse-CDF sample over `weights` in ascending index order. Returns
/// `None` when the draw lands beyond the total weight.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Some(i);
        }
    }
    None
}

/// Steps 1–3 for an honest Alice: sample `i` with probability `|amp_i|²`
/// and hand Bob the collapsed evidence state `|φ_i⟩`.
pub fn honest_commit<R: Rng + ?Sized>(
    scheme: &CommitmentScheme,
    bit: CommittedBit,
    rng: &mut R,
) -> (AliceRecord, ComplexVector) {
    let branch = scheme.branch(bit);
    let weights = branch.weights();
    let total: f64 = weights.iter().sum();
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let index =
        sample_index(&normalized, rng).unwrap_or_else(|| normalized.iter().rposition(|&w| w > 0.0).unwrap_or(0));
    let evidence = branch.evidence()[index].clone();
    (AliceRecord { bit, held: HeldRegister::Measured(index) }, evidence)
}

/// Step 4 for an honest Alice.
pub fn open(record: &AliceRecord) -> Result<Announcement> {
    match record.held {
        HeldRegister::Measured(index) => Ok(Announcement { bit: record.bit, index }),
        HeldRegister::Coherent(_) => Err(Error::DelayedMeasurementRecord),
    }
}

fn check_evidence(scheme: &CommitmentScheme, evidence: &ComplexVector) -> Result<()> {
    if evidence.len() != scheme.dim_b() {
        return Err(Error::Shape(format!(
            "evidence has dimension {}, scheme B-register has {}",
            evidence.len(),
            scheme.dim_b()
        )));
    }
    Ok(())
}

fn photons_for(scheme: &CommitmentScheme) -> Result<usize> {
    scheme.photons().ok_or(Error::UnsupportedBobMode(BobMode::MeasureAtCommit.name()))
}

/// Step 5: Bob's test of the register he holds against the announcement.
pub fn bob_verify<R: Rng + ?Sized>(
    scheme: &CommitmentScheme,
    announcement: &Announcement,
    evidence: &ComplexVector,
    mode: BobMode,
    rng: &mut R,
) -> Result<bool> {
    check_evidence(scheme, evidence)?;
    let expected = scheme.evidence(announcement.bit, announcement.index)?;
    match mode {
        BobMode::Store => {
            let p = expected.dotc(evidence).norm_sqr() / evidence.norm_squared();
            Ok(rng.random::<f64>() < p)
        }
        BobMode::MeasureAtCommit => {
            let photons = photons_for(scheme)?;
            let mut state = evidence.clone();
            let mut record = Vec::with_capacity(photons);
            for q in 0..photons {
                let basis = if rng.random::<bool>() { CommittedBit::One } else { CommittedBit::Zero };
                let outcome = photon::measure_photon(&mut state, photons, q, basis, rng);
                record.push((basis, outcome));
            }
            Ok(record.iter().enumerate().all(|(q, &(basis, outcome))| {
                basis != announcement.bit || outcome == photon::photon_value(announcement.index, photons, q)
            }))
        }
    }
}

/// Exact probability that [`bob_verify`] accepts `evidence` for this
/// announcement.
///
/// In measure-at-commit mode each photon is checked with probability ½
/// (Bob's basis matches the announced one), so the acceptance operator is
/// `⊗_q (½ I + ½ P_q)` with `P_q` the projector onto the announced
/// polarization of photon `q`.
pub fn acceptance_probability(
    scheme: &CommitmentScheme,
    announcement: &Announcement,
    evidence: &ComplexVector,
    mode: BobMode,
) -> Result<f64> {
    check_evidence(scheme, evidence)?;
    let expected = scheme.evidence(announcement.bit, announcement.index)?;
    let norm_sq = evidence.norm_squared();
    match mode {
        BobMode::Store => Ok(expected.dotc(evidence).norm_sqr() / norm_sq),
        BobMode::MeasureAtCommit => {
            let photons = photons_for(scheme)?;
            let mut image = evidence.clone();
            for q in 0..photons {
                let target =
                    photon::polarization(announcement.bit, photon::photon_value(announcement.index, photons, q));
                let mut projected = image.clone();
                photon::project_photon(&mut projected, photons, q, &target);
                image = (image + projected) * crate::qmath::real(0.5);
            }
            Ok(evidence.dotc(&image).re / norm_sq)
        }
    }
}

/// A session driver with any per-scheme attack preparation done once.
pub struct SessionRunner<'a> {
    scheme: &'a CommitmentScheme,
    strategy: AliceStrategy,
    mode: BobMode,
    plan: Option<DelayedChoicePlan>,
}

impl<'a> SessionRunner<'a> {
    pub fn new(scheme: &'a CommitmentScheme, strategy: AliceStrategy, mode: BobMode) -> Result<Self> {
        if mode == BobMode::MeasureAtCommit {
            photons_for(scheme)?;
        }
        let plan = match strategy {
            AliceStrategy::DelayedChoice(_) => Some(DelayedChoicePlan::prepare(scheme)?),
            _ => None,
        };
        Ok(Self { scheme, strategy, mode, plan })
    }

    /// Delayed-choice runner around an already prepared plan.
    pub fn with_plan(
        scheme: &'a CommitmentScheme,
        bit: CommittedBit,
        mode: BobMode,
        plan: DelayedChoicePlan,
    ) -> Result<Self> {
        if mode == BobMode::MeasureAtCommit {
            photons_for(scheme)?;
        }
        Ok(Self { scheme, strategy: AliceStrategy::DelayedChoice(bit), mode, plan: Some(plan) })
    }

    pub fn plan(&self) -> Option<&DelayedChoicePlan> {
        self.plan.as_ref()
    }

    /// Runs commit, open and verify for one trial.
    pub fn run(&self, seed: u64, trial: u64) -> Result<Transcript> {
        let mut rng = trial_rng(seed, trial);
        let scheme = self.scheme;
        let (bit_committed, announcement, evidence) = match self.strategy {
            AliceStrategy::Honest(bit) => {
                let (record, evidence) = honest_commit(scheme, bit, &mut rng);
                (CommitChoice::Bit(bit), Some(open(&record)?), Some(evidence))
            }
            AliceStrategy::DelayedChoice(bit) => {
                let plan = self.plan.as_ref().expect("plan prepared for delayed choice");
                let opening = plan.open(scheme, bit, &mut rng);
                (CommitChoice::Delayed, opening.announcement, opening.held_b)
            }
            AliceStrategy::NaiveCheat(bit) => {
                let (_, evidence) = honest_commit(scheme, bit.flipped(), &mut rng);
                let index = rng.random_range(0..scheme.branch(bit).len());
                (CommitChoice::Bit(bit.flipped()), Some(Announcement { bit, index }), Some(evidence))
            }
        };
        let accepted = match (&announcement, &evidence) {
            (Some(ann), Some(ev)) => bob_verify(scheme, ann, ev, self.mode, &mut rng)?,
            _ => false,
        };
        Ok(Transcript {
            scheme_label: scheme.label().to_string(),
            bit_committed,
            bit_announced: self.strategy.announced_bit(),
            outcome_index: announcement.map(|a| a.index),
            bob_mode: self.mode,
            accepted,
            seed,
            trial,
        })
    }
}

/// One full session; identical inputs give identical transcripts.
pub fn run_session(
    scheme: &CommitmentScheme,
    strategy: AliceStrategy,
    mode: BobMode,
    seed: u64,
    trial: u64,
) -> Result<Transcript> {
    SessionRunner::new(scheme, strategy, mode)?.run(seed, trial)
}
