//! Attacks specific to the photon scheme.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::montecarlo::{tally, Tally};
use crate::protocol::photon::{index_from_values, measure_photon, polarization};
use crate::protocol::{
    bob_verify, trial_rng, AliceStrategy, Announcement, BobMode, CommitChoice, CommitmentScheme, CommittedBit,
    SessionRunner, Transcript,
};
use crate::qmath::{kron_vec, real, real_vector, ComplexVector};
use crate::schemes::{bb84_scheme, Bb84Params};
use crate::{Error, Result};

/// Which maximally entangled pair Alice prepares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairConvention {
    /// `(|HH⟩ + |VV⟩)/√2`: both halves agree in either basis, Alice
    /// announces her own outcome.
    #[default]
    PhiPlus,
    /// `(|HV⟩ − |VH⟩)/√2`: halves are always perpendicular, Alice announces
    /// the polarization orthogonal to hers.
    Singlet,
}

impl PairConvention {
    pub fn name(self) -> &'static str {
        match self {
            PairConvention::PhiPlus => "phi-plus",
            PairConvention::Singlet => "singlet",
        }
    }

    /// Pair state with Alice's photon as the high bit.
    pub fn pair_state(self) -> ComplexVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PairConvention::PhiPlus => real_vector(&[s, 0.0, 0.0, s]),
            PairConvention::Singlet => real_vector(&[0.0, s, -s, 0.0]),
        }
    }

    /// Polarization Alice announces given her own outcome.
    pub fn announce(self, alice_outcome: u8) -> u8 {
        match self {
            PairConvention::PhiPlus => alice_outcome,
            PairConvention::Singlet => 1 - alice_outcome,
        }
    }
}

impl std::str::FromStr for PairConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [PairConvention::PhiPlus, PairConvention::Singlet].into_iter().find(|c| c.name() == s).ok_or_else(|| {
            Error::InvalidParameter(format!("unknown pair convention `{s}` (expected phi-plus or singlet)"))
        })
    }
}

/// The textbook figure `(1/2)^{s/2}`: Bob measures about half the photons
/// in the other basis and each is a coin flip.
pub fn naive_heuristic_probability(s: usize) -> f64 {
    0.5f64.powf(s as f64 / 2.0)
}

/// Exact success probability of the naive cheat against a measuring Bob.
///
/// Per photon: Alice sent a rectilinear photon and announces a guessed
/// diagonal polarization; Bob's check applies `½ I + ½ P_guess`. Averaging
/// `⟨x|(½ I + ½ P_g)|x⟩` over the prepared `x` and the guess `g` gives the
/// per-photon factor, and photons are independent.
pub fn naive_exact_probability(s: usize) -> f64 {
    let committed = CommittedBit::Zero;
    let announced = CommittedBit::One;
    let mut per_photon = 0.0;
    for x in 0..2 {
        for g in 0..2 {
            let overlap = polarization(announced, g).dotc(&polarization(committed, x)).norm_sqr();
            per_photon += 0.25 * (0.5 + 0.5 * overlap);
        }
    }
    per_photon.powi(s as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NaiveCheatEstimate {
    pub s: usize,
    pub exact: f64,
    pub heuristic: f64,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub std_error: f64,
}

/// Commit rectilinear, announce diagonal with guessed polarizations, Bob
/// measuring at commit time.
pub fn naive_cheat_bb84(s: usize, trials: u64, seed: u64) -> Result<NaiveCheatEstimate> {
    let scheme = bb84_scheme(Bb84Params { s })?;
    let runner = SessionRunner::new(&scheme, AliceStrategy::NaiveCheat(CommittedBit::One), BobMode::MeasureAtCommit)?;
    let t: Tally = tally(trials, |trial| runner.run(seed, trial))?;
    Ok(NaiveCheatEstimate {
        s,
        exact: naive_exact_probability(s),
        heuristic: naive_heuristic_probability(s),
        trials,
        successes: t.total_accepted(),
        rate: t.rate(),
        std_error: t.std_error(),
    })
}

/// Alice keeps one half of each of `s` entangled pairs and measures them
/// only when she opens.
#[derive(Debug, Clone)]
pub struct Bb84EprAttack {
    scheme: CommitmentScheme,
    convention: PairConvention,
}

impl Bb84EprAttack {
    pub fn new(s: usize, convention: PairConvention) -> Result<Self> {
        Self::for_scheme(bb84_scheme(Bb84Params { s })?, convention)
    }

    pub fn for_scheme(scheme: CommitmentScheme, convention: PairConvention) -> Result<Self> {
        if scheme.photons().is_none() {
            return Err(Error::InvalidScheme(format!("{} is not a photon scheme", scheme.label())));
        }
        Ok(Self { scheme, convention })
    }

    pub fn scheme(&self) -> &CommitmentScheme {
        &self.scheme
    }

    fn photons(&self) -> usize {
        self.scheme.photons().expect("checked in constructor")
    }

    pub fn run(&self, chosen_bit: CommittedBit, mode: BobMode, seed: u64, trial: u64) -> Result<Transcript> {
        let mut rng = trial_rng(seed, trial);
        let photons = self.photons();
        let (announced, accepted) = match mode {
            BobMode::Store => self.run_store(chosen_bit, photons, &mut rng)?,
            BobMode::MeasureAtCommit => self.run_measuring(chosen_bit, photons, &mut rng),
        };
        Ok(Transcript {
            scheme_label: self.scheme.label().to_string(),
            bit_committed: CommitChoice::Delayed,
            bit_announced: chosen_bit,
            outcome_index: Some(index_from_values(&announced)),
            bob_mode: mode,
            accepted,
            seed,
            trial,
        })
    }

    /// Alice measures her halves at opening; Bob then tests the whole
    /// register against the announced evidence state.
    fn run_store<R: Rng + ?Sized>(&self, bit: CommittedBit, photons: usize, rng: &mut R) -> Result<(Vec<u8>, bool)> {
        let mut announced = Vec::with_capacity(photons);
        let mut bob_register = real_vector(&[1.0]);
        for _ in 0..photons {
            let mut pair = self.convention.pair_state();
            let outcome = measure_photon(&mut pair, 2, 0, bit, rng);
            let alice = polarization(bit, outcome);
            let bob_half = ComplexVector::from_fn(2, |m, _| alice[0].conj() * pair[m] + alice[1].conj() * pair[2 + m]);
            announced.push(self.convention.announce(outcome));
            bob_register = kron_vec(&bob_register, &bob_half);
        }
        let ann = Announcement::new(&self.scheme, bit, index_from_values(&announced))?;
        let accepted = bob_verify(&self.scheme, &ann, &bob_register, BobMode::Store, rng)?;
        Ok((announced, accepted))
    }

    /// Bob measures his halves in random bases at commit time; Alice
    /// measures hers afterwards.
    fn run_measuring<R: Rng + ?Sized>(&self, bit: CommittedBit, photons: usize, rng: &mut R) -> (Vec<u8>, bool) {
        let mut announced = Vec::with_capacity(photons);
        let mut accepted = true;
        for _ in 0..photons {
            let mut pair = self.convention.pair_state();
            let bob_basis = if rng.random::<bool>() { CommittedBit::One } else { CommittedBit::Zero };
            let bob_outcome = measure_photon(&mut pair, 2, 1, bob_basis, rng);
            let alice_outcome = measure_photon(&mut pair, 2, 0, bit, rng);
            let claim = self.convention.announce(alice_outcome);
            announced.push(claim);
            if bob_basis == bit && bob_outcome != claim {
                accepted = false;
            }
        }
        (announced, accepted)
    }

    /// Exact acceptance probability, pair by pair.
    pub fn exact_accept_probability(&self, bit: CommittedBit, mode: BobMode) -> f64 {
        let mut per_pair = 0.0;
        for outcome in 0..2u8 {
            let alice = polarization(bit, outcome);
            let pair = self.convention.pair_state();
            let bob_half = ComplexVector::from_fn(2, |m, _| alice[0].conj() * pair[m] + alice[1].conj() * pair[2 + m]);
            let p = bob_half.norm_squared();
            if p == 0.0 {
                continue;
            }
            let bob_half = bob_half / real(p.sqrt());
            let overlap = polarization(bit, self.convention.announce(outcome)).dotc(&bob_half).norm_sqr();
            let pass = match mode {
                BobMode::Store => overlap,
                BobMode::MeasureAtCommit => 0.5 + 0.5 * overlap,
            };
            per_pair += p * pass;
        }
        per_pair.powi(self.photons() as i32)
    }
}

/// One session of the pair attack.
pub fn bb84_epr_attack(
    s: usize,
    chosen_bit: CommittedBit,
    mode: BobMode,
    convention: PairConvention,
    seed: u64,
) -> Result<Transcript> {
    Bb84EprAttack::new(s, convention)?.run(chosen_bit, mode, seed, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_closed_form_small_cases() {
        assert!((naive_exact_probability(1) - 0.75).abs() < 1e-15);
        assert!((naive_exact_probability(2) - 0.5625).abs() < 1e-15);
        assert!((naive_heuristic_probability(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pair_conventions_agree_on_statistics() {
        for convention in [PairConvention::PhiPlus, PairConvention::Singlet] {
            let attack = Bb84EprAttack::new(3, convention).unwrap();
            for bit in CommittedBit::BOTH {
                for mode in [BobMode::Store, BobMode::MeasureAtCommit] {
                    assert!((attack.exact_accept_probability(bit, mode) - 1.0).abs() < 1e-12);
                    for trial in 0..200 {
                        assert!(attack.run(bit, mode, 17, trial).unwrap().accepted);
                    }
                }
            }
        }
    }

    #[test]
    fn epr_attack_requires_photons() {
        let tilted = crate::schemes::tilted_pair_scheme(crate::schemes::TiltedPairParams { epsilon: 0.1 }).unwrap();
        assert!(Bb84EprAttack::for_scheme(tilted, PairConvention::PhiPlus).is_err());
    }

    #[test]
    fn epr_transcript_is_reproducible() {
        let a = bb84_epr_attack(4, CommittedBit::One, BobMode::Store, PairConvention::PhiPlus, 11).unwrap();
        let b = bb84_epr_attack(4, CommittedBit::One, BobMode::Store, PairConvention::PhiPlus, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.accepted);
    }
}
