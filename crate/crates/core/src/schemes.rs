//! Concrete commitment schemes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::protocol::photon::{photon_value, polarization};
use crate::protocol::{Branch, CommitmentScheme, CommittedBit};
use crate::qmath::{c64, kron_vec, real, ComplexVector, DEFAULT_DIM_CAP};
use crate::{Error, Result};

/// Largest photon count accepted for the photon scheme.
pub const MAX_PHOTONS: usize = 10;

/// Seed behind the random schemes of [`scheme_corpus`].
pub const CORPUS_SEED: u64 = 0x5eed_c0de;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bb84Params {
    /// Security parameter: number of photons.
    pub s: usize,
}

impl Bb84Params {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_PHOTONS).contains(&self.s) {
            return Err(Error::InvalidParameter(format!("s must be in 1..={MAX_PHOTONS}, got {}", self.s)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedPairParams {
    /// Tilt angle in radians, `0 <= epsilon < π/4`.
    pub epsilon: f64,
}

impl TiltedPairParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon < std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidParameter(format!("epsilon must be in [0, pi/4), got {}", self.epsilon)));
        }
        Ok(())
    }

    /// `δ = 1 − cos ε`, the fidelity deficit between the two reduced states.
    pub fn delta(&self) -> f64 {
        1.0 - self.epsilon.cos()
    }
}

/// Photon commitment: `s` photons, rectilinear for bit 0 and diagonal for
/// bit 1, each polarization uniformly random. Alice's A-register records
/// the polarization choices in the computational basis.
pub fn bb84_scheme(params: Bb84Params) -> Result<CommitmentScheme> {
    bb84_scheme_capped(params, DEFAULT_DIM_CAP)
}

pub fn bb84_scheme_capped(params: Bb84Params, cap: usize) -> Result<CommitmentScheme> {
    params.validate()?;
    let s = params.s;
    let requested = 1usize << (2 * s);
    if requested > cap {
        return Err(Error::DimensionCap { requested, cap });
    }
    let dim = 1usize << s;
    let amp = real((dim as f64).sqrt().recip());
    let branch = |basis: CommittedBit| {
        let evidence: Vec<ComplexVector> = (0..dim)
            .map(|i| {
                (0..s).fold(DVector::from_element(1, real(1.0)), |acc, q| {
                    kron_vec(&acc, &polarization(basis, photon_value(i, s, q)))
                })
            })
            .collect();
        Branch::new(vec![amp; dim], DMatrix::identity(dim, dim), evidence)
    };
    let scheme =
        CommitmentScheme::new(format!("bb84(s={s})"), branch(CommittedBit::Zero)?, branch(CommittedBit::One)?)?;
    Ok(scheme.with_photons(s))
}

/// Two-qubit family with `|0⟩ = (|00⟩ + |11⟩)/√2` and
/// `|1⟩ = cos γ |00⟩ + sin γ |11⟩`, `γ = π/4 + ε`. The reduced states are
/// diagonal and their fidelity is `cos ε`.
pub fn tilted_pair_scheme(params: TiltedPairParams) -> Result<CommitmentScheme> {
    params.validate()?;
    let gamma = std::f64::consts::FRAC_PI_4 + params.epsilon;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let id = DMatrix::identity(2, 2);
    let basis = vec![polarization(CommittedBit::Zero, 0), polarization(CommittedBit::Zero, 1)];
    let zero = Branch::new(vec![real(s), real(s)], id.clone(), basis.clone())?;
    let one = Branch::new(vec![real(gamma.cos()), real(gamma.sin())], id, basis)?;
    CommitmentScheme::new(format!("tilted-pair(epsilon={})", params.epsilon), zero, one)
}

/// Shape of a random scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RandomSchemeParams {
    pub dim_a: usize,
    pub dim_b: usize,
    /// Terms per branch, at most `dim_a`.
    pub terms: usize,
    pub seed: u64,
}

/// Random scheme: A-bases from orthonormalized Gaussian matrices, evidence
/// from normalized Gaussian vectors, amplitudes from normalized positive reals.
pub fn random_scheme(params: RandomSchemeParams) -> Result<CommitmentScheme> {
    let RandomSchemeParams { dim_a, dim_b, terms, seed } = params;
    if terms == 0 || terms > dim_a || dim_b == 0 {
        return Err(Error::InvalidParameter(format!("random scheme {dim_a}x{dim_b} with {terms} terms")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = |rng: &mut ChaCha8Rng| c64(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let branch = |rng: &mut ChaCha8Rng| {
        let g = DMatrix::from_fn(dim_a, dim_a, |_, _| gaussian(rng));
        let q = g.qr().q();
        let basis = q.columns(0, terms).into_owned();
        let evidence: Vec<ComplexVector> = (0..terms)
            .map(|_| {
                let v = DVector::from_fn(dim_b, |_, _| gaussian(rng));
                let n = v.norm();
                v / real(n)
            })
            .collect();
        let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let amps = raw.iter().map(|x| real(x / norm)).collect();
        Branch::new(amps, basis, evidence)
    };
    let zero = branch(&mut rng)?;
    let one = branch(&mut rng)?;
    CommitmentScheme::new(format!("random({dim_a}x{dim_b},terms={terms},seed={seed})"), zero, one)
}

/// Serializable description from which a scheme can be rebuilt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeSpec {
    Bb84(Bb84Params),
    TiltedPair(TiltedPairParams),
    Random(RandomSchemeParams),
}

impl SchemeSpec {
    pub fn build(&self) -> Result<CommitmentScheme> {
        self.build_capped(DEFAULT_DIM_CAP)
    }

    pub fn build_capped(&self, cap: usize) -> Result<CommitmentScheme> {
        match *self {
            SchemeSpec::Bb84(p) => bb84_scheme_capped(p, cap),
            SchemeSpec::TiltedPair(p) => tilted_pair_scheme(p),
            SchemeSpec::Random(p) => {
                let requested = p.dim_a.saturating_mul(p.dim_b);
                if requested > cap {
                    return Err(Error::DimensionCap { requested, cap });
                }
                random_scheme(p)
            }
        }
    }
}

/// Shapes of the random fixture schemes; one leaves part of the A-space unused.
const RANDOM_SHAPES: [(usize, usize, usize); 5] = [(2, 2, 2), (3, 2, 3), (3, 3, 2), (4, 3, 4), (2, 4, 2)];

/// Descriptions of the fixture corpus: photon schemes for s = 1..4, tilted
/// pairs at five angles, five random schemes.
pub fn corpus_specs() -> Vec<SchemeSpec> {
    let mut specs: Vec<SchemeSpec> = (1..=4).map(|s| SchemeSpec::Bb84(Bb84Params { s })).collect();
    specs.extend([0.0, 0.05, 0.1, 0.2, 0.5].map(|epsilon| SchemeSpec::TiltedPair(TiltedPairParams { epsilon })));
    specs.extend(RANDOM_SHAPES.iter().enumerate().map(|(k, &(dim_a, dim_b, terms))| {
        SchemeSpec::Random(RandomSchemeParams { dim_a, dim_b, terms, seed: CORPUS_SEED + k as u64 })
    }));
    specs
}

pub fn scheme_corpus() -> Vec<CommitmentScheme> {
    corpus_specs().iter().map(|s| s.build().expect("corpus schemes are valid")).collect()
}
