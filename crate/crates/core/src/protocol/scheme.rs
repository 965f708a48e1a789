use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::qmath::{kron_vec, BipartitePureState, ComplexMatrix, ComplexVector, C64, TOLERANCE};
use crate::{Error, Result};

/// The bit Alice commits to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CommittedBit {
    Zero,
    One,
}

impl CommittedBit {
    pub const BOTH: [CommittedBit; 2] = [CommittedBit::Zero, CommittedBit::One];

    pub fn index(self) -> usize {
        match self {
            CommittedBit::Zero => 0,
            CommittedBit::One => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            CommittedBit::Zero => CommittedBit::One,
            CommittedBit::One => CommittedBit::Zero,
        }
    }
}

impl TryFrom<u8> for CommittedBit {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(CommittedBit::Zero),
            1 => Ok(CommittedBit::One),
            other => Err(Error::InvalidParameter(format!("committed bit must be 0 or 1, got {other}"))),
        }
    }
}

impl From<CommittedBit> for u8 {
    fn from(b: CommittedBit) -> u8 {
        b.index() as u8
    }
}

impl std::fmt::Display for CommittedBit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One side of a scheme: `Σ_i amp_i |e_i⟩_A ⊗ |φ_i⟩_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    amplitudes: Vec<C64>,
    basis_a: ComplexMatrix,
    evidence: Vec<ComplexVector>,
}

impl Branch {
    /// `basis_a` holds the orthonormal vectors `|e_i⟩` as columns; the
    /// evidence vectors must be normalized but need not be orthogonal.
    pub fn new(amplitudes: Vec<C64>, basis_a: ComplexMatrix, evidence: Vec<ComplexVector>) -> Result<Self> {
        let n = amplitudes.len();
        if n == 0 {
            return Err(Error::InvalidScheme("branch has no terms".into()));
        }
        if basis_a.ncols() != n || evidence.len() != n {
            return Err(Error::InvalidScheme(format!(
                "{} amplitudes, {} A-vectors, {} evidence states",
                n,
                basis_a.ncols(),
                evidence.len()
            )));
        }
        let weight: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (weight - 1.0).abs() > TOLERANCE {
            return Err(Error::InvalidScheme(format!("amplitude weights sum to {weight}")));
        }
        let gram = basis_a.ad_mul(&basis_a);
        let dev = (gram - ComplexMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > TOLERANCE {
            return Err(Error::InvalidScheme(format!("A-basis not orthonormal (deviation {dev:e})")));
        }
        let dim_b = evidence[0].len();
        for (i, phi) in evidence.iter().enumerate() {
            if phi.len() != dim_b {
                return Err(Error::InvalidScheme(format!("evidence state {i} has dimension {}", phi.len())));
            }
            if (phi.norm() - 1.0).abs() > TOLERANCE {
                return Err(Error::InvalidScheme(format!("evidence state {i} has norm {}", phi.norm())));
            }
        }
        Ok(Self { amplitudes, basis_a, evidence })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis_a(&self) -> &ComplexMatrix {
        &self.basis_a
    }

    pub fn evidence(&self) -> &[ComplexVector] {
        &self.evidence
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Probability weights `|amp_i|²`.
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// A one-way commitment scheme: the two states Alice may prepare.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentScheme {
    label: String,
    dim_a: usize,
    dim_b: usize,
    branches: [Branch; 2],
    photons: Option<usize>,
}

impl CommitmentScheme {
    pub fn new(label: impl Into<String>, zero: Branch, one: Branch) -> Result<Self> {
        let dim_a = zero.basis_a.nrows();
        let dim_b = zero.evidence[0].len();
        if one.basis_a.nrows() != dim_a || one.evidence[0].len() != dim_b {
            return Err(Error::InvalidScheme(format!(
                "branches disagree on dimensions: {}x{} vs {}x{}",
                dim_a,
                dim_b,
                one.basis_a.nrows(),
                one.evidence[0].len()
            )));
        }
        Ok(Self { label: label.into(), dim_a, dim_b, branches: [zero, one], photons: None })
    }

    /// Marks the B-register as `photons` polarization qubits, most
    /// significant first; bit 0 uses the rectilinear basis and bit 1 the
    /// diagonal one.
    pub(crate) fn with_photons(mut self, photons: usize) -> Self {
        debug_assert_eq!(1usize << photons, self.dim_b);
        self.photons = Some(photons);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn photons(&self) -> Option<usize> {
        self.photons
    }

    pub fn branch(&self, bit: CommittedBit) -> &Branch {
        &self.branches[bit.index()]
    }

    /// Evidence state for an announced bit and index.
    pub fn evidence(&self, bit: CommittedBit, index: usize) -> Result<&ComplexVector> {
        let branch = self.branch(bit);
        branch.evidence.get(index).ok_or(Error::IndexOutOfRange { index, len: branch.len() })
    }
}

/// `Σ_i amp_i |e_i⟩ ⊗ |φ_i⟩` for the requested bit.
pub fn committed_state(scheme: &CommitmentScheme, bit: CommittedBit) -> Result<BipartitePureState> {
    let branch = scheme.branch(bit);
    let mut amps = DVector::zeros(scheme.dim_a * scheme.dim_b);
    for (i, amp) in branch.amplitudes.iter().enumerate() {
        let e = branch.basis_a.column(i).into_owned();
        amps += kron_vec(&e, &branch.evidence[i]) * *amp;
    }
    // Non-orthogonal evidence is fine: the A-vectors are orthonormal, so the
    // norm is Σ|amp_i|² = 1.
    BipartitePureState::new(scheme.dim_a, scheme.dim_b, amps)
}
