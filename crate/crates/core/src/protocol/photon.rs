//! Polarization qubits for photon-based schemes.
//!
//! A register of `n` photons is a vector of length `2^n`; photon 0 is the
//! most significant bit of the index.

use rand::Rng;

use super::CommittedBit;
use crate::qmath::{real, real_vector, ComplexVector};

/// `|H⟩, |V⟩` for the rectilinear basis (bit 0), `|45°⟩, |135°⟩` for the
/// diagonal basis (bit 1).
pub fn polarization(basis: CommittedBit, value: u8) -> ComplexVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, value) {
        (CommittedBit::Zero, 0) => real_vector(&[1.0, 0.0]),
        (CommittedBit::Zero, _) => real_vector(&[0.0, 1.0]),
        (CommittedBit::One, 0) => real_vector(&[s, s]),
        (CommittedBit::One, _) => real_vector(&[s, -s]),
    }
}

/// Value (0 or 1) of photon `q` encoded in `index`.
pub fn photon_value(index: usize, photons: usize, q: usize) -> u8 {
    ((index >> (photons - 1 - q)) & 1) as u8
}

/// Index whose photon values are `values`, photon 0 first.
pub fn index_from_values(values: &[u8]) -> usize {
    values.iter().fold(0, |acc, &v| (acc << 1) | v as usize)
}

/// Projects photon `q` of `state` onto `target` in place and returns the
/// squared norm of the result (relative to the input's squared norm).
pub fn project_photon(state: &mut ComplexVector, photons: usize, q: usize, target: &ComplexVector) -> f64 {
    let before = state.norm_squared();
    let stride = 1usize << (photons - 1 - q);
    for idx in 0..state.len() {
        if idx & stride != 0 {
            continue;
        }
        let (lo, hi) = (state[idx], state[idx | stride]);
        let amp = target[0].conj() * lo + target[1].conj() * hi;
        state[idx] = target[0] * amp;
        state[idx | stride] = target[1] * amp;
    }
    if before == 0.0 {
        0.0
    } else {
        state.norm_squared() / before
    }
}

/// Measures photon `q` in `basis`, collapsing `state`, and returns the outcome.
pub fn measure_photon<R: Rng + ?Sized>(
    state: &mut ComplexVector,
    photons: usize,
    q: usize,
    basis: CommittedBit,
    rng: &mut R,
) -> u8 {
    let mut first = state.clone();
    let p0 = project_photon(&mut first, photons, q, &polarization(basis, 0));
    let u: f64 = rng.random();
    let (outcome, mut collapsed) = if u < p0 {
        (0, first)
    } else {
        let mut second = state.clone();
        project_photon(&mut second, photons, q, &polarization(basis, 1));
        (1, second)
    };
    let norm = collapsed.norm();
    if norm > 0.0 {
        collapsed /= real(norm);
    }
    *state = collapsed;
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::kron_vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_bits_are_msb_first() {
        assert_eq!(photon_value(0b10, 2, 0), 1);
        assert_eq!(photon_value(0b10, 2, 1), 0);
        assert_eq!(index_from_values(&[1, 0, 1]), 5);
    }

    #[test]
    fn projection_on_product_state() {
        let h = polarization(CommittedBit::Zero, 0);
        let v = polarization(CommittedBit::Zero, 1);
        let d = polarization(CommittedBit::One, 0);
        let mut hv = kron_vec(&h, &v);
        assert!((project_photon(&mut hv.clone(), 2, 0, &h) - 1.0).abs() < 1e-15);
        assert!(project_photon(&mut hv.clone(), 2, 1, &h).abs() < 1e-15);
        assert!((project_photon(&mut hv, 2, 1, &d) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measurement_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = polarization(CommittedBit::Zero, 0);
        let mut ones = 0;
        for _ in 0..2000 {
            let mut state = h.clone();
            let o = measure_photon(&mut state, 1, 0, CommittedBit::One, &mut rng);
            assert!((state - polarization(CommittedBit::One, o)).norm() < 1e-12);
            ones += o as usize;
        }
        assert!((ones as f64 / 2000.0 - 0.5).abs() < 0.05);
    }
}
