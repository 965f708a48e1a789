use super::linalg::{hermitian_eigen, matrix_sqrt};
use super::DensityOperator;
use crate::{Error, Result};

fn same_dim(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<()> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::Shape(format!("density operators of dimension {} and {}", rho0.dim(), rho1.dim())));
    }
    Ok(())
}

/// Uhlmann fidelity `‖√ρ0 √ρ1‖₁`, the maximum of `|⟨ψ0|ψ1⟩|` over
/// purifications. Clamped to `[0, 1]`.
pub fn fidelity(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    same_dim(rho0, rho1)?;
    let product = matrix_sqrt(rho0)? * matrix_sqrt(rho1)?;
    let trace_norm: f64 = product.singular_values().iter().sum();
    Ok(trace_norm.clamp(0.0, 1.0))
}

/// `½ ‖ρ0 − ρ1‖₁`.
pub fn trace_distance(rho0: &DensityOperator, rho1: &DensityOperator) -> Result<f64> {
    same_dim(rho0, rho1)?;
    let (values, _) = hermitian_eigen(&(rho0.matrix() - rho1.matrix()));
    let d = 0.5 * values.iter().map(|v| v.abs()).sum::<f64>();
    Ok(d.clamp(0.0, 1.0))
}

/// Optimal single-shot probability of telling two states apart given their
/// trace distance.
pub fn distinguishing_probability(trace_distance: f64) -> f64 {
    0.5 * (1.0 + trace_distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{c64, real_vector, ComplexMatrix};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ket(v: &[f64]) -> DensityOperator {
        DensityOperator::pure(&real_vector(v)).unwrap()
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityOperator {
        let a = DMatrix::from_fn(dim, dim, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m: ComplexMatrix = &a * a.adjoint();
        let tr = m.trace();
        DensityOperator::new(m / tr).unwrap()
    }

    #[test]
    fn fidelity_of_identical_states_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in 1..5 {
            let rho = random_density(&mut rng, dim);
            assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fidelity_of_orthogonal_pure_states_is_zero() {
        assert!(fidelity(&ket(&[1.0, 0.0]), &ket(&[0.0, 1.0])).unwrap() < 1e-12);
    }

    #[test]
    fn fidelity_mixed_vs_pure() {
        let f = fidelity(&DensityOperator::maximally_mixed(2), &ket(&[1.0, 0.0])).unwrap();
        assert!((f - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let r = fidelity(&DensityOperator::maximally_mixed(2), &DensityOperator::maximally_mixed(3));
        assert!(matches!(r, Err(Error::Shape(_))));
        let r = trace_distance(&DensityOperator::maximally_mixed(2), &DensityOperator::maximally_mixed(3));
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn trace_distance_examples() {
        let mixed = DensityOperator::maximally_mixed(2);
        assert!(trace_distance(&mixed, &mixed).unwrap() < 1e-15);
        assert!((trace_distance(&ket(&[1.0, 0.0]), &ket(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-12);
        assert!((trace_distance(&mixed, &ket(&[1.0, 0.0])).unwrap() - 0.5).abs() < 1e-12);
        assert!((distinguishing_probability(0.5) - 0.75).abs() < 1e-15);
    }
}
