//! Reference implementations used only by the tests. None of them call the
//! library's decompositions: eigenvalues come from a hand-written Jacobi
//! sweep, fidelities from direct maximization over purifications, and the
//! naive-cheat probability from exhaustive enumeration.

#![allow(dead_code)]

use nalgebra::DMatrix;
use qbc_core::qmath::{c64, ComplexMatrix, DensityOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Modified Gram-Schmidt on the columns of a square Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let mut m = gaussian_matrix(rng, dim, dim);
    for j in 0..dim {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let ck = m.column(k).into_owned();
            let mut cj = m.column_mut(j);
            cj -= ck * proj;
        }
        let n = m.column(j).norm();
        m.column_mut(j).scale_mut(1.0 / n);
    }
    m
}

/// Factor `A` (dim × rank) with `ρ = A A†`, together with the density operator.
pub struct FactoredDensity {
    pub factor: ComplexMatrix,
    pub rho: DensityOperator,
}

pub fn random_density(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> FactoredDensity {
    let g = gaussian_matrix(rng, dim, rank);
    let scale = g.norm();
    let factor = g / c64(scale, 0.0);
    let m = &factor * factor.adjoint();
    let m = (&m + m.adjoint()) * c64(0.5, 0.0);
    FactoredDensity { rho: DensityOperator::new(m).expect("valid density"), factor }
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, sorted
/// in descending order.
pub fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Eigenvalues of a Hermitian matrix via its real embedding
/// `[[Re H, −Im H], [Im H, Re H]]`, whose spectrum repeats each eigenvalue twice.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.nrows();
    let real = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    jacobi_eigenvalues(real).into_iter().step_by(2).collect()
}

/// Singular values of `m`, descending, from the eigenvalues of `M M†`.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    hermitian_eigenvalues(&(m * m.adjoint())).into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

fn cayley_step(u: &ComplexMatrix, omega: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let n = u.nrows();
    let id = ComplexMatrix::identity(n, n);
    let half = omega * c64(0.5 * t, 0.0);
    let lhs = &id - &half;
    let rhs = (&id + &half) * u;
    lhs.lu().solve(&rhs).expect("Cayley factor is invertible for skew-Hermitian omega")
}

/// `max_U Re Tr(U X)` over unitaries, by Riemannian ascent with a Cayley
/// retraction from several random starts.
pub fn max_trace_over_unitaries(x: &ComplexMatrix, seed: u64) -> f64 {
    let n = x.nrows();
    let f = |u: &ComplexMatrix| (u * x).trace().re;
    let mut rng = rng(seed);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..4 {
        let mut u = random_unitary(&mut rng, n);
        let mut value = f(&u);
        let mut step = 1.0;
        for _ in 0..20_000 {
            let y = &u * x;
            // Ascent direction: minus the anti-Hermitian part of U X.
            let omega = (y.adjoint() - &y) * c64(0.5, 0.0);
            if omega.norm() < 1e-13 {
                break;
            }
            let mut accepted = false;
            while step > 1e-12 {
                let candidate = cayley_step(&u, &omega, step);
                let v = f(&candidate);
                if v > value {
                    u = candidate;
                    value = v;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        best = best.max(value);
    }
    best
}

/// Fidelity as the largest overlap between purifications. Purifications of
/// `ρ = A A†` on a `k`-dimensional ancilla are `A U` for unitary `U`, so the
/// overlap is `Tr(U0† A0† A1 U1)`; we maximize over `U = U1 U0†`.
pub fn purification_fidelity(a0: &ComplexMatrix, a1: &ComplexMatrix, seed: u64) -> f64 {
    let k = a0.ncols().max(a1.ncols());
    let pad = |a: &ComplexMatrix| {
        let mut p = ComplexMatrix::zeros(a.nrows(), k);
        p.columns_mut(0, a.ncols()).copy_from(a);
        p
    };
    let x = pad(a0).adjoint() * pad(a1);
    max_trace_over_unitaries(&x, seed)
}

fn polarization(diagonal: bool, value: usize) -> [f64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (diagonal, value) {
        (false, 0) => [1.0, 0.0],
        (false, _) => [0.0, 1.0],
        (true, 0) => [s, s],
        (true, _) => [s, -s],
    }
}

fn bit(word: usize, q: usize) -> usize {
    (word >> q) & 1
}

/// Naive cheat by exhaustive enumeration: Alice sends `s` random
/// rectilinear photons, then announces a uniformly guessed diagonal string.
/// Bob picks a basis per photon, measures, and accepts iff every photon he
/// measured diagonally matches the announcement.
pub fn naive_enumeration(s: usize) -> f64 {
    let n = 1usize << s;
    let mut total = 0.0;
    for sent in 0..n {
        for guess in 0..n {
            for bases in 0..n {
                for outcome in 0..n {
                    let mut p = 1.0;
                    let mut matches = true;
                    for q in 0..s {
                        let diagonal = bit(bases, q) == 1;
                        let m = polarization(diagonal, bit(outcome, q));
                        let x = polarization(false, bit(sent, q));
                        p *= (m[0] * x[0] + m[1] * x[1]).powi(2);
                        if diagonal && bit(outcome, q) != bit(guess, q) {
                            matches = false;
                        }
                    }
                    if matches {
                        total += p;
                    }
                }
            }
        }
    }
    total / (n * n * n) as f64
}
