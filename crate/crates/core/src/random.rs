//! Random states and operators for randomized checks and demos.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qcore::{Operator, StateVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed (Haar) pure state.
pub fn state<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> StateVector {
    let amps = (0..1usize << num_qubits).map(|_| gaussian(rng)).collect();
    StateVector::normalized(amps).expect("gaussian vector is almost surely nonzero")
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn operator<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    Operator::from_fn(dim, |_, _| gaussian(rng))
}

/// Hermitian matrix `(G + G^+)/2`.
pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = operator(dim, rng);
    (&g + &g.dagger()).scale(C64::new(0.5, 0.0))
}

/// Haar-random unitary via Gram-Schmidt on Gaussian columns.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
        // two passes keep the columns orthonormal to working precision
        for _ in 0..2 {
            for u in &cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(u) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    Operator::from_fn(dim, |r, c| cols[c][r])
}
