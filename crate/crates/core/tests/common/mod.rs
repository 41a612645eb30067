#![allow(dead_code)]

use commsim::qcore::{Operator, StateVector};
use commsim::C64;
use commsim_oracle::{mat, to_row_major, vector, Mat, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn to_dense(op: &Operator) -> Mat {
    mat(op.dim(), op.as_slice())
}

pub fn from_dense(m: &Mat) -> Operator {
    Operator::from_row_major(m.nrows(), to_row_major(m)).unwrap()
}

pub fn to_vec(s: &StateVector) -> Vector {
    vector(s.amplitudes())
}

pub fn max_diff(op: &Operator, m: &Mat) -> f64 {
    op.as_slice()
        .iter()
        .zip(to_row_major(m))
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
