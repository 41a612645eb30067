use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per matmul before the product fans out over threads.
const PAR_DIM: usize = 64;

/// Square complex matrix stored row-major.
///
/// Basis index `k` of a `2^L`-dimensional operator encodes qubit `q` in bit
/// `q` (qubit 0 is the least significant bit).
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    /// Builds from nested rows; every row must have as many entries as there
    /// are rows.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let mut op = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            op.data[i * entries.len() + i] = z;
        }
        op
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len(), "outer product of unequal lengths");
        Self::from_fn(ket.len(), |r, c| ket[r] * bra[c].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `L` such that `dim == 2^L`, if any.
    pub fn num_qubits(&self) -> Option<usize> {
        qubits_for_dim(self.dim)
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[C64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self.get(c, r).conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Operator) -> Result<Operator> {
        self.check_same_dim(rhs)?;
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        let row_kernel = |(r, out_row): (usize, &mut [C64])| {
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        };
        if n >= PAR_DIM {
            out.par_chunks_mut(n).enumerate().for_each(row_kernel);
        } else {
            out.chunks_mut(n).enumerate().for_each(row_kernel);
        }
        Ok(Operator { dim: n, data: out })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length must match operator dim");
        (0..self.dim)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut exp: u32) -> Operator {
        let mut base = self.clone();
        let mut acc = Operator::identity(self.dim);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Tensor product with `self` on the low qubits: `(other ⊗ self)` in the
    /// little-endian convention.
    pub fn kron_low(&self, high: &Operator) -> Operator {
        let (dl, dh) = (self.dim, high.dim);
        Operator::from_fn(dl * dh, |r, c| {
            high.get(r / dl, c / dl) * self.get(r % dl, c % dl)
        })
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim, other.dim, "comparing operators of unequal dim");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |a_nm - conj(a_mn)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `max |(U^+ U - I)_nm|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = &self.dagger() * self;
        gram.max_abs_diff(&Operator::identity(self.dim))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.max_abs_diff(&Operator::identity(self.dim)) <= tol
    }

    pub(crate) fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

pub(crate) fn qubits_for_dim(dim: usize) -> Option<usize> {
    (dim >= 1 && dim.is_power_of_two()).then(|| dim.trailing_zeros() as usize)
}

impl Mul for &Operator {
    type Output = Operator;

    /// Panics on a dimension mismatch; use [`Operator::matmul`] to get an error.
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions must match")
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;

    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `ab - ba`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(&ab - &ba)
}

/// `ab + ba`.
pub fn anticommutator(a: &Operator, b: &Operator) -> Result<Operator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(&ab + &ba)
}

pub fn dagger(op: &Operator) -> Operator {
    op.dagger()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli::{pauli_matrix, Pauli};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dagger_of_identity_and_y() {
        assert_eq!(dagger(&Operator::identity(2)), Operator::identity(2));
        let y = pauli_matrix(Pauli::Y);
        assert_eq!(dagger(&y), y);
    }

    #[test]
    fn dagger_of_lowering_operator() {
        // (√κ/2)(X + iY) -> (√κ/2)(X - iY), κ = 1
        let x = pauli_matrix(Pauli::X);
        let y = pauli_matrix(Pauli::Y);
        let l = &(&x + &y.scale(c(0.0, 1.0))) * c(0.5, 0.0);
        let expected = &(&x - &y.scale(c(0.0, 1.0))) * c(0.5, 0.0);
        assert_eq!(dagger(&l), expected);
        assert_eq!(l.get(0, 1), c(1.0, 0.0));
        assert_eq!(expected.get(1, 0), c(1.0, 0.0));
    }

    #[test]
    fn commutator_of_paulis() {
        let x = pauli_matrix(Pauli::X);
        let y = pauli_matrix(Pauli::Y);
        let z = pauli_matrix(Pauli::Z);
        assert_eq!(commutator(&z, &z).unwrap(), Operator::zeros(2));
        assert_eq!(commutator(&x, &y).unwrap(), z.scale(c(0.0, 2.0)));
        assert_eq!(anticommutator(&x, &y).unwrap(), Operator::zeros(2));
        assert_eq!(
            anticommutator(&Operator::identity(2), &y).unwrap(),
            y.scale(c(2.0, 0.0))
        );
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let err = commutator(&Operator::identity(2), &Operator::identity(4)).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 2, found: 4 });
        assert!(anticommutator(&Operator::identity(4), &Operator::identity(2)).is_err());
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = Operator::from_row_major(1, vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite);
    }

    #[test]
    fn parallel_and_serial_matmul_agree() {
        let a = Operator::from_fn(PAR_DIM, |r, k| c((r * 3 + k) as f64 * 0.01, (r as f64 - k as f64) * 0.02));
        let b = Operator::from_fn(PAR_DIM, |r, k| c((r as f64).sin(), (k as f64).cos()));
        let prod = &a * &b;
        let naive = Operator::from_fn(PAR_DIM, |r, col| {
            (0..PAR_DIM).map(|k| a.get(r, k) * b.get(k, col)).sum()
        });
        assert!(prod.max_abs_diff(&naive) < 1e-12);
    }

    #[test]
    fn kron_low_places_self_on_low_bits() {
        let x = pauli_matrix(Pauli::X);
        let id = Operator::identity(2);
        // X on qubit 0: |0b10> -> |0b11>
        let op = x.kron_low(&id);
        assert_eq!(op.get(3, 2), c(1.0, 0.0));
        assert_eq!(op.get(1, 0), c(1.0, 0.0));
    }

    #[test]
    fn pow_matches_repeated_product() {
        let x = pauli_matrix(Pauli::X);
        assert_eq!(x.pow(0), Operator::identity(2));
        assert_eq!(x.pow(3), x);
    }
}
