use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::operator::Operator;
use crate::error::{Error, Result};

/// Tolerance for accepting an operator as a Hamiltonian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigendecomposition `H = V diag(λ) V^+` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unitary whose columns are the matching eigenvectors.
    pub vectors: Operator,
}

impl HermitianEigen {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        (0..self.vectors.dim()).map(|r| self.vectors.get(r, k)).collect()
    }

    /// `V diag(f(λ)) V^+`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> Operator {
        let dim = self.vectors.dim();
        let weights: Vec<C64> = self.values.iter().map(|&l| f(l)).collect();
        Operator::from_fn(dim, |r, c| {
            (0..dim)
                .map(|k| self.vectors.get(r, k) * weights[k] * self.vectors.get(c, k).conj())
                .sum()
        })
    }
}

pub fn eigh(op: &Operator) -> Result<HermitianEigen> {
    let defect = op.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let dim = op.dim();
    // symmetrise so the solver sees an exactly Hermitian input
    let m = DMatrix::from_fn(dim, dim, |r, c| 0.5 * (op.get(r, c) + op.get(c, r).conj()));
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Operator::from_fn(dim, |r, c| eig.eigenvectors[(r, order[c])]);
    if !vectors.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(HermitianEigen { values, vectors })
}

/// Cached spectral decomposition of a time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigen: HermitianEigen,
}

impl Propagator {
    pub fn new(hamiltonian: &Operator) -> Result<Self> {
        Ok(Self {
            eigen: eigh(hamiltonian)?,
        })
    }

    /// `exp(-iHt) = Σ_l e^{-iλ_l t} |λ_l><λ_l|`.
    pub fn unitary(&self, t: f64) -> Operator {
        self.eigen.map_spectrum(|l| C64::from_polar(1.0, -l * t))
    }

    pub fn eigen(&self) -> &HermitianEigen {
        &self.eigen
    }
}

/// `exp(-iHt)` by exact eigendecomposition.
pub fn evolve_unitary(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Propagator::new(h)?.unitary(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::pauli::{pauli_matrix, Pauli};

    #[test]
    fn zero_time_is_identity() {
        let h = pauli_matrix(Pauli::X).scale(C64::new(0.3, 0.0));
        let u = evolve_unitary(&h, 0.0).unwrap();
        assert!(u.is_identity(1e-14));
    }

    #[test]
    fn z_hamiltonian_closed_form() {
        // H = -(ω/2) Z  =>  U(t) = diag(e^{iωt/2}, e^{-iωt/2})
        let (omega, t) = (-2.0, 0.37);
        let h = pauli_matrix(Pauli::Z).scale(C64::new(-omega / 2.0, 0.0));
        let u = evolve_unitary(&h, t).unwrap();
        let expected = Operator::diagonal(&[
            C64::from_polar(1.0, omega * t / 2.0),
            C64::from_polar(1.0, -omega * t / 2.0),
        ]);
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut op = Operator::zeros(2);
        op.set(0, 1, C64::new(1.0, 0.0));
        assert!(matches!(evolve_unitary(&op, 1.0), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigenvalues_ascending() {
        let h = pauli_matrix(Pauli::Y);
        let e = eigh(&h).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        assert!(e.vectors.is_unitary(1e-14));
        let rebuilt = e.map_spectrum(|l| C64::new(l, 0.0));
        assert!(rebuilt.max_abs_diff(&h) < 1e-14);
    }
}
