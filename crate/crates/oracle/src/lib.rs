//! Dense reference evaluations for cross-checking the circuit simulator.
//!
//! Everything here works directly on `nalgebra` matrices with textbook
//! formulas: density matrices are built as outer products, propagators come
//! from the Padé matrix exponential, and expectation values are plain
//! matrix products. None of it touches the statevector or Pauli machinery of
//! `commsim`, so agreement between the two is meaningful.
//!
//! Vectors and operators cross the boundary as row-major `Complex64` slices.
//! Register vectors of the two-register (system, reference) space are indexed
//! as `s | (m << L)`: system bits low, reference bits high.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn mat(dim: usize, row_major: &[C64]) -> Mat {
    assert_eq!(row_major.len(), dim * dim, "row-major data must be dim*dim");
    Mat::from_row_slice(dim, dim, row_major)
}

pub fn to_row_major(m: &Mat) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

pub fn vector(amps: &[C64]) -> Vector {
    Vector::from_column_slice(amps)
}

pub fn pauli_x() -> Mat {
    mat(2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
}

pub fn pauli_y() -> Mat {
    mat(2, &[C64::new(0.0, 0.0), -I, I, C64::new(0.0, 0.0)])
}

pub fn pauli_z() -> Mat {
    mat(2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)])
}

/// `exp(-i h t)` by the scaling-and-squaring Padé exponential.
pub fn propagator(h: &Mat, t: f64) -> Mat {
    (h * C64::new(0.0, -t)).exp()
}

pub fn density(psi: &Vector) -> Mat {
    psi * psi.adjoint()
}

pub fn commutator(a: &Mat, b: &Mat) -> Mat {
    a * b - b * a
}

pub fn anticommutator(a: &Mat, b: &Mat) -> Mat {
    a * b + b * a
}

/// `i[rho, h]`.
pub fn von_neumann_rhs(rho: &Mat, h: &Mat) -> Mat {
    commutator(rho, h) * I
}

/// `i[rho, h] + sum_j (L rho L^+ - 1/2 {rho, L^+ L})`.
pub fn lindblad_rhs(rho: &Mat, h: &Mat, jumps: &[Mat]) -> Mat {
    let mut out = von_neumann_rhs(rho, h);
    for l in jumps {
        let ldl = l.adjoint() * l;
        out += l * rho * l.adjoint() - anticommutator(rho, &ldl) * C64::new(0.5, 0.0);
    }
    out
}

/// `<phi| a |psi>`.
pub fn braket(phi: &Vector, a: &Mat, psi: &Vector) -> C64 {
    (phi.adjoint() * a * psi)[(0, 0)]
}

/// `<phi| Z^chi_A |phi>` with
/// `Z^chi_A = 1/2 (e^{i chi} N rho M A + e^{-i chi} A^+ M^+ rho N^+)`.
///
/// Returns the full complex value; it is real whenever the formula is, and
/// tests assert on the imaginary part separately.
pub fn zchi(rho: &Mat, n: &Mat, m: &Mat, a: &Mat, phi: &Vector, chi: f64) -> C64 {
    let phase = C64::from_polar(1.0, chi);
    let fwd = n * rho * m * a;
    let bwd = a.adjoint() * m.adjoint() * rho * n.adjoint();
    let op = (fwd * phase + bwd * phase.conj()) * C64::new(0.5, 0.0);
    braket(phi, &op, phi)
}

/// Control-qubit outcome probabilities written out term by term from the
/// final-state expansion (the closed forms for `P0` and `P1`).
pub fn control_probabilities(
    psi_t: &Vector,
    phi: &Vector,
    n: &Mat,
    a: &Mat,
    m: &Mat,
    chi: f64,
) -> (f64, f64) {
    let ma_phi = m * a * phi;
    let n_psi = n * psi_t;
    let norms = ma_phi.norm_squared() * n_psi.norm_squared();
    let cross = C64::from_polar(1.0, chi) * psi_t.dotc(&ma_phi) * phi.dotc(&n_psi);
    let cross2 = C64::from_polar(1.0, -chi) * ma_phi.dotc(psi_t) * n_psi.dotc(phi);
    let p0 = (C64::new(1.0 + norms, 0.0) + cross + cross2) * 0.25;
    let p1 = (C64::new(1.0 + norms, 0.0) - cross - cross2) * 0.25;
    (p0.re, p1.re)
}

/// Tensor product `s ⊗ m` laid out as `s | (m << L)`.
pub fn register_product(s: &Vector, m: &Vector) -> Vector {
    let d = s.len();
    assert_eq!(d, m.len());
    let mut out = Vector::zeros(d * d);
    for (mi, mv) in m.iter().enumerate() {
        for (si, sv) in s.iter().enumerate() {
            out[si | (mi * d)] = sv * mv;
        }
    }
    out
}

/// Projections of the final circuit state onto control `|0>` and `|1>`:
///
/// `1/2 (|psi_t>|phi> ± e^{i chi} M A|phi> ⊗ N|psi_t>)`
/// with the first factor on the system register and the second on the
/// reference register.
pub fn final_state_branches(
    psi_t: &Vector,
    phi: &Vector,
    n: &Mat,
    a: &Mat,
    m: &Mat,
    chi: f64,
) -> (Vector, Vector) {
    let plain = register_product(psi_t, phi);
    let swapped = register_product(&(m * a * phi), &(n * psi_t)) * C64::from_polar(1.0, chi);
    let half = C64::new(0.5, 0.0);
    ((&plain + &swapped) * half, (&plain - &swapped) * half)
}

/// Single-qubit state `cos(θ/2)|0> + e^{iφ} sin(θ/2)|1>`.
pub fn bloch_state(theta: f64, phi: f64) -> Vector {
    vector(&[
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
}

/// Amplitude-damping closed forms for `H = -(ω/2) Z`, `L = √κ |0><1|`,
/// starting from the pure state [`bloch_state`]`(θ, φ)`.
pub mod damping {
    use super::*;

    pub fn rho11_0(theta: f64) -> f64 {
        (theta / 2.0).sin().powi(2)
    }

    pub fn rho01_0(theta: f64, phi: f64) -> C64 {
        C64::from_polar(0.5 * theta.sin(), -phi)
    }

    /// Density matrix at time `t` under damped evolution.
    pub fn density_at(theta: f64, phi: f64, omega: f64, kappa: f64, t: f64) -> Mat {
        let p11 = rho11_0(theta) * (-kappa * t).exp();
        let c01 = rho01_0(theta, phi) * (C64::new(-kappa / 2.0, omega) * t).exp();
        mat(2, &[C64::new(1.0 - p11, 0.0), c01, c01.conj(), C64::new(p11, 0.0)])
    }

    /// Rate matrix as a function of the populations and coherence of the
    /// state it is evaluated on.
    pub fn rate_matrix(rho11: f64, rho01: C64, omega: f64, kappa: f64) -> Mat {
        let off = C64::new(-kappa / 2.0, omega) * rho01;
        mat(
            2,
            &[
                C64::new(kappa * rho11, 0.0),
                off,
                off.conj(),
                C64::new(-kappa * rho11, 0.0),
            ],
        )
    }

    /// `i<0|[rho(t), H]|1> = i(ω/2) e^{i(ωt-φ)} sin θ`.
    pub fn coherence_rate(theta: f64, phi: f64, omega: f64, t: f64) -> C64 {
        I * C64::from_polar(0.5 * omega * theta.sin(), omega * t - phi)
    }

    /// `<0|L rho L^+|0> = κ sin²(θ/2)`.
    pub fn jump_population(theta: f64, kappa: f64) -> f64 {
        kappa * rho11_0(theta)
    }

    /// `<1|{rho, L^+L}|1> = 2κ sin²(θ/2)`.
    pub fn anticommutator_population(theta: f64, kappa: f64) -> f64 {
        2.0 * kappa * rho11_0(theta)
    }

    /// `<0|rho L^+L|1> = (κ/2) e^{i(ωt-φ)} sin θ`.
    pub fn one_sided_coherence(theta: f64, phi: f64, omega: f64, kappa: f64, t: f64) -> C64 {
        C64::from_polar(0.5 * kappa * theta.sin(), omega * t - phi)
    }
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_commutator() {
        let c = commutator(&pauli_x(), &pauli_y());
        assert!(max_abs_diff(&c, &(pauli_z() * C64::new(0.0, 2.0))) < 1e-15);
    }

    #[test]
    fn damping_density_solves_rhs() {
        // finite-difference check that the closed form satisfies the ODE
        let (theta, phi, omega, kappa): (f64, f64, f64, f64) = (1.1, 0.3, -2.0, 0.7);
        let h = pauli_z() * C64::new(-omega / 2.0, 0.0);
        let l = mat(2, &[0.0.into(), C64::new(kappa.sqrt(), 0.0), 0.0.into(), 0.0.into()]);
        let t = 0.8;
        let eps = 1e-5;
        let fd = (damping::density_at(theta, phi, omega, kappa, t + eps)
            - damping::density_at(theta, phi, omega, kappa, t - eps))
            / C64::new(2.0 * eps, 0.0);
        let rhs = lindblad_rhs(&damping::density_at(theta, phi, omega, kappa, t), &h, &[l]);
        assert!(max_abs_diff(&fd, &rhs) < 1e-8);
    }

    #[test]
    fn probabilities_sum_to_one_for_unitaries() {
        let psi = bloch_state(0.4, 1.0);
        let phi = bloch_state(2.0, -0.5);
        let (p0, p1) = control_probabilities(&psi, &phi, &pauli_x(), &pauli_y(), &pauli_z(), 0.3);
        assert!((p0 + p1 - 1.0).abs() < 1e-14);
        let rho = density(&psi);
        let z = zchi(&rho, &pauli_x(), &pauli_z(), &pauli_y(), &phi, 0.3);
        assert!((p0 - p1 - z.re).abs() < 1e-14);
    }
}
