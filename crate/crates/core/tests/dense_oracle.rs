mod common;

use std::f64::consts::PI;

use commsim::circuit::{control_probabilities, run_circuit, CommutationCircuitSpec, Evolution};
use commsim::estimator::{matrix_element, zchi_expectation, EstimationMode, RhoPrep};
use commsim::lindblad::{kraus_step, lindblad_rhs, open_rate_matrix, LindbladChannel};
use commsim::qcore::{evolve_unitary, pauli_decompose, Operator, StateVector};
use commsim::random;
use commsim::vonneumann::{coherence_rate, rate_matrix, transfer_unitary, ScanReport};
use commsim::C64;
use commsim_oracle as oracle;
use common::*;
use rand::Rng;

const EXACT: EstimationMode = EstimationMode::Exact;

#[test]
fn circuit_branches_match_tensor_expansion() {
    let mut rng = rng(11);
    for l in 1..=2 {
        let dim = 1 << l;
        for _ in 0..10 {
            let h = random::hermitian(dim, &mut rng);
            let (n, a, m) = (
                random::unitary(dim, &mut rng),
                random::unitary(dim, &mut rng),
                random::unitary(dim, &mut rng),
            );
            let chi = rng.random_range(-PI..PI);
            let t = rng.random_range(0.0..2.0);
            let psi0 = random::state(l, &mut rng);
            let phi = random::state(l, &mut rng);
            let spec = CommutationCircuitSpec::new(
                psi0.clone(),
                phi.clone(),
                Evolution::Hamiltonian { hamiltonian: h.clone(), time: t },
                n.clone(),
                a.clone(),
                m.clone(),
                chi,
            )
            .unwrap();
            let fin = run_circuit(&spec).unwrap();
            let psi_t = oracle::propagator(&to_dense(&h), t) * to_vec(&psi0);
            let (b0, b1) = oracle::final_state_branches(
                &psi_t,
                &to_vec(&phi),
                &to_dense(&n),
                &to_dense(&a),
                &to_dense(&m),
                chi,
            );
            for (got, want) in [(fin.branch(0), b0), (fin.branch(1), b1)] {
                let err = got.iter().zip(want.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
                assert!(err < 1e-10, "branch error {err}");
            }
        }
    }
}

#[test]
fn probabilities_match_closed_forms() {
    let mut rng = rng(12);
    for l in 1..=3 {
        let dim = 1 << l;
        for _ in 0..8 {
            let u = random::unitary(dim, &mut rng);
            let (n, a, m) = (
                random::unitary(dim, &mut rng),
                random::unitary(dim, &mut rng),
                random::unitary(dim, &mut rng),
            );
            let chi = rng.random_range(0.0..2.0 * PI);
            let psi0 = random::state(l, &mut rng);
            let phi = random::state(l, &mut rng);
            let spec = CommutationCircuitSpec::new(psi0.clone(), phi.clone(), Evolution::Unitary(u.clone()), n.clone(), a.clone(), m.clone(), chi).unwrap();
            let (p0, p1) = control_probabilities(&run_circuit(&spec).unwrap());
            let psi_t = to_dense(&u) * to_vec(&psi0);
            let (q0, q1) = oracle::control_probabilities(&psi_t, &to_vec(&phi), &to_dense(&n), &to_dense(&a), &to_dense(&m), chi);
            assert!((p0 - q0).abs() < 1e-10 && (p1 - q1).abs() < 1e-10);
            let rho = oracle::density(&psi_t);
            let z = oracle::zchi(&rho, &to_dense(&n), &to_dense(&m), &to_dense(&a), &to_vec(&phi), chi);
            assert!(z.im.abs() < 1e-12);
            assert!((p0 - p1 - z.re).abs() < 1e-10);
        }
    }
}

#[test]
fn zero_overlap_identity_gives_even_odds() {
    let psi0 = StateVector::basis(1, 0).unwrap();
    let phi = StateVector::basis(1, 1).unwrap();
    let id = Operator::identity(2);
    let spec = CommutationCircuitSpec::new(psi0, phi, Evolution::Unitary(id.clone()), id.clone(), id.clone(), id, 0.0).unwrap();
    let (p0, p1) = control_probabilities(&run_circuit(&spec).unwrap());
    assert!((p0 - 0.5).abs() < 1e-14 && (p1 - 0.5).abs() < 1e-14);
}

#[test]
fn zchi_with_non_hermitian_decompositions() {
    let mut rng = rng(13);
    for _ in 0..50 {
        let h = random::hermitian(4, &mut rng);
        let t = rng.random_range(0.0..2.0);
        let n = random::operator(4, &mut rng);
        let m = random::operator(4, &mut rng);
        let a = random::unitary(4, &mut rng);
        let chi = rng.random_range(-PI..PI);
        let prep = RhoPrep::from_hamiltonian(random::state(2, &mut rng), &h, t).unwrap();
        let phi = random::state(2, &mut rng);
        let r = zchi_expectation(&prep, &phi, &pauli_decompose(&n).unwrap(), &pauli_decompose(&m).unwrap(), &a, chi, EXACT).unwrap();
        let rho = to_dense(prep.density().as_operator());
        let want = oracle::zchi(&rho, &to_dense(&n), &to_dense(&m), &to_dense(&a), &to_vec(&phi), chi);
        assert!((r.value - want.re).abs() < 1e-10, "{} vs {}", r.value, want.re);
    }
}

#[test]
fn matrix_element_of_bare_density() {
    let mut rng = rng(14);
    for _ in 0..20 {
        let h = random::hermitian(4, &mut rng);
        let prep = RhoPrep::from_hamiltonian(random::state(2, &mut rng), &h, 0.9).unwrap();
        let phi = random::state(2, &mut rng);
        let a = random::unitary(4, &mut rng);
        let id = commsim::qcore::WeightedPauliSum::identity(2);
        let r = matrix_element(&prep, &phi, &id, &id, &a, EXACT).unwrap();
        let rho = to_dense(prep.density().as_operator());
        let phi_prime = to_dense(&a) * to_vec(&phi);
        let want = oracle::braket(&to_vec(&phi), &rho, &phi_prime);
        assert!((r.value - want).norm() < 1e-10);
    }
}

#[test]
fn rate_matrices_match_von_neumann_rhs() {
    let mut rng = rng(15);
    for l in 1..=3 {
        let dim = 1 << l;
        for _ in 0..6 {
            let h = random::hermitian(dim, &mut rng);
            let t = rng.random_range(0.0..3.0);
            let prep = RhoPrep::from_hamiltonian(random::state(l, &mut rng), &h, t).unwrap();
            let m = rate_matrix(&prep, &pauli_decompose(&h).unwrap(), EXACT).unwrap();
            let want = oracle::von_neumann_rhs(&to_dense(prep.density().as_operator()), &to_dense(&h));
            assert!(max_diff(m.entries(), &want) < 1e-10);
            assert!(m.trace().norm() < 1e-10);
            assert!(m.hermiticity_defect() < 1e-10);
        }
    }
}

#[test]
fn open_rate_matrices_match_lindblad_rhs() {
    let mut rng = rng(16);
    for l in 1..=2 {
        let dim = 1 << l;
        for jumps in 1..=2 {
            for _ in 0..4 {
                let h = random::hermitian(dim, &mut rng);
                let ops: Vec<Operator> = (0..jumps).map(|_| random::operator(dim, &mut rng)).collect();
                let channel = LindbladChannel::new(l, ops.clone()).unwrap();
                let prep = RhoPrep::from_hamiltonian(random::state(l, &mut rng), &h, 0.1).unwrap();
                let m = open_rate_matrix(&prep, &channel, &pauli_decompose(&h).unwrap(), EXACT).unwrap();
                let dense_ops: Vec<_> = ops.iter().map(to_dense).collect();
                let want = oracle::lindblad_rhs(&to_dense(prep.density().as_operator()), &to_dense(&h), &dense_ops);
                assert!(max_diff(m.entries(), &want) < 1e-9);
                assert!(m.trace().norm() < 1e-9 && m.hermiticity_defect() < 1e-9);
                let ours = lindblad_rhs(prep.density().as_operator(), &h, &channel).unwrap();
                assert!(max_diff(&ours, &want) < 1e-12);
            }
        }
    }
}

#[test]
fn kraus_step_first_order() {
    let mut rng = rng(17);
    let h = random::hermitian(2, &mut rng);
    let op = random::operator(2, &mut rng);
    let channel = LindbladChannel::new(1, vec![op.clone()]).unwrap();
    let rho = random::state(1, &mut rng).projector();
    let rhs = oracle::lindblad_rhs(&to_dense(&rho), &to_dense(&h), &[to_dense(&op)]);
    let mut prev: Option<(f64, f64)> = None;
    for dt in [0.1, 0.05, 0.025, 0.0125] {
        let step = kraus_step(&rho, &h, &channel, dt).unwrap();
        let trace_defect = (step.trace().re - 1.0).abs();
        let fd = (&step - &rho).scale(c(1.0 / dt, 0.0));
        let rhs_gap = max_diff(&fd, &rhs);
        if let Some((t_prev, g_prev)) = prev {
            let tr = t_prev / trace_defect;
            let gr = rhs_gap / g_prev;
            assert!((3.5..=4.5).contains(&tr), "trace ratio {tr}");
            assert!((0.4..=0.6).contains(&gr), "gap ratio {gr}");
        }
        prev = Some((trace_defect, rhs_gap));
    }
}

#[test]
fn eigenbasis_coherence_amplitude_and_frequency() {
    let mut rng = rng(18);
    let h = random::hermitian(4, &mut rng);
    let eig = commsim::qcore::eigh(&h).unwrap();
    let (k, l) = (0, 2);
    let lk = StateVector::new(eig.eigenvector(k)).unwrap();
    let ll = StateVector::new(eig.eigenvector(l)).unwrap();
    let psi0 = StateVector::normalized(lk.amplitudes().iter().zip(ll.amplitudes()).map(|(a, b)| a + b).collect()).unwrap();
    let a = transfer_unitary(&lk, &ll).unwrap();
    let gap = eig.values[l] - eig.values[k];
    let h_sum = pauli_decompose(&h).unwrap();
    let n = 96;
    let span = 6.0 * 2.0 * PI / gap.abs();
    let grid: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
    let mut values = Vec::new();
    for &t in &grid {
        let prep = RhoPrep::from_hamiltonian(psi0.clone(), &h, t).unwrap();
        let r = coherence_rate(&prep, &lk, &a, &h_sum, EXACT).unwrap();
        // `a` may carry a global phase; the modulus is phase free
        assert!((r.value.norm() - gap.abs() / 2.0).abs() < 1e-10);
        values.push(r.value.re);
    }
    let report = ScanReport::new("coherence", grid, values, vec![0.0; n]).unwrap();
    let (omega, res) = report.extracted_frequency.unwrap();
    assert!((omega - gap.abs()).abs() <= res, "{omega} vs {gap}");
}

#[test]
fn unitary_composition() {
    let mut rng = rng(19);
    let h = random::hermitian(4, &mut rng);
    let u1 = evolve_unitary(&h, 0.4).unwrap();
    let u2 = evolve_unitary(&h, 0.7).unwrap();
    let u12 = evolve_unitary(&h, 1.1).unwrap();
    assert!(u1.matmul(&u2).unwrap().max_abs_diff(&u12) < 1e-10);
    assert!(max_diff(&u12, &oracle::propagator(&to_dense(&h), 1.1)) < 1e-10);
    let u = evolve_unitary(&h, 0.7).unwrap();
    assert!(u.is_unitary(1e-12));
}

#[test]
fn off_diagonal_density_from_translation() {
    // N = M = 1, A = X, Φ = |0>: <0|ρ(t)|1>
    let (omega, theta, phi, t) = (-2.0, 1.1, 0.4, 0.9);
    let h = Operator::diagonal(&[c(-omega / 2.0, 0.0), c(omega / 2.0, 0.0)]);
    let prep = RhoPrep::from_hamiltonian(StateVector::bloch(theta, phi), &h, t).unwrap();
    let id = commsim::qcore::WeightedPauliSum::identity(1);
    let x = commsim::qcore::pauli_matrix(commsim::qcore::Pauli::X);
    let r = matrix_element(&prep, &StateVector::basis(1, 0).unwrap(), &id, &id, &x, EXACT).unwrap();
    let psi_t = oracle::propagator(&to_dense(&h), t) * oracle::bloch_state(theta, phi);
    let want = oracle::density(&psi_t)[(0, 1)];
    assert!((r.value - want).norm() < 1e-12);
    let closed = C64::from_polar(theta.sin() / 2.0, omega * t - phi);
    assert!((r.value - closed).norm() < 1e-12);
}
