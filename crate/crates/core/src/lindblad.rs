//! Open-system rates: the unitary commutator plus, per jump operator `L`,
//! the sandwich term `LρL^+` and the anticommutator `{ρ, L^+L}`, all read
//! out from control-qubit expectations at `ρ(δt)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::circuit::Evolution;
use crate::error::{Error, Result};
use crate::estimator::{
    anticommutator_expectation, matrix_element, zchi_expectation, EstimationMode,
    EstimationResult, RhoPrep,
};
use crate::qcore::{
    anticommutator, commutator, pauli_decompose, pauli_reconstruct, Operator, StateVector,
    WeightedPauliSum,
};
use crate::vonneumann::{
    diagonal_rate, entry_mode, offdiagonal_rate, translation_operator, EntryProvenance,
    RateMatrix,
};

const RECONSTRUCT_TOL: f64 = 1e-12;

/// A jump operator with the decompositions the circuit needs.
#[derive(Clone, Debug)]
pub struct JumpOperator {
    op: Operator,
    number: Operator,
    op_sum: WeightedPauliSum,
    dagger_sum: WeightedPauliSum,
    number_sum: WeightedPauliSum,
}

impl JumpOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let number = op.dagger().matmul(&op)?;
        let op_sum = pauli_decompose(&op)?;
        let dagger_sum = pauli_decompose(&op.dagger())?;
        let number_sum = pauli_decompose(&number)?;
        for (sum, target) in [(&op_sum, &op), (&number_sum, &number)] {
            let defect = pauli_reconstruct(sum).max_abs_diff(target);
            if defect > RECONSTRUCT_TOL {
                return Err(Error::Numeric(format!(
                    "jump operator decomposition off by {defect:e}"
                )));
            }
        }
        Ok(Self {
            op,
            number,
            op_sum,
            dagger_sum,
            number_sum,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    /// `L^+ L`.
    pub fn number(&self) -> &Operator {
        &self.number
    }

    pub fn sum(&self) -> &WeightedPauliSum {
        &self.op_sum
    }

    pub fn dagger_sum(&self) -> &WeightedPauliSum {
        &self.dagger_sum
    }

    pub fn number_sum(&self) -> &WeightedPauliSum {
        &self.number_sum
    }
}

#[derive(Clone, Debug)]
pub struct LindbladChannel {
    num_qubits: usize,
    jumps: Vec<JumpOperator>,
}

impl LindbladChannel {
    pub fn new(num_qubits: usize, ops: Vec<Operator>) -> Result<Self> {
        let dim = 1usize << num_qubits;
        let jumps = ops
            .into_iter()
            .map(|op| {
                if op.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: op.dim(),
                    });
                }
                JumpOperator::new(op)
            })
            .collect::<Result<_>>()?;
        Ok(Self { num_qubits, jumps })
    }

    /// No jump operators: closed-system dynamics.
    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            jumps: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn jump(&self, j: usize) -> Result<&JumpOperator> {
        self.jumps.get(j).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "jump operator {j} out of range for a channel with {}",
                self.jumps.len()
            ))
        })
    }

    pub fn operators(&self) -> impl Iterator<Item = &Operator> {
        self.jumps.iter().map(|j| &j.op)
    }
}

/// Spontaneous emission: `L = (√κ/2)(X + iY) = √κ |0><1|`.
pub fn damping_channel(kappa: f64) -> Result<LindbladChannel> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "damping rate must be finite and nonnegative, got {kappa}"
        )));
    }
    let mut op = Operator::zeros(2);
    op.set(0, 1, C64::new(kappa.sqrt(), 0.0));
    LindbladChannel::new(1, vec![op])
}

/// Single-qubit amplitude-damping problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampingParams {
    pub kappa: f64,
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub delta_t: f64,
}

impl DampingParams {
    pub fn new(kappa: f64, omega: f64, theta: f64, phi: f64, delta_t: f64) -> Result<Self> {
        if [kappa, omega, theta, phi, delta_t].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if kappa < 0.0 {
            return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
        }
        if delta_t <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "delta_t must be > 0, got {delta_t}"
            )));
        }
        Ok(Self {
            kappa,
            omega,
            theta,
            phi,
            delta_t,
        })
    }

    /// `-(ω/2) Z`.
    pub fn hamiltonian(&self) -> Operator {
        Operator::diagonal(&[
            C64::new(-self.omega / 2.0, 0.0),
            C64::new(self.omega / 2.0, 0.0),
        ])
    }

    pub fn channel(&self) -> Result<LindbladChannel> {
        damping_channel(self.kappa)
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::bloch(self.theta, self.phi)
    }

    /// `ρ(δt)` from unitary evolution of the initial state.
    pub fn prep(&self) -> Result<RhoPrep> {
        RhoPrep::new(
            self.initial_state(),
            &Evolution::Hamiltonian {
                hamiltonian: self.hamiltonian(),
                time: self.delta_t,
            },
        )
    }
}

fn real(r: EstimationResult<f64>) -> EstimationResult<C64> {
    EstimationResult {
        value: C64::new(r.value, 0.0),
        std_error: r.std_error,
        shots_used: r.shots_used,
        terms_evaluated: r.terms_evaluated,
    }
}

fn zero() -> EstimationResult<C64> {
    EstimationResult {
        value: C64::new(0.0, 0.0),
        std_error: 0.0,
        shots_used: 0,
        terms_evaluated: 0,
    }
}

fn add(a: EstimationResult<C64>, b: EstimationResult<C64>) -> EstimationResult<C64> {
    EstimationResult {
        value: a.value + b.value,
        std_error: a.std_error.hypot(b.std_error),
        shots_used: a.shots_used + b.shots_used,
        terms_evaluated: a.terms_evaluated + b.terms_evaluated,
    }
}

/// `<Φ|L_j ρ L_j^+|AΦ>`.
pub fn first_term_element(
    prep: &RhoPrep,
    phi: &StateVector,
    channel: &LindbladChannel,
    j: usize,
    a_op: &Operator,
    mode: EstimationMode,
) -> Result<EstimationResult<C64>> {
    let jump = channel.jump(j)?;
    if jump.sum().is_empty() {
        return Ok(zero());
    }
    if a_op.is_identity(0.0) {
        let r = zchi_expectation(prep, phi, jump.sum(), jump.dagger_sum(), a_op, 0.0, mode)?;
        return Ok(real(r));
    }
    matrix_element(prep, phi, jump.sum(), jump.dagger_sum(), a_op, mode)
}

/// `<Φ|{ρ, L_j^+ L_j}|AΦ>`.
pub fn second_term_element(
    prep: &RhoPrep,
    phi: &StateVector,
    channel: &LindbladChannel,
    j: usize,
    a_op: &Operator,
    mode: EstimationMode,
) -> Result<EstimationResult<C64>> {
    let jump = channel.jump(j)?;
    if jump.number_sum().is_empty() {
        return Ok(zero());
    }
    if a_op.is_identity(0.0) {
        return Ok(real(anticommutator_expectation(
            prep,
            phi,
            jump.number_sum(),
            mode,
        )?));
    }
    let identity = WeightedPauliSum::identity(prep.num_qubits());
    let left = matrix_element(prep, phi, jump.number_sum(), &identity, a_op, mode.derive(0))?;
    let right = matrix_element(prep, phi, &identity, jump.number_sum(), a_op, mode.derive(1))?;
    Ok(add(left, right))
}

/// Full open-system rate matrix at `ρ(δt)`:
/// `i[ρ,H] + Σ_j (L_j ρ L_j^+ - ½{ρ, L_j^+ L_j})`.
pub fn open_rate_matrix(
    prep: &RhoPrep,
    channel: &LindbladChannel,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<RateMatrix> {
    let dim = prep.dim();
    if channel.num_qubits() != prep.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: prep.num_qubits(),
            found: channel.num_qubits(),
        });
    }
    let identity = Operator::identity(dim);
    let cells: Vec<(C64, EntryProvenance)> = (0..dim * dim)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / dim, idx % dim);
            let emode = entry_mode(mode, dim, row, col);
            let phi = StateVector::basis(prep.num_qubits(), row)?;
            let shift = (col + dim - row) % dim;
            let (mut total, a_op, chis) = if shift == 0 {
                let r = diagonal_rate(prep, row, m_sum, emode.derive(0))?;
                (real(r), identity.clone(), vec![FRAC_PI_2, 0.0])
            } else {
                let r = offdiagonal_rate(prep, row, shift, m_sum, emode.derive(0))?;
                let a = translation_operator(prep.num_qubits(), shift)?;
                (r, a, vec![0.0, FRAC_PI_2])
            };
            for j in 0..channel.len() {
                let tag = 1 + 2 * j as u64;
                let first = first_term_element(prep, &phi, channel, j, &a_op, emode.derive(tag))?;
                let mut second =
                    second_term_element(prep, &phi, channel, j, &a_op, emode.derive(tag + 1))?;
                second.value *= -0.5;
                second.std_error *= 0.5;
                total = add(add(total, first), second);
            }
            Ok((
                total.value,
                EntryProvenance {
                    chis,
                    shift,
                    mode: emode,
                    std_error: total.std_error,
                    terms_evaluated: total.terms_evaluated,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let (values, provenance): (Vec<C64>, Vec<EntryProvenance>) = cells.into_iter().unzip();
    RateMatrix::from_parts(Operator::from_row_major(dim, values)?, provenance)
}

/// Dense right-hand side `i[ρ,H] + Σ_j (L_j ρ L_j^+ - ½{ρ, L_j^+ L_j})`.
pub fn lindblad_rhs(rho: &Operator, hamiltonian: &Operator, channel: &LindbladChannel) -> Result<Operator> {
    let i = C64::new(0.0, 1.0);
    let mut out = commutator(rho, hamiltonian)?.scale(i);
    for jump in channel.jumps() {
        let sandwich = jump.operator().matmul(rho)?.matmul(&jump.operator().dagger())?;
        let anti = anticommutator(rho, jump.number())?;
        out = &(&out + &sandwich) - &anti.scale(C64::new(0.5, 0.0));
    }
    Ok(out)
}

/// One first-order operator-sum step `Σ_r N_r ρ N_r^+` with
/// `N_0 = 1 + (-iH - ½Σ L^+L)δt` and `N_j = √δt L_j`.
pub fn kraus_step(
    rho: &Operator,
    hamiltonian: &Operator,
    channel: &LindbladChannel,
    delta_t: f64,
) -> Result<Operator> {
    if !(delta_t.is_finite() && delta_t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta_t must be finite and > 0, got {delta_t}"
        )));
    }
    let dim = rho.dim();
    let mut generator = hamiltonian.scale(C64::new(0.0, -1.0));
    for jump in channel.jumps() {
        generator = &generator - &jump.number().scale(C64::new(0.5, 0.0));
    }
    let n0 = &Operator::identity(dim) + &generator.scale(C64::new(delta_t, 0.0));
    let mut out = n0.matmul(rho)?.matmul(&n0.dagger())?;
    for jump in channel.jumps() {
        let nj = jump.operator().scale(C64::new(delta_t.sqrt(), 0.0));
        out = &out + &nj.matmul(rho)?.matmul(&nj.dagger())?;
    }
    Ok(out)
}

/// Rate map for single-qubit amplitude damping:
/// `[[κρ11, (iω - κ/2)ρ01], [-(iω + κ/2)ρ10, -κρ11]]`.
pub fn damping_rate_evaluator(
    omega: f64,
    kappa: f64,
) -> impl Fn(&Operator) -> Result<Operator> + Send + Sync {
    move |rho: &Operator| {
        if rho.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: rho.dim(),
            });
        }
        let rho01 = rho.get(0, 1);
        let rho10 = rho.get(1, 0);
        let rho11 = rho.get(1, 1);
        Operator::from_rows(&[
            [rho11 * kappa, C64::new(-kappa / 2.0, omega) * rho01],
            [-C64::new(kappa / 2.0, omega) * rho10, -rho11 * kappa],
        ])
    }
}

/// Sampled solution of `dρ/dt = f(ρ)`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Operator>,
}

impl Trajectory {
    /// State at the grid time closest to `t`.
    pub fn at(&self, t: f64) -> &Operator {
        let idx = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        &self.states[idx]
    }

    pub fn last(&self) -> &Operator {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn max_trace_defect(&self) -> f64 {
        let t0 = self.states[0].trace();
        self.states
            .iter()
            .map(|s| (s.trace() - t0).norm())
            .fold(0.0, f64::max)
    }
}

/// Classic fourth-order Runge-Kutta from `rho0` to `t_final` in steps of
/// `dt`; the last step is shortened to land on `t_final`.
pub fn integrate_rates<F>(rho0: &Operator, rhs: F, t_final: f64, dt: f64) -> Result<Trajectory>
where
    F: Fn(&Operator) -> Result<Operator>,
{
    if !(dt.is_finite() && dt > 0.0 && t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and t_final >= 0, got dt={dt}, t_final={t_final}"
        )));
    }
    let steps = ((t_final / dt) - 1e-9).ceil().max(0.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(rho0.clone());
    let mut rho = rho0.clone();
    let half = C64::new(0.5, 0.0);
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = if k + 1 == steps { t_final - t } else { dt };
        let hc = C64::new(h, 0.0);
        let k1 = rhs(&rho)?;
        let k2 = rhs(&(&rho + &k1.scale(hc * half)))?;
        let k3 = rhs(&(&rho + &k2.scale(hc * half)))?;
        let k4 = rhs(&(&rho + &k3.scale(hc)))?;
        let incr = &(&(&k1 + &k2.scale(C64::new(2.0, 0.0))) + &k3.scale(C64::new(2.0, 0.0))) + &k4;
        rho = &rho + &incr.scale(hc / 6.0);
        if !rho.is_finite() {
            return Err(Error::Numeric(format!(
                "integration produced non-finite values at t={}",
                t + h
            )));
        }
        times.push(t + h);
        states.push(rho.clone());
    }
    Ok(Trajectory { times, states })
}
