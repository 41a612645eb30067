//! Gate-level execution of the commutation circuit.
//!
//! Register layout: a control qubit `C`, an `L`-qubit system register `S`
//! and an `L`-qubit reference register `M`, `2L+1` qubits in total. The
//! protocol is:
//!
//! 1. prepare `|0>_C |ψ0>_S |Φ>_M` and put the control into `|+>`;
//! 2. phase the control with `R(χ) = diag(1, e^{iχ})` and evolve the system
//!    with `U(t)`;
//! 3. controlled-`N` on `S`, then controlled-`A` and controlled-`M` on `M`;
//! 4. block controlled-SWAP of `S` and `M`;
//! 5. Hadamard on `C`.
//!
//! Measuring `Z` on the control then gives
//! `P0 - P1 = Re(e^{iχ} <Φ|N ρ(t) M A|Φ>)`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qcore::{evolve_unitary, Operator, RawVector, StateVector};

/// Acceptance threshold for operators that must be unitary.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterLayout {
    control: usize,
    system: Vec<usize>,
    reference: Vec<usize>,
}

impl RegisterLayout {
    /// System on qubits `0..L`, reference on `L..2L`, control on `2L`.
    pub fn standard(num_system_qubits: usize) -> Self {
        let l = num_system_qubits;
        Self {
            control: 2 * l,
            system: (0..l).collect(),
            reference: (l..2 * l).collect(),
        }
    }

    pub fn new(control: usize, system: Vec<usize>, reference: Vec<usize>) -> Result<Self> {
        if system.len() != reference.len() || system.is_empty() {
            return Err(Error::InvalidRegister(format!(
                "system has {} qubits, reference has {}",
                system.len(),
                reference.len()
            )));
        }
        let total = 2 * system.len() + 1;
        let mut seen = vec![false; total];
        for &q in std::iter::once(&control).chain(&system).chain(&reference) {
            if q >= total || seen[q] {
                return Err(Error::InvalidRegister(format!(
                    "qubit {q} repeated or outside 0..{total}"
                )));
            }
            seen[q] = true;
        }
        Ok(Self {
            control,
            system,
            reference,
        })
    }

    pub fn control(&self) -> usize {
        self.control
    }

    pub fn system(&self) -> &[usize] {
        &self.system
    }

    pub fn reference(&self) -> &[usize] {
        &self.reference
    }

    pub fn num_system_qubits(&self) -> usize {
        self.system.len()
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.system.len() + 1
    }

    /// Full-register index of control bit `c`, system index `s`, reference
    /// index `m`.
    pub fn compose(&self, c: usize, s: usize, m: usize) -> usize {
        let mut idx = c << self.control;
        idx |= scatter_bits(s, &self.system);
        idx |= scatter_bits(m, &self.reference);
        idx
    }
}

/// Deposits bit `j` of `value` at position `positions[j]`.
fn scatter_bits(value: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (((value >> j) & 1) << q))
}

/// How `ρ(t)` is produced from `ψ0`.
#[derive(Clone, Debug)]
pub enum Evolution {
    Hamiltonian { hamiltonian: Operator, time: f64 },
    Unitary(Operator),
}

impl Evolution {
    pub fn unitary(&self) -> Result<Operator> {
        match self {
            Evolution::Hamiltonian { hamiltonian, time } => evolve_unitary(hamiltonian, *time),
            Evolution::Unitary(u) => Ok(u.clone()),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Evolution::Hamiltonian { hamiltonian, .. } => hamiltonian.dim(),
            Evolution::Unitary(u) => u.dim(),
        }
    }
}

/// One instance of the commutation circuit.
///
/// `N`, `A` and `M` may be arbitrary linear maps here. Physical mode
/// additionally requires them to be unitary.
#[derive(Clone, Debug)]
pub struct CommutationCircuitSpec {
    chi: f64,
    psi0: StateVector,
    phi: StateVector,
    evolution: Evolution,
    op_n: Operator,
    op_a: Operator,
    op_m: Operator,
    layout: RegisterLayout,
    physical: bool,
}

impl CommutationCircuitSpec {
    pub fn new(
        psi0: StateVector,
        phi: StateVector,
        evolution: Evolution,
        op_n: Operator,
        op_a: Operator,
        op_m: Operator,
        chi: f64,
    ) -> Result<Self> {
        let l = psi0.num_qubits();
        let dim = psi0.dim();
        for found in [phi.dim(), evolution.dim(), op_n.dim(), op_a.dim(), op_m.dim()] {
            if found != dim {
                return Err(Error::DimensionMismatch { expected: dim, found });
            }
        }
        if let Evolution::Unitary(u) = &evolution {
            let defect = u.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        if !chi.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            chi,
            psi0,
            phi,
            evolution,
            op_n,
            op_a,
            op_m,
            layout: RegisterLayout::standard(l),
            physical: false,
        })
    }

    pub fn with_layout(mut self, layout: RegisterLayout) -> Result<Self> {
        if layout.num_system_qubits() != self.num_system_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.num_system_qubits(),
                found: layout.num_system_qubits(),
            });
        }
        self.layout = layout;
        Ok(self)
    }

    /// Requests physical mode: [`run_circuit`] then rejects non-unitary
    /// controlled operators.
    pub fn physical(mut self, physical: bool) -> Self {
        self.physical = physical;
        self
    }

    pub fn num_system_qubits(&self) -> usize {
        self.psi0.num_qubits()
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn with_chi(mut self, chi: f64) -> Self {
        self.chi = chi;
        self
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn phi(&self) -> &StateVector {
        &self.phi
    }

    pub fn evolution(&self) -> &Evolution {
        &self.evolution
    }

    pub fn op_n(&self) -> &Operator {
        &self.op_n
    }

    pub fn op_a(&self) -> &Operator {
        &self.op_a
    }

    pub fn op_m(&self) -> &Operator {
        &self.op_m
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    /// Errors unless `N`, `A` and `M` are all unitary.
    pub fn check_unitary_ops(&self) -> Result<()> {
        for op in [&self.op_n, &self.op_a, &self.op_m] {
            let defect = op.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(())
    }
}

/// Register state after the final Hadamard.
#[derive(Clone, Debug)]
pub struct FinalState {
    raw: RawVector,
    layout: RegisterLayout,
}

impl FinalState {
    pub fn raw(&self) -> &RawVector {
        &self.raw
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    /// Amplitudes with the control fixed to `c`, indexed `s | (m << L)`.
    pub fn branch(&self, c: usize) -> Vec<C64> {
        let l = self.layout.num_system_qubits();
        let d = 1usize << l;
        let amps = self.raw.amplitudes();
        (0..d * d)
            .map(|i| amps[self.layout.compose(c, i % d, i / d)])
            .collect()
    }
}

/// Applies `op` to the register `targets`, restricted to basis states whose
/// `control` bit is 1 (or unconditionally when `control` is `None`).
fn apply_on_register(
    state: &mut RawVector,
    op: &Operator,
    targets: &[usize],
    control: Option<usize>,
) -> Result<()> {
    let n = state.len().trailing_zeros() as usize;
    if !state.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(state.len()));
    }
    let sub = 1usize << targets.len();
    if op.dim() != sub {
        return Err(Error::DimensionMismatch {
            expected: sub,
            found: op.dim(),
        });
    }
    let mut mask = 0usize;
    for &q in targets.iter().chain(control.iter()) {
        if q >= n || mask & (1 << q) != 0 {
            return Err(Error::InvalidRegister(format!(
                "qubit {q} overlaps another operand or is outside the {n}-qubit register"
            )));
        }
        mask |= 1 << q;
    }
    let target_mask = scatter_bits(sub - 1, targets);
    let cmask = control.map_or(0, |c| 1 << c);
    let offsets: Vec<usize> = (0..sub).map(|j| scatter_bits(j, targets)).collect();
    let mut local = vec![C64::new(0.0, 0.0); sub];
    let amps = state.amplitudes_mut();
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & cmask != cmask {
            continue;
        }
        for (slot, &off) in local.iter_mut().zip(&offsets) {
            *slot = amps[base | off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            amps[base | off] = op.row(r).iter().zip(&local).map(|(a, b)| a * b).sum();
        }
    }
    Ok(())
}

/// Applies `op` to `targets` on the `control = 1` subspace.
pub fn apply_controlled(
    state: &mut RawVector,
    op: &Operator,
    targets: &[usize],
    control: usize,
) -> Result<()> {
    apply_on_register(state, op, targets, Some(control))
}

/// Applies `op` to `targets` unconditionally.
pub fn apply_register(state: &mut RawVector, op: &Operator, targets: &[usize]) -> Result<()> {
    apply_on_register(state, op, targets, None)
}

fn apply_single(state: &mut RawVector, q: usize, m: [[C64; 2]; 2]) {
    let bit = 1usize << q;
    let amps = state.amplitudes_mut();
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

fn hadamard() -> [[C64; 2]; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// `R(χ) = diag(1, e^{iχ})`, so that `R(χ)|+> = (|0> + e^{iχ}|1>)/√2`.
fn phase_gate(chi: f64) -> [[C64; 2]; 2] {
    let zero = C64::new(0.0, 0.0);
    [[C64::new(1.0, 0.0), zero], [zero, C64::from_polar(1.0, chi)]]
}

/// Exchanges system qubit `i` with reference qubit `i` for every `i`, on the
/// `control = 1` subspace only.
pub fn block_cswap(state: &mut RawVector, layout: &RegisterLayout) -> Result<()> {
    if state.len() != 1usize << layout.total_qubits() {
        return Err(Error::DimensionMismatch {
            expected: 1 << layout.total_qubits(),
            found: state.len(),
        });
    }
    let cbit = 1usize << layout.control;
    let pairs: Vec<(usize, usize)> = layout
        .system
        .iter()
        .zip(&layout.reference)
        .map(|(&s, &m)| (1 << s, 1 << m))
        .collect();
    let amps = state.amplitudes_mut();
    for i in 0..amps.len() {
        if i & cbit == 0 {
            continue;
        }
        let mut j = i;
        for &(sb, mb) in &pairs {
            if ((i & sb) != 0) != ((i & mb) != 0) {
                j ^= sb | mb;
            }
        }
        if j > i {
            amps.swap(i, j);
        }
    }
    Ok(())
}

/// Control qubit after the Hadamard and `R(χ)` preparation steps.
pub fn prepared_control(chi: f64) -> [C64; 2] {
    let mut v = RawVector::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    apply_single(&mut v, 0, hadamard());
    apply_single(&mut v, 0, phase_gate(chi));
    [v.amplitudes()[0], v.amplitudes()[1]]
}

pub fn run_circuit(spec: &CommutationCircuitSpec) -> Result<FinalState> {
    if spec.physical {
        spec.check_unitary_ops()?;
    }
    let layout = &spec.layout;
    let d = spec.psi0.dim();
    let mut state = RawVector::zeros(1 << layout.total_qubits());
    {
        let amps = state.amplitudes_mut();
        for (s, &ps) in spec.psi0.amplitudes().iter().enumerate() {
            for (m, &pm) in spec.phi.amplitudes().iter().enumerate().take(d) {
                amps[layout.compose(0, s, m)] = ps * pm;
            }
        }
    }
    apply_single(&mut state, layout.control, hadamard());
    apply_single(&mut state, layout.control, phase_gate(spec.chi));
    apply_register(&mut state, &spec.evolution.unitary()?, &layout.system)?;
    apply_controlled(&mut state, &spec.op_n, &layout.system, layout.control)?;
    apply_controlled(&mut state, &spec.op_a, &layout.reference, layout.control)?;
    apply_controlled(&mut state, &spec.op_m, &layout.reference, layout.control)?;
    block_cswap(&mut state, layout)?;
    apply_single(&mut state, layout.control, hadamard());
    Ok(FinalState {
        raw: state,
        layout: layout.clone(),
    })
}

/// Squared weights of the control `|0>` and `|1>` branches.
///
/// For unitary `N`, `A`, `M` these are the outcome probabilities. Otherwise
/// they are unnormalised, but `p0 - p1` still equals `<Φ|Ẑ^χ_A|Φ>`.
pub fn control_probabilities(final_state: &FinalState) -> (f64, f64) {
    let cbit = 1usize << final_state.layout.control;
    let mut p = [0.0_f64; 2];
    for (i, a) in final_state.raw.amplitudes().iter().enumerate() {
        p[usize::from(i & cbit != 0)] += a.norm_sqr();
    }
    (p[0], p[1])
}
