//! Expectation values read out from the control qubit.
//!
//! Non-unitary `N` and `M` enter through their Pauli decompositions. A term
//! `c P` with `c = |c| e^{iθ}` contributes weight `|c|` at the shifted angle
//! `χ + θ`, so every circuit that actually runs has unitary controlled gates:
//!
//! `<Φ|Ẑ^χ_A|Φ> = Σ_{j,k} |c_j||d_k| <Φ|Ẑ^{χ+arg c_j+arg d_k}_A|Φ>[N=P_j, M=Q_k]`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{
    control_probabilities, run_circuit, CommutationCircuitSpec, Evolution, UNITARY_TOL,
};
use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, Operator, StateVector, WeightedPauliSum};

/// Imaginary coefficient magnitude above which a sum is not Hermitian.
pub const HERMITIAN_COEFF_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ShotAllocation {
    /// Same number of shots for every decomposition term.
    #[default]
    Even,
    /// Shots proportional to the term weight `|c_j||d_k|`.
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimationMode {
    Exact,
    /// `shots` is the budget for one `Ẑ` expectation; decomposed estimates
    /// split it across their terms.
    Sampled {
        shots: u64,
        seed: u64,
        allocation: ShotAllocation,
    },
}

impl EstimationMode {
    pub fn sampled(shots: u64, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        Ok(Self::Sampled {
            shots,
            seed,
            allocation: ShotAllocation::Even,
        })
    }

    pub fn with_allocation(self, allocation: ShotAllocation) -> Self {
        match self {
            Self::Sampled { shots, seed, .. } => Self::Sampled {
                shots,
                seed,
                allocation,
            },
            exact => exact,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact)
    }

    /// Same mode with an independent seed derived from `tag`, so separately
    /// estimated quantities never share random streams.
    pub fn derive(&self, tag: u64) -> Self {
        match *self {
            Self::Sampled {
                shots,
                seed,
                allocation,
            } => Self::Sampled {
                shots,
                seed: splitmix64(seed ^ splitmix64(tag.wrapping_add(0x9e37_79b9_7f4a_7c15))),
                allocation,
            },
            Self::Exact => Self::Exact,
        }
    }

    fn with_shots(&self, shots: u64) -> Self {
        match *self {
            Self::Sampled {
                seed, allocation, ..
            } => Self::Sampled {
                shots,
                seed,
                allocation,
            },
            Self::Exact => Self::Exact,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationResult<T> {
    pub value: T,
    /// Zero in exact mode.
    pub std_error: f64,
    pub shots_used: u64,
    /// Number of circuit configurations evaluated.
    pub terms_evaluated: usize,
}

impl EstimationResult<f64> {
    fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            ..self
        }
    }
}

/// Initial state plus its evolution; fixes `ρ(t) = |ψ(t)><ψ(t)|`.
#[derive(Clone, Debug)]
pub struct RhoPrep {
    psi0: StateVector,
    unitary: Operator,
    evolved: StateVector,
}

impl RhoPrep {
    pub fn new(psi0: StateVector, evolution: &Evolution) -> Result<Self> {
        let unitary = evolution.unitary()?;
        if unitary.dim() != psi0.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi0.dim(),
                found: unitary.dim(),
            });
        }
        let defect = unitary.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        let evolved = psi0.evolve(&unitary)?;
        Ok(Self {
            psi0,
            unitary,
            evolved,
        })
    }

    pub fn from_hamiltonian(psi0: StateVector, hamiltonian: &Operator, time: f64) -> Result<Self> {
        Self::new(
            psi0,
            &Evolution::Hamiltonian {
                hamiltonian: hamiltonian.clone(),
                time,
            },
        )
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn unitary(&self) -> &Operator {
        &self.unitary
    }

    /// `|ψ(t)>`.
    pub fn evolved(&self) -> &StateVector {
        &self.evolved
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.evolved)
    }

    pub fn num_qubits(&self) -> usize {
        self.psi0.num_qubits()
    }

    pub fn dim(&self) -> usize {
        self.psi0.dim()
    }

    pub fn circuit(
        &self,
        phi: &StateVector,
        op_n: Operator,
        op_a: Operator,
        op_m: Operator,
        chi: f64,
    ) -> Result<CommutationCircuitSpec> {
        CommutationCircuitSpec::new(
            self.psi0.clone(),
            phi.clone(),
            Evolution::Unitary(self.unitary.clone()),
            op_n,
            op_a,
            op_m,
            chi,
        )
    }
}

/// `<Z>` of the control qubit for one circuit instance.
pub fn z_expectation(
    spec: &CommutationCircuitSpec,
    mode: EstimationMode,
) -> Result<EstimationResult<f64>> {
    sample_z(spec, mode, 0)
}

fn sample_z(
    spec: &CommutationCircuitSpec,
    mode: EstimationMode,
    stream: u64,
) -> Result<EstimationResult<f64>> {
    match mode {
        EstimationMode::Exact => {
            let (p0, p1) = control_probabilities(&run_circuit(spec)?);
            Ok(EstimationResult {
                value: p0 - p1,
                std_error: 0.0,
                shots_used: 0,
                terms_evaluated: 1,
            })
        }
        EstimationMode::Sampled { shots, seed, .. } => {
            if shots == 0 {
                return Err(Error::InvalidArgument("shots must be at least 1".into()));
            }
            spec.check_unitary_ops()?;
            let (p0, p1) = control_probabilities(&run_circuit(spec)?);
            let p0 = (p0 / (p0 + p1)).clamp(0.0, 1.0);
            let coin = Bernoulli::new(p0).map_err(|e| Error::Numeric(e.to_string()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let zeros = (0..shots).filter(|_| coin.sample(&mut rng)).count() as f64;
            let n = shots as f64;
            let (q0, q1) = (zeros / n, 1.0 - zeros / n);
            Ok(EstimationResult {
                value: q0 - q1,
                std_error: 2.0 * (q0 * q1 / n).sqrt(),
                shots_used: shots,
                terms_evaluated: 1,
            })
        }
    }
}

fn require_unitary(op: &Operator) -> Result<()> {
    let defect = op.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(())
}

fn check_sum(sum: &WeightedPauliSum, prep: &RhoPrep) -> Result<()> {
    if sum.is_empty() {
        return Err(Error::EmptyDecomposition);
    }
    if sum.num_qubits() != prep.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: prep.num_qubits(),
            found: sum.num_qubits(),
        });
    }
    Ok(())
}

fn allocate_shots(total: u64, weights: &[f64], allocation: ShotAllocation) -> Vec<u64> {
    let n = weights.len() as u64;
    match allocation {
        ShotAllocation::Even => (0..n)
            .map(|i| (total / n + u64::from(i < total % n)).max(1))
            .collect(),
        ShotAllocation::Weighted => {
            let sum: f64 = weights.iter().sum();
            weights
                .iter()
                .map(|w| ((total as f64 * w / sum).round() as u64).max(1))
                .collect()
        }
    }
}

/// `<Φ|Ẑ^χ_A|Φ>` with `N = Σ c_j P_j` and `M = Σ d_k Q_k`.
///
/// Terms run in parallel and are summed in term order.
pub fn zchi_expectation(
    prep: &RhoPrep,
    phi: &StateVector,
    n_sum: &WeightedPauliSum,
    m_sum: &WeightedPauliSum,
    a_op: &Operator,
    chi: f64,
    mode: EstimationMode,
) -> Result<EstimationResult<f64>> {
    check_sum(n_sum, prep)?;
    check_sum(m_sum, prep)?;
    require_unitary(a_op)?;
    if phi.dim() != prep.dim() {
        return Err(Error::DimensionMismatch {
            expected: prep.dim(),
            found: phi.dim(),
        });
    }
    let n_ops: Vec<(C64, Operator)> = n_sum
        .terms()
        .iter()
        .map(|(c, s)| (*c, s.to_operator()))
        .collect();
    let m_ops: Vec<(C64, Operator)> = m_sum
        .terms()
        .iter()
        .map(|(c, s)| (*c, s.to_operator()))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n_ops.len())
        .flat_map(|j| (0..m_ops.len()).map(move |k| (j, k)))
        .collect();
    let weights: Vec<f64> = pairs
        .iter()
        .map(|&(j, k)| n_ops[j].0.norm() * m_ops[k].0.norm())
        .collect();
    let shots = match mode {
        EstimationMode::Sampled {
            shots, allocation, ..
        } => allocate_shots(shots, &weights, allocation),
        EstimationMode::Exact => vec![0; pairs.len()],
    };

    let terms: Vec<EstimationResult<f64>> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(j, k))| {
            let (c, ref n_op) = n_ops[j];
            let (d, ref m_op) = m_ops[k];
            let spec = prep.circuit(
                phi,
                n_op.clone(),
                a_op.clone(),
                m_op.clone(),
                chi + c.arg() + d.arg(),
            )?;
            sample_z(&spec, mode.with_shots(shots[idx]), idx as u64)
        })
        .collect::<Result<_>>()?;

    let mut value = 0.0;
    let mut var = 0.0;
    let mut shots_used = 0;
    for (term, w) in terms.iter().zip(&weights) {
        value += w * term.value;
        var += (w * term.std_error).powi(2);
        shots_used += term.shots_used;
    }
    Ok(EstimationResult {
        value,
        std_error: var.sqrt(),
        shots_used,
        terms_evaluated: terms.len(),
    })
}

fn hermitian_sum(m_sum: &WeightedPauliSum) -> Result<()> {
    let imag = m_sum.max_imag();
    if imag > HERMITIAN_COEFF_TOL {
        return Err(Error::NotHermitian(imag));
    }
    Ok(())
}

/// `i<Φ|[ρ(t), M]|Φ> = 2<Φ|Ẑ^{π/2}_1|Φ>` for Hermitian `M`.
pub fn commutator_expectation(
    prep: &RhoPrep,
    phi: &StateVector,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<EstimationResult<f64>> {
    hermitian_sum(m_sum)?;
    let identity = WeightedPauliSum::identity(prep.num_qubits());
    let a = Operator::identity(prep.dim());
    Ok(zchi_expectation(prep, phi, &identity, m_sum, &a, FRAC_PI_2, mode)?.scaled(2.0))
}

/// `<Φ|{ρ(t), M}|Φ> = 2<Φ|Ẑ^0_1|Φ>` for Hermitian `M`.
pub fn anticommutator_expectation(
    prep: &RhoPrep,
    phi: &StateVector,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<EstimationResult<f64>> {
    hermitian_sum(m_sum)?;
    let identity = WeightedPauliSum::identity(prep.num_qubits());
    let a = Operator::identity(prep.dim());
    Ok(zchi_expectation(prep, phi, &identity, m_sum, &a, 0.0, mode)?.scaled(2.0))
}

/// `<Φ|N ρ(t) M|Φ'>` with `|Φ'> = A|Φ>`, assembled as
/// `<Φ|Ẑ^0_A|Φ> - i<Φ|Ẑ^{π/2}_A|Φ>`.
pub fn matrix_element(
    prep: &RhoPrep,
    phi: &StateVector,
    n_sum: &WeightedPauliSum,
    m_sum: &WeightedPauliSum,
    a_op: &Operator,
    mode: EstimationMode,
) -> Result<EstimationResult<C64>> {
    let re = zchi_expectation(prep, phi, n_sum, m_sum, a_op, 0.0, mode.derive(0))?;
    let im = zchi_expectation(prep, phi, n_sum, m_sum, a_op, FRAC_PI_2, mode.derive(1))?;
    Ok(EstimationResult {
        value: C64::new(re.value, -im.value),
        std_error: re.std_error.hypot(im.std_error),
        shots_used: re.shots_used + im.shots_used,
        terms_evaluated: re.terms_evaluated + im.terms_evaluated,
    })
}
