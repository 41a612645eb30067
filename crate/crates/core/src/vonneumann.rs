//! Closed-system dynamics: `dρ/dt = i[ρ, H]` read out element by element.
//!
//! Diagonal elements use `Φ = |n>` with `A = 1`. The off-diagonal element
//! `i<Φ|[ρ,H]|Φ'>` with `|Φ'> = A|Φ>` is assembled from four control-qubit
//! expectations (`N = 1`, `M = H`):
//!
//! ```text
//! z(χ)  = <Φ |Ẑ^χ_A  |Φ >  = Re(e^{iχ} <Φ |ρH|Φ'>)
//! z'(χ) = <Φ'|Ẑ^χ_A+ |Φ'>  = Re(e^{iχ} <Φ'|ρH|Φ >)
//! i<Φ|[ρ,H]|Φ'> = (z(π/2) + z'(π/2)) + i (z(0) - z'(0))
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{
    commutator_expectation, zchi_expectation, EstimationMode, EstimationResult, RhoPrep,
};
use crate::qcore::{Operator, Propagator, StateVector, WeightedPauliSum};

/// Exact-mode stationarity threshold.
pub const STATIONARY_TOL: f64 = 1e-9;
/// Sampled-mode stationarity threshold in standard errors.
pub const STATIONARY_SIGMAS: f64 = 5.0;
/// Exact-mode floor for the rate-matrix invariants.
pub const RATE_TOL: f64 = 1e-10;

/// `Â^p |n> = |(n + p) mod 2^L>`.
pub fn translation_operator(num_qubits: usize, p: usize) -> Result<Operator> {
    let dim = 1usize << num_qubits;
    if p == 0 || p >= dim {
        return Err(Error::InvalidArgument(format!(
            "shift {p} outside 1..={} for {num_qubits} qubits",
            dim - 1
        )));
    }
    let mut op = Operator::zeros(dim);
    for n in 0..dim {
        op.set((n + p) % dim, n, C64::new(1.0, 0.0));
    }
    Ok(op)
}

/// Unitary mapping `|from>` to `|to>`: a Householder reflection fixed up by a
/// global phase. When the two states are orthogonal it exchanges them and
/// acts as the identity on the rest of the space.
pub fn transfer_unitary(from: &StateVector, to: &StateVector) -> Result<Operator> {
    if from.dim() != to.dim() {
        return Err(Error::DimensionMismatch {
            expected: from.dim(),
            found: to.dim(),
        });
    }
    let overlap = to.inner(from);
    // e^{iα} aligns `to` with `from` so the reflection is exact
    let align = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let w: Vec<C64> = from
        .amplitudes()
        .iter()
        .zip(to.amplitudes())
        .map(|(f, t)| f - align * t)
        .collect();
    let wn: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let dim = from.dim();
    if wn < 1e-28 {
        return Ok(Operator::identity(dim).scale(align.conj()));
    }
    let reflect = Operator::from_fn(dim, |r, c| {
        let id = if r == c { 1.0 } else { 0.0 };
        C64::new(id, 0.0) - w[r] * w[c].conj() * (2.0 / wn)
    });
    Ok(reflect.scale(align.conj()))
}

/// `i<Φ|[ρ(t), H]|AΦ>` from four control-qubit expectations.
pub fn coherence_rate(
    prep: &RhoPrep,
    phi: &StateVector,
    a_op: &Operator,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<EstimationResult<C64>> {
    let identity = WeightedPauliSum::identity(prep.num_qubits());
    let phi_prime = StateVector::normalized(a_op.apply(phi.amplitudes()))?;
    let a_back = a_op.dagger();
    let runs = [
        (phi, a_op, 0.0),
        (phi, a_op, FRAC_PI_2),
        (&phi_prime, &a_back, 0.0),
        (&phi_prime, &a_back, FRAC_PI_2),
    ];
    let mut z = Vec::with_capacity(4);
    for (i, (reference, a, chi)) in runs.into_iter().enumerate() {
        z.push(zchi_expectation(
            prep,
            reference,
            &identity,
            m_sum,
            a,
            chi,
            mode.derive(i as u64),
        )?);
    }
    let value = C64::new(z[1].value + z[3].value, z[0].value - z[2].value);
    Ok(EstimationResult {
        value,
        std_error: z.iter().map(|r| r.std_error.powi(2)).sum::<f64>().sqrt(),
        shots_used: z.iter().map(|r| r.shots_used).sum(),
        terms_evaluated: z.iter().map(|r| r.terms_evaluated).sum(),
    })
}

/// `dρ_nn/dt = i<n|[ρ(t), H]|n>`.
pub fn diagonal_rate(
    prep: &RhoPrep,
    n: usize,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<EstimationResult<f64>> {
    let phi = StateVector::basis(prep.num_qubits(), n)?;
    commutator_expectation(prep, &phi, m_sum, mode)
}

/// `dρ_{n,n+p}/dt` (indices mod `2^L`) via the translation operator.
pub fn offdiagonal_rate(
    prep: &RhoPrep,
    n: usize,
    p: usize,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<EstimationResult<C64>> {
    let phi = StateVector::basis(prep.num_qubits(), n)?;
    let shift = translation_operator(prep.num_qubits(), p)?;
    coherence_rate(prep, &phi, &shift, m_sum, mode)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntryProvenance {
    /// Control phases used for the entry's circuits.
    pub chis: Vec<f64>,
    /// Translation power `p`; 0 on the diagonal.
    pub shift: usize,
    pub mode: EstimationMode,
    pub std_error: f64,
    pub terms_evaluated: usize,
}

/// Matrix of `dρ/dt` elements with per-entry provenance.
#[derive(Clone, Debug)]
pub struct RateMatrix {
    entries: Operator,
    provenance: Vec<EntryProvenance>,
}

impl RateMatrix {
    pub fn from_parts(entries: Operator, provenance: Vec<EntryProvenance>) -> Result<Self> {
        let dim = entries.dim();
        if provenance.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: provenance.len(),
            });
        }
        Ok(Self {
            entries,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Operator {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries.get(row, col)
    }

    pub fn provenance(&self, row: usize, col: usize) -> &EntryProvenance {
        &self.provenance[row * self.dim() + col]
    }

    pub fn max_std_error(&self) -> f64 {
        self.provenance
            .iter()
            .map(|p| p.std_error)
            .fold(0.0, f64::max)
    }

    /// `max(1e-10, 5 · max std_error)`.
    pub fn tolerance(&self) -> f64 {
        RATE_TOL.max(STATIONARY_SIGMAS * self.max_std_error())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.entries.hermiticity_defect()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// Hermitian and traceless within [`RateMatrix::tolerance`].
    pub fn check_invariants(&self) -> Result<()> {
        let tol = self.tolerance();
        let herm = self.hermiticity_defect();
        if herm > tol {
            return Err(Error::Numeric(format!(
                "rate matrix hermiticity defect {herm:e} exceeds {tol:e}"
            )));
        }
        let tr = self.trace().norm();
        if tr > tol {
            return Err(Error::Numeric(format!(
                "rate matrix trace {tr:e} exceeds {tol:e}"
            )));
        }
        Ok(())
    }
}

pub(crate) fn entry_mode(mode: EstimationMode, dim: usize, row: usize, col: usize) -> EstimationMode {
    mode.derive((row * dim + col) as u64)
}

/// All `4^L` elements of `i[ρ(t), H]`.
pub fn rate_matrix(
    prep: &RhoPrep,
    m_sum: &WeightedPauliSum,
    mode: EstimationMode,
) -> Result<RateMatrix> {
    let dim = prep.dim();
    let cells: Vec<(C64, EntryProvenance)> = (0..dim * dim)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx / dim, idx % dim);
            let emode = entry_mode(mode, dim, row, col);
            if row == col {
                let r = diagonal_rate(prep, row, m_sum, emode)?;
                Ok((
                    C64::new(r.value, 0.0),
                    EntryProvenance {
                        chis: vec![FRAC_PI_2],
                        shift: 0,
                        mode: emode,
                        std_error: r.std_error,
                        terms_evaluated: r.terms_evaluated,
                    },
                ))
            } else {
                let p = (col + dim - row) % dim;
                let r = offdiagonal_rate(prep, row, p, m_sum, emode)?;
                Ok((
                    r.value,
                    EntryProvenance {
                        chis: vec![0.0, FRAC_PI_2],
                        shift: p,
                        mode: emode,
                        std_error: r.std_error,
                        terms_evaluated: r.terms_evaluated,
                    },
                ))
            }
        })
        .collect::<Result<_>>()?;
    let (values, provenance): (Vec<C64>, Vec<EntryProvenance>) = cells.into_iter().unzip();
    RateMatrix::from_parts(Operator::from_row_major(dim, values)?, provenance)
}

#[derive(Clone, Debug)]
pub struct ScanCandidate {
    pub label: String,
    pub state: StateVector,
}

impl ScanCandidate {
    pub fn new(label: impl Into<String>, state: StateVector) -> Self {
        Self {
            label: label.into(),
            state,
        }
    }

    /// `|n>` labelled by its index.
    pub fn basis(num_qubits: usize, n: usize) -> Result<Self> {
        Ok(Self::new(format!("|{n}>"), StateVector::basis(num_qubits, n)?))
    }
}

/// Time series of `i<Φ|[ρ(t), H]|Φ>` for one reference state.
#[derive(Clone, Debug)]
pub struct ScanReport {
    pub reference_label: String,
    pub time_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub is_stationary: bool,
    /// `(ω̂, uncertainty)` when the series oscillates measurably.
    pub extracted_frequency: Option<(f64, f64)>,
}

impl ScanReport {
    /// Flags the series stationary when every `|value|` is within
    /// `max(1e-9, 5·std_error)` of zero.
    pub fn new(
        reference_label: impl Into<String>,
        time_grid: Vec<f64>,
        values: Vec<f64>,
        std_errors: Vec<f64>,
    ) -> Result<Self> {
        if time_grid.is_empty() || time_grid.len() != values.len() || values.len() != std_errors.len() {
            return Err(Error::InvalidArgument(
                "scan needs equally long, nonempty time, value and error series".into(),
            ));
        }
        let is_stationary = values
            .iter()
            .zip(&std_errors)
            .all(|(v, se)| v.abs() <= STATIONARY_TOL.max(STATIONARY_SIGMAS * se));
        let mut report = Self {
            reference_label: reference_label.into(),
            time_grid,
            values,
            std_errors,
            is_stationary,
            extracted_frequency: None,
        };
        report.extracted_frequency = extract_frequency(&report).ok();
        Ok(report)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Evaluates `i<Φ|[ρ(t), H]|Φ>` over `time_grid` for each candidate, with
/// `ρ(t)` evolved from `psi0` under `hamiltonian`.
pub fn stationary_scan(
    psi0: &StateVector,
    hamiltonian: &Operator,
    candidates: &[ScanCandidate],
    m_sum: &WeightedPauliSum,
    time_grid: &[f64],
    mode: EstimationMode,
) -> Result<Vec<ScanReport>> {
    if candidates.is_empty() || time_grid.is_empty() {
        return Err(Error::InvalidArgument("scan needs candidates and times".into()));
    }
    let propagator = Propagator::new(hamiltonian)?;
    let preps: Vec<RhoPrep> = time_grid
        .iter()
        .map(|&t| {
            RhoPrep::new(
                psi0.clone(),
                &crate::circuit::Evolution::Unitary(propagator.unitary(t)),
            )
        })
        .collect::<Result<_>>()?;
    candidates
        .iter()
        .enumerate()
        .map(|(ci, cand)| {
            let points: Vec<EstimationResult<f64>> = preps
                .par_iter()
                .enumerate()
                .map(|(ti, prep)| {
                    let tag = (ci * time_grid.len() + ti) as u64;
                    commutator_expectation(prep, &cand.state, m_sum, mode.derive(tag))
                })
                .collect::<Result<_>>()?;
            ScanReport::new(
                cand.label.clone(),
                time_grid.to_vec(),
                points.iter().map(|p| p.value).collect(),
                points.iter().map(|p| p.std_error).collect(),
            )
        })
        .collect()
}

/// Zero-padding factor for the spectral peak search.
const PAD_FACTOR: usize = 16;

/// Dominant angular frequency of a scan: Hann-windowed, zero-padded DFT
/// peak refined by a parabola through the three highest bins.
///
/// The uncertainty is the native grid resolution `2π / (N Δt)`.
pub fn extract_frequency(report: &ScanReport) -> Result<(f64, f64)> {
    if report.is_stationary {
        return Err(Error::NoOscillation(format!(
            "{} is stationary",
            report.reference_label
        )));
    }
    let t = &report.time_grid;
    let n = t.len();
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "frequency extraction needs at least 8 points, got {n}"
        )));
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if dt.is_nan() || dt <= 0.0 || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::InvalidArgument(
            "frequency extraction needs a uniform increasing time grid".into(),
        ));
    }
    let mean = report.values.iter().sum::<f64>() / n as f64;
    let signal: Vec<f64> = report
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / (n - 1) as f64).cos());
            (v - mean) * w
        })
        .collect();
    if signal.iter().all(|v| v.abs() <= STATIONARY_TOL) {
        return Err(Error::NoOscillation(format!(
            "{} has no varying component",
            report.reference_label
        )));
    }
    let padded = n.next_power_of_two() * PAD_FACTOR;
    let magnitude = |k: usize| -> f64 {
        signal
            .iter()
            .enumerate()
            .map(|(i, &x)| C64::from_polar(x, -2.0 * PI * (k * i) as f64 / padded as f64))
            .sum::<C64>()
            .norm()
    };
    let spectrum: Vec<f64> = (0..=padded / 2).map(magnitude).collect();
    let peak = (1..spectrum.len())
        .max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]))
        .expect("spectrum has positive-frequency bins");
    let offset = if peak + 1 < spectrum.len() {
        let (l, c, r) = (spectrum[peak - 1], spectrum[peak], spectrum[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom.abs() > 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    let omega = 2.0 * PI * (peak as f64 + offset) / (padded as f64 * dt);
    let span = t[n - 1] - t[0];
    if 2.0 * PI / omega > span * (1.0 + 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "grid spans {span}, less than one period of the dominant oscillation"
        )));
    }
    Ok((omega, 2.0 * PI / (n as f64 * dt)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli_decompose, pauli_matrix, Pauli};

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn report(values: Vec<f64>, grid: Vec<f64>) -> ScanReport {
        let se = vec![0.0; values.len()];
        ScanReport::new("synthetic", grid, values, se).unwrap()
    }

    #[test]
    fn translation_examples() {
        assert_eq!(translation_operator(1, 1).unwrap(), pauli_matrix(Pauli::X));
        let t = translation_operator(2, 1).unwrap();
        assert_eq!(t.apply(StateVector::basis(2, 3).unwrap().amplitudes()),
                   StateVector::basis(2, 0).unwrap().amplitudes().to_vec());
        assert!(t.pow(4).is_identity(0.0));
        assert!(!t.pow(3).is_identity(0.0));
        assert!(translation_operator(2, 0).is_err());
        assert!(translation_operator(2, 4).is_err());
    }

    #[test]
    fn transfer_unitary_maps_states() {
        let a = StateVector::bloch(0.4, 1.0);
        let b = StateVector::bloch(2.1, -0.3);
        for (from, to) in [(&a, &b), (&a, &a), (&StateVector::basis(1, 0).unwrap(), &StateVector::basis(1, 1).unwrap())] {
            let u = transfer_unitary(from, to).unwrap();
            assert!(u.is_unitary(1e-13));
            let mapped = u.apply(from.amplitudes());
            for (x, y) in mapped.iter().zip(to.amplitudes()) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn sinusoid_frequency() {
        let grid = linspace(0.0, 3.0 * PI, 64);
        let values = grid.iter().map(|t| (2.0 * t).sin()).collect();
        let (omega, res) = extract_frequency(&report(values, grid)).unwrap();
        assert!((omega - 2.0).abs() <= res, "omega {omega} res {res}");
        assert!((omega - 2.0).abs() < 0.05);
    }

    #[test]
    fn constant_signal_has_no_frequency() {
        let grid = linspace(0.0, 3.0, 16);
        let r = report(vec![0.0; 16], grid.clone());
        assert!(r.is_stationary);
        assert!(matches!(extract_frequency(&r), Err(Error::NoOscillation(_))));
        let mut offset = report(vec![0.5; 16], grid);
        assert!(!offset.is_stationary);
        offset.extracted_frequency = None;
        assert!(matches!(extract_frequency(&offset), Err(Error::NoOscillation(_))));
    }

    #[test]
    fn short_or_irregular_grids_rejected() {
        let r = report(vec![1.0, -1.0, 1.0, -1.0], linspace(0.0, 1.0, 4));
        assert!(matches!(extract_frequency(&r), Err(Error::InvalidArgument(_))));
        let mut grid = linspace(0.0, 10.0, 16);
        grid[3] += 0.1;
        let vals = grid.iter().map(|t| t.sin()).collect();
        assert!(matches!(extract_frequency(&report(vals, grid)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_qubit_rates() {
        // H = -(ω/2)Z, ψ0(θ, φ): diagonal rates vanish, dρ01/dt = i(ω/2)e^{i(ωt-φ)} sin θ
        let (omega, theta, phi, t) = (-2.0, 1.1, 0.6, 0.8);
        let h = pauli_matrix(Pauli::Z).scale(C64::new(-omega / 2.0, 0.0));
        let h_sum = pauli_decompose(&h).unwrap();
        let prep = RhoPrep::from_hamiltonian(StateVector::bloch(theta, phi), &h, t).unwrap();
        for n in 0..2 {
            let r = diagonal_rate(&prep, n, &h_sum, EstimationMode::Exact).unwrap();
            assert!(r.value.abs() < 1e-14);
        }
        let r = offdiagonal_rate(&prep, 0, 1, &h_sum, EstimationMode::Exact).unwrap();
        let expected = C64::new(0.0, 1.0) * C64::from_polar(0.5 * omega * theta.sin(), omega * t - phi);
        assert!((r.value - expected).norm() < 1e-13);

        let ground = RhoPrep::from_hamiltonian(StateVector::bloch(0.0, 0.0), &h, t).unwrap();
        let r = offdiagonal_rate(&ground, 0, 1, &h_sum, EstimationMode::Exact).unwrap();
        assert!(r.value.norm() < 1e-14);
    }

    #[test]
    fn rate_matrix_at_equator() {
        // θ = π/2, φ = 0, t = 0: [[0, iω/2], [-iω/2, 0]]
        let omega = -2.0;
        let h = pauli_matrix(Pauli::Z).scale(C64::new(-omega / 2.0, 0.0));
        let prep = RhoPrep::from_hamiltonian(StateVector::bloch(FRAC_PI_2, 0.0), &h, 0.0).unwrap();
        let m = rate_matrix(&prep, &pauli_decompose(&h).unwrap(), EstimationMode::Exact).unwrap();
        let expected = Operator::from_rows(&[
            [C64::new(0.0, 0.0), C64::new(0.0, omega / 2.0)],
            [C64::new(0.0, -omega / 2.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        assert!(m.entries().max_abs_diff(&expected) < 1e-14);
        m.check_invariants().unwrap();
        assert_eq!(m.provenance(0, 1).shift, 1);
        assert_eq!(m.provenance(1, 1).shift, 0);
    }

    #[test]
    fn degenerate_hamiltonian_everything_stationary() {
        let h = Operator::identity(2);
        let h_sum = pauli_decompose(&h).unwrap();
        let cands = vec![
            ScanCandidate::basis(1, 0).unwrap(),
            ScanCandidate::new("|+>", StateVector::bloch(FRAC_PI_2, 0.0)),
        ];
        let reports = stationary_scan(&StateVector::bloch(1.0, 0.2), &h, &cands, &h_sum, &linspace(0.0, 3.0, 8), EstimationMode::Exact).unwrap();
        assert!(reports.iter().all(|r| r.is_stationary && r.extracted_frequency.is_none()));
    }
}
