//! Single-qubit amplitude damping: four element landscapes over `(θ, t)` and
//! the assembled rate matrix at one parameter point.

use commsim::estimator::{matrix_element, EstimationMode, RhoPrep};
use commsim::lindblad::{
    damping_channel, first_term_element, open_rate_matrix, second_term_element, DampingParams,
};
use commsim::qcore::{pauli_decompose, pauli_matrix, Operator, Pauli, StateVector, WeightedPauliSum};
use commsim::vonneumann::{coherence_rate, RateMatrix};
use rayon::prelude::*;

use crate::config::{Component, InitialState, JobConfig};
use crate::emit::{Axis, LandscapeGrid};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Panel {
    /// `i<0|[ρ,H]|1>`, selected component
    Coherence,
    /// `<0|LρL^+|0>`
    Jump,
    /// `-½<1|{ρ, L^+L}|1>`
    Decay,
    /// `-<0|ρL^+L|1>`, selected component
    OneSided,
}

impl Panel {
    pub const ALL: [Panel; 4] = [Panel::Coherence, Panel::Jump, Panel::Decay, Panel::OneSided];

    pub fn file_stem(self) -> &'static str {
        match self {
            Self::Coherence => "panel_a",
            Self::Jump => "panel_b",
            Self::Decay => "panel_c",
            Self::OneSided => "panel_d",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Coherence => "i<0|[rho,H]|1>",
            Self::Jump => "<0|L rho L^+|0>",
            Self::Decay => "-1/2 <1|{rho, L^+L}|1>",
            Self::OneSided => "-<0|rho L^+L|1>",
        }
    }
}

pub struct DemoOutput {
    pub params: DampingParams,
    pub panels: Vec<(Panel, LandscapeGrid)>,
    pub rate_matrix: RateMatrix,
}

struct Cell {
    values: [f64; 4],
}

fn evaluate_cell(
    prep: &RhoPrep,
    h_sum: &WeightedPauliSum,
    channel: &commsim::lindblad::LindbladChannel,
    component: Component,
    mode: EstimationMode,
) -> Result<Cell, CliError> {
    let ket0 = StateVector::basis(1, 0)?;
    let ket1 = StateVector::basis(1, 1)?;
    let x = pauli_matrix(Pauli::X);
    let id = Operator::identity(2);
    let identity = WeightedPauliSum::identity(1);
    let jump = channel.jump(0)?;

    let coherence = coherence_rate(prep, &ket0, &x, h_sum, mode.derive(0))?.value;
    let population = first_term_element(prep, &ket0, channel, 0, &id, mode.derive(1))?.value;
    let decay = second_term_element(prep, &ket1, channel, 0, &id, mode.derive(2))?.value;
    let one_sided = matrix_element(prep, &ket0, &identity, jump.number_sum(), &x, mode.derive(3))?.value;
    Ok(Cell {
        values: [
            component.of(coherence),
            population.re,
            -0.5 * decay.re,
            -component.of(one_sided),
        ],
    })
}

/// Landscapes over `cfg.theta_grid × cfg.time_grid` and the rate matrix at
/// `(θ, φ, δt)` from the job.
pub fn run_damping_demo(cfg: &JobConfig) -> Result<DemoOutput, CliError> {
    let (theta, phi) = match cfg.psi0 {
        InitialState::Bloch { theta, phi } => (theta, phi),
        InitialState::Amplitudes(_) => {
            return Err(CliError::Config("damping-demo takes --theta/--phi, not --psi0".into()))
        }
    };
    let params = DampingParams::new(cfg.kappa, cfg.omega, theta, phi, cfg.delta_t)?;
    let h = params.hamiltonian();
    let h_sum = pauli_decompose(&h)?;
    let channel = damping_channel(cfg.kappa)?;
    let mode = cfg.estimation_mode()?;

    let (nt, ns) = (cfg.theta_grid.len(), cfg.time_grid.len());
    let cells: Vec<Cell> = (0..nt * ns)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / ns, idx % ns);
            let prep = RhoPrep::from_hamiltonian(
                StateVector::bloch(cfg.theta_grid[i], phi),
                &h,
                cfg.time_grid[j],
            )?;
            evaluate_cell(&prep, &h_sum, &channel, cfg.component, mode.derive(idx as u64))
        })
        .collect::<Result<_, _>>()?;

    let panels = Panel::ALL
        .iter()
        .enumerate()
        .map(|(p, &panel)| {
            let values = cells
                .chunks(ns)
                .map(|row| row.iter().map(|c| c.values[p]).collect())
                .collect();
            let grid = LandscapeGrid::new(
                Axis::new("theta", cfg.theta_grid.clone()),
                Axis::new("t", cfg.time_grid.clone()),
                values,
            )?;
            Ok((panel, grid))
        })
        .collect::<Result<_, CliError>>()?;

    let rate_matrix = open_rate_matrix(&params.prep()?, &channel, &h_sum, mode.derive(u64::MAX))?;
    Ok(DemoOutput {
        params,
        panels,
        rate_matrix,
    })
}
