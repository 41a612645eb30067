use std::path::PathBuf;

use commsim::estimator::{zchi_expectation, RhoPrep};
use commsim::lindblad::{
    damping_rate_evaluator, integrate_rates, lindblad_rhs, open_rate_matrix, LindbladChannel,
};
use commsim::qcore::{Operator, WeightedPauliSum};
use commsim::vonneumann::{stationary_scan, ScanCandidate};
use commsim::C64;
use serde_json::{json, Value};

use crate::config::{Command, JobConfig, OutputFormat, Reference};
use crate::demo::run_damping_demo;
use crate::emit::{self, Axis, LandscapeGrid};
use crate::error::CliError;

/// Parameters and tool version attached to every artefact.
pub fn metadata(cfg: &JobConfig) -> Value {
    json!({
        "tool": "commsim",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
    })
}

fn rows(op: &Operator) -> Vec<Vec<C64>> {
    (0..op.dim()).map(|r| op.row(r).to_vec()).collect()
}

pub fn run(cfg: &JobConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Estimate => estimate(cfg),
        Command::VnScan => vn_scan(cfg),
        Command::LindbladRate => lindblad_rate(cfg),
        Command::DampingDemo => damping_demo(cfg),
        Command::Integrate => integrate(cfg),
    }
}

fn estimate(cfg: &JobConfig) -> Result<(), CliError> {
    let h = cfg.hamiltonian_operator()?;
    let prep = RhoPrep::from_hamiltonian(cfg.initial_state()?, &h, cfg.time)?;
    let identity = WeightedPauliSum::identity(cfg.num_qubits);
    let r = zchi_expectation(
        &prep,
        &cfg.reference_state()?,
        &identity,
        &cfg.observable_sum()?,
        &Operator::identity(prep.dim()),
        cfg.chi,
        cfg.estimation_mode()?,
    )?;
    let out = match cfg.output_format {
        OutputFormat::Csv => format!(
            "chi,value,std_error,shots_used,terms_evaluated\n{},{},{},{},{}\n",
            emit::fmt_f64(cfg.chi),
            emit::fmt_f64(r.value),
            emit::fmt_f64(r.std_error),
            r.shots_used,
            r.terms_evaluated
        ),
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "meta": metadata(cfg),
            "axes": [Axis::new("chi", vec![cfg.chi])],
            "values": {
                "value": r.value,
                "std_error": r.std_error,
                "shots_used": r.shots_used,
                "terms_evaluated": r.terms_evaluated,
            },
        }))?,
    };
    emit::write_output(cfg.output_path.as_deref(), &out)
}

fn vn_scan(cfg: &JobConfig) -> Result<(), CliError> {
    let h = cfg.hamiltonian_operator()?;
    let mut candidates = (0..1usize << cfg.num_qubits)
        .map(|n| ScanCandidate::basis(cfg.num_qubits, n))
        .collect::<Result<Vec<_>, _>>()?;
    if let Reference::Amplitudes(_) = cfg.phi_ref {
        candidates.push(ScanCandidate::new("phi_ref", cfg.reference_state()?));
    }
    let reports = stationary_scan(
        &cfg.initial_state()?,
        &h,
        &candidates,
        &cfg.hamiltonian_sum()?,
        &cfg.time_grid,
        cfg.estimation_mode()?,
    )?;
    let summary: Vec<Value> = reports
        .iter()
        .map(|r| {
            json!({
                "reference": r.reference_label,
                "stationary": r.is_stationary,
                "max_abs": r.max_abs(),
                "frequency": r.extracted_frequency.map(|f| f.0),
                "frequency_uncertainty": r.extracted_frequency.map(|f| f.1),
            })
        })
        .collect();
    let grid = LandscapeGrid::new(
        Axis::new("reference", (0..reports.len()).map(|i| i as f64).collect()),
        Axis::new("t", cfg.time_grid.clone()),
        reports.iter().map(|r| r.values.clone()).collect(),
    )?;
    let out = match cfg.output_format {
        OutputFormat::Csv => {
            for s in &summary {
                eprintln!("{s}");
            }
            emit::grid_csv(&grid)
        }
        OutputFormat::Json => {
            let mut doc: Value = serde_json::from_str(&emit::grid_json(&grid, metadata(cfg))?)?;
            doc["extra"] = json!({ "reports": summary });
            serde_json::to_string_pretty(&doc)?
        }
    };
    emit::write_output(cfg.output_path.as_deref(), &out)
}

fn channel(cfg: &JobConfig) -> Result<LindbladChannel, CliError> {
    Ok(LindbladChannel::new(cfg.num_qubits, cfg.jump_operators()?)?)
}

/// Open-system rate matrix at `ρ(δt)`.
fn lindblad_rate(cfg: &JobConfig) -> Result<(), CliError> {
    let h = cfg.hamiltonian_operator()?;
    let prep = RhoPrep::from_hamiltonian(cfg.initial_state()?, &h, cfg.delta_t)?;
    let m = open_rate_matrix(&prep, &channel(cfg)?, &cfg.hamiltonian_sum()?, cfg.estimation_mode()?)?;
    let out = match cfg.output_format {
        OutputFormat::Csv => emit::matrix_csv(&rows(m.entries())),
        OutputFormat::Json => emit::matrix_json(
            &rows(m.entries()),
            metadata(cfg),
            Some(json!({
                "trace": emit::Complex::from(m.trace()),
                "hermiticity_defect": m.hermiticity_defect(),
                "max_std_error": m.max_std_error(),
            })),
        )?,
    };
    emit::write_output(cfg.output_path.as_deref(), &out)
}

fn damping_demo(cfg: &JobConfig) -> Result<(), CliError> {
    let dir = cfg
        .output_path
        .clone()
        .unwrap_or_else(|| PathBuf::from("damping_demo"));
    let output = run_damping_demo(cfg)?;
    let ext = emit::extension(cfg.output_format);
    for (panel, grid) in &output.panels {
        let text = match cfg.output_format {
            OutputFormat::Csv => emit::grid_csv(grid),
            OutputFormat::Json => {
                let mut meta = metadata(cfg);
                meta["panel"] = json!(panel.description());
                meta["component"] = json!(cfg.component);
                emit::grid_json(grid, meta)?
            }
        };
        emit::write_output(Some(&dir.join(format!("{}.{ext}", panel.file_stem()))), &text)?;
    }
    let matrix = rows(output.rate_matrix.entries());
    let text = match cfg.output_format {
        OutputFormat::Csv => emit::matrix_csv(&matrix),
        OutputFormat::Json => {
            let p = output.params;
            let mut meta = metadata(cfg);
            meta["point"] = json!({
                "theta": p.theta, "phi": p.phi, "omega": p.omega, "kappa": p.kappa, "delta_t": p.delta_t,
            });
            emit::matrix_json(&matrix, meta, None)?
        }
    };
    emit::write_output(Some(&dir.join(format!("rate_matrix.{ext}"))), &text)?;
    if cfg.output_format == OutputFormat::Csv {
        emit::write_output(
            Some(&dir.join("meta.json")),
            &serde_json::to_string_pretty(&metadata(cfg))?,
        )?;
    }
    Ok(())
}

/// Runge-Kutta trajectory sampled at the job's time grid. Uses the dense
/// master-equation right-hand side when a Hamiltonian is given, otherwise
/// the single-qubit damping rate map.
fn integrate(cfg: &JobConfig) -> Result<(), CliError> {
    let rho0 = cfg.initial_state()?.projector();
    let trajectory = if cfg.hamiltonian.is_some() {
        let h = cfg.hamiltonian_operator()?;
        let ch = channel(cfg)?;
        integrate_rates(&rho0, |rho: &Operator| lindblad_rhs(rho, &h, &ch), cfg.t_final, cfg.dt)?
    } else {
        if cfg.num_qubits != 1 {
            return Err(CliError::Config(
                "integrate without --hamiltonian uses the single-qubit damping map".into(),
            ));
        }
        integrate_rates(&rho0, damping_rate_evaluator(cfg.omega, cfg.kappa), cfg.t_final, cfg.dt)?
    };
    if let Some(t) = cfg.time_grid.iter().find(|&&t| t < 0.0 || t > cfg.t_final + cfg.dt / 2.0) {
        return Err(CliError::Config(format!(
            "time-grid point {t} lies outside [0, {}]",
            cfg.t_final
        )));
    }
    let picks: Vec<usize> = cfg
        .time_grid
        .iter()
        .map(|&t| {
            trajectory
                .times
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                .map_or(0, |(i, _)| i)
        })
        .collect();
    let times: Vec<f64> = picks.iter().map(|&i| trajectory.times[i]).collect();
    let states: Vec<Vec<Vec<C64>>> = picks.iter().map(|&i| rows(&trajectory.states[i])).collect();
    let out = match cfg.output_format {
        OutputFormat::Csv => emit::trajectory_csv(&times, &states),
        OutputFormat::Json => emit::trajectory_json(&times, &states, metadata(cfg))?,
    };
    emit::write_output(cfg.output_path.as_deref(), &out)
}

/// Caps the global thread pool from `COMMSIM_THREADS` (0 or unset: automatic).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("COMMSIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("COMMSIM_THREADS `{raw}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}
