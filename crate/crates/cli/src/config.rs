//! Job description assembled from command-line flags and an optional JSON
//! file. Flags override file values; anything left unset takes its default.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use commsim::estimator::EstimationMode;
use commsim::qcore::pauli::parse_coefficient;
use commsim::qcore::{Operator, StateVector, WeightedPauliSum};
use commsim::C64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_GRID: usize = 64;

#[derive(Parser, Debug)]
#[command(name = "commsim", version, about = "Commutation-circuit simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Estimate <Φ|Z^χ|Φ> for one circuit configuration
    Estimate(JobArgs),
    /// Scan i<Φ|[ρ(t),H]|Φ> over time for candidate eigenstates
    VnScan(JobArgs),
    /// Full open-system rate matrix at one time
    LindbladRate(JobArgs),
    /// Single-qubit amplitude-damping landscapes and rate matrix
    DampingDemo(JobArgs),
    /// Runge-Kutta integration of the density-matrix rates
    Integrate(JobArgs),
}

impl CommandArgs {
    pub fn split(self) -> (Command, JobArgs) {
        match self {
            Self::Estimate(a) => (Command::Estimate, a),
            Self::VnScan(a) => (Command::VnScan, a),
            Self::LindbladRate(a) => (Command::LindbladRate, a),
            Self::DampingDemo(a) => (Command::DampingDemo, a),
            Self::Integrate(a) => (Command::Integrate, a),
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct JobArgs {
    /// JSON job file; flags take precedence
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(short = 'L', long = "num-qubits")]
    pub num_qubits: Option<usize>,
    /// Pauli-sum text, e.g. "-1.0 Z0; 0.5 X0 X1"
    #[arg(short = 'H', long, allow_hyphen_values = true)]
    pub hamiltonian: Option<String>,
    /// Jump operator as Pauli-sum text (repeatable)
    #[arg(long = "lindblad", allow_hyphen_values = true)]
    pub lindblad_ops: Vec<String>,
    /// Observable M for `estimate` (defaults to the Hamiltonian)
    #[arg(long, allow_hyphen_values = true)]
    pub observable: Option<String>,
    /// Comma-separated amplitudes, e.g. "0.6,0.8j"
    #[arg(long, allow_hyphen_values = true)]
    pub psi0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Basis index or comma-separated amplitudes
    #[arg(long = "phi-ref", allow_hyphen_values = true)]
    pub phi_ref: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub chi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub time: Option<f64>,
    /// "start:stop:count" or a comma-separated list
    #[arg(long = "time-grid", allow_hyphen_values = true)]
    pub time_grid: Option<String>,
    #[arg(long = "theta-grid", allow_hyphen_values = true)]
    pub theta_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long = "delta-t")]
    pub delta_t: Option<f64>,
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short = 'o', long = "output")]
    pub output_path: Option<PathBuf>,
    #[arg(long = "format", value_enum)]
    pub output_format: Option<OutputFormat>,
    #[arg(long, value_enum)]
    pub component: Option<Component>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Estimate,
    VnScan,
    LindbladRate,
    DampingDemo,
    Integrate,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    #[default]
    Re,
    Im,
    Abs,
}

impl Component {
    pub fn of(self, z: C64) -> f64 {
        match self {
            Self::Re => z.re,
            Self::Im => z.im,
            Self::Abs => z.norm(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Amplitudes(Vec<[f64; 2]>),
    Bloch { theta: f64, phi: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Basis(usize),
    Amplitudes(Vec<[f64; 2]>),
}

/// Validated job; every field resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub command: Command,
    pub num_qubits: usize,
    pub hamiltonian: Option<String>,
    pub lindblad_ops: Vec<String>,
    pub observable: Option<String>,
    pub psi0: InitialState,
    pub phi_ref: Reference,
    pub chi: f64,
    pub time: f64,
    pub time_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub omega: f64,
    pub kappa: f64,
    pub delta_t: f64,
    pub t_final: f64,
    pub dt: f64,
    pub mode: Mode,
    pub shots: u64,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub component: Component,
}

/// Job file contents: any subset of [`JobArgs`] fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileArgs {
    num_qubits: Option<usize>,
    hamiltonian: Option<String>,
    #[serde(default)]
    lindblad_ops: Vec<String>,
    observable: Option<String>,
    psi0: Option<String>,
    theta: Option<f64>,
    phi: Option<f64>,
    phi_ref: Option<String>,
    chi: Option<f64>,
    time: Option<f64>,
    time_grid: Option<String>,
    theta_grid: Option<String>,
    omega: Option<f64>,
    kappa: Option<f64>,
    delta_t: Option<f64>,
    t_final: Option<f64>,
    dt: Option<f64>,
    mode: Option<Mode>,
    shots: Option<u64>,
    seed: Option<u64>,
    output_path: Option<PathBuf>,
    output_format: Option<OutputFormat>,
    component: Option<Component>,
}

impl JobArgs {
    fn overlay(self, file: FileArgs) -> Self {
        Self {
            config: self.config,
            num_qubits: self.num_qubits.or(file.num_qubits),
            hamiltonian: self.hamiltonian.or(file.hamiltonian),
            lindblad_ops: if self.lindblad_ops.is_empty() {
                file.lindblad_ops
            } else {
                self.lindblad_ops
            },
            observable: self.observable.or(file.observable),
            psi0: self.psi0.or(file.psi0),
            theta: self.theta.or(file.theta),
            phi: self.phi.or(file.phi),
            phi_ref: self.phi_ref.or(file.phi_ref),
            chi: self.chi.or(file.chi),
            time: self.time.or(file.time),
            time_grid: self.time_grid.or(file.time_grid),
            theta_grid: self.theta_grid.or(file.theta_grid),
            omega: self.omega.or(file.omega),
            kappa: self.kappa.or(file.kappa),
            delta_t: self.delta_t.or(file.delta_t),
            t_final: self.t_final.or(file.t_final),
            dt: self.dt.or(file.dt),
            mode: self.mode.or(file.mode),
            shots: self.shots.or(file.shots),
            seed: self.seed.or(file.seed),
            output_path: self.output_path.or(file.output_path),
            output_format: self.output_format.or(file.output_format),
            component: self.component.or(file.component),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn load_file(path: &Path) -> Result<FileArgs, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        config_err(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Complex list such as `"0.6, 0.8j"` or `"1,0,0,-1"`.
pub fn parse_amplitudes(text: &str) -> Result<Vec<C64>, CliError> {
    text.split(',')
        .map(str::trim)
        .enumerate()
        .map(|(i, tok)| {
            parse_coefficient(tok).ok_or_else(|| {
                config_err(format!("amplitude {} `{tok}` is not a complex number", i + 1))
            })
        })
        .collect()
}

/// `"start:stop:count"` (inclusive linspace) or a comma-separated list;
/// must be nonempty, finite and strictly increasing.
pub fn parse_grid(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    let grid = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(config_err(format!("{name}: expected start:stop:count, got `{text}`")));
        }
        let num = |tok: &str| {
            tok.parse::<f64>()
                .map_err(|_| config_err(format!("{name}: `{tok}` is not a number")))
        };
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2]
            .parse()
            .map_err(|_| config_err(format!("{name}: `{}` is not a point count", parts[2])))?;
        linspace(start, stop, count)
    } else {
        text.split(',')
            .map(str::trim)
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| config_err(format!("{name}: `{tok}` is not a number")))
            })
            .collect::<Result<_, _>>()?
    };
    check_grid(name, &grid)?;
    Ok(grid)
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(config_err(format!("{name} is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(config_err(format!("{name} contains non-finite value {v}")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(config_err(format!(
            "{name} is not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn pairs(amps: &[C64]) -> Vec<[f64; 2]> {
    amps.iter().map(|z| [z.re, z.im]).collect()
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("{name} must be finite, got {v}")))
    }
}

/// Resolves defaults and validates a job.
pub fn parse_config(command: Command, args: JobArgs) -> Result<JobConfig, CliError> {
    let args = match args.config.clone() {
        Some(path) => {
            let file = load_file(&path)?;
            args.overlay(file)
        }
        None => args,
    };
    let demo = command == Command::DampingDemo;
    let num_qubits = match (demo, args.num_qubits) {
        (true, Some(l)) if l != 1 => {
            return Err(config_err(format!("damping-demo is single-qubit, got -L {l}")))
        }
        (true, _) => 1,
        (false, Some(l)) => l,
        (false, None) => 1,
    };
    if !(1..=10).contains(&num_qubits) {
        return Err(config_err(format!("-L must be in 1..=10, got {num_qubits}")));
    }
    let dim = 1usize << num_qubits;

    for (label, text) in args
        .hamiltonian
        .iter()
        .map(|t| ("hamiltonian", t))
        .chain(args.observable.iter().map(|t| ("observable", t)))
        .chain(args.lindblad_ops.iter().map(|t| ("lindblad", t)))
    {
        WeightedPauliSum::parse(text, num_qubits)
            .map_err(|e| config_err(format!("{label}: {e}")))?;
    }

    let psi0 = match (&args.psi0, args.theta) {
        (Some(text), _) => {
            let amps = parse_amplitudes(text)?;
            if amps.len() != dim {
                return Err(config_err(format!(
                    "psi0 has {} amplitudes, expected {dim}",
                    amps.len()
                )));
            }
            StateVector::normalized(amps.clone()).map_err(|e| config_err(format!("psi0: {e}")))?;
            InitialState::Amplitudes(pairs(&amps))
        }
        (None, Some(theta)) if num_qubits == 1 => InitialState::Bloch {
            theta: finite("theta", theta)?,
            phi: finite("phi", args.phi.unwrap_or(0.0))?,
        },
        (None, Some(_)) => {
            return Err(config_err("--theta/--phi describe a single qubit; use --psi0"))
        }
        (None, None) if num_qubits == 1 => InitialState::Bloch {
            theta: if demo { FRAC_PI_2 } else { 0.0 },
            phi: finite("phi", args.phi.unwrap_or(0.0))?,
        },
        (None, None) => {
            let mut amps = vec![C64::new(0.0, 0.0); dim];
            amps[0] = C64::new(1.0, 0.0);
            InitialState::Amplitudes(pairs(&amps))
        }
    };

    let phi_ref = match &args.phi_ref {
        None => Reference::Basis(0),
        Some(text) => match text.trim().parse::<usize>() {
            Ok(n) if n < dim => Reference::Basis(n),
            Ok(n) => {
                return Err(config_err(format!(
                    "phi-ref index {n} out of range for {num_qubits} qubits"
                )))
            }
            Err(_) => {
                let amps = parse_amplitudes(text)?;
                if amps.len() != dim {
                    return Err(config_err(format!(
                        "phi-ref has {} amplitudes, expected {dim}",
                        amps.len()
                    )));
                }
                StateVector::normalized(amps.clone())
                    .map_err(|e| config_err(format!("phi-ref: {e}")))?;
                Reference::Amplitudes(pairs(&amps))
            }
        },
    };

    let time_grid = match &args.time_grid {
        Some(text) => parse_grid("time-grid", text)?,
        None if demo => linspace(0.0, 3.0, DEFAULT_GRID),
        None => linspace(0.0, 3.0, 32),
    };
    let theta_grid = match &args.theta_grid {
        Some(text) => parse_grid("theta-grid", text)?,
        None => linspace(0.0, 2.0 * PI, DEFAULT_GRID),
    };

    let mode = args.mode.unwrap_or_default();
    let shots = args.shots.unwrap_or(100_000);
    if mode == Mode::Sampled && shots == 0 {
        return Err(config_err("shots must be at least 1"));
    }
    let kappa = finite("kappa", args.kappa.unwrap_or(1.0))?;
    if kappa < 0.0 {
        return Err(config_err(format!("kappa must be >= 0, got {kappa}")));
    }
    let positive = |name: &str, v: f64| -> Result<f64, CliError> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(config_err(format!("{name} must be > 0, got {v}")))
        }
    };
    let t_final = finite("t-final", args.t_final.unwrap_or(3.0))?;
    if t_final < 0.0 {
        return Err(config_err(format!("t-final must be >= 0, got {t_final}")));
    }

    Ok(JobConfig {
        command,
        num_qubits,
        hamiltonian: args.hamiltonian,
        lindblad_ops: args.lindblad_ops,
        observable: args.observable,
        psi0,
        phi_ref,
        chi: finite("chi", args.chi.unwrap_or(FRAC_PI_2))?,
        time: finite("time", args.time.unwrap_or(0.0))?,
        time_grid,
        theta_grid,
        omega: finite("omega", args.omega.unwrap_or(-2.0))?,
        kappa,
        delta_t: positive("delta-t", args.delta_t.unwrap_or(0.1))?,
        t_final,
        dt: positive("dt", args.dt.unwrap_or(1e-3))?,
        mode,
        shots,
        seed: args.seed.unwrap_or(0),
        output_path: args.output_path,
        output_format: args.output_format.unwrap_or_default(),
        component: args.component.unwrap_or_default(),
    })
}

fn complex(pairs: &[[f64; 2]]) -> Vec<C64> {
    pairs.iter().map(|p| C64::new(p[0], p[1])).collect()
}

impl JobConfig {
    pub fn estimation_mode(&self) -> Result<EstimationMode, CliError> {
        Ok(match self.mode {
            Mode::Exact => EstimationMode::Exact,
            Mode::Sampled => EstimationMode::sampled(self.shots, self.seed)?,
        })
    }

    pub fn initial_state(&self) -> Result<StateVector, CliError> {
        Ok(match &self.psi0 {
            InitialState::Amplitudes(a) => StateVector::normalized(complex(a))?,
            InitialState::Bloch { theta, phi } => StateVector::bloch(*theta, *phi),
        })
    }

    pub fn reference_state(&self) -> Result<StateVector, CliError> {
        Ok(match &self.phi_ref {
            Reference::Basis(n) => StateVector::basis(self.num_qubits, *n)?,
            Reference::Amplitudes(a) => StateVector::normalized(complex(a))?,
        })
    }

    fn sum(&self, label: &str, text: &str) -> Result<WeightedPauliSum, CliError> {
        WeightedPauliSum::parse(text, self.num_qubits)
            .map_err(|e| config_err(format!("{label}: {e}")))
    }

    /// The Hamiltonian, required by every command except `damping-demo`.
    pub fn hamiltonian_sum(&self) -> Result<WeightedPauliSum, CliError> {
        let text = self
            .hamiltonian
            .as_deref()
            .ok_or_else(|| config_err("--hamiltonian is required"))?;
        self.sum("hamiltonian", text)
    }

    pub fn hamiltonian_operator(&self) -> Result<Operator, CliError> {
        let sum = self.hamiltonian_sum()?;
        let op = commsim::qcore::pauli_reconstruct(&sum);
        if !op.is_hermitian(1e-10) {
            return Err(config_err("hamiltonian is not Hermitian"));
        }
        Ok(op)
    }

    pub fn observable_sum(&self) -> Result<WeightedPauliSum, CliError> {
        match &self.observable {
            Some(text) => self.sum("observable", text),
            None => self.hamiltonian_sum(),
        }
    }

    pub fn jump_operators(&self) -> Result<Vec<Operator>, CliError> {
        self.lindblad_ops
            .iter()
            .map(|t| Ok(commsim::qcore::pauli_reconstruct(&self.sum("lindblad", t)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Result<JobConfig, CliError> {
        let cli = Cli::try_parse_from(argv).map_err(|e| config_err(e.to_string()))?;
        let (cmd, args) = cli.command.split();
        parse_config(cmd, args)
    }

    #[test]
    fn damping_demo_defaults() {
        let cfg = parse(&["commsim", "damping-demo", "--omega", "-2", "--kappa", "1", "--phi", "0"]).unwrap();
        assert_eq!(cfg.command, Command::DampingDemo);
        assert_eq!(cfg.num_qubits, 1);
        assert_eq!((cfg.omega, cfg.kappa), (-2.0, 1.0));
        assert_eq!(cfg.psi0, InitialState::Bloch { theta: FRAC_PI_2, phi: 0.0 });
        assert_eq!(cfg.theta_grid.len(), 64);
        assert_eq!(cfg.time_grid.len(), 64);
        assert_eq!(*cfg.theta_grid.last().unwrap(), 2.0 * PI);
        assert_eq!(*cfg.time_grid.last().unwrap(), 3.0);
        assert_eq!(cfg.mode, Mode::Exact);
        assert_eq!(cfg.output_format, OutputFormat::Csv);
        assert_eq!(cfg.chi, FRAC_PI_2);
    }

    #[test]
    fn single_z_hamiltonian() {
        let cfg = parse(&["commsim", "estimate", "-L", "1", "-H", "1.0 Z0"]).unwrap();
        let h = cfg.hamiltonian_operator().unwrap();
        assert_eq!(h, commsim::qcore::pauli_matrix(commsim::qcore::Pauli::Z));
    }

    #[test]
    fn malformed_coefficient_names_token() {
        let err = parse(&["commsim", "estimate", "-L", "1", "-H", "-0.5jj Z0"]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("-0.5jj"), "{msg}");
        assert_eq!(err.exit_code(), 2);
        let err = parse(&["commsim", "estimate", "-L", "1", "-H", "1.0 Z0\n2.0 X3"]).unwrap_err();
        assert!(err.to_string().contains("X3") && err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn grids_validated() {
        assert_eq!(parse_grid("g", "0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("g", "0, 0.5, 2").unwrap(), vec![0.0, 0.5, 2.0]);
        assert!(parse_grid("g", "0:1:0").is_err());
        assert!(parse_grid("g", "1,0").is_err());
        assert!(parse_grid("g", "0,x").unwrap_err().to_string().contains("`x`"));
        assert!(parse(&["commsim", "vn-scan", "-H", "1 Z0", "--time-grid", "1,1"]).is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("commsim-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("job.json");
        std::fs::write(&path, r#"{"num_qubits": 2, "hamiltonian": "1 Z0 Z1", "kappa": 0.5, "mode": "sampled", "seed": 9}"#).unwrap();
        let cfg = parse(&["commsim", "lindblad-rate", "--config", path.to_str().unwrap(), "--kappa", "0.25"]).unwrap();
        assert_eq!(cfg.num_qubits, 2);
        assert_eq!(cfg.kappa, 0.25);
        assert_eq!(cfg.mode, Mode::Sampled);
        assert_eq!(cfg.seed, 9);
        std::fs::write(&path, r#"{"num_qubits": 2, "bogus": 1}"#).unwrap();
        assert!(parse(&["commsim", "estimate", "--config", path.to_str().unwrap()]).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn states_and_references() {
        let cfg = parse(&["commsim", "estimate", "-L", "2", "-H", "1 Z0", "--psi0", "1,0,0,1j", "--phi-ref", "3"]).unwrap();
        let psi = cfg.initial_state().unwrap();
        assert!((psi.amplitudes()[3] - C64::new(0.0, 0.5f64.sqrt())).norm() < 1e-15);
        assert_eq!(cfg.phi_ref, Reference::Basis(3));
        assert!(parse(&["commsim", "estimate", "-L", "2", "-H", "1 Z0", "--phi-ref", "4"]).is_err());
        assert!(parse(&["commsim", "estimate", "-L", "2", "-H", "1 Z0", "--psi0", "1,0"]).is_err());
        assert!(parse(&["commsim", "estimate", "-L", "2", "--theta", "1"]).is_err());
        assert!(parse(&["commsim", "damping-demo", "-L", "2"]).is_err());
    }
}
