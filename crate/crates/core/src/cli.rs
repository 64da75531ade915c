//! The `csign` command-line front end.
//!
//! Values are resolved as: command-line flag, then `CSIGN_*` environment
//! variable, then the TOML config file, then built-in defaults.
//!
//! Exit codes: 2 for unreadable or malformed configuration, 3 for parameters
//! that fail validation, 4 for numerical failures during a run.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::{self, CalibrateError, MismatchMetric};
use crate::circuit::{CircuitError, GateArray, NsModel, SimParams};
use crate::dynamics::Frame;
use crate::lindblad::{LindbladError, StepSize, StepperConfig};
use crate::sweep::{self, Axis, Execution, InputSelector, SweepError, SweepSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        match e {
            CircuitError::Lindblad(l) => l.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<LindbladError> for CliError {
    fn from(e: LindbladError) -> Self {
        match e {
            LindbladError::Config(_) | LindbladError::NegativeDuration(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Spec(s) => CliError::Validation(s),
            SweepError::Circuit(c) => c.into(),
            SweepError::Io(io) => CliError::Io(io),
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "csign", version, about = "Cavity-NS C-Sign gate simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one gate and print the JSON report.
    Simulate(Common),
    /// Sweep up to two parameters and write CSV plus a JSON manifest.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Fill the wall_ms column (makes the output non-reproducible).
        #[arg(long, env = "CSIGN_RECORD_TIMING")]
        record_timing: bool,
    },
    /// Tabulate analytic duration candidates, or commensurable detunings
    /// when ratios are given.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Largest gate duration considered.
        #[arg(long, env = "CSIGN_HORIZON")]
        horizon: Option<f64>,
        /// Smallest gate duration considered.
        #[arg(long, env = "CSIGN_T_MIN")]
        t_min: Option<f64>,
        /// Comma-separated ratios p/q, e.g. `5/7,3/4`.
        #[arg(long, env = "CSIGN_RATIOS", value_delimiter = ',')]
        ratios: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long, env = "CSIGN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Gate duration in units of π/(√2 g).
    #[arg(long, env = "CSIGN_T", allow_hyphen_values = true)]
    pub t: Option<f64>,
    /// Detuning Δ/g.
    #[arg(long, env = "CSIGN_DELTA_OVER_G", allow_hyphen_values = true)]
    pub delta_over_g: Option<f64>,
    /// Photon-leak amplitude l_y/g.
    #[arg(long, env = "CSIGN_LY_OVER_G", allow_hyphen_values = true)]
    pub ly_over_g: Option<f64>,
    /// Phase correction after the NS stages (0 or 1).
    #[arg(long, env = "CSIGN_PHS", value_parser = clap::value_parser!(u8).range(0..=1))]
    pub phs: Option<u8>,
    /// Integration steps per NS stage.
    #[arg(long, env = "CSIGN_DT_STEPS")]
    pub dt_steps: Option<usize>,
    /// Worker threads (default: available cores).
    #[arg(long, env = "CSIGN_WORKERS")]
    pub workers: Option<usize>,
    /// Use a random computational input drawn from this seed.
    #[arg(long, env = "CSIGN_SEED")]
    pub seed: Option<u64>,
    /// Output path.
    #[arg(long, env = "CSIGN_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub t: f64,
    pub delta_over_g: f64,
    pub ly_over_g: f64,
    pub phs: u8,
    pub g: f64,
    pub omega_c_over_g: f64,
    pub atom_decay_over_g: f64,
    pub ns_model: NsModel,
    pub frame: Frame,
    pub exact_when_closed: bool,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        let d = SimParams::default();
        Self {
            t: d.t,
            delta_over_g: d.delta_over_g,
            ly_over_g: d.ly_over_g,
            phs: u8::from(d.phs),
            g: d.g,
            omega_c_over_g: d.omega_c_over_g,
            atom_decay_over_g: d.atom_decay_over_g,
            ns_model: d.ns_model,
            frame: d.frame,
            exact_when_closed: d.exact_when_closed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<Axis>,
    pub input: InputSelector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateConfig {
    pub horizon: f64,
    pub t_min: f64,
    pub ratios: Vec<[u64; 2]>,
    pub metric: MismatchMetric,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self { horizon: 100.0, t_min: 2.0, ratios: Vec::new(), metric: MismatchMetric::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub record_timing: bool,
    pub workers: Option<usize>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub stepper: StepperConfig,
    pub sweep: SweepConfig,
    pub calibrate: CalibrateConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Applies the command-line (or environment) overrides.
    pub fn with_overrides(mut self, c: &Common) -> Self {
        let p = &mut self.physics;
        if let Some(v) = c.t {
            p.t = v;
        }
        if let Some(v) = c.delta_over_g {
            p.delta_over_g = v;
        }
        if let Some(v) = c.ly_over_g {
            p.ly_over_g = v;
        }
        if let Some(v) = c.phs {
            p.phs = v;
        }
        if let Some(n) = c.dt_steps {
            self.stepper.step = StepSize::Steps(n);
        }
        if let Some(seed) = c.seed {
            self.sweep.input = InputSelector::Random { seed };
        }
        if c.out.is_some() {
            self.output.path = c.out.clone();
        }
        if c.workers.is_some() {
            self.output.workers = c.workers;
        }
        self
    }

    pub fn sim_params(&self) -> Result<SimParams, CliError> {
        let p = &self.physics;
        if p.phs > 1 {
            return Err(CliError::Validation(format!("phs must be 0 or 1, got {}", p.phs)));
        }
        let params = SimParams {
            t: p.t,
            delta_over_g: p.delta_over_g,
            ly_over_g: p.ly_over_g,
            phs: p.phs == 1,
            g: p.g,
            omega_c_over_g: p.omega_c_over_g,
            atom_decay_over_g: p.atom_decay_over_g,
            ns_model: p.ns_model,
            frame: p.frame,
            exact_when_closed: p.exact_when_closed,
            stepper: self.stepper,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let spec = SweepSpec { axes: self.sweep.axes.clone(), base: self.sim_params()?, input: self.sweep.input };
        spec.validate()?;
        Ok(spec)
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let base = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    Ok(base.with_overrides(common))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    if workers == Some(0) {
        return Err(CliError::Validation("workers must be positive".into()));
    }
    #[cfg(feature = "parallel")]
    if let Some(n) = workers {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
        return Ok(pool.install(f));
    }
    Ok(f())
}

fn emit(path: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => sweep::write_atomic(p, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

fn parse_ratio(s: &str) -> Result<[u64; 2], CliError> {
    let bad = || CliError::Config(format!("ratio `{s}` is not of the form p/q"));
    let (p, q) = s.trim().split_once('/').ok_or_else(bad)?;
    Ok([p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?])
}

pub fn cmd_simulate(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = config.sim_params()?;
    let array = GateArray::new();
    let rho_in = config.sweep.input.state(&array);
    let report = array.run(&rho_in, &params)?;
    let mut json = serde_json::to_vec_pretty(&report).map_err(std::io::Error::other)?;
    json.push(b'\n');
    emit(config.output.path.as_deref(), &json, stdout)
}

pub fn cmd_sweep(config: &RunConfig) -> Result<PathBuf, CliError> {
    let spec = config.sweep_spec()?;
    let path = config
        .output
        .path
        .clone()
        .ok_or_else(|| CliError::Validation("sweep needs an output path (--out or output.path)".into()))?;
    let records = with_workers(config.output.workers, || sweep::run_sweep(&spec, Execution::default()))??;
    let failures = records.iter().filter(|r| !r.ok()).count();
    if failures > 0 {
        log::warn!("{failures} of {} points failed", records.len());
    }
    sweep::write_outputs(&path, &spec, &records, config.output.record_timing)?;
    Ok(path)
}

pub fn cmd_calibrate(config: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let c = &config.calibrate;
    let mut csv = Vec::new();
    if c.ratios.is_empty() {
        let params = config.sim_params()?;
        let phys = params.physics().map_err(|e| CliError::Validation(e.to_string()))?;
        if !c.horizon.is_finite() || !c.t_min.is_finite() {
            return Err(CliError::Validation("horizon and t_min must be finite".into()));
        }
        writeln!(csv, "t,delta_over_g,residual")?;
        for row in calibrate::candidate_table(&phys, c.t_min, c.horizon, &c.metric) {
            writeln!(csv, "{},{},{}", row.t, row.delta_over_g, row.residual)?;
        }
    } else {
        let ratios: Vec<(u64, u64)> = c.ratios.iter().map(|r| (r[0], r[1])).collect();
        writeln!(csv, "p,q,d,roundtrip")?;
        for row in calibrate::detuning_table(&ratios)? {
            writeln!(csv, "{},{},{},{:e}", row.p, row.q, row.d, row.roundtrip)?;
        }
    }
    emit(config.output.path.as_deref(), &csv, stdout)
}

/// Parses `args` and runs the chosen command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    match cli.command {
        Command::Simulate(common) => {
            let config = load_config(&common)?;
            cmd_simulate(&config, stdout)
        }
        Command::Sweep { common, record_timing } => {
            let mut config = load_config(&common)?;
            config.output.record_timing |= record_timing;
            let path = cmd_sweep(&config)?;
            writeln!(stdout, "{}", path.display())?;
            Ok(())
        }
        Command::Calibrate { common, horizon, t_min, ratios } => {
            let mut config = load_config(&common)?;
            if let Some(h) = horizon {
                config.calibrate.horizon = h;
            }
            if let Some(t) = t_min {
                config.calibrate.t_min = t;
            }
            if !ratios.is_empty() {
                config.calibrate.ratios = ratios.iter().map(|s| parse_ratio(s)).collect::<Result<_, _>>()?;
            }
            cmd_calibrate(&config, stdout)
        }
    }
}

/// Entry point of the binary.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap prints help and version itself; everything else goes through run()
    let args: Vec<OsString> = std::env::args_os().collect();
    if let Err(e) = Cli::try_parse_from(&args) {
        let _ = e.print();
        return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
    }
    let mut stdout = std::io::stdout().lock();
    match run(args, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csign: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
