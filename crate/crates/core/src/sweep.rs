//! Parameter sweeps over the gate array, optimal-set extraction and the
//! detuned-optimum search.

use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::{random_computational_input, CircuitError, GateArray, GateDiagnostics, SimParams};
use crate::exec::map_indexed;
pub use crate::exec::Execution;
use crate::fock::DensityMatrix;

/// Upper end of the sweepable gate duration.
pub const T_MAX: f64 = 200.0;
/// Largest sweepable `|Δ| / g`.
pub const DELTA_MAX: f64 = 10.0;
/// Largest sweepable `l_y / g`.
pub const LY_MAX: f64 = 1.0;

pub const CSV_HEADER: &str = "t,delta_over_g,ly_over_g,phs,error,trace_drift,wall_ms";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    T,
    DeltaOverG,
    LyOverG,
    Phs,
}

impl SweepParam {
    fn domain(self) -> (f64, f64) {
        match self {
            SweepParam::T => (0.0, T_MAX),
            SweepParam::DeltaOverG => (-DELTA_MAX, DELTA_MAX),
            SweepParam::LyOverG => (0.0, LY_MAX),
            SweepParam::Phs => (0.0, 1.0),
        }
    }

    fn apply(self, p: &mut SimParams, v: f64) {
        match self {
            SweepParam::T => p.t = v,
            SweepParam::DeltaOverG => p.delta_over_g = v,
            SweepParam::LyOverG => p.ly_over_g = v,
            SweepParam::Phs => p.phs = v != 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisValues {
    /// `start, start + step, …` up to `stop`, optionally merged with every
    /// integer in `[start, stop]`.
    Linear {
        start: f64,
        stop: f64,
        step: f64,
        #[serde(default)]
        include_integers: bool,
    },
    /// `per_decade` points per decade from `start` to `stop`, both included.
    Log { start: f64, stop: f64, per_decade: usize },
    List { values: Vec<f64> },
}

impl AxisValues {
    pub fn values(&self) -> Result<Vec<f64>, SweepError> {
        match *self {
            AxisValues::Linear { start, stop, step, include_integers } => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(SweepError::Spec(format!("bad linear axis {start}..{stop} step {step}")));
                }
                if stop < start {
                    return Ok(Vec::new());
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                // round to the step's decimal grid so that repeated runs and
                // integer merges compare exactly
                let mut v: Vec<f64> = (0..=n).map(|k| snap(start + k as f64 * step)).collect();
                if include_integers {
                    let mut k = start.ceil();
                    while k <= stop {
                        v.push(k);
                        k += 1.0;
                    }
                    v.sort_by(f64::total_cmp);
                    v.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
                }
                Ok(v)
            }
            AxisValues::Log { start, stop, per_decade } => {
                if !(start > 0.0 && stop >= start && per_decade > 0 && stop.is_finite()) {
                    return Err(SweepError::Spec(format!("bad log axis {start}..{stop} x{per_decade}")));
                }
                let decades = (stop / start).log10();
                let n = (decades * per_decade as f64).round() as usize;
                Ok((0..=n)
                    .map(|k| if k == n { stop } else { start * 10f64.powf(k as f64 / per_decade as f64) })
                    .collect())
            }
            AxisValues::List { ref values } => Ok(values.clone()),
        }
    }
}

fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub values: AxisValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSelector {
    /// Uniform superposition of the computational states.
    #[default]
    PTest,
    /// Random mixed computational state drawn from `seed`.
    Random { seed: u64 },
}

impl InputSelector {
    pub fn state(&self, array: &GateArray) -> DensityMatrix {
        match *self {
            InputSelector::PTest => array.p_test(),
            InputSelector::Random { seed } => {
                random_computational_input(array.space(), &mut ChaCha8Rng::seed_from_u64(seed))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub base: SimParams,
    pub input: InputSelector,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { axes: Vec::new(), base: SimParams::default(), input: InputSelector::PTest }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.axes.len() > 2 {
            return Err(SweepError::Spec(format!("at most 2 axes, got {}", self.axes.len())));
        }
        if self.axes.len() == 2 && self.axes[0].param == self.axes[1].param {
            return Err(SweepError::Spec(format!("axis {:?} given twice", self.axes[0].param)));
        }
        self.base.validate()?;
        for axis in &self.axes {
            let (lo, hi) = axis.param.domain();
            for v in axis.values.values()? {
                let ok = v.is_finite() && v >= lo && v <= hi && (axis.param != SweepParam::Phs || v == 0.0 || v == 1.0);
                if !ok {
                    return Err(SweepError::Spec(format!("{:?} value {v} outside [{lo}, {hi}]", axis.param)));
                }
            }
        }
        Ok(())
    }

    /// Grid points in row-major order (first axis outermost).
    pub fn points(&self) -> Result<Vec<SimParams>, SweepError> {
        let mut points = vec![self.base];
        for axis in &self.axes {
            let values = axis.values.values()?;
            points = points
                .iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = *p;
                        axis.param.apply(&mut q, v);
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        hex(&Sha256::digest(&json))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub params: SimParams,
    /// `NaN` when the point failed.
    pub error: f64,
    pub diagnostics: Option<GateDiagnostics>,
    pub failure: Option<String>,
    pub wall_ms: f64,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn entry(&self) -> OptimalEntry {
        OptimalEntry { t: self.params.t, delta_over_g: self.params.delta_over_g, error: self.error }
    }
}

/// Evaluates `params` on the shared array; failures become records.
pub fn run_point(array: &GateArray, rho_in: &DensityMatrix, params: &SimParams) -> SweepRecord {
    let start = Instant::now();
    let outcome = array.run(rho_in, params);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(r) => SweepRecord { params: *params, error: r.error, diagnostics: Some(r.diagnostics), failure: None, wall_ms },
        Err(e) => {
            log::warn!("sweep point t={} delta={} failed: {e}", params.t, params.delta_over_g);
            SweepRecord { params: *params, error: f64::NAN, diagnostics: None, failure: Some(e.to_string()), wall_ms }
        }
    }
}

/// One record per grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepRecord>, SweepError> {
    run_sweep_on(&GateArray::new(), spec, execution)
}

pub fn run_sweep_on(array: &GateArray, spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepRecord>, SweepError> {
    spec.validate()?;
    let points = spec.points()?;
    let rho_in = spec.input.state(array);
    log::info!("sweeping {} points", points.len());
    Ok(map_indexed(points.len(), execution, |i| run_point(array, &rho_in, &points[i])))
}

/// Writes the records as CSV. Wall times are left empty unless
/// `record_timing` is set, keeping repeated runs byte-identical.
pub fn write_csv<W: Write>(mut w: W, records: &[SweepRecord], record_timing: bool) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let p = &r.params;
        let drift = r.diagnostics.map_or(f64::NAN, |d| d.trace_drift);
        write!(w, "{},{},{},{},{},{},", p.t, p.delta_over_g, p.ly_over_g, u8::from(p.phs), r.error, drift)?;
        if record_timing {
            write!(w, "{:.3}", r.wall_ms)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub engine: String,
    pub engine_version: String,
    pub spec: SweepSpec,
    pub spec_sha256: String,
    pub points: usize,
    pub failures: usize,
}

impl Manifest {
    pub fn new(spec: &SweepSpec, records: &[SweepRecord]) -> Self {
        Self {
            engine: env!("CARGO_PKG_NAME").to_string(),
            engine_version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            spec_sha256: spec.digest(),
            points: records.len(),
            failures: records.iter().filter(|r| !r.ok()).count(),
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json` (manifest) atomically.
pub fn write_outputs(csv_path: &Path, spec: &SweepSpec, records: &[SweepRecord], record_timing: bool) -> io::Result<()> {
    let mut csv = Vec::new();
    write_csv(&mut csv, records, record_timing)?;
    write_atomic(csv_path, &csv)?;
    let manifest = serde_json::to_vec_pretty(&Manifest::new(spec, records)).map_err(io::Error::other)?;
    write_atomic(&csv_path.with_extension("json"), &manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalEntry {
    pub t: f64,
    pub delta_over_g: f64,
    pub error: f64,
}

/// Strictly increasing `t` with strictly decreasing error.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct OptimalSet(pub Vec<OptimalEntry>);

impl OptimalSet {
    pub fn ts(&self) -> Vec<f64> {
        self.0.iter().map(|e| e.t).collect()
    }
}

fn sorted_by_t(entries: &[OptimalEntry]) -> Vec<OptimalEntry> {
    let mut v: Vec<OptimalEntry> = entries.iter().copied().filter(|e| !e.error.is_nan()).collect();
    v.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.error.total_cmp(&b.error)));
    v
}

/// Keeps an entry iff its error is strictly below that of every kept entry
/// with smaller `t`.
pub fn extract_optimal_set(entries: &[OptimalEntry]) -> OptimalSet {
    let mut best = f64::INFINITY;
    let mut kept = Vec::new();
    for e in sorted_by_t(entries) {
        if e.error < best {
            best = e.error;
            kept.push(e);
        }
    }
    OptimalSet(kept)
}

/// Entries whose error is strictly below both neighbours in `t`.
pub fn interior_dips(entries: &[OptimalEntry]) -> Vec<OptimalEntry> {
    sorted_by_t(entries).windows(3).filter(|w| w[1].error < w[0].error && w[1].error < w[2].error).map(|w| w[1]).collect()
}

/// Optimal integer durations of a one-axis `t` sweep: local minima among the
/// integer points, filtered by [`extract_optimal_set`].
pub fn optimal_integer_durations(records: &[SweepRecord]) -> OptimalSet {
    let integers: Vec<OptimalEntry> =
        records.iter().map(SweepRecord::entry).filter(|e| (e.t - e.t.round()).abs() < 1e-9).collect();
    extract_optimal_set(&interior_dips(&integers))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub t_step: f64,
    pub delta_step: f64,
    /// Refinement rounds, each shrinking the steps tenfold.
    pub rounds: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { t_step: 0.05, delta_step: 0.05, rounds: 3 }
    }
}

impl SearchOptions {
    /// Largest phase advance of the two-photon sector between grid points.
    pub const MAX_PHASE_STEP: f64 = 0.3;

    /// Default steps, shrunk so that the grid resolves the oscillations of
    /// the error landscape up to `t_max` and `|Δ/g| ≤ delta_max`.
    ///
    /// The two-photon phase `Ω₁T/2` moves by `(π/(2√2)) t d(Δ/g)` per detuning
    /// step and by `(π/(2√2)) (Ω₁/g) dt` per duration step.
    pub fn resolving(t_max: f64, delta_max: f64) -> Self {
        let scale = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2);
        let omega1 = (delta_max * delta_max + 8.0).sqrt();
        let d = Self::default();
        Self {
            t_step: d.t_step.min(Self::MAX_PHASE_STEP / (scale * omega1)),
            delta_step: d.delta_step.min(Self::MAX_PHASE_STEP / (scale * t_max.max(1.0))),
            rounds: d.rounds,
        }
    }
}

fn linspace(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|k| snap(lo + k as f64 * step)).collect();
    if hi - v[n] > 1e-9 {
        v.push(hi);
    }
    v
}

/// Grid search over `t_range × delta_range` followed by local refinement at
/// steps shrinking tenfold per round. Ranges are inclusive; a degenerate range
/// pins that coordinate.
pub fn find_detuned_optimum(
    array: &GateArray,
    base: &SimParams,
    rho_in: &DensityMatrix,
    t_range: (f64, f64),
    delta_range: (f64, f64),
    opts: &SearchOptions,
    execution: Execution,
) -> Result<OptimalEntry, SweepError> {
    let eval = |t: f64, d: f64| -> f64 {
        let p = SimParams { t, delta_over_g: d, ..*base };
        array.run(rho_in, &p).map_or(f64::INFINITY, |r| r.error)
    };
    let ts = linspace(t_range.0, t_range.1, opts.t_step);
    let ds = linspace(delta_range.0, delta_range.1, opts.delta_step);
    let grid = map_indexed(ts.len() * ds.len(), execution, |k| {
        let (t, d) = (ts[k / ds.len()], ds[k % ds.len()]);
        OptimalEntry { t, delta_over_g: d, error: eval(t, d) }
    });
    let mut best = *grid
        .iter()
        .min_by(|a, b| a.error.total_cmp(&b.error))
        .ok_or_else(|| SweepError::Spec("empty search grid".into()))?;
    if !best.error.is_finite() {
        return Err(SweepError::Spec("every grid point failed".into()));
    }

    // the valleys of the landscape run diagonally in (t, Δ), so each round
    // scans a local 2-D grid instead of one axis at a time
    let clamp = |x: f64, r: (f64, f64)| x.clamp(r.0, r.1);
    let (mut ht, mut hd) = (opts.t_step, opts.delta_step);
    for _ in 0..opts.rounds {
        ht /= 10.0;
        hd /= 10.0;
        for _ in 0..20 {
            let centre = best;
            let scored = map_indexed(21 * 21, execution, |k| {
                let (i, j) = ((k / 21) as f64 - 10.0, (k % 21) as f64 - 10.0);
                let t = clamp(centre.t + i * ht, t_range);
                let d = clamp(centre.delta_over_g + j * hd, delta_range);
                OptimalEntry { t, delta_over_g: d, error: eval(t, d) }
            });
            for e in scored {
                if e.error < best.error {
                    best = e;
                }
            }
            if best.error >= centre.error {
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessProfile {
    pub optimum: OptimalEntry,
    /// Error against `Δ − Δ_opt` at zero leak.
    pub detuning: Vec<ProfilePoint>,
    /// Error against `l_y / g` at the optimal detuning.
    pub leak: Vec<ProfilePoint>,
}

pub fn robustness_profile(
    array: &GateArray,
    base: &SimParams,
    rho_in: &DensityMatrix,
    optimum: &OptimalEntry,
    delta_offsets: &[f64],
    ly_values: &[f64],
    execution: Execution,
) -> RobustnessProfile {
    let at = SimParams { t: optimum.t, delta_over_g: optimum.delta_over_g, ..*base };
    let run = |p: SimParams| array.run(rho_in, &p).map_or(f64::NAN, |r| r.error);
    let detuning = map_indexed(delta_offsets.len(), execution, |i| {
        let off = delta_offsets[i];
        ProfilePoint { value: off, error: run(SimParams { delta_over_g: at.delta_over_g + off, ly_over_g: 0.0, ..at }) }
    });
    let leak = map_indexed(ly_values.len(), execution, |i| {
        ProfilePoint { value: ly_values[i], error: run(SimParams { ly_over_g: ly_values[i], ..at }) }
    });
    RobustnessProfile { optimum: *optimum, detuning, leak }
}
