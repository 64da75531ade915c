//! First-order master-equation stepper.
//!
//! One step is
//!
//! ```text
//! ρ(t+dt) = U ρ U† + dt Σ_i (L_i ρ L_i† − ½(L_i†L_i ρ + ρ L_i†L_i)),   U = exp(−i dt H)
//! ```
//!
//! with the dissipator evaluated on `ρ(t)`. The rate prefactor is folded into
//! each jump matrix, so a channel `L = l·a` decays at rate `l²`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::DensityMatrix;
use crate::linalg::{self, CMatrix, C64, ONE};

#[derive(Debug, Error)]
pub enum LindbladError {
    #[error("generator is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("trace drifted by {drift:e} at step {step} (bound {bound:e}); step size too large?")]
    TraceDrift { step: usize, drift: f64, bound: f64 },
    #[error("invalid stepper configuration: {0}")]
    Config(String),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("dimension mismatch: state {state}, operator {op}")]
    Dimension { state: usize, op: usize },
}

/// Jump operator stored as its nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladChannel {
    pub label: String,
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl LindbladChannel {
    /// `jump` must already include the rate prefactor.
    pub fn from_dense(label: impl Into<String>, jump: &CMatrix) -> Self {
        assert!(jump.is_square());
        let mut entries = Vec::new();
        for c in 0..jump.ncols() {
            for r in 0..jump.nrows() {
                let z = jump[(r, c)];
                if z.norm() > 0.0 {
                    entries.push((r, c, z));
                }
            }
        }
        Self { label: label.into(), dim: jump.nrows(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(r, c, z) in &self.entries {
            m[(r, c)] += z;
        }
        m
    }

    /// Accumulates `scale · L ρ L†` into `out`.
    fn add_sandwich(&self, rho: &CMatrix, scale: f64, out: &mut CMatrix) {
        for &(i, j, lij) in &self.entries {
            for &(k, m, lkm) in &self.entries {
                out[(i, k)] += lij * rho[(j, m)] * lkm.conj() * scale;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSize {
    /// Split each evolution into this many equal steps.
    Steps(usize),
    /// Fixed step; a shorter final step covers the remainder.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub step: StepSize,
    /// Rescale `ρ` to its initial trace after every step.
    pub renormalize: bool,
    /// Record a diagnostics row every this many steps; 0 disables.
    pub diagnostics_every: usize,
    /// Largest tolerated `|tr ρ − tr ρ₀|`.
    pub trace_tolerance: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self { step: StepSize::Steps(20_000), renormalize: false, diagnostics_every: 0, trace_tolerance: 1e-3 }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), LindbladError> {
        match self.step {
            StepSize::Steps(0) => return Err(LindbladError::Config("step count must be positive".into())),
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(LindbladError::Config(format!("step size must be positive, got {dt}")))
            }
            _ => {}
        }
        if self.trace_tolerance.is_nan() || self.trace_tolerance <= 0.0 {
            return Err(LindbladError::Config("trace tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Full steps, their size, and the final partial step (0 if none).
    fn schedule(&self, total: f64) -> (usize, f64, f64) {
        match self.step {
            StepSize::Steps(n) => (n, total / n as f64, 0.0),
            StepSize::Fixed(dt) => {
                let n = (total / dt).floor() as usize;
                let rem = total - n as f64 * dt;
                (n, dt, if rem > 1e-12 * total.max(dt) { rem } else { 0.0 })
            }
        }
    }
}

/// `exp(−i dt H)` by spectral decomposition.
pub fn unitary_step_matrix(h: &CMatrix, dt: f64) -> Result<CMatrix, LindbladError> {
    let dev = linalg::hermitian_deviation(h);
    if dev > 1e-9 {
        return Err(LindbladError::NotHermitian(dev));
    }
    Ok(linalg::expm_hermitian(h, dt))
}

/// One application of the update rule.
pub fn lindblad_step(rho: &DensityMatrix, u: &CMatrix, channels: &[LindbladChannel], dt: f64) -> DensityMatrix {
    let mut stepper = Stepper::new(u.clone(), channels, rho.dim());
    let mut m = rho.matrix().clone();
    stepper.step(&mut m, dt);
    DensityMatrix::from_matrix_unchecked(m)
}

/// Reusable buffers for repeated steps with a fixed propagator.
struct Stepper<'a> {
    u: CMatrix,
    u_adj: CMatrix,
    channels: Vec<&'a LindbladChannel>,
    /// `Σ L†L`
    decay: CMatrix,
    tmp: CMatrix,
    out: CMatrix,
}

impl<'a> Stepper<'a> {
    fn new(u: CMatrix, channels: &'a [LindbladChannel], d: usize) -> Self {
        let channels: Vec<&LindbladChannel> = channels.iter().filter(|c| !c.is_zero()).collect();
        let mut decay = CMatrix::zeros(d, d);
        for c in &channels {
            let l = c.to_dense();
            decay += l.adjoint() * l;
        }
        let u_adj = u.adjoint();
        Self { u, u_adj, channels, decay, tmp: CMatrix::zeros(d, d), out: CMatrix::zeros(d, d) }
    }

    fn step(&mut self, rho: &mut CMatrix, dt: f64) {
        self.tmp.gemm(ONE, &self.u, rho, C64::new(0.0, 0.0));
        self.out.gemm(ONE, &self.tmp, &self.u_adj, C64::new(0.0, 0.0));
        if !self.channels.is_empty() {
            for c in &self.channels {
                c.add_sandwich(rho, dt, &mut self.out);
            }
            // K ρ + ρ K = K ρ + (K ρ)† for Hermitian K and ρ
            self.tmp.gemm(ONE, &self.decay, rho, C64::new(0.0, 0.0));
            let half = -0.5 * dt;
            let n = rho.nrows();
            for i in 0..n {
                for j in 0..n {
                    self.out[(i, j)] += (self.tmp[(i, j)] + self.tmp[(j, i)].conj()) * half;
                }
            }
        }
        std::mem::swap(rho, &mut self.out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub step: usize,
    pub time: f64,
    pub trace: f64,
    pub min_eig: f64,
}

/// Writes diagnostics as CSV with header `step,time,trace,min_eig`.
pub fn write_diagnostics_csv<W: Write>(mut w: W, rows: &[DiagnosticRow]) -> std::io::Result<()> {
    writeln!(w, "step,time,trace,min_eig")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.step, r.time, r.trace, r.min_eig)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub rho: DensityMatrix,
    pub steps: usize,
    /// Largest `|tr ρ − tr ρ₀|` seen.
    pub max_trace_drift: f64,
    pub diagnostics: Vec<DiagnosticRow>,
}

/// Iterates [`lindblad_step`] over `total` time.
pub fn evolve(
    rho: &DensityMatrix,
    h: &CMatrix,
    channels: &[LindbladChannel],
    total: f64,
    cfg: &StepperConfig,
) -> Result<Evolution, LindbladError> {
    cfg.validate()?;
    if total < 0.0 {
        return Err(LindbladError::NegativeDuration(total));
    }
    let d = rho.dim();
    if h.nrows() != d {
        return Err(LindbladError::Dimension { state: d, op: h.nrows() });
    }
    if let Some(c) = channels.iter().find(|c| c.dim() != d) {
        return Err(LindbladError::Dimension { state: d, op: c.dim() });
    }
    let mut m = rho.matrix().clone();
    let trace0 = linalg::trace(&m).re;
    if total == 0.0 {
        return Ok(Evolution { rho: rho.clone(), steps: 0, max_trace_drift: 0.0, diagnostics: Vec::new() });
    }

    let (n_full, dt, rem) = cfg.schedule(total);
    let spread = {
        let ev = linalg::eigvalsh(h);
        ev[ev.len() - 1] - ev[0]
    };
    if dt * spread > 0.1 && !channels.iter().all(LindbladChannel::is_zero) {
        log::warn!("dt·Ω_max = {:.3e} exceeds 0.1; the dissipator splitting may be inaccurate", dt * spread);
    }

    let mut stepper = Stepper::new(unitary_step_matrix(h, dt)?, channels, d);
    let mut diagnostics = Vec::new();
    let mut max_drift: f64 = 0.0;
    let mut record = |step: usize, time: f64, m: &mut CMatrix, diagnostics: &mut Vec<DiagnosticRow>| {
        let tr = linalg::trace(m).re;
        if cfg.renormalize && tr > 0.0 {
            *m *= C64::new(trace0 / tr, 0.0);
        }
        let drift = (tr - trace0).abs();
        max_drift = max_drift.max(drift);
        if drift > cfg.trace_tolerance {
            return Err(LindbladError::TraceDrift { step, drift, bound: cfg.trace_tolerance });
        }
        if cfg.diagnostics_every > 0 && step.is_multiple_of(cfg.diagnostics_every) {
            let min_eig = linalg::eigvalsh(m)[0];
            diagnostics.push(DiagnosticRow { step, time, trace: tr, min_eig });
        }
        Ok(())
    };

    for k in 1..=n_full {
        stepper.step(&mut m, dt);
        record(k, k as f64 * dt, &mut m, &mut diagnostics)?;
    }
    let mut steps = n_full;
    if rem > 0.0 {
        let mut last = Stepper::new(unitary_step_matrix(h, rem)?, channels, d);
        last.step(&mut m, rem);
        steps += 1;
        record(steps, total, &mut m, &mut diagnostics)?;
    }
    Ok(Evolution { rho: DensityMatrix::from_matrix_unchecked(m), steps, max_trace_drift: max_drift, diagnostics })
}

/// Exact closed-system evolution `e^{−iHT} ρ e^{iHT}`.
pub fn evolve_unitary(rho: &DensityMatrix, h: &CMatrix, total: f64) -> Result<DensityMatrix, LindbladError> {
    let u = unitary_step_matrix(h, total)?;
    Ok(DensityMatrix::from_matrix_unchecked(linalg::conjugate(&u, rho.matrix())))
}
