//! Analytic pre-selection of NS durations and detunings.
//!
//! Times are in gate units `t`, with the physical duration `T = t π / (√2 g)`.
//! Photon-number phases are anchored to the vacuum sector, so the target for
//! the NS stage is `(a, b, c) = (0, 0, π)`.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{cavity_amplitude, rabi_frequency, PhysParams};
use crate::exec::{map_indexed, Execution};

/// Coarse grid resolution in `t`.
pub const GRID_STEP: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrateError {
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("ratio {p}/{q} must lie strictly between 1/sqrt(2) and 1")]
    RatioDomain { p: u64, q: u64 },
}

fn to_duration(t: f64, p: &PhysParams) -> f64 {
    t * PI / (SQRT_2 * p.g)
}

fn to_units(duration: f64, p: &PhysParams) -> f64 {
    duration * SQRT_2 * p.g / PI
}

/// Distance of `x` from `0` modulo `2π`, in `[0, π]`.
pub fn phase_distance(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Vacuum, one- and two-photon amplitudes `<g,n|U|g,n>` of one cavity after
/// `t` gate units.
pub fn sector_amplitudes(t: f64, p: &PhysParams) -> [C64; 3] {
    let d = to_duration(t, p);
    [cavity_amplitude(0, d, p), cavity_amplitude(1, d, p), cavity_amplitude(2, d, p)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProgressionPoint {
    pub t: f64,
    /// Phase of the sector amplitude at this time, relative to the vacuum.
    pub phase: f64,
}

/// Recurrence times of one photon-number sector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Progression {
    pub photons: u8,
    /// Spacing in `t`; infinite when the sector never moves.
    pub period: f64,
    pub points: Vec<ProgressionPoint>,
}

impl Progression {
    fn arithmetic(photons: u8, period: f64, horizon: f64, phase: impl Fn(f64) -> f64) -> Self {
        let mut points = Vec::new();
        if period.is_finite() {
            let mut k = 1u64;
            loop {
                let t = k as f64 * period;
                if t > horizon {
                    break;
                }
                points.push(ProgressionPoint { t, phase: phase(t) });
                k += 1;
            }
        }
        Self { photons, period, points }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }
}

/// The three progressions A (vacuum), B (one photon) and C (two photons).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressionSet {
    pub a: Progression,
    pub b: Progression,
    pub c: Progression,
}

/// Recurrence times up to `horizon` (gate units).
///
/// A holds the returns of the bare vacuum phase `e^{iΔT/2}` of the
/// single-cavity frame and is empty on resonance. B and C hold the zeros of
/// `sin(Ω₀T/2)` and `sin(Ω₁T/2)`, where the one- and two-photon sectors are
/// fully back in the cavity.
pub fn progressions(p: &PhysParams, horizon: f64) -> ProgressionSet {
    let arg = |n: usize| move |t: f64| sector_amplitudes(t, p)[n].arg();
    let a_period = if p.delta == 0.0 { f64::INFINITY } else { to_units(4.0 * PI / p.delta.abs(), p) };
    ProgressionSet {
        a: Progression::arithmetic(0, a_period, horizon, |_| 0.0),
        b: Progression::arithmetic(1, to_units(2.0 * PI / rabi_frequency(0, p), p), horizon, arg(1)),
        c: Progression::arithmetic(2, to_units(2.0 * PI / rabi_frequency(1, p), p), horizon, arg(2)),
    }
}

/// Photon-number phases `(a, b, c)` for `0, 1, 2` photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseTarget {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl PhaseTarget {
    pub const NS: PhaseTarget = PhaseTarget { a: 0.0, b: 0.0, c: PI };

    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `e^{ib}` and `e^{ic}` are real.
    pub fn is_real(&self) -> bool {
        let real = |x: f64| phase_distance(x) < 1e-9 || phase_distance(x - PI) < 1e-9;
        real(self.b) && real(self.c)
    }
}

/// Whether the phases are nonlinear in the photon number:
/// `a + c ≠ 2b (mod 2π)`.
pub fn check_nonlinearity(phases: &PhaseTarget) -> bool {
    phase_distance(phases.a + phases.c - 2.0 * phases.b) > 1e-9
}

/// Distance of one cavity's action from the NS target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MismatchMetric {
    pub phase_weight: f64,
    pub excitation_weight: f64,
    /// Measure the two-photon phase after removing the linear phase that a
    /// phase shifter can compensate.
    pub phase_corrected: bool,
}

impl Default for MismatchMetric {
    fn default() -> Self {
        Self { phase_weight: 1.0, excitation_weight: 1.0, phase_corrected: true }
    }
}

impl MismatchMetric {
    /// Uncorrected distance from the exact NS phases and populations.
    pub const EXACT: MismatchMetric = MismatchMetric { phase_weight: 1.0, excitation_weight: 1.0, phase_corrected: false };

    /// Largest phase error over the sectors plus the largest amplitude left
    /// on the atom.
    pub fn evaluate(&self, t: f64, p: &PhysParams) -> f64 {
        let [_, c1, c2] = sector_amplitudes(t, p);
        let phase = if self.phase_corrected {
            phase_distance(c2.arg() - 2.0 * c1.arg() - PhaseTarget::NS.c)
        } else {
            phase_distance(c1.arg() - PhaseTarget::NS.b).max(phase_distance(c2.arg() - PhaseTarget::NS.c))
        };
        let leftover = |c: C64| (1.0 - c.norm_sqr()).max(0.0).sqrt();
        self.phase_weight * phase + self.excitation_weight * leftover(c1).max(leftover(c2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub t: f64,
    pub delta_over_g: f64,
    pub residual: f64,
}

fn grid(horizon: f64) -> Vec<f64> {
    let n = (horizon / GRID_STEP + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * GRID_STEP).collect();
    if horizon - n as f64 * GRID_STEP > 1e-12 {
        ts.push(horizon);
    }
    ts
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-11 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Mismatch on the `GRID_STEP` grid over `[0, horizon]`.
pub fn mismatch_scan(p: &PhysParams, horizon: f64, metric: &MismatchMetric, execution: Execution) -> Vec<(f64, f64)> {
    let ts = grid(horizon);
    map_indexed(ts.len(), execution, |i| (ts[i], metric.evaluate(ts[i], p)))
}

/// Duration in `(0, horizon]` closest to the NS target under `metric`.
///
/// Every local minimum of the grid scan is refined by golden-section search
/// within its neighbouring grid points; the best refined point wins.
pub fn best_tau(p: &PhysParams, horizon: f64, metric: &MismatchMetric) -> Result<(f64, f64), CalibrateError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(CalibrateError::Horizon(horizon));
    }
    let scan = mismatch_scan(p, horizon, metric, Execution::Sequential);
    let f = |t: f64| metric.evaluate(t, p);
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 1..scan.len() {
        let left = scan[i - 1].1;
        let right = scan.get(i + 1).map_or(f64::INFINITY, |s| s.1);
        let (t, v) = scan[i];
        if v <= left && v <= right {
            let hi = scan.get(i + 1).map_or(t, |s| s.0);
            let refined = golden_section(f, scan[i - 1].0.max(f64::MIN_POSITIVE), hi);
            let refined = if refined.1 <= v { refined } else { (t, v) };
            if refined.1 < best.1 {
                best = refined;
            }
        }
    }
    if best.0.is_nan() {
        // monotone increasing scan; the first positive grid point is the best
        let (t, v) = scan.get(1).copied().unwrap_or((horizon, f(horizon)));
        best = (t, v);
    }
    Ok(best)
}

/// Two-photon recurrence times in `[t_min, t_max]` with their mismatch.
pub fn candidate_table(p: &PhysParams, t_min: f64, t_max: f64, metric: &MismatchMetric) -> Vec<Candidate> {
    if t_max.is_nan() || t_min.is_nan() || t_max < t_min || t_max <= 0.0 {
        return Vec::new();
    }
    progressions(p, t_max)
        .c
        .times()
        .filter(|&t| t >= t_min - 1e-12)
        .map(|t| Candidate { t, delta_over_g: p.delta / p.g, residual: metric.evaluate(t, p) })
        .collect()
}

/// `Ω₀ / Ω₁ = √(4 + d²) / √(8 + d²)` for `d = Δ / g`.
pub fn defining_ratio(d: f64) -> f64 {
    ((4.0 + d * d) / (8.0 + d * d)).sqrt()
}

/// `d = Δ / g` for which `Ω₀ / Ω₁ = p / q` exactly, making the one- and
/// two-photon recurrences commensurable.
pub fn commensurable_detunings(p: u64, q: u64) -> Result<f64, CalibrateError> {
    let (pp, qq) = (u128::from(p) * u128::from(p), u128::from(q) * u128::from(q));
    if q == 0 || 2 * pp <= qq || pp >= qq {
        return Err(CalibrateError::RatioDomain { p, q });
    }
    let r2 = (p as f64 / q as f64).powi(2);
    Ok(((8.0 * r2 - 4.0) / (1.0 - r2)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningRow {
    pub p: u64,
    pub q: u64,
    pub d: f64,
    /// `|defining_ratio(d) − p/q|`.
    pub roundtrip: f64,
}

pub fn detuning_table(ratios: &[(u64, u64)]) -> Result<Vec<DetuningRow>, CalibrateError> {
    ratios
        .iter()
        .map(|&(p, q)| {
            let d = commensurable_detunings(p, q)?;
            Ok(DetuningRow { p, q, d, roundtrip: (defining_ratio(d) - p as f64 / q as f64).abs() })
        })
        .collect()
}
