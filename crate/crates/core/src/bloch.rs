//! Optical Bloch equations of a two-level system under a linear frequency sweep.
//!
//! In the frame rotating with the chirped drive the Bloch vector obeys
//!
//! ```text
//! u̇ =  δ(t)·v − (Γ/2)·u
//! v̇ = −δ(t)·u + Ω·w − (Γ/2)·v
//! ẇ = −Ω·v − Γ·(w − 1)
//! ```
//!
//! with `δ(t) = δ_start + 2π·rate·t`, coherence `ρ₁₂ = (u + i·v)/2` and
//! inversion `w = ρ₁₁ − ρ₂₂` (the ground state is `w = +1`). Sweeping faster
//! than about `(Γ/2π)²` leaves a coherence behind at the resonance crossing
//! that keeps precessing at the instantaneous detuning: the system rings.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::ode::{integrate, Output, Stepping};
use crate::physics::AtomSpecies;
use crate::rir::{effective_q, Motion, RamanProbe};

/// Parameters of one swept integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Effective decay rate Γ (rad/s). Zero gives the Hamiltonian limit.
    pub gamma: f64,
    /// Rabi frequency Ω (rad/s).
    pub rabi: f64,
    /// Rate of the ordinary-frequency detuning sweep (Hz/s).
    pub scan_rate: f64,
    /// rad/s
    pub delta_start: f64,
    /// rad/s
    pub delta_end: f64,
    /// Upper bound on the adaptive step (s).
    pub max_step: f64,
    /// Local error bound per step.
    pub tolerance: f64,
    /// Uniform output spacing (s); `None` records every accepted step.
    pub sample_interval: Option<f64>,
    /// Constant step (s) replacing adaptive control when set.
    pub fixed_step: Option<f64>,
}

impl SweepConfig {
    /// Γ = 2π×5 kHz, Ω = 0.1Γ, 2.1 kHz/μs from −200 kHz to +200 kHz.
    pub fn reference() -> Self {
        let gamma = 2.0 * PI * 5e3;
        SweepConfig {
            gamma,
            rabi: 0.1 * gamma,
            scan_rate: 2.1e9,
            delta_start: -2.0 * PI * 200e3,
            delta_end: 2.0 * PI * 200e3,
            max_step: 1e-6,
            tolerance: 1e-8,
            sample_interval: Some(0.1e-6),
            fixed_step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("gamma", self.gamma)?;
        require_non_negative("rabi", self.rabi)?;
        require_positive("max_step", self.max_step)?;
        if !(self.tolerance > 0.0 && self.tolerance <= 1e-3) {
            return Err(Error::domain(format!(
                "tolerance must lie in (0, 1e-3], got {}",
                self.tolerance
            )));
        }
        if !self.delta_start.is_finite() || !self.delta_end.is_finite() || self.delta_start == self.delta_end {
            return Err(Error::domain("sweep needs distinct finite start and end detunings"));
        }
        if !(self.scan_rate.is_finite() && self.scan_rate != 0.0)
            || (self.delta_end > self.delta_start) != (self.scan_rate > 0.0)
        {
            return Err(Error::domain(
                "scan_rate must be non-zero and point from delta_start towards delta_end",
            ));
        }
        if let Some(dt) = self.sample_interval {
            require_positive("sample_interval", dt)?;
        }
        if let Some(h) = self.fixed_step {
            require_positive("fixed_step", h)?;
        }
        Ok(())
    }

    /// Sweep rate of the angular detuning (rad/s²).
    pub fn chirp(&self) -> f64 {
        2.0 * PI * self.scan_rate
    }

    /// s
    pub fn duration(&self) -> f64 {
        (self.delta_end - self.delta_start) / self.chirp()
    }

    /// rad/s
    pub fn detuning_at(&self, t: f64) -> f64 {
        self.delta_start + self.chirp() * t
    }

    /// Time at which the detuning passes through zero, if it does.
    pub fn resonance_time(&self) -> Option<f64> {
        let t = -self.delta_start / self.chirp();
        (0.0..=self.duration()).contains(&t).then_some(t)
    }

    /// Sweep rate in units of `Γ²`: `2π·rate/Γ²`.
    pub fn dimensionless_rate(&self) -> f64 {
        self.chirp().abs() / (self.gamma * self.gamma)
    }

    fn stepping(&self) -> Stepping {
        match self.fixed_step {
            Some(step) => Stepping::Fixed { step },
            None => Stepping::Adaptive {
                tolerance: self.tolerance,
                max_step: self.max_step,
                per_unit_step: true,
            },
        }
    }

    fn output(&self) -> Output {
        match self.sample_interval {
            None => Output::Steps,
            Some(dt) => Output::Grid(uniform_grid(self.duration(), dt)),
        }
    }
}

fn uniform_grid(duration: f64, dt: f64) -> Vec<f64> {
    let n = (duration / dt * (1.0 + 1e-12)).floor() as usize;
    (0..=n).map(|i| (i as f64 * dt).min(duration)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

impl BlochVector {
    pub const GROUND: BlochVector = BlochVector { u: 0.0, v: 0.0, w: 1.0 };

    pub fn norm_sq(&self) -> f64 {
        self.u * self.u + self.v * self.v + self.w * self.w
    }

    fn to_array(self) -> [f64; 3] {
        [self.u, self.v, self.w]
    }
}

/// Stationary point of the Bloch equations at fixed detuning.
pub fn steady_state(delta: f64, rabi: f64, gamma: f64) -> Result<BlochVector> {
    require_positive("gamma", gamma)?;
    Ok(stationary(delta, rabi, gamma))
}

/// Closed-form stationary point; at Γ = 0 this is its continuous limit.
fn stationary(delta: f64, rabi: f64, gamma: f64) -> BlochVector {
    let denom = delta * delta + gamma * gamma / 4.0 + rabi * rabi / 2.0;
    if denom == 0.0 {
        return BlochVector::GROUND;
    }
    let v = gamma * rabi / 2.0 / denom;
    // u = 2δv/Γ and w = 1 − Ωv/Γ, written without dividing by Γ.
    BlochVector {
        u: delta * rabi / denom,
        v,
        w: 1.0 - rabi * rabi / 2.0 / denom,
    }
}

/// Peak of the adiabatic absorptive response, `v` at `δ = 0`.
pub fn steady_state_peak(rabi: f64, gamma: f64) -> f64 {
    stationary(0.0, rabi, gamma).v
}

/// Steady state at `delta_start`; for Γ = 0 the dressed state, i.e. the
/// unit vector along the Γ → 0 limit of the steady state.
fn initial_state(config: &SweepConfig) -> BlochVector {
    let (d, om) = (config.delta_start, config.rabi);
    if config.gamma > 0.0 {
        return stationary(d, om, config.gamma);
    }
    let r = d.hypot(om);
    if d == 0.0 || r == 0.0 {
        return BlochVector::GROUND;
    }
    BlochVector {
        u: d.signum() * om / r,
        v: 0.0,
        w: d.abs() / r,
    }
}

fn rhs(config: &SweepConfig, t: f64, y: &[f64; 3]) -> [f64; 3] {
    let delta = config.detuning_at(t);
    let g2 = config.gamma / 2.0;
    [
        delta * y[1] - g2 * y[0],
        -delta * y[0] + config.rabi * y[2] - g2 * y[1],
        -config.rabi * y[1] - config.gamma * (y[2] - 1.0),
    ]
}

/// Time series of the Bloch vector along a sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochTrace {
    /// s
    pub t: Vec<f64>,
    /// Instantaneous detuning (rad/s).
    pub delta: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl BlochTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `Im ρ₁₂ = v/2`.
    pub fn im_rho12(&self) -> Vec<f64> {
        self.v.iter().map(|v| v / 2.0).collect()
    }

    pub fn vector(&self, i: usize) -> BlochVector {
        BlochVector {
            u: self.u[i],
            v: self.v[i],
            w: self.w[i],
        }
    }

    /// Largest Bloch-vector length squared along the trace.
    pub fn max_norm_sq(&self) -> f64 {
        (0..self.len()).map(|i| self.vector(i).norm_sq()).fold(0.0, f64::max)
    }
}

/// Integrates the swept Bloch equations from the steady state at `delta_start`.
pub fn integrate_sweep(config: &SweepConfig) -> Result<BlochTrace> {
    config.validate()?;
    let y0 = initial_state(config).to_array();
    let sol = integrate(
        |t, y: &[f64; 3]| rhs(config, t, y),
        0.0,
        y0,
        config.duration(),
        config.stepping(),
        &config.output(),
    )?;
    let mut trace = BlochTrace {
        delta: sol.t.iter().map(|&t| config.detuning_at(t)).collect(),
        t: sol.t,
        ..BlochTrace::default()
    };
    for y in sol.y {
        trace.u.push(y[0]);
        trace.v.push(y[1]);
        trace.w.push(y[2]);
    }
    Ok(trace)
}

/// The adiabatic reference: [`steady_state`] evaluated along `δ(t)`.
pub fn adiabatic_trace(config: &SweepConfig, times: &[f64]) -> Result<BlochTrace> {
    require_positive("gamma", config.gamma)?;
    let mut trace = BlochTrace {
        t: times.to_vec(),
        ..BlochTrace::default()
    };
    for &t in times {
        let d = config.detuning_at(t);
        let s = stationary(d, config.rabi, config.gamma);
        trace.delta.push(d);
        trace.u.push(s.u);
        trace.v.push(s.v);
        trace.w.push(s.w);
    }
    Ok(trace)
}

/// Characterisation of the oscillation left behind by a fast sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingingMetrics {
    /// s
    pub resonance_time: f64,
    /// First zero crossing of `v` after the resonance (s).
    pub onset_time: f64,
    /// s
    pub crossing_times: Vec<f64>,
    /// `π / (t_{i+1} − t_i)` between consecutive crossings (rad/s).
    pub instantaneous_freqs: Vec<f64>,
    /// `|δ|` at the midpoint of each crossing interval (rad/s).
    pub detuning_at_midpoints: Vec<f64>,
    /// Exponential decay rate of the oscillation envelope (1/s).
    pub envelope_decay_rate: f64,
}

impl RingingMetrics {
    /// Number of full oscillation periods resolved.
    pub fn oscillations(&self) -> usize {
        self.crossing_times.len().saturating_sub(1) / 2
    }

    /// Largest relative deviation of the instantaneous frequency from `|δ|`,
    /// skipping the first `skip` intervals.
    pub fn max_chirp_deviation(&self, skip: usize) -> f64 {
        self.instantaneous_freqs
            .iter()
            .zip(&self.detuning_at_midpoints)
            .skip(skip)
            .map(|(f, d)| ((f - d) / d).abs())
            .fold(0.0, f64::max)
    }
}

const MIN_RINGING_CROSSINGS: usize = 4;

/// Zero-crossing analysis of `v` after the resonance crossing.
pub fn ringing_metrics(trace: &BlochTrace, config: &SweepConfig) -> Result<RingingMetrics> {
    config.validate()?;
    let t_res = config
        .resonance_time()
        .ok_or_else(|| Error::domain("sweep does not cross the resonance"))?;
    let start = trace.t.partition_point(|&t| t < t_res);

    let mut crossings = Vec::new();
    let mut lobe_peaks: Vec<(f64, f64)> = Vec::new();
    let mut best = (0.0f64, 0.0f64);
    for i in start.max(1)..trace.len() {
        let (v0, v1) = (trace.v[i - 1], trace.v[i]);
        if v1.abs() > best.1 {
            best = (trace.t[i], v1.abs());
        }
        if v0 != 0.0 && v0.signum() != v1.signum() {
            let (t0, t1) = (trace.t[i - 1], trace.t[i]);
            crossings.push(t0 + (t1 - t0) * v0 / (v0 - v1));
            if crossings.len() > 1 {
                lobe_peaks.push(best);
            }
            best = (0.0, 0.0);
        }
    }
    if crossings.len() < MIN_RINGING_CROSSINGS {
        return Err(Error::InsufficientRinging {
            crossings: crossings.len(),
            required: MIN_RINGING_CROSSINGS,
        });
    }

    let mut instantaneous_freqs = Vec::with_capacity(crossings.len() - 1);
    let mut detuning_at_midpoints = Vec::with_capacity(crossings.len() - 1);
    for pair in crossings.windows(2) {
        instantaneous_freqs.push(PI / (pair[1] - pair[0]));
        detuning_at_midpoints.push(config.detuning_at(0.5 * (pair[0] + pair[1])).abs());
    }

    // ln|peak| = c − γ·t by least squares.
    let n = lobe_peaks.len() as f64;
    let mt = lobe_peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = lobe_peaks.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let stt: f64 = lobe_peaks.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = lobe_peaks.iter().map(|p| (p.0 - mt) * (p.1.ln() - ml)).sum();
    let envelope_decay_rate = if stt > 0.0 { -stl / stt } else { 0.0 };

    Ok(RingingMetrics {
        resonance_time: t_res,
        onset_time: crossings[0],
        crossing_times: crossings,
        instantaneous_freqs,
        detuning_at_midpoints,
        envelope_decay_rate,
    })
}

/// Detuning scale of the resonance crossing: the larger of Γ and the
/// inverse passage time `√(2π·rate)` (rad/s).
pub fn crossing_width(config: &SweepConfig) -> f64 {
    config.gamma.max(config.chirp().abs().sqrt())
}

/// Largest `|v|` while the sweep is still more than three crossing widths
/// short of resonance, relative to the largest `|v|` of the whole trace.
pub fn pre_resonance_fraction(trace: &BlochTrace, config: &SweepConfig) -> Result<f64> {
    let edge = 3.0 * crossing_width(config);
    let ahead = |d: f64| if config.chirp() > 0.0 { d < -edge } else { d > edge };
    let peak = trace.v.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::domain("trace has no response"));
    }
    let pre = trace
        .v
        .iter()
        .zip(&trace.delta)
        .filter(|(_, &d)| ahead(d))
        .fold(0.0f64, |a, (v, _)| a.max(v.abs()));
    Ok(pre / peak)
}

/// Largest pointwise relative deviation from the adiabatic curve: `v` and
/// `1 − w` relative to their local steady-state values, `u` relative to the
/// largest steady-state `|u|` (it changes sign on resonance).
pub fn adiabatic_deviation(trace: &BlochTrace, config: &SweepConfig) -> Result<f64> {
    require_positive("rabi", config.rabi)?;
    let reference = adiabatic_trace(config, &trace.t)?;
    let u_scale = reference.u.iter().fold(0.0f64, |a, u| a.max(u.abs()));
    let mut worst = 0.0f64;
    for i in 0..trace.len() {
        worst = worst
            .max(((trace.v[i] - reference.v[i]) / reference.v[i]).abs())
            .max(((trace.w[i] - reference.w[i]) / (1.0 - reference.w[i])).abs())
            .max((trace.u[i] - reference.u[i]).abs() / u_scale);
    }
    Ok(worst)
}

/// Largest excess of `|v|` over the adiabatic curve, relative to the adiabatic peak.
pub fn relative_overshoot(trace: &BlochTrace, config: &SweepConfig) -> Result<f64> {
    require_positive("gamma", config.gamma)?;
    let peak = steady_state_peak(config.rabi, config.gamma);
    if !(peak > 0.0) {
        return Err(Error::domain("adiabatic response vanishes (rabi = 0)"));
    }
    let excess = trace
        .t
        .iter()
        .zip(&trace.v)
        .map(|(&t, &v)| v.abs() - stationary(config.detuning_at(t), config.rabi, config.gamma).v)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(excess / peak)
}

/// Search range and resolution for [`critical_rate_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalSearch {
    /// Lowest and highest scan rate tried, in units of `(Γ/2π)²` (Hz/s).
    pub bracket: (f64, f64),
    /// Points of the coarse logarithmic scan that precedes bisection.
    pub coarse_points: usize,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    /// Output samples per sweep used to evaluate the overshoot.
    pub samples_per_sweep: usize,
}

impl Default for CriticalSearch {
    fn default() -> Self {
        CriticalSearch {
            bracket: (1e-2, 1e2),
            coarse_points: 17,
            rel_tol: 1e-3,
            samples_per_sweep: 4000,
        }
    }
}

/// Overshoot of one sweep at `rate`, reusing everything else from `base`.
pub fn overshoot_at_rate(base: &SweepConfig, rate: f64, samples_per_sweep: usize) -> Result<f64> {
    let mut cfg = *base;
    cfg.scan_rate = rate.copysign(base.delta_end - base.delta_start);
    cfg.fixed_step = None;
    let duration = cfg.duration();
    cfg.sample_interval = Some(duration / samples_per_sweep as f64);
    cfg.max_step = cfg.max_step.min(duration / 200.0);
    let trace = integrate_sweep(&cfg)?;
    relative_overshoot(&trace, &cfg)
}

/// Smallest scan rate (Hz/s) whose relative overshoot exceeds `threshold`,
/// with the default search range.
pub fn critical_rate_scan(base: &SweepConfig, threshold: f64) -> Result<f64> {
    critical_rate_scan_with(base, threshold, &CriticalSearch::default())
}

/// [`critical_rate_scan`] with an explicit search range.
///
/// A coarse logarithmic scan locates the first rate above threshold; the
/// bracket it forms with its predecessor is then bisected in `ln(rate)`.
pub fn critical_rate_scan_with(base: &SweepConfig, threshold: f64, search: &CriticalSearch) -> Result<f64> {
    base.validate()?;
    require_positive("gamma", base.gamma)?;
    require_positive("threshold", threshold).map_err(|e| Error::Bracket(e.to_string()))?;
    let unit = (base.gamma / (2.0 * PI)).powi(2);
    let (lo, hi) = (search.bracket.0 * unit, search.bracket.1 * unit);
    if !(lo > 0.0 && hi > lo) || search.coarse_points < 2 {
        return Err(Error::Bracket("invalid search bracket".into()));
    }
    let overshoot = |rate: f64| overshoot_at_rate(base, rate, search.samples_per_sweep);

    let ln_lo = lo.ln();
    let step = (hi.ln() - ln_lo) / (search.coarse_points - 1) as f64;
    let coarse: Vec<f64> = (0..search.coarse_points)
        .into_par_iter()
        .map(|i| overshoot((ln_lo + step * i as f64).exp()))
        .collect::<Result<_>>()?;
    if coarse[0] > threshold {
        return Err(Error::Bracket(format!(
            "overshoot {:.3} already exceeds {threshold} at the lowest rate {lo:.3e} Hz/s",
            coarse[0]
        )));
    }
    let first = coarse.iter().position(|&o| o > threshold).ok_or_else(|| {
        Error::Bracket(format!(
            "overshoot never exceeds {threshold} below {hi:.3e} Hz/s (max {:.3})",
            coarse.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        ))
    })?;

    let mut a = ln_lo + step * (first - 1) as f64;
    let mut b = ln_lo + step * first as f64;
    while b - a > search.rel_tol {
        let mid = 0.5 * (a + b);
        if overshoot(mid.exp())? > threshold {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} f(x) dx`.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::domain("Gauss-Hermite rule needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            // Orthonormal Hermite recurrence.
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok((nodes, weights))
}

/// Thermal average of swept traces over Doppler-shifted velocity classes.
///
/// Each class `k` sees the detuning `δ(t) + q·v_k` with `v_k` a Gauss–Hermite
/// node of the Maxwell-Boltzmann distribution. Classes integrate in
/// parallel; the weighted sum runs in class order, so the result does not
/// depend on scheduling. With one class the bare sweep is returned.
pub fn inhomogeneous_average(
    temperature: f64,
    probe: &RamanProbe,
    species: &AtomSpecies,
    sweep: &SweepConfig,
    n_classes: usize,
    motion: Motion,
) -> Result<BlochTrace> {
    require_non_negative("temperature", temperature)?;
    sweep.validate()?;
    let (nodes, weights) = gauss_hermite(n_classes)?;
    let total: f64 = weights.iter().sum();
    let q = effective_q(probe, motion)?;
    let spread = q * (2.0f64).sqrt() * species.thermal_velocity(temperature);

    let mut base = *sweep;
    if base.sample_interval.is_none() {
        base.sample_interval = Some(base.duration() / 2000.0);
    }
    let traces: Vec<BlochTrace> = nodes
        .par_iter()
        .map(|&x| {
            let offset = spread * x;
            let cfg = SweepConfig {
                delta_start: base.delta_start + offset,
                delta_end: base.delta_end + offset,
                ..base
            };
            integrate_sweep(&cfg)
        })
        .collect::<Result<_>>()?;

    let len = traces.iter().map(BlochTrace::len).min().unwrap_or(0);
    let mut avg = BlochTrace {
        t: traces[0].t[..len].to_vec(),
        ..BlochTrace::default()
    };
    avg.delta = avg.t.iter().map(|&t| base.detuning_at(t)).collect();
    avg.u = vec![0.0; len];
    avg.v = vec![0.0; len];
    avg.w = vec![0.0; len];
    for (trace, &wk) in traces.iter().zip(&weights) {
        let wk = wk / total;
        for i in 0..len {
            avg.u[i] += wk * trace.u[i];
            avg.v[i] += wk * trace.v[i];
            avg.w[i] += wk * trace.w[i];
        }
    }
    Ok(avg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(steady_state(1.0, 0.0, 1.0).unwrap(), BlochVector::GROUND);
        let (om, g) = (1e-4, 1.0);
        let s = steady_state(0.0, om, g).unwrap();
        assert!(rel(s.v, 2.0 * om / g) < 1e-7);
        assert!(((1.0 - s.w) - 2.0 * om * om / (g * g)).abs() < 1e-15);
        assert!(steady_state(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn steady_state_is_stationary() {
        let cfg = SweepConfig {
            scan_rate: 1.0,
            ..SweepConfig::reference()
        };
        for d in [-3e4, 0.0, 1.2e4] {
            let s = steady_state(d, cfg.rabi, cfg.gamma).unwrap();
            let f = rhs(
                &SweepConfig {
                    delta_start: d,
                    scan_rate: 0.0,
                    ..cfg
                },
                0.0,
                &s.to_array(),
            );
            assert!(f.iter().all(|x| x.abs() < 1e-9 * cfg.gamma), "{f:?}");
        }
    }

    #[test]
    fn long_time_limit_matches_closed_form() {
        // Hold δ = Γ/2 (negligible sweep) and start from the ground state.
        let g = 2.0 * PI * 5e3;
        let delta = g / 2.0;
        let cfg = SweepConfig {
            gamma: g,
            rabi: 0.1 * g,
            scan_rate: 1e-9,
            delta_start: delta,
            delta_end: delta + 2.0 * PI * 1e-9 * 2e-3,
            max_step: 1e-5,
            tolerance: 1e-10,
            sample_interval: None,
            fixed_step: None,
        };
        let sol = integrate(
            |t, y: &[f64; 3]| rhs(&cfg, t, y),
            0.0,
            BlochVector::GROUND.to_array(),
            cfg.duration(),
            cfg.stepping(),
            &Output::Steps,
        )
        .unwrap();
        let end = sol.y.last().unwrap();
        let s = steady_state(delta, cfg.rabi, g).unwrap();
        assert!((end[1] - s.v).abs() < 1e-6);
        assert!((end[0] - s.u).abs() < 1e-6);
        assert!((end[2] - s.w).abs() < 1e-6);
    }

    #[test]
    fn dark_sweep_stays_in_ground_state() {
        let cfg = SweepConfig {
            rabi: 0.0,
            ..SweepConfig::reference()
        };
        let trace = integrate_sweep(&cfg).unwrap();
        assert!(trace.u.iter().chain(&trace.v).all(|&x| x == 0.0));
        assert!(trace.w.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig::reference();
        assert!(ok.validate().is_ok());
        assert!(SweepConfig { tolerance: 1e-2, ..ok }.validate().is_err());
        assert!(SweepConfig { scan_rate: -1.0, ..ok }.validate().is_err());
        assert!(SweepConfig { gamma: -1.0, ..ok }.validate().is_err());
        let down = SweepConfig {
            delta_start: ok.delta_end,
            delta_end: ok.delta_start,
            scan_rate: -ok.scan_rate,
            ..ok
        };
        assert!(down.validate().is_ok());
        assert!(rel(down.duration(), ok.duration()) < 1e-15);
    }

    #[test]
    fn reference_sweep_is_far_above_critical() {
        let r = SweepConfig::reference().dimensionless_rate();
        assert!(rel(r, 13.4) < 5e-3, "{r}");
    }

    #[test]
    fn slow_sweep_has_no_ringing() {
        let g = 2.0 * PI * 5e3;
        let cfg = SweepConfig {
            scan_rate: 0.01 * (g / (2.0 * PI)).powi(2),
            delta_start: -10.0 * g,
            delta_end: 10.0 * g,
            max_step: 1e-4,
            sample_interval: Some(1e-4),
            ..SweepConfig::reference()
        };
        let trace = integrate_sweep(&cfg).unwrap();
        assert!(matches!(
            ringing_metrics(&trace, &cfg),
            Err(Error::InsufficientRinging { .. })
        ));
    }

    #[test]
    fn gauss_hermite_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_hermite(n).unwrap();
            let m0: f64 = w.iter().sum();
            assert!(rel(m0, PI.sqrt()) < 1e-12, "n = {n}");
            if n >= 2 {
                let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
                assert!(rel(m2, PI.sqrt() / 2.0) < 1e-12, "n = {n}");
            }
            if n >= 3 {
                let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
                assert!(rel(m4, 3.0 * PI.sqrt() / 4.0) < 1e-11, "n = {n}");
            }
            assert!(x.windows(2).all(|p| p[0] > p[1]));
        }
        assert!(gauss_hermite(0).is_err());
    }

    #[test]
    fn single_class_average_is_the_bare_sweep() {
        let cfg = SweepConfig::reference();
        let bare = integrate_sweep(&cfg).unwrap();
        let avg = inhomogeneous_average(
            100e-6,
            &RamanProbe::reference(),
            &AtomSpecies::rubidium_85(),
            &cfg,
            1,
            Motion::Free,
        )
        .unwrap();
        assert_eq!(avg, bare);
    }

    #[test]
    fn cold_limit_converges_to_bare_sweep() {
        let cfg = SweepConfig::reference();
        let bare = integrate_sweep(&cfg).unwrap();
        let avg = inhomogeneous_average(
            1e-16,
            &RamanProbe::reference(),
            &AtomSpecies::rubidium_85(),
            &cfg,
            8,
            Motion::Free,
        )
        .unwrap();
        let worst = bare
            .v
            .iter()
            .zip(&avg.v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst < 10.0 * cfg.tolerance, "{worst}");
    }

    fn random_sweep(gamma_khz: f64, rabi_frac: f64, rate_units: f64, span: f64) -> SweepConfig {
        let gamma = 2.0 * PI * gamma_khz * 1e3;
        let rate = rate_units * (gamma_khz * 1e3).powi(2);
        SweepConfig {
            gamma,
            rabi: rabi_frac * gamma,
            scan_rate: rate,
            delta_start: -span * gamma,
            delta_end: span * gamma,
            max_step: 1.0 / gamma,
            tolerance: 1e-8,
            sample_interval: None,
            fixed_step: None,
        }
    }

    #[test]
    fn reference_sweep_rings() {
        let cfg = SweepConfig::reference();
        let trace = integrate_sweep(&cfg).unwrap();
        let m = ringing_metrics(&trace, &cfg).unwrap();
        assert!(m.oscillations() >= 5);
        assert!(m.max_chirp_deviation(0) < 0.1);
        assert!(m.onset_time > m.resonance_time);
        assert!(
            rel(m.envelope_decay_rate, cfg.gamma / 2.0) < 0.2,
            "{}",
            m.envelope_decay_rate
        );
    }

    #[test]
    fn chirp_law_holds_on_a_refined_grid() {
        let coarse = SweepConfig::reference();
        let fine = SweepConfig {
            tolerance: 1e-11,
            max_step: 0.1e-6,
            sample_interval: Some(0.01e-6),
            ..coarse
        };
        let a = ringing_metrics(&integrate_sweep(&coarse).unwrap(), &coarse).unwrap();
        let b = ringing_metrics(&integrate_sweep(&fine).unwrap(), &fine).unwrap();
        assert_eq!(a.crossing_times.len(), b.crossing_times.len());
        for (x, y) in a.crossing_times.iter().zip(&b.crossing_times) {
            assert!((x - y).abs() < 2e-9, "{x} {y}");
        }
        assert!(b.max_chirp_deviation(0) < 0.1);
    }

    #[test]
    fn adiabatic_limit_and_monotone_approach() {
        let g = 2.0 * PI * 5e3;
        let unit = (g / (2.0 * PI)).powi(2);
        let worst = |units: f64| {
            let cfg = SweepConfig {
                scan_rate: units * unit,
                delta_start: -10.0 * g,
                delta_end: 10.0 * g,
                max_step: 1e-4,
                sample_interval: None,
                ..SweepConfig::reference()
            };
            adiabatic_deviation(&integrate_sweep(&cfg).unwrap(), &cfg).unwrap()
        };
        let devs: Vec<f64> = [0.1, 0.03, 0.01].iter().map(|&r| worst(r)).collect();
        assert!(devs[2] < 0.05, "{devs:?}");
        assert!(devs.windows(2).all(|p| p[1] < p[0]), "{devs:?}");
    }

    #[test]
    fn critical_rate_scales_with_gamma_squared() {
        let base = SweepConfig::reference();
        let c1 = critical_rate_scan(&base, 0.1).unwrap();
        let doubled = SweepConfig {
            gamma: 2.0 * base.gamma,
            rabi: 2.0 * base.rabi,
            delta_start: 2.0 * base.delta_start,
            delta_end: 2.0 * base.delta_end,
            ..base
        };
        let c2 = critical_rate_scan(&doubled, 0.1).unwrap();
        assert!(rel(c2 / c1, 4.0) < 0.02, "{}", c2 / c1);
        assert!(overshoot_at_rate(&base, 0.9 * c1, 4000).unwrap() <= 0.1);
    }

    #[test]
    fn unreachable_threshold_is_a_bracket_error() {
        let base = SweepConfig::reference();
        assert!(matches!(critical_rate_scan(&base, 1e6), Err(Error::Bracket(_))));
        assert!(matches!(
            critical_rate_scan(&base, f64::INFINITY),
            Err(Error::Bracket(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn trace_stays_inside_bloch_sphere(
            gk in 1.0..20.0f64, rf in 0.0..2.0f64, rate in 0.05..30.0f64, span in 3.0..20.0f64,
        ) {
            let cfg = random_sweep(gk, rf, rate, span);
            let trace = integrate_sweep(&cfg).unwrap();
            prop_assert!(trace.max_norm_sq().sqrt() <= 1.0 + 10.0 * cfg.tolerance);
            prop_assert!(trace.w.iter().all(|w| w.abs() <= 1.0 + 10.0 * cfg.tolerance));
        }

        #[test]
        fn hamiltonian_limit_conserves_norm(
            gk in 1.0..20.0f64, rf in 0.01..2.0f64, rate in 0.05..30.0f64, span in 3.0..20.0f64,
        ) {
            let cfg = SweepConfig { gamma: 0.0, ..random_sweep(gk, rf, rate, span) };
            let trace = integrate_sweep(&cfg).unwrap();
            for i in 0..trace.len() {
                prop_assert!((trace.vector(i).norm_sq().sqrt() - 1.0).abs() <= 10.0 * cfg.tolerance);
            }
        }

        #[test]
        fn halving_step_controls_converges(
            gk in 1.0..20.0f64, rf in 0.0..1.0f64, rate in 0.05..30.0f64, span in 3.0..10.0f64,
        ) {
            let mut cfg = random_sweep(gk, rf, rate, span);
            cfg.sample_interval = Some(cfg.duration() / 500.0);
            let a = integrate_sweep(&cfg).unwrap();
            let b = integrate_sweep(&SweepConfig {
                max_step: cfg.max_step / 2.0,
                tolerance: cfg.tolerance / 2.0,
                ..cfg
            })
            .unwrap();
            prop_assert_eq!(a.len(), b.len());
            let bound = cfg.tolerance * a.len() as f64;
            for i in 0..a.len() {
                prop_assert!((a.u[i] - b.u[i]).abs() < bound);
                prop_assert!((a.v[i] - b.v[i]).abs() < bound);
                prop_assert!((a.w[i] - b.w[i]).abs() < bound);
            }
        }

        #[test]
        fn steady_state_lies_inside_sphere(d in -1e6..1e6f64, om in 0.0..1e6f64, g in 1.0..1e6f64) {
            let s = steady_state(d, om, g).unwrap();
            prop_assert!(s.norm_sq() <= 1.0 + 1e-12);
            prop_assert!((s.u - 2.0 * d * s.v / g).abs() <= 1e-9 * (1.0 + s.u.abs()));
            prop_assert!((s.w - (1.0 - om * s.v / g)).abs() <= 1e-12);
        }
    }
}
