//! Recoil-induced-resonance spectroscopy.
//!
//! Two Raman beams crossing at a small angle θ write a moving lattice with
//! wavevector `q = 2k·sin(θ/2)` and phase velocity `Δω/q`. The net rate of
//! photon redistribution from one beam into the other is proportional to the
//! slope of the velocity distribution at that phase velocity:
//!
//! ```text
//! W(Δω) = ħπ/2 · Ω_R² · N · ∂Π/∂v |_{v = Δω/q}
//! ```
//!
//! For atoms tightly confined along the trap axis only the radial component
//! `q_r = q·sin φ` of the Raman wavevector has to satisfy momentum
//! conservation, which narrows the resonance by `f = 1/sin φ` and stretches
//! the grating lifetime by the same factor.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::physics::{rabi_from_intensity, wavenumber, AtomSpecies, HBAR, KB};

/// Geometry and intensities of the Raman beam pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanProbe {
    /// m; both beams share this wavelength (the Raman offset is ~10⁻⁷ relative).
    pub wavelength: f64,
    /// Full angle between the beams (rad).
    pub theta: f64,
    /// Misalignment of `q` from the trap axis (rad).
    pub phi: f64,
    /// Detuning from the atomic resonance (rad/s).
    pub detuning: f64,
    /// W/m²
    pub intensity_1: f64,
    /// W/m²
    pub intensity_2: f64,
}

impl RamanProbe {
    /// θ = 13.1°, φ = 3°, Δ = −2π×110 MHz, 50 mW/cm² per beam on the ⁸⁵Rb D2 line.
    pub fn reference() -> Self {
        RamanProbe {
            wavelength: 780.241e-9,
            theta: 13.1_f64.to_radians(),
            phi: 3.0_f64.to_radians(),
            detuning: -2.0 * PI * 110e6,
            intensity_1: 500.0,
            intensity_2: 500.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("probe wavelength", self.wavelength)?;
        if !(self.theta > 0.0 && self.theta < PI / 2.0) {
            return Err(Error::domain(format!("theta must lie in (0, π/2), got {}", self.theta)));
        }
        if !(self.phi >= 0.0 && self.phi <= PI / 2.0) {
            return Err(Error::domain(format!("phi must lie in [0, π/2], got {}", self.phi)));
        }
        if self.detuning == 0.0 || !self.detuning.is_finite() {
            return Err(Error::domain("Raman detuning must be finite and non-zero"));
        }
        require_non_negative("intensity_1", self.intensity_1)?;
        require_non_negative("intensity_2", self.intensity_2)?;
        Ok(())
    }
}

/// Raman wavevector and its components along and across the trap axis (rad/m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamanWavevector {
    pub q: f64,
    pub q_z: f64,
    pub q_r: f64,
}

pub fn raman_q(probe: &RamanProbe) -> Result<RamanWavevector> {
    probe.validate()?;
    let q = 2.0 * wavenumber(probe.wavelength)? * (probe.theta / 2.0).sin();
    Ok(RamanWavevector {
        q,
        q_z: q * probe.phi.cos(),
        q_r: q * probe.phi.sin(),
    })
}

/// `Ω₁Ω₂ / 2Δ` (rad/s), sign included.
pub fn two_photon_rabi(omega1: f64, omega2: f64, detuning: f64) -> Result<f64> {
    if detuning == 0.0 {
        return Err(Error::domain("two-photon Rabi frequency diverges at zero detuning"));
    }
    Ok(omega1 * omega2 / (2.0 * detuning))
}

/// Two-photon Rabi frequency of `probe` from its beam intensities.
pub fn probe_two_photon_rabi(probe: &RamanProbe, species: &AtomSpecies) -> Result<f64> {
    probe.validate()?;
    let o1 = rabi_from_intensity(probe.intensity_1, species)?;
    let o2 = rabi_from_intensity(probe.intensity_2, species)?;
    two_photon_rabi(o1, o2, probe.detuning)
}

/// Peak-to-peak depth of the moving Raman lattice, `ħ·|Ω₁Ω₂/Δ|` (J).
///
/// The light shift of the pair is `ħ(Ω₁² + Ω₂² + 2Ω₁Ω₂·cos(qz))/(4Δ)`; only
/// the interference term is modulated.
pub fn raman_lattice_depth(probe: &RamanProbe, species: &AtomSpecies) -> Result<f64> {
    Ok(2.0 * HBAR * probe_two_photon_rabi(probe, species)?.abs())
}

/// Whether the atoms move freely along `q` or are pinned to the trap axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    #[default]
    Free,
    Trapped,
}

/// `1/sin φ`.
pub fn geometry_factor(phi: f64) -> Result<f64> {
    if !(phi > 0.0 && phi <= PI / 2.0) {
        return Err(Error::domain(format!(
            "geometry factor needs 0 < phi ≤ π/2, got {phi}; a strictly axial q leaves no free direction"
        )));
    }
    Ok(1.0 / phi.sin())
}

/// Wavevector that has to satisfy momentum conservation for the given motion.
pub fn effective_q(probe: &RamanProbe, motion: Motion) -> Result<f64> {
    let q = raman_q(probe)?;
    match motion {
        Motion::Free => Ok(q.q),
        Motion::Trapped => Ok(q.q / geometry_factor(probe.phi)?),
    }
}

/// Velocity class addressed at two-photon detuning `delta_omega` by trapped atoms, `f·Δω/q` (m/s).
pub fn trapped_velocity_map(delta_omega: f64, probe: &RamanProbe) -> Result<f64> {
    let f = geometry_factor(probe.phi)?;
    Ok(f * delta_omega / raman_q(probe)?.q)
}

/// Sign convention for synthesized spectra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RirOptions {
    pub motion: Motion,
    /// `false`: the lobe at positive `Δω` is positive. `true` keeps the
    /// literal sign of `∂Π/∂v`, which is negative there.
    pub flip_sign: bool,
    /// Linear probe heating during a scan (K/s); zero disables it.
    pub heating_rate: f64,
    /// Scan rate used to convert detuning to elapsed time for heating (Hz/s).
    pub scan_rate: f64,
}

impl RirOptions {
    pub fn free() -> Self {
        Self::default()
    }

    pub fn trapped() -> Self {
        RirOptions {
            motion: Motion::Trapped,
            ..Self::default()
        }
    }

    fn orientation(&self) -> f64 {
        if self.flip_sign {
            1.0
        } else {
            -1.0
        }
    }
}

/// Net Raman scattering rate at two-photon detuning `delta_omega` (arbitrary units).
///
/// Evaluates `ħπ/2·Ω_R²·N·∂Π/∂v` verbatim; the ħ makes the dimension
/// unphysical, hence arbitrary units.
pub fn rir_signal(
    delta_omega: f64,
    temperature: f64,
    probe: &RamanProbe,
    atom_count: f64,
    species: &AtomSpecies,
    options: &RirOptions,
) -> Result<f64> {
    require_positive("temperature", temperature)?;
    require_non_negative("atom count", atom_count)?;
    let q = effective_q(probe, options.motion)?;
    let rabi = probe_two_photon_rabi(probe, species)?;
    Ok(options.orientation() * signal_at(delta_omega / q, temperature, rabi, atom_count, species))
}

fn signal_at(v: f64, temperature: f64, rabi: f64, atom_count: f64, species: &AtomSpecies) -> f64 {
    let kt = KB * temperature;
    let pi_v = (species.mass / (2.0 * PI * kt)).sqrt() * (-species.mass * v * v / (2.0 * kt)).exp();
    let slope = -species.mass * v / kt * pi_v;
    HBAR * PI / 2.0 * rabi * rabi * atom_count * slope
}

/// Dispersive lineshape normalized to extrema of ±1 at `Δω = ±width`.
pub fn rir_lineshape(delta_omega: f64, width: f64) -> f64 {
    let x = delta_omega / width;
    x * (0.5 - 0.5 * x * x).exp()
}

/// Spectral width `q·sqrt(k_B·T/m)` (rad/s): the position of the extrema.
pub fn rir_width(temperature: f64, q: f64, species: &AtomSpecies) -> f64 {
    q * species.thermal_velocity(temperature)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirSpectrum {
    /// rad/s
    pub delta_omega: Vec<f64>,
    pub signal: Vec<f64>,
    /// K (temperature at the start of the scan when heating is enabled).
    pub temperature_used: f64,
    /// Effective wavevector used to map detuning to velocity (rad/m).
    pub q: f64,
}

/// Evenly spaced detuning grid from `start` to `end` inclusive (rad/s).
pub fn detuning_grid(start: f64, end: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(end > start) {
        return Err(Error::domain("detuning grid needs end > start and at least 2 points"));
    }
    let step = (end - start) / (points - 1) as f64;
    Ok((0..points).map(|i| start + step * i as f64).collect())
}

/// Evaluates [`rir_signal`] over `grid` in parallel; output order follows `grid`.
pub fn rir_spectrum(
    grid: &[f64],
    temperature: f64,
    probe: &RamanProbe,
    atom_count: f64,
    species: &AtomSpecies,
    options: &RirOptions,
) -> Result<RirSpectrum> {
    require_positive("temperature", temperature)?;
    require_non_negative("atom count", atom_count)?;
    let q = effective_q(probe, options.motion)?;
    let rabi = probe_two_photon_rabi(probe, species)?;
    let heating = options.heating_rate != 0.0;
    if heating {
        require_positive("scan rate", options.scan_rate)?;
    }
    let start = grid.first().copied().unwrap_or(0.0);
    let sign = options.orientation();
    let signal = grid
        .par_iter()
        .map(|&dw| {
            let temp = if heating {
                let elapsed = (dw - start).abs() / (2.0 * PI * options.scan_rate);
                temperature + options.heating_rate * elapsed
            } else {
                temperature
            };
            sign * signal_at(dw / q, temp, rabi, atom_count, species)
        })
        .collect();
    Ok(RirSpectrum {
        delta_omega: grid.to_vec(),
        signal,
        temperature_used: temperature,
        q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RirFit {
    /// K, least-squares estimate.
    pub temperature: f64,
    /// K, from the peak-to-peak splitting alone.
    pub closed_form_temperature: f64,
    /// Signed lobe height at positive detuning.
    pub amplitude: f64,
    /// Peak-to-peak splitting of the extrema (rad/s).
    pub peak_to_peak: f64,
    /// Rms residual of the least-squares fit.
    pub residual: f64,
}

/// `T = m·(Δω_pp/2q)²/k_B`.
pub fn temperature_from_splitting(peak_to_peak: f64, q: f64, species: &AtomSpecies) -> Result<f64> {
    require_positive("peak-to-peak splitting", peak_to_peak)?;
    require_positive("q", q)?;
    Ok(species.mass * (peak_to_peak / (2.0 * q)).powi(2) / KB)
}

/// Fits the temperature of a measured or synthetic RIR spectrum.
///
/// The amplitude is eliminated in closed form; the width is found by
/// golden-section search on `ln σ` around the peak-to-peak estimate.
pub fn fit_temperature_rir(spectrum: &RirSpectrum, species: &AtomSpecies) -> Result<RirFit> {
    let x = &spectrum.delta_omega;
    let y = &spectrum.signal;
    if x.len() != y.len() {
        return Err(Error::Fit("spectrum columns differ in length".into()));
    }
    if x.len() < 5 {
        return Err(Error::Fit("spectrum needs at least 5 points".into()));
    }
    require_positive("q", spectrum.q).map_err(|e| Error::Fit(e.to_string()))?;
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Fit("spectrum is flat".into()));
    }

    let (imax, imin) = extrema(y);
    let interior = |i: usize| i > 0 && i + 1 < y.len();
    if !interior(imax) || !interior(imin) {
        return Err(Error::Fit("spectrum does not contain both extrema".into()));
    }
    let peak_to_peak = (refine_extremum(x, y, imax) - refine_extremum(x, y, imin)).abs();
    let closed_form_temperature =
        temperature_from_splitting(peak_to_peak, spectrum.q, species).map_err(|e| Error::Fit(e.to_string()))?;

    let sse = |ln_sigma: f64| projected_sse(x, y, ln_sigma.exp()).0;
    let centre = (peak_to_peak / 2.0).ln();
    let sigma = golden_section(sse, centre - 1.5, centre + 1.5, 1e-12).exp();
    let (best, amplitude) = projected_sse(x, y, sigma);
    let temperature = species.mass * (sigma / spectrum.q).powi(2) / KB;
    Ok(RirFit {
        temperature,
        closed_form_temperature,
        amplitude,
        peak_to_peak,
        residual: (best / x.len() as f64).sqrt(),
    })
}

fn extrema(y: &[f64]) -> (usize, usize) {
    let mut imax = 0;
    let mut imin = 0;
    for (i, &v) in y.iter().enumerate() {
        if v > y[imax] {
            imax = i;
        }
        if v < y[imin] {
            imin = i;
        }
    }
    (imax, imin)
}

/// Vertex of the parabola through the three samples around `i`.
fn refine_extremum(x: &[f64], y: &[f64], i: usize) -> f64 {
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if a == 0.0 {
        x1
    } else {
        -b / (2.0 * a)
    }
}

/// Residual sum of squares with the optimal linear amplitude, and that amplitude.
fn projected_sse(x: &[f64], y: &[f64], sigma: f64) -> (f64, f64) {
    let (mut yl, mut ll, mut yy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let l = rir_lineshape(xi, sigma);
        yl += yi * l;
        ll += l * l;
        yy += yi * yi;
    }
    if ll == 0.0 {
        return (yy, 0.0);
    }
    ((yy - yl * yl / ll).max(0.0), yl / ll)
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Decay time of the atomic density grating (s): `1/(q·v_th)`, times `f` when trapped.
pub fn grating_lifetime(temperature: f64, probe: &RamanProbe, species: &AtomSpecies, motion: Motion) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let q = raman_q(probe)?.q;
    let free = 1.0 / (q * species.thermal_velocity(temperature));
    match motion {
        Motion::Free => Ok(free),
        Motion::Trapped => Ok(free * geometry_factor(probe.phi)?),
    }
}

/// Scan rate (Hz/s) above which the response rings: the squared RIR width
/// `(q·v_th/2π)²`, reduced by `f²` for trapped atoms.
pub fn critical_scan_rate(temperature: f64, probe: &RamanProbe, species: &AtomSpecies, motion: Motion) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let q = raman_q(probe)?.q;
    let free = (q * species.thermal_velocity(temperature) / (2.0 * PI)).powi(2);
    match motion {
        Motion::Free => Ok(free),
        Motion::Trapped => Ok(free / geometry_factor(probe.phi)?.powi(2)),
    }
}
