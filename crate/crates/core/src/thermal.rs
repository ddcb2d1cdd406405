//! Thermal ensembles: Maxwell-Boltzmann distributions, seeded phase-space
//! sampling, ballistic time-of-flight expansion and temperature fitting.
//!
//! Velocity distributions are densities in velocity space (s/m).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::physics::{AtomSpecies, KB};
use crate::trap::TrapState;

/// One-dimensional Maxwell-Boltzmann velocity density (s/m).
pub fn maxwell_boltzmann_1d(v: f64, temperature: f64, species: &AtomSpecies) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let kt = KB * temperature;
    Ok((species.mass / (2.0 * PI * kt)).sqrt() * (-species.mass * v * v / (2.0 * kt)).exp())
}

/// Cumulative distribution of [`maxwell_boltzmann_1d`].
pub fn maxwell_boltzmann_cdf(v: f64, temperature: f64, species: &AtomSpecies) -> Result<f64> {
    require_positive("temperature", temperature)?;
    let sigma = species.thermal_velocity(temperature);
    Ok(0.5 * (1.0 + libm::erf(v / (sigma * std::f64::consts::SQRT_2))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    /// m; x along `w_h`, y along `w_v`, z along the standing wave.
    pub position: [f64; 3],
    /// m/s
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub atom_count: u64,
    /// K
    pub temperature: f64,
    pub species: AtomSpecies,
    pub rng_seed: u64,
    pub samples: Vec<PhaseSpacePoint>,
    /// Non-fatal diagnostics, e.g. a temperature too high for the harmonic approximation.
    pub warnings: Vec<String>,
}

impl Ensemble {
    /// Mean and variance of each velocity component.
    pub fn velocity_moments(&self) -> [(f64, f64); 3] {
        moments(&self.samples, |p| p.velocity)
    }

    /// Mean and variance of each position component.
    pub fn position_moments(&self) -> [(f64, f64); 3] {
        moments(&self.samples, |p| p.position)
    }

    /// Mean kinetic energy per axis (J).
    pub fn kinetic_energy_per_axis(&self) -> [f64; 3] {
        let n = self.samples.len().max(1) as f64;
        let mut e = [0.0; 3];
        for p in &self.samples {
            for (ei, vi) in e.iter_mut().zip(p.velocity) {
                *ei += 0.5 * self.species.mass * vi * vi;
            }
        }
        e.map(|x| x / n)
    }
}

fn moments(samples: &[PhaseSpacePoint], get: impl Fn(&PhaseSpacePoint) -> [f64; 3]) -> [(f64, f64); 3] {
    let n = samples.len() as f64;
    let mut out = [(0.0, 0.0); 3];
    if samples.is_empty() {
        return out;
    }
    for (axis, slot) in out.iter_mut().enumerate() {
        let mean = samples.iter().map(|p| get(p)[axis]).sum::<f64>() / n;
        let var = samples.iter().map(|p| (get(p)[axis] - mean).powi(2)).sum::<f64>() / n;
        *slot = (mean, var);
    }
    out
}

/// Draws `n` atoms from the thermal state of the harmonic approximation to `trap`.
///
/// The output is a pure function of `(n, temperature, trap, species, seed)`.
pub fn sample_ensemble(
    n: usize,
    temperature: f64,
    trap: &TrapState,
    species: &AtomSpecies,
    seed: u64,
) -> Result<Ensemble> {
    require_positive("temperature", temperature)?;
    let kt = KB * temperature;
    let mut warnings = Vec::new();
    if kt > trap.depth / 2.0 {
        warnings.push(format!(
            "k_B·T = {:.3e} J exceeds half the trap depth ({:.3e} J); harmonic approximation is invalid",
            kt, trap.depth
        ));
    }
    let sigma_v = species.thermal_velocity(temperature);
    let s = &trap.secular;
    let sigma_x = [s.radial_h, s.radial_v, s.axial].map(|w| sigma_v / w);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
            let position = [draw() * sigma_x[0], draw() * sigma_x[1], draw() * sigma_x[2]];
            let velocity = [draw() * sigma_v, draw() * sigma_v, draw() * sigma_v];
            PhaseSpacePoint { position, velocity }
        })
        .collect();
    Ok(Ensemble {
        atom_count: n as u64,
        temperature,
        species: species.clone(),
        rng_seed: seed,
        samples,
        warnings,
    })
}

/// Kolmogorov–Smirnov distance between the empirical distribution of
/// `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Gaussian rms width after ballistic expansion for a time `t` (m).
pub fn tof_width(t: f64, sigma0: f64, temperature: f64, species: &AtomSpecies) -> Result<f64> {
    require_non_negative("expansion time", t)?;
    require_positive("initial width", sigma0)?;
    require_non_negative("temperature", temperature)?;
    Ok((sigma0 * sigma0 + KB * temperature / species.mass * t * t).sqrt())
}

/// Measured cloud widths after ballistic expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TofSeries {
    /// s, strictly increasing.
    pub times: Vec<f64>,
    /// m, Gaussian σ of the column density.
    pub widths: Vec<f64>,
}

impl TofSeries {
    pub fn new(times: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        let s = TofSeries { times, widths };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.widths.len() {
            return Err(Error::domain(format!(
                "{} times but {} widths",
                self.times.len(),
                self.widths.len()
            )));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Fit("TOF times must be strictly increasing".into()));
        }
        if self.widths.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::domain("TOF widths must be positive"));
        }
        Ok(())
    }

    /// Noiseless synthetic series from the ballistic model.
    pub fn synthetic(times: &[f64], sigma0: f64, temperature: f64, species: &AtomSpecies) -> Result<Self> {
        let widths = times
            .iter()
            .map(|&t| tof_width(t, sigma0, temperature, species))
            .collect::<Result<Vec<_>>>()?;
        Self::new(times.to_vec(), widths)
    }

    /// Copy with every width multiplied by `1 + rel·z`, `z` standard normal from `seed`.
    pub fn with_noise(&self, rel: f64, seed: u64) -> Result<Self> {
        require_non_negative("relative noise", rel)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = self
            .widths
            .iter()
            .map(|w| {
                let z: f64 = StandardNormal.sample(&mut rng);
                w * (1.0 + rel * z)
            })
            .collect();
        Self::new(self.times.clone(), widths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TofFit {
    /// K
    pub temperature: f64,
    /// m
    pub sigma0: f64,
    /// Rms deviation between measured and fitted widths (m).
    pub residual: f64,
}

/// Fits `σ² = σ₀² + (k_B·T/m)·t²` by unweighted linear least squares in `t²`.
pub fn fit_temperature_tof(series: &TofSeries, species: &AtomSpecies) -> Result<TofFit> {
    series.validate()?;
    if series.times.len() < 3 {
        return Err(Error::Fit(format!(
            "TOF fit needs at least 3 points, got {}",
            series.times.len()
        )));
    }
    let n = series.times.len() as f64;
    let xs: Vec<f64> = series.times.iter().map(|t| t * t).collect();
    let ys: Vec<f64> = series.widths.iter().map(|w| w * w).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("expansion times carry no spread".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if !(slope > 0.0) {
        return Err(Error::Fit(format!(
            "fitted expansion rate {slope:.3e} m²/s² is not positive"
        )));
    }
    let sigma0 = intercept.max(0.0).sqrt();
    let residual = (series
        .times
        .iter()
        .zip(&series.widths)
        .map(|(t, w)| (w - (intercept.max(0.0) + slope * t * t).sqrt()).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(TofFit {
        temperature: slope * species.mass / KB,
        sigma0,
        residual,
    })
}

/// `k_B·T / U`.
pub fn depth_ratio(temperature: f64, depth: f64) -> Result<f64> {
    require_positive("trap depth", depth)?;
    require_non_negative("temperature", temperature)?;
    Ok(KB * temperature / depth)
}

/// Peak density of a thermal cloud in the harmonic approximation (1/m³).
///
/// The axial direction uses the lattice-site-averaged envelope frequency
/// [`TrapState::omega_envelope`] rather than the per-well axial frequency.
pub fn peak_density(atom_count: f64, temperature: f64, trap: &TrapState, species: &AtomSpecies) -> Result<f64> {
    require_non_negative("atom count", atom_count)?;
    require_positive("temperature", temperature)?;
    let factor = (species.mass / (2.0 * PI * KB * temperature)).sqrt();
    let s = &trap.secular;
    Ok(atom_count
        * [s.radial_h, s.radial_v, trap.omega_envelope]
            .iter()
            .map(|w| w * factor)
            .product::<f64>())
}
