//! Standing-wave dipole trap formed by the two counter-propagating cavity modes.
//!
//! The potential is the far-detuned light shift of the D1 and D2 lines
//! (line strengths 1 : 2, rotating-wave approximation) evaluated at the
//! antinode intensity of the standing wave:
//!
//! ```text
//! U(x, y, z) = −U₀ · cos²(kz) · exp(−2x²/w_h² − 2y²/w_v²)
//! ```
//!
//! Gravity is neglected; the sag `m·g·w` is three orders of magnitude below
//! `U₀` for the parameters of interest.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::cavity::CavityGeometry;
use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::physics::{wavenumber, AtomSpecies, C, HBAR, KB};

/// Light-shift coefficients of the two D lines at one trap wavelength.
#[derive(Debug, Clone, Copy)]
struct LineSums {
    /// `Σ wᵢ / (ωᵢ³ Δᵢ)`
    dispersive: f64,
    /// `Σ wᵢ / (ωᵢ³ Δᵢ²)`
    absorptive: f64,
}

fn line_sums(wavelength: f64, species: &AtomSpecies) -> Result<LineSums> {
    require_positive("trap wavelength", wavelength)?;
    if wavelength <= species.d1_wavelength {
        return Err(Error::UnsupportedRegime(format!(
            "trap wavelength {:.3} nm is not red-detuned from both D lines (D1 at {:.3} nm)",
            wavelength * 1e9,
            species.d1_wavelength * 1e9
        )));
    }
    let omega_l = 2.0 * PI * C / wavelength;
    let lines = [(2.0, species.omega_d2()), (1.0, species.omega_d1())];
    let mut sums = LineSums {
        dispersive: 0.0,
        absorptive: 0.0,
    };
    for (weight, omega0) in lines {
        let delta = omega_l - omega0;
        sums.dispersive += weight / (omega0.powi(3) * delta);
        sums.absorptive += weight / (omega0.powi(3) * delta * delta);
    }
    Ok(sums)
}

/// Light shift per unit intensity, `U/I` in J per W/m². Negative for red detuning.
pub fn light_shift_per_intensity(wavelength: f64, species: &AtomSpecies) -> Result<f64> {
    let sums = line_sums(wavelength, species)?;
    Ok(PI * C * C * species.gamma / 2.0 * sums.dispersive)
}

/// Peak intensity of a single elliptical Gaussian beam of power `power`.
pub fn peak_intensity(power: f64, geometry: &CavityGeometry) -> f64 {
    2.0 * power / (PI * geometry.waist_v * geometry.waist_h)
}

/// Antinode intensity of two counter-propagating beams with powers `p1`, `p2`.
pub fn antinode_intensity(p1: f64, p2: f64, geometry: &CavityGeometry) -> f64 {
    let (i1, i2) = (peak_intensity(p1, geometry), peak_intensity(p2, geometry));
    (i1.sqrt() + i2.sqrt()).powi(2)
}

/// Antinode depth `|U₀|` (J) with equal power in both directions.
pub fn dipole_depth(
    power_per_direction: f64,
    geometry: &CavityGeometry,
    wavelength: f64,
    species: &AtomSpecies,
) -> Result<f64> {
    dipole_depth_unbalanced(power_per_direction, power_per_direction, geometry, wavelength, species)
}

/// Antinode depth `|U₀|` (J) for unequal circulating powers.
pub fn dipole_depth_unbalanced(
    p_forward: f64,
    p_backward: f64,
    geometry: &CavityGeometry,
    wavelength: f64,
    species: &AtomSpecies,
) -> Result<f64> {
    require_non_negative("forward power", p_forward)?;
    require_non_negative("backward power", p_backward)?;
    let coeff = light_shift_per_intensity(wavelength, species)?;
    Ok((coeff * antinode_intensity(p_forward, p_backward, geometry)).abs())
}

/// Harmonic frequencies at the bottom of one lattice well (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularFrequencies {
    pub axial: f64,
    /// Along the direction with waist `w_v`.
    pub radial_v: f64,
    /// Along the direction with waist `w_h`.
    pub radial_h: f64,
}

impl SecularFrequencies {
    /// Geometric mean of the two radial frequencies.
    pub fn radial_mean(&self) -> f64 {
        (self.radial_v * self.radial_h).sqrt()
    }

    pub fn axial_to_radial_ratio(&self) -> f64 {
        self.axial / self.radial_mean()
    }
}

/// `ω_ax = k·sqrt(2U₀/m)`, `ω_rad,i = sqrt(4U₀/(m·wᵢ²))`.
pub fn secular_frequencies(
    depth: f64,
    wavelength: f64,
    geometry: &CavityGeometry,
    species: &AtomSpecies,
) -> Result<SecularFrequencies> {
    require_positive("trap depth", depth)?;
    let k = wavenumber(wavelength)?;
    let m = species.mass;
    Ok(SecularFrequencies {
        axial: k * (2.0 * depth / m).sqrt(),
        radial_v: (4.0 * depth / (m * geometry.waist_v.powi(2))).sqrt(),
        radial_h: (4.0 * depth / (m * geometry.waist_h.powi(2))).sqrt(),
    })
}

/// The ratio `ω_ax/ω̄_rad = k·sqrt(w_v·w_h)/√2`, independent of depth.
pub fn secular_ratio(wavelength: f64, geometry: &CavityGeometry) -> Result<f64> {
    Ok(wavenumber(wavelength)? * (geometry.waist_v * geometry.waist_h).sqrt() / SQRT_2)
}

/// Photon scattering rate per atom at the antinode (1/s).
///
/// Uses the same D1/D2 weighting as the depth, so that
/// `Γ_sc = (Γ/ħ)·U₀/|Δ_eff|` with `1/|Δ_eff| = Σ(wᵢ/ωᵢ³Δᵢ²) / |Σ(wᵢ/ωᵢ³Δᵢ)|`.
pub fn scattering_rate(depth: f64, wavelength: f64, species: &AtomSpecies) -> Result<f64> {
    require_non_negative("trap depth", depth)?;
    let sums = line_sums(wavelength, species)?;
    Ok(species.gamma / HBAR * depth * sums.absorptive / sums.dispersive.abs())
}

/// Number of antinodes spanned by a cloud of axial extent `extent`.
pub fn antinode_count(extent: f64, wavelength: f64) -> Result<u64> {
    require_non_negative("cloud extent", extent)?;
    require_positive("wavelength", wavelength)?;
    Ok((2.0 * extent / wavelength).floor() as u64)
}

/// A loaded standing-wave trap with all derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapState {
    /// m
    pub wavelength: f64,
    /// W, forward and backward.
    pub circulating_power: [f64; 2],
    pub geometry: CavityGeometry,
    /// J
    pub depth: f64,
    pub secular: SecularFrequencies,
    /// Harmonic frequency of the axial envelope of the whole cloud (rad/s).
    ///
    /// Used for lattice-site-averaged densities. Defaults to the curvature of
    /// the Lorentzian Rayleigh-range envelope of the trap beam.
    pub omega_envelope: f64,
}

impl TrapState {
    pub fn new(
        power_per_direction: f64,
        geometry: &CavityGeometry,
        wavelength: f64,
        species: &AtomSpecies,
    ) -> Result<Self> {
        Self::unbalanced(power_per_direction, power_per_direction, geometry, wavelength, species)
    }

    pub fn unbalanced(
        p_forward: f64,
        p_backward: f64,
        geometry: &CavityGeometry,
        wavelength: f64,
        species: &AtomSpecies,
    ) -> Result<Self> {
        geometry.validate()?;
        let depth = dipole_depth_unbalanced(p_forward, p_backward, geometry, wavelength, species)?;
        let secular = secular_frequencies(depth, wavelength, geometry, species)?;
        let rayleigh = PI * geometry.waist_v * geometry.waist_h / wavelength;
        Ok(TrapState {
            wavelength,
            circulating_power: [p_forward, p_backward],
            geometry: *geometry,
            depth,
            secular,
            omega_envelope: (2.0 * depth / (species.mass * rayleigh * rayleigh)).sqrt(),
        })
    }

    /// Replaces the envelope frequency with the one that gives a thermal
    /// cloud at `temperature` the axial rms size `sigma_z`.
    pub fn with_axial_envelope_rms(mut self, sigma_z: f64, temperature: f64, species: &AtomSpecies) -> Result<Self> {
        require_positive("axial envelope rms", sigma_z)?;
        require_positive("temperature", temperature)?;
        self.omega_envelope = species.thermal_velocity(temperature) / sigma_z;
        Ok(self)
    }

    /// Full potential (J) at `(x, y, z)`; `x` runs along `w_h`, `y` along `w_v`.
    pub fn potential(&self, x: f64, y: f64, z: f64) -> f64 {
        let k = 2.0 * PI / self.wavelength;
        let g = &self.geometry;
        let transverse = (-2.0 * x * x / (g.waist_h * g.waist_h) - 2.0 * y * y / (g.waist_v * g.waist_v)).exp();
        -self.depth * (k * z).cos().powi(2) * transverse
    }

    /// Depth in temperature units (K).
    pub fn depth_kelvin(&self) -> f64 {
        self.depth / KB
    }
}

/// Indices and waists of a Hermite-Gauss transverse mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseMode {
    /// Order along x (waist `w_h`).
    pub m: u32,
    /// Order along y (waist `w_v`).
    pub n: u32,
    pub waist_h: f64,
    pub waist_v: f64,
}

impl TransverseMode {
    pub fn new(m: u32, n: u32, geometry: &CavityGeometry) -> Self {
        TransverseMode {
            m,
            n,
            waist_h: geometry.waist_h,
            waist_v: geometry.waist_v,
        }
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by upward recurrence.
pub fn hermite(n: u32, x: f64) -> f64 {
    let (mut h_prev, mut h) = (1.0, 2.0 * x);
    if n == 0 {
        return h_prev;
    }
    for k in 1..n {
        let next = 2.0 * x * h - 2.0 * f64::from(k) * h_prev;
        h_prev = h;
        h = next;
    }
    h
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Intensity of `mode` at `(x, y)` (W/m²).
///
/// `peak` is the on-axis intensity of a TEM₀₀ mode carrying the same power,
/// i.e. the power is `peak·π·w_h·w_v/2` for every mode order. For TEM₀₀ the
/// result is the plain elliptical Gaussian.
pub fn hermite_gauss_intensity(mode: &TransverseMode, x: f64, y: f64, peak: f64) -> f64 {
    let sx = SQRT_2 * x / mode.waist_h;
    let sy = SQRT_2 * y / mode.waist_v;
    let hx = hermite(mode.m, sx);
    let hy = hermite(mode.n, sy);
    let norm = 2f64.powi((mode.m + mode.n) as i32) * factorial(mode.m) * factorial(mode.n);
    peak * hx * hx * hy * hy * (-(sx * sx) - sy * sy).exp() / norm
}

/// Samples `mode` on an `nx × ny` grid spanning `±half_width` (m) in both axes.
///
/// Rows run along y, columns along x.
pub fn intensity_grid(
    mode: &TransverseMode,
    peak: f64,
    half_width: f64,
    nx: usize,
    ny: usize,
) -> Result<IntensityGrid> {
    require_positive("grid half width", half_width)?;
    if nx < 2 || ny < 2 {
        return Err(Error::domain("intensity grid needs at least 2 points per axis"));
    }
    let axis = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
            .collect()
    };
    let xs = axis(nx);
    let ys = axis(ny);
    let values = ys
        .iter()
        .map(|&y| xs.iter().map(|&x| hermite_gauss_intensity(mode, x, y, peak)).collect())
        .collect();
    Ok(IntensityGrid { xs, ys, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}
