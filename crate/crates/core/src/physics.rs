//! Physical constants, atomic line data and elementary laser-field conversions.
//!
//! All frequencies inside the crate are angular (rad/s). Conversion to
//! ordinary frequency happens only at the file and command-line boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Speed of light in vacuum (m/s).
pub const C: f64 = 299_792_458.0;
/// Planck constant (J·s).
pub const H: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s), defined from [`H`] so that `H = 2π·HBAR` holds exactly.
pub const HBAR: f64 = H / (2.0 * PI);
/// Boltzmann constant (J/K).
pub const KB: f64 = 1.380_649e-23;
/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

/// The set of fundamental constants used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub c: f64,
    pub hbar: f64,
    pub h: f64,
    pub kb: f64,
    pub amu: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        c: C,
        hbar: HBAR,
        h: H,
        kb: KB,
        amu: AMU,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::SI
    }
}

/// Line data for an alkali atom with resolved D1 and D2 lines.
///
/// A single natural linewidth and a single saturation intensity are carried
/// for both lines. The saturation intensity follows the cycling-transition
/// convention; the polarization of the light relative to the quantization
/// axis is not modeled, so every quantity derived from `i_sat` (Rabi
/// frequencies, Raman lattice depths) inherits that convention.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpecies {
    pub label: String,
    /// kg
    pub mass: f64,
    /// m
    pub d2_wavelength: f64,
    /// m
    pub d1_wavelength: f64,
    /// Natural linewidth, rad/s.
    pub gamma: f64,
    /// W/m²
    pub i_sat: f64,
}

impl AtomSpecies {
    /// ⁸⁵Rb with the cycling-transition saturation intensity of 1.67 mW/cm².
    pub fn rubidium_85() -> Self {
        AtomSpecies {
            label: "85Rb".to_string(),
            mass: 84.911_8 * AMU,
            d2_wavelength: 780.241e-9,
            d1_wavelength: 794.979e-9,
            gamma: 2.0 * PI * 6.07e6,
            i_sat: 16.7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("species mass", self.mass)?;
        require_positive("species d2_wavelength", self.d2_wavelength)?;
        require_positive("species d1_wavelength", self.d1_wavelength)?;
        require_positive("species gamma", self.gamma)?;
        require_positive("species i_sat", self.i_sat)?;
        if self.d1_wavelength <= self.d2_wavelength {
            return Err(Error::domain(format!(
                "D1 wavelength ({} m) must exceed D2 wavelength ({} m)",
                self.d1_wavelength, self.d2_wavelength
            )));
        }
        Ok(())
    }

    /// Angular transition frequency of the D2 line (rad/s).
    pub fn omega_d2(&self) -> f64 {
        2.0 * PI * C / self.d2_wavelength
    }

    /// Angular transition frequency of the D1 line (rad/s).
    pub fn omega_d1(&self) -> f64 {
        2.0 * PI * C / self.d1_wavelength
    }

    /// One-dimensional thermal velocity `sqrt(kB·T/m)` (m/s).
    pub fn thermal_velocity(&self, temperature: f64) -> f64 {
        (KB * temperature / self.mass).sqrt()
    }
}

impl Default for AtomSpecies {
    fn default() -> Self {
        Self::rubidium_85()
    }
}

/// A monochromatic laser line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserLine {
    /// m
    pub wavelength: f64,
    /// W
    pub power: f64,
    /// W/m², only meaningful for free-space beams.
    pub intensity_peak: Option<f64>,
}

impl LaserLine {
    pub fn new(wavelength: f64, power: f64) -> Result<Self> {
        require_positive("wavelength", wavelength)?;
        require_non_negative("power", power)?;
        Ok(LaserLine {
            wavelength,
            power,
            intensity_peak: None,
        })
    }

    pub fn with_peak_intensity(mut self, intensity: f64) -> Result<Self> {
        require_non_negative("intensity_peak", intensity)?;
        self.intensity_peak = Some(intensity);
        Ok(self)
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Angular optical frequency (rad/s).
    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }
}

/// Vacuum wavenumber `2π/λ` (rad/m).
pub fn wavenumber(wavelength: f64) -> Result<f64> {
    require_positive("wavelength", wavelength)?;
    Ok(2.0 * PI / wavelength)
}

/// Angular detuning `2π·(laser − line)` (rad/s); red detuning is negative.
pub fn detuning_angular(laser_freq: f64, line_freq: f64) -> Result<f64> {
    require_positive("laser frequency", laser_freq)?;
    require_positive("line frequency", line_freq)?;
    Ok(2.0 * PI * (laser_freq - line_freq))
}

/// Resonant Rabi frequency `Γ·sqrt(I / 2I_sat)` (rad/s).
pub fn rabi_from_intensity(intensity: f64, species: &AtomSpecies) -> Result<f64> {
    require_non_negative("intensity", intensity)?;
    Ok(species.gamma * (intensity / (2.0 * species.i_sat)).sqrt())
}

/// Converts an angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Converts an ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn to_angular(hz: f64) -> f64 {
    2.0 * PI * hz
}
