//! Ring-cavity optics: free spectral range, finesse, linewidth, power buildup
//! and mode volume.
//!
//! The cavity is a three-mirror travelling-wave resonator. Mirror 0 is the
//! input coupler. Losses are fractional power losses per round trip.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::physics::C;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// m
    pub round_trip_length: f64,
    /// Waist labelled `w_v` at the atoms (m).
    pub waist_v: f64,
    /// Waist labelled `w_h` at the atoms (m).
    pub waist_h: f64,
    /// Power transmissions of the three mirrors; index 0 is the input coupler.
    pub mirror_transmissions: [f64; 3],
    /// Additional round-trip loss from absorption and scatter.
    pub extra_loss: f64,
}

impl CavityGeometry {
    pub fn new(
        round_trip_length: f64,
        waist_v: f64,
        waist_h: f64,
        mirror_transmissions: [f64; 3],
        extra_loss: f64,
    ) -> Result<Self> {
        let g = CavityGeometry {
            round_trip_length,
            waist_v,
            waist_h,
            mirror_transmissions,
            extra_loss,
        };
        g.validate()?;
        Ok(g)
    }

    /// The apparatus with p-polarized light: L = 85 mm, w_v = 129 μm,
    /// w_h = 124 μm, T = (2200, 9, 9) ppm, extra loss tuned to F = 2500.
    pub fn ring_p_polarized() -> Self {
        let t = P_POL_TRANSMISSIONS;
        CavityGeometry {
            round_trip_length: 85e-3,
            waist_v: 129e-6,
            waist_h: 124e-6,
            mirror_transmissions: t,
            extra_loss: extra_loss_for_finesse(t, MEASURED_FINESSE_P).expect("valid default"),
        }
    }

    /// Same cavity with s-polarized light, extra loss tuned to F = 170000.
    pub fn ring_s_polarized() -> Self {
        let t = S_POL_TRANSMISSIONS;
        CavityGeometry {
            mirror_transmissions: t,
            extra_loss: extra_loss_for_finesse(t, MEASURED_FINESSE_S).expect("valid default"),
            ..Self::ring_p_polarized()
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("round_trip_length", self.round_trip_length)?;
        require_positive("waist_v", self.waist_v)?;
        require_positive("waist_h", self.waist_h)?;
        for (i, &t) in self.mirror_transmissions.iter().enumerate() {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::domain(format!(
                    "mirror transmission {i} must lie in (0, 1), got {t}"
                )));
            }
        }
        require_non_negative("extra_loss", self.extra_loss)?;
        if self.total_loss() >= 1.0 {
            return Err(Error::domain(format!(
                "total round-trip loss {} must be below 1",
                self.total_loss()
            )));
        }
        Ok(())
    }

    /// Sum of mirror transmissions and extra loss.
    pub fn total_loss(&self) -> f64 {
        self.mirror_transmissions.iter().sum::<f64>() + self.extra_loss
    }

    /// Round-trip field amplitude factor excluding the input coupler.
    fn internal_amplitude(&self) -> f64 {
        let [_, t1, t2] = self.mirror_transmissions;
        ((1.0 - t1) * (1.0 - t2) * (1.0 - self.extra_loss)).sqrt()
    }
}

pub const P_POL_TRANSMISSIONS: [f64; 3] = [2200e-6, 9e-6, 9e-6];
pub const S_POL_TRANSMISSIONS: [f64; 3] = [27e-6, 2e-6, 2e-6];
pub const MEASURED_FINESSE_P: f64 = 2500.0;
pub const MEASURED_FINESSE_S: f64 = 170_000.0;

/// Summary of the derived cavity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityCharacter {
    pub finesse: f64,
    /// Hz
    pub fsr: f64,
    /// Hz
    pub linewidth_fwhm: f64,
    /// κ in the intensity-decay convention, `2π·FWHM` (rad/s).
    pub intensity_decay_rate: f64,
    /// F/π
    pub buildup: f64,
    /// m³
    pub mode_volume: f64,
}

impl CavityCharacter {
    /// Characterises `geometry` using the finesse implied by its losses.
    pub fn from_geometry(geometry: &CavityGeometry) -> Result<Self> {
        let finesse = finesse_from_losses(geometry)?;
        Self::with_finesse(geometry, finesse)
    }

    pub fn with_finesse(geometry: &CavityGeometry, finesse: f64) -> Result<Self> {
        geometry.validate()?;
        let lw = linewidth_and_decay(geometry, finesse)?;
        Ok(CavityCharacter {
            finesse,
            fsr: free_spectral_range(geometry),
            linewidth_fwhm: lw.fwhm,
            intensity_decay_rate: lw.kappa_intensity,
            buildup: buildup_factor(finesse)?,
            mode_volume: mode_volume(geometry),
        })
    }
}

/// Cavity linewidth in three labelled conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linewidth {
    /// Full width at half maximum of the transmission peak (Hz).
    pub fwhm: f64,
    /// Intensity decay rate `2π·FWHM` (rad/s).
    pub kappa_intensity: f64,
    /// Field decay rate `π·FWHM` (rad/s).
    pub kappa_field: f64,
}

/// `c / L` (Hz).
pub fn free_spectral_range(geometry: &CavityGeometry) -> f64 {
    C / geometry.round_trip_length
}

/// `2π / (ΣT + extra_loss)`.
pub fn finesse_from_losses(geometry: &CavityGeometry) -> Result<f64> {
    let loss = geometry.total_loss();
    if loss <= 0.0 {
        return Err(Error::domain("total round-trip loss is zero"));
    }
    Ok(2.0 * PI / loss)
}

/// Extra loss that, added to the mirror transmissions, produces `finesse`.
///
/// Negative when the mirrors alone already lose more than `finesse` allows.
pub fn extra_loss_for_finesse(transmissions: [f64; 3], finesse: f64) -> Result<f64> {
    require_positive("finesse", finesse)?;
    Ok(2.0 * PI / finesse - transmissions.iter().sum::<f64>())
}

pub fn linewidth_and_decay(geometry: &CavityGeometry, finesse: f64) -> Result<Linewidth> {
    require_positive("finesse", finesse)?;
    let fwhm = free_spectral_range(geometry) / finesse;
    Ok(Linewidth {
        fwhm,
        kappa_intensity: 2.0 * PI * fwhm,
        kappa_field: PI * fwhm,
    })
}

/// `F/π`.
pub fn buildup_factor(finesse: f64) -> Result<f64> {
    require_positive("finesse", finesse)?;
    Ok(finesse / PI)
}

/// On-resonance circulating power in one direction for `input_power` incident
/// on the input coupler.
///
/// Airy peak of the ring: `η·P·T₀ / (1 − g)²` with `g` the full round-trip
/// field amplitude factor. For small losses this is `≈ 4·T₀·P/Σ²`.
pub fn circulating_power(input_power: f64, geometry: &CavityGeometry, mode_match: f64) -> Result<f64> {
    require_non_negative("input_power", input_power)?;
    check_mode_match(mode_match)?;
    Ok(mode_match * input_power * power_enhancement(geometry))
}

/// Incident power required to reach `circulating` (inverse of [`circulating_power`]).
pub fn input_power_for(circulating: f64, geometry: &CavityGeometry, mode_match: f64) -> Result<f64> {
    require_non_negative("circulating power", circulating)?;
    check_mode_match(mode_match)?;
    if mode_match == 0.0 {
        return Err(Error::domain("mode_match of zero couples no light"));
    }
    Ok(circulating / (mode_match * power_enhancement(geometry)))
}

fn check_mode_match(mode_match: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mode_match) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "mode_match must lie in [0, 1], got {mode_match}"
        )))
    }
}

/// Circulating over incident power on resonance.
fn power_enhancement(geometry: &CavityGeometry) -> f64 {
    let t0 = geometry.mirror_transmissions[0];
    let g = (1.0 - t0).sqrt() * geometry.internal_amplitude();
    t0 / (1.0 - g).powi(2)
}

/// The three ways of quoting a power enhancement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    /// F/π
    pub finesse_over_pi: f64,
    /// Circulating power over power incident on the input coupler.
    pub circulating_over_incident: f64,
    /// Circulating power over the power actually coupled into the resonator.
    pub circulating_over_coupled: f64,
}

pub fn enhancement_factors(geometry: &CavityGeometry, finesse: f64) -> Result<Enhancement> {
    let a = geometry.internal_amplitude();
    Ok(Enhancement {
        finesse_over_pi: buildup_factor(finesse)?,
        circulating_over_incident: power_enhancement(geometry),
        circulating_over_coupled: 1.0 / (1.0 - a * a),
    })
}

/// `(π/4)·L·w_v·w_h` (m³).
pub fn mode_volume(geometry: &CavityGeometry) -> f64 {
    PI / 4.0 * geometry.round_trip_length * geometry.waist_v * geometry.waist_h
}
