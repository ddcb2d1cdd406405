//! Experiment configuration: a JSON document whose keys carry their units.
//!
//! Every block and field has a default taken from the reference apparatus, so
//! an empty file (or `{}`) is a complete configuration. Unknown keys are
//! rejected and every violation names the offending field by its JSON path.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bloch::SweepConfig;
use crate::cavity::{extra_loss_for_finesse, input_power_for, CavityGeometry};
use crate::error::{Error, Result};
use crate::physics::{AtomSpecies, AMU};
use crate::rir::{Motion, RamanProbe, RirOptions};
use crate::trap::TrapState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub species: SpeciesBlock,
    pub cavity: CavityBlock,
    pub trap: TrapBlock,
    pub probe: ProbeBlock,
    pub sweep: SweepBlock,
    pub thermal: ThermalBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeciesBlock {
    pub label: String,
    pub mass_amu: f64,
    pub d2_wavelength_nm: f64,
    pub d1_wavelength_nm: f64,
    /// Natural linewidth Γ/2π.
    pub linewidth_mhz: f64,
    pub i_sat_w_per_m2: f64,
}

impl Default for SpeciesBlock {
    fn default() -> Self {
        let rb = AtomSpecies::rubidium_85();
        SpeciesBlock {
            label: rb.label,
            mass_amu: 84.911_8,
            d2_wavelength_nm: 780.241,
            d1_wavelength_nm: 794.979,
            linewidth_mhz: 6.07,
            i_sat_w_per_m2: rb.i_sat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityBlock {
    pub round_trip_length_mm: f64,
    pub waist_v_um: f64,
    pub waist_h_um: f64,
    /// Input coupler first.
    pub mirror_transmissions_ppm: [f64; 3],
    /// Measured finesse; the extra loss is inferred from it. Exclusive with `extra_loss_ppm`.
    pub finesse: Option<f64>,
    pub extra_loss_ppm: Option<f64>,
    pub mode_match: f64,
    /// Incident power per direction; when absent it is inferred from the trap power.
    pub input_power_mw: Option<f64>,
}

impl Default for CavityBlock {
    fn default() -> Self {
        CavityBlock {
            round_trip_length_mm: 85.0,
            waist_v_um: 129.0,
            waist_h_um: 124.0,
            mirror_transmissions_ppm: [2200.0, 9.0, 9.0],
            finesse: Some(2500.0),
            extra_loss_ppm: None,
            mode_match: 1.0,
            input_power_mw: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapBlock {
    pub wavelength_nm: f64,
    /// Forward and backward running waves.
    pub circulating_power_w: [f64; 2],
    /// Axial FWHM of the loaded cloud, used for densities.
    pub cloud_extent_mm: f64,
}

impl Default for TrapBlock {
    fn default() -> Self {
        TrapBlock {
            wavelength_nm: 799.0,
            circulating_power_w: [5.0, 5.0],
            cloud_extent_mm: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeBlock {
    pub wavelength_nm: f64,
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub detuning_mhz: f64,
    pub intensities_mw_per_cm2: [f64; 2],
    pub motion: Motion,
    /// Half-width of the two-photon detuning scan.
    pub span_khz: f64,
    pub points: usize,
    pub heating_rate_uk_per_ms: f64,
    pub scan_rate_khz_per_us: f64,
}

impl Default for ProbeBlock {
    fn default() -> Self {
        ProbeBlock {
            wavelength_nm: 780.241,
            theta_deg: 13.1,
            phi_deg: 3.0,
            detuning_mhz: -110.0,
            intensities_mw_per_cm2: [50.0, 50.0],
            motion: Motion::Free,
            span_khz: 150.0,
            points: 601,
            heating_rate_uk_per_ms: 0.0,
            scan_rate_khz_per_us: 2.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    /// Effective decay rate Γ/2π.
    pub gamma_khz: f64,
    /// Ω/2π
    pub rabi_khz: f64,
    pub scan_rate_khz_per_us: f64,
    pub delta_start_khz: f64,
    pub delta_end_khz: f64,
    pub max_step_us: f64,
    pub tolerance: f64,
    pub sample_interval_us: Option<f64>,
    pub fixed_step_us: Option<f64>,
    /// Doppler classes averaged by `bloch-sweep`; 1 runs the bare sweep.
    pub velocity_classes: usize,
    /// Relative overshoot defining the critical scan rate.
    pub critical_threshold: f64,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            gamma_khz: 5.0,
            rabi_khz: 0.5,
            scan_rate_khz_per_us: 2.1,
            delta_start_khz: -200.0,
            delta_end_khz: 200.0,
            max_step_us: 1.0,
            tolerance: 1e-8,
            sample_interval_us: Some(0.1),
            fixed_step_us: None,
            velocity_classes: 1,
            critical_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalBlock {
    pub atom_count: u64,
    pub temperature_uk: f64,
    pub seed: u64,
    pub sample_count: usize,
    pub tof_times_ms: Vec<f64>,
    pub tof_sigma0_mm: f64,
    /// Relative Gaussian noise on synthetic TOF widths.
    pub tof_noise: f64,
}

impl Default for ThermalBlock {
    fn default() -> Self {
        ThermalBlock {
            atom_count: 30_000_000,
            temperature_uk: 100.0,
            seed: 1,
            sample_count: 100_000,
            tof_times_ms: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
            tof_sigma0_mm: 0.5,
            tof_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: String,
    /// Also render an SVG next to every CSV.
    pub plots: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: "out".into(),
            plots: false,
        }
    }
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

fn positive(path: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v > 0.0, path, || {
        format!("must be positive and finite, got {v}")
    })
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v >= 0.0, path, || {
        format!("must be non-negative and finite, got {v}")
    })
}

fn finite(path: &str, v: f64) -> Result<()> {
    check(v.is_finite(), path, || format!("must be finite, got {v}"))
}

/// Maps a domain error raised while assembling a block onto that block's path.
fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    }
}

impl ExperimentConfig {
    /// Parses a JSON document; blank input yields the defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Ok(Self::default());
        }
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(path, format!("{inner}"))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.species;
        check(!s.label.is_empty(), "species.label", || "must not be empty".into())?;
        positive("species.mass_amu", s.mass_amu)?;
        positive("species.d2_wavelength_nm", s.d2_wavelength_nm)?;
        positive("species.d1_wavelength_nm", s.d1_wavelength_nm)?;
        check(
            s.d1_wavelength_nm > s.d2_wavelength_nm,
            "species.d1_wavelength_nm",
            || "must exceed d2_wavelength_nm".into(),
        )?;
        positive("species.linewidth_mhz", s.linewidth_mhz)?;
        positive("species.i_sat_w_per_m2", s.i_sat_w_per_m2)?;

        let c = &self.cavity;
        positive("cavity.round_trip_length_mm", c.round_trip_length_mm)?;
        positive("cavity.waist_v_um", c.waist_v_um)?;
        positive("cavity.waist_h_um", c.waist_h_um)?;
        for (i, t) in c.mirror_transmissions_ppm.iter().enumerate() {
            let path = format!("cavity.mirror_transmissions_ppm[{i}]");
            check(t.is_finite() && *t >= 0.0 && *t < 1e6, &path, || {
                format!("must lie in [0, 1e6), got {t}")
            })?;
        }
        match (c.finesse, c.extra_loss_ppm) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "cavity.extra_loss_ppm",
                    "set either finesse or extra_loss_ppm, not both",
                ))
            }
            (Some(f), None) => positive("cavity.finesse", f)?,
            (None, Some(x)) => non_negative("cavity.extra_loss_ppm", x)?,
            (None, None) => {}
        }
        check(c.mode_match > 0.0 && c.mode_match <= 1.0, "cavity.mode_match", || {
            format!("must lie in (0, 1], got {}", c.mode_match)
        })?;
        if let Some(p) = c.input_power_mw {
            non_negative("cavity.input_power_mw", p)?;
        }
        self.geometry()?;

        let t = &self.trap;
        positive("trap.wavelength_nm", t.wavelength_nm)?;
        non_negative("trap.circulating_power_w[0]", t.circulating_power_w[0])?;
        non_negative("trap.circulating_power_w[1]", t.circulating_power_w[1])?;
        check(
            t.circulating_power_w.iter().any(|&p| p > 0.0),
            "trap.circulating_power_w",
            || "at least one direction must carry power".into(),
        )?;
        positive("trap.cloud_extent_mm", t.cloud_extent_mm)?;
        self.trap_state()?;

        let p = &self.probe;
        positive("probe.wavelength_nm", p.wavelength_nm)?;
        check(p.theta_deg > 0.0 && p.theta_deg < 90.0, "probe.theta_deg", || {
            format!("must lie in (0, 90), got {}", p.theta_deg)
        })?;
        check(p.phi_deg > 0.0 && p.phi_deg <= 90.0, "probe.phi_deg", || {
            format!("must lie in (0, 90], got {}", p.phi_deg)
        })?;
        finite("probe.detuning_mhz", p.detuning_mhz)?;
        check(p.detuning_mhz != 0.0, "probe.detuning_mhz", || {
            "must be non-zero".into()
        })?;
        non_negative("probe.intensities_mw_per_cm2[0]", p.intensities_mw_per_cm2[0])?;
        non_negative("probe.intensities_mw_per_cm2[1]", p.intensities_mw_per_cm2[1])?;
        positive("probe.span_khz", p.span_khz)?;
        check(p.points >= 5, "probe.points", || {
            format!("need at least 5, got {}", p.points)
        })?;
        non_negative("probe.heating_rate_uk_per_ms", p.heating_rate_uk_per_ms)?;
        positive("probe.scan_rate_khz_per_us", p.scan_rate_khz_per_us)?;
        self.probe().validate().map_err(at("probe"))?;

        let w = &self.sweep;
        positive("sweep.gamma_khz", w.gamma_khz)?;
        non_negative("sweep.rabi_khz", w.rabi_khz)?;
        finite("sweep.scan_rate_khz_per_us", w.scan_rate_khz_per_us)?;
        finite("sweep.delta_start_khz", w.delta_start_khz)?;
        finite("sweep.delta_end_khz", w.delta_end_khz)?;
        check(w.delta_start_khz != w.delta_end_khz, "sweep.delta_end_khz", || {
            "must differ from delta_start_khz".into()
        })?;
        check(
            w.scan_rate_khz_per_us != 0.0 && (w.delta_end_khz > w.delta_start_khz) == (w.scan_rate_khz_per_us > 0.0),
            "sweep.scan_rate_khz_per_us",
            || "must be non-zero with the sign of delta_end_khz − delta_start_khz".into(),
        )?;
        positive("sweep.max_step_us", w.max_step_us)?;
        check(w.tolerance > 0.0 && w.tolerance <= 1e-3, "sweep.tolerance", || {
            format!("must lie in (0, 1e-3], got {}", w.tolerance)
        })?;
        if let Some(dt) = w.sample_interval_us {
            positive("sweep.sample_interval_us", dt)?;
        }
        if let Some(h) = w.fixed_step_us {
            positive("sweep.fixed_step_us", h)?;
        }
        check(w.velocity_classes >= 1, "sweep.velocity_classes", || {
            "must be at least 1".into()
        })?;
        positive("sweep.critical_threshold", w.critical_threshold)?;
        self.sweep().validate().map_err(at("sweep"))?;

        let th = &self.thermal;
        positive("thermal.temperature_uk", th.temperature_uk)?;
        check(th.sample_count >= 1, "thermal.sample_count", || {
            "must be at least 1".into()
        })?;
        check(th.tof_times_ms.len() >= 3, "thermal.tof_times_ms", || {
            format!("need at least 3 times, got {}", th.tof_times_ms.len())
        })?;
        for (i, t) in th.tof_times_ms.iter().enumerate() {
            non_negative(&format!("thermal.tof_times_ms[{i}]"), *t)?;
        }
        check(
            th.tof_times_ms.windows(2).all(|p| p[1] > p[0]),
            "thermal.tof_times_ms",
            || "must be strictly increasing".into(),
        )?;
        positive("thermal.tof_sigma0_mm", th.tof_sigma0_mm)?;
        check(
            th.tof_noise.is_finite() && (0.0..0.5).contains(&th.tof_noise),
            "thermal.tof_noise",
            || format!("must lie in [0, 0.5), got {}", th.tof_noise),
        )?;

        check(!self.output.dir.is_empty(), "output.dir", || "must not be empty".into())?;
        Ok(())
    }

    pub fn species(&self) -> AtomSpecies {
        let s = &self.species;
        AtomSpecies {
            label: s.label.clone(),
            mass: s.mass_amu * AMU,
            d2_wavelength: s.d2_wavelength_nm * 1e-9,
            d1_wavelength: s.d1_wavelength_nm * 1e-9,
            gamma: 2.0 * PI * s.linewidth_mhz * 1e6,
            i_sat: s.i_sat_w_per_m2,
        }
    }

    pub fn geometry(&self) -> Result<CavityGeometry> {
        let c = &self.cavity;
        let t = c.mirror_transmissions_ppm.map(|x| x * 1e-6);
        let extra = match (c.finesse, c.extra_loss_ppm) {
            (Some(f), _) => extra_loss_for_finesse(t, f).map_err(at("cavity.finesse"))?,
            (None, Some(x)) => x * 1e-6,
            (None, None) => 0.0,
        };
        CavityGeometry::new(
            c.round_trip_length_mm * 1e-3,
            c.waist_v_um * 1e-6,
            c.waist_h_um * 1e-6,
            t,
            extra,
        )
        .map_err(at("cavity"))
    }

    /// Incident power per direction (W), given or inferred from the trap power.
    pub fn input_power(&self) -> Result<f64> {
        match self.cavity.input_power_mw {
            Some(p) => Ok(p * 1e-3),
            None => {
                let p = self.trap.circulating_power_w[0].max(self.trap.circulating_power_w[1]);
                input_power_for(p, &self.geometry()?, self.cavity.mode_match).map_err(at("cavity"))
            }
        }
    }

    pub fn temperature(&self) -> f64 {
        self.thermal.temperature_uk * 1e-6
    }

    /// Trap with the axial envelope set by the configured cloud extent.
    pub fn trap_state(&self) -> Result<TrapState> {
        let t = &self.trap;
        let species = self.species();
        let trap = TrapState::unbalanced(
            t.circulating_power_w[0],
            t.circulating_power_w[1],
            &self.geometry()?,
            t.wavelength_nm * 1e-9,
            &species,
        )
        .map_err(at("trap"))?;
        let sigma_z = t.cloud_extent_mm * 1e-3 / (8.0 * 2f64.ln()).sqrt();
        trap.with_axial_envelope_rms(sigma_z, self.temperature(), &species)
            .map_err(at("trap"))
    }

    pub fn probe(&self) -> RamanProbe {
        let p = &self.probe;
        RamanProbe {
            wavelength: p.wavelength_nm * 1e-9,
            theta: p.theta_deg.to_radians(),
            phi: p.phi_deg.to_radians(),
            detuning: 2.0 * PI * p.detuning_mhz * 1e6,
            intensity_1: p.intensities_mw_per_cm2[0] * 10.0,
            intensity_2: p.intensities_mw_per_cm2[1] * 10.0,
        }
    }

    pub fn rir_options(&self) -> RirOptions {
        let p = &self.probe;
        RirOptions {
            motion: p.motion,
            flip_sign: false,
            heating_rate: p.heating_rate_uk_per_ms * 1e-3,
            scan_rate: p.scan_rate_khz_per_us * 1e9,
        }
    }

    /// Symmetric two-photon detuning grid (rad/s).
    pub fn rir_grid(&self) -> Vec<f64> {
        let half = 2.0 * PI * self.probe.span_khz * 1e3;
        let n = self.probe.points;
        (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    pub fn sweep(&self) -> SweepConfig {
        let w = &self.sweep;
        let khz = 2.0 * PI * 1e3;
        SweepConfig {
            gamma: w.gamma_khz * khz,
            rabi: w.rabi_khz * khz,
            scan_rate: w.scan_rate_khz_per_us * 1e9,
            delta_start: w.delta_start_khz * khz,
            delta_end: w.delta_end_khz * khz,
            max_step: w.max_step_us * 1e-6,
            tolerance: w.tolerance,
            sample_interval: w.sample_interval_us.map(|x| x * 1e-6),
            fixed_step: w.fixed_step_us.map(|x| x * 1e-6),
        }
    }

    /// TOF probe times (s).
    pub fn tof_times(&self) -> Vec<f64> {
        self.thermal.tof_times_ms.iter().map(|t| t * 1e-3).collect()
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text)
}
