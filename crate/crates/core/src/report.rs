//! Run reports: derived-parameter tables, reference comparisons and file
//! manifests.
//!
//! Reports contain no timestamps or host data, and every number in them is
//! a deterministic function of the configuration, so regenerating a report
//! reproduces it byte for byte.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bloch::{self, SweepConfig};
use crate::cavity::{
    circulating_power, enhancement_factors, extra_loss_for_finesse, finesse_from_losses, linewidth_and_decay,
    CavityCharacter, CavityGeometry, MEASURED_FINESSE_S, S_POL_TRANSMISSIONS,
};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::files::Table;
use crate::physics::{H, KB};
use crate::rir::{self, Motion};
use crate::thermal::{self, TofSeries};
use crate::trap::{antinode_count, scattering_rate, secular_ratio};

pub const SCHEMA: &str = "ringcav.report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

/// A computed value compared against an accepted interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn make(id: &str, name: &str, value: f64, lower: Option<f64>, upper: Option<f64>, pass: bool) -> Self {
        Check {
            id: id.into(),
            name: name.into(),
            value,
            lower,
            upper,
            pass,
        }
    }

    /// Closed interval.
    pub fn within(id: &str, name: &str, value: f64, lower: f64, upper: f64) -> Self {
        Self::make(
            id,
            name,
            value,
            Some(lower),
            Some(upper),
            value >= lower && value <= upper,
        )
    }

    /// Open interval.
    pub fn between(id: &str, name: &str, value: f64, lower: f64, upper: f64) -> Self {
        Self::make(
            id,
            name,
            value,
            Some(lower),
            Some(upper),
            value > lower && value < upper,
        )
    }

    pub fn at_least(id: &str, name: &str, value: f64, lower: f64) -> Self {
        Self::make(id, name, value, Some(lower), None, value >= lower)
    }

    pub fn at_most(id: &str, name: &str, value: f64, upper: f64) -> Self {
        Self::make(id, name, value, None, Some(upper), value <= upper)
    }

    pub fn relative(id: &str, name: &str, value: f64, target: f64, tol: f64) -> Self {
        let (a, b) = (target * (1.0 - tol), target * (1.0 + tol));
        Self::within(id, name, value, a.min(b), a.max(b))
    }
}

/// An emitted file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl FileEntry {
    pub fn describe(path: &str, contents: &[u8]) -> Self {
        let digest = Sha256::digest(contents);
        FileEntry {
            path: path.into(),
            bytes: contents.len() as u64,
            sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
        }
    }
}

/// File contents produced by a computation, written by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub command: String,
    pub config: ExperimentConfig,
    pub derived: Vec<Quantity>,
    pub checks: Vec<Check>,
    pub files: Vec<FileEntry>,
}

impl RunReport {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        RunReport {
            schema: SCHEMA.into(),
            command: command.into(),
            config: config.clone(),
            derived: Vec::new(),
            checks: Vec::new(),
            files: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, value: f64, unit: &str) {
        self.derived.push(Quantity {
            name: name.into(),
            value,
            unit: unit.into(),
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text table of the derived quantities and checks.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let width = self.derived.iter().map(|q| q.name.len()).max().unwrap_or(0);
        for q in &self.derived {
            out.push_str(&format!("{:<width$}  {:>14.6e}  {}\n", q.name, q.value, q.unit));
        }
        let bound = |b: Option<f64>, open: &str| b.map_or(open.to_string(), |v| format!("{v:.5e}"));
        for c in &self.checks {
            out.push_str(&format!(
                "[{}] {:<4} {:<34} {:>12.5e} in [{}, {}]\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.name,
                c.value,
                bound(c.lower, "-inf"),
                bound(c.upper, "inf")
            ));
        }
        out
    }
}

/// Geometry of the s-polarized resonance: configured mirrors replaced by
/// the s-polarization transmissions, extra loss set by the measured finesse.
fn s_polarized(config: &ExperimentConfig) -> Result<(CavityGeometry, f64)> {
    let p = config.geometry()?;
    let bare = CavityGeometry {
        mirror_transmissions: S_POL_TRANSMISSIONS,
        extra_loss: 0.0,
        ..p
    };
    let mirror_finesse = finesse_from_losses(&bare)?;
    let extra = extra_loss_for_finesse(S_POL_TRANSMISSIONS, MEASURED_FINESSE_S)?;
    Ok((
        CavityGeometry {
            extra_loss: extra,
            ..bare
        },
        mirror_finesse,
    ))
}

pub fn cavity_section(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let g = config.geometry()?;
    let ch = CavityCharacter::from_geometry(&g)?;
    let lw = linewidth_and_decay(&g, ch.finesse)?;
    let enh = enhancement_factors(&g, ch.finesse)?;
    let input = config.input_power()?;
    report.push("finesse", ch.finesse, "");
    report.push("extra_loss", g.extra_loss, "");
    report.push("fsr", ch.fsr, "Hz");
    report.push("fwhm", ch.linewidth_fwhm, "Hz");
    report.push("kappa_intensity", lw.kappa_intensity, "rad/s");
    report.push("kappa_field", lw.kappa_field, "rad/s");
    report.push("buildup_f_over_pi", enh.finesse_over_pi, "");
    report.push("circulating_over_incident", enh.circulating_over_incident, "");
    report.push("circulating_over_coupled", enh.circulating_over_coupled, "");
    report.push("mode_volume", ch.mode_volume * 1e9, "mm^3");
    report.push("input_power_per_direction", input, "W");
    report.push(
        "circulating_power_per_direction",
        circulating_power(input, &g, config.cavity.mode_match)?,
        "W",
    );

    let (s, mirror_finesse) = s_polarized(config)?;
    let s_fwhm = linewidth_and_decay(&s, MEASURED_FINESSE_S)?.fwhm;
    report.push("s_pol_mirror_finesse", mirror_finesse, "");
    report.push("s_pol_extra_loss", s.extra_loss, "");
    report.push("s_pol_fwhm", s_fwhm, "Hz");

    report.checks.extend([
        Check::within("1a", "p-pol linewidth FWHM (Hz)", ch.linewidth_fwhm, 1.38e6, 1.44e6),
        Check::within("1b", "s-pol linewidth FWHM (Hz)", s_fwhm, 20.3e3, 21.2e3),
        Check::relative("2", "mode volume (mm^3)", ch.mode_volume * 1e9, 1.0, 0.1),
        Check::relative("3a", "s-pol finesse from mirrors", mirror_finesse, 2.0e5, 0.05),
        Check::between("3b", "s-pol extra loss", s.extra_loss, 0.0, 1e-5),
    ]);
    Ok(())
}

pub fn trap_section(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let species = config.species();
    let trap = config.trap_state()?;
    let s = &trap.secular;
    let temperature = config.temperature();
    let ratio = secular_ratio(trap.wavelength, &trap.geometry)?;
    report.push("depth", trap.depth / KB, "K");
    report.push("depth_over_h", trap.depth / H, "Hz");
    report.push("axial_frequency", s.axial / (2.0 * PI), "Hz");
    report.push("radial_frequency_v", s.radial_v / (2.0 * PI), "Hz");
    report.push("radial_frequency_h", s.radial_h / (2.0 * PI), "Hz");
    report.push("axial_to_radial_ratio", ratio, "");
    report.push(
        "scattering_rate",
        scattering_rate(trap.depth, trap.wavelength, &species)?,
        "1/s",
    );
    report.push(
        "antinodes_in_cloud",
        antinode_count(config.trap.cloud_extent_mm * 1e-3, trap.wavelength)? as f64,
        "",
    );
    report.push(
        "peak_density",
        thermal::peak_density(config.thermal.atom_count as f64, temperature, &trap, &species)? * 1e-6,
        "1/cm^3",
    );
    report.push(
        "temperature_over_depth",
        thermal::depth_ratio(temperature, trap.depth)?,
        "",
    );

    report.checks.extend([
        Check::relative("4a", "secular ratio", ratio, 703.0, 0.02),
        Check::relative("4b", "secular ratio vs trap 700", ratio, 700.0, 0.05),
        Check::within("4c", "depth at 10 W total (K)", trap.depth / KB, 0.7e-3, 2.8e-3),
    ]);
    Ok(())
}

pub fn thermal_section(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let species = config.species();
    let th = &config.thermal;
    let temperature = config.temperature();
    let clean = TofSeries::synthetic(&config.tof_times(), th.tof_sigma0_mm * 1e-3, temperature, &species)?;
    let exact = thermal::fit_temperature_tof(&clean, &species)?;
    let noisy = thermal::fit_temperature_tof(&clean.with_noise(0.01, th.seed)?, &species)?;
    let trap = config.trap_state()?;
    let ensemble = thermal::sample_ensemble(th.sample_count, temperature, &trap, &species, th.seed)?;
    let vz: Vec<f64> = ensemble.samples.iter().map(|p| p.velocity[2]).collect();
    let ks = thermal::ks_statistic(&vz, |v| {
        thermal::maxwell_boltzmann_cdf(v, temperature, &species).unwrap_or(f64::NAN)
    });
    let ks_crit = thermal::ks_critical_1pct(vz.len());
    let ratio = thermal::depth_ratio(280e-6, 1.4e-3 * KB)?;

    report.push("tof_temperature_noiseless", exact.temperature, "K");
    report.push("tof_temperature_1pct_noise", noisy.temperature, "K");
    report.push("ks_statistic_vz", ks, "");
    report.push("ks_critical_1pct", ks_crit, "");
    report.checks.extend([
        Check::relative(
            "10a",
            "TOF round trip, noiseless (K)",
            exact.temperature,
            temperature,
            1e-3,
        ),
        Check::relative(
            "10b",
            "TOF round trip, 1% noise (K)",
            noisy.temperature,
            temperature,
            0.03,
        ),
        Check::at_most("10c", "KS statistic / 1% critical value", ks / ks_crit, 1.0),
        Check::relative("10d", "T/U at 280 uK, 1.4 mK", ratio, 0.20, 1e-9),
    ]);
    Ok(())
}

/// Free-atom spectrum at the configured temperature, as CSV.
pub fn rir_spectrum_table(config: &ExperimentConfig, temperature: f64) -> Result<(rir::RirSpectrum, Table)> {
    let spectrum = rir::rir_spectrum(
        &config.rir_grid(),
        temperature,
        &config.probe(),
        config.thermal.atom_count as f64,
        &config.species(),
        &config.rir_options(),
    )?;
    let table = Table::new()
        .with(
            "delta_omega_hz",
            spectrum.delta_omega.iter().map(|w| w / (2.0 * PI)).collect(),
        )
        .with("signal", spectrum.signal.clone());
    Ok((spectrum, table))
}

pub fn rir_section(config: &ExperimentConfig, report: &mut RunReport, artifacts: &mut Vec<Artifact>) -> Result<()> {
    let species = config.species();
    let probe = config.probe();
    let temperature = config.temperature();
    let (spectrum, table) = rir_spectrum_table(config, temperature)?;
    artifacts.push(Artifact {
        name: "rir_spectrum.csv".into(),
        contents: table.to_csv(),
    });
    let fit = rir::fit_temperature_rir(&spectrum, &species)?;
    let extremum = fit.peak_to_peak / 2.0 / (2.0 * PI);
    let expected = rir::rir_width(temperature, spectrum.q, &species) / (2.0 * PI);

    let f = rir::geometry_factor(probe.phi)?;
    let life_free = rir::grating_lifetime(temperature, &probe, &species, Motion::Free)?;
    let life_trapped = rir::grating_lifetime(temperature, &probe, &species, Motion::Trapped)?;
    let crit_free = rir::critical_scan_rate(temperature, &probe, &species, Motion::Free)?;
    let crit_trapped = rir::critical_scan_rate(temperature, &probe, &species, Motion::Trapped)?;

    report.push("raman_q", spectrum.q, "rad/m");
    report.push("rir_extremum_detuning", extremum, "Hz");
    report.push("rir_fit_temperature", fit.temperature, "K");
    report.push("rir_splitting_temperature", fit.closed_form_temperature, "K");
    report.push("geometry_factor", f, "");
    report.push("grating_lifetime_free", life_free, "s");
    report.push("grating_lifetime_trapped", life_trapped, "s");
    report.push("critical_scan_rate_free", crit_free, "Hz/s");
    report.push("critical_scan_rate_trapped", crit_trapped, "Hz/s");
    report.push(
        "raman_lattice_depth",
        rir::raman_lattice_depth(&probe, &species)? / KB,
        "K",
    );

    report.checks.extend([
        Check::relative("5a", "RIR extremum at 100 uK (Hz)", extremum, 28.9e3, 0.02),
        Check::relative("5b", "RIR extremum vs q*v_th (Hz)", extremum, expected, 1e-3),
        Check::relative("5c", "RIR fit temperature (K)", fit.temperature, temperature, 5e-3),
        Check::relative("6a", "geometry factor f(3 deg)", f, 19.11, 1e-3),
        Check::relative("6b", "trapped grating lifetime (s)", life_trapped, 100e-6, 0.15),
        Check::within(
            "7a",
            "free critical scan rate (Hz/s)",
            crit_free,
            2.1e9 / 3.0,
            2.1e9 * 3.0,
        ),
        Check::relative(
            "7b",
            "trapped rate * f^2 / free rate",
            crit_trapped * f * f / crit_free,
            1.0,
            1e-12,
        ),
    ]);
    Ok(())
}

/// Trace of the configured sweep (bare or thermally averaged) as CSV.
pub fn bloch_sweep_table(config: &ExperimentConfig) -> Result<(bloch::BlochTrace, Table)> {
    let sweep = config.sweep();
    let trace = if config.sweep.velocity_classes > 1 {
        bloch::inhomogeneous_average(
            config.temperature(),
            &config.probe(),
            &config.species(),
            &sweep,
            config.sweep.velocity_classes,
            config.probe.motion,
        )?
    } else {
        bloch::integrate_sweep(&sweep)?
    };
    let table = Table::new()
        .with("t_s", trace.t.clone())
        .with("delta_hz", trace.delta.iter().map(|d| d / (2.0 * PI)).collect())
        .with("u", trace.u.clone())
        .with("v", trace.v.clone())
        .with("w", trace.w.clone())
        .with("im_rho12", trace.im_rho12());
    Ok((trace, table))
}

pub fn bloch_section(config: &ExperimentConfig, report: &mut RunReport, artifacts: &mut Vec<Artifact>) -> Result<()> {
    let sweep = config.sweep();
    let trace = bloch::integrate_sweep(&sweep)?;
    let (_, table) = bloch_sweep_table(&ExperimentConfig {
        sweep: crate::config::SweepBlock {
            velocity_classes: 1,
            ..config.sweep.clone()
        },
        ..config.clone()
    })?;
    artifacts.push(Artifact {
        name: "bloch_sweep.csv".into(),
        contents: table.to_csv(),
    });

    let pre = bloch::pre_resonance_fraction(&trace, &sweep)?;
    let ringing = bloch::ringing_metrics(&trace, &sweep)?;
    let unit = (sweep.gamma / (2.0 * PI)).powi(2);
    let slow = SweepConfig {
        scan_rate: 0.01 * unit,
        delta_start: -10.0 * sweep.gamma,
        delta_end: 10.0 * sweep.gamma,
        sample_interval: None,
        ..sweep
    };
    let adiabatic = bloch::adiabatic_deviation(&bloch::integrate_sweep(&slow)?, &slow)?;
    let critical = bloch::critical_rate_scan(&sweep, config.sweep.critical_threshold)?;

    let tol = sweep.tolerance;
    let norm_excess = trace.max_norm_sq().sqrt() - 1.0;
    let hamiltonian = bloch::integrate_sweep(&SweepConfig { gamma: 0.0, ..sweep })?;
    let drift = (0..hamiltonian.len())
        .map(|i| (hamiltonian.vector(i).norm_sq().sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    let refined = bloch::integrate_sweep(&SweepConfig {
        max_step: sweep.max_step / 2.0,
        tolerance: tol / 2.0,
        ..sweep
    })?;
    let halving = (0..trace.len().min(refined.len()))
        .map(|i| {
            (trace.u[i] - refined.u[i])
                .abs()
                .max((trace.v[i] - refined.v[i]).abs())
                .max((trace.w[i] - refined.w[i]).abs())
        })
        .fold(0.0, f64::max);

    report.push("sweep_rate_over_gamma_squared", sweep.dimensionless_rate(), "");
    report.push("pre_resonance_fraction", pre, "");
    report.push("ringing_oscillations", ringing.oscillations() as f64, "");
    report.push(
        "ringing_onset_after_resonance",
        ringing.onset_time - ringing.resonance_time,
        "s",
    );
    report.push("ringing_max_chirp_deviation", ringing.max_chirp_deviation(0), "");
    report.push("ringing_envelope_decay", ringing.envelope_decay_rate, "1/s");
    report.push("adiabatic_deviation_at_0.01", adiabatic, "");
    report.push("bloch_critical_scan_rate", critical, "Hz/s");
    report.push("bloch_critical_threshold", config.sweep.critical_threshold, "");

    report.checks.extend([
        Check::at_most("8a", "pre-resonance |v| / peak |v|", pre, 0.05),
        Check::at_least("8b", "ringing oscillations", ringing.oscillations() as f64, 5.0),
        Check::at_most("8c", "chirp-law deviation", ringing.max_chirp_deviation(0), 0.1),
        Check::at_most("8d", "adiabatic deviation", adiabatic, 0.05),
        Check::at_most("9a", "norm excess over 1", norm_excess, 10.0 * tol),
        Check::at_most("9b", "norm drift at zero decay", drift, 10.0 * tol),
        Check::at_most("9c", "step-halving change", halving, tol * trace.len() as f64),
    ]);
    Ok(())
}

/// Full reproduction suite: every section with its reference comparisons.
pub fn reproduction(config: &ExperimentConfig) -> Result<(RunReport, Vec<Artifact>)> {
    let mut report = RunReport::new("report", config);
    let mut artifacts = Vec::new();
    cavity_section(config, &mut report)?;
    trap_section(config, &mut report)?;
    thermal_section(config, &mut report)?;
    rir_section(config, &mut report, &mut artifacts)?;
    bloch_section(config, &mut report, &mut artifacts)?;
    Ok((report, artifacts))
}
