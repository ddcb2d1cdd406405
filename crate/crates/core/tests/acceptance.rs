//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};

use ringcav::bloch::{self, SweepConfig};
use ringcav::cavity::{
    extra_loss_for_finesse, finesse_from_losses, CavityCharacter, CavityGeometry, MEASURED_FINESSE_P,
    MEASURED_FINESSE_S, S_POL_TRANSMISSIONS,
};
use ringcav::config::ExperimentConfig;
use ringcav::physics::{AtomSpecies, C, KB};
use ringcav::rir::{self, Motion, RamanProbe, RirOptions};
use ringcav::thermal::{self, TofSeries};
use ringcav::trap::secular_ratio;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(value: f64, target: f64) -> f64 {
    ((value - target) / target).abs()
}

fn defaults() -> ExperimentConfig {
    ExperimentConfig::from_json(&std::fs::read_to_string(defaults_path()).expect("shipped defaults")).unwrap()
}

fn defaults_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/paper_defaults.json")
}

fn cavity_linewidth() -> Outcome {
    let p = CavityGeometry::ring_p_polarized();
    let s = CavityGeometry::ring_s_polarized();
    let fp = CavityCharacter::with_finesse(&p, MEASURED_FINESSE_P)
        .unwrap()
        .linewidth_fwhm;
    let fs = CavityCharacter::with_finesse(&s, MEASURED_FINESSE_S)
        .unwrap()
        .linewidth_fwhm;
    let oracle_p = C / (0.085 * 2500.0);
    let oracle_s = C / (0.085 * 170_000.0);
    let pass = (1.38e6..=1.44e6).contains(&fp)
        && (20.3e3..=21.2e3).contains(&fs)
        && rel(fp, oracle_p) < 1e-12
        && rel(fs, oracle_s) < 1e-12;
    outcome(
        pass,
        format!("FWHM {:.4} MHz (F=2500), {:.3} kHz (F=170000)", fp / 1e6, fs / 1e3),
    )
}

fn mode_volume() -> Outcome {
    let v = CavityCharacter::with_finesse(&CavityGeometry::ring_p_polarized(), MEASURED_FINESSE_P)
        .unwrap()
        .mode_volume;
    let oracle = PI * 129e-6 * 124e-6 * 0.085 / 4.0;
    let mm3 = v * 1e9;
    let pass = rel(v, oracle) < 1e-12 && (mm3 - 1.068).abs() < 5e-4 && rel(mm3, 1.0) <= 0.1;
    outcome(pass, format!("V = {mm3:.4} mm^3"))
}

fn finesse_from_mirrors() -> Outcome {
    let bare = CavityGeometry {
        extra_loss: 0.0,
        ..CavityGeometry::ring_s_polarized()
    };
    let f = finesse_from_losses(&bare).unwrap();
    let oracle = 2.0 * PI / (27e-6 + 2e-6 + 2e-6);
    let extra = extra_loss_for_finesse(S_POL_TRANSMISSIONS, MEASURED_FINESSE_S).unwrap();
    let pass = rel(f, oracle) < 1e-12 && rel(f, 2.0e5) < 0.05 && extra > 0.0 && extra < 1e-5;
    outcome(pass, format!("F(mirrors) = {f:.4e}, extra loss = {extra:.3e}"))
}

fn secular_ratio_and_depth() -> Outcome {
    let cfg = defaults();
    let trap = cfg.trap_state().unwrap();
    let g = &trap.geometry;
    let ratio = secular_ratio(trap.wavelength, g).unwrap();
    let oracle = 2.0 * PI / 799e-9 * (129e-6_f64 * 124e-6).sqrt() / 2.0_f64.sqrt();
    let from_freqs = trap.secular.axial_to_radial_ratio();
    let depth_mk = trap.depth / KB * 1e3;
    let pass = rel(ratio, oracle) < 1e-12
        && rel(from_freqs, ratio) < 1e-9
        && rel(ratio, 703.0) <= 0.02
        && rel(ratio, 700.0) <= 0.05
        && (0.7..=2.8).contains(&depth_mk);
    outcome(pass, format!("ratio {ratio:.2}, depth {depth_mk:.3} mK at 2 x 5 W"))
}

fn free_q_vth(temperature: f64) -> f64 {
    let species = AtomSpecies::rubidium_85();
    let q = 2.0 * (2.0 * PI / 780.241e-9) * (13.1_f64.to_radians() / 2.0).sin();
    q * (KB * temperature / species.mass).sqrt()
}

fn rir_spectrum_and_fit() -> Outcome {
    let species = AtomSpecies::rubidium_85();
    let probe = RamanProbe::reference();
    let opts = RirOptions::free();
    let width = free_q_vth(100e-6);
    let grid: Vec<f64> = (0..20001)
        .map(|i| -4.0 * width + 8.0 * width * i as f64 / 20000.0)
        .collect();
    let s = rir::rir_spectrum(&grid, 100e-6, &probe, 3e7, &species, &opts).unwrap();
    let (imax, _) = s
        .signal
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    let (imin, _) = s
        .signal
        .iter()
        .enumerate()
        .fold((0, f64::MAX), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    let hi = s.delta_omega[imax] / (2.0 * PI);
    let lo = s.delta_omega[imin] / (2.0 * PI);
    let mut pass = rel(hi.abs(), 28.9e3) <= 0.02
        && rel(lo.abs(), 28.9e3) <= 0.02
        && hi * lo < 0.0
        && rel(hi.abs(), width / (2.0 * PI)) < 1e-3;

    let mut worst: f64 = 0.0;
    for t_uk in [20.0, 35.0, 50.0, 75.0, 100.0, 150.0, 200.0, 280.0, 350.0, 420.0, 500.0] {
        let t = t_uk * 1e-6;
        let w = free_q_vth(t);
        let grid = rir::detuning_grid(-5.0 * w, 5.0 * w, 801).unwrap();
        let spec = rir::rir_spectrum(&grid, t, &probe, 3e7, &species, &opts).unwrap();
        let fit = rir::fit_temperature_rir(&spec, &species).unwrap();
        worst = worst.max(rel(fit.temperature, t));
    }
    pass &= worst <= 5e-3;
    outcome(
        pass,
        format!(
            "extrema {:+.3} / {:+.3} kHz, worst fit error {:.2e} over 20-500 uK",
            hi / 1e3,
            lo / 1e3,
            worst
        ),
    )
}

fn geometry_factor_chain() -> Outcome {
    let species = AtomSpecies::rubidium_85();
    let probe = RamanProbe::reference();
    let f = rir::geometry_factor(3.0_f64.to_radians()).unwrap();
    let life = rir::grating_lifetime(100e-6, &probe, &species, Motion::Trapped).unwrap();
    let oracle = (1.0 / 3.0_f64.to_radians().sin()) / free_q_vth(100e-6);
    let pass = rel(f, 19.11) < 1e-3 && rel(life, oracle) < 1e-9 && rel(life, 100e-6) <= 0.15;
    outcome(pass, format!("f = {f:.3}, trapped lifetime {:.1} us", life * 1e6))
}

fn critical_scan_rate() -> Outcome {
    let species = AtomSpecies::rubidium_85();
    let probe = RamanProbe::reference();
    let free = rir::critical_scan_rate(100e-6, &probe, &species, Motion::Free).unwrap();
    let trapped = rir::critical_scan_rate(100e-6, &probe, &species, Motion::Trapped).unwrap();
    let f = rir::geometry_factor(probe.phi).unwrap();
    let oracle = (free_q_vth(100e-6) / (2.0 * PI)).powi(2);
    let pass =
        rel(free, oracle) < 1e-9 && (2.1e9 / 3.0..=2.1e9 * 3.0).contains(&free) && rel(trapped * f * f, free) < 1e-12;
    outcome(
        pass,
        format!("free {:.3} kHz/us, trapped {:.3e} kHz/us", free / 1e9, trapped / 1e9),
    )
}

fn bloch_ringing() -> Outcome {
    let start = Instant::now();
    let cfg = SweepConfig::reference();
    let trace = bloch::integrate_sweep(&cfg).unwrap();
    let pre = bloch::pre_resonance_fraction(&trace, &cfg).unwrap();
    let ringing = bloch::ringing_metrics(&trace, &cfg).unwrap();
    let chirp = ringing.max_chirp_deviation(0);
    let unit = (cfg.gamma / (2.0 * PI)).powi(2);
    let mut adiabatic: f64 = 0.0;
    for factor in [0.01, 0.005] {
        let slow = SweepConfig {
            scan_rate: factor * unit,
            delta_start: -10.0 * cfg.gamma,
            delta_end: 10.0 * cfg.gamma,
            sample_interval: None,
            ..cfg
        };
        adiabatic = adiabatic.max(bloch::adiabatic_deviation(&bloch::integrate_sweep(&slow).unwrap(), &slow).unwrap());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = pre < 0.05 && ringing.oscillations() >= 5 && chirp <= 0.1 && adiabatic <= 0.05 && elapsed < 10.0;
    outcome(
        pass,
        format!(
            "pre {:.2}%, {} oscillations, chirp dev {:.1}%, adiabatic dev {:.2}%, {:.2} s",
            pre * 100.0,
            ringing.oscillations(),
            chirp * 100.0,
            adiabatic * 100.0,
            elapsed
        ),
    )
}

fn random_sweep(gamma_khz: f64, rabi_frac: f64, rate_units: f64, span: f64) -> SweepConfig {
    let gamma = 2.0 * PI * gamma_khz * 1e3;
    SweepConfig {
        gamma,
        rabi: rabi_frac * gamma,
        scan_rate: rate_units * (gamma_khz * 1e3).powi(2),
        delta_start: -span * gamma,
        delta_end: span * gamma,
        max_step: 1.0 / gamma,
        tolerance: 1e-8,
        sample_interval: None,
        fixed_step: None,
    }
}

fn bloch_invariants() -> Outcome {
    const CASES: u32 = 120;
    let strategy = (1.0..20.0f64, 0.01..2.0f64, 0.05..30.0f64, 3.0..10.0f64);
    let mut runner = TestRunner::new(RunnerConfig {
        cases: CASES,
        failure_persistence: None,
        ..RunnerConfig::default()
    });
    let result = runner.run(&strategy, |(gk, rf, rate, span)| {
        let mut cfg = random_sweep(gk, rf, rate, span);
        cfg.sample_interval = Some(cfg.duration() / 500.0);
        let tol = cfg.tolerance;

        let trace = bloch::integrate_sweep(&cfg).unwrap();
        prop_assert!(trace.max_norm_sq().sqrt() <= 1.0 + 10.0 * tol, "left the Bloch sphere");

        let dark = bloch::integrate_sweep(&SweepConfig { gamma: 0.0, ..cfg }).unwrap();
        for i in 0..dark.len() {
            prop_assert!(
                (dark.vector(i).norm_sq().sqrt() - 1.0).abs() <= 10.0 * tol,
                "norm drift at zero decay"
            );
        }

        let refined = bloch::integrate_sweep(&SweepConfig {
            max_step: cfg.max_step / 2.0,
            tolerance: tol / 2.0,
            ..cfg
        })
        .unwrap();
        prop_assert_eq!(trace.len(), refined.len());
        let bound = tol * trace.len() as f64;
        for i in 0..trace.len() {
            let d = (trace.u[i] - refined.u[i])
                .abs()
                .max((trace.v[i] - refined.v[i]).abs())
                .max((trace.w[i] - refined.w[i]).abs());
            prop_assert!(d < bound, "step halving changed the trace by {}", d);
        }
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, format!("{CASES} random configurations")),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn thermal_suite() -> Outcome {
    let cfg = defaults();
    let species = cfg.species();
    let t = cfg.temperature();
    let clean = TofSeries::synthetic(&cfg.tof_times(), 0.5e-3, t, &species).unwrap();
    let exact = thermal::fit_temperature_tof(&clean, &species).unwrap().temperature;
    let mut worst_noisy: f64 = 0.0;
    for seed in [1, 2, 3, 4, 5] {
        let noisy = thermal::fit_temperature_tof(&clean.with_noise(0.01, seed).unwrap(), &species).unwrap();
        worst_noisy = worst_noisy.max(rel(noisy.temperature, t));
    }

    let trap = cfg.trap_state().unwrap();
    let n = 100_000;
    let ensemble = thermal::sample_ensemble(n, t, &trap, &species, cfg.thermal.seed).unwrap();
    let sigma = (KB * t / species.mass).sqrt();
    let crit = thermal::ks_critical_1pct(n);
    let mut worst_ks: f64 = 0.0;
    for axis in 0..3 {
        let v: Vec<f64> = ensemble.samples.iter().map(|p| p.velocity[axis]).collect();
        let d = thermal::ks_statistic(&v, |x| 0.5 * (1.0 + libm::erf(x / (sigma * 2.0_f64.sqrt()))));
        worst_ks = worst_ks.max(d / crit);
    }
    let ratio = thermal::depth_ratio(280e-6, 1.4e-3 * KB).unwrap();

    let pass = rel(exact, t) <= 1e-3 && worst_noisy <= 0.03 && worst_ks <= 1.0 && (ratio - 0.20).abs() < 1e-12;
    outcome(
        pass,
        format!(
            "TOF {:.1e} noiseless / {:.2}% noisy, KS/crit {:.3}, T/U {:.3}",
            rel(exact, t),
            worst_noisy * 100.0,
            worst_ks,
            ratio
        ),
    )
}

fn run_report(dir: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ringcav"))
        .arg("--quiet")
        .arg("--config")
        .arg(defaults_path())
        .arg("--out-dir")
        .arg(dir)
        .arg("report")
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("report exited with {status}"))
    }
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = run_report(&a).and_then(|_| run_report(&b)) {
        return outcome(false, e);
    }
    let (la, lb) = (listing(&a), listing(&b));
    let names: Vec<&str> = la.iter().map(|(n, _)| n.as_str()).collect();
    let pass = !la.is_empty() && names.contains(&"report.json") && la == lb;
    outcome(pass, format!("{} files compared: {}", la.len(), names.join(", ")))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("cavity linewidth", cavity_linewidth),
        ("mode volume", mode_volume),
        ("finesse from mirror data", finesse_from_mirrors),
        ("secular-frequency ratio and depth", secular_ratio_and_depth),
        ("RIR free-atom spectrum and fit", rir_spectrum_and_fit),
        ("geometry factor chain", geometry_factor_chain),
        ("critical scan rate", critical_scan_rate),
        ("Bloch ringing", bloch_ringing),
        ("Bloch invariants", bloch_invariants),
        ("thermal suite", thermal_suite),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        if !r.pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {}: {}",
            if r.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            r.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
