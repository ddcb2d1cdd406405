use std::path::Path;
use std::process::{Command, Output};

use ringcav::files::Table;

fn ringcav(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringcav"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("RINGCAV_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn cavity_reports_linewidth() {
    let dir = tempfile::tempdir().unwrap();
    let out = ringcav(dir.path(), &["cavity"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("fwhm"), "{stdout}");
    let doc = json(&dir.path().join("cavity.json"));
    let fwhm = doc["derived"]
        .as_array()
        .unwrap()
        .iter()
        .find(|q| q["name"] == "fwhm")
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert!((fwhm - 1.41e6).abs() < 5e3, "{fwhm}");
}

#[test]
fn rir_spectrum_extrema_at_doppler_width() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ringcav(dir.path(), &["rir-spectrum", "--temperature", "100e-6"])
        .status
        .success());
    let table = Table::read(&dir.path().join("rir_spectrum.csv")).unwrap();
    let x = table.column("delta_omega_hz").unwrap();
    let s = table.column("signal").unwrap();
    let imax = (0..s.len()).max_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
    let imin = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
    let step = x[1] - x[0];
    assert!((x[imax] - 28.9e3).abs() < 0.02 * 28.9e3 + step, "{}", x[imax]);
    assert!((x[imin] + 28.9e3).abs() < 0.02 * 28.9e3 + step, "{}", x[imin]);
}

#[test]
fn rir_fit_recovers_spectrum_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rir_spectrum.csv");
    let cfg = write_config(dir.path(), r#"{"probe": {"span_khz": 300}}"#);
    let out = ringcav(dir.path(), &["--config", &cfg, "rir-spectrum", "--temperature", "2e-4"]);
    assert!(out.status.success());
    assert!(ringcav(dir.path(), &["rir-fit", "--input", csv.to_str().unwrap()])
        .status
        .success());
    let doc = json(&dir.path().join("rir_fit.json"));
    let t = doc["temperature_K"].as_f64().unwrap();
    assert!((t / 2e-4 - 1.0).abs() < 5e-3, "{t}");
    assert!(doc["q"].as_f64().unwrap() > 0.0);
    assert!(doc["method"].is_string());
}

#[test]
fn fixed_step_sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"sweep": {"fixed_step_us": 0.05, "sample_interval_us": null}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(ringcav(&a, &["--config", &cfg, "bloch-sweep"]).status.success());
    assert!(ringcav(&b, &["--config", &cfg, "bloch-sweep"]).status.success());
    let x = std::fs::read(a.join("bloch_sweep.csv")).unwrap();
    assert_eq!(x, std::fs::read(b.join("bloch_sweep.csv")).unwrap());
    let table = Table::from_csv(&x).unwrap();
    assert_eq!(table.headers, ["t_s", "delta_hz", "u", "v", "w", "im_rho12"]);
}

#[test]
fn tof_reads_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let species = ringcav::physics::AtomSpecies::rubidium_85();
    let times: Vec<f64> = (0..7).map(|i| i as f64 * 2e-3).collect();
    let widths: Vec<f64> = times
        .iter()
        .map(|&t| ringcav::thermal::tof_width(t, 4e-4, 3e-5, &species).unwrap())
        .collect();
    let csv = dir.path().join("tof_in.csv");
    std::fs::write(&csv, Table::new().with("t_s", times).with("width_m", widths).to_csv()).unwrap();
    assert!(ringcav(dir.path(), &["tof", "--input", csv.to_str().unwrap()])
        .status
        .success());
    let t = json(&dir.path().join("tof.json"))["temperature_K"].as_f64().unwrap();
    assert!((t / 3e-5 - 1.0).abs() < 1e-6, "{t}");
}

#[test]
fn critical_rate_json() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ringcav(dir.path(), &["bloch-critical", "--threshold", "0.1"])
        .status
        .success());
    let doc = json(&dir.path().join("bloch_critical.json"));
    let rate = doc["critical_rate_hz_per_s"].as_f64().unwrap();
    assert!(rate > 0.1 * 5e3 * 5e3 && rate < 0.5 * 5e3 * 5e3, "{rate}");
    assert_eq!(doc["threshold"].as_f64(), Some(0.1));
}

#[test]
fn modes_and_plot_write_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"output": {"plots": true}}"#);
    let out = ringcav(
        dir.path(),
        &["--config", &cfg, "modes", "--m", "1", "--n", "0", "--points", "21"],
    );
    assert!(out.status.success());
    let table = Table::read(&dir.path().join("modes.csv")).unwrap();
    assert_eq!(table.column("intensity_w_per_m2").unwrap().len(), 21 * 21);
    assert!(std::fs::read_to_string(dir.path().join("modes.svg"))
        .unwrap()
        .starts_with("<svg"));

    let csv = dir.path().join("modes.csv");
    let svg = dir.path().join("cut.svg");
    let out = ringcav(
        dir.path(),
        &[
            "plot",
            csv.to_str().unwrap(),
            "--x",
            "x_m",
            "--y",
            "intensity_w_per_m2",
            "--output",
            svg.to_str().unwrap(),
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(std::fs::read_to_string(svg).unwrap().contains("</svg>"));
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), r#"{"cavity": {"waist_v_um": -1}}"#);
    let out = ringcav(dir.path(), &["--config", &bad, "cavity"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cavity.waist_v_um"));

    let unknown = write_config(dir.path(), r#"{"cavity": {"waist": 1}}"#);
    assert_eq!(
        ringcav(dir.path(), &["--config", &unknown, "cavity"]).status.code(),
        Some(2)
    );

    let missing = dir.path().join("absent.json");
    assert_eq!(
        ringcav(dir.path(), &["--config", missing.to_str().unwrap(), "cavity"])
            .status
            .code(),
        Some(4)
    );

    assert_eq!(
        ringcav(dir.path(), &["rir-spectrum", "--temperature=-1"]).status.code(),
        Some(3)
    );
    assert_eq!(ringcav(dir.path(), &["no-such-command"]).status.code(), Some(2));
}

#[test]
fn failed_runs_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let garbage = dir.path().join("bad.csv");
    std::fs::write(&garbage, "delta_omega_hz,signal\n1,abc\n").unwrap();
    let out = ringcav(&out_dir, &["rir-fit", "--input", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let out = ringcav(&out_dir, &["bloch-critical", "--threshold", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_ringcav"))
        .args(["--quiet", "trap"])
        .env("RINGCAV_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("trap.json").exists());
}
