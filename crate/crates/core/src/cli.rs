//! Command-line front-end.
//!
//! Every subcommand computes all of its outputs in memory first and only
//! then writes them, each through a temporary file renamed into place, so a
//! failing run leaves no partial files behind.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bloch;
use crate::config::{load_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::files::{write_atomic, Table};
use crate::plot::{emit_plot, heatmap_svg, line_plot_svg, PlotSpec};
use crate::report::{self, Artifact, FileEntry, RunReport};
use crate::rir::{self, effective_q, RirSpectrum};
use crate::thermal::{fit_temperature_tof, TofSeries};
use crate::trap::{intensity_grid, peak_intensity, TransverseMode};

pub const OUT_DIR_ENV: &str = "RINGCAV_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "ringcav",
    version,
    about = "Ring-cavity dipole trap and RIR simulation toolkit"
)]
pub struct Cli {
    /// Experiment configuration (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    /// Random seed, overriding `thermal.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Suppress the summary printed to stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cavity linewidth, finesse, buildup and mode volume.
    Cavity,
    /// Trap depth, secular frequencies, scattering rate and density.
    Trap,
    /// Hermite-Gauss intensity map of a transverse mode.
    Modes(ModesArgs),
    /// Temperature from time-of-flight widths.
    Tof(TofArgs),
    /// Synthetic recoil-induced-resonance spectrum.
    RirSpectrum(TemperatureArg),
    /// Temperature from an RIR spectrum.
    RirFit(InputArg),
    /// Swept Bloch-equation trace.
    BlochSweep,
    /// Smallest scan rate that produces ringing.
    BlochCritical(ThresholdArg),
    /// Full reproduction suite with reference comparisons.
    Report,
    /// Render a CSV file as an SVG line plot.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct ModesArgs {
    #[arg(long, default_value_t = 0)]
    pub m: u32,
    #[arg(long, default_value_t = 0)]
    pub n: u32,
    /// Samples per axis.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    /// Half-width of the map in units of the larger waist.
    #[arg(long, default_value_t = 3.0)]
    pub extent: f64,
}

#[derive(Debug, Args)]
pub struct TofArgs {
    /// CSV with columns `t_s` and `width_m`; synthetic data when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TemperatureArg {
    /// Temperature (K), overriding `thermal.temperature_uk`.
    #[arg(long)]
    pub temperature: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// CSV with columns `delta_omega_hz` and `signal`; synthetic data when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ThresholdArg {
    /// Relative overshoot, overriding `sweep.critical_threshold`.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub csv: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long, required = true, num_args = 1..)]
    pub y: Vec<String>,
    #[arg(long, default_value = "")]
    pub title: String,
    /// SVG path; defaults to the CSV path with an `.svg` extension.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Outcome of a subcommand: its report plus where the files went.
#[derive(Debug)]
pub struct Outcome {
    pub report: RunReport,
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run_from<I, T>(args: I) -> Result<Outcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::config("<command line>", e.to_string()))?;
    run(&cli)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut config = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.thermal.seed = seed;
    }
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let report = run_subcommand(&cli.command, &config, &out_dir)?;
    Ok(Outcome { report, out_dir })
}

pub fn run_subcommand(command: &Command, config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut artifacts = Vec::new();
    let mut report = match command {
        Command::Cavity => {
            let mut r = RunReport::new("cavity", config);
            report::cavity_section(config, &mut r)?;
            artifacts.push(json_artifact("cavity.json", &r.to_json()));
            r
        }
        Command::Trap => {
            let mut r = RunReport::new("trap", config);
            report::trap_section(config, &mut r)?;
            artifacts.push(json_artifact("trap.json", &r.to_json()));
            r
        }
        Command::Modes(a) => modes(config, a, &mut artifacts)?,
        Command::Tof(a) => tof(config, a, &mut artifacts)?,
        Command::RirSpectrum(a) => {
            let temperature = a.temperature.unwrap_or(config.temperature());
            let (spectrum, table) = report::rir_spectrum_table(config, temperature)?;
            let mut r = RunReport::new("rir-spectrum", config);
            r.push("temperature", temperature, "K");
            r.push("q", spectrum.q, "rad/m");
            r.push(
                "extremum_detuning",
                rir::rir_width(temperature, spectrum.q, &config.species()) / (2.0 * std::f64::consts::PI),
                "Hz",
            );
            push_csv(
                config,
                &mut artifacts,
                "rir_spectrum.csv",
                &table,
                "delta_omega_hz",
                &["signal"],
                "RIR spectrum",
            )?;
            r
        }
        Command::RirFit(a) => rir_fit(config, a, &mut artifacts)?,
        Command::BlochSweep => {
            let (trace, table) = report::bloch_sweep_table(config)?;
            let mut r = RunReport::new("bloch-sweep", config);
            r.push("samples", trace.len() as f64, "");
            r.push("sweep_rate_over_gamma_squared", config.sweep().dimensionless_rate(), "");
            push_csv(
                config,
                &mut artifacts,
                "bloch_sweep.csv",
                &table,
                "delta_hz",
                &["im_rho12"],
                "Swept two-level response",
            )?;
            r
        }
        Command::BlochCritical(a) => {
            let threshold = a.threshold.unwrap_or(config.sweep.critical_threshold);
            let rate = bloch::critical_rate_scan(&config.sweep(), threshold)?;
            let mut r = RunReport::new("bloch-critical", config);
            r.push("critical_rate", rate, "Hz/s");
            r.push("threshold", threshold, "");
            let doc = json!({ "critical_rate_hz_per_s": rate, "threshold": threshold });
            artifacts.push(json_artifact("bloch_critical.json", &pretty(&doc)));
            r
        }
        Command::Report => {
            let (mut r, extra) = report::reproduction(config)?;
            for a in extra {
                if config.output.plots {
                    if let Some(svg) = plot_for(&a)? {
                        artifacts.push(svg);
                    }
                }
                artifacts.push(a);
            }
            artifacts.sort_by(|a, b| a.name.cmp(&b.name));
            r.files = artifacts
                .iter()
                .map(|a| FileEntry::describe(&a.name, &a.contents))
                .collect();
            artifacts.push(json_artifact("report.json", &r.to_json()));
            r
        }
        Command::Plot(a) => {
            let spec = PlotSpec {
                x: a.x.clone(),
                y: a.y.clone(),
                title: a.title.clone(),
                output: a.output.clone(),
            };
            let svg = emit_plot(&a.csv, &spec)?;
            let mut r = RunReport::new("plot", config);
            r.files.push(FileEntry::describe(
                &svg.display().to_string(),
                &std::fs::read(&svg).map_err(|e| Error::io(&svg, e))?,
            ));
            return Ok(r);
        }
    };
    if !matches!(command, Command::Report) {
        report.files = artifacts
            .iter()
            .map(|a| FileEntry::describe(&a.name, &a.contents))
            .collect();
    }
    for a in &artifacts {
        write_atomic(&out_dir.join(&a.name), &a.contents)?;
    }
    Ok(report)
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

fn json_artifact(name: &str, text: &str) -> Artifact {
    Artifact {
        name: name.into(),
        contents: text.as_bytes().to_vec(),
    }
}

/// Line plot matching one of the CSV files produced by `report`.
fn plot_for(artifact: &Artifact) -> Result<Option<Artifact>> {
    let spec = match artifact.name.as_str() {
        "rir_spectrum.csv" => PlotSpec::new("delta_omega_hz", &["signal"], "RIR spectrum"),
        "bloch_sweep.csv" => PlotSpec::new("delta_hz", &["im_rho12"], "Swept two-level response"),
        _ => return Ok(None),
    };
    let svg = line_plot_svg(&Table::from_csv(&artifact.contents)?, &spec)?;
    Ok(Some(Artifact {
        name: artifact.name.replace(".csv", ".svg"),
        contents: svg.into_bytes(),
    }))
}

fn push_csv(
    config: &ExperimentConfig,
    artifacts: &mut Vec<Artifact>,
    name: &str,
    table: &Table,
    x: &str,
    y: &[&str],
    title: &str,
) -> Result<()> {
    if config.output.plots {
        artifacts.push(Artifact {
            name: name.replace(".csv", ".svg"),
            contents: line_plot_svg(table, &PlotSpec::new(x, y, title))?.into_bytes(),
        });
    }
    artifacts.push(Artifact {
        name: name.into(),
        contents: table.to_csv(),
    });
    Ok(())
}

fn modes(config: &ExperimentConfig, a: &ModesArgs, artifacts: &mut Vec<Artifact>) -> Result<RunReport> {
    if a.points < 2 {
        return Err(Error::domain("modes needs at least 2 points per axis"));
    }
    if !(a.extent > 0.0 && a.extent.is_finite()) {
        return Err(Error::domain("modes extent must be positive"));
    }
    let geometry = config.geometry()?;
    let mode = TransverseMode::new(a.m, a.n, &geometry);
    let power = config.trap.circulating_power_w[0].max(config.trap.circulating_power_w[1]);
    let peak = peak_intensity(power, &geometry);
    let half = a.extent * geometry.waist_h.max(geometry.waist_v);
    let grid = intensity_grid(&mode, peak, half, a.points, a.points)?;

    let mut xs = Vec::with_capacity(a.points * a.points);
    let mut ys = Vec::with_capacity(a.points * a.points);
    let mut vs = Vec::with_capacity(a.points * a.points);
    for (iy, row) in grid.values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            xs.push(grid.xs[ix]);
            ys.push(grid.ys[iy]);
            vs.push(*v);
        }
    }
    let table = Table::new()
        .with("x_m", xs)
        .with("y_m", ys)
        .with("intensity_w_per_m2", vs);
    if config.output.plots {
        artifacts.push(Artifact {
            name: "modes.svg".into(),
            contents: heatmap_svg(&grid, &format!("TEM{}{}", a.m, a.n))?.into_bytes(),
        });
    }
    artifacts.push(Artifact {
        name: "modes.csv".into(),
        contents: table.to_csv(),
    });
    let mut r = RunReport::new("modes", config);
    r.push("m", a.m as f64, "");
    r.push("n", a.n as f64, "");
    r.push("tem00_peak_intensity", peak, "W/m^2");
    Ok(r)
}

fn tof(config: &ExperimentConfig, a: &TofArgs, artifacts: &mut Vec<Artifact>) -> Result<RunReport> {
    let species = config.species();
    let (series, source) = match &a.input {
        Some(path) => {
            let t = Table::read(path)?;
            (
                TofSeries::new(t.column("t_s")?.to_vec(), t.column("width_m")?.to_vec())?,
                "csv",
            )
        }
        None => {
            let th = &config.thermal;
            let clean = TofSeries::synthetic(
                &config.tof_times(),
                th.tof_sigma0_mm * 1e-3,
                config.temperature(),
                &species,
            )?;
            (clean.with_noise(th.tof_noise, th.seed)?, "synthetic")
        }
    };
    let fit = fit_temperature_tof(&series, &species)?;
    let doc = json!({
        "temperature_K": fit.temperature,
        "sigma0_m": fit.sigma0,
        "residual": fit.residual,
        "points": series.times.len(),
        "source": source,
    });
    artifacts.push(json_artifact("tof.json", &pretty(&doc)));
    let mut r = RunReport::new("tof", config);
    r.push("temperature", fit.temperature, "K");
    r.push("sigma0", fit.sigma0, "m");
    r.push("residual", fit.residual, "m^2");
    Ok(r)
}

fn rir_fit(config: &ExperimentConfig, a: &InputArg, artifacts: &mut Vec<Artifact>) -> Result<RunReport> {
    let species = config.species();
    let spectrum = match &a.input {
        Some(path) => {
            let t = Table::read(path)?;
            RirSpectrum {
                delta_omega: t
                    .column("delta_omega_hz")?
                    .iter()
                    .map(|f| f * 2.0 * std::f64::consts::PI)
                    .collect(),
                signal: t.column("signal")?.to_vec(),
                temperature_used: f64::NAN,
                q: effective_q(&config.probe(), config.probe.motion)?,
            }
        }
        None => report::rir_spectrum_table(config, config.temperature())?.0,
    };
    let fit = rir::fit_temperature_rir(&spectrum, &species)?;
    let doc = json!({
        "temperature_K": fit.temperature,
        "q": spectrum.q,
        "method": "least-squares derivative-of-Gaussian",
        "closed_form_temperature_K": fit.closed_form_temperature,
        "residual": fit.residual,
    });
    artifacts.push(json_artifact("rir_fit.json", &pretty(&doc)));
    let mut r = RunReport::new("rir-fit", config);
    r.push("temperature", fit.temperature, "K");
    r.push("closed_form_temperature", fit.closed_form_temperature, "K");
    r.push("q", spectrum.q, "rad/m");
    Ok(r)
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            if !cli.quiet {
                print!("{}", outcome.report.table());
                for f in &outcome.report.files {
                    println!("wrote {}", outcome.out_dir.join(&f.path).display());
                }
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
