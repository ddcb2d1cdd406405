//! Self-contained SVG line plots and heatmaps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::files::{write_atomic, Table};
use crate::trap::IntensityGrid;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f4e9c", "#c0392b", "#2e8b57", "#7d3c98"];

/// Which columns to draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub title: String,
    /// Defaults to the CSV path with an `.svg` extension.
    pub output: Option<PathBuf>,
}

impl PlotSpec {
    pub fn new(x: &str, y: &[&str], title: &str) -> Self {
        PlotSpec {
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            title: title.into(),
            output: None,
        }
    }
}

/// `delta_hz` → `delta (Hz)`; headers without a known unit suffix are kept.
pub fn axis_label(header: &str) -> String {
    const UNITS: [(&str, &str); 10] = [
        ("_hz_per_s", "Hz/s"),
        ("_hz", "Hz"),
        ("_khz", "kHz"),
        ("_s", "s"),
        ("_us", "μs"),
        ("_um", "μm"),
        ("_m", "m"),
        ("_k", "K"),
        ("_w", "W"),
        ("_w_per_m2", "W/m²"),
    ];
    for (suffix, unit) in UNITS {
        if let Some(stem) = header.strip_suffix(suffix) {
            if !stem.is_empty() {
                return format!("{} ({unit})", pretty(stem));
            }
        }
    }
    pretty(header)
}

fn pretty(name: &str) -> String {
    match name {
        "im_rho12" => "Im ρ₁₂".into(),
        other => other.replace('_', " "),
    }
}

/// Reads `csv_path`, draws the requested columns and writes the SVG.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec) -> Result<PathBuf> {
    let table = Table::read(csv_path)?;
    let svg = line_plot_svg(&table, spec)?;
    let out = spec.output.clone().unwrap_or_else(|| csv_path.with_extension("svg"));
    write_atomic(&out, svg.as_bytes())?;
    Ok(out)
}

/// Renders one panel with a polyline per `y` column.
pub fn line_plot_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    if table.rows() == 0 {
        return Err(Error::Schema("CSV has no data rows".into()));
    }
    if spec.y.is_empty() {
        return Err(Error::Schema("no y columns requested".into()));
    }
    let xs = table.column(&spec.x)?;
    let series: Vec<&[f64]> = spec.y.iter().map(|c| table.column(c)).collect::<Result<_>>()?;
    let (x0, x1) = range(xs.iter());
    let (y0, y1) = range(series.iter().flat_map(|s| s.iter()));
    let frame = Frame::new(x0, x1, y0, y1);

    let mut svg = header(&spec.title);
    frame.axes(&mut svg, &axis_label(&spec.x), &y_label(&spec.y));
    for (i, ys) in series.iter().enumerate() {
        let mut points = String::new();
        for (x, y) in xs.iter().zip(ys.iter()) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", frame.px(*x), frame.py(*y));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
            COLORS[i % COLORS.len()],
            points.trim_end()
        );
    }
    if series.len() > 1 {
        for (i, name) in spec.y.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{y:.1}" fill="{}" font-size="12" text-anchor="end">{}</text>"#,
                WIDTH - RIGHT - 8.0,
                COLORS[i % COLORS.len()],
                escape(&axis_label(name))
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders an intensity map in grey levels, brightest at the maximum.
pub fn heatmap_svg(grid: &IntensityGrid, title: &str) -> Result<String> {
    let (nx, ny) = (grid.xs.len(), grid.ys.len());
    if nx < 2 || ny < 2 {
        return Err(Error::Schema("heatmap needs at least a 2×2 grid".into()));
    }
    let scale = 1e6;
    let frame = Frame::new(
        grid.xs[0] * scale,
        grid.xs[nx - 1] * scale,
        grid.ys[0] * scale,
        grid.ys[ny - 1] * scale,
    );
    let max = grid.values.iter().flatten().cloned().fold(0.0, f64::max);
    let dx = (grid.xs[1] - grid.xs[0]) * scale;
    let dy = (grid.ys[1] - grid.ys[0]) * scale;
    let mut svg = header(title);
    for (iy, row) in grid.values.iter().enumerate() {
        for (ix, v) in row.iter().enumerate() {
            let level = if max > 0.0 { (255.0 * v / max).round() as u8 } else { 0 };
            let (cx, cy) = (grid.xs[ix] * scale, grid.ys[iy] * scale);
            let (xa, xb) = (frame.px(cx - dx / 2.0), frame.px(cx + dx / 2.0));
            let (ya, yb) = (frame.py(cy + dy / 2.0), frame.py(cy - dy / 2.0));
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},{level})"/>"#,
                xa.max(LEFT),
                ya.max(TOP),
                (xb.min(WIDTH - RIGHT) - xa.max(LEFT)).max(0.0),
                (yb.min(HEIGHT - BOTTOM) - ya.max(TOP)).max(0.0)
            );
        }
    }
    frame.axes(&mut svg, "x (μm)", "y (μm)");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn y_label(columns: &[String]) -> String {
    if columns.len() == 1 {
        axis_label(&columns[0])
    } else {
        String::new()
    }
}

fn range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data-to-pixel mapping of the plot area.
struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for x in ticks(self.x0, self.x1) {
            let p = self.px(x);
            let _ = writeln!(
                svg,
                r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{:.1}" stroke="black"/>"#,
                b + 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{p:.2}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                b + 18.0,
                tick_label(x)
            );
        }
        for y in ticks(self.y0, self.y1) {
            let p = self.py(y);
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/>"#,
                l - 5.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#,
                l - 8.0,
                p + 4.0,
                tick_label(y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#,
            (l + r) / 2.0,
            HEIGHT - 15.0,
            escape(xlabel)
        );
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            (t + b) / 2.0,
            (t + b) / 2.0,
            escape(ylabel)
        );
    }
}

/// Round tick positions, about five per axis.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return Vec::new();
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polyline_points(svg: &str) -> Vec<Vec<(f64, f64)>> {
        svg.lines()
            .filter_map(|l| l.split("points=\"").nth(1))
            .map(|rest| {
                rest.split('"')
                    .next()
                    .unwrap()
                    .split(' ')
                    .map(|p| {
                        let (x, y) = p.split_once(',').unwrap();
                        (x.parse().unwrap(), y.parse().unwrap())
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn monotone_series_spans_the_frame() {
        let t = Table::new()
            .with("x_s", vec![0.0, 1.0, 2.0, 3.0])
            .with("y", vec![1.0, 2.0, 4.0, 8.0]);
        let svg = line_plot_svg(&t, &PlotSpec::new("x_s", &["y"], "test")).unwrap();
        let lines = polyline_points(&svg);
        assert_eq!(lines.len(), 1);
        let pts = &lines[0];
        assert_eq!(pts.len(), 4);
        assert_eq!(pts[0], (LEFT, HEIGHT - BOTTOM));
        assert_eq!(pts[3], (WIDTH - RIGHT, TOP));
        assert!(svg.contains("x (s)"));
    }

    #[test]
    fn labels_carry_units() {
        assert_eq!(axis_label("delta_hz"), "delta (Hz)");
        assert_eq!(axis_label("t_s"), "t (s)");
        assert_eq!(axis_label("im_rho12"), "Im ρ₁₂");
        assert_eq!(axis_label("signal"), "signal");
    }

    #[test]
    fn missing_column_and_empty_table_are_schema_errors() {
        let t = Table::new().with("a", vec![1.0, 2.0]);
        assert!(matches!(
            line_plot_svg(&t, &PlotSpec::new("a", &["b"], "")),
            Err(Error::Schema(_))
        ));
        let empty = Table::new().with("a", vec![]).with("b", vec![]);
        assert!(matches!(
            line_plot_svg(&empty, &PlotSpec::new("a", &["b"], "")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn emit_plot_writes_next_to_csv() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("trace.csv");
        let t = Table::new()
            .with("delta_hz", vec![-1.0, 0.0, 1.0])
            .with("im_rho12", vec![0.0, 1.0, -0.5]);
        write_atomic(&csv, &t.to_csv()).unwrap();
        let out = emit_plot(&csv, &PlotSpec::new("delta_hz", &["im_rho12"], "ringing")).unwrap();
        assert_eq!(out, dir.path().join("trace.svg"));
        let svg = std::fs::read_to_string(out).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));

        std::fs::write(&csv, "").unwrap();
        assert!(matches!(
            emit_plot(&csv, &PlotSpec::new("delta_hz", &["im_rho12"], "")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert!(ticks(1.0, 1.0).is_empty());
    }

    #[test]
    fn heatmap_has_one_cell_per_sample() {
        let grid = IntensityGrid {
            xs: vec![-1e-6, 0.0, 1e-6],
            ys: vec![-1e-6, 1e-6],
            values: vec![vec![0.0, 1.0, 0.5], vec![0.2, 0.4, 0.0]],
        };
        let svg = heatmap_svg(&grid, "TEM").unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 6 + 1);
        assert!(svg.contains("rgb(255,255,255)"));
    }
}
