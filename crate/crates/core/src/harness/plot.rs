//! SVG learning curves and bar charts rendered from sweep CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::CurvePoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(
        out,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn legend(out: &mut String, labels: &[&str]) {
    out.push_str("<g class=\"legend\">\n");
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
    out.push_str("</g>\n");
}

/// Mean lines with a shaded one-standard-error band per series, coverage on
/// a fixed [0, 1] axis.
pub fn render_curves(title: &str, series: &[Series]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max_step = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.step))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let sx = |step: u64| LEFT + plot_w * step as f64 / max_step;
    let sy = |v: f64| TOP + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.2}</text>",
            LEFT - 6.0,
            sy(v) + 4.0
        );
        let step = (max_step * v).round() as u64;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{step}</text>",
            sx(step),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">environment steps</text>",
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, "<g class=\"series\">");
        if s.points.len() == 1 {
            let p = s.points[0];
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{colour}\"/>",
                sx(p.step),
                sy(p.mean)
            );
        } else if s.points.len() > 1 {
            let upper = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.step), sy(p.mean + p.stderr)));
            let lower = s
                .points
                .iter()
                .rev()
                .map(|p| format!("{:.2},{:.2}", sx(p.step), sy(p.mean - p.stderr)));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                out,
                "<polygon points=\"{}\" fill=\"{colour}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
                band.join(" ")
            );
            let line: Vec<String> = s
                .points
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.step), sy(p.mean)))
                .collect();
            let _ = writeln!(
                out,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"/>",
                line.join(" ")
            );
        }
        out.push_str("</g>\n");
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// One bar per entry with a one-standard-error whisker.
pub fn render_bars(title: &str, bars: &[(String, f64, f64)]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let max = bars
        .iter()
        .map(|(_, m, se)| m + se)
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let sy = |v: f64| TOP + plot_h * (1.0 - (v / max).clamp(0.0, 1.0));
    let slot = plot_w / bars.len().max(1) as f64;

    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{max:.0}</text>",
        LEFT - 6.0,
        TOP + 4.0
    );
    for (i, (_, mean, se)) in bars.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let x = LEFT + slot * i as f64 + slot * 0.15;
        let w = slot * 0.7;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"{w:.2}\" height=\"{:.2}\" fill=\"{colour}\"><title>{mean:.1} ± {se:.1}</title></rect>",
            sy(*mean),
            TOP + plot_h - sy(*mean)
        );
        let cx = x + w / 2.0;
        let _ = writeln!(
            out,
            "<line x1=\"{cx:.2}\" y1=\"{:.2}\" x2=\"{cx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            sy(mean + se),
            sy(mean - se)
        );
    }
    let labels: Vec<&str> = bars.iter().map(|(l, _, _)| l.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

fn parse_err(path: &Path, line: usize, msg: &str) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.to_string(),
    }
}

/// Reads `series,step,mean,stderr` rows, keeping series in first-seen order.
fn read_aggregate(path: &Path) -> Result<Vec<Series>> {
    let text = fs::read_to_string(path)?;
    let mut series: Vec<Series> = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(parse_err(path, n + 1, "expected 4 columns"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(path, n + 1, "bad number"))
        };
        let point = CurvePoint {
            step: cols[1]
                .parse()
                .map_err(|_| parse_err(path, n + 1, "bad step"))?,
            mean: num(cols[2])?,
            stderr: num(cols[3])?,
        };
        match series.iter_mut().find(|s| s.label == cols[0]) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label: cols[0].to_string(),
                points: vec![point],
            }),
        }
    }
    Ok(series)
}

/// `(metric, [(series, mean, stderr)])`.
type Totals = Vec<(String, Vec<(String, f64, f64)>)>;

/// Reads `series,metric,mean,stderr` rows grouped by metric.
fn read_totals(path: &Path) -> Result<Totals> {
    let text = fs::read_to_string(path)?;
    let mut metrics: Totals = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(parse_err(path, n + 1, "expected 4 columns"));
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| parse_err(path, n + 1, "bad number"))
        };
        let bar = (cols[0].to_string(), num(cols[2])?, num(cols[3])?);
        match metrics.iter_mut().find(|(m, _)| m == cols[1]) {
            Some((_, bars)) => bars.push(bar),
            None => metrics.push((cols[1].to_string(), vec![bar])),
        }
    }
    Ok(metrics)
}

/// Renders `curves.svg` from `dir/aggregate.csv` and, if `dir/totals.csv`
/// exists, one `totals_<metric>.svg` bar chart per metric. Returns the files
/// written.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let title = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut written = Vec::new();
    let series = read_aggregate(&dir.join("aggregate.csv"))?;
    let path = dir.join("curves.svg");
    fs::write(&path, render_curves(&title, &series))?;
    written.push(path);

    let totals = dir.join("totals.csv");
    if totals.exists() {
        for (metric, bars) in read_totals(&totals)? {
            let path = dir.join(format!("totals_{metric}.svg"));
            fs::write(&path, render_bars(&format!("{title}: {metric}"), &bars))?;
            written.push(path);
        }
    }
    Ok(written)
}
