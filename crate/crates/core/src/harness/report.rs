//! CSV tables and static SVG plots for sweep reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{CellSummary, SweepReport};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "eta,error_rate,mean_ratio,ci_low,ci_high,n_runs,audit_failures";
pub const RUNS_HEADER: &str =
    "eta,eta_used,error_rate,repetition,instance_seed,prediction_seed,algo,opt,integral_opt,prediction_value,prediction_feasible,perturbed_fraction,ratio,consistency_bound,robustness_bound,passed,failed_checks";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            "both" => Ok(Self::Both),
            _ => Err(Error::invalid(format!("unknown format `{s}`"))),
        }
    }

    fn csv(self) -> bool {
        matches!(self, Self::Csv | Self::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Self::Svg | Self::Both)
    }
}

/// One row per cell.
pub fn summary_csv(report: &SweepReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for c in &report.cells {
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{},{}",
            c.eta,
            c.error_rate,
            c.mean_ratio,
            c.ci_low(),
            c.ci_high(),
            c.n_runs,
            c.audit_failures
        );
    }
    out
}

/// One row per run.
pub fn runs_csv(report: &SweepReport) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in &report.runs {
        let failed: Vec<&str> = r.failed_checks().map(|c| c.name).collect();
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.eta,
            r.eta_used,
            r.error_rate,
            r.repetition,
            r.instance_seed,
            r.prediction_seed,
            r.algo,
            r.opt,
            r.integral_value,
            r.prediction_value,
            r.prediction_feasible,
            r.perturbed_fraction,
            r.ratio,
            r.consistency_bound,
            r.robustness_bound,
            r.passed(),
            failed.join(";")
        );
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn for_cells<'a>(cells: impl Iterator<Item = &'a CellSummary>) -> Self {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in cells {
            lo = lo.min(c.ci_low());
            if c.mean_robustness_bound.is_finite() {
                lo = lo.min(c.mean_robustness_bound);
            }
            hi = hi.max(c.ci_high());
        }
        if !lo.is_finite() {
            lo = 0.0;
            hi = 1.0;
        }
        let lo = ((lo.max(0.0) - 0.02) * 10.0).floor() / 10.0;
        let hi = ((hi.min(1.05) + 0.02) * 10.0).ceil() / 10.0;
        Self {
            y_lo: lo.max(0.0),
            y_hi: hi.max(lo + 0.1),
        }
    }

    fn x(&self, eta: f64) -> f64 {
        LEFT + eta * (W - LEFT - RIGHT)
    }

    fn y(&self, r: f64) -> f64 {
        let t = (r - self.y_lo) / (self.y_hi - self.y_lo);
        H - BOTTOM - t.clamp(-0.05, 1.05) * (H - TOP - BOTTOM)
    }
}

fn axes(out: &mut String, f: &Frame, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#
    );
    for k in 0..=10 {
        let eta = k as f64 / 10.0;
        let x = f.x(eta);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            y0 + 4.0
        );
        if k % 2 == 0 {
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{eta:.1}</text>"#,
                y0 + 18.0
            );
        }
    }
    let steps = ((f.y_hi - f.y_lo) / 0.1).round() as usize;
    for k in 0..=steps {
        let r = f.y_lo + k as f64 * 0.1;
        let y = f.y(r);
        let _ = writeln!(
            out,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e0e0e0"/>"##
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{r:.1}</text>"#,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">eta</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">competitive ratio</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
}

fn series(out: &mut String, f: &Frame, cells: &[&CellSummary], color: &str, band: bool) {
    if cells.is_empty() {
        return;
    }
    if band {
        let mut d = String::new();
        for (k, c) in cells.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2} {:.2} ",
                if k == 0 { "M" } else { "L" },
                f.x(c.eta),
                f.y(c.ci_high())
            );
        }
        for c in cells.iter().rev() {
            let _ = write!(d, "L{:.2} {:.2} ", f.x(c.eta), f.y(c.ci_low()));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            d
        );
    }
    let pts: Vec<String> = cells
        .iter()
        .map(|c| format!("{:.2},{:.2}", f.x(c.eta), f.y(c.mean_ratio)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
        pts.join(" ")
    );
    for c in cells {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
            f.x(c.eta),
            f.y(c.mean_ratio)
        );
    }
}

fn bound_curve(out: &mut String, f: &Frame, cells: &[&CellSummary]) {
    let pts: Vec<String> = cells
        .iter()
        .filter(|c| c.mean_robustness_bound.is_finite())
        .map(|c| format!("{:.2},{:.2}", f.x(c.eta), f.y(c.mean_robustness_bound)))
        .collect();
    if !pts.is_empty() {
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-dasharray="6 4" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
    }
}

fn legend(out: &mut String, entries: &[(String, &str, bool)]) {
    let x = W - RIGHT + 14.0;
    for (k, (label, color, dashed)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 22.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            x + 28.0,
            y + 4.0,
            escape(label)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cells_for(report: &SweepReport, err: f64) -> Vec<&CellSummary> {
    let mut v: Vec<&CellSummary> = report.cells.iter().filter(|c| c.error_rate == err).collect();
    v.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    v
}

/// Plot of one error-rate series: mean ratio, CI band and the robustness bound.
pub fn series_svg(report: &SweepReport, error_rate: f64) -> String {
    let cells = cells_for(report, error_rate);
    let f = Frame::for_cells(cells.iter().copied());
    let mut out = String::new();
    axes(
        &mut out,
        &f,
        &format!("{}, error rate {error_rate}", report.algorithm.name()),
    );
    series(&mut out, &f, &cells, COLORS[0], true);
    bound_curve(&mut out, &f, &cells);
    legend(
        &mut out,
        &[
            (format!("error {error_rate}"), COLORS[0], false),
            ("bound".to_string(), "black", true),
        ],
    );
    out.push_str("</svg>\n");
    out
}

/// All error-rate series in one plot.
pub fn combined_svg(report: &SweepReport) -> String {
    let rates = report.error_rates();
    let f = Frame::for_cells(report.cells.iter());
    let mut out = String::new();
    axes(&mut out, &f, report.algorithm.name());
    let mut entries = Vec::new();
    for (k, &err) in rates.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        series(&mut out, &f, &cells_for(report, err), color, true);
        entries.push((format!("error {err}"), color, false));
    }
    if let Some(&first) = rates
        .first()
        .filter(|_| report.cells.iter().any(|c| c.mean_robustness_bound.is_finite()))
    {
        bound_curve(&mut out, &f, &cells_for(report, first));
        entries.push(("bound".to_string(), "black", true));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Writes `summary.csv` and `runs.csv` and/or `ratio_all.svg` plus one
/// `ratio_err<k>.svg` per error rate into `dir`. Returns the written paths.
pub fn emit_report(report: &SweepReport, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    if report.cells.is_empty() {
        return Err(Error::invalid("report has no cells"));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    if format.csv() {
        put("summary.csv".into(), summary_csv(report))?;
        put("runs.csv".into(), runs_csv(report))?;
    }
    if format.svg() {
        put("ratio_all.svg".into(), combined_svg(report))?;
        for (k, err) in report.error_rates().into_iter().enumerate() {
            put(format!("ratio_err{k}.svg"), series_svg(report, err))?;
        }
    }
    Ok(written)
}

/// Parses a summary CSV back into cells (robustness bound and extremes are
/// not stored and come back as NaN).
pub fn parse_summary_csv(text: &str) -> Result<Vec<CellSummary>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(Error::parse(1, "missing summary header")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return Err(Error::parse(n + 1, format!("expected 7 fields, got {}", f.len())));
            }
            let num = |k: usize| -> Result<f64> {
                f[k].trim()
                    .parse()
                    .map_err(|_| Error::parse(n + 1, format!("bad number `{}`", f[k])))
            };
            let int = |k: usize| -> Result<usize> {
                f[k].trim()
                    .parse()
                    .map_err(|_| Error::parse(n + 1, format!("bad count `{}`", f[k])))
            };
            let mean = num(2)?;
            Ok(CellSummary {
                eta: num(0)?,
                error_rate: num(1)?,
                mean_ratio: mean,
                ci_half_width: ((num(4)? - num(3)?) / 2.0).max(0.0),
                n_runs: int(5)?,
                audit_failures: int(6)?,
                min_ratio: f64::NAN,
                max_ratio: f64::NAN,
                mean_robustness_bound: f64::NAN,
            })
        })
        .collect()
}
