//! Output emission: CSV tables with headers, TOML summaries, run manifests,
//! and a minimal static SVG line chart. All decimals are written with 17
//! significant digits and all content is deterministic, so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimator::FitResult;
use crate::family::FamilyKind;
use crate::sim::{FailureReport, SimReport};

/// 17 significant digits, round-trippable to the same f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Write a CSV file with a header row.
pub fn write_csv<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path.as_ref(), text)?;
    Ok(())
}

/// Run manifest enabling exact replay: subcommand, config hash, seed,
/// version. No timestamps; reruns must be byte-identical.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    config_bytes: Option<&[u8]>,
    seed: Option<u64>,
) -> Result<()> {
    let mut text = String::new();
    writeln!(text, "command = {command:?}").unwrap();
    match config_bytes {
        Some(bytes) => {
            let mut hasher = Sha256::new();
            hasher.update(bytes);
            let digest = hasher.finalize();
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            writeln!(text, "config_sha256 = \"{hex}\"").unwrap();
        }
        None => writeln!(text, "config_sha256 = \"\"").unwrap(),
    }
    match seed {
        Some(s) => writeln!(text, "seed = \"{s}\"").unwrap(),
        None => writeln!(text, "seed = \"\"").unwrap(),
    }
    writeln!(text, "version = {:?}", env!("CARGO_PKG_VERSION")).unwrap();
    std::fs::write(out_dir.join("manifest.toml"), text)?;
    Ok(())
}

pub fn ensure_out_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

fn kind_label(kind: &FamilyKind) -> String {
    match kind {
        FamilyKind::Normal => "normal".into(),
        FamilyKind::StudentT { dof } => format!("student_t({dof})"),
        FamilyKind::Uniform => "uniform".into(),
        FamilyKind::Custom { name, .. } => format!("custom({name})"),
    }
}

/// Fit result as a flat key-value record plus a per-component table.
pub fn fit_result_toml(result: &FitResult) -> String {
    let mut text = String::new();
    writeln!(text, "loglik = \"{}\"", fmt_f64(result.loglik)).unwrap();
    writeln!(text, "iterations = \"{}\"", result.iterations).unwrap();
    writeln!(text, "converged = \"{}\"", result.converged).unwrap();
    writeln!(text, "n = \"{}\"", result.n).unwrap();
    writeln!(text, "floor = \"{}\"", fmt_f64(result.floor)).unwrap();
    writeln!(text, "log_floor = \"{}\"", fmt_f64(result.log_floor)).unwrap();
    writeln!(
        text,
        "floor_active_count = \"{}\"",
        result.floor_active_count()
    )
    .unwrap();
    for (c, active) in result
        .theta_hat
        .components()
        .iter()
        .zip(&result.floor_active)
    {
        writeln!(text).unwrap();
        writeln!(text, "[[component]]").unwrap();
        writeln!(text, "alpha = \"{}\"", fmt_f64(c.alpha)).unwrap();
        writeln!(text, "kind = \"{}\"", kind_label(c.family.kind())).unwrap();
        writeln!(text, "mu = \"{}\"", fmt_f64(c.mu)).unwrap();
        writeln!(text, "sigma = \"{}\"", fmt_f64(c.scale.value())).unwrap();
        writeln!(text, "floor_active = \"{active}\"").unwrap();
    }
    text
}

/// Replication rows. The in-memory rows carry wall-clock timings; those are
/// not serialized, keeping identical runs byte-identical.
pub fn sim_report_csv(report: &SimReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "schedule",
        "n",
        "rep",
        "seed",
        "param_dist",
        "l1_dist",
        "loglik_hat",
        "loglik_true",
        "floor_active_count",
    ];
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.schedule.clone(),
                r.n.to_string(),
                r.rep.to_string(),
                r.stream_seed.to_string(),
                fmt_f64(r.param_dist),
                fmt_f64(r.l1_dist),
                fmt_f64(r.loglik_hat),
                fmt_f64(r.loglik_true),
                r.floor_active_count.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

pub fn sim_summary_toml(report: &SimReport) -> String {
    let mut text = String::new();
    writeln!(text, "failed_reps = \"{}\"", report.failed_reps).unwrap();
    for s in &report.summary {
        writeln!(text).unwrap();
        writeln!(text, "[[summary]]").unwrap();
        writeln!(text, "schedule = {:?}", s.schedule).unwrap();
        writeln!(text, "n = \"{}\"", s.n).unwrap();
        writeln!(text, "reps = \"{}\"", s.reps).unwrap();
        writeln!(
            text,
            "median_param_dist = \"{}\"",
            fmt_f64(s.median_param_dist)
        )
        .unwrap();
        writeln!(text, "median_l1_dist = \"{}\"", fmt_f64(s.median_l1_dist)).unwrap();
    }
    text
}

pub fn failure_report_csv(report: &FailureReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let header = vec![
        "schedule",
        "n",
        "log_floor",
        "loglik_spike",
        "loglik_fit",
        "gain",
        "spike_superior",
        "spike_param_dist",
    ];
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.schedule.clone(),
                r.n.to_string(),
                fmt_f64(r.log_floor),
                fmt_f64(r.loglik_spike),
                fmt_f64(r.loglik_fit),
                fmt_f64(r.gain),
                r.spike_superior.to_string(),
                fmt_f64(r.spike_param_dist),
            ]
        })
        .collect();
    (header, rows)
}

/// Minimal static SVG line chart: one polyline per series over log-x,
/// linear-y, with axis labels. Deterministic output.
pub fn svg_line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const ML: f64 = 70.0;
    const MR: f64 = 20.0;
    const MT: f64 = 40.0;
    const MB: f64 = 50.0;
    const COLORS: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];

    let points: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().copied())
        .collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (0.0f64, f64::NEG_INFINITY);
    for &(x, y) in &points {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_hi = y_hi.max(y);
        y_lo = y_lo.min(y);
    }
    if !x_lo.is_finite() || x_lo <= 0.0 {
        x_lo = 1.0;
    }
    if !x_hi.is_finite() || x_hi <= x_lo {
        x_hi = x_lo * 10.0;
    }
    if !y_hi.is_finite() || y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let tx = |x: f64| ML + (x.ln() - x_lo.ln()) / (x_hi.ln() - x_lo.ln()) * (W - ML - MR);
    let ty = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut svg = String::new();
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" font-family=\"monospace\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{title}</text>",
        W / 2.0
    )
    .unwrap();
    // Axes.
    writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    )
    .unwrap();
    writeln!(
        svg,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>",
        (ML + W - MR) / 2.0,
        H - 12.0
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{y_label}</text>",
        (MT + H - MB) / 2.0,
        (MT + H - MB) / 2.0
    )
    .unwrap();
    // X ticks at the data points of the first series, y ticks at quartiles.
    if let Some((_, pts)) = series.first() {
        for &(x, _) in pts {
            writeln!(
                svg,
                "<line x1=\"{0:.2}\" y1=\"{1}\" x2=\"{0:.2}\" y2=\"{2}\" stroke=\"black\"/>",
                tx(x),
                H - MB,
                H - MB + 5.0
            )
            .unwrap();
            writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">{x}</text>",
                tx(x),
                H - MB + 18.0
            )
            .unwrap();
        }
    }
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{1:.2}\" x2=\"{ML}\" y2=\"{1:.2}\" stroke=\"black\"/>",
            ML - 5.0,
            ty(y)
        )
        .unwrap();
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{y:.3}</text>",
            ML - 8.0,
            ty(y) + 4.0
        )
        .unwrap();
    }
    for (si, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[si % COLORS.len()];
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", tx(x), ty(y)))
            .collect();
        writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        )
        .unwrap();
        for &(x, y) in pts {
            writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                tx(x),
                ty(y)
            )
            .unwrap();
        }
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{name}</text>",
            W - MR - 150.0,
            MT + 16.0 * si as f64
        )
        .unwrap();
    }
    writeln!(svg, "</svg>").unwrap();
    svg
}

/// Convenience: write string content to `out_dir/name`.
pub fn write_text(out_dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::write(out_dir.join(name), content).map_err(Error::Io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        let s = fmt_f64(4.5399929762484854e-5);
        assert_eq!(s, "4.5399929762484854e-5");
        assert_eq!(s.parse::<f64>().unwrap(), 4.5399929762484854e-5);
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn svg_is_deterministic() {
        let series = vec![(
            "median".to_string(),
            vec![(100.0, 0.5), (400.0, 0.3), (1600.0, 0.2)],
        )];
        let a = svg_line_chart("t", "n", "dist", &series);
        let b = svg_line_chart("t", "n", "dist", &series);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("polyline"));
    }
}
