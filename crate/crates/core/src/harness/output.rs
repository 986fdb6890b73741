use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::sweep::{CounterexampleRow, SweepRow};
use super::verify::VerifyReport;

pub const SWEEP_HEADER: [&str; 8] = [
    "N",
    "quad_value",
    "quad_err",
    "mc_value",
    "mc_stderr",
    "limit_value",
    "abs_error",
    "wall_ms",
];

/// Shortest decimal that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn to_csv(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in records {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Io("no sweep rows to write".into()));
    }
    to_csv(
        &SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.quad_value),
                num(r.quad_err),
                num(r.mc_value),
                num(r.mc_stderr),
                num(r.limit_value),
                num(r.abs_error),
                num(r.wall_ms),
            ]
        }),
    )
}

pub fn verify_csv(report: &VerifyReport) -> Result<String> {
    to_csv(
        &["name", "passed", "worst_violation", "tolerance", "trials"],
        report.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                c.passed.to_string(),
                num(c.worst_violation),
                num(c.tolerance),
                c.trials.to_string(),
            ]
        }),
    )
}

pub fn counterexample_csv(rows: &[CounterexampleRow]) -> Result<String> {
    to_csv(
        &["z", "R", "value"],
        rows.iter()
            .map(|r| vec![num(r.z), num(r.radius), num(r.value)]),
    )
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    write(path, &sweep_csv(rows)?)
}

pub fn write_verify_csv(report: &VerifyReport, path: &Path) -> Result<()> {
    write(path, &verify_csv(report)?)
}

pub fn write_counterexample_csv(rows: &[CounterexampleRow], path: &Path) -> Result<()> {
    write(path, &counterexample_csv(rows)?)
}

/// Log–log chart of `|quad − limit|` (and `|mc − limit|` when present)
/// against `N`, as a self-contained SVG document.
pub fn sweep_svg(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Io("no sweep rows to plot".into()));
    }
    const FLOOR: f64 = 1e-17;
    let (w, h, pad) = (640.0, 420.0, 60.0);

    let mut series: Vec<(&str, &str, Vec<(f64, f64)>)> = vec![(
        "quadrature",
        "#1f77b4",
        rows.iter()
            .map(|r| (r.n as f64, r.abs_error.max(FLOOR)))
            .collect(),
    )];
    if rows.iter().all(|r| r.mc_value.is_finite()) {
        series.push((
            "monte carlo",
            "#d62728",
            rows.iter()
                .map(|r| (r.n as f64, (r.mc_value - r.limit_value).abs().max(FLOOR)))
                .collect(),
        ));
    }

    let xs = || series.iter().flat_map(|s| s.2.iter().map(|p| p.0.log10()));
    let ys = || series.iter().flat_map(|s| s.2.iter().map(|p| p.1.log10()));
    let (mut x0, mut x1) = (xs().fold(f64::MAX, f64::min), xs().fold(f64::MIN, f64::max));
    let (mut y0, mut y1) = (ys().fold(f64::MAX, f64::min).floor(), ys().fold(f64::MIN, f64::max).ceil());
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1.0 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let px = |x: f64| pad + (x.log10() - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (y.log10() - y0) / (y1 - y0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>
<line x1="{pad}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{b}" stroke="black"/>
<text x="{cx}" y="{lx}" text-anchor="middle" font-family="sans-serif" font-size="13">N (log scale)</text>
<text x="16" y="{cy}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {cy})">absolute error (log scale)</text>"#,
        b = h - pad,
        r = w - pad,
        cx = w / 2.0,
        cy = h / 2.0,
        lx = h - 15.0,
    );
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(e));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">1e{e}</text>"#,
            pad - 4.0,
            y + 3.0
        );
    }
    for r in rows {
        let x = px(r.n as f64);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{}</text>"#,
            h - pad + 14.0,
            r.n
        );
    }
    for (i, (label, color, pts)) in series.iter().enumerate() {
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{label}</text>"#,
            w - pad - 100.0,
            pad + 16.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_sweep_svg(rows: &[SweepRow], path: &Path) -> Result<()> {
    write(path, &sweep_svg(rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(n: usize, err: f64) -> SweepRow {
        SweepRow {
            n,
            quad_value: 0.5 + err,
            quad_err: 1e-14,
            mc_value: 0.501,
            mc_stderr: 1e-3,
            limit_value: 0.5,
            abs_error: err,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let text = sweep_csv(&[row(32, 1e-2), row(64, 5e-3), row(128, 2.5e-3)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(
            lines[0],
            "N,quad_value,quad_err,mc_value,mc_stderr,limit_value,abs_error,wall_ms"
        );
    }

    #[test]
    fn csv_values_round_trip() {
        let r = row(32, 1.0 / 3.0);
        let text = sweep_csv(&[r]).unwrap();
        let fields: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[1], r.quad_value);
        assert_eq!(fields[6], r.abs_error);
    }

    #[test]
    fn empty_rows_are_an_error() {
        assert!(sweep_csv(&[]).is_err());
        assert!(sweep_svg(&[]).is_err());
    }

    #[test]
    fn svg_has_one_polyline_per_series() {
        let svg = sweep_svg(&[row(32, 1e-2), row(64, 5e-3), row(128, 0.0)]).unwrap();
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
