//! Minimal SVG scatter plots of two-objective projections.

use std::fmt::Write as _;
use std::path::Path;

use crate::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Distinct hue per run.
fn color(run: usize) -> String {
    let hue = (run as f64 * 137.508) % 360.0;
    format!("hsl({hue:.1},70%,45%)")
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Builds the SVG text for the projection `(i, j)` (0-based objectives).
pub fn scatter_svg(fronts: &[(usize, Vec<Vec<f64>>)], (i, j): (usize, usize)) -> Result<String> {
    if fronts.iter().all(|(_, f)| f.is_empty()) {
        return Err(CliError::Invalid("nothing to plot".into()));
    }
    if fronts.iter().flat_map(|(_, f)| f).any(|p| p.len() <= i.max(j)) {
        return Err(CliError::Invalid(format!("projection ({}, {}) out of range", i + 1, j + 1)));
    }
    let points = || fronts.iter().flat_map(|(_, f)| f);
    let (x0, x1) = bounds(points().map(|p| p[i]));
    let (y0, y1) = bounds(points().map(|p| p[j]));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for (label, x, y, anchor) in [
        (format!("{x0:.3}"), MARGIN, HEIGHT - MARGIN + 16.0, "start"),
        (format!("{x1:.3}"), WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, "end"),
        (format!("{y0:.3}"), MARGIN - 4.0, HEIGHT - MARGIN, "end"),
        (format!("{y1:.3}"), MARGIN - 4.0, MARGIN + 10.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" font-size="11" text-anchor="{anchor}">{label}</text>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">f{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        i + 1
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {})">f{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        j + 1
    );
    for (run, front) in fronts {
        let _ = writeln!(s, r#"<g fill="{}" data-run="{run}">"#, color(*run));
        for p in front {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(p[i]), sy(p[j]));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_scatter_svg(fronts: &[(usize, Vec<Vec<f64>>)], projection: (usize, usize), path: &Path) -> Result<()> {
    let svg = scatter_svg(fronts, projection)?;
    std::fs::write(path, svg).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
