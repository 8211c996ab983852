//! Minimal static SVG plots: polylines and heat maps.

use anyhow::{bail, Result};
use std::path::{Path, PathBuf};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 48.0;

/// Line plot of (x, y) series.
pub fn line_plot(
    out_dir: &Path,
    name: &str,
    title: &str,
    series: &[(f64, f64)],
) -> Result<PathBuf> {
    if series.len() < 2 {
        bail!("nothing to plot");
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in series {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if (x1 - x0).abs() < 1e-300 {
        x1 = x0 + 1.0;
    }
    if (y1 - y0).abs() < 1e-300 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut path = String::new();
    for (i, &(x, y)) in series.iter().enumerate() {
        path.push_str(if i == 0 { "M" } else { "L" });
        path.push_str(&format!("{:.2},{:.2} ", sx(x), sy(y)));
    }
    let svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="24" font-family="monospace" font-size="14" text-anchor="middle">{title}</text>
<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>
<text x="{MARGIN}" y="{h2}" font-family="monospace" font-size="10">{y0:.3e}</text>
<text x="{MARGIN}" y="{m2}" font-family="monospace" font-size="10">{y1:.3e}</text>
<path d="{path}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>
</svg>
"##,
        tx = W / 2.0,
        pw = W - 2.0 * MARGIN,
        ph = H - 2.0 * MARGIN,
        h2 = H - MARGIN + 14.0,
        m2 = MARGIN - 6.0,
    );
    write_svg(out_dir, name, &svg)
}

/// Heat map of a row-major field.
pub fn heat_plot(
    out_dir: &Path,
    name: &str,
    title: &str,
    rows: usize,
    cols: usize,
    values: &[f64],
) -> Result<PathBuf> {
    if values.len() != rows * cols || values.is_empty() {
        bail!("nothing to plot");
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let cw = (W - 2.0 * MARGIN) / cols as f64;
    let ch = (H - 2.0 * MARGIN) / rows as f64;
    let mut cells = String::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = values[r * cols + c];
            let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            let red = (255.0 * t) as u8;
            let blue = (255.0 * (1.0 - t)) as u8;
            cells.push_str(&format!(
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({red},60,{blue})"/>"##,
                MARGIN + c as f64 * cw,
                MARGIN + r as f64 * ch,
                cw + 0.5,
                ch + 0.5,
            ));
        }
    }
    let svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{tx}" y="24" font-family="monospace" font-size="14" text-anchor="middle">{title} [{lo:.2e}, {hi:.2e}]</text>
{cells}
</svg>
"##,
        tx = W / 2.0,
    );
    write_svg(out_dir, name, &svg)
}

fn write_svg(out_dir: &Path, name: &str, svg: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let tmp = out_dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, svg)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}
