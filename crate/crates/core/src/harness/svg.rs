//! Minimal SVG error plot: sample errors, mean and RN errors, and bound curves
//! on a log-scaled error axis.

use std::fmt::Write as _;
use std::path::Path;

use super::config::ExperimentKind;
use super::experiment::ExperimentOutput;
use crate::error::Result;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Axis {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            (lo, hi) = (lo - 0.5, hi + 0.5);
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, or `None` when not plottable.
    fn frac(&self, v: f64) -> Option<f64> {
        if !v.is_finite() || (self.log && v <= 0.0) {
            return None;
        }
        let v = if self.log { v.log10() } else { v };
        Some((v - self.lo) / (self.hi - self.lo))
    }
}

fn px(ax: &Axis, v: f64) -> Option<f64> {
    ax.frac(v).map(|f| MARGIN + f * (WIDTH - 2.0 * MARGIN))
}

fn py(ay: &Axis, v: f64) -> Option<f64> {
    ay.frac(v).map(|f| HEIGHT - MARGIN - f * (HEIGHT - 2.0 * MARGIN))
}

pub fn render_svg(out: &ExperimentOutput) -> String {
    let horner = out.config.experiment == ExperimentKind::HornerChebyshev;
    let xs: Vec<f64> = out.points.iter().map(|p| if horner { p.x.unwrap_or(f64::NAN) } else { p.size as f64 }).collect();
    let ax = Axis::fit(xs.iter().copied(), !horner);
    let all_y = out.points.iter().flat_map(|p| {
        p.sr_errors.iter().copied().chain([p.rn_error, p.mean_error]).chain(p.bounds.iter().map(|b| b.2))
    });
    let ay = Axis::fit(all_y, true);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    let xlabel = if horner { "x" } else { "log10 n" };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#, WIDTH / 2.0, HEIGHT - 20.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">log10 relative error</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    for (v, y) in [(ay.lo, y0), (ay.hi, y1)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.1}</text>"#, x0 - 4.0);
    }
    for (v, x) in [(ax.lo, x0), (ax.hi, x1)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{v:.3}</text>"#, y0 + 14.0);
    }

    for (p, &xv) in out.points.iter().zip(&xs) {
        let Some(cx) = px(&ax, xv) else { continue };
        for &e in &p.sr_errors {
            if let Some(cy) = py(&ay, e) {
                let _ = writeln!(s, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.5" fill="#999"/>"##);
            }
        }
        if let Some(cy) = py(&ay, p.mean_error) {
            let _ = writeln!(s, r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="none" stroke="#000"/>"##);
        }
        if let Some(cy) = py(&ay, p.rn_error) {
            let _ = writeln!(s, r##"<rect x="{:.2}" y="{:.2}" width="5" height="5" fill="#ff7f0e"/>"##, cx - 2.5, cy - 2.5);
        }
    }

    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (p, &xv) in out.points.iter().zip(&xs) {
        for &(kind, lambda, v) in &p.bounds {
            let name = match lambda {
                Some(l) => format!("{kind} λ={l}"),
                None => kind.to_string(),
            };
            let (Some(cx), Some(cy)) = (px(&ax, xv), py(&ay, v)) else { continue };
            match series.iter_mut().find(|(n, _)| *n == name) {
                Some((_, pts)) => pts.push((cx, cy)),
                None => series.push((name, vec![(cx, cy)])),
            }
        }
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, d.join(" "));
        let ly = MARGIN + 14.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{color}">{name}</text>"#, x1 - 120.0);
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(out: &ExperimentOutput, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(out))?;
    Ok(())
}
