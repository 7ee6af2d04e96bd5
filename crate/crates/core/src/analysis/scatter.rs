use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{Domain, Label};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub domain: Domain,
    pub label: Label,
}

fn domain_name(d: Domain) -> &'static str {
    match d {
        Domain::Real => "real",
        Domain::Synthetic => "synthetic",
    }
}

/// Tab-separated `x, y, domain, label`, one row per point.
pub fn render_table(points: &[ScatterPoint]) -> String {
    let mut out = String::from("x\ty\tdomain\tlabel\n");
    for p in points {
        let _ = writeln!(out, "{:.6}\t{:.6}\t{}\t{}", p.x, p.y, domain_name(p.domain), p.label.as_str());
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PAD: f64 = 40.0;

/// Minimal standalone SVG: one circle per point, colored by domain.
pub fn render_svg(points: &[ScatterPoint], title: &str) -> String {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    if points.is_empty() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let sx = (WIDTH - 2.0 * PAD) / span(x0, x1);
    let sy = (HEIGHT - 2.0 * PAD) / span(y0, y1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        WIDTH - 2.0 * PAD,
        HEIGHT - 2.0 * PAD
    );
    for p in points {
        let cx = PAD + (p.x - x0) * sx;
        let cy = HEIGHT - PAD - (p.y - y0) * sy;
        let color = match p.domain {
            Domain::Real => "#1f77b4",
            Domain::Synthetic => "#d62728",
        };
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"2\" fill=\"{color}\" fill-opacity=\"0.6\"><title>{} {}</title></circle>",
            domain_name(p.domain),
            p.label.as_str()
        );
    }
    for (i, (name, color)) in [("real", "#1f77b4"), ("synthetic", "#d62728")].iter().enumerate() {
        let y = PAD + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{y}\" r=\"4\" fill=\"{color}\"/><text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{name}</text>",
            WIDTH - PAD - 80.0,
            WIDTH - PAD - 70.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<prefix>.table` and `<prefix>.svg`.
pub fn write_scatter(points: &[ScatterPoint], prefix: &Path, title: &str) -> Result<()> {
    for (ext, body) in [("table", render_table(points)), ("svg", render_svg(points, title))] {
        let path = prefix.with_extension(ext);
        let path = if prefix.extension().is_some() {
            let mut s = prefix.as_os_str().to_owned();
            s.push(".");
            s.push(ext);
            s.into()
        } else {
            path
        };
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
