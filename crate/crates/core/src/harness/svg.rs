//! Self-contained SVG heatmaps: one rect per cell, overlay polylines and a
//! legend.

use std::fmt::Write as _;
use std::path::Path;

use super::phase::{CellStatus, Engine, GridResult};
use crate::error::{Error, Result};

const CELL: f64 = 24.0;
const MARGIN: f64 = 60.0;
const LEGEND: f64 = 170.0;

fn lerp_colour(t: f64) -> String {
    // white to dark blue
    let t = t.clamp(0.0, 1.0);
    let c = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(247.0, 8.0), c(251.0, 48.0), c(255.0, 107.0))
}

fn cell_colour(result: &GridResult, i: usize, j: usize) -> String {
    let c = result.cell(i, j);
    match c.status {
        CellStatus::Failed => return "#d62728".into(),
        CellStatus::Disagreement => return "#ff7f0e".into(),
        CellStatus::Ok => {}
    }
    match result.engine {
        Engine::Criterion => match c.verdict.as_deref() {
            Some("yes") => "#08306b".into(),
            Some("no") => "#f7fbff".into(),
            _ => "#9e9e9e".into(),
        },
        _ => lerp_colour(c.value.unwrap_or(0.0)),
    }
}

fn axis_span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Renders the grid with γ to the right and β upwards.
pub fn render_heatmap(result: &GridResult) -> Result<String> {
    let (ng, nb) = (result.gammas.len(), result.betas.len());
    if ng == 0 || nb == 0 || result.cells.len() != ng * nb {
        return Err(Error::Empty("grid result"));
    }
    let w = MARGIN * 2.0 + CELL * ng as f64 + LEGEND;
    let h = MARGIN * 2.0 + CELL * nb as f64;
    let (g0, g1) = axis_span(&result.gammas);
    let (b0, b1) = axis_span(&result.betas);
    // cell centres sit at the grid values
    let gx = |g: f64| {
        let t = if g1 > g0 { (g - g0) / (g1 - g0) } else { 0.0 };
        MARGIN + CELL * (0.5 + t * (ng as f64 - 1.0))
    };
    let by = |b: f64| {
        let t = if b1 > b0 { (b - b0) / (b1 - b0) } else { 0.0 };
        MARGIN + CELL * nb as f64 - CELL * (0.5 + t * (nb as f64 - 1.0))
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for i in 0..ng {
        for j in 0..nb {
            let x = MARGIN + CELL * i as f64;
            let y = MARGIN + CELL * (nb - 1 - j) as f64;
            let c = result.cell(i, j);
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{}" stroke="#dddddd" stroke-width="0.5"><title>gamma={} beta={} {}</title></rect>"##,
                cell_colour(result, i, j),
                c.gamma,
                c.beta,
                c.verdict.clone().or(c.value.map(|v| format!("{v:.4}"))).unwrap_or_default()
            );
        }
    }
    let palette = ["#e41a1c", "#4daf4a", "#984ea3", "#ff7f00"];
    for (k, o) in result.overlays.iter().enumerate() {
        if o.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = o
            .points
            .iter()
            .filter(|(_, b)| *b >= b0.min(0.0) && b.is_finite())
            .map(|&(g, b)| format!("{:.3},{:.3}", gx(g), by(b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="overlay" data-name="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            o.name,
            pts.join(" "),
            palette[k % palette.len()]
        );
    }
    let bottom = MARGIN + CELL * nb as f64;
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">gamma</text>"#, MARGIN + CELL * ng as f64 / 2.0, bottom + 35.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">beta</text>"#, MARGIN + CELL * nb as f64 / 2.0, MARGIN + CELL * nb as f64 / 2.0);
    for (v, x) in [(g0, gx(g0)), (g1, gx(g1))] {
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{v:.3}</text>"#, bottom + 15.0);
    }
    for (v, y) in [(b0, by(b0)), (b1, by(b1))] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3}</text>"#, MARGIN - 5.0);
    }
    // legend
    let lx = MARGIN + CELL * ng as f64 + 20.0;
    let mut ly = MARGIN;
    let _ = writeln!(s, r#"<g class="legend">"#);
    let entries: Vec<(String, String)> = match result.engine {
        Engine::Criterion => vec![
            ("#08306b".into(), "giant".into()),
            ("#f7fbff".into(), "no giant".into()),
            ("#9e9e9e".into(), "undetermined".into()),
        ],
        Engine::Survival => vec![(lerp_colour(0.0), "p = 0".into()), (lerp_colour(1.0), "p = 1".into())],
        Engine::Network => vec![(lerp_colour(0.0), "largest/N = 0".into()), (lerp_colour(1.0), "largest/N = 1".into())],
    };
    for (colour, text) in entries.into_iter().chain([
        ("#d62728".to_string(), "failed".to_string()),
        ("#ff7f0e".to_string(), "disagreement".to_string()),
    ]) {
        let _ = writeln!(s, r##"<rect x="{lx}" y="{ly}" width="12" height="12" fill="{colour}" stroke="#555555" stroke-width="0.5"/><text x="{}" y="{}">{text}</text>"##, lx + 18.0, ly + 10.0);
        ly += 18.0;
    }
    for (k, o) in result.overlays.iter().enumerate() {
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#, ly + 6.0, lx + 12.0, ly + 6.0, palette[k % palette.len()], lx + 18.0, ly + 10.0, o.name);
        ly += 18.0;
    }
    let _ = writeln!(s, "</g>\n</svg>");
    Ok(s)
}

pub fn emit_heatmap(result: &GridResult, path: &Path) -> Result<()> {
    let svg = render_heatmap(result)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{linear_boundary, run_phase_diagram, Axis, Family, PhaseConfig};

    #[test]
    fn two_by_two() {
        let cfg = PhaseConfig {
            family: Family::Linear,
            gamma: Axis::Values(vec![0.1, 0.3]),
            beta: Axis::Values(vec![0.1, 0.5]),
            ..Default::default()
        };
        let r = run_phase_diagram(&cfg, 0, 1).unwrap();
        let svg = render_heatmap(&r).unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 4);
        assert!(svg.contains(r#"class="legend""#));
        assert!(svg.contains(r#"class="overlay""#));
        let b = linear_boundary(&[0.1]).points[0].1;
        assert!((b - 0.16 / 0.9).abs() < 1e-15);
    }
}
