//! SVG renderings of fingerprints, cumulative curves, and displacement
//! curves with acceptance bands.
//!
//! Rendering never feeds back into the statistics: the 3x3 box smoothing
//! used for contour extraction exists only here.

use std::fmt::Write as _;

use crate::fingerprint::{CumulativeCurve, Fingerprint};
use crate::rigging::{AcceptanceRegion, DisplacementCurve};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Heatmap,
    Contour,
    Line,
}

/// What can be rendered.
#[derive(Debug, Clone)]
pub enum PlotArtifact {
    Fingerprint(Fingerprint),
    /// Labeled station groups rendered as separate contour line sets.
    FingerprintGroups(Vec<(String, Fingerprint)>),
    CumulativeCurve(CumulativeCurve),
    Displacement {
        curve: DisplacementCurve,
        region: Option<AcceptanceRegion>,
    },
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

const GROUP_COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Data-to-pixel mapping for one plot area.
struct Frame {
    range_x: (f64, f64),
    range_y: (f64, f64),
}

impl Frame {
    fn new(range_x: (f64, f64), range_y: (f64, f64)) -> Self {
        let pad = |r: (f64, f64)| {
            if r.0 < r.1 {
                r
            } else {
                (r.0 - 0.5, r.1 + 0.5)
            }
        };
        Self {
            range_x: pad(range_x),
            range_y: pad(range_y),
        }
    }

    fn sx(&self, x: f64) -> f64 {
        let t = (x - self.range_x.0) / (self.range_x.1 - self.range_x.0);
        MARGIN_LEFT + t * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let t = (y - self.range_y.0) / (self.range_y.1 - self.range_y.0);
        HEIGHT - MARGIN_BOTTOM - t * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let x0 = frame.sx(frame.range_x.0);
    let x1 = frame.sx(frame.range_x.1);
    let y0 = frame.sy(frame.range_y.0);
    let y1 = frame.sy(frame.range_y.1);
    let _ = writeln!(out, r##"<g class="axes" stroke="#333" fill="none">"##);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="labels" font-size="12" fill="#333">"##);
    let _ = writeln!(
        out,
        r#"<text x="{x0}" y="{}" text-anchor="middle">{}</text>"#,
        y0 + 16.0,
        format_tick(frame.range_x.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{x1}" y="{}" text-anchor="middle">{}</text>"#,
        y0 + 16.0,
        format_tick(frame.range_x.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y0}" text-anchor="end">{}</text>"#,
        x0 - 6.0,
        format_tick(frame.range_y.0)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y1}" text-anchor="end">{}</text>"#,
        x0 - 6.0,
        format_tick(frame.range_y.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#,
        (x0 + x1) / 2.0,
        y0 + 34.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{y_label}</text>"#,
        x0 - 44.0,
        (y0 + y1) / 2.0,
        x0 - 44.0,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(out, "</g>");
}

fn format_tick(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e7 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

fn heat_color(t: f64) -> String {
    // light-to-dark blue ramp
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("rgb({},{},{})", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

fn heatmap_svg(fp: &Fingerprint) -> Result<String> {
    if fp.total() == 0 {
        return Err(Error::EmptyInput("fingerprint has no in-range stations".into()));
    }
    let g = &fp.geometry;
    let frame = Frame::new(g.range_x, g.range_y);
    let max = fp.cells.iter().copied().max().unwrap_or(1) as f64;
    let wx = (g.range_x.1 - g.range_x.0) / g.bins_x as f64;
    let wy = (g.range_y.1 - g.range_y.0) / g.bins_y as f64;
    let mut out = String::new();
    open_svg(&mut out);
    let _ = writeln!(out, r#"<g class="cells" stroke="none">"#);
    for iy in 0..g.bins_y {
        for ix in 0..g.bins_x {
            let count = fp.cells[iy * g.bins_x + ix];
            if count == 0 {
                continue;
            }
            let x = g.range_x.0 + ix as f64 * wx;
            let y = g.range_y.0 + (iy + 1) as f64 * wy;
            let px = frame.sx(x);
            let py = frame.sy(y);
            let pw = frame.sx(x + wx) - px;
            let ph = frame.sy(y - wy) - py;
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{px:.2}" y="{py:.2}" width="{pw:.2}" height="{ph:.2}" fill="{}"/>"#,
                heat_color((count as f64 / max).sqrt())
            );
        }
    }
    let _ = writeln!(out, "</g>");
    axes(&mut out, &frame, "vote share", "turnout");
    out.push_str("</svg>\n");
    Ok(out)
}

/// 3x3 box filter over the cell grid, edge cells averaging fewer neighbors.
fn box_smooth(cells: &[u32], bins_x: usize, bins_y: usize) -> Vec<f64> {
    let mut smooth = vec![0.0; cells.len()];
    for iy in 0..bins_y {
        for ix in 0..bins_x {
            let mut sum = 0.0;
            let mut n = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx >= 0 && jy >= 0 && (jx as usize) < bins_x && (jy as usize) < bins_y {
                        sum += cells[jy as usize * bins_x + jx as usize] as f64;
                        n += 1.0;
                    }
                }
            }
            smooth[iy * bins_x + ix] = sum / n;
        }
    }
    smooth
}

/// Marching squares: line segments of the iso-contour `level` over a value
/// grid indexed `[iy * bins_x + ix]`, in bin-center coordinates.
fn iso_segments(values: &[f64], bins_x: usize, bins_y: usize, level: f64) -> Vec<[(f64, f64); 2]> {
    let mut segments = Vec::new();
    let at = |ix: usize, iy: usize| values[iy * bins_x + ix];
    for iy in 0..bins_y.saturating_sub(1) {
        for ix in 0..bins_x.saturating_sub(1) {
            // corners: a=(ix,iy) b=(ix+1,iy) c=(ix+1,iy+1) d=(ix,iy+1)
            let (a, b, c, d) = (at(ix, iy), at(ix + 1, iy), at(ix + 1, iy + 1), at(ix, iy + 1));
            let case = (usize::from(a > level))
                | (usize::from(b > level) << 1)
                | (usize::from(c > level) << 2)
                | (usize::from(d > level) << 3);
            if case == 0 || case == 15 {
                continue;
            }
            let frac = |v0: f64, v1: f64| {
                if (v1 - v0).abs() < f64::EPSILON {
                    0.5
                } else {
                    ((level - v0) / (v1 - v0)).clamp(0.0, 1.0)
                }
            };
            let x = ix as f64;
            let y = iy as f64;
            // edge midpoints with interpolation
            let bottom = (x + frac(a, b), y);
            let right = (x + 1.0, y + frac(b, c));
            let top = (x + frac(d, c), y + 1.0);
            let left = (x, y + frac(a, d));
            let mut push = |p: (f64, f64), q: (f64, f64)| segments.push([p, q]);
            match case {
                1 | 14 => push(left, bottom),
                2 | 13 => push(bottom, right),
                3 | 12 => push(left, right),
                4 | 11 => push(right, top),
                6 | 9 => push(bottom, top),
                7 | 8 => push(left, top),
                5 => {
                    // ambiguous saddle: split by the cell average
                    if (a + b + c + d) / 4.0 > level {
                        push(left, top);
                        push(bottom, right);
                    } else {
                        push(left, bottom);
                        push(right, top);
                    }
                }
                10 => {
                    if (a + b + c + d) / 4.0 > level {
                        push(left, bottom);
                        push(right, top);
                    } else {
                        push(left, top);
                        push(bottom, right);
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segments
}

fn contour_svg(groups: &[(String, Fingerprint)]) -> Result<String> {
    if groups.is_empty() || groups.iter().all(|(_, fp)| fp.total() == 0) {
        return Err(Error::EmptyInput("no stations in any contour group".into()));
    }
    let g0 = &groups[0].1.geometry;
    for (_, fp) in groups {
        if fp.geometry != *g0 {
            return Err(Error::InvalidArgument(
                "contour groups must share one bin geometry".into(),
            ));
        }
    }
    let frame = Frame::new(g0.range_x, g0.range_y);
    let wx = (g0.range_x.1 - g0.range_x.0) / g0.bins_x as f64;
    let wy = (g0.range_y.1 - g0.range_y.0) / g0.bins_y as f64;
    let center = |p: (f64, f64)| {
        (
            frame.sx(g0.range_x.0 + (p.0 + 0.5) * wx),
            frame.sy(g0.range_y.0 + (p.1 + 0.5) * wy),
        )
    };
    let mut out = String::new();
    open_svg(&mut out);
    for (gi, (label, fp)) in groups.iter().enumerate() {
        let smooth = box_smooth(&fp.cells, g0.bins_x, g0.bins_y);
        let max = smooth.iter().cloned().fold(0.0f64, f64::max);
        if max <= 0.0 {
            continue;
        }
        let color = GROUP_COLORS[gi % GROUP_COLORS.len()];
        let _ = writeln!(
            out,
            r#"<g class="contour" data-group="{label}" stroke="{color}" fill="none">"#
        );
        for fraction in [0.1, 0.3, 0.5, 0.7, 0.9] {
            for seg in iso_segments(&smooth, g0.bins_x, g0.bins_y, fraction * max) {
                let (x1, y1) = center(seg[0]);
                let (x2, y2) = center(seg[1]);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }
    axes(&mut out, &frame, "vote share", "turnout");
    out.push_str("</svg>\n");
    Ok(out)
}

fn polyline(out: &mut String, frame: &Frame, pts: &[(f64, f64)], color: &str, class: &str) {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.sx(x), frame.sy(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline class="{class}" points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#,
        coords.join(" ")
    );
}

fn cumulative_svg(curve: &CumulativeCurve) -> Result<String> {
    if curve.points.is_empty() {
        return Err(Error::EmptyInput("cumulative curve has no points".into()));
    }
    let xs: Vec<f64> = curve.points.iter().map(|p| p.abscissa).collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.cumulative_share).collect();
    let x_range = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let y_lo = ys.iter().cloned().fold(0.5f64, f64::min) - 0.02;
    let y_hi = ys.iter().cloned().fold(0.5f64, f64::max) + 0.02;
    let frame = Frame::new(x_range, (y_lo, y_hi));
    let mut out = String::new();
    open_svg(&mut out);
    let gy = frame.sy(0.5);
    let _ = writeln!(
        out,
        r##"<line class="gridline" x1="{}" y1="{gy}" x2="{}" y2="{gy}" stroke="#999" stroke-dasharray="4 3"/>"##,
        frame.sx(frame.range_x.0),
        frame.sx(frame.range_x.1)
    );
    let pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    polyline(&mut out, &frame, &pts, GROUP_COLORS[0], "curve");
    axes(&mut out, &frame, "order statistic", "cumulative vote share");
    out.push_str("</svg>\n");
    Ok(out)
}

fn displacement_svg(curve: &DisplacementCurve, region: Option<&AcceptanceRegion>) -> Result<String> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter_map(|p| p.displacement.as_ref().map(|d| (p.percentile as f64, d.delta)))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyInput("displacement curve has no defined points".into()));
    }
    let mut y_lo = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut y_hi = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let mut x_lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut x_hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if let Some(r) = region {
        for p in &r.points {
            y_lo = y_lo.min(p.lower);
            y_hi = y_hi.max(p.upper);
            x_lo = x_lo.min(p.percentile as f64);
            x_hi = x_hi.max(p.percentile as f64);
        }
    }
    let pad = 0.1 * (y_hi - y_lo).max(1e-6);
    let frame = Frame::new((x_lo, x_hi), (y_lo - pad, y_hi + pad));
    let mut out = String::new();
    open_svg(&mut out);
    if let Some(r) = region {
        // band polygon: upper bounds left-to-right, lower bounds back
        let mut coords = Vec::with_capacity(2 * r.points.len());
        for p in &r.points {
            coords.push(format!(
                "{:.2},{:.2}",
                frame.sx(p.percentile as f64),
                frame.sy(p.upper)
            ));
        }
        for p in r.points.iter().rev() {
            coords.push(format!(
                "{:.2},{:.2}",
                frame.sx(p.percentile as f64),
                frame.sy(p.lower)
            ));
        }
        let _ = writeln!(
            out,
            r##"<polygon class="band" points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            coords.join(" ")
        );
    }
    let gy = frame.sy(0.0);
    let _ = writeln!(
        out,
        r##"<line class="gridline" x1="{}" y1="{gy}" x2="{}" y2="{gy}" stroke="#999" stroke-dasharray="4 3"/>"##,
        frame.sx(frame.range_x.0),
        frame.sx(frame.range_x.1)
    );
    polyline(&mut out, &frame, &pts, GROUP_COLORS[1], "curve");
    axes(&mut out, &frame, "size percentile p", "displacement");
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render `artifact` as a self-contained SVG document.
pub fn emit_plot(artifact: &PlotArtifact, kind: PlotKind) -> Result<String> {
    match (artifact, kind) {
        (PlotArtifact::Fingerprint(fp), PlotKind::Heatmap) => heatmap_svg(fp),
        (PlotArtifact::Fingerprint(fp), PlotKind::Contour) => {
            contour_svg(std::slice::from_ref(&("all".to_string(), fp.clone())))
        }
        (PlotArtifact::FingerprintGroups(groups), PlotKind::Contour) => contour_svg(groups),
        (PlotArtifact::CumulativeCurve(curve), PlotKind::Line) => cumulative_svg(curve),
        (PlotArtifact::Displacement { curve, region }, PlotKind::Line) => {
            displacement_svg(curve, region.as_ref())
        }
        _ => Err(Error::InvalidArgument(
            "plot kind is incompatible with this artifact".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::{compute_fingerprint, BinGeometry, CurvePoint, FingerprintAxes};
    use crate::ingest::{RegionKey, StationRecord};
    use crate::rigging::{DisplacementPoint, RegionPoint};

    fn station(id: &str, n: u64, t: u64, v: u64) -> StationRecord {
        StationRecord::new(
            RegionKey {
                province: "P".into(),
                district: "D".into(),
                village: "V".into(),
                station_id: id.into(),
            },
            n,
            t,
            v,
        )
        .unwrap()
    }

    /// Minimal well-formedness check: every opened tag is closed in order.
    fn assert_well_formed(svg: &str) {
        let mut stack: Vec<String> = Vec::new();
        let mut rest = svg;
        while let Some(start) = rest.find('<') {
            let end = rest[start..].find('>').expect("unterminated tag") + start;
            let tag = &rest[start + 1..end];
            rest = &rest[end + 1..];
            if let Some(name) = tag.strip_prefix('/') {
                assert_eq!(stack.pop().as_deref(), Some(name), "mismatched close");
            } else if !tag.ends_with('/') && !tag.starts_with('?') && !tag.starts_with('!') {
                let name: String = tag.chars().take_while(|c| !c.is_whitespace()).collect();
                stack.push(name);
            }
        }
        assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    }

    fn diagonal_fingerprint() -> Fingerprint {
        let geometry = BinGeometry::new(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let records = vec![station("a", 100, 20, 10), station("b", 100, 80, 70)];
        compute_fingerprint(&records, geometry, FingerprintAxes::Raw).unwrap()
    }

    #[test]
    fn heatmap_renders_one_rect_per_occupied_cell() {
        let svg = emit_plot(&PlotArtifact::Fingerprint(diagonal_fingerprint()), PlotKind::Heatmap)
            .unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 2);
        assert!(svg.contains(r#"class="axes""#));
        assert!(svg.contains("viewBox"));
        assert_well_formed(&svg);
    }

    #[test]
    fn empty_fingerprint_is_rejected() {
        // one station, out of the histogram range: zero in-range total
        let geometry = BinGeometry::new(2, 2, (0.0, 0.5), (0.0, 0.5)).unwrap();
        let fp = compute_fingerprint(&[station("a", 100, 90, 81)], geometry, FingerprintAxes::Raw)
            .unwrap();
        assert!(emit_plot(&PlotArtifact::Fingerprint(fp), PlotKind::Heatmap).is_err());
    }

    #[test]
    fn incompatible_kind_is_rejected() {
        let err = emit_plot(&PlotArtifact::Fingerprint(diagonal_fingerprint()), PlotKind::Line);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
        let curve = CumulativeCurve {
            mode: crate::fingerprint::CurveMode::BySizeRank,
            points: vec![CurvePoint {
                abscissa: 1.0,
                cumulative_share: 0.6,
            }],
        };
        assert!(emit_plot(&PlotArtifact::CumulativeCurve(curve), PlotKind::Heatmap).is_err());
    }

    #[test]
    fn contour_emits_one_line_set_per_group() {
        let geometry = BinGeometry::new(20, 20, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let blob_a: Vec<StationRecord> = (0..60)
            .map(|i| station(&format!("a{i}"), 1000, 400 + i % 30, 200 + i % 20))
            .collect();
        let blob_b: Vec<StationRecord> = (0..60)
            .map(|i| station(&format!("b{i}"), 1000, 700 + i % 30, 600 + i % 20))
            .collect();
        let groups = vec![
            ("small".to_string(), compute_fingerprint(&blob_a, geometry.clone(), FingerprintAxes::Raw).unwrap()),
            ("large".to_string(), compute_fingerprint(&blob_b, geometry, FingerprintAxes::Raw).unwrap()),
        ];
        let svg = emit_plot(&PlotArtifact::FingerprintGroups(groups), PlotKind::Contour).unwrap();
        assert_eq!(svg.matches(r#"class="contour""#).count(), 2);
        assert!(svg.contains(r#"data-group="small""#));
        assert!(svg.contains(r#"data-group="large""#));
        assert_well_formed(&svg);
    }

    #[test]
    fn cumulative_line_includes_the_half_gridline() {
        let curve = CumulativeCurve {
            mode: crate::fingerprint::CurveMode::BySizeRank,
            points: (1..=50)
                .map(|k| CurvePoint {
                    abscissa: k as f64,
                    cumulative_share: 0.45 + 0.002 * k as f64,
                })
                .collect(),
        };
        let svg = emit_plot(&PlotArtifact::CumulativeCurve(curve), PlotKind::Line).unwrap();
        assert!(svg.contains(r#"class="gridline""#));
        assert!(svg.contains(r#"class="curve""#));
        assert_well_formed(&svg);
    }

    #[test]
    fn band_polygon_bounds_the_region_point_for_point() {
        let points: Vec<DisplacementPoint> = (1..=10u32)
            .map(|p| DisplacementPoint {
                percentile: p,
                displacement: Some(crate::rigging::DisplacementVector {
                    delta_vote: 0.01,
                    delta_turnout: 0.01,
                    delta: 0.014,
                }),
                small_count: p as usize,
            })
            .collect();
        let curve = DisplacementCurve { points };
        let region = AcceptanceRegion {
            confidence: 0.95,
            provenance: "test".into(),
            points: (1..=10u32)
                .map(|p| RegionPoint {
                    percentile: p,
                    lower: -0.02,
                    upper: 0.02,
                })
                .collect(),
        };
        let svg = emit_plot(
            &PlotArtifact::Displacement {
                curve,
                region: Some(region),
            },
            PlotKind::Line,
        )
        .unwrap();
        let band = svg
            .lines()
            .find(|l| l.contains(r#"class="band""#))
            .expect("band polygon present");
        let coords = band.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        // 10 upper points out, 10 lower points back
        assert_eq!(coords.split_whitespace().count(), 20);
        assert_well_formed(&svg);
    }
}
