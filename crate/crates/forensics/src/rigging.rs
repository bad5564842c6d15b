//! Voter-rigging test: displacement between the standardized fingerprints
//! of small and large polling stations, judged against an acceptance region
//! built from reference elections (or a synthetic clean ensemble).

use crate::fingerprint::{standardize_scores, StandardizedScore};
use crate::ingest::StationRecord;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

/// Centroid shift of the small-station group relative to the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementVector {
    pub delta_vote: f64,
    pub delta_turnout: f64,
    /// Euclidean norm of the shift, signed toward the upper-right quadrant.
    pub delta: f64,
}

impl DisplacementVector {
    pub fn new(delta_vote: f64, delta_turnout: f64) -> Self {
        let norm = (delta_vote * delta_vote + delta_turnout * delta_turnout).sqrt();
        let sign = if delta_vote + delta_turnout < 0.0 { -1.0 } else { 1.0 };
        Self {
            delta_vote,
            delta_turnout,
            delta: sign * norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementPoint {
    pub percentile: u32,
    /// None when either size group is empty at this threshold.
    pub displacement: Option<DisplacementVector>,
    pub small_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCurve {
    pub points: Vec<DisplacementPoint>,
}

impl DisplacementCurve {
    pub fn delta_at(&self, percentile: u32) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.percentile == percentile)
            .and_then(|p| p.displacement.as_ref())
            .map(|d| d.delta)
    }

    /// Mean and max of delta over the defined grid points.
    pub fn delta_stats(&self) -> Option<(f64, f64)> {
        let deltas: Vec<f64> = self
            .points
            .iter()
            .filter_map(|p| p.displacement.as_ref().map(|d| d.delta))
            .collect();
        if deltas.is_empty() {
            return None;
        }
        let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
        let max = deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((mean, max))
    }
}

/// The default threshold grid, integer percentiles 1..=90.
pub fn default_p_grid() -> Vec<u32> {
    (1..=90).collect()
}

/// Nearest-rank percentile of a sorted multiset.
fn nearest_rank(sorted: &[u64], percentile: u32) -> u64 {
    let n = sorted.len();
    let rank = ((percentile as f64 / 100.0 * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Displacement curve over the percentile grid.
///
/// Small group at threshold p: stations with electorate at or below the
/// p-th nearest-rank percentile of all electorate sizes (ties go small).
pub fn displacement_curve(
    scores: &[StandardizedScore],
    p_grid: &[u32],
) -> Result<DisplacementCurve> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("displacement requires standardized scores".into()));
    }
    if p_grid.iter().any(|&p| p == 0 || p >= 100) {
        return Err(Error::InvalidArgument("percentiles must lie in (0, 100)".into()));
    }
    let mut sizes: Vec<u64> = scores.iter().map(|s| s.eligible).collect();
    sizes.sort_unstable();

    let mut points = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let cutoff = nearest_rank(&sizes, p);
        let (mut sv, mut st, mut ns) = (0.0, 0.0, 0usize);
        let (mut lv, mut lt, mut nl) = (0.0, 0.0, 0usize);
        for s in scores {
            if s.eligible <= cutoff {
                sv += s.z_vote;
                st += s.z_turnout;
                ns += 1;
            } else {
                lv += s.z_vote;
                lt += s.z_turnout;
                nl += 1;
            }
        }
        let displacement = (ns > 0 && nl > 0).then(|| {
            DisplacementVector::new(
                sv / ns as f64 - lv / nl as f64,
                st / ns as f64 - lt / nl as f64,
            )
        });
        points.push(DisplacementPoint {
            percentile: p,
            displacement,
            small_count: ns,
        });
    }
    Ok(DisplacementCurve { points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub percentile: u32,
    pub lower: f64,
    pub upper: f64,
}

/// Per-percentile envelope of acceptable displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRegion {
    pub confidence: f64,
    pub provenance: String,
    pub points: Vec<RegionPoint>,
}

impl AcceptanceRegion {
    pub fn bounds_at(&self, percentile: u32) -> Option<(f64, f64)> {
        self.points
            .iter()
            .find(|p| p.percentile == percentile)
            .map(|p| (p.lower, p.upper))
    }

    /// Grid points where the curve leaves the region.
    pub fn exceedances(&self, curve: &DisplacementCurve) -> Vec<u32> {
        curve
            .points
            .iter()
            .filter_map(|p| {
                let d = p.displacement.as_ref()?.delta;
                let (lo, hi) = self.bounds_at(p.percentile)?;
                (d < lo || d > hi).then_some(p.percentile)
            })
            .collect()
    }

    /// Longest run of consecutive grid points outside the region.
    pub fn longest_exceedance_run(&self, curve: &DisplacementCurve) -> usize {
        let out = self.exceedances(curve);
        let mut best = 0;
        let mut run = 0;
        let mut prev: Option<u32> = None;
        for p in out {
            run = match prev {
                Some(q) if p == q + 1 => run + 1,
                _ => 1,
            };
            best = best.max(run);
            prev = Some(p);
        }
        best
    }
}

/// Empirical quantile with linear interpolation over sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 < n {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Two-sided per-percentile quantile envelope across reference curves.
pub fn acceptance_region(
    reference_curves: &[DisplacementCurve],
    confidence: f64,
    provenance: &str,
) -> Result<AcceptanceRegion> {
    if reference_curves.is_empty() {
        return Err(Error::EmptyInput("acceptance region requires reference curves".into()));
    }
    if !(confidence > 0.0 && confidence <= 1.0) {
        return Err(Error::InvalidArgument("confidence must lie in (0, 1]".into()));
    }
    let mut by_p: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for curve in reference_curves {
        for point in &curve.points {
            if let Some(d) = &point.displacement {
                by_p.entry(point.percentile).or_default().push(d.delta);
            }
        }
    }
    let lo_q = (1.0 - confidence) / 2.0;
    let hi_q = (1.0 + confidence) / 2.0;
    let points = by_p
        .into_iter()
        .map(|(percentile, mut deltas)| {
            deltas.sort_by(f64::total_cmp);
            RegionPoint {
                percentile,
                lower: quantile(&deltas, lo_q),
                upper: quantile(&deltas, hi_q),
            }
        })
        .collect();
    Ok(AcceptanceRegion {
        confidence,
        provenance: provenance.to_string(),
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvinceDisplacement {
    pub province: String,
    pub mean_delta: f64,
    pub max_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvinceRanking {
    /// Ordered by mean delta, descending.
    pub entries: Vec<ProvinceDisplacement>,
    /// Provinces without enough usable scores.
    pub excluded: Vec<String>,
}

/// Rank provinces by their average displacement, treating each province as
/// a standalone dataset (standardization recomputed within the province).
pub fn rank_provinces(records: &[StationRecord], p_grid: &[u32]) -> Result<ProvinceRanking> {
    if records.is_empty() {
        return Err(Error::EmptyInput("province ranking requires records".into()));
    }
    if p_grid.iter().any(|&p| p == 0 || p >= 90) {
        return Err(Error::InvalidArgument(
            "province ranking percentiles must lie in (0, 90)".into(),
        ));
    }
    let mut by_province: BTreeMap<&str, Vec<StationRecord>> = BTreeMap::new();
    for r in records {
        by_province
            .entry(r.region.province.as_str())
            .or_default()
            .push(r.clone());
    }
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for (province, stations) in by_province {
        let standardized = standardize_scores(&stations);
        let stats = (!standardized.scores.is_empty())
            .then(|| displacement_curve(&standardized.scores, p_grid).ok())
            .flatten()
            .and_then(|curve| curve.delta_stats());
        match stats {
            Some((mean_delta, max_delta)) => entries.push(ProvinceDisplacement {
                province: province.to_string(),
                mean_delta,
                max_delta,
            }),
            None => excluded.push(province.to_string()),
        }
    }
    entries.sort_by(|a, b| b.mean_delta.total_cmp(&a.mean_delta));
    Ok(ProvinceRanking { entries, excluded })
}

/// Read reference displacement curves from a `election;p;delta` text file.
pub fn read_reference_curves<R: Read>(source: R) -> Result<Vec<(String, DisplacementCurve)>> {
    let reader = BufReader::new(source);
    let mut by_election: BTreeMap<String, BTreeMap<u32, f64>> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let row_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("election")) {
            continue;
        }
        let parts: Vec<&str> = line.split(';').collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                row: row_no,
                message: format!("expected `election;p;delta`, found `{line}`"),
            });
        }
        let p: u32 = parts[1].trim().parse().map_err(|_| Error::Parse {
            row: row_no,
            message: format!("non-numeric percentile `{}`", parts[1]),
        })?;
        let delta: f64 = parts[2].trim().parse().map_err(|_| Error::Parse {
            row: row_no,
            message: format!("non-numeric delta `{}`", parts[2]),
        })?;
        by_election
            .entry(parts[0].trim().to_string())
            .or_default()
            .insert(p, delta);
    }
    if by_election.is_empty() {
        return Err(Error::EmptyInput("reference curve file has no records".into()));
    }
    Ok(by_election
        .into_iter()
        .map(|(id, points)| {
            let points = points
                .into_iter()
                .map(|(percentile, delta)| DisplacementPoint {
                    percentile,
                    // only the scalar is stored in reference files
                    displacement: Some(DisplacementVector {
                        delta_vote: f64::NAN,
                        delta_turnout: f64::NAN,
                        delta,
                    }),
                    small_count: 0,
                })
                .collect();
            (id, DisplacementCurve { points })
        })
        .collect())
}

pub fn write_reference_curves<W: Write>(
    curves: &[(String, DisplacementCurve)],
    mut sink: W,
) -> Result<()> {
    writeln!(sink, "election;p;delta")?;
    for (id, curve) in curves {
        for point in &curve.points {
            if let Some(d) = &point.displacement {
                writeln!(sink, "{id};{};{}", point.percentile, d.delta)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RegionKey;

    fn score(id: usize, eligible: u64, zv: f64, zt: f64) -> StandardizedScore {
        StandardizedScore {
            region: RegionKey {
                province: "P".into(),
                district: "D".into(),
                village: "V".into(),
                station_id: id.to_string(),
            },
            eligible,
            z_vote: zv,
            z_turnout: zt,
            neighborhood_size: 5,
        }
    }

    fn constant_curve(delta: f64, grid: &[u32]) -> DisplacementCurve {
        DisplacementCurve {
            points: grid
                .iter()
                .map(|&percentile| DisplacementPoint {
                    percentile,
                    displacement: Some(DisplacementVector::new(delta, 0.0)),
                    small_count: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn coincident_centroids_give_zero_delta() {
        // small and large groups have identical mean Z
        let scores = vec![
            score(1, 100, 1.0, -1.0),
            score(2, 100, -1.0, 1.0),
            score(3, 900, 1.0, -1.0),
            score(4, 900, -1.0, 1.0),
        ];
        let curve = displacement_curve(&scores, &[50]).unwrap();
        let d = curve.points[0].displacement.unwrap();
        assert!(d.delta.abs() < 1e-12);
    }

    #[test]
    fn delta_is_antisymmetric_under_group_exchange() {
        let scores = vec![
            score(1, 100, 1.5, 0.5),
            score(2, 200, 0.5, 0.1),
            score(3, 800, -0.5, -0.2),
            score(4, 900, -1.0, -0.4),
        ];
        let curve = displacement_curve(&scores, &[50]).unwrap();
        let d = curve.points[0].displacement.unwrap();
        // swap roles by inverting sizes around the cutoff
        let swapped: Vec<_> = scores
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.eligible = 1000 - s.eligible;
                s
            })
            .collect();
        let curve2 = displacement_curve(&swapped, &[50]).unwrap();
        let d2 = curve2.points[0].displacement.unwrap();
        assert!((d.delta_vote + d2.delta_vote).abs() < 1e-12);
        assert!((d.delta_turnout + d2.delta_turnout).abs() < 1e-12);
        assert!((d.delta + d2.delta).abs() < 1e-12);
    }

    #[test]
    fn ties_at_the_cutoff_go_to_the_small_group() {
        let scores = vec![
            score(1, 100, 1.0, 1.0),
            score(2, 100, 1.0, 1.0),
            score(3, 100, 1.0, 1.0),
            score(4, 500, 0.0, 0.0),
        ];
        let curve = displacement_curve(&scores, &[50]).unwrap();
        assert_eq!(curve.points[0].small_count, 3);
    }

    #[test]
    fn empty_group_yields_undefined_point_not_error() {
        let scores = vec![score(1, 100, 0.0, 0.0), score(2, 100, 0.0, 0.0)];
        let curve = displacement_curve(&scores, &[99]).unwrap();
        assert!(curve.points[0].displacement.is_none());
    }

    #[test]
    fn invalid_grid_is_rejected() {
        let scores = vec![score(1, 100, 0.0, 0.0)];
        assert!(displacement_curve(&scores, &[0]).is_err());
        assert!(displacement_curve(&scores, &[100]).is_err());
    }

    #[test]
    fn single_reference_curve_degenerates_the_region() {
        let grid = default_p_grid();
        let curve = constant_curve(0.7, &grid);
        let region = acceptance_region(&[curve.clone()], 0.95, "test").unwrap();
        for p in &region.points {
            assert_eq!(p.lower, 0.7);
            assert_eq!(p.upper, 0.7);
        }
        assert!(region.exceedances(&curve).is_empty());
    }

    #[test]
    fn full_confidence_region_spans_the_extremes() {
        let grid = default_p_grid();
        let curves = vec![constant_curve(-0.4, &grid), constant_curve(0.4, &grid)];
        let region = acceptance_region(&curves, 1.0, "test").unwrap();
        for p in &region.points {
            assert!((p.lower + 0.4).abs() < 1e-12);
            assert!((p.upper - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn region_bounds_are_monotone_in_confidence() {
        let grid = vec![10u32, 20, 30];
        let curves: Vec<_> = (0..40)
            .map(|i| constant_curve((i as f64 - 20.0) / 10.0, &grid))
            .collect();
        let narrow = acceptance_region(&curves, 0.5, "t").unwrap();
        let wide = acceptance_region(&curves, 0.95, "t").unwrap();
        for (a, b) in narrow.points.iter().zip(&wide.points) {
            assert!(b.lower <= a.lower && b.upper >= a.upper);
        }
    }

    #[test]
    fn exceedance_run_counts_consecutive_points() {
        let grid = default_p_grid();
        let region = acceptance_region(&[constant_curve(0.0, &grid)], 0.95, "t").unwrap();
        let mut curve = constant_curve(0.0, &grid);
        for point in curve.points.iter_mut() {
            if (5..=9).contains(&point.percentile) || point.percentile == 40 {
                point.displacement = Some(DisplacementVector::new(3.0, 3.0));
            }
        }
        assert_eq!(region.exceedances(&curve).len(), 6);
        assert_eq!(region.longest_exceedance_run(&curve), 5);
    }

    #[test]
    fn reference_file_round_trip() {
        let grid = vec![5u32, 10, 20];
        let curves = vec![
            ("e1".to_string(), constant_curve(0.3, &grid)),
            ("e2".to_string(), constant_curve(-0.2, &grid)),
        ];
        let mut buf = Vec::new();
        write_reference_curves(&curves, &mut buf).unwrap();
        let parsed = read_reference_curves(buf.as_slice()).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].0, "e1");
        assert_eq!(parsed[0].1.delta_at(10), Some(0.3));
        assert_eq!(parsed[1].1.delta_at(20), Some(-0.2));
    }

    #[test]
    fn malformed_reference_file_is_rejected() {
        assert!(matches!(
            read_reference_curves("election;p;delta\ne1;5\n".as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(read_reference_curves("election;p;delta\n".as_bytes()).is_err());
    }
}
