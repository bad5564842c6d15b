//! Election fingerprints, standardized scores, and cumulative vote curves.

use crate::ingest::StationRecord;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Bin counts and axis ranges of a 2-D histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinGeometry {
    pub bins_x: usize,
    pub bins_y: usize,
    pub range_x: (f64, f64),
    pub range_y: (f64, f64),
}

impl BinGeometry {
    pub fn new(bins_x: usize, bins_y: usize, range_x: (f64, f64), range_y: (f64, f64)) -> Result<Self> {
        if bins_x == 0 || bins_y == 0 {
            return Err(Error::InvalidArgument("bin counts must be >= 1".into()));
        }
        if !(range_x.0 < range_x.1) || !(range_y.0 < range_y.1) {
            return Err(Error::InvalidArgument(
                "histogram ranges must be non-degenerate".into(),
            ));
        }
        Ok(Self {
            bins_x,
            bins_y,
            range_x,
            range_y,
        })
    }

    /// 100x100 over the unit square, for raw (vote share, turnout) axes.
    pub fn raw_default() -> Self {
        Self::new(100, 100, (0.0, 1.0), (0.0, 1.0)).unwrap()
    }

    /// 60x60 over [-6,6]^2, for standardized (Z_v, Z_t) axes.
    pub fn standardized_default() -> Self {
        Self::new(60, 60, (-6.0, 6.0), (-6.0, 6.0)).unwrap()
    }

    fn index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let ix = bin_index(x, self.range_x, self.bins_x)?;
        let iy = bin_index(y, self.range_y, self.bins_y)?;
        Some((ix, iy))
    }
}

fn bin_index(value: f64, range: (f64, f64), bins: usize) -> Option<usize> {
    if !value.is_finite() || value < range.0 || value > range.1 {
        return None;
    }
    let w = (range.1 - range.0) / bins as f64;
    let i = ((value - range.0) / w) as usize;
    Some(i.min(bins - 1)) // the upper range edge belongs to the last bin
}

/// Which coordinates a fingerprint is built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FingerprintAxes {
    /// x = vote share v, y = relative turnout t.
    Raw,
    /// x = Z_v, y = Z_t from district standardization.
    Standardized,
}

/// Joint vote-turnout histogram (the election fingerprint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub geometry: BinGeometry,
    pub axes: FingerprintAxes,
    /// Row-major cells: `cells[iy * bins_x + ix]`.
    pub cells: Vec<u32>,
    /// Stations with defined coordinates that fell outside the ranges.
    pub out_of_range: u32,
    /// Stations without usable coordinates (undefined rate or skipped score).
    pub skipped: u32,
}

impl Fingerprint {
    fn new(geometry: BinGeometry, axes: FingerprintAxes) -> Self {
        let cells = vec![0; geometry.bins_x * geometry.bins_y];
        Self {
            geometry,
            axes,
            cells,
            out_of_range: 0,
            skipped: 0,
        }
    }

    fn insert(&mut self, x: f64, y: f64) {
        match self.geometry.index(x, y) {
            Some((ix, iy)) => self.cells[iy * self.geometry.bins_x + ix] += 1,
            None => self.out_of_range += 1,
        }
    }

    pub fn cell(&self, ix: usize, iy: usize) -> u32 {
        self.cells[iy * self.geometry.bins_x + ix]
    }

    /// Number of stations counted inside the ranges.
    pub fn total(&self) -> u64 {
        self.cells.iter().map(|&c| c as u64).sum()
    }

    /// Bin-center coordinates of the most populated cell.
    pub fn mode(&self) -> (f64, f64) {
        let (i, _) = self
            .cells
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .unwrap();
        let (ix, iy) = (i % self.geometry.bins_x, i / self.geometry.bins_x);
        let g = &self.geometry;
        let wx = (g.range_x.1 - g.range_x.0) / g.bins_x as f64;
        let wy = (g.range_y.1 - g.range_y.0) / g.bins_y as f64;
        (
            g.range_x.0 + (ix as f64 + 0.5) * wx,
            g.range_y.0 + (iy as f64 + 0.5) * wy,
        )
    }
}

/// Histogram over raw (v, t) or standardized (Z_v, Z_t) coordinates.
pub fn compute_fingerprint(
    records: &[StationRecord],
    geometry: BinGeometry,
    axes: FingerprintAxes,
) -> Result<Fingerprint> {
    if records.is_empty() {
        return Err(Error::EmptyInput("fingerprint requires records".into()));
    }
    let mut fp = Fingerprint::new(geometry, axes);
    match axes {
        FingerprintAxes::Raw => {
            for r in records {
                match r.rates() {
                    Some((v, t)) => fp.insert(v, t),
                    None => fp.skipped += 1,
                }
            }
        }
        FingerprintAxes::Standardized => {
            let standardized = standardize_scores(records);
            fp.skipped = (records.len() - standardized.scores.len()) as u32;
            for s in &standardized.scores {
                fp.insert(s.z_vote, s.z_turnout);
            }
        }
    }
    Ok(fp)
}

/// Bin a list of already-standardized scores.
pub fn fingerprint_from_scores(scores: &[StandardizedScore], geometry: BinGeometry) -> Result<Fingerprint> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("fingerprint requires scores".into()));
    }
    let mut fp = Fingerprint::new(geometry, FingerprintAxes::Standardized);
    for s in scores {
        fp.insert(s.z_vote, s.z_turnout);
    }
    Ok(fp)
}

/// District-standardized coordinates of one station.
///
/// The neighborhood of station i is every *other* station of its district;
/// Z is the deviation from the neighborhood mean in units of the
/// neighborhood sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedScore {
    pub region: crate::ingest::RegionKey,
    pub eligible: u64,
    pub z_vote: f64,
    pub z_turnout: f64,
    pub neighborhood_size: usize,
}

/// Stations that could not be standardized, by reason.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipTally {
    /// Neighborhood smaller than two other stations.
    pub small_neighborhood: usize,
    /// Zero spread of v or t in the neighborhood.
    pub zero_spread: usize,
    /// Station itself has undefined v or t.
    pub undefined_rate: usize,
}

impl SkipTally {
    pub fn total(&self) -> usize {
        self.small_neighborhood + self.zero_spread + self.undefined_rate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub scores: Vec<StandardizedScore>,
    pub skipped: SkipTally,
}

/// Spread convention for the neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpreadConvention {
    /// Divide by n-1 over the leave-one-out neighborhood (default).
    Sample,
    /// Divide by n, to probe sensitivity.
    Population,
}

pub fn standardize_scores(records: &[StationRecord]) -> Standardization {
    standardize_scores_with(records, SpreadConvention::Sample)
}

pub fn standardize_scores_with(
    records: &[StationRecord],
    convention: SpreadConvention,
) -> Standardization {
    // Group stations with defined rates by district, keeping input order.
    let mut districts: BTreeMap<(&str, &str), Vec<(usize, f64, f64)>> = BTreeMap::new();
    let mut skipped = SkipTally::default();
    for (i, r) in records.iter().enumerate() {
        match r.rates() {
            Some((v, t)) => districts
                .entry(r.region.district_key())
                .or_default()
                .push((i, v, t)),
            None => skipped.undefined_rate += 1,
        }
    }

    let mut indexed: Vec<(usize, StandardizedScore)> = Vec::new();
    for members in districts.values() {
        let n = members.len();
        if n < 3 {
            // every neighborhood has fewer than 2 other stations
            skipped.small_neighborhood += n;
            continue;
        }
        let (mut sv, mut svv, mut st, mut stt) = (0.0, 0.0, 0.0, 0.0);
        for &(_, v, t) in members {
            sv += v;
            svv += v * v;
            st += t;
            stt += t * t;
        }
        let m = (n - 1) as f64; // leave-one-out neighborhood size
        for &(i, v, t) in members {
            let zv = loo_z(v, sv, svv, m, convention);
            let zt = loo_z(t, st, stt, m, convention);
            match (zv, zt) {
                (Some(z_vote), Some(z_turnout)) => indexed.push((
                    i,
                    StandardizedScore {
                        region: records[i].region.clone(),
                        eligible: records[i].eligible,
                        z_vote,
                        z_turnout,
                        neighborhood_size: n - 1,
                    },
                )),
                _ => skipped.zero_spread += 1,
            }
        }
    }
    indexed.sort_by_key(|(i, _)| *i);
    Standardization {
        scores: indexed.into_iter().map(|(_, s)| s).collect(),
        skipped,
    }
}

/// Z-score of `x` against the leave-one-out neighborhood with sums over the
/// whole district (`sum`, `sum_sq`) and neighborhood size `m`.
fn loo_z(x: f64, sum: f64, sum_sq: f64, m: f64, convention: SpreadConvention) -> Option<f64> {
    let mean = (sum - x) / m;
    let ss = (sum_sq - x * x) - m * mean * mean;
    let denom = match convention {
        SpreadConvention::Sample => m - 1.0,
        SpreadConvention::Population => m,
    };
    let var = (ss / denom).max(0.0);
    if var <= 0.0 {
        return None;
    }
    Some((x - mean) / var.sqrt())
}

/// Ordering mode of a cumulative vote-percentage curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveMode {
    /// Points at each distinct turnout level t*; ordinate over stations with t <= t*.
    ByTurnoutLevel,
    /// Stations ranked by electorate size descending; ordinate over ranks <= k.
    BySizeRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Turnout level or rank, depending on the mode.
    pub abscissa: f64,
    /// Cumulative SUM(V)/SUM(T) over the included stations.
    pub cumulative_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeCurve {
    pub mode: CurveMode,
    pub points: Vec<CurvePoint>,
}

impl CumulativeCurve {
    pub fn final_value(&self) -> Option<f64> {
        self.points.last().map(|p| p.cumulative_share)
    }
}

pub fn cumulative_curve(records: &[StationRecord], mode: CurveMode) -> Result<CumulativeCurve> {
    if records.is_empty() {
        return Err(Error::EmptyInput("cumulative curve requires records".into()));
    }
    let mut points = Vec::new();
    match mode {
        CurveMode::ByTurnoutLevel => {
            let mut with_t: Vec<(f64, u64, u64)> = records
                .iter()
                .filter_map(|r| r.rel_turnout().map(|t| (t, r.valid, r.yes)))
                .collect();
            with_t.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut sum_t, mut sum_v) = (0u64, 0u64);
            let mut i = 0;
            while i < with_t.len() {
                let level = with_t[i].0;
                while i < with_t.len() && with_t[i].0 == level {
                    sum_t += with_t[i].1;
                    sum_v += with_t[i].2;
                    i += 1;
                }
                if sum_t > 0 {
                    points.push(CurvePoint {
                        abscissa: level,
                        cumulative_share: sum_v as f64 / sum_t as f64,
                    });
                }
            }
        }
        CurveMode::BySizeRank => {
            let mut ordered: Vec<&StationRecord> = records.iter().collect();
            // ties in N broken by the region key for a deterministic curve
            ordered.sort_by(|a, b| {
                b.eligible
                    .cmp(&a.eligible)
                    .then_with(|| a.region.cmp(&b.region))
            });
            let (mut sum_t, mut sum_v) = (0u64, 0u64);
            for (k, r) in ordered.iter().enumerate() {
                sum_t += r.valid;
                sum_v += r.yes;
                if sum_t > 0 {
                    points.push(CurvePoint {
                        abscissa: (k + 1) as f64,
                        cumulative_share: sum_v as f64 / sum_t as f64,
                    });
                }
            }
        }
    }
    Ok(CumulativeCurve { mode, points })
}
