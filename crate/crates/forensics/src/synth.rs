//! Synthetic elections with injectable fraud mechanisms.
//!
//! Generates a province/district/village/station hierarchy, draws district
//! moments around national moments, simulates honest or stuffed stations
//! through the forward model, and optionally inflates small stations to
//! mimic voter rigging. The output uses the same record type and file
//! format the ingest module reads, closing the loop for end-to-end tests.

use crate::ingest::{RegionKey, StationRecord};
use crate::rigging::{acceptance_region, displacement_curve, AcceptanceRegion, DisplacementCurve};
use crate::rng::{derive_seed, stream_rng, tag};
use crate::stuffing::{simulate_station, MomentEstimate, StuffingParams};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

/// Log-normal electorate-size law with a hard floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SizeLaw {
    pub log_mean: f64,
    pub log_sd: f64,
    pub floor: u64,
}

impl Default for SizeLaw {
    /// Tuned to a right-skewed distribution with mean ~332 and sd ~109.
    fn default() -> Self {
        Self {
            log_mean: 5.754,
            log_sd: 0.32,
            floor: 100,
        }
    }
}

/// Spread of district-level means around the national moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistrictEffects {
    pub vote_spread: f64,
    pub turnout_spread: f64,
}

impl Default for DistrictEffects {
    fn default() -> Self {
        Self {
            vote_spread: 0.1,
            turnout_spread: 0.03,
        }
    }
}

/// Small-station inflation: add the shifts to v and t (clamped to [0,1])
/// for stations at or below the size-percentile cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiggingInjection {
    pub size_percentile: u32,
    pub vote_shift: f64,
    pub turnout_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub provinces: usize,
    pub districts_per_province: usize,
    pub villages_per_district: usize,
    pub stations_per_village: usize,
    pub size_law: SizeLaw,
    pub moments: MomentEstimate,
    pub district_effects: DistrictEffects,
    pub stuffing: StuffingParams,
    pub rigging: Option<RiggingInjection>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    /// A clean 10^4-station election with Table-1-like national moments.
    fn default() -> Self {
        Self {
            provinces: 5,
            districts_per_province: 10,
            villages_per_district: 10,
            stations_per_village: 20,
            size_law: SizeLaw::default(),
            moments: MomentEstimate {
                mean_vote: 0.53,
                sd_vote: 0.23,
                mean_turnout: 0.86,
                sd_turnout: 0.085,
            },
            district_effects: DistrictEffects::default(),
            stuffing: StuffingParams::honest(),
            rigging: None,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn station_count(&self) -> usize {
        self.provinces * self.districts_per_province * self.villages_per_district
            * self.stations_per_village
    }

    pub fn validate(&self) -> Result<()> {
        if self.station_count() == 0 {
            return Err(Error::InvalidArgument("synthetic spec produces no stations".into()));
        }
        if self.size_law.floor == 0 || !(self.size_law.log_sd >= 0.0) {
            return Err(Error::InvalidArgument("size law needs floor >= 1 and log_sd >= 0".into()));
        }
        if self.district_effects.vote_spread < 0.0 || self.district_effects.turnout_spread < 0.0 {
            return Err(Error::InvalidArgument("district spreads must be >= 0".into()));
        }
        self.moments.validate()?;
        self.stuffing.validate()?;
        if let Some(r) = &self.rigging {
            if r.size_percentile == 0 || r.size_percentile >= 100 {
                return Err(Error::InvalidArgument("rigging percentile must lie in (0,100)".into()));
            }
            if !(0.0..=1.0).contains(&r.vote_shift) || !(0.0..=1.0).contains(&r.turnout_shift) {
                return Err(Error::InvalidArgument("rigging shifts must lie in [0,1]".into()));
            }
        }
        Ok(())
    }

    /// Same spec with fraud mechanisms switched off.
    pub fn clean(&self) -> Self {
        let mut spec = self.clone();
        spec.stuffing = StuffingParams::honest();
        spec.rigging = None;
        spec
    }
}

/// Warnings accumulated during generation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTally {
    /// Rigged stations whose shifted v or t hit the 1.0 clamp.
    pub clamped_vote: usize,
    pub clamped_turnout: usize,
}

fn district_mean(national: f64, spread: f64, rng: &mut impl Rng) -> f64 {
    if spread == 0.0 {
        return national;
    }
    let dist = Normal::new(national, spread).unwrap();
    loop {
        let x = dist.sample(rng);
        // keep district means usable as truncated-normal centers
        if (0.02..=0.98).contains(&x) {
            return x;
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(Vec<StationRecord>, GenerationTally)> {
    spec.validate()?;
    let size_dist = LogNormal::new(spec.size_law.log_mean, spec.size_law.log_sd)
        .map_err(|e| Error::InvalidArgument(format!("size law: {e}")))?;
    let extreme_dist = Normal::new(0.0, spec.stuffing.extreme_spread).unwrap();

    let mut records = Vec::with_capacity(spec.station_count());
    let mut station_index = 0u64;
    for pi in 0..spec.provinces {
        for di in 0..spec.districts_per_province {
            let district_index = (pi * spec.districts_per_province + di) as u64;
            let mut district_rng = stream_rng(spec.seed, tag::DISTRICT, district_index);
            let mean_vote = district_mean(
                spec.moments.mean_vote,
                spec.district_effects.vote_spread,
                &mut district_rng,
            );
            let mean_turnout = district_mean(
                spec.moments.mean_turnout,
                spec.district_effects.turnout_spread,
                &mut district_rng,
            );
            let vote_dist = Normal::new(mean_vote, spec.moments.sd_vote).unwrap();
            let turnout_dist = Normal::new(mean_turnout, spec.moments.sd_turnout).unwrap();

            for vi in 0..spec.villages_per_district {
                for si in 0..spec.stations_per_village {
                    let mut size_rng = stream_rng(spec.seed, tag::SIZE, station_index);
                    let n = (size_dist.sample(&mut size_rng).round() as u64).max(spec.size_law.floor);
                    let mut station_rng = stream_rng(spec.seed, tag::STATION, station_index);
                    let (valid, yes) = simulate_station(
                        n,
                        &turnout_dist,
                        &vote_dist,
                        &extreme_dist,
                        &spec.stuffing,
                        &mut station_rng,
                    );
                    records.push(StationRecord {
                        region: RegionKey {
                            province: format!("P{pi:02}"),
                            district: format!("D{di:02}"),
                            village: format!("V{vi:02}"),
                            station_id: format!("S{si:04}"),
                        },
                        eligible: n,
                        valid,
                        yes,
                    });
                    station_index += 1;
                }
            }
        }
    }

    let mut tally = GenerationTally::default();
    if let Some(rigging) = &spec.rigging {
        let mut sizes: Vec<u64> = records.iter().map(|r| r.eligible).collect();
        sizes.sort_unstable();
        let rank = ((rigging.size_percentile as f64 / 100.0 * sizes.len() as f64).ceil() as usize)
            .clamp(1, sizes.len());
        let cutoff = sizes[rank - 1];
        for r in records.iter_mut() {
            if r.eligible > cutoff {
                continue;
            }
            let (Some(v), Some(t)) = (r.vote_share(), r.rel_turnout()) else {
                continue;
            };
            let mut t_shifted = t + rigging.turnout_shift;
            if t_shifted > 1.0 {
                t_shifted = 1.0;
                tally.clamped_turnout += 1;
            }
            let mut v_shifted = v + rigging.vote_shift;
            if v_shifted > 1.0 {
                v_shifted = 1.0;
                tally.clamped_vote += 1;
            }
            r.valid = (t_shifted * r.eligible as f64).round() as u64;
            r.yes = (v_shifted * r.valid as f64).round() as u64;
        }
    }
    Ok((records, tally))
}

/// Displacement curve of one synthetic election.
pub fn synthetic_displacement_curve(
    spec: &SyntheticSpec,
    p_grid: &[u32],
) -> Result<DisplacementCurve> {
    let (records, _) = generate_synthetic(spec)?;
    let standardized = crate::fingerprint::standardize_scores(&records);
    displacement_curve(&standardized.scores, p_grid)
}

/// Acceptance region from an ensemble of clean synthetic elections.
///
/// Election i reuses `base` with fraud switched off and a seed derived
/// from `(seed, i)`.
pub fn clean_ensemble_region(
    base: &SyntheticSpec,
    elections: usize,
    p_grid: &[u32],
    confidence: f64,
    seed: u64,
) -> Result<AcceptanceRegion> {
    if elections == 0 {
        return Err(Error::EmptyInput("ensemble needs at least one election".into()));
    }
    let mut curves = Vec::with_capacity(elections);
    for i in 0..elections {
        let mut spec = base.clean();
        spec.seed = derive_seed(seed, tag::ENSEMBLE, i as u64);
        curves.push(synthetic_displacement_curve(&spec, p_grid)?);
    }
    acceptance_region(
        &curves,
        confidence,
        &format!("synthetic clean ensemble (n={elections}, seed={seed})"),
    )
}
