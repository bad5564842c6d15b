//! Consolidated report: every test's numbers plus a verdict per test.
//!
//! Verdicts are pure functions of the stored numbers and the thresholds
//! recorded alongside them, so a report can be audited without re-running
//! anything. Timestamps live in a separate metadata document to keep the
//! report itself byte-identical across reruns with the same seed.

use std::io::{Read, Write};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::anomaly::{AssignmentResult, BenfordResult};
use crate::ingest::{DatasetSummary, ExclusionSummary};
use crate::rigging::{AcceptanceRegion, DisplacementCurve, ProvinceRanking};
use crate::stuffing::StuffingFit;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Signal,
    NoSignal,
    NotRun,
}

/// Decision thresholds, stored in the report so verdicts stay auditable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictThresholds {
    /// Stuffing signals when f exceeds this many replicate spreads.
    pub stuffing_sigma: f64,
    /// Rigging signals at this many consecutive out-of-region grid points.
    pub rigging_run_length: usize,
    /// Benford signals when the posterior of the null drops below this.
    pub benford_posterior: f64,
    /// Assignment signals when the binomial p-value drops below this.
    pub assignment_p: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self {
            stuffing_sigma: 2.0,
            rigging_run_length: 3,
            benford_posterior: 0.05,
            assignment_p: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StuffingSection {
    pub fit: Option<StuffingFit>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiggingSection {
    pub curve: Option<DisplacementCurve>,
    pub region: Option<AcceptanceRegion>,
    pub ranking: Option<ProvinceRanking>,
    /// Grid percentiles where the curve leaves the region.
    pub exceedances: Vec<u32>,
    pub longest_exceedance_run: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordSection {
    /// One result per aggregation level (station, village, ...).
    pub results: Vec<BenfordResult>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSection {
    pub result: Option<AssignmentResult>,
    pub verdict: Verdict,
}

/// The full pipeline output for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub min_electorate: u64,
    pub thresholds: VerdictThresholds,
    pub summary: DatasetSummary,
    pub exclusion: ExclusionSummary,
    pub stuffing: StuffingSection,
    pub rigging: RiggingSection,
    pub benford: BenfordSection,
    pub assignment: AssignmentSection,
}

impl ReportBundle {
    pub fn verdicts(&self) -> [(&'static str, Verdict); 4] {
        [
            ("stuffing", self.stuffing.verdict),
            ("rigging", self.rigging.verdict),
            ("benford", self.benford.verdict),
            ("assignment", self.assignment.verdict),
        ]
    }
}

/// Run facts that may differ between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub created_unix_seconds: u64,
    pub tool_version: String,
}

impl ReportMetadata {
    pub fn now() -> Self {
        let created_unix_seconds = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            created_unix_seconds,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn stuffing_section(fit: Option<StuffingFit>, thresholds: &VerdictThresholds) -> StuffingSection {
    let verdict = match &fit {
        None => Verdict::NotRun,
        Some(f) => {
            if f.params.incremental > thresholds.stuffing_sigma * f.uncertainty_incremental {
                Verdict::Signal
            } else {
                Verdict::NoSignal
            }
        }
    };
    StuffingSection { fit, verdict }
}

pub fn rigging_section(
    curve: Option<DisplacementCurve>,
    region: Option<AcceptanceRegion>,
    ranking: Option<ProvinceRanking>,
    thresholds: &VerdictThresholds,
) -> RiggingSection {
    let (exceedances, longest_run) = match (&curve, &region) {
        (Some(c), Some(r)) => (r.exceedances(c), r.longest_exceedance_run(c)),
        _ => (Vec::new(), 0),
    };
    let verdict = match (&curve, &region) {
        (Some(_), Some(_)) => {
            if longest_run >= thresholds.rigging_run_length {
                Verdict::Signal
            } else {
                Verdict::NoSignal
            }
        }
        _ => Verdict::NotRun,
    };
    RiggingSection {
        curve,
        region,
        ranking,
        exceedances,
        longest_exceedance_run: longest_run,
        verdict,
    }
}

pub fn benford_section(results: Vec<BenfordResult>, thresholds: &VerdictThresholds) -> BenfordSection {
    let verdict = if results.is_empty() {
        Verdict::NotRun
    } else if results.iter().any(|r| r.posterior < thresholds.benford_posterior) {
        Verdict::Signal
    } else {
        Verdict::NoSignal
    };
    BenfordSection { results, verdict }
}

pub fn assignment_section(
    result: Option<AssignmentResult>,
    thresholds: &VerdictThresholds,
) -> AssignmentSection {
    let verdict = match &result {
        None => Verdict::NotRun,
        Some(r) => {
            if r.binomial_p_value < thresholds.assignment_p {
                Verdict::Signal
            } else {
                Verdict::NoSignal
            }
        }
    };
    AssignmentSection { result, verdict }
}

pub fn write_report<W: Write>(mut sink: W, report: &ReportBundle) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    sink.write_all(text.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

pub fn read_report<R: Read>(mut source: R) -> Result<ReportBundle> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyInput("report document is empty".into()));
    }
    Ok(serde_json::from_str(&text)?)
}

pub fn write_metadata<W: Write>(mut sink: W, metadata: &ReportMetadata) -> Result<()> {
    let text = serde_json::to_string_pretty(metadata)?;
    sink.write_all(text.as_bytes())?;
    sink.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::standardize_scores;
    use crate::ingest::{filter_stations, summarize, RegionKey, StationRecord};
    use crate::rigging::{acceptance_region, displacement_curve, default_p_grid};
    use crate::stuffing::{fit_stuffing, simulate_forward, FitConfig, MomentEstimate, StuffingParams};

    fn records() -> Vec<StationRecord> {
        let moments = MomentEstimate {
            mean_vote: 0.5,
            sd_vote: 0.15,
            mean_turnout: 0.8,
            sd_turnout: 0.08,
        };
        let sizes: Vec<u64> = (0..400u64).map(|i| 150 + (i * 13) % 400).collect();
        simulate_forward(&moments, &StuffingParams::honest(), &sizes, 99).unwrap()
    }

    fn bundle() -> ReportBundle {
        let recs = records();
        let thresholds = VerdictThresholds::default();
        let (kept, exclusion) = filter_stations(recs, 100);
        let summary = summarize(&kept).unwrap();
        let grid = default_p_grid();
        let curve = displacement_curve(&standardize_scores(&kept).scores, &grid).unwrap();
        let reference: Vec<DisplacementCurve> = (0..20u64)
            .map(|s| {
                let shifted: Vec<StationRecord> = kept
                    .iter()
                    .enumerate()
                    .map(|(i, r)| {
                        let region = RegionKey {
                            station_id: format!("{}-{s}", r.region.station_id),
                            ..r.region.clone()
                        };
                        StationRecord::new(
                            region,
                            r.eligible + (i as u64 + s) % 7,
                            r.valid,
                            r.yes,
                        )
                        .unwrap()
                    })
                    .collect();
                displacement_curve(&standardize_scores(&shifted).scores, &grid).unwrap()
            })
            .collect();
        let region = acceptance_region(&reference, 0.95, "test ensemble").unwrap();
        ReportBundle {
            seed: 42,
            min_electorate: 100,
            thresholds: thresholds.clone(),
            summary,
            exclusion,
            stuffing: stuffing_section(None, &thresholds),
            rigging: rigging_section(Some(curve), Some(region), None, &thresholds),
            benford: benford_section(Vec::new(), &thresholds),
            assignment: assignment_section(None, &thresholds),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let report = bundle();
        let mut buffer = Vec::new();
        write_report(&mut buffer, &report).unwrap();
        let back = read_report(buffer.as_slice()).unwrap();
        assert_eq!(report, back);
        // and the re-serialization is byte-identical
        let mut again = Vec::new();
        write_report(&mut again, &back).unwrap();
        assert_eq!(buffer, again);
    }

    #[test]
    fn missing_tests_are_marked_not_run() {
        let report = bundle();
        assert_eq!(report.stuffing.verdict, Verdict::NotRun);
        assert_eq!(report.benford.verdict, Verdict::NotRun);
        assert_eq!(report.assignment.verdict, Verdict::NotRun);
    }

    #[test]
    fn stuffing_verdict_follows_the_sigma_rule() {
        let moments = MomentEstimate {
            mean_vote: 0.5,
            sd_vote: 0.15,
            mean_turnout: 0.8,
            sd_turnout: 0.08,
        };
        let sizes: Vec<u64> = (0..3000u64).map(|i| 150 + (i * 13) % 400).collect();
        let recs = simulate_forward(&moments, &StuffingParams::new(0.3, 0.0, 1.3), &sizes, 5).unwrap();
        let config = FitConfig {
            replicates: 3,
            max_iterations: 200,
            ..FitConfig::default()
        };
        let fit = fit_stuffing(&recs, &config).unwrap();
        let thresholds = VerdictThresholds::default();
        let section = stuffing_section(Some(fit.clone()), &thresholds);
        let expected = if fit.params.incremental > 2.0 * fit.uncertainty_incremental {
            Verdict::Signal
        } else {
            Verdict::NoSignal
        };
        assert_eq!(section.verdict, expected);
        // a fraud fraction of 0.3 on 3000 stations is unambiguous
        assert_eq!(section.verdict, Verdict::Signal);
    }

    #[test]
    fn benford_verdict_uses_the_posterior_threshold() {
        let thresholds = VerdictThresholds::default();
        let values: Vec<u64> = (0..200u64).map(|i| 100 + i * 37 % 900).collect();
        let result = crate::anomaly::benford_test(&values, "station").unwrap();
        let section = benford_section(vec![result.clone()], &thresholds);
        let expected = if result.posterior < 0.05 {
            Verdict::Signal
        } else {
            Verdict::NoSignal
        };
        assert_eq!(section.verdict, expected);
    }

    #[test]
    fn verdicts_are_reconstructible_from_stored_numbers() {
        let report = bundle();
        let r = &report.rigging;
        let (curve, region) = (r.curve.as_ref().unwrap(), r.region.as_ref().unwrap());
        assert_eq!(r.exceedances, region.exceedances(curve));
        assert_eq!(r.longest_exceedance_run, region.longest_exceedance_run(curve));
        let rederived = if r.longest_exceedance_run >= report.thresholds.rigging_run_length {
            Verdict::Signal
        } else {
            Verdict::NoSignal
        };
        assert_eq!(r.verdict, rederived);
    }

    #[test]
    fn empty_report_document_is_rejected() {
        assert!(matches!(read_report("  \n".as_bytes()), Err(Error::EmptyInput(_))));
    }
}
