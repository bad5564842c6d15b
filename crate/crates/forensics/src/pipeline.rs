//! End-to-end orchestration: ingest, filter, run the enabled tests, write
//! the report plus every intermediate artifact.
//!
//! Execution status and fraud verdicts are strictly separate: a pipeline
//! run fails only when a step cannot execute, never because a test found
//! a signal.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anomaly::{assignment_test, benford_test, village_vote_totals, AssignmentConfig};
use crate::fingerprint::{
    compute_fingerprint, cumulative_curve, standardize_scores, BinGeometry, CurveMode,
    FingerprintAxes,
};
use crate::ingest::{filter_stations, parse_results, summarize, write_results, FormatConfig, StationRecord};
use crate::plot::{emit_plot, PlotArtifact, PlotKind};
use crate::report::{
    assignment_section, benford_section, rigging_section, stuffing_section, write_metadata,
    write_report, ReportBundle, ReportMetadata, VerdictThresholds,
};
use crate::rigging::{
    default_p_grid, displacement_curve, rank_provinces, read_reference_curves, acceptance_region,
    AcceptanceRegion,
};
use crate::stuffing::{estimate_moments, fit_stuffing, FitConfig};
use crate::synth::{clean_ensemble_region, generate_synthetic, SyntheticSpec};
use crate::{Error, Result};

/// Where the station records come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
}

/// Where the rigging acceptance region comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineSource {
    /// Semicolon-delimited reference displacement curves.
    ReferenceCurves(PathBuf),
    /// Clean synthetic ensemble with moments matched to the dataset.
    SyntheticEnsemble { elections: usize },
}

impl Default for BaselineSource {
    fn default() -> Self {
        BaselineSource::SyntheticEnsemble { elections: 50 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TestToggles {
    pub stuffing: bool,
    pub rigging: bool,
    pub benford: bool,
    pub assignment: bool,
}

impl Default for TestToggles {
    fn default() -> Self {
        Self {
            stuffing: true,
            rigging: true,
            benford: true,
            assignment: true,
        }
    }
}

fn default_min_electorate() -> u64 {
    100
}

fn default_confidence() -> f64 {
    0.95
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSource,
    #[serde(default)]
    pub format: FormatConfig,
    #[serde(default = "default_min_electorate")]
    pub min_electorate: u64,
    #[serde(default)]
    pub tests: TestToggles,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub assignment: AssignmentConfig,
    #[serde(default)]
    pub baseline: BaselineSource,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default)]
    pub thresholds: VerdictThresholds,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    pub fn new(input: InputSource, out_dir: PathBuf) -> Self {
        Self {
            input,
            format: FormatConfig::default(),
            min_electorate: default_min_electorate(),
            tests: TestToggles::default(),
            fit: FitConfig::default(),
            assignment: AssignmentConfig::default(),
            baseline: BaselineSource::default(),
            confidence: default_confidence(),
            thresholds: VerdictThresholds::default(),
            out_dir,
            seed: 0,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

fn load_records(config: &PipelineConfig) -> Result<Vec<StationRecord>> {
    match &config.input {
        InputSource::File(path) => {
            let file = fs::File::open(path).map_err(|source| Error::File {
                path: path.display().to_string(),
                source,
            })?;
            parse_results(file, &config.format)
        }
        InputSource::Synthetic(spec) => {
            let (records, _) = generate_synthetic(spec)?;
            Ok(records)
        }
    }
}

fn build_region(
    config: &PipelineConfig,
    records: &[StationRecord],
    p_grid: &[u32],
) -> Result<AcceptanceRegion> {
    match &config.baseline {
        BaselineSource::ReferenceCurves(path) => {
            let file = fs::File::open(path).map_err(|source| Error::File {
                path: path.display().to_string(),
                source,
            })?;
            let curves: Vec<_> = read_reference_curves(file)?
                .into_iter()
                .map(|(_, c)| c)
                .collect();
            acceptance_region(
                &curves,
                config.confidence,
                &format!("reference curves from {}", path.display()),
            )
        }
        BaselineSource::SyntheticEnsemble { elections } => {
            // clean ensemble with the dataset's own gross moments
            let mut base = match &config.input {
                InputSource::Synthetic(spec) => spec.clone(),
                InputSource::File(_) => SyntheticSpec::default(),
            };
            base.moments = estimate_moments(records)?;
            clean_ensemble_region(&base, *elections, p_grid, config.confidence, config.seed)
        }
    }
}

fn attach(test: &str, error: Error) -> Error {
    Error::TestFailed {
        test: test.to_string(),
        source: Box::new(error),
    }
}

/// Run the configured pipeline and write `report.json` plus intermediate
/// artifacts into `out_dir`.
///
/// When a test fails, the report is still written with that test marked
/// not-run, and the first failure is returned afterwards.
pub fn run_pipeline(config: &PipelineConfig) -> Result<ReportBundle> {
    let records = load_records(config)?;
    fs::create_dir_all(&config.out_dir).map_err(|source| Error::File {
        path: config.out_dir.display().to_string(),
        source,
    })?;
    let out = config.out_dir.as_path();
    let thresholds = &config.thresholds;

    let (kept, exclusion) = filter_stations(records, config.min_electorate);
    let summary = summarize(&kept)?;
    {
        let mut sink = Vec::new();
        write_results(&kept, &mut sink, &config.format)?;
        write_text(out, "stations_filtered.csv", &String::from_utf8_lossy(&sink))?;
    }
    write_json(out, "summary.json", &summary)?;
    write_json(out, "exclusion.json", &exclusion)?;

    // fingerprints and cumulative curves are cheap; always emitted
    let raw_fp = compute_fingerprint(&kept, BinGeometry::raw_default(), FingerprintAxes::Raw)?;
    write_json(out, "fingerprint_raw.json", &raw_fp)?;
    write_text(
        out,
        "fingerprint_raw.svg",
        &emit_plot(&PlotArtifact::Fingerprint(raw_fp), PlotKind::Heatmap)?,
    )?;
    let std_fp = compute_fingerprint(
        &kept,
        BinGeometry::standardized_default(),
        FingerprintAxes::Standardized,
    )?;
    if std_fp.total() > 0 {
        write_json(out, "fingerprint_standardized.json", &std_fp)?;
        write_text(
            out,
            "fingerprint_standardized.svg",
            &emit_plot(&PlotArtifact::Fingerprint(std_fp), PlotKind::Heatmap)?,
        )?;
    }
    let by_rank = cumulative_curve(&kept, CurveMode::BySizeRank)?;
    write_json(out, "cumulative_by_size_rank.json", &by_rank)?;
    write_text(
        out,
        "cumulative_by_size_rank.svg",
        &emit_plot(&PlotArtifact::CumulativeCurve(by_rank), PlotKind::Line)?,
    )?;

    let mut first_failure: Option<Error> = None;
    let fail = |test: &str, e: Error, slot: &mut Option<Error>| {
        if slot.is_none() {
            *slot = Some(attach(test, e));
        }
    };

    let stuffing = if config.tests.stuffing {
        let mut fit_config = config.fit.clone();
        fit_config.seed = crate::rng::derive_seed(config.seed, crate::rng::tag::REPLICATE, 0);
        match fit_stuffing(&kept, &fit_config) {
            Ok(fit) => {
                write_json(out, "stuffing_fit.json", &fit)?;
                stuffing_section(Some(fit), thresholds)
            }
            Err(e) => {
                fail("stuffing", e, &mut first_failure);
                stuffing_section(None, thresholds)
            }
        }
    } else {
        stuffing_section(None, thresholds)
    };

    let rigging = if config.tests.rigging {
        let p_grid = default_p_grid();
        let run = || -> Result<_> {
            let scores = standardize_scores(&kept).scores;
            let curve = displacement_curve(&scores, &p_grid)?;
            let region = build_region(config, &kept, &p_grid)?;
            // province re-standardization needs a strict small-station side
            let rank_grid: Vec<u32> = p_grid.iter().copied().filter(|&p| p < 90).collect();
            let ranking = rank_provinces(&kept, &rank_grid)?;
            Ok((curve, region, ranking))
        };
        match run() {
            Ok((curve, region, ranking)) => {
                write_json(out, "displacement_curve.json", &curve)?;
                write_json(out, "acceptance_region.json", &region)?;
                write_json(out, "province_ranking.json", &ranking)?;
                write_text(
                    out,
                    "displacement.svg",
                    &emit_plot(
                        &PlotArtifact::Displacement {
                            curve: curve.clone(),
                            region: Some(region.clone()),
                        },
                        PlotKind::Line,
                    )?,
                )?;
                rigging_section(Some(curve), Some(region), Some(ranking), thresholds)
            }
            Err(e) => {
                fail("rigging", e, &mut first_failure);
                rigging_section(None, None, None, thresholds)
            }
        }
    } else {
        rigging_section(None, None, None, thresholds)
    };

    let benford = if config.tests.benford {
        let run = || -> Result<_> {
            let station_votes: Vec<u64> = kept.iter().map(|r| r.yes).collect();
            let station = benford_test(&station_votes, "station")?;
            let village = benford_test(&village_vote_totals(&kept), "village")?;
            Ok(vec![station, village])
        };
        match run() {
            Ok(results) => {
                write_json(out, "benford.json", &results)?;
                benford_section(results, thresholds)
            }
            Err(e) => {
                fail("benford", e, &mut first_failure);
                benford_section(Vec::new(), thresholds)
            }
        }
    } else {
        benford_section(Vec::new(), thresholds)
    };

    let assignment = if config.tests.assignment {
        let mut assignment_config = config.assignment.clone();
        assignment_config.seed =
            crate::rng::derive_seed(config.seed, crate::rng::tag::PERMUTATION, 0);
        match assignment_test(&kept, &assignment_config) {
            Ok(result) => {
                write_json(out, "assignment.json", &result)?;
                assignment_section(Some(result), thresholds)
            }
            Err(e) => {
                fail("assignment", e, &mut first_failure);
                assignment_section(None, thresholds)
            }
        }
    } else {
        assignment_section(None, thresholds)
    };

    let report = ReportBundle {
        seed: config.seed,
        min_electorate: config.min_electorate,
        thresholds: thresholds.clone(),
        summary,
        exclusion,
        stuffing,
        rigging,
        benford,
        assignment,
    };
    {
        let path = out.join("report.json");
        let file = fs::File::create(&path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        write_report(file, &report)?;
    }
    {
        let path = out.join("metadata.json");
        let file = fs::File::create(&path).map_err(|source| Error::File {
            path: path.display().to_string(),
            source,
        })?;
        write_metadata(file, &ReportMetadata::now())?;
    }

    match first_failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    fn fast_spec() -> SyntheticSpec {
        SyntheticSpec {
            provinces: 2,
            districts_per_province: 3,
            villages_per_district: 4,
            stations_per_village: 15,
            seed: 34,
            ..SyntheticSpec::default()
        }
    }

    fn fast_config(dir: &Path) -> PipelineConfig {
        let mut config = PipelineConfig::new(InputSource::Synthetic(fast_spec()), dir.to_path_buf());
        config.fit = FitConfig {
            replicates: 2,
            max_iterations: 40,
            ..FitConfig::default()
        };
        config.baseline = BaselineSource::SyntheticEnsemble { elections: 40 };
        config.seed = 3;
        config
    }

    #[test]
    fn missing_input_names_the_path_and_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut config = PipelineConfig::new(
            InputSource::File(PathBuf::from("/nonexistent/results.csv")),
            out.clone(),
        );
        config.tests = TestToggles {
            stuffing: false,
            rigging: false,
            benford: false,
            assignment: false,
        };
        let err = run_pipeline(&config).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/results.csv"));
        assert!(!out.exists());
    }

    #[test]
    fn clean_synthetic_run_writes_report_and_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fast_config(dir.path());
        // keep the slow fit out of this smoke test
        config.tests.stuffing = false;
        let report = run_pipeline(&config).unwrap();
        assert_eq!(report.stuffing.verdict, Verdict::NotRun);
        assert_eq!(report.rigging.verdict, Verdict::NoSignal);
        assert_eq!(report.benford.verdict, Verdict::NoSignal);
        // the generator draws station rates independently, so within-village
        // spread exceeds the random-split null by construction
        assert_eq!(report.assignment.verdict, Verdict::Signal);
        for name in [
            "report.json",
            "metadata.json",
            "summary.json",
            "stations_filtered.csv",
            "fingerprint_raw.svg",
            "displacement_curve.json",
            "benford.json",
            "assignment.json",
        ] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let back = crate::report::read_report(
            fs::File::open(dir.path().join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn reports_are_deterministic_for_a_fixed_seed() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut a = fast_config(dir_a.path());
        let mut b = fast_config(dir_b.path());
        a.tests.stuffing = false;
        b.tests.stuffing = false;
        run_pipeline(&a).unwrap();
        run_pipeline(&b).unwrap();
        let bytes_a = fs::read(dir_a.path().join("report.json")).unwrap();
        let bytes_b = fs::read(dir_b.path().join("report.json")).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn failing_test_is_marked_not_run_and_propagated() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fast_config(dir.path());
        config.tests = TestToggles {
            stuffing: false,
            rigging: true,
            benford: false,
            assignment: false,
        };
        // a reference file that does not exist makes the rigging test fail
        config.baseline = BaselineSource::ReferenceCurves(PathBuf::from("/nonexistent/ref.csv"));
        let err = run_pipeline(&config).unwrap_err();
        match err {
            Error::TestFailed { test, .. } => assert_eq!(test, "rigging"),
            other => panic!("unexpected error {other}"),
        }
        // the partial report still exists with rigging marked not-run
        let report = crate::report::read_report(
            fs::File::open(dir.path().join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report.rigging.verdict, Verdict::NotRun);
    }

    #[test]
    fn config_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let config = fast_config(dir.path());
        let path = dir.path().join("config.json");
        fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
        let back = PipelineConfig::from_json_file(&path).unwrap();
        assert_eq!(back.min_electorate, config.min_electorate);
        assert_eq!(back.seed, config.seed);
        assert!(matches!(back.input, InputSource::Synthetic(_)));
    }
}
