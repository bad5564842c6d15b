//! Command-line entry point for the election forensics toolkit.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use election_forensics::anomaly::{assignment_test, benford_test, village_vote_totals, AssignmentConfig};
use election_forensics::fingerprint::{
    compute_fingerprint, cumulative_curve, standardize_scores, BinGeometry, CumulativeCurve,
    CurveMode, Fingerprint, FingerprintAxes,
};
use election_forensics::ingest::{
    filter_stations, parse_results, summarize, write_results, FormatConfig, StationRecord,
};
use election_forensics::pipeline::{run_pipeline, BaselineSource, InputSource, PipelineConfig};
use election_forensics::plot::{emit_plot, PlotArtifact, PlotKind};
use election_forensics::rigging::{
    acceptance_region, default_p_grid, displacement_curve, rank_provinces, read_reference_curves,
    write_reference_curves, AcceptanceRegion, DisplacementCurve,
};
use election_forensics::stuffing::{fit_stuffing, FitConfig};
use election_forensics::synth::{clean_ensemble_region, generate_synthetic, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "elfo",
    version,
    about = "Statistical election forensics: fingerprints, fraud-model fits, and anomaly tests"
)]
struct Cli {
    /// Station-level results file (CSV, semicolon-delimited by default)
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Pipeline configuration file (JSON); flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every stochastic step [default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exclude stations with a smaller electorate [default: 100]
    #[arg(long, global = true)]
    min_electorate: Option<u64>,

    /// Directory for reports, artifacts, and figures [default: out]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxesArg {
    Raw,
    Standardized,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Heatmap,
    Contour,
    Line,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveArg {
    TurnoutLevel,
    SizeRank,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, validate, and filter a results file; writes the kept records
    Ingest,
    /// Print dataset summary statistics as JSON
    Summarize,
    /// Compute vote-turnout fingerprints and cumulative curves
    Fingerprint {
        /// Coordinate system of the fingerprint
        #[arg(long, value_enum, default_value_t = AxesArg::Raw)]
        axes: AxesArg,
        /// Also write the cumulative curve in this ordering
        #[arg(long, value_enum)]
        curve: Option<CurveArg>,
    },
    /// Fit the ballot-stuffing model to the vote-share distribution
    Stuffing {
        /// Independent optimizer replicates
        #[arg(long, default_value_t = 10)]
        replicates: usize,
    },
    /// Displacement test of small stations against an acceptance region
    Rigging {
        /// Reference displacement curves (semicolon CSV); otherwise a
        /// synthetic clean ensemble is generated
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Ensemble size when no reference file is given
        #[arg(long, default_value_t = 50)]
        elections: usize,
        /// Two-sided confidence of the region
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Second-digit distribution test at station and village level
    Benford,
    /// Within-village voter-assignment randomness test
    Assignment {
        /// Monte Carlo permutations for low-variance villages (0 = analytic)
        #[arg(long, default_value_t = 0)]
        permutations: usize,
    },
    /// Generate a synthetic election and write it as a results file
    Synth {
        /// Synthetic spec (JSON); defaults to a clean 10^4-station election
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Also write the clean-ensemble displacement curves for reuse
        #[arg(long, default_value_t = 0)]
        reference_curves: usize,
    },
    /// Run the full pipeline and write a consolidated report
    Report,
    /// Render a serialized artifact (JSON) as an SVG figure
    Plot {
        /// Artifact file: fingerprint, cumulative curve, or displacement curve
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Acceptance region (JSON) shaded behind a displacement curve
        #[arg(long)]
        region: Option<PathBuf>,
        /// Output SVG path; defaults to the artifact path with .svg
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

struct Ctx {
    input: Option<PathBuf>,
    config: Option<PathBuf>,
    seed: u64,
    min_electorate: u64,
    out_dir: PathBuf,
}

impl Ctx {
    fn records(&self) -> Result<Vec<StationRecord>> {
        let path = self
            .input
            .as_ref()
            .context("this command needs --input pointing at a results file")?;
        let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let records = parse_results(file, &FormatConfig::default())?;
        Ok(records)
    }

    fn filtered(&self) -> Result<Vec<StationRecord>> {
        let (kept, _) = filter_stations(self.records()?, self.min_electorate);
        if kept.is_empty() {
            bail!("no stations left after the electorate filter");
        }
        Ok(kept)
    }

    fn ensure_out_dir(&self) -> Result<()> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("cannot create {}", self.out_dir.display()))
    }

    fn write_json<T: serde::Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.ensure_out_dir()?;
        let path = self.out_dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        self.ensure_out_dir()?;
        let path = self.out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let ctx = Ctx {
        input: cli.input.clone(),
        config: cli.config.clone(),
        seed: cli.seed.unwrap_or(0),
        min_electorate: cli.min_electorate.unwrap_or(100),
        out_dir: cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
    };

    match cli.command {
        Command::Ingest => {
            let records = ctx.records()?;
            let total = records.len();
            let (kept, exclusion) = filter_stations(records, ctx.min_electorate);
            let mut sink = Vec::new();
            write_results(&kept, &mut sink, &FormatConfig::default())?;
            let path = ctx.write_text("stations_filtered.csv", &String::from_utf8_lossy(&sink))?;
            ctx.write_json("exclusion.json", &exclusion)?;
            eprintln!(
                "parsed {total} stations, kept {} (excluded {}), wrote {}",
                kept.len(),
                exclusion.excluded_stations,
                path.display()
            );
        }
        Command::Summarize => {
            let kept = ctx.filtered()?;
            print_json(&summarize(&kept)?)?;
        }
        Command::Fingerprint { axes, curve } => {
            let kept = ctx.filtered()?;
            let (geometry, axes, stem) = match axes {
                AxesArg::Raw => (BinGeometry::raw_default(), FingerprintAxes::Raw, "fingerprint_raw"),
                AxesArg::Standardized => (
                    BinGeometry::standardized_default(),
                    FingerprintAxes::Standardized,
                    "fingerprint_standardized",
                ),
            };
            let fp = compute_fingerprint(&kept, geometry, axes)?;
            ctx.write_json(&format!("{stem}.json"), &fp)?;
            let svg = emit_plot(&PlotArtifact::Fingerprint(fp), PlotKind::Heatmap)?;
            let path = ctx.write_text(&format!("{stem}.svg"), &svg)?;
            eprintln!("wrote {}", path.display());
            if let Some(mode) = curve {
                let (mode, stem) = match mode {
                    CurveArg::TurnoutLevel => (CurveMode::ByTurnoutLevel, "cumulative_by_turnout"),
                    CurveArg::SizeRank => (CurveMode::BySizeRank, "cumulative_by_size_rank"),
                };
                let c = cumulative_curve(&kept, mode)?;
                ctx.write_json(&format!("{stem}.json"), &c)?;
                let svg = emit_plot(&PlotArtifact::CumulativeCurve(c), PlotKind::Line)?;
                let path = ctx.write_text(&format!("{stem}.svg"), &svg)?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Stuffing { replicates } => {
            let kept = ctx.filtered()?;
            let config = FitConfig {
                replicates,
                seed: ctx.seed,
                ..FitConfig::default()
            };
            let fit = fit_stuffing(&kept, &config)?;
            ctx.write_json("stuffing_fit.json", &fit)?;
            print_json(&fit)?;
        }
        Command::Rigging {
            reference,
            elections,
            confidence,
        } => {
            let kept = ctx.filtered()?;
            let p_grid = default_p_grid();
            let scores = standardize_scores(&kept).scores;
            let curve = displacement_curve(&scores, &p_grid)?;
            let region: AcceptanceRegion = match reference {
                Some(path) => {
                    let file = fs::File::open(&path)
                        .with_context(|| format!("cannot open {}", path.display()))?;
                    let curves: Vec<DisplacementCurve> = read_reference_curves(file)?
                        .into_iter()
                        .map(|(_, c)| c)
                        .collect();
                    acceptance_region(&curves, confidence, &format!("reference {}", path.display()))?
                }
                None => {
                    let mut base = SyntheticSpec::default();
                    base.moments = election_forensics::stuffing::estimate_moments(&kept)?;
                    clean_ensemble_region(&base, elections, &p_grid, confidence, ctx.seed)?
                }
            };
            let rank_grid: Vec<u32> = p_grid.iter().copied().filter(|&p| p < 90).collect();
            let ranking = rank_provinces(&kept, &rank_grid)?;
            ctx.write_json("displacement_curve.json", &curve)?;
            ctx.write_json("acceptance_region.json", &region)?;
            ctx.write_json("province_ranking.json", &ranking)?;
            let svg = emit_plot(
                &PlotArtifact::Displacement {
                    curve: curve.clone(),
                    region: Some(region.clone()),
                },
                PlotKind::Line,
            )?;
            ctx.write_text("displacement.svg", &svg)?;
            let exceedances = region.exceedances(&curve);
            eprintln!(
                "exceedances at {} of {} grid points (longest run {})",
                exceedances.len(),
                p_grid.len(),
                region.longest_exceedance_run(&curve)
            );
        }
        Command::Benford => {
            let kept = ctx.filtered()?;
            let station_votes: Vec<u64> = kept.iter().map(|r| r.yes).collect();
            let results = vec![
                benford_test(&station_votes, "station")?,
                benford_test(&village_vote_totals(&kept), "village")?,
            ];
            ctx.write_json("benford.json", &results)?;
            print_json(&results)?;
        }
        Command::Assignment { permutations } => {
            let kept = ctx.filtered()?;
            let config = AssignmentConfig {
                permutations,
                seed: ctx.seed,
                ..AssignmentConfig::default()
            };
            let result = assignment_test(&kept, &config)?;
            ctx.write_json("assignment.json", &result)?;
            eprintln!(
                "exceedance {:.4} over {} stations (binomial p = {:.3e})",
                result.exceedance_fraction, result.station_count, result.binomial_p_value
            );
        }
        Command::Synth {
            spec,
            reference_curves,
        } => {
            let mut spec: SyntheticSpec = match spec {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("cannot open {}", path.display()))?;
                    serde_json::from_str(&text)?
                }
                None => SyntheticSpec::default(),
            };
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let (records, tally) = generate_synthetic(&spec)?;
            let mut sink = Vec::new();
            write_results(&records, &mut sink, &FormatConfig::default())?;
            let path = ctx.write_text("synthetic.csv", &String::from_utf8_lossy(&sink))?;
            ctx.write_json("synthetic_tally.json", &tally)?;
            eprintln!("wrote {} stations to {}", records.len(), path.display());
            if reference_curves > 0 {
                let p_grid = default_p_grid();
                let curves: Result<Vec<_>> = (0..reference_curves)
                    .map(|i| {
                        let mut clean = spec.clean();
                        clean.seed = election_forensics::rng::derive_seed(
                            spec.seed,
                            election_forensics::rng::tag::ENSEMBLE,
                            i as u64,
                        );
                        let c = election_forensics::synth::synthetic_displacement_curve(
                            &clean, &p_grid,
                        )?;
                        Ok((format!("clean-{i:03}"), c))
                    })
                    .collect();
                let curves = curves?;
                let mut sink = Vec::new();
                write_reference_curves(&curves, &mut sink)?;
                let path = ctx.write_text("reference_curves.csv", &String::from_utf8_lossy(&sink))?;
                eprintln!("wrote {} reference curves to {}", curves.len(), path.display());
            }
        }
        Command::Report => {
            let mut config = match &ctx.config {
                Some(path) => PipelineConfig::from_json_file(path)?,
                None => {
                    let input = ctx
                        .input
                        .clone()
                        .context("report needs --config or --input")?;
                    PipelineConfig::new(InputSource::File(input), ctx.out_dir.clone())
                }
            };
            if let Some(input) = &ctx.input {
                config.input = InputSource::File(input.clone());
            }
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            if let Some(m) = cli.min_electorate {
                config.min_electorate = m;
            }
            if let Some(dir) = &cli.out_dir {
                config.out_dir = dir.clone();
            }
            if let BaselineSource::SyntheticEnsemble { elections } = config.baseline {
                if elections == 0 {
                    bail!("synthetic baseline needs at least one election");
                }
            }
            let report = run_pipeline(&config)?;
            for (name, verdict) in report.verdicts() {
                eprintln!("{name}: {verdict:?}");
            }
            eprintln!("report written to {}", config.out_dir.join("report.json").display());
        }
        Command::Plot {
            artifact,
            kind,
            region,
            output,
        } => {
            let text = fs::read_to_string(&artifact)
                .with_context(|| format!("cannot open {}", artifact.display()))?;
            let plot_artifact = match kind {
                KindArg::Heatmap | KindArg::Contour => {
                    let fp: Fingerprint = serde_json::from_str(&text)
                        .context("expected a fingerprint artifact for this kind")?;
                    PlotArtifact::Fingerprint(fp)
                }
                KindArg::Line => {
                    if let Ok(curve) = serde_json::from_str::<CumulativeCurve>(&text) {
                        PlotArtifact::CumulativeCurve(curve)
                    } else {
                        let curve: DisplacementCurve = serde_json::from_str(&text)
                            .context("expected a cumulative or displacement curve artifact")?;
                        let region = match region {
                            Some(path) => {
                                let text = fs::read_to_string(&path)
                                    .with_context(|| format!("cannot open {}", path.display()))?;
                                Some(serde_json::from_str::<AcceptanceRegion>(&text)?)
                            }
                            None => None,
                        };
                        PlotArtifact::Displacement { curve, region }
                    }
                }
            };
            let plot_kind = match kind {
                KindArg::Heatmap => PlotKind::Heatmap,
                KindArg::Contour => PlotKind::Contour,
                KindArg::Line => PlotKind::Line,
            };
            let svg = emit_plot(&plot_artifact, plot_kind)?;
            let out = output.unwrap_or_else(|| artifact.with_extension("svg"));
            fs::write(&out, svg).with_context(|| format!("cannot write {}", out.display()))?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}
