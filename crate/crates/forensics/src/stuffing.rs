//! Parametric ballot-stuffing model.
//!
//! The model draws independent, truncated-normal vote-share and turnout
//! rates per station. A fraction `incremental` of stations gets stuffed:
//! an intensity x ~ U[0,1] moves a share x of the non-voters into the urn
//! (counted for 'Yes') and flips a share x^shape of the 'No' votes. A
//! fraction `extreme` does the same with an intensity concentrated at 1,
//! driving both turnout and vote share to ~100%. Fitting minimizes the
//! squared distance between the observed and simulated vote-share
//! histograms over (incremental, extreme, shape).

use crate::fingerprint::{compute_fingerprint, BinGeometry, FingerprintAxes};
use crate::ingest::{population_moments, RegionKey, StationRecord};
use crate::optim::{nelder_mead, SimplexOptions};
use crate::rng::{derive_seed, stream_rng, tag};
use crate::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Empirical means and spreads of vote share and relative turnout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean_vote: f64,
    pub sd_vote: f64,
    pub mean_turnout: f64,
    pub sd_turnout: f64,
}

impl MomentEstimate {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_unit(self.mean_vote) || !in_unit(self.mean_turnout) {
            return Err(Error::InvalidArgument(
                "moment means must lie strictly inside (0,1)".into(),
            ));
        }
        if !(self.sd_vote > 0.0) || !(self.sd_turnout > 0.0) {
            return Err(Error::InvalidArgument("moment spreads must be positive".into()));
        }
        Ok(())
    }
}

/// Population moments of v and t over the records where they are defined.
pub fn estimate_moments(records: &[StationRecord]) -> Result<MomentEstimate> {
    let votes: Vec<f64> = records.iter().filter_map(|r| r.vote_share()).collect();
    let turnouts: Vec<f64> = records.iter().filter_map(|r| r.rel_turnout()).collect();
    moments_of(&votes, &turnouts)
}

/// Iteratively trimmed moments: drop values farther than `sigmas` spreads
/// from the running mean, `rounds` times. Robust to fraud contamination in
/// the tails.
pub fn estimate_moments_trimmed(
    records: &[StationRecord],
    sigmas: f64,
    rounds: usize,
) -> Result<MomentEstimate> {
    let mut votes: Vec<f64> = records.iter().filter_map(|r| r.vote_share()).collect();
    let mut turnouts: Vec<f64> = records.iter().filter_map(|r| r.rel_turnout()).collect();
    for _ in 0..rounds {
        for values in [&mut votes, &mut turnouts] {
            let m = population_moments(values.iter().copied());
            if m.count < 2 || m.std_dev <= 0.0 {
                break;
            }
            values.retain(|&x| (x - m.mean).abs() <= sigmas * m.std_dev);
        }
    }
    moments_of(&votes, &turnouts)
}

fn moments_of(votes: &[f64], turnouts: &[f64]) -> Result<MomentEstimate> {
    if votes.len() < 2 || turnouts.len() < 2 {
        return Err(Error::EmptyInput(
            "moment estimation needs at least 2 records with defined rates".into(),
        ));
    }
    let v = population_moments(votes.iter().copied());
    let t = population_moments(turnouts.iter().copied());
    let est = MomentEstimate {
        mean_vote: v.mean,
        sd_vote: v.std_dev,
        mean_turnout: t.mean,
        sd_turnout: t.std_dev,
    };
    est.validate().map_err(|_| {
        Error::InvalidArgument("degenerate moments (zero spread or mean at the boundary)".into())
    })?;
    Ok(est)
}

pub const DEFAULT_EXTREME_SPREAD: f64 = 0.075;

fn default_extreme_spread() -> f64 {
    DEFAULT_EXTREME_SPREAD
}

/// Fraud fractions and shape of the stuffing mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StuffingParams {
    /// Fraction of stations with incremental stuffing.
    pub incremental: f64,
    /// Fraction of stations with extreme stuffing (inflation to ~100%).
    pub extreme: f64,
    /// Exponent of the vote-flipping intensity; > 1 means stuffing dominates.
    pub shape: f64,
    /// Spread of the extreme-intensity law 1 - |Normal(0, spread)|.
    #[serde(default = "default_extreme_spread")]
    pub extreme_spread: f64,
}

impl StuffingParams {
    pub fn new(incremental: f64, extreme: f64, shape: f64) -> Self {
        Self {
            incremental,
            extreme,
            shape,
            extreme_spread: DEFAULT_EXTREME_SPREAD,
        }
    }

    pub fn honest() -> Self {
        Self::new(0.0, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.incremental) || !unit(self.extreme) {
            return Err(Error::InvalidArgument("fraud fractions must lie in [0,1]".into()));
        }
        if self.incremental + self.extreme > 1.0 {
            return Err(Error::InvalidArgument(
                "incremental + extreme fractions must not exceed 1".into(),
            ));
        }
        if !(self.shape > 0.0) || !(self.extreme_spread > 0.0) {
            return Err(Error::InvalidArgument("shape and extreme spread must be positive".into()));
        }
        Ok(())
    }
}

/// Stuff and flip: move `x` of the non-voters into the urn for 'Yes' and
/// flip `x^shape` of the 'No' votes.
fn fraud_counts(n: u64, honest_t: u64, honest_v: u64, x: f64, shape: f64) -> (u64, u64) {
    let stuffed = (x * (n - honest_t) as f64).round() as u64;
    let flipped = (x.powf(shape) * (honest_t - honest_v) as f64).round() as u64;
    (honest_t + stuffed, honest_v + stuffed + flipped)
}

fn truncated_normal<R: Rng>(dist: &Normal<f64>, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
}

/// Simulate one station of size `n`; returns (valid, yes).
///
/// The draw order (turnout, vote share, fraud selector, both intensities)
/// is fixed and every draw is made regardless of whether it is used, so the
/// output is monotone in the fraud fractions under a fixed stream.
pub(crate) fn simulate_station<R: Rng>(
    n: u64,
    turnout_dist: &Normal<f64>,
    vote_dist: &Normal<f64>,
    extreme_dist: &Normal<f64>,
    params: &StuffingParams,
    rng: &mut R,
) -> (u64, u64) {
    let t_hat = truncated_normal(turnout_dist, rng);
    let v_hat = truncated_normal(vote_dist, rng);
    let selector: f64 = rng.random();
    let x_incremental: f64 = rng.random();
    let x_extreme = loop {
        let z: f64 = extreme_dist.sample(rng);
        if z.abs() <= 1.0 {
            break 1.0 - z.abs();
        }
    };

    let honest_t = (t_hat * n as f64).round() as u64;
    let honest_v = (v_hat * honest_t as f64).round() as u64;

    if selector < params.incremental {
        fraud_counts(n, honest_t, honest_v, x_incremental, params.shape)
    } else if selector >= 1.0 - params.extreme {
        fraud_counts(n, honest_t, honest_v, x_extreme, params.shape)
    } else {
        (honest_t, honest_v)
    }
}

/// Simulate an election over the given station sizes.
///
/// Station i draws from a stream keyed by `(seed, i)`, so the output is
/// deterministic and independent of evaluation order.
pub fn simulate_forward(
    moments: &MomentEstimate,
    params: &StuffingParams,
    station_sizes: &[u64],
    seed: u64,
) -> Result<Vec<StationRecord>> {
    moments.validate()?;
    params.validate()?;
    if station_sizes.is_empty() {
        return Err(Error::EmptyInput("simulation needs at least one station size".into()));
    }
    let turnout_dist = Normal::new(moments.mean_turnout, moments.sd_turnout).unwrap();
    let vote_dist = Normal::new(moments.mean_vote, moments.sd_vote).unwrap();
    let extreme_dist = Normal::new(0.0, params.extreme_spread).unwrap();

    let mut records = Vec::with_capacity(station_sizes.len());
    for (i, &n) in station_sizes.iter().enumerate() {
        let mut rng = stream_rng(seed, tag::STATION, i as u64);
        let (valid, yes) =
            simulate_station(n, &turnout_dist, &vote_dist, &extreme_dist, params, &mut rng);
        debug_assert!(yes <= valid && valid <= n);
        records.push(StationRecord {
            region: RegionKey {
                province: "SIM".into(),
                district: "SIM".into(),
                village: "SIM".into(),
                station_id: i.to_string(),
            },
            eligible: n,
            valid,
            yes,
        });
    }
    Ok(records)
}

/// Normalized vote-share histogram over [0,1]; stations without a defined
/// share are ignored.
pub fn vote_share_histogram(records: &[StationRecord], bins: usize) -> Vec<f64> {
    let mut counts = vec![0u64; bins];
    let mut total = 0u64;
    for v in records.iter().filter_map(|r| r.vote_share()) {
        let i = ((v * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
        total += 1;
    }
    if total == 0 {
        return vec![0.0; bins];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// What the fit objective compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    /// Marginal vote-share histogram (default; least noisy).
    VoteMarginal,
    /// Full 2-D vote-turnout fingerprint.
    JointFingerprint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub replicates: usize,
    pub seed: u64,
    pub max_iterations: usize,
    pub bins: usize,
    pub objective: ObjectiveKind,
    /// Use 3-sigma/5-round trimmed moments instead of raw moments.
    pub trimmed_moments: bool,
    /// Fixed-point rounds that deconvolve fraud from the moment estimates
    /// inside the objective. Zero feeds the observed moments straight in,
    /// which biases the shape estimate low once fraud contaminates them.
    pub moment_matching_rounds: usize,
    /// Independent simulations averaged per objective evaluation. More
    /// averaging keeps the optimizer from chasing simulation noise, which
    /// otherwise inflates the fraud fraction on clean data.
    pub simulations_per_evaluation: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            replicates: 10,
            seed: 1,
            max_iterations: 500,
            bins: 100,
            objective: ObjectiveKind::VoteMarginal,
            trimmed_moments: false,
            moment_matching_rounds: 2,
            simulations_per_evaluation: 3,
        }
    }
}

/// One replicate's fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFit {
    pub params: StuffingParams,
    pub objective: f64,
    pub iterations: usize,
}

/// Fitted stuffing parameters with replicate-spread uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StuffingFit {
    /// Mean over replicate estimates.
    pub params: StuffingParams,
    /// Population standard deviation over replicate estimates.
    pub uncertainty_incremental: f64,
    pub uncertainty_extreme: f64,
    pub uncertainty_shape: f64,
    /// Mean objective value over replicates.
    pub objective_value: f64,
    pub replicates: Vec<ReplicateFit>,
    /// Moments of the observed data (fraud included).
    pub moments: MomentEstimate,
    /// Deconvolved honest-distribution moments at the fitted parameters.
    pub honest_moments: MomentEstimate,
}

fn observed_target(records: &[StationRecord], config: &FitConfig) -> Result<Vec<f64>> {
    match config.objective {
        ObjectiveKind::VoteMarginal => Ok(vote_share_histogram(records, config.bins)),
        ObjectiveKind::JointFingerprint => {
            let geometry = BinGeometry::new(config.bins, config.bins, (0.0, 1.0), (0.0, 1.0))?;
            let fp = compute_fingerprint(records, geometry, FingerprintAxes::Raw)?;
            let total = fp.total().max(1) as f64;
            Ok(fp.cells.iter().map(|&c| c as f64 / total).collect())
        }
    }
}

/// Squared distance between the observed target histogram and a simulation
/// with the candidate parameters under a fixed seed.
pub fn stuffing_objective(
    observed: &[f64],
    moments: &MomentEstimate,
    params: &StuffingParams,
    station_sizes: &[u64],
    seed: u64,
    config: &FitConfig,
) -> f64 {
    let simulated = match simulate_forward(moments, params, station_sizes, seed) {
        Ok(s) => s,
        Err(_) => return f64::INFINITY,
    };
    let target = observed_target(&simulated, config).unwrap_or_default();
    observed
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// Find input moments whose simulation under `params` reproduces the
/// observed (fraud-contaminated) moments, by additive fixed-point updates.
///
/// The forward model shifts and narrows the honest distributions, so feeding
/// the observed moments in directly makes the candidate simulation doubly
/// contaminated and drags the fitted shape parameter down. A couple of
/// correction rounds are enough because the contamination offset depends far
/// more on `params` than on the input moments.
pub fn match_moments(
    observed: &MomentEstimate,
    params: &StuffingParams,
    station_sizes: &[u64],
    seed: u64,
    rounds: usize,
) -> Result<MomentEstimate> {
    let mut m = observed.clone();
    for _ in 0..rounds {
        let sim = simulate_forward(&m, params, station_sizes, seed)?;
        let sm = estimate_moments(&sim)?;
        m.mean_vote = (m.mean_vote + observed.mean_vote - sm.mean_vote).clamp(1e-3, 1.0 - 1e-3);
        m.sd_vote = (m.sd_vote + observed.sd_vote - sm.sd_vote).max(1e-3);
        m.mean_turnout =
            (m.mean_turnout + observed.mean_turnout - sm.mean_turnout).clamp(1e-3, 1.0 - 1e-3);
        m.sd_turnout = (m.sd_turnout + observed.sd_turnout - sm.sd_turnout).max(1e-3);
    }
    Ok(m)
}

/// Keep the simplex point feasible: extreme <= 1 - incremental.
fn params_from_point(x: &[f64]) -> StuffingParams {
    let incremental = x[0];
    let extreme = x[1].min(1.0 - incremental);
    StuffingParams::new(incremental, extreme, x[2])
}

/// Fit (incremental, extreme, shape) to the observed vote-share histogram.
pub fn fit_stuffing(records: &[StationRecord], config: &FitConfig) -> Result<StuffingFit> {
    let moments = if config.trimmed_moments {
        estimate_moments_trimmed(records, 3.0, 5)?
    } else {
        estimate_moments(records)?
    };
    let station_sizes: Vec<u64> = records.iter().map(|r| r.eligible).collect();
    let observed = observed_target(records, config)?;

    let options = SimplexOptions {
        max_iterations: config.max_iterations,
        position_tolerance: 1e-3,
        scales: vec![1.0, 1.0, 20.0],
    };
    let lower = [0.0, 0.0, 0.05];
    let upper = [1.0, 1.0, 8.0];
    let start = [0.01, 0.001, 1.0];
    let steps = [0.05, 0.01, 0.4];

    let mut replicates = Vec::with_capacity(config.replicates);
    for rep in 0..config.replicates {
        let rep_seed = derive_seed(config.seed, tag::REPLICATE, rep as u64);
        let result = nelder_mead(
            |x| {
                let params = params_from_point(x);
                let matched = match match_moments(
                    &moments,
                    &params,
                    &station_sizes,
                    rep_seed,
                    config.moment_matching_rounds,
                ) {
                    Ok(m) => m,
                    Err(_) => return f64::INFINITY,
                };
                let k = config.simulations_per_evaluation.max(1);
                (0..k)
                    .map(|j| {
                        let sim_seed = derive_seed(rep_seed, tag::ENSEMBLE, j as u64);
                        stuffing_objective(&observed, &matched, &params, &station_sizes, sim_seed, config)
                    })
                    .sum::<f64>()
                    / k as f64
            },
            &start,
            &steps,
            &lower,
            &upper,
            &options,
        );
        let params = params_from_point(&result.x);
        if !result.converged {
            return Err(Error::NonConvergence {
                iterations: result.iterations,
                objective: result.value,
                best: params,
            });
        }
        replicates.push(ReplicateFit {
            params,
            objective: result.value,
            iterations: result.iterations,
        });
    }

    let spread = |f: &dyn Fn(&ReplicateFit) -> f64| {
        population_moments(replicates.iter().map(f)).std_dev
    };
    let mean = |f: &dyn Fn(&ReplicateFit) -> f64| {
        population_moments(replicates.iter().map(f)).mean
    };
    let params = StuffingParams::new(
        mean(&|r| r.params.incremental),
        mean(&|r| r.params.extreme),
        mean(&|r| r.params.shape),
    );
    let honest_moments = match_moments(
        &moments,
        &params,
        &station_sizes,
        derive_seed(config.seed, tag::REPLICATE, 0),
        config.moment_matching_rounds,
    )?;
    Ok(StuffingFit {
        params,
        uncertainty_incremental: spread(&|r| r.params.incremental),
        uncertainty_extreme: spread(&|r| r.params.extreme),
        uncertainty_shape: spread(&|r| r.params.shape),
        objective_value: mean(&|r| r.objective),
        replicates,
        moments,
        honest_moments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::StationRecord;

    fn table1_moments() -> MomentEstimate {
        MomentEstimate {
            mean_vote: 0.53,
            sd_vote: 0.23,
            mean_turnout: 0.86,
            sd_turnout: 0.085,
        }
    }

    fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 =xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / n;
        let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
        let sy = (ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n).sqrt();
        cov / (sx * sy)
    }

    #[test]
    fn two_station_moments() {
        let records = vec![
            crate::ingest::StationRecord::new(
                crate::ingest::RegionKey {
                    province: "P".into(),
                    district: "D".into(),
                    village: "V".into(),
                    station_id: "1".into(),
                },
                100,
                50,
                20,
            )
            .unwrap(),
            crate::ingest::StationRecord::new(
                crate::ingest::RegionKey {
                    province: "P".into(),
                    district: "D".into(),
                    village: "V".into(),
                    station_id: "2".into(),
                },
                100,
                60,
                36,
            )
            .unwrap(),
        ];
        let m = estimate_moments(&records).unwrap();
        assert!((m.mean_vote - 0.5).abs() < 1e-12);
        assert!((m.sd_vote - 0.1).abs() < 1e-12);
    }

    #[test]
    fn moments_reject_degenerate_input() {
        let one = vec![StationRecord {
            region: crate::ingest::RegionKey {
                province: "P".into(),
                district: "D".into(),
                village: "V".into(),
                station_id: "1".into(),
            },
            eligible: 100,
            valid: 50,
            yes: 20,
        }];
        assert!(estimate_moments(&one).is_err());
        let same = vec![one[0].clone(), {
            let mut r = one[0].clone();
            r.region.station_id = "2".into();
            r
        }];
        assert!(estimate_moments(&same).is_err());
    }

    #[test]
    fn recovered_moments_match_generator_within_sampling_error() {
        let moments = table1_moments();
        let sizes = vec![350u64; 20_000];
        let records =
            simulate_forward(&moments, &StuffingParams::honest(), &sizes, 7).unwrap();
        let est = estimate_moments(&records).unwrap();
        // truncation to [0,1] and count rounding shift the moments slightly
        assert!((est.mean_vote - moments.mean_vote).abs() < 0.02, "{est:?}");
        assert!((est.mean_turnout - moments.mean_turnout).abs() < 0.01, "{est:?}");
        assert!((est.sd_vote - moments.sd_vote).abs() < 0.03, "{est:?}");
        assert!((est.sd_turnout - moments.sd_turnout).abs() < 0.01, "{est:?}");
    }

    #[test]
    fn simulation_is_deterministic() {
        let moments = table1_moments();
        let params = StuffingParams::new(0.06, 0.01, 1.3);
        let sizes: Vec<u64> = (0..500).map(|i| 150 + i % 400).collect();
        let a = simulate_forward(&moments, &params, &sizes, 99).unwrap();
        let b = simulate_forward(&moments, &params, &sizes, 99).unwrap();
        assert_eq!(a, b);
        let c = simulate_forward(&moments, &params, &sizes, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulated_counts_respect_invariants() {
        let moments = table1_moments();
        let params = StuffingParams::new(0.2, 0.1, 1.3);
        let sizes: Vec<u64> = (0..5000).map(|i| 100 + 37 * (i % 20)).collect();
        let records = simulate_forward(&moments, &params, &sizes, 3).unwrap();
        for r in &records {
            assert!(r.yes <= r.valid && r.valid <= r.eligible, "{r:?}");
        }
    }

    #[test]
    fn honest_votes_and_turnout_are_uncorrelated() {
        let moments = table1_moments();
        let sizes = vec![350u64; 100_000];
        let records =
            simulate_forward(&moments, &StuffingParams::honest(), &sizes, 11).unwrap();
        let vs: Vec<f64> = records.iter().filter_map(|r| r.vote_share()).collect();
        let ts: Vec<f64> = records.iter().filter_map(|r| r.rel_turnout()).collect();
        assert!(correlation(&vs, &ts).abs() < 0.01);
    }

    #[test]
    fn full_intensity_drives_turnout_to_the_electorate() {
        // x = 1: all non-voters stuffed, all 'No' votes flipped
        let (t, v) = fraud_counts(400, 300, 200, 1.0, 1.3);
        assert_eq!(t, 400);
        assert_eq!(v, 400);
        // high intensity with a huge shape: flipping vanishes
        let (t, v) = fraud_counts(400, 300, 200, 0.99, 1000.0);
        assert_eq!(t, 300 + 99);
        assert_eq!(v, 200 + 99); // stuffing only, no flips
    }

    #[test]
    fn total_votes_are_monotone_in_the_incremental_fraction() {
        let moments = table1_moments();
        let sizes: Vec<u64> = (0..2000).map(|i| 120 + 11 * (i % 50)).collect();
        let mut last = (0u64, 0u64);
        for (k, f) in [0.0, 0.05, 0.1, 0.3, 0.7].iter().enumerate() {
            let records =
                simulate_forward(&moments, &StuffingParams::new(*f, 0.0, 1.3), &sizes, 5).unwrap();
            let sums = (
                records.iter().map(|r| r.valid).sum::<u64>(),
                records.iter().map(|r| r.yes).sum::<u64>(),
            );
            if k > 0 {
                assert!(sums.0 >= last.0 && sums.1 >= last.1, "f={f}");
            }
            last = sums;
        }
    }

    #[test]
    fn objective_is_zero_for_self_simulated_data() {
        let moments = table1_moments();
        let params = StuffingParams::new(0.08, 0.0, 1.5);
        let sizes: Vec<u64> = (0..3000).map(|i| 150 + i % 300).collect();
        let config = FitConfig::default();
        let observed_records = simulate_forward(&moments, &params, &sizes, 42).unwrap();
        let observed = vote_share_histogram(&observed_records, config.bins);
        let obj = stuffing_objective(&observed, &moments, &params, &sizes, 42, &config);
        assert_eq!(obj, 0.0);
    }

    #[test]
    fn fit_reports_non_convergence_on_tiny_budget() {
        let moments = table1_moments();
        let sizes = vec![300u64; 2000];
        let records = simulate_forward(&moments, &StuffingParams::honest(), &sizes, 1).unwrap();
        let config = FitConfig {
            replicates: 1,
            max_iterations: 1,
            ..FitConfig::default()
        };
        match fit_stuffing(&records, &config) {
            Err(Error::NonConvergence { .. }) => {}
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(StuffingParams::new(0.7, 0.5, 1.0).validate().is_err());
        assert!(StuffingParams::new(-0.1, 0.0, 1.0).validate().is_err());
        assert!(StuffingParams::new(0.1, 0.0, 0.0).validate().is_err());
        assert!(StuffingParams::new(0.1, 0.0, 1.0).validate().is_ok());
    }
}
