//! Numerical-anomaly tests: second-digit distribution of vote counts and
//! within-village randomness of voter assignment.

use crate::ingest::StationRecord;
use crate::rng::{stream_rng, tag};
use crate::{Error, Result};
use rand_distr::{Distribution, Hypergeometric};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};
use statrs::function::gamma::ln_gamma;
use std::collections::BTreeMap;

/// Counts with at least three significant digits qualify for the test.
pub const MIN_TESTABLE_VALUE: u64 = 100;

/// Second significant decimal digit of `n` (requires n >= 10).
pub fn second_digit(n: u64) -> u8 {
    debug_assert!(n >= 10);
    let mut m = n;
    while m >= 100 {
        m /= 10;
    }
    (m % 10) as u8
}

/// Expected second-digit probabilities b_d = sum_k log10(1 + 1/(10k + d)).
pub fn benford_expected() -> [f64; 10] {
    let mut probs = [0.0; 10];
    for (d, p) in probs.iter_mut().enumerate() {
        *p = (1..=9)
            .map(|k| (1.0 + 1.0 / (10 * k + d) as f64).log10())
            .sum();
    }
    probs
}

/// Second-digit test result at one aggregation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordResult {
    pub level: String,
    /// Counts with fewer than three significant digits, excluded.
    pub below_threshold: usize,
    pub sample_size: usize,
    pub counts: [u64; 10],
    pub expected: [f64; 10],
    pub chi_square: f64,
    pub p_value: f64,
    /// log10 of the Bayes factor in favor of the second-digit law.
    pub log10_bf01: f64,
    /// Posterior P(H0 | data) under equal prior odds; underflows to 0 for
    /// extreme violations — use `log10_posterior` there.
    pub posterior: f64,
    pub log10_posterior: f64,
    /// Calibration lower bound -e p ln(p) on the Bayes factor, when p < 1/e.
    pub calibration_bound: Option<f64>,
}

/// Bayes factor for the multinomial digit counts: point null at the
/// second-digit law against a uniform Dirichlet alternative over the
/// 10-cell simplex (exact conjugate marginal), computed in log space.
fn log_bayes_factor(counts: &[u64; 10], expected: &[f64; 10]) -> f64 {
    let n: u64 = counts.iter().sum();
    let ln_null: f64 = counts
        .iter()
        .zip(expected)
        .map(|(&c, &b)| c as f64 * b.ln())
        .sum();
    let ln_alt = ln_gamma(10.0) + counts.iter().map(|&c| ln_gamma(c as f64 + 1.0)).sum::<f64>()
        - ln_gamma(n as f64 + 10.0);
    ln_null - ln_alt
}

/// ln(1 + e^x) without overflow.
fn ln_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn benford_test(values: &[u64], level: &str) -> Result<BenfordResult> {
    let usable: Vec<u64> = values
        .iter()
        .copied()
        .filter(|&v| v >= MIN_TESTABLE_VALUE)
        .collect();
    if usable.len() < 10 {
        return Err(Error::EmptyInput(format!(
            "second-digit test needs at least 10 values with three significant digits, found {}",
            usable.len()
        )));
    }
    let mut counts = [0u64; 10];
    for &v in &usable {
        counts[second_digit(v) as usize] += 1;
    }
    let expected = benford_expected();
    let n = usable.len() as f64;
    let chi_square: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, &b)| {
            let e = n * b;
            (c as f64 - e) * (c as f64 - e) / e
        })
        .sum();
    let p_value = ChiSquared::new(9.0).unwrap().sf(chi_square);

    let ln_bf01 = log_bayes_factor(&counts, &expected);
    let ln10 = std::f64::consts::LN_10;
    // posterior = BF / (1 + BF); ln posterior = ln BF - ln(1 + BF)
    let ln_posterior = ln_bf01 - ln_1p_exp(ln_bf01);
    let calibration_bound = (p_value > 0.0 && p_value < (-1.0f64).exp())
        .then(|| -std::f64::consts::E * p_value * p_value.ln());

    Ok(BenfordResult {
        level: level.to_string(),
        below_threshold: values.len() - usable.len(),
        sample_size: usable.len(),
        counts,
        expected,
        chi_square,
        p_value,
        log10_bf01: ln_bf01 / ln10,
        posterior: ln_posterior.exp(),
        log10_posterior: ln_posterior / ln10,
        calibration_bound,
    })
}

/// Village-level 'Yes' totals, for the coarser aggregation level.
pub fn village_vote_totals(records: &[StationRecord]) -> Vec<u64> {
    let mut totals: BTreeMap<(&str, &str, &str), u64> = BTreeMap::new();
    for r in records {
        *totals.entry(r.region.village_key()).or_default() += r.yes;
    }
    totals.into_values().collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AssignmentConfig {
    /// |z| threshold; 2.576 is the two-sided 99% normal bound.
    pub z_threshold: f64,
    /// Exceedance fraction expected under the null.
    pub expected_fraction: f64,
    /// Monte Carlo permutations for villages where the normal approximation
    /// is poor; 0 keeps the analytic decision everywhere.
    pub permutations: usize,
    pub seed: u64,
    /// A station variance below this marks its village as poorly
    /// approximated.
    pub low_variance_cutoff: f64,
}

impl Default for AssignmentConfig {
    fn default() -> Self {
        Self {
            z_threshold: 2.576,
            expected_fraction: 0.01,
            permutations: 0,
            seed: 0,
            low_variance_cutoff: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationZ {
    pub region: crate::ingest::RegionKey,
    pub z: f64,
}

/// Result of the within-village assignment-randomness test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub village_count: usize,
    pub station_count: usize,
    pub z_scores: Vec<StationZ>,
    pub exceedance_count: usize,
    pub exceedance_fraction: f64,
    pub expected_fraction: f64,
    pub z_threshold: f64,
    /// One-sided binomial P(X >= observed exceedances) under the null.
    pub binomial_p_value: f64,
    /// Stations whose hypergeometric variance fell below the cutoff.
    pub low_variance_stations: usize,
    /// Villages decided by Monte Carlo permutation instead of the normal
    /// approximation.
    pub mc_villages: usize,
}

struct VillageData {
    valid: Vec<u64>,
    yes: Vec<u64>,
    indices: Vec<usize>,
}

/// Hypergeometric mean and variance of station `i`'s 'Yes' count under
/// random assignment of the village's votes.
fn hypergeometric_moments(t_i: u64, t_vil: u64, v_vil: u64) -> (f64, f64) {
    let q = v_vil as f64 / t_vil as f64;
    let mean = t_i as f64 * q;
    let var =
        t_i as f64 * q * (1.0 - q) * (t_vil - t_i) as f64 / (t_vil as f64 - 1.0);
    (mean, var)
}

/// One random assignment of the village's votes across its stations
/// (sequential multivariate hypergeometric draw).
fn permuted_assignment(valid: &[u64], v_vil: u64, rng: &mut impl rand::Rng) -> Vec<u64> {
    let mut remaining_t: u64 = valid.iter().sum();
    let mut remaining_v = v_vil;
    let mut out = Vec::with_capacity(valid.len());
    for (i, &t_i) in valid.iter().enumerate() {
        if i + 1 == valid.len() {
            out.push(remaining_v);
            break;
        }
        let draw = if remaining_v == 0 {
            0
        } else if remaining_v == remaining_t {
            t_i
        } else {
            Hypergeometric::new(remaining_t, remaining_v, t_i)
                .unwrap()
                .sample(rng)
        };
        out.push(draw);
        remaining_t -= t_i;
        remaining_v -= draw;
    }
    out
}

pub fn assignment_test(
    records: &[StationRecord],
    config: &AssignmentConfig,
) -> Result<AssignmentResult> {
    let mut villages: BTreeMap<(&str, &str, &str), VillageData> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let v = villages
            .entry(r.region.village_key())
            .or_insert_with(|| VillageData {
                valid: Vec::new(),
                yes: Vec::new(),
                indices: Vec::new(),
            });
        v.valid.push(r.valid);
        v.yes.push(r.yes);
        v.indices.push(i);
    }

    let mut z_scores = Vec::new();
    let mut exceedance_count = 0usize;
    let mut village_count = 0usize;
    let mut low_variance_stations = 0usize;
    let mut mc_villages = 0usize;

    for (vi, (_, village)) in villages.into_iter().enumerate() {
        let t_vil: u64 = village.valid.iter().sum();
        let v_vil: u64 = village.yes.iter().sum();
        if village.valid.len() < 2 || v_vil == 0 || v_vil == t_vil {
            continue;
        }
        village_count += 1;

        let mut station_stats = Vec::new();
        let mut poor_approximation = false;
        for (&t_i, (&y_i, &rec_idx)) in village
            .valid
            .iter()
            .zip(village.yes.iter().zip(&village.indices))
        {
            if t_i == 0 || t_i == t_vil {
                continue; // degenerate: variance is zero
            }
            let (mean, var) = hypergeometric_moments(t_i, t_vil, v_vil);
            if var < config.low_variance_cutoff {
                low_variance_stations += 1;
                poor_approximation = true;
            }
            let z = (y_i as f64 - mean) / var.sqrt();
            station_stats.push((rec_idx, y_i, mean, z));
            z_scores.push(StationZ {
                region: records[rec_idx].region.clone(),
                z,
            });
        }

        if poor_approximation && config.permutations > 0 {
            // empirical two-sided tail probability of each station's
            // deviation under random assignment
            mc_villages += 1;
            let mut rng = stream_rng(config.seed, tag::PERMUTATION, vi as u64);
            let mut extreme = vec![0usize; station_stats.len()];
            for _ in 0..config.permutations {
                let sim = permuted_assignment(&village.valid, v_vil, &mut rng);
                // map simulated draws back to the kept stations
                let mut keep = 0;
                for (j, &t_i) in village.valid.iter().enumerate() {
                    if t_i == 0 || t_i == t_vil {
                        continue;
                    }
                    let (_, y_i, mean, _) = station_stats[keep];
                    if (sim[j] as f64 - mean).abs() >= (y_i as f64 - mean).abs() {
                        extreme[keep] += 1;
                    }
                    keep += 1;
                }
            }
            // two-sided normal tail mass at the z threshold
            let alpha = 1.0 - statrs::function::erf::erf(config.z_threshold / 2f64.sqrt());
            for (&hits, _) in extreme.iter().zip(&station_stats) {
                let p = (hits as f64 + 1.0) / (config.permutations as f64 + 1.0);
                if p < alpha {
                    exceedance_count += 1;
                }
            }
        } else {
            exceedance_count += station_stats
                .iter()
                .filter(|(_, _, _, z)| z.abs() > config.z_threshold)
                .count();
        }
    }

    if village_count == 0 {
        return Err(Error::EmptyInput(
            "no testable village (need >= 2 stations and 0 < V < T)".into(),
        ));
    }
    let station_count = z_scores.len();
    let exceedance_fraction = exceedance_count as f64 / station_count as f64;
    let binomial_p_value = if exceedance_count == 0 {
        1.0
    } else {
        Binomial::new(config.expected_fraction, station_count as u64)
            .unwrap()
            .sf(exceedance_count as u64 - 1)
    };
    Ok(AssignmentResult {
        village_count,
        station_count,
        z_scores,
        exceedance_count,
        exceedance_fraction,
        expected_fraction: config.expected_fraction,
        z_threshold: config.z_threshold,
        binomial_p_value,
        low_variance_stations,
        mc_villages,
    })
}
