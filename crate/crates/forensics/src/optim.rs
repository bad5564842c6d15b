//! Bounded derivative-free simplex minimization.
//!
//! The fit objectives are Monte Carlo functions evaluated with a fixed seed,
//! so they are deterministic but not differentiable; a Nelder-Mead simplex
//! with box bounds enforced by reflection is a good match.

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when the simplex diameter (scaled per dimension) drops below this.
    pub position_tolerance: f64,
    /// Per-dimension scale used by the diameter test.
    pub scales: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fold a coordinate back into [lo, hi] by mirror reflection.
pub fn reflect_into(x: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    let span = hi - lo;
    let mut y = (x - lo).rem_euclid(2.0 * span);
    if y > span {
        y = 2.0 * span - y;
    }
    lo + y
}

/// Minimize `f` starting from `x0` with initial per-dimension steps.
///
/// Coordinates are reflected into `[lower, upper]` before every evaluation,
/// so `f` only ever sees feasible points.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &SimplexOptions,
) -> SimplexResult {
    let dim = x0.len();
    assert!(dim > 0 && steps.len() == dim && lower.len() == dim && upper.len() == dim);
    let clamp = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(lower.iter().zip(upper))
            .map(|(&xi, (&lo, &hi))| reflect_into(xi, lo, hi))
            .collect()
    };

    // initial simplex: x0 plus one offset vertex per dimension
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = clamp(x0);
    let f0 = f(&v0);
    simplex.push((v0, f0));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        let v = clamp(&v);
        let fv = f(&v);
        simplex.push((v, fv));
    }

    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let diameter = (0..dim)
            .map(|i| {
                let (lo, hi) = simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, (v, _)| {
                    (acc.0.min(v[i]), acc.1.max(v[i]))
                });
                (hi - lo) / options.scales[i]
            })
            .fold(0.0f64, f64::max);
        if diameter < options.position_tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(v, _)| v[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(&c, &w)| c + ALPHA * (c - w))
            .collect();
        let reflect = clamp(&reflect);
        let f_reflect = f(&reflect);

        if f_reflect < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + GAMMA * ALPHA * (c - w))
                .collect();
            let expand = clamp(&expand);
            let f_expand = f(&expand);
            simplex[dim] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[dim - 1].1 {
            simplex[dim] = (reflect, f_reflect);
        } else {
            // contract outside toward the reflected point when it improved
            // on the worst vertex, inside toward the worst vertex otherwise
            let (target, threshold) = if f_reflect < worst.1 {
                (&reflect, f_reflect)
            } else {
                (&worst.0, worst.1)
            };
            let contract: Vec<f64> = centroid
                .iter()
                .zip(target)
                .map(|(&c, &t)| c + RHO * (t - c))
                .collect();
            let contract = clamp(&contract);
            let f_contract = f(&contract);
            if f_contract <= threshold {
                simplex[dim] = (contract, f_contract);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = best
                        .iter()
                        .zip(&entry.0)
                        .map(|(&b, &v)| b + SIGMA * (v - b))
                        .collect();
                    let shrunk = clamp(&shrunk);
                    let fs = f(&shrunk);
                    *entry = (shrunk, fs);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult {
        x,
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options(dim: usize) -> SimplexOptions {
        SimplexOptions {
            max_iterations: 500,
            position_tolerance: 1e-8,
            scales: vec![1.0; dim],
        }
    }

    #[test]
    fn minimizes_a_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] - 0.7).powi(2);
        let r = nelder_mead(
            f,
            &[0.9, 0.1],
            &[0.1, 0.1],
            &[0.0, 0.0],
            &[1.0, 1.0],
            &options(2),
        );
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() < 1e-5);
        assert!((r.x[1] - 0.7).abs() < 1e-5);
    }

    #[test]
    fn respects_bounds_when_minimum_is_outside() {
        let f = |x: &[f64]| (x[0] + 1.0).powi(2);
        let r = nelder_mead(f, &[0.5], &[0.2], &[0.0], &[1.0], &options(1));
        assert!(r.x[0] >= 0.0 && r.x[0] <= 1.0);
        assert!(r.x[0] < 1e-4);
    }

    #[test]
    fn reflection_folds_back_into_range() {
        assert_eq!(reflect_into(0.5, 0.0, 1.0), 0.5);
        assert!((reflect_into(1.2, 0.0, 1.0) - 0.8).abs() < 1e-12);
        assert!((reflect_into(-0.3, 0.0, 1.0) - 0.3).abs() < 1e-12);
        assert!((reflect_into(2.4, 0.0, 1.0) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence_on_tiny_budget() {
        let f = |x: &[f64]| x[0] * x[0];
        let mut opts = options(1);
        opts.max_iterations = 1;
        let r = nelder_mead(f, &[0.9], &[0.1], &[-1.0], &[1.0], &opts);
        assert!(!r.converged);
    }

    #[test]
    fn rosenbrock_in_a_box() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let mut opts = options(2);
        opts.max_iterations = 2000;
        let r = nelder_mead(f, &[-0.5, 0.5], &[0.2, 0.2], &[-2.0, -2.0], &[2.0, 2.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-4, "{:?}", r);
        assert!((r.x[1] - 1.0).abs() < 1e-4);
    }
}
