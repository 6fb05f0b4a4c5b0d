//! Exact, enumeration-backed subset properties.
//!
//! For an assignment `x` and a subset `B` of discrete variables, fixing `B`
//! to the values of `x`:
//! * `P(B)`: some completion of the remaining variables is feasible
//!   (discrete ones enumerated over their bounds, continuous ones by LP);
//! * `Q_kappa(B)`: the LP relaxation of the fixed problem is solvable and its
//!   optimal objective is at least `kappa`.

use crate::error::TalError;
use crate::mip::{solve_lp_with_bounds, Assignment, LpOptions, MipInstance};
use crate::rng::SplitMix64;

/// Largest number of discrete variables accepted by the exact checks.
pub const MAX_EXACT_DISCRETE: usize = 12;

/// Relative tolerance for `objective >= kappa`.
pub const KAPPA_TOL: f64 = 1e-7;

pub fn meets_kappa(objective: f64, kappa: f64) -> bool {
    objective >= kappa - KAPPA_TOL * (1.0 + kappa.abs())
}

fn check_size(inst: &MipInstance) -> Result<Vec<usize>, TalError> {
    let discrete = inst.discrete_indices();
    if discrete.len() > MAX_EXACT_DISCRETE {
        return Err(TalError::TooManyDiscrete { r: discrete.len(), max: MAX_EXACT_DISCRETE });
    }
    Ok(discrete)
}

fn fixed_bounds(inst: &MipInstance, x: &[f64], subset: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut lower = inst.lower().to_vec();
    let mut upper = inst.upper().to_vec();
    for &d in subset {
        lower[d] = x[d];
        upper[d] = x[d];
    }
    (lower, upper)
}

/// Exhaustive completion check. `subset` holds variable indices (discrete).
pub fn property_p(inst: &MipInstance, x: &[f64], subset: &[usize]) -> Result<bool, TalError> {
    let discrete = check_size(inst)?;
    let (lower, upper) = fixed_bounds(inst, x, subset);
    let free: Vec<usize> = discrete.iter().copied().filter(|d| !subset.contains(d)).collect();
    let has_continuous = discrete.len() < inst.num_vars();
    let mut point: Vec<f64> = (0..inst.num_vars())
        .map(|j| if lower[j] == upper[j] { lower[j] } else { lower[j].max(upper[j].min(0.0)) })
        .collect();
    for &d in &discrete {
        point[d] = lower[d];
    }
    let lp_opts = LpOptions::default();
    loop {
        let feasible = if has_continuous {
            let mut lo = lower.clone();
            let mut up = upper.clone();
            for &d in &discrete {
                lo[d] = point[d];
                up[d] = point[d];
            }
            solve_lp_with_bounds(inst, &lo, &up, &lp_opts).is_optimal()
        } else {
            inst.check_feasible(&Assignment(point.clone()), 1e-9)?
        };
        if feasible {
            return Ok(true);
        }
        // odometer over the free discrete variables
        let mut k = 0;
        loop {
            if k == free.len() {
                return Ok(false);
            }
            let d = free[k];
            if point[d] < upper[d] {
                point[d] += 1.0;
                break;
            }
            point[d] = lower[d];
            k += 1;
        }
    }
}

/// LP objective of the problem with `subset` fixed to `x`, if solvable.
pub fn fixed_lp_objective(inst: &MipInstance, x: &[f64], subset: &[usize]) -> Option<f64> {
    let (lower, upper) = fixed_bounds(inst, x, subset);
    let lp = solve_lp_with_bounds(inst, &lower, &upper, &LpOptions::default());
    if lp.is_optimal() {
        lp.objective
    } else {
        None
    }
}

pub fn property_q(inst: &MipInstance, x: &[f64], subset: &[usize], kappa: f64) -> Result<bool, TalError> {
    check_size(inst)?;
    Ok(fixed_lp_objective(inst, x, subset).is_some_and(|obj| meets_kappa(obj, kappa)))
}

fn subset_of(mask: usize, discrete: &[usize]) -> Vec<usize> {
    (0..discrete.len()).filter(|&k| mask >> k & 1 == 1).map(|k| discrete[k]).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LemmaReport {
    /// Nested pairs `B_ss ⊂ B_s` examined.
    pub pairs: usize,
    /// `P(B_s)` and not `P(B_ss)`.
    pub p_violations: usize,
    /// `P(B_s)`, `Q(B_ss)` and not `Q(B_s)`, summed over all `kappa` values.
    pub q_violations: usize,
}

/// Checks both monotonicity lemmas over every nested pair of subsets.
pub fn verify_lemmas(inst: &MipInstance, x: &[f64], kappas: &[f64]) -> Result<LemmaReport, TalError> {
    let discrete = check_size(inst)?;
    let full = 1usize << discrete.len();
    let mut p = vec![false; full];
    let mut lp = vec![None; full];
    for mask in 0..full {
        let subset = subset_of(mask, &discrete);
        p[mask] = property_p(inst, x, &subset)?;
        lp[mask] = fixed_lp_objective(inst, x, &subset);
    }
    let mut report = LemmaReport::default();
    for big in 0..full {
        // proper submasks of `big`
        let mut small = big;
        while small > 0 {
            small = (small - 1) & big;
            report.pairs += 1;
            if p[big] && !p[small] {
                report.p_violations += 1;
            }
            if p[big] {
                for &kappa in kappas {
                    let q_small = lp[small].is_some_and(|o| meets_kappa(o, kappa));
                    let q_big = lp[big].is_some_and(|o| meets_kappa(o, kappa));
                    if q_small && !q_big {
                        report.q_violations += 1;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Monte-Carlo frequencies of `P`, `Q_kappa` and both, over uniformly random
/// subsets where each discrete variable is included with probability `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frequencies {
    pub rho: f64,
    pub p: f64,
    pub q: f64,
    pub both: f64,
}

pub fn property_frequencies(
    inst: &MipInstance,
    x: &[f64],
    kappa: f64,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<Frequencies, TalError> {
    let discrete = check_size(inst)?;
    let mut rng = SplitMix64::new(seed);
    let (mut np, mut nq, mut nb) = (0usize, 0usize, 0usize);
    for _ in 0..samples {
        let subset: Vec<usize> = discrete.iter().copied().filter(|_| rng.bernoulli(rho)).collect();
        let p = property_p(inst, x, &subset)?;
        let q = property_q(inst, x, &subset, kappa)?;
        np += usize::from(p);
        nq += usize::from(q);
        nb += usize::from(p && q);
    }
    let s = samples.max(1) as f64;
    Ok(Frequencies { rho, p: np as f64 / s, q: nq as f64 / s, both: nb as f64 / s })
}

/// First grid coverage at which `f` crosses 0.5, linearly interpolated.
pub fn crossing(grid: &[f64], f: &[f64], decreasing: bool) -> Option<f64> {
    let side = |v: f64| if decreasing { v >= 0.5 } else { v < 0.5 };
    if f.is_empty() || !side(f[0]) {
        return None;
    }
    (1..f.len()).find(|&i| !side(f[i])).map(|i| {
        let (a, b) = (f[i - 1], f[i]);
        let t = if a == b { 0.0 } else { (0.5 - a) / (b - a) };
        grid[i - 1] + t * (grid[i] - grid[i - 1])
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyReport {
    pub curve: Vec<Frequencies>,
    /// Coverage where `Q_kappa` frequency rises through 0.5.
    pub q0: f64,
    /// Coverage where `P` frequency falls through 0.5.
    pub p0: f64,
    pub at_q0: f64,
    pub at_mid: f64,
    pub at_p0: f64,
}

impl CertaintyReport {
    pub fn holds(&self) -> bool {
        self.at_mid > self.at_q0.min(self.at_p0)
    }
}

/// Estimates both thresholds from frequency curves and the joint frequency
/// at the endpoints and midpoint. `None` unless `q0 < p0` both exist.
pub fn interval_of_certainty(
    inst: &MipInstance,
    x: &[f64],
    kappa: f64,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Option<CertaintyReport>, TalError> {
    let curve = grid
        .iter()
        .enumerate()
        .map(|(i, &rho)| property_frequencies(inst, x, kappa, rho, samples, SplitMix64::derive(seed, i as u64).next_u64()))
        .collect::<Result<Vec<_>, _>>()?;
    let p_curve: Vec<f64> = curve.iter().map(|f| f.p).collect();
    let q_curve: Vec<f64> = curve.iter().map(|f| f.q).collect();
    let (Some(p0), Some(q0)) = (crossing(grid, &p_curve, true), crossing(grid, &q_curve, false)) else {
        return Ok(None);
    };
    if q0 >= p0 {
        return Ok(None);
    }
    let stream = grid.len() as u64;
    let both_at = |rho: f64, k: u64| {
        property_frequencies(inst, x, kappa, rho, samples, SplitMix64::derive(seed, stream + k).next_u64()).map(|f| f.both)
    };
    Ok(Some(CertaintyReport {
        at_q0: both_at(q0, 0)?,
        at_mid: both_at(0.5 * (q0 + p0), 1)?,
        at_p0: both_at(p0, 2)?,
        curve,
        q0,
        p0,
    }))
}

/// Gradient descent on a single logit `z` under the mean BCE against binary
/// `targets`. Stops once `|sigmoid(z) - mean| <= tol`; returns the final
/// probability and the steps taken.
pub fn fit_frequency(targets: &[bool], lr: f64, max_steps: usize, tol: f64) -> (f64, usize) {
    let mu = targets.iter().filter(|&&y| y).count() as f64 / targets.len().max(1) as f64;
    let mut z = 0.0;
    for step in 0..max_steps {
        let p = crate::model::sigmoid(z);
        if (p - mu).abs() <= tol {
            return (p, step);
        }
        // d/dz mean BCE(y, sigmoid(z)) = sigmoid(z) - mean(y)
        let grad = targets.iter().map(|&y| p - f64::from(u8::from(y))).sum::<f64>() / targets.len().max(1) as f64;
        z -= lr * grad;
    }
    (crate::model::sigmoid(z), max_steps)
}
