//! Derivative-free coverage search: a uniform grid, then a short
//! golden-section refinement around the best grid point.

use serde::{Deserialize, Serialize};

use crate::error::TalError;

/// Extra probes spent by the refinement.
pub const REFINE_PROBES: usize = 3;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub rho: f64,
    /// `None` when the probe found no feasible solution.
    pub objective: Option<f64>,
}

/// Minimizes `eval` over `[lo, hi]`. Returns the best feasible probe and the
/// full probe log; `None` if nothing was feasible. Ties go to the larger
/// coverage, whose sub-MIP is smaller.
pub fn dfo_search<F>(lo: f64, hi: f64, probes: usize, mut eval: F) -> Result<(Option<(f64, f64)>, Vec<Probe>), TalError>
where
    F: FnMut(f64) -> Option<f64>,
{
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) || probes < 2 {
        return Err(TalError::SearchInterval { lo, hi, probes });
    }
    let mut log = Vec::new();
    let mut probe = |rho: f64, log: &mut Vec<Probe>| {
        let objective = eval(rho);
        log.push(Probe { rho, objective });
        objective
    };
    if lo == hi {
        probe(lo, &mut log);
        return Ok((best(&log), log));
    }
    let grid: Vec<f64> = (0..probes).map(|i| lo + (hi - lo) * i as f64 / (probes - 1) as f64).collect();
    for &rho in &grid {
        probe(rho, &mut log);
    }
    let Some(b) = argmin(&log) else {
        return Ok((None, log));
    };
    let (a, c) = (grid[b.saturating_sub(1)], grid[(b + 1).min(probes - 1)]);
    let x1 = c - INV_PHI * (c - a);
    let x2 = a + INV_PHI * (c - a);
    let f1 = probe(x1, &mut log).unwrap_or(f64::INFINITY);
    let f2 = probe(x2, &mut log).unwrap_or(f64::INFINITY);
    // keep the bracket holding the better interior point; it reuses that point
    let third = if f1 <= f2 { x2 - INV_PHI * (x2 - a) } else { x1 + INV_PHI * (c - x1) };
    probe(third, &mut log);
    Ok((best(&log), log))
}

fn argmin(log: &[Probe]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in log.iter().enumerate() {
        if let Some(v) = p.objective {
            if best.is_none_or(|(k, b)| v < b || (v == b && p.rho > log[k].rho)) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

fn best(log: &[Probe]) -> Option<(f64, f64)> {
    argmin(log).map(|i| (log[i].rho, log[i].objective.unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_interval_single_probe() {
        let (res, log) = dfo_search(0.3, 0.3, 5, |_| Some(1.0)).unwrap();
        assert_eq!(res, Some((0.3, 1.0)));
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn unimodal_oracle_with_minimum_on_grid() {
        // grid 0, 0.25, 0.5, 0.75, 1; minimum at 0.75
        let (res, log) = dfo_search(0.0, 1.0, 5, |r| Some((r - 0.75).abs())).unwrap();
        assert_eq!(res, Some((0.75, 0.0)));
        assert_eq!(log.len(), 5 + REFINE_PROBES);
        assert!(log[5..].iter().all(|p| (0.5..=1.0).contains(&p.rho)));
    }

    #[test]
    fn refinement_can_improve() {
        let (res, _) = dfo_search(0.0, 1.0, 3, |r| Some((r - 0.4) * (r - 0.4))).unwrap();
        let (rho, _) = res.unwrap();
        assert!((rho - 0.4).abs() < 0.1 && rho != 0.5);
    }

    #[test]
    fn ties_prefer_larger_coverage() {
        let (res, _) = dfo_search(0.0, 1.0, 5, |r| Some(if r < 0.6 { 2.0 } else { 1.0 })).unwrap();
        assert_eq!(res, Some((1.0, 1.0)));
    }

    #[test]
    fn all_infeasible_is_none() {
        let (res, log) = dfo_search(0.2, 0.8, 4, |_| None).unwrap();
        assert_eq!(res, None);
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn bad_arguments() {
        assert!(dfo_search(0.5, 0.4, 3, |_| None).is_err());
        assert!(dfo_search(0.0, 1.0, 1, |_| None).is_err());
        assert!(dfo_search(-0.1, 1.0, 3, |_| None).is_err());
    }
}
