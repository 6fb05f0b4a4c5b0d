//! Primal-integral and gap metrics, sweep experiments and the benchmark
//! harness.

pub mod bench;
pub mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::mip::{solve_mip_opts, Assignment, ClockKind, MipInstance, MipOptions, SolveMode, SolveStatus, SolveTrace};

pub use bench::{
    metrics_csv, run_benchmark, tune_gamma, BenchReport, BenchSetup, Method, MethodSummary, MetricsRow, Tuning,
};
pub use sweep::{coverage_csv, cutoff_csv, inversions, sweep_coverage, sweep_cutoff, CoverageRow, CoverageSweep, CutoffRow, ScaleSet};

/// Denominator floor of [`optimality_gap`].
pub const GAP_EPS: f64 = 1e-9;

/// `int_a^b (pb(t) - opt) dt`, where `pb(t)` is the last incumbent found at or
/// before `t`, or `cap` before the first one.
pub fn primal_integral_between(trace: &SolveTrace, a: f64, b: f64, opt: f64, cap: Option<f64>) -> Result<f64, EvalError> {
    if b <= a {
        return Ok(0.0);
    }
    let first = trace.events.first().map_or(f64::INFINITY, |e| e.time);
    let mut total = 0.0;
    if a < first {
        let end = first.min(b);
        let cap = cap.ok_or(EvalError::UndefinedIntegral(end))?;
        total += (end - a) * (cap - opt);
    }
    for (k, e) in trace.events.iter().enumerate() {
        let next = trace.events.get(k + 1).map_or(f64::INFINITY, |n| n.time);
        let (lo, hi) = (e.time.max(a), next.min(b));
        if hi > lo {
            total += (hi - lo) * (e.objective - opt);
        }
    }
    Ok(total)
}

/// Primal integral over `[0, horizon]`.
pub fn primal_integral(trace: &SolveTrace, horizon: f64, opt: f64, cap: Option<f64>) -> Result<f64, EvalError> {
    primal_integral_between(trace, 0.0, horizon, opt, cap)
}

/// Primal bound used before the first incumbent: the objective of the
/// all-upper-bound assignment, if finite and feasible.
pub fn primal_bound_cap(inst: &MipInstance) -> Option<f64> {
    let x = Assignment(inst.upper().to_vec());
    if x.0.iter().any(|v| !v.is_finite()) {
        return None;
    }
    match inst.check_feasible(&x, 1e-9) {
        Ok(true) => inst.objective(&x).ok(),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub percent: f64,
    /// The optimum was (almost) zero and the floor denominator was used.
    pub degenerate: bool,
}

/// `100 |pb - opt| / max(|opt|, GAP_EPS)`.
pub fn optimality_gap(pb: f64, opt: f64) -> Gap {
    let degenerate = opt.abs() < GAP_EPS;
    Gap { percent: 100.0 * (pb - opt).abs() / opt.abs().max(GAP_EPS), degenerate }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Proven,
    BestKnown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub objective: f64,
    pub provenance: Provenance,
}

impl Reference {
    /// Lowers the reference to `pb` if a run found something better.
    pub fn improve(&mut self, pb: f64) {
        if pb < self.objective {
            self.objective = pb;
            self.provenance = Provenance::BestKnown;
        }
    }
}

/// Long solve of the full instance.
pub fn reference_optimum(inst: &MipInstance, budget: f64, clock: ClockKind) -> Result<Reference, EvalError> {
    let trace = solve_mip_opts(inst, &MipOptions::new(budget, SolveMode::Optimize).with_clock(clock))?;
    let objective = trace.best_objective().ok_or_else(|| EvalError::NoReference(inst.name().to_string()))?;
    let provenance = if trace.status == SolveStatus::Optimal { Provenance::Proven } else { Provenance::BestKnown };
    Ok(Reference { objective, provenance })
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{gen_capped_selection, gen_set_cover};
    use crate::mip::{Incumbent, SolveStatus};

    fn trace(events: &[(f64, f64)]) -> SolveTrace {
        SolveTrace {
            events: events.iter().map(|&(time, objective)| Incumbent { time, objective }).collect(),
            status: SolveStatus::Feasible,
            best: None,
            dual_bound: f64::NEG_INFINITY,
            nodes: 0,
            lp_iterations: 0,
            elapsed: 2.0,
        }
    }

    #[test]
    fn staircase_examples() {
        assert_eq!(primal_integral(&trace(&[(0.0, 8.0)]), 2.0, 8.0, None).unwrap(), 0.0);
        assert_eq!(primal_integral(&trace(&[(0.0, 10.0)]), 2.0, 8.0, None).unwrap(), 4.0);
        assert_eq!(primal_integral(&trace(&[(0.0, 12.0), (1.0, 8.0)]), 2.0, 8.0, None).unwrap(), 4.0);
    }

    #[test]
    fn cap_before_first_incumbent() {
        let t = trace(&[(0.5, 10.0)]);
        assert!(matches!(primal_integral(&t, 2.0, 8.0, None), Err(EvalError::UndefinedIntegral(_))));
        assert_eq!(primal_integral(&t, 2.0, 8.0, Some(20.0)).unwrap(), 0.5 * 12.0 + 1.5 * 2.0);
        // no incumbent at all
        assert_eq!(primal_integral(&trace(&[]), 2.0, 8.0, Some(9.0)).unwrap(), 2.0);
        // events after the horizon are ignored
        assert_eq!(primal_integral(&trace(&[(0.0, 9.0), (3.0, 8.0)]), 2.0, 8.0, None).unwrap(), 2.0);
    }

    #[test]
    fn gap_examples() {
        assert_eq!(optimality_gap(100.0, 100.0).percent, 0.0);
        assert!((optimality_gap(110.0, 100.0).percent - 10.0).abs() < 1e-12);
        let g = optimality_gap(1.0, 0.0);
        assert!(g.degenerate);
        assert_eq!(g.percent, 100.0 / GAP_EPS);
    }

    #[test]
    fn reference_on_tiny_instance_is_proven() {
        let inst = gen_capped_selection(10, 3, 5).unwrap();
        let r = reference_optimum(&inst, 10.0, ClockKind::fixed()).unwrap();
        assert_eq!(r.provenance, Provenance::Proven);
        // best three weights
        let mut w: Vec<f64> = inst.objective_coeffs().to_vec();
        w.sort_by(f64::total_cmp);
        assert_eq!(r.objective, w[..3].iter().sum::<f64>());
    }

    #[test]
    fn reference_short_budget_and_monotone() {
        let inst = gen_set_cover(150, 300, 0.05, 3).unwrap();
        let short = reference_optimum(&inst, 1e-4, ClockKind::fixed());
        match short {
            Ok(r) => assert_eq!(r.provenance, Provenance::BestKnown),
            Err(e) => assert!(matches!(e, EvalError::NoReference(_))),
        }
        let small = gen_set_cover(30, 60, 0.1, 3).unwrap();
        let a = reference_optimum(&small, 0.002, ClockKind::fixed()).unwrap();
        let b = reference_optimum(&small, 1.0, ClockKind::fixed()).unwrap();
        assert!(b.objective <= a.objective);
    }

    #[test]
    fn cap_is_all_ones_for_set_cover() {
        let inst = gen_set_cover(10, 20, 0.2, 1).unwrap();
        assert_eq!(primal_bound_cap(&inst), Some(inst.objective_coeffs().iter().sum()));
    }
}
