//! Head-to-head runs of the plain solver, confidence-filter diving with a
//! fixed and a tuned cutoff, and the TaL coverage head, all under one budget.

use serde::{Deserialize, Serialize};

use super::sweep::to_csv;
use super::{mean, optimality_gap, primal_bound_cap, primal_integral, reference_optimum, Reference};
use crate::diving::{cf_solve, Strategy};
use crate::error::EvalError;
use crate::mip::{solve_mip_opts, solves_on_this_thread, ClockKind, MipInstance, MipOptions, SolveMode, SolveTrace};
use crate::model::ModelParams;
use crate::par::{map_indexed, Parallelism};
use crate::tal::tal_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Baseline,
    Cf,
    CfAuto,
    Tal,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Baseline, Method::Cf, Method::CfAuto, Method::Tal];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub instance: String,
    pub method: Method,
    pub pi: Option<f64>,
    /// Final primal bound; the cap when no incumbent was found.
    pub pb: Option<f64>,
    pub og_pct: Option<f64>,
    pub optimal: bool,
    pub seconds: f64,
    /// Coverage of the fixed subset (0 for the baseline).
    #[serde(skip)]
    pub rho: f64,
    /// Branch-and-bound runs this method started for the instance.
    #[serde(skip)]
    pub solves: usize,
}

/// Inputs of one benchmark run.
#[derive(Debug, Clone)]
pub struct BenchSetup<'a> {
    pub test: &'a [MipInstance],
    /// Instances for tuning the cutoff of `CfAuto`.
    pub validation: &'a [MipInstance],
    pub nd: &'a ModelParams,
    /// TaL-trained parameters; the TaL method is skipped without them.
    pub tal: Option<&'a ModelParams>,
    pub budget: f64,
    /// Cutoff of the fixed-cutoff method.
    pub gamma: f64,
    pub gamma_grid: Vec<f64>,
    pub reference_budget: f64,
    pub clock: ClockKind,
    pub strategy: Strategy,
    pub seed: u64,
    pub par: Parallelism,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub gamma: f64,
    /// Evaluated cutoffs with their mean primal area on the validation set.
    pub probes: Vec<(f64, f64)>,
    pub solves_per_instance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub instances: usize,
    pub mean_pi: Option<f64>,
    pub mean_pb: Option<f64>,
    pub mean_og_pct: Option<f64>,
    /// Fraction of instances that reached the reference objective.
    pub optimal_ratio: f64,
    pub sub_mip_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    /// Per instance, methods in [`Method::ALL`] order.
    pub rows: Vec<MetricsRow>,
    pub references: Vec<(String, Reference)>,
    pub tuning: Tuning,
    pub summaries: Vec<MethodSummary>,
}

impl BenchReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }
}

/// `instance,method,pi,pb,og_pct,optimal,seconds`
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    to_csv(rows, &["instance", "method", "pi", "pb", "og_pct", "optimal", "seconds"])
}

/// Area under the primal bound over `[0, budget]` (the primal integral with
/// a zero reference), infinite when undefined.
fn primal_area(trace: &SolveTrace, budget: f64, cap: Option<f64>) -> f64 {
    primal_integral(trace, budget, 0.0, cap).unwrap_or(f64::INFINITY)
}

/// Picks the cutoff minimizing the mean primal integral on `validation`.
/// Since the reference is fixed per instance, minimizing the mean primal
/// area is equivalent and needs no reference solve.
///
/// The grid is evaluated first, then `ceil(log2 |grid|)` midpoints bisect
/// the bracket around the best grid point.
pub fn tune_gamma(
    nd: &ModelParams,
    validation: &[MipInstance],
    grid: &[f64],
    budget: f64,
    clock: ClockKind,
    par: Parallelism,
) -> Result<Tuning, EvalError> {
    if validation.is_empty() || grid.is_empty() {
        return Err(EvalError::Empty("cutoff tuning needs validation instances and a grid".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let caps: Vec<Option<f64>> = validation.iter().map(primal_bound_cap).collect();
    let mut probes = Vec::new();
    let mut eval = |gamma: f64| -> Result<f64, EvalError> {
        let areas = map_indexed(par, validation, |i, inst| {
            cf_solve(nd, inst, gamma, budget, clock).map(|(trace, _)| primal_area(&trace, budget, caps[i]))
        });
        let total = areas.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum::<f64>();
        let value = total / validation.len() as f64;
        probes.push((gamma, value));
        Ok(value)
    };
    let values = grid.iter().map(|&g| eval(g)).collect::<Result<Vec<_>, _>>()?;
    let b = (0..values.len()).fold(0, |b, i| if values[i] < values[b] { i } else { b });
    let (mut lo, mut hi) = (grid[b.saturating_sub(1)], grid[(b + 1).min(grid.len() - 1)]);
    let (mut best, mut best_value) = (grid[b], values[b]);
    let steps = (grid.len() as f64).log2().ceil() as usize;
    for _ in 0..steps {
        if hi - lo <= 0.0 {
            break;
        }
        let left = best - lo >= hi - best;
        let mid = if left { 0.5 * (lo + best) } else { 0.5 * (best + hi) };
        let v = eval(mid)?;
        match (v < best_value, left) {
            (true, true) => (hi, best, best_value) = (best, mid, v),
            (true, false) => (lo, best, best_value) = (best, mid, v),
            (false, true) => lo = mid,
            (false, false) => hi = mid,
        }
    }
    let solves_per_instance = probes.len();
    Ok(Tuning { gamma: best, probes, solves_per_instance })
}

struct Run {
    trace: SolveTrace,
    rho: f64,
    solves: usize,
}

fn counted(f: impl FnOnce() -> Result<(SolveTrace, f64), EvalError>) -> Result<Run, EvalError> {
    let before = solves_on_this_thread();
    let (trace, rho) = f()?;
    Ok(Run { trace, rho, solves: solves_on_this_thread() - before })
}

fn run_instance(setup: &BenchSetup, gamma_auto: f64, inst: &MipInstance) -> Result<Vec<(Method, Run)>, EvalError> {
    let (budget, clock) = (setup.budget, setup.clock);
    let mut runs = vec![
        (
            Method::Baseline,
            counted(|| Ok((solve_mip_opts(inst, &MipOptions::new(budget, SolveMode::Optimize).with_clock(clock))?, 0.0)))?,
        ),
        (Method::Cf, counted(|| cf_solve(setup.nd, inst, setup.gamma, budget, clock).map(|(t, pa)| (t, pa.coverage())).map_err(Into::into))?),
        (Method::CfAuto, counted(|| cf_solve(setup.nd, inst, gamma_auto, budget, clock).map(|(t, pa)| (t, pa.coverage())).map_err(Into::into))?),
    ];
    if let Some(tal) = setup.tal {
        let run = counted(|| {
            let res = tal_solve(tal, inst, budget, clock, setup.strategy, setup.seed)?;
            Ok((res.trace, res.fixed.coverage()))
        })?;
        runs.push((Method::Tal, run));
    }
    Ok(runs)
}

pub fn run_benchmark(setup: &BenchSetup) -> Result<BenchReport, EvalError> {
    if setup.test.is_empty() {
        return Err(EvalError::Empty("no test instances".into()));
    }
    let tuning = tune_gamma(setup.nd, setup.validation, &setup.gamma_grid, setup.budget, setup.clock, setup.par)?;
    let per_instance = map_indexed(setup.par, setup.test, |_, inst| -> Result<_, EvalError> {
        let runs = run_instance(setup, tuning.gamma, inst)?;
        let reference = match reference_optimum(inst, setup.reference_budget, setup.clock) {
            Ok(r) => Some(r),
            Err(EvalError::NoReference(_)) => None,
            Err(e) => return Err(e),
        };
        Ok((runs, reference))
    });
    let mut rows = Vec::new();
    let mut references = Vec::new();
    for (inst, item) in setup.test.iter().zip(per_instance) {
        let (runs, reference) = item?;
        let best_found = runs.iter().filter_map(|(_, r)| r.trace.best_objective()).fold(None, |a: Option<f64>, v| {
            Some(a.map_or(v, |a| a.min(v)))
        });
        let mut reference = match (reference, best_found) {
            (Some(r), _) => r,
            (None, Some(v)) => Reference { objective: v, provenance: super::Provenance::BestKnown },
            (None, None) => return Err(EvalError::NoReference(inst.name().to_string())),
        };
        if let Some(v) = best_found {
            reference.improve(v);
        }
        let opt = reference.objective;
        let cap = primal_bound_cap(inst);
        for (method, run) in runs {
            let found = run.trace.best_objective();
            let pb = found.or(cap);
            rows.push(MetricsRow {
                instance: inst.name().to_string(),
                method,
                pi: primal_integral(&run.trace, setup.budget, opt, cap).ok(),
                pb,
                og_pct: pb.map(|pb| optimality_gap(pb, opt).percent),
                optimal: found.is_some_and(|v| (v - opt).abs() <= 1e-6 * opt.abs().max(1.0)),
                seconds: run.trace.elapsed,
                rho: run.rho,
                solves: run.solves,
            });
        }
        references.push((inst.name().to_string(), reference));
    }
    let summaries = Method::ALL
        .iter()
        .filter_map(|&m| {
            let rows: Vec<&MetricsRow> = rows.iter().filter(|r| r.method == m).collect();
            (!rows.is_empty()).then(|| MethodSummary {
                method: m,
                instances: rows.len(),
                mean_pi: mean(rows.iter().filter_map(|r| r.pi)),
                mean_pb: mean(rows.iter().filter_map(|r| r.pb)),
                mean_og_pct: mean(rows.iter().filter_map(|r| r.og_pct)),
                optimal_ratio: rows.iter().filter(|r| r.optimal).count() as f64 / rows.len() as f64,
                sub_mip_solves: rows.iter().map(|r| r.solves).sum(),
            })
        })
        .collect();
    Ok(BenchReport { rows, references, tuning, summaries })
}
