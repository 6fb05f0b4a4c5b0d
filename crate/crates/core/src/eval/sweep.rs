//! Feasibility and primal-bound curves over the confidence cutoff and over
//! coverage.

use serde::{Deserialize, Serialize};

use super::mean;
use crate::diving::{cf_sweep_point, predict, realize_subset, Prediction, Strategy};
use crate::error::EvalError;
use crate::mip::{solve_mip_opts, ClockKind, MipInstance, MipOptions, SolveMode};
use crate::model::ModelParams;
use crate::par::{map_indexed, Parallelism};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffRow {
    pub gamma: f64,
    pub feasible_ratio: f64,
    /// Mean final objective over the feasible sub-MIPs.
    pub mean_pb: Option<f64>,
}

fn predictions(params: &ModelParams, instances: &[MipInstance], par: Parallelism) -> Result<Vec<Prediction>, EvalError> {
    map_indexed(par, instances, |_, inst| predict(params, inst)).into_iter().map(|r| r.map_err(Into::into)).collect()
}

fn nonempty<T>(items: &[T], what: &str) -> Result<(), EvalError> {
    if items.is_empty() {
        return Err(EvalError::Empty(what.to_string()));
    }
    Ok(())
}

/// One row per cutoff in `gammas`, in grid order.
pub fn sweep_cutoff(
    params: &ModelParams,
    instances: &[MipInstance],
    gammas: &[f64],
    budget: f64,
    clock: ClockKind,
    par: Parallelism,
) -> Result<Vec<CutoffRow>, EvalError> {
    nonempty(instances, "no instances to sweep")?;
    nonempty(gammas, "empty cutoff grid")?;
    let preds = predictions(params, instances, par)?;
    let jobs: Vec<(usize, usize)> = (0..gammas.len()).flat_map(|g| (0..instances.len()).map(move |i| (g, i))).collect();
    let points = map_indexed(par, &jobs, |_, &(g, i)| cf_sweep_point(&preds[i], &instances[i], gammas[g], budget, clock));
    let mut points = points.into_iter();
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let chunk = points.by_ref().take(instances.len()).collect::<Result<Vec<_>, _>>()?;
        let feasible = chunk.iter().filter(|p| p.feasible).count();
        rows.push(CutoffRow {
            gamma,
            feasible_ratio: feasible as f64 / instances.len() as f64,
            mean_pb: mean(chunk.iter().filter_map(|p| p.trace.best_objective())),
        });
    }
    Ok(rows)
}

/// Instances of one size, labelled by their scale factor.
#[derive(Debug, Clone)]
pub struct ScaleSet {
    pub scale: f64,
    pub instances: Vec<MipInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSweep {
    pub rhos: Vec<f64>,
    pub strategy: Strategy,
    /// Sub-MIPs per grid point, cycling through the instances.
    pub samples: usize,
    pub budget: f64,
    pub clock: ClockKind,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub scale: f64,
    pub rho: f64,
    pub feasible_ratio: f64,
    pub mean_pb: Option<f64>,
}

/// One row per `(scale, rho)`, scales in input order, then grid order.
pub fn sweep_coverage(
    params: &ModelParams,
    sets: &[ScaleSet],
    cfg: &CoverageSweep,
    par: Parallelism,
) -> Result<Vec<CoverageRow>, EvalError> {
    nonempty(sets, "no instance scales")?;
    nonempty(&cfg.rhos, "empty coverage grid")?;
    if cfg.samples == 0 {
        return Err(EvalError::Empty("zero samples per point".into()));
    }
    let mut rows = Vec::new();
    for (si, set) in sets.iter().enumerate() {
        nonempty(&set.instances, &format!("no instances at scale {}", set.scale))?;
        let preds = predictions(params, &set.instances, par)?;
        let jobs: Vec<(usize, usize)> = (0..cfg.rhos.len()).flat_map(|r| (0..cfg.samples).map(move |s| (r, s))).collect();
        let outcomes = map_indexed(par, &jobs, |_, &(r, s)| -> Result<Option<f64>, EvalError> {
            let i = s % set.instances.len();
            let stream = ((si * cfg.rhos.len() + r) * cfg.samples + s) as u64;
            let seed = SplitMix64::derive(cfg.seed, stream).next_u64();
            let pa = realize_subset(&preds[i], cfg.rhos[r], cfg.strategy, seed)?;
            let sub = set.instances[i].fix_variables(&pa)?;
            let trace = solve_mip_opts(&sub, &MipOptions::new(cfg.budget, SolveMode::Optimize).with_clock(cfg.clock))?;
            Ok(trace.best_objective())
        });
        let mut outcomes = outcomes.into_iter();
        for &rho in &cfg.rhos {
            let chunk = outcomes.by_ref().take(cfg.samples).collect::<Result<Vec<_>, _>>()?;
            let feasible: Vec<f64> = chunk.into_iter().flatten().collect();
            rows.push(CoverageRow {
                scale: set.scale,
                rho,
                feasible_ratio: feasible.len() as f64 / cfg.samples as f64,
                mean_pb: mean(feasible),
            });
        }
    }
    Ok(rows)
}

/// Number of steps where a curve that should decrease rises by more than
/// `band`.
pub fn inversions(values: &[f64], band: f64) -> usize {
    values.windows(2).filter(|w| w[1] > w[0] + band).count()
}

pub(crate) fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// `gamma,feasible_ratio,mean_pb`
pub fn cutoff_csv(rows: &[CutoffRow]) -> String {
    to_csv(rows, &["gamma", "feasible_ratio", "mean_pb"])
}

/// `scale,rho,feasible_ratio,mean_pb`
pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    to_csv(rows, &["scale", "rho", "feasible_ratio", "mean_pb"])
}
