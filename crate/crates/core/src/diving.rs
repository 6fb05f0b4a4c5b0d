//! Neural diving: target collection, supervised training, rounding,
//! confidence filtering and coverage-driven partial assignments.

use serde::{Deserialize, Serialize};

use crate::error::{DivingError, ModelError};
use crate::mip::{
    solve_lp, solve_mip_opts, solve_mip_with, Assignment, ClockKind, LpResult, MipInstance, MipOptions, PartialAssignment, SolveMode,
    SolveStatus, SolveTrace, Stopwatch,
};
use crate::model::{
    backward, encode_graph, forward_cached, BipartiteGraph, LossSpec, ModelParams, Sgd, DEFAULT_HIDDEN, DEFAULT_ROUNDS,
};
use crate::par::{map_indexed, Parallelism};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub instance: MipInstance,
    /// Best solution found; discrete entries are exact integers.
    pub target: Assignment,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Collection {
    pub examples: Vec<TrainingExample>,
    /// Names of instances without an incumbent within the budget.
    pub dropped: Vec<String>,
}

fn snap_discrete(inst: &MipInstance, mut x: Assignment) -> Assignment {
    for d in inst.discrete_indices() {
        x.0[d] = x.0[d].round();
    }
    x
}

/// One `Optimize` solve per instance; instances without an incumbent are dropped.
pub fn collect_targets(
    instances: &[MipInstance],
    budget: f64,
    clock: ClockKind,
    par: Parallelism,
) -> Result<Collection, DivingError> {
    let opts = MipOptions::new(budget, SolveMode::Optimize).with_clock(clock);
    let results = map_indexed(par, instances, |_, inst| solve_mip_opts(inst, &opts));
    let mut examples = Vec::new();
    let mut dropped = Vec::new();
    for (inst, res) in instances.iter().zip(results) {
        let trace = res?;
        match trace.best {
            Some(best) => examples.push(TrainingExample {
                instance: inst.clone(),
                target: snap_discrete(inst, best),
                status: if trace.status == SolveStatus::Optimal { SolveStatus::Optimal } else { SolveStatus::Feasible },
            }),
            None => {
                log::info!("dropping {}: no incumbent within {budget} s", inst.name());
                dropped.push(inst.name().to_string());
            }
        }
    }
    Ok(Collection { examples, dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    pub hidden: usize,
    pub rounds: usize,
}

impl Default for NdConfig {
    fn default() -> Self {
        NdConfig {
            epochs: 200,
            lr: crate::model::optim::DEFAULT_LR,
            momentum: crate::model::optim::DEFAULT_MOMENTUM,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            rounds: DEFAULT_ROUNDS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNd {
    pub params: ModelParams,
    /// Full-batch loss before each epoch's step, then the final loss.
    pub losses: Vec<f64>,
}

struct Prepared {
    graph: BipartiteGraph,
    loss: LossSpec,
}

fn prepare(ex: &TrainingExample) -> Prepared {
    let graph = encode_graph(&ex.instance, &solve_lp(&ex.instance));
    let loss = LossSpec::Nd { target: ex.target.clone(), mask: graph.discrete.clone() };
    Prepared { graph, loss }
}

/// Mean loss and mean gradient over `data`; per-example work may run in
/// parallel, the sum is taken in example order.
fn batch_gradient(params: &ModelParams, data: &[Prepared], par: Parallelism) -> Result<(f64, Vec<f64>), ModelError> {
    let parts = map_indexed(par, data, |_, p| -> Result<(f64, Vec<f64>), ModelError> {
        let (out, cache) = forward_cached(params, &p.graph)?;
        let (value, d_out) = p.loss.evaluate(&out)?;
        Ok((value, backward(params, &p.graph, &cache, &d_out)))
    });
    let mut total = 0.0;
    let mut grads = vec![0.0; params.data.len()];
    for part in parts {
        let (value, g) = part?;
        total += value;
        for (a, b) in grads.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let scale = data.len() as f64;
    for g in &mut grads {
        *g /= scale;
    }
    Ok((total / scale, grads))
}

/// Full-batch training of the backbone and per-variable head on the mean
/// per-instance loss; one momentum step per epoch.
pub fn train_nd(examples: &[TrainingExample], cfg: &NdConfig, par: Parallelism) -> Result<TrainedNd, DivingError> {
    if examples.is_empty() {
        return Err(DivingError::EmptyExamples);
    }
    let data: Vec<Prepared> = map_indexed(par, examples, |_, ex| prepare(ex));
    let mut params = ModelParams::init(cfg.hidden, cfg.rounds, cfg.seed);
    let mut opt = Sgd::new(cfg.lr, cfg.momentum);
    let mut losses = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..cfg.epochs {
        let (loss, grads) = batch_gradient(&params, &data, par)?;
        log::debug!("epoch {epoch}: loss {loss:.6}");
        losses.push(loss);
        opt.step(&mut params.data, &grads);
    }
    losses.push(batch_gradient(&params, &data, par)?.0);
    Ok(TrainedNd { params, losses })
}

/// Fraction of discrete variables whose rounded prediction equals the target.
pub fn variable_accuracy(params: &ModelParams, examples: &[TrainingExample]) -> Result<f64, DivingError> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for ex in examples {
        let pred = predict(params, &ex.instance)?;
        for (k, &d) in pred.discrete.iter().enumerate() {
            total += 1;
            if pred.values[k] as f64 == ex.target.0[d] {
                hits += 1;
            }
        }
    }
    Ok(if total == 0 { 0.0 } else { hits as f64 / total as f64 })
}

/// `max(p, 1 - p)`.
pub fn confidence(p: f64) -> f64 {
    p.max(1.0 - p)
}

/// `s_d = 1` iff `confidence(p_d) >= gamma`.
pub fn cf_select(probs: &[f64], gamma: f64) -> Result<Vec<bool>, DivingError> {
    if !(0.5..=1.0).contains(&gamma) {
        return Err(DivingError::Cutoff(gamma));
    }
    Ok(probs.iter().map(|&p| confidence(p) >= gamma).collect())
}

/// Most probable value: 1 iff `p >= 0.5`.
pub fn round_values(probs: &[f64]) -> Vec<i64> {
    probs.iter().map(|&p| i64::from(p >= 0.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    ConfidenceTopK,
    BernoulliRandom,
}

/// Model output for one instance, arranged for fixing.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub num_vars: usize,
    pub discrete: Vec<usize>,
    pub probs: Vec<f64>,
    pub heads: [f64; 5],
    /// Rounded values clamped into the variable bounds.
    pub values: Vec<i64>,
    /// Positions into `discrete`, most confident first, lowest index on ties.
    pub order: Vec<usize>,
}

impl Prediction {
    pub fn from_probs(inst: &MipInstance, probs: Vec<f64>, heads: [f64; 5]) -> Result<Self, DivingError> {
        let discrete = inst.discrete_indices();
        if probs.len() != discrete.len() {
            return Err(ModelError::Shape(format!("{} probabilities for {} discrete variables", probs.len(), discrete.len())).into());
        }
        let values = round_values(&probs)
            .into_iter()
            .zip(&discrete)
            .map(|(v, &d)| (v as f64).clamp(inst.lower()[d], inst.upper()[d]) as i64)
            .collect();
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| confidence(probs[b]).total_cmp(&confidence(probs[a])).then(a.cmp(&b)));
        Ok(Prediction { num_vars: inst.num_vars(), discrete, probs, heads, values, order })
    }

    pub fn num_discrete(&self) -> usize {
        self.discrete.len()
    }

    /// Rounded predictions as a full assignment (continuous entries 0).
    pub fn assignment(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        for (k, &d) in self.discrete.iter().enumerate() {
            x[d] = self.values[k] as f64;
        }
        x
    }

    fn partial(&self, positions: impl Iterator<Item = usize>) -> PartialAssignment {
        let pairs = positions.map(|k| (self.discrete[k], self.values[k])).collect();
        PartialAssignment::new(pairs, self.num_discrete())
    }
}

/// Rough operation count of one forward pass, for the work clock.
pub fn forward_work(params: &ModelParams, graph: &BipartiteGraph) -> f64 {
    let h = params.hidden() as f64;
    let nodes = (graph.num_vars() + graph.num_cons()) as f64;
    let edges = graph.edges.len() as f64;
    params.rounds() as f64 * (2.0 * nodes * h * 2.0 * h + 2.0 * edges * h) + nodes * 8.0 * h + 5.0 * h * h
}

pub fn predict_with_lp(params: &ModelParams, inst: &MipInstance, lp: &LpResult) -> Result<(Prediction, f64), DivingError> {
    let graph = encode_graph(inst, lp);
    let (out, _) = forward_cached(params, &graph)?;
    let work = forward_work(params, &graph);
    Ok((Prediction::from_probs(inst, out.probs, out.heads)?, work))
}

pub fn predict(params: &ModelParams, inst: &MipInstance) -> Result<Prediction, DivingError> {
    Ok(predict_with_lp(params, inst, &solve_lp(inst))?.0)
}

/// Root LP plus forward pass, with the work charged to `watch`.
pub fn predict_charged(params: &ModelParams, inst: &MipInstance, watch: &mut Stopwatch) -> Result<(Prediction, LpResult), DivingError> {
    let lp = solve_lp(inst);
    watch.charge(lp.work);
    let (pred, work) = predict_with_lp(params, inst, &lp)?;
    watch.charge(work);
    Ok((pred, lp))
}

/// Number of variables `ConfidenceTopK` fixes at coverage `rho`.
pub fn topk_count(rho: f64, r: usize) -> usize {
    ((rho * r as f64 - 1e-9).ceil().max(0.0) as usize).min(r)
}

pub fn realize_subset(pred: &Prediction, rho: f64, strategy: Strategy, seed: u64) -> Result<PartialAssignment, DivingError> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(DivingError::Coverage(rho));
    }
    let r = pred.num_discrete();
    Ok(match strategy {
        Strategy::ConfidenceTopK => pred.partial(pred.order[..topk_count(rho, r)].iter().copied()),
        Strategy::BernoulliRandom => {
            let mut rng = SplitMix64::new(seed);
            let picked: Vec<usize> = (0..r).filter(|_| rng.bernoulli(rho)).collect();
            pred.partial(picked.into_iter())
        }
    })
}

/// Variables selected by the confidence filter, fixed to their rounded values.
pub fn cf_assignment(pred: &Prediction, gamma: f64) -> Result<PartialAssignment, DivingError> {
    let mask = cf_select(&pred.probs, gamma)?;
    Ok(pred.partial((0..mask.len()).filter(|&k| mask[k])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub feasible: bool,
    pub trace: SolveTrace,
    pub rho: f64,
}

/// Fixes the confidence-filtered variables and solves the sub-MIP.
pub fn cf_sweep_point(
    pred: &Prediction,
    inst: &MipInstance,
    gamma: f64,
    budget: f64,
    clock: ClockKind,
) -> Result<SweepPoint, DivingError> {
    let pa = cf_assignment(pred, gamma)?;
    let sub = inst.fix_variables(&pa)?;
    let trace = solve_mip_opts(&sub, &MipOptions::new(budget, SolveMode::Optimize).with_clock(clock))?;
    Ok(SweepPoint { feasible: trace.has_incumbent(), rho: pa.coverage(), trace })
}

/// Test-time confidence-filter diving: root LP, forward pass and sub-MIP on
/// one stopwatch, so `budget` bounds the total.
pub fn cf_solve(
    params: &ModelParams,
    inst: &MipInstance,
    gamma: f64,
    budget: f64,
    clock: ClockKind,
) -> Result<(SolveTrace, PartialAssignment), DivingError> {
    let mut watch = Stopwatch::start(clock);
    let (pred, _) = predict_charged(params, inst, &mut watch)?;
    let pa = cf_assignment(&pred, gamma)?;
    let sub = inst.fix_variables(&pa)?;
    let trace = solve_mip_with(&sub, &MipOptions::new(budget, SolveMode::Optimize).with_clock(clock), &mut watch)?;
    Ok((trace, pa))
}

/// Training-set manifest: instance paths with their targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance: String,
    pub target: Vec<f64>,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub examples: Vec<ManifestEntry>,
}
