//! Threshold-aware learning of the coverage heads.
//!
//! [`threshold_solve`] probes sub-MIPs at the coverages predicted by the
//! heads; [`train_tal`] turns its outcome into the coverage, threshold and
//! probability losses and updates only the five scalar heads.

pub mod properties;
pub mod search;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::diving::{predict_charged, predict_with_lp, realize_subset, Prediction, Strategy};
use crate::error::TalError;
use crate::rng::SplitMix64;
use crate::mip::{
    solve_lp, solve_lp_with, solve_mip_opts, solve_mip_with, ClockKind, LpResult, MipInstance, MipOptions, PartialAssignment,
    SolveMode, SolveTrace, Stopwatch,
};
use crate::model::{encode_graph, forward_cached, heads_backward, heads_forward, Group, Head, LossSpec, ModelOutput, ModelParams, Sgd};

pub use properties::{fit_frequency, meets_kappa, property_p, property_q};
pub use search::{dfo_search, Probe};

/// `rho_phi * (incumbent - lp) + lp`.
pub fn kappa(rho_phi: f64, incumbent_obj: f64, lp_obj: f64) -> f64 {
    rho_phi * (incumbent_obj - lp_obj) + lp_obj
}

/// Budget and realization settings shared by the probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Time budget of every sub-MIP solve.
    pub tau: f64,
    /// Grid points of the coverage search.
    pub probes: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub clock: ClockKind,
}

impl ProbeConfig {
    pub fn new(tau: f64, probes: usize) -> Self {
        ProbeConfig { tau, probes, strategy: Strategy::ConfidenceTopK, seed: 0, clock: ClockKind::Wall }
    }
}

/// 1 iff the sub-MIP at `rho` yields an incumbent within `budget`
/// (`FirstFeasible`; a timeout counts as infeasible).
pub fn indicator_feas(inst: &MipInstance, pred: &Prediction, rho: f64, cfg: &ProbeConfig) -> Result<bool, TalError> {
    let pa = realize_subset(pred, rho, cfg.strategy, cfg.seed)?;
    let sub = inst.fix_variables(&pa)?;
    let trace = solve_mip_opts(&sub, &MipOptions::new(cfg.tau, SolveMode::FirstFeasible).with_clock(cfg.clock))?;
    if !trace.has_incumbent() {
        log::debug!("{}: no incumbent at coverage {rho:.3} ({:?})", inst.name(), trace.status);
    }
    Ok(trace.has_incumbent())
}

/// 1 iff the LP relaxation of the sub-MIP at `rho` is optimal with
/// objective at least `kappa`.
pub fn indicator_lpsat(inst: &MipInstance, pred: &Prediction, rho: f64, kappa: f64, cfg: &ProbeConfig) -> Result<bool, TalError> {
    let pa = realize_subset(pred, rho, cfg.strategy, cfg.seed)?;
    Ok(lp_objective(&inst.fix_variables(&pa)?).is_some_and(|obj| meets_kappa(obj, kappa)))
}

fn lp_objective(inst: &MipInstance) -> Option<f64> {
    let lp = solve_lp(inst);
    if lp.is_optimal() {
        lp.objective
    } else {
        if lp.status == crate::mip::LpStatus::IterationLimit {
            log::warn!("{}: LP iteration limit, treated as infeasible", inst.name());
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSolveResult {
    pub i_feas: bool,
    pub i_lpsat: bool,
    pub rho_star: Option<f64>,
    /// Absent when the instance has no LP bound or no incumbent at `rho_phi`.
    pub kappa: Option<f64>,
    pub lp_obj: Option<f64>,
    /// Incumbent objective at `rho_pi`, `rho_psi`, `rho_phi`.
    pub incumbents: [Option<f64>; 3],
    /// LP objective of the sub-MIP at `rho_pi`.
    pub lp_at_pi: Option<f64>,
    /// Coverage search probes.
    pub probes: Vec<Probe>,
    /// Distinct sub-MIP solves performed.
    pub mip_solves: usize,
}

/// Sub-MIP solves memoized by fixed subset.
struct Solver<'a> {
    inst: &'a MipInstance,
    pred: &'a Prediction,
    cfg: &'a ProbeConfig,
    cache: HashMap<Vec<usize>, Option<f64>>,
    error: Option<TalError>,
}

impl Solver<'_> {
    fn subset(&self, rho: f64) -> Result<PartialAssignment, TalError> {
        Ok(realize_subset(self.pred, rho, self.cfg.strategy, self.cfg.seed)?)
    }

    /// Best objective within `tau` at coverage `rho`, `None` if no incumbent.
    fn objective(&mut self, rho: f64) -> Result<Option<f64>, TalError> {
        let pa = self.subset(rho)?;
        let key = pa.indices().to_vec();
        if let Some(&hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let sub = self.inst.fix_variables(&pa)?;
        let opts = MipOptions::new(self.cfg.tau, SolveMode::Optimize).with_clock(self.cfg.clock);
        let obj = solve_mip_opts(&sub, &opts)?.best_objective();
        self.cache.insert(key, obj);
        Ok(obj)
    }

    fn probe(&mut self, rho: f64) -> Option<f64> {
        match self.objective(rho) {
            Ok(v) => v,
            Err(e) => {
                self.error.get_or_insert(e);
                None
            }
        }
    }
}

/// Feasibility and LP-satisfiability indicators plus the best coverage in
/// the head interval. `root` is the root relaxation of `inst`.
pub fn threshold_solve(
    inst: &MipInstance,
    pred: &Prediction,
    root: &LpResult,
    heads: [f64; 3],
    cfg: &ProbeConfig,
) -> Result<ThresholdSolveResult, TalError> {
    let [rho_psi, rho_phi, rho_pi] = heads;
    let lp_obj = if root.is_optimal() { root.objective } else { None };
    let lp_at_pi = lp_objective(&inst.fix_variables(&realize_subset(pred, rho_pi, cfg.strategy, cfg.seed)?)?);
    let mut solver = Solver { inst, pred, cfg, cache: HashMap::new(), error: None };
    let at_pi = solver.objective(rho_pi)?;
    let at_psi = solver.objective(rho_psi)?;
    let at_phi = solver.objective(rho_phi)?;
    let i_feas = at_psi.is_some();
    let kappa = match (lp_obj, at_phi) {
        (Some(lp), Some(inc)) => Some(kappa(rho_phi, inc, lp)),
        _ => None,
    };
    let i_lpsat = match (lp_at_pi, kappa) {
        (Some(obj), Some(k)) => meets_kappa(obj, k),
        _ => false,
    };
    let (lo, hi) = (rho_psi.min(rho_phi), rho_psi.max(rho_phi));
    let low_end_feasible = if lo == rho_psi { at_psi.is_some() } else { at_phi.is_some() };
    let (rho_star, probes) = if low_end_feasible {
        let (best, log) = dfo_search(lo, hi, cfg.probes, |rho| solver.probe(rho))?;
        if let Some(e) = solver.error.take() {
            return Err(e);
        }
        (best.map(|(rho, _)| rho), log)
    } else {
        (None, Vec::new())
    };
    Ok(ThresholdSolveResult {
        i_feas,
        i_lpsat,
        rho_star,
        kappa,
        lp_obj,
        incumbents: [at_pi, at_psi, at_phi],
        lp_at_pi,
        probes,
        mip_solves: solver.cache.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalConfig {
    /// Outer iterations.
    pub outer: usize,
    /// Inner steps per outer iteration.
    pub inner: usize,
    pub probe: ProbeConfig,
    /// Learning rates of the `pi`, `(psi, phi)` and `(Psi, Phi)` groups.
    pub lr: [f64; 3],
    pub momentum: f64,
}

impl TalConfig {
    pub fn new(outer: usize, inner: usize, tau: f64, probes: usize) -> Self {
        TalConfig { outer, inner, probe: ProbeConfig::new(tau, probes), lr: [0.001, 0.01, 0.03], momentum: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub coverage: f64,
    pub threshold: f64,
    pub prob: f64,
}

/// One inner step, as written to the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub t: usize,
    pub j: usize,
    pub instance: String,
    pub rho_psi: f64,
    pub rho_phi: f64,
    pub rho_pi: f64,
    pub i_feas: bool,
    pub i_lpsat: bool,
    pub rho_star: Option<f64>,
    pub kappa: Option<f64>,
    /// Absent on steps that stopped the inner loop.
    pub losses: Option<StepLosses>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TalState {
    pub params: ModelParams,
    /// Outer iterations completed.
    pub t: usize,
    /// Inner steps taken in the last outer iteration.
    pub j: usize,
    pub history: Vec<StepLog>,
}

impl TalState {
    pub fn steps(&self) -> usize {
        self.history.len()
    }

    /// Fraction of inner steps that stopped on an absent `rho_star`.
    pub fn null_fraction(&self) -> f64 {
        let nulls = self.history.iter().filter(|s| s.losses.is_none()).count();
        if self.history.is_empty() {
            0.0
        } else {
            nulls as f64 / self.history.len() as f64
        }
    }
}

struct Fixed {
    name: String,
    pool: Vec<f64>,
    pred: Prediction,
    root: LpResult,
}

fn prepare(params: &ModelParams, inst: &MipInstance) -> Result<Fixed, TalError> {
    let root = solve_lp_with(inst, &Default::default());
    let graph = encode_graph(inst, &root);
    let (_, cache) = forward_cached(params, &graph)?;
    let (pred, _) = predict_with_lp(params, inst, &root)?;
    Ok(Fixed { name: inst.name().to_string(), pool: cache.pooled().to_vec(), pred, root })
}

/// Trains the five heads; the backbone and the per-variable head stay frozen,
/// so each instance's pooled embedding and predicted values are computed once.
pub fn train_tal(
    pretrained: &ModelParams,
    instances: &[MipInstance],
    cfg: &TalConfig,
    mut on_step: impl FnMut(&StepLog),
) -> Result<TalState, TalError> {
    if instances.is_empty() {
        return Err(TalError::EmptyInstances);
    }
    let fixed = instances.iter().map(|inst| prepare(pretrained, inst)).collect::<Result<Vec<_>, _>>()?;
    let mut params = pretrained.clone();
    let groups = [
        vec![Head::Pi],
        vec![Head::Psi, Head::Phi],
        vec![Head::PsiProb, Head::PhiProb],
    ];
    let mut optimizers: Vec<Vec<Sgd>> = groups
        .iter()
        .zip(cfg.lr)
        .map(|(g, lr)| g.iter().map(|_| Sgd::new(lr, cfg.momentum)).collect())
        .collect();
    let mut history = Vec::new();
    let mut last_j = 0;
    for t in 0..cfg.outer {
        last_j = 0;
        for j in 0..cfg.inner {
            let idx = (t * cfg.inner + j) % instances.len();
            let f = &fixed[idx];
            let cache = heads_forward(&params, &f.pool);
            let out = ModelOutput::from_logits(Vec::new(), cache.logits());
            let heads = [out.head(Head::Psi), out.head(Head::Phi), out.head(Head::Pi)];
            let probe = ProbeConfig { seed: SplitMix64::derive(cfg.probe.seed, (t * cfg.inner + j) as u64).next_u64(), ..cfg.probe };
            let res = threshold_solve(&instances[idx], &f.pred, &f.root, heads, &probe)?;
            let mut entry = StepLog {
                t,
                j,
                instance: f.name.clone(),
                rho_psi: heads[0],
                rho_phi: heads[1],
                rho_pi: heads[2],
                i_feas: res.i_feas,
                i_lpsat: res.i_lpsat,
                rho_star: res.rho_star,
                kappa: res.kappa,
                losses: None,
            };
            let Some(rho_star) = res.rho_star else {
                on_step(&entry);
                history.push(entry);
                break;
            };
            let specs = [
                LossSpec::Coverage { rho_star },
                LossSpec::Threshold { psi_prob: out.head(Head::PsiProb), phi_prob: out.head(Head::PhiProb) },
                LossSpec::Prob { i_feas: res.i_feas, i_lpsat: res.i_lpsat },
            ];
            let mut values = [0.0; 3];
            let mut d_heads = [0.0; 5];
            for (k, spec) in specs.iter().enumerate() {
                let (v, g) = spec.evaluate(&out)?;
                values[k] = v;
                for (a, b) in d_heads.iter_mut().zip(&g.heads) {
                    *a += b;
                }
            }
            let mut grads = vec![0.0; params.data.len()];
            heads_backward(&params, &cache, &d_heads, &mut grads);
            for (group, opts) in groups.iter().zip(optimizers.iter_mut()) {
                for (head, opt) in group.iter().zip(opts.iter_mut()) {
                    let range = params.layout.group(Group::Head(*head));
                    opt.step(&mut params.data[range.clone()], &grads[range]);
                }
            }
            entry.losses = Some(StepLosses { coverage: values[0], threshold: values[1], prob: values[2] });
            on_step(&entry);
            history.push(entry);
            last_j = j + 1;
        }
    }
    Ok(TalState { params, t: cfg.outer, j: last_j, history })
}

/// Test-time use of the trained heads: one sub-MIP at the predicted `rho_pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct TalSolve {
    pub rho: f64,
    pub fixed: PartialAssignment,
    pub trace: SolveTrace,
}

/// Root LP, forward pass and the sub-MIP all run on one stopwatch, so the
/// trace's times include preprocessing and `budget` bounds the total.
pub fn tal_solve(
    params: &ModelParams,
    inst: &MipInstance,
    budget: f64,
    clock: ClockKind,
    strategy: Strategy,
    seed: u64,
) -> Result<TalSolve, TalError> {
    let mut watch = Stopwatch::start(clock);
    let (pred, _) = predict_charged(params, inst, &mut watch)?;
    let rho = pred.heads[Head::Pi.index()];
    let fixed = realize_subset(&pred, rho, strategy, seed)?;
    let sub = inst.fix_variables(&fixed)?;
    let trace = solve_mip_with(&sub, &MipOptions::new(budget, SolveMode::Optimize).with_clock(clock), &mut watch)?;
    Ok(TalSolve { rho, fixed, trace })
}
