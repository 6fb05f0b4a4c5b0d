//! Message-passing network over [`BipartiteGraph`].
//!
//! Parameters live in one flat vector; [`Layout`] names the tensors inside
//! it. One round updates constraints from their variables, then variables
//! from their constraints, each through `relu(W [self, msg] + b)` with
//! coefficient-weighted sum messages.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::graph::{BipartiteGraph, CONS_FEATURES, VAR_FEATURES};
use crate::error::ModelError;
use crate::rng::SplitMix64;

pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_ROUNDS: usize = 2;
pub const CLAMP: f64 = 30.0;

/// The five scalar heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Head {
    Psi,
    Phi,
    Pi,
    PsiProb,
    PhiProb,
}

impl Head {
    pub const ALL: [Head; 5] = [Head::Psi, Head::Phi, Head::Pi, Head::PsiProb, Head::PhiProb];

    pub fn index(self) -> usize {
        self as usize
    }

    fn tag(self) -> &'static str {
        match self {
            Head::Psi => "psi",
            Head::Phi => "phi",
            Head::Pi => "pi",
            Head::PsiProb => "psi_prob",
            Head::PhiProb => "phi_prob",
        }
    }
}

/// Disjoint parameter groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Backbone,
    VarHead,
    Head(Head),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub hidden: usize,
    pub rounds: usize,
    pub tensors: Vec<TensorSpec>,
}

// indices into `Layout::tensors`
const EMB_VAR_W: usize = 0;
const EMB_VAR_B: usize = 1;
const EMB_CONS_W: usize = 2;
const EMB_CONS_B: usize = 3;
const ROUND_BASE: usize = 4;

impl Layout {
    pub fn new(hidden: usize, rounds: usize) -> Self {
        let h = hidden;
        let mut shapes: Vec<(String, Vec<usize>)> = vec![
            ("embed.var.w".into(), vec![h, VAR_FEATURES]),
            ("embed.var.b".into(), vec![h]),
            ("embed.cons.w".into(), vec![h, CONS_FEATURES]),
            ("embed.cons.b".into(), vec![h]),
        ];
        for l in 0..rounds {
            shapes.push((format!("round{l}.cons.w"), vec![h, 2 * h]));
            shapes.push((format!("round{l}.cons.b"), vec![h]));
            shapes.push((format!("round{l}.var.w"), vec![h, 2 * h]));
            shapes.push((format!("round{l}.var.b"), vec![h]));
        }
        shapes.push(("out.w".into(), vec![h]));
        shapes.push(("out.b".into(), vec![1]));
        for head in Head::ALL {
            let t = head.tag();
            shapes.push((format!("head.{t}.w1"), vec![h, h]));
            shapes.push((format!("head.{t}.b1"), vec![h]));
            shapes.push((format!("head.{t}.w2"), vec![h]));
            shapes.push((format!("head.{t}.b2"), vec![1]));
        }
        let mut offset = 0;
        let tensors = shapes
            .into_iter()
            .map(|(name, shape)| {
                let spec = TensorSpec { name, shape, offset };
                offset += spec.len();
                spec
            })
            .collect();
        Layout { hidden, rounds, tensors }
    }

    pub fn total(&self) -> usize {
        self.tensors.last().map_or(0, |t| t.offset + t.len())
    }

    fn round(&self, l: usize) -> [&TensorSpec; 4] {
        let k = ROUND_BASE + 4 * l;
        [&self.tensors[k], &self.tensors[k + 1], &self.tensors[k + 2], &self.tensors[k + 3]]
    }

    fn out(&self) -> [&TensorSpec; 2] {
        let k = ROUND_BASE + 4 * self.rounds;
        [&self.tensors[k], &self.tensors[k + 1]]
    }

    fn head(&self, head: Head) -> [&TensorSpec; 4] {
        let k = ROUND_BASE + 4 * self.rounds + 2 + 4 * head.index();
        [&self.tensors[k], &self.tensors[k + 1], &self.tensors[k + 2], &self.tensors[k + 3]]
    }

    pub fn group(&self, group: Group) -> Range<usize> {
        match group {
            Group::Backbone => 0..self.out()[0].offset,
            Group::VarHead => self.out()[0].offset..self.out()[1].range().end,
            Group::Head(head) => {
                let t = self.head(head);
                t[0].offset..t[3].range().end
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layout: Layout,
    pub data: Vec<f64>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Pre-activation clamped to `[-CLAMP, CLAMP]`.
pub fn clamp_logit(z: f64) -> f64 {
    z.clamp(-CLAMP, CLAMP)
}

/// Derivative of [`clamp_logit`].
fn clamp_grad(z: f64) -> f64 {
    if z.abs() < CLAMP {
        1.0
    } else {
        0.0
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

impl ModelParams {
    pub fn zeros(hidden: usize, rounds: usize) -> Self {
        let layout = Layout::new(hidden, rounds);
        let data = vec![0.0; layout.total()];
        ModelParams { layout, data }
    }

    /// He-uniform weights and zero biases. Head output weights are scaled
    /// down by 10. The `psi`/`phi` output biases start at logit(0.75) and
    /// logit(0.25), so the coverage interval starts wide, and each prob head
    /// starts at its coverage head's value.
    pub fn init(hidden: usize, rounds: usize, seed: u64) -> Self {
        let mut p = Self::zeros(hidden, rounds);
        let mut rng = SplitMix64::new(seed);
        for t in p.layout.tensors.clone() {
            if t.shape.len() == 2 {
                let bound = (6.0 / t.shape[1] as f64).sqrt();
                for v in &mut p.data[t.range()] {
                    *v = rng.uniform(-bound, bound);
                }
            }
        }
        let fill = |p: &mut Self, spec: &TensorSpec, rng: &mut SplitMix64, bound: f64| {
            for v in &mut p.data[spec.range()] {
                *v = rng.uniform(-bound, bound);
            }
        };
        let out_w = p.layout.out()[0].clone();
        fill(&mut p, &out_w, &mut rng, 0.1 * (3.0 / hidden as f64).sqrt());
        for head in Head::ALL {
            let [_, _, w2, b2] = p.layout.head(head).map(|t| t.clone());
            fill(&mut p, &w2, &mut rng, 0.1 * (3.0 / hidden as f64).sqrt());
            p.data[b2.offset] = match head {
                Head::Psi | Head::PsiProb => logit(0.75),
                Head::Phi | Head::PhiProb => logit(0.25),
                _ => 0.0,
            };
        }
        p
    }

    pub fn hidden(&self) -> usize {
        self.layout.hidden
    }

    pub fn rounds(&self) -> usize {
        self.layout.rounds
    }

    pub fn group(&self, group: Group) -> &[f64] {
        &self.data[self.layout.group(group)]
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.tensors.iter().find(|t| t.name == name).map(|t| &self.data[t.range()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let range = self.layout.tensors.iter().find(|t| t.name == name)?.range();
        Some(&mut self.data[range])
    }

    fn slice(&self, t: &TensorSpec) -> &[f64] {
        &self.data[t.range()]
    }
}

/// Probabilities come with their clamped logits so losses can be evaluated
/// without cancellation when a probability saturates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    /// `p(x_d = 1)` per discrete variable, in `BipartiteGraph::discrete` order.
    pub probs: Vec<f64>,
    /// Indexed by [`Head::index`].
    pub heads: [f64; 5],
    pub prob_logits: Vec<f64>,
    pub head_logits: [f64; 5],
}

impl ModelOutput {
    pub fn from_logits(prob_logits: Vec<f64>, head_logits: [f64; 5]) -> Self {
        let prob_logits: Vec<f64> = prob_logits.into_iter().map(clamp_logit).collect();
        let head_logits = head_logits.map(clamp_logit);
        ModelOutput {
            probs: prob_logits.iter().map(|&z| sigmoid(z)).collect(),
            heads: head_logits.map(sigmoid),
            prob_logits,
            head_logits,
        }
    }

    pub fn head(&self, head: Head) -> f64 {
        self.heads[head.index()]
    }

    pub fn head_logit(&self, head: Head) -> f64 {
        self.head_logits[head.index()]
    }
}

/// Upstream gradient of a loss with respect to the clamped output logits.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrad {
    pub probs: Vec<f64>,
    pub heads: [f64; 5],
}

impl OutputGrad {
    pub fn zeros(num_discrete: usize) -> Self {
        OutputGrad { probs: vec![0.0; num_discrete], heads: [0.0; 5] }
    }
}

/// Intermediate values of the five scalar heads for one pooled embedding.
#[derive(Debug, Clone)]
pub struct HeadCache {
    pool: Vec<f64>,
    normed: Vec<f64>,
    scale: f64,
    hidden: [Vec<f64>; 5],
    pre: [f64; 5],
}

impl HeadCache {
    /// Clamped logits of the five heads.
    pub fn logits(&self) -> [f64; 5] {
        self.pre.map(clamp_logit)
    }

    pub fn values(&self) -> [f64; 5] {
        self.logits().map(sigmoid)
    }
}

/// Everything the backward pass needs.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    h: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    msg_cons: Vec<Vec<f64>>,
    msg_var: Vec<Vec<f64>>,
    var_pre: Vec<f64>,
    pub heads: HeadCache,
}

impl ForwardCache {
    /// Mean of the final variable embeddings.
    pub fn pooled(&self) -> &[f64] {
        &self.heads.pool
    }
}

fn check_shapes(g: &BipartiteGraph) -> Result<(), ModelError> {
    let (nv, nc) = (g.num_vars(), g.num_cons());
    if nv == 0 {
        return Err(ModelError::Shape("graph has no variables".into()));
    }
    if let Some(&(c, v, _)) = g.edges.iter().find(|&&(c, v, _)| c >= nc || v >= nv) {
        return Err(ModelError::Shape(format!("edge ({c}, {v}) outside {nc} x {nv}")));
    }
    if let Some(&d) = g.discrete.iter().find(|&&d| d >= nv) {
        return Err(ModelError::Shape(format!("discrete index {d} outside {nv} variables")));
    }
    Ok(())
}

/// `out[r] = act(W x_r + b)` for every row `x_r` of `xs` (row-major, width `k`).
fn dense(xs: &[f64], k: usize, w: &[f64], b: &[f64], out_dim: usize) -> Vec<f64> {
    let rows = xs.len() / k;
    let mut out = vec![0.0; rows * out_dim];
    for r in 0..rows {
        let x = &xs[r * k..(r + 1) * k];
        for o in 0..out_dim {
            let wrow = &w[o * k..(o + 1) * k];
            let mut s = b[o];
            for (wi, xi) in wrow.iter().zip(x) {
                s += wi * xi;
            }
            out[r * out_dim + o] = relu(s);
        }
    }
    out
}

/// Accumulates parameter grads of `relu(W x + b)` given `d_out` (already
/// masked by the ReLU derivative) and returns `d_x`.
fn dense_back(xs: &[f64], k: usize, w: &[f64], d_pre: &[f64], out_dim: usize, gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let rows = xs.len() / k;
    let mut dx = vec![0.0; xs.len()];
    for r in 0..rows {
        let x = &xs[r * k..(r + 1) * k];
        for o in 0..out_dim {
            let d = d_pre[r * out_dim + o];
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let wrow = &w[o * k..(o + 1) * k];
            let grow = &mut gw[o * k..(o + 1) * k];
            for i in 0..k {
                grow[i] += d * x[i];
                dx[r * k + i] += d * wrow[i];
            }
        }
    }
    dx
}

fn concat_rows(a: &[f64], b: &[f64], h: usize) -> Vec<f64> {
    let rows = a.len() / h;
    let mut out = Vec::with_capacity(2 * a.len());
    for r in 0..rows {
        out.extend_from_slice(&a[r * h..(r + 1) * h]);
        out.extend_from_slice(&b[r * h..(r + 1) * h]);
    }
    out
}

fn relu_mask(d: &mut [f64], act: &[f64]) {
    for (dv, &a) in d.iter_mut().zip(act) {
        if a <= 0.0 {
            *dv = 0.0;
        }
    }
}

/// Heads from a pooled embedding. Pure in `(params, pool)`.
///
/// The pooled vector is divided by `sqrt(mean(pool^2) + 1)` first: sum
/// aggregation lets its norm grow with degree and depth, and the heads
/// would otherwise saturate.
pub fn heads_forward(params: &ModelParams, pool: &[f64]) -> HeadCache {
    let h = params.hidden();
    let scale = (pool.iter().map(|v| v * v).sum::<f64>() / h as f64 + 1.0).sqrt();
    let normed: Vec<f64> = pool.iter().map(|v| v / scale).collect();
    let mut hidden: [Vec<f64>; 5] = Default::default();
    let mut pre = [0.0; 5];
    for head in Head::ALL {
        let [w1, b1, w2, b2] = params.layout.head(head);
        let a = dense(&normed, h, params.slice(w1), params.slice(b1), h);
        let z = params.data[b2.offset] + params.slice(w2).iter().zip(&a).map(|(w, v)| w * v).sum::<f64>();
        let k = head.index();
        pre[k] = z;
        hidden[k] = a;
    }
    HeadCache { pool: pool.to_vec(), normed, scale, hidden, pre }
}

/// Accumulates head-parameter gradients into `grads` given gradients in the
/// clamped head logits; returns `d pool`.
pub fn heads_backward(params: &ModelParams, cache: &HeadCache, d_heads: &[f64; 5], grads: &mut [f64]) -> Vec<f64> {
    let h = params.hidden();
    let mut d_normed = vec![0.0; h];
    for head in Head::ALL {
        let k = head.index();
        if d_heads[k] == 0.0 {
            continue;
        }
        let dz = d_heads[k] * clamp_grad(cache.pre[k]);
        let [w1, b1, w2, b2] = params.layout.head(head);
        grads[b2.offset] += dz;
        let w2v = params.slice(w2);
        let mut d_a = vec![0.0; h];
        for i in 0..h {
            grads[w2.offset + i] += dz * cache.hidden[k][i];
            d_a[i] = dz * w2v[i];
        }
        relu_mask(&mut d_a, &cache.hidden[k]);
        let (gw, gb) = split_pair(grads, w1, b1);
        let dp = dense_back(&cache.normed, h, params.slice(w1), &d_a, h, gw, gb);
        for i in 0..h {
            d_normed[i] += dp[i];
        }
    }
    let s = cache.scale;
    let dot: f64 = d_normed.iter().zip(&cache.pool).map(|(d, p)| d * p).sum();
    d_normed.iter().zip(&cache.pool).map(|(d, p)| d / s - p * dot / (h as f64 * s * s * s)).collect()
}

pub fn forward(params: &ModelParams, g: &BipartiteGraph) -> Result<ModelOutput, ModelError> {
    forward_cached(params, g).map(|(out, _)| out)
}

pub fn forward_cached(params: &ModelParams, g: &BipartiteGraph) -> Result<(ModelOutput, ForwardCache), ModelError> {
    check_shapes(g)?;
    let h = params.hidden();
    let (nv, nc) = (g.num_vars(), g.num_cons());
    let lay = &params.layout;
    let xv: Vec<f64> = g.var_feats.iter().flatten().copied().collect();
    let xc: Vec<f64> = g.cons_feats.iter().flatten().copied().collect();
    let t = &lay.tensors;
    let mut hs = vec![dense(&xv, VAR_FEATURES, params.slice(&t[EMB_VAR_W]), params.slice(&t[EMB_VAR_B]), h)];
    let mut gs = vec![dense(&xc, CONS_FEATURES, params.slice(&t[EMB_CONS_W]), params.slice(&t[EMB_CONS_B]), h)];
    let mut msg_cons = Vec::with_capacity(lay.rounds);
    let mut msg_var = Vec::with_capacity(lay.rounds);
    for l in 0..lay.rounds {
        let [cw, cb, vw, vb] = lay.round(l);
        let hl = &hs[l];
        let mut mc = vec![0.0; nc * h];
        for &(c, v, a) in &g.edges {
            for i in 0..h {
                mc[c * h + i] += a * hl[v * h + i];
            }
        }
        let g_next = dense(&concat_rows(&gs[l], &mc, h), 2 * h, params.slice(cw), params.slice(cb), h);
        let mut mv = vec![0.0; nv * h];
        for &(c, v, a) in &g.edges {
            for i in 0..h {
                mv[v * h + i] += a * g_next[c * h + i];
            }
        }
        let h_next = dense(&concat_rows(hl, &mv, h), 2 * h, params.slice(vw), params.slice(vb), h);
        msg_cons.push(mc);
        msg_var.push(mv);
        gs.push(g_next);
        hs.push(h_next);
    }
    let last = &hs[lay.rounds];
    let [ow, ob] = lay.out();
    let owv = params.slice(ow);
    let var_pre: Vec<f64> = g
        .discrete
        .iter()
        .map(|&v| params.data[ob.offset] + owv.iter().zip(&last[v * h..(v + 1) * h]).map(|(w, x)| w * x).sum::<f64>())
        .collect();
    let mut pool = vec![0.0; h];
    for v in 0..nv {
        for i in 0..h {
            pool[i] += last[v * h + i];
        }
    }
    for p in &mut pool {
        *p /= nv as f64;
    }
    let heads = heads_forward(params, &pool);
    let out = ModelOutput::from_logits(var_pre.clone(), heads.logits());
    Ok((out, ForwardCache { h: hs, g: gs, msg_cons, msg_var, var_pre, heads }))
}

/// Exact gradient of a loss whose output-space gradient is `d_out`.
pub fn backward(params: &ModelParams, g: &BipartiteGraph, cache: &ForwardCache, d_out: &OutputGrad) -> Vec<f64> {
    let lay = &params.layout;
    let h = params.hidden();
    let (nv, nc) = (g.num_vars(), g.num_cons());
    let mut grads = vec![0.0; lay.total()];

    let d_pool = heads_backward(params, &cache.heads, &d_out.heads, &mut grads);
    let mut dh = vec![0.0; nv * h];
    if d_pool.iter().any(|&d| d != 0.0) {
        for v in 0..nv {
            for i in 0..h {
                dh[v * h + i] = d_pool[i] / nv as f64;
            }
        }
    }
    let [ow, ob] = lay.out();
    let owv = params.slice(ow);
    let last = &cache.h[lay.rounds];
    for (k, &v) in g.discrete.iter().enumerate() {
        let dz = d_out.probs[k] * clamp_grad(cache.var_pre[k]);
        if dz == 0.0 {
            continue;
        }
        grads[ob.offset] += dz;
        for i in 0..h {
            grads[ow.offset + i] += dz * last[v * h + i];
            dh[v * h + i] += dz * owv[i];
        }
    }
    if dh.iter().all(|&d| d == 0.0) {
        return grads;
    }

    let mut dg = vec![0.0; nc * h];
    for l in (0..lay.rounds).rev() {
        let [cw, cb, vw, vb] = lay.round(l);
        // variable update
        relu_mask(&mut dh, &cache.h[l + 1]);
        let xin = concat_rows(&cache.h[l], &cache.msg_var[l], h);
        let (gw, gb) = split_pair(&mut grads, vw, vb);
        let dx = dense_back(&xin, 2 * h, params.slice(vw), &dh, h, gw, gb);
        let mut dh_prev = vec![0.0; nv * h];
        let mut dmv = vec![0.0; nv * h];
        for v in 0..nv {
            dh_prev[v * h..(v + 1) * h].copy_from_slice(&dx[v * 2 * h..v * 2 * h + h]);
            dmv[v * h..(v + 1) * h].copy_from_slice(&dx[v * 2 * h + h..(v + 1) * 2 * h]);
        }
        for &(c, v, a) in &g.edges {
            for i in 0..h {
                dg[c * h + i] += a * dmv[v * h + i];
            }
        }
        // constraint update
        relu_mask(&mut dg, &cache.g[l + 1]);
        let xin = concat_rows(&cache.g[l], &cache.msg_cons[l], h);
        let (gw, gb) = split_pair(&mut grads, cw, cb);
        let dx = dense_back(&xin, 2 * h, params.slice(cw), &dg, h, gw, gb);
        let mut dg_prev = vec![0.0; nc * h];
        let mut dmc = vec![0.0; nc * h];
        for c in 0..nc {
            dg_prev[c * h..(c + 1) * h].copy_from_slice(&dx[c * 2 * h..c * 2 * h + h]);
            dmc[c * h..(c + 1) * h].copy_from_slice(&dx[c * 2 * h + h..(c + 1) * 2 * h]);
        }
        for &(c, v, a) in &g.edges {
            for i in 0..h {
                dh_prev[v * h + i] += a * dmc[c * h + i];
            }
        }
        dh = dh_prev;
        dg = dg_prev;
    }

    let t = &lay.tensors;
    relu_mask(&mut dh, &cache.h[0]);
    let xv: Vec<f64> = g.var_feats.iter().flatten().copied().collect();
    let (gw, gb) = split_pair(&mut grads, &t[EMB_VAR_W], &t[EMB_VAR_B]);
    dense_back(&xv, VAR_FEATURES, params.slice(&t[EMB_VAR_W]), &dh, h, gw, gb);
    relu_mask(&mut dg, &cache.g[0]);
    let xc: Vec<f64> = g.cons_feats.iter().flatten().copied().collect();
    let (gw, gb) = split_pair(&mut grads, &t[EMB_CONS_W], &t[EMB_CONS_B]);
    dense_back(&xc, CONS_FEATURES, params.slice(&t[EMB_CONS_W]), &dg, h, gw, gb);
    grads
}

/// Mutable views of two adjacent tensors (`w` directly followed by `b`).
fn split_pair<'a>(grads: &'a mut [f64], w: &TensorSpec, b: &TensorSpec) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert_eq!(w.offset + w.len(), b.offset);
    let (gw, rest) = grads[w.offset..].split_at_mut(w.len());
    (gw, &mut rest[..b.len()])
}

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    hidden: usize,
    rounds: usize,
    tensors: Vec<TensorDoc>,
}

pub fn write_checkpoint(params: &ModelParams) -> String {
    let doc = CheckpointDoc {
        hidden: params.hidden(),
        rounds: params.rounds(),
        tensors: params
            .layout
            .tensors
            .iter()
            .map(|t| TensorDoc { name: t.name.clone(), shape: t.shape.clone(), data: params.data[t.range()].to_vec() })
            .collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("checkpoint serializes");
    out.push('\n');
    out
}

pub fn read_checkpoint(text: &str) -> Result<ModelParams, ModelError> {
    use crate::error::SchemaError;
    let doc: CheckpointDoc = serde_json::from_str(text).map_err(|e| SchemaError::new("$", e.to_string()))?;
    let mut params = ModelParams::zeros(doc.hidden, doc.rounds);
    if doc.tensors.len() != params.layout.tensors.len() {
        return Err(SchemaError::new(
            "$.tensors",
            format!("expected {} tensors, found {}", params.layout.tensors.len(), doc.tensors.len()),
        )
        .into());
    }
    for (k, (t, spec)) in doc.tensors.iter().zip(params.layout.tensors.clone()).enumerate() {
        if t.name != spec.name || t.shape != spec.shape || t.data.len() != spec.len() {
            return Err(SchemaError::new(
                format!("$.tensors[{k}]"),
                format!("expected `{}` with shape {:?}", spec.name, spec.shape),
            )
            .into());
        }
        if t.data.iter().any(|v| !v.is_finite()) {
            return Err(SchemaError::new(format!("$.tensors[{k}].data"), "non-finite value").into());
        }
        params.data[spec.range()].copy_from_slice(&t.data);
    }
    Ok(params)
}
