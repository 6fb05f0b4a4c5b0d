//! Bipartite variable/constraint encoding of an instance.

use crate::mip::{LpResult, MipInstance};

pub const VAR_FEATURES: usize = 6;
pub const CONS_FEATURES: usize = 3;

/// Variable features: objective, lower, upper, discrete flag, LP value,
/// LP fractionality. Constraint features: rhs, row nnz, LP activity.
/// Each feature column (and the edge coefficients) is divided by
/// `max(max |value|, 1)` over the instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub var_feats: Vec<[f64; VAR_FEATURES]>,
    pub cons_feats: Vec<[f64; CONS_FEATURES]>,
    /// `(constraint, variable, normalized coefficient)`.
    pub edges: Vec<(usize, usize, f64)>,
    /// Discrete variables, in index order; probabilities follow this order.
    pub discrete: Vec<usize>,
}

impl BipartiteGraph {
    pub fn num_vars(&self) -> usize {
        self.var_feats.len()
    }

    pub fn num_cons(&self) -> usize {
        self.cons_feats.len()
    }
}

fn scale_of(values: impl Iterator<Item = f64>) -> f64 {
    values.filter(|v| v.is_finite()).fold(1.0, |m, v| m.max(v.abs()))
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Encodes `inst` using the root relaxation `lp`. When `lp` is not optimal
/// the LP value falls back to the bound midpoint and fractionality to 0.5.
pub fn encode_graph(inst: &MipInstance, lp: &LpResult) -> BipartiteGraph {
    let n = inst.num_vars();
    let (lower, upper) = (inst.lower(), inst.upper());
    let lp_x: Option<&[f64]> = if lp.is_optimal() { lp.x.as_deref() } else { None };
    let x: Vec<f64> = match lp_x {
        Some(x) => x.to_vec(),
        None => (0..n).map(|j| midpoint(lower[j], upper[j])).collect(),
    };
    let frac: Vec<f64> = (0..n)
        .map(|j| match (inst.integrality()[j], lp_x) {
            (false, _) => 0.0,
            (true, Some(_)) => (x[j] - x[j].round()).abs(),
            (true, None) => 0.5,
        })
        .collect();

    let c = inst.objective_coeffs();
    let c_scale = scale_of(c.iter().copied());
    let bound_scale = scale_of(lower.iter().chain(upper.iter()).copied());
    let x_scale = scale_of(x.iter().copied());
    let bounded = |v: f64| if v.is_finite() { v / bound_scale } else { v.signum() };
    let var_feats = (0..n)
        .map(|j| {
            [
                c[j] / c_scale,
                bounded(lower[j]),
                bounded(upper[j]),
                if inst.integrality()[j] { 1.0 } else { 0.0 },
                x[j] / x_scale,
                frac[j],
            ]
        })
        .collect();

    let m = inst.num_cons();
    let activity = inst.activities(&x);
    let b_scale = scale_of(inst.rhs().iter().copied());
    let nnz_scale = scale_of((0..m).map(|i| inst.row_len(i) as f64));
    let act_scale = scale_of(activity.iter().copied());
    let cons_feats = (0..m)
        .map(|i| [inst.rhs()[i] / b_scale, inst.row_len(i) as f64 / nnz_scale, activity[i] / act_scale])
        .collect();

    // symmetric degree normalization keeps summed messages at the scale of
    // a single neighbour
    let a_scale = scale_of(inst.triplets().iter().map(|t| t.2));
    let mut var_deg = vec![0usize; n];
    for &(_, j, _) in inst.triplets() {
        var_deg[j] += 1;
    }
    let edges = inst
        .triplets()
        .iter()
        .map(|&(i, j, v)| (i, j, v / a_scale / ((inst.row_len(i) * var_deg[j]) as f64).sqrt()))
        .collect();

    BipartiteGraph { var_feats, cons_feats, edges, discrete: inst.discrete_indices() }
}
