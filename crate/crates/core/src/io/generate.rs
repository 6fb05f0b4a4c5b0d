//! Seeded instance generators. All randomness comes from [`SplitMix64`], in
//! the documented call order, so any implementation of the same steps
//! reproduces the instances exactly.

use crate::error::GenerateError;
use crate::mip::{InstanceBuilder, MipInstance, Sense};
use crate::rng::SplitMix64;

/// Set covering: `min sum cost_j x_j` s.t. every row is covered by at least
/// one chosen column.
///
/// Draw order: row-major Bernoulli(density) incidence; then every row with
/// fewer than two columns gets uniformly drawn extra columns until it has
/// two; then every empty column is placed in a uniformly drawn row; finally
/// one cost per column, uniform in `1..=100`.
pub fn gen_set_cover(rows: usize, cols: usize, density: f64, seed: u64) -> Result<MipInstance, GenerateError> {
    if rows == 0 || cols < rows.max(2) || !(density > 0.0 && density < 1.0) {
        return Err(GenerateError::Parameter(format!(
            "set cover needs rows >= 1, cols >= max(rows, 2), 0 < density < 1 (got {rows}, {cols}, {density})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut incidence = vec![vec![false; cols]; rows];
    for row in incidence.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.bernoulli(density);
        }
    }
    for row in incidence.iter_mut() {
        while row.iter().filter(|&&c| c).count() < 2 {
            let j = rng.below(cols as u64) as usize;
            row[j] = true;
        }
    }
    for j in 0..cols {
        if !incidence.iter().any(|row| row[j]) {
            let i = rng.below(rows as u64) as usize;
            incidence[i][j] = true;
        }
    }
    let mut b = InstanceBuilder::new(format!("setcover-{rows}x{cols}-d{density}-s{seed}"));
    for _ in 0..cols {
        let cost = 1 + rng.below(100);
        b.add_binary(cost as f64);
    }
    for row in &incidence {
        let coeffs: Vec<(usize, f64)> = row.iter().enumerate().filter(|(_, &c)| c).map(|(j, _)| (j, 1.0)).collect();
        b.add_row(&coeffs, Sense::Ge, 1.0);
    }
    b.build().map_err(|e| GenerateError::Parameter(e.to_string()))
}

/// Undirected edge list of a preferential-attachment graph: a clique on
/// `affinity + 1` nodes, then each new node links to `affinity` distinct
/// earlier nodes drawn with probability proportional to degree.
///
/// A target is drawn as `endpoints[below(len)]` where `endpoints` lists
/// both ends of every edge created so far; repeats are redrawn.
pub fn preferential_attachment(nodes: usize, affinity: usize, seed: u64) -> Result<Vec<(usize, usize)>, GenerateError> {
    if affinity == 0 || nodes < affinity + 1 {
        return Err(GenerateError::Parameter(format!(
            "independent set needs affinity >= 1 and nodes >= affinity + 1 (got {nodes}, {affinity})"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut edges = Vec::new();
    let mut endpoints = Vec::new();
    for u in 0..=affinity {
        for v in u + 1..=affinity {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    for v in affinity + 1..nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(affinity);
        while targets.len() < affinity {
            let t = endpoints[rng.below(endpoints.len() as u64) as usize];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        targets.sort_unstable();
        for t in targets {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    edges.sort_unstable();
    Ok(edges)
}

/// Maximum independent set as a minimization: `min -sum x_v` with
/// `x_u + x_v <= 1` per edge.
pub fn gen_indep_set(nodes: usize, affinity: usize, seed: u64) -> Result<MipInstance, GenerateError> {
    let edges = preferential_attachment(nodes, affinity, seed)?;
    Ok(indep_set_from_edges(&format!("indset-{nodes}-a{affinity}-s{seed}"), nodes, &edges))
}

pub fn indep_set_from_edges(name: &str, nodes: usize, edges: &[(usize, usize)]) -> MipInstance {
    let mut b = InstanceBuilder::new(name);
    for _ in 0..nodes {
        b.add_binary(-1.0);
    }
    for &(u, v) in edges {
        b.add_row(&[(u, 1.0), (v, 1.0)], Sense::Le, 1.0);
    }
    b.build().expect("edge list within node range")
}

/// Cardinality-capped selection: `min -sum w_i x_i` s.t. `sum x_i <= k`,
/// weights uniform in `1..=100`. Fixing any `j > k` variables to one is
/// infeasible, so the feasibility threshold coverage is exactly `k / r`.
pub fn gen_capped_selection(r: usize, k: usize, seed: u64) -> Result<MipInstance, GenerateError> {
    if r == 0 || k > r {
        return Err(GenerateError::Parameter(format!("capped selection needs 1 <= r and k <= r (got {r}, {k})")));
    }
    let mut rng = SplitMix64::new(seed);
    let mut b = InstanceBuilder::new(format!("capped-{r}-k{k}-s{seed}"));
    let vars: Vec<usize> = (0..r).map(|_| b.add_binary(-((1 + rng.below(100)) as f64))).collect();
    let row: Vec<(usize, f64)> = vars.iter().map(|&v| (v, 1.0)).collect();
    b.add_row(&row, Sense::Le, k as f64);
    b.build().map_err(|e| GenerateError::Parameter(e.to_string()))
}
