//! Conversions to the brute-force oracles' dense form and small random
//! instances.

#![allow(dead_code)]

use covdive::io::{gen_indep_set, gen_set_cover};
use covdive::mip::{InstanceBuilder, MipInstance, Sense};
use covdive::rng::SplitMix64;
use covdive_oracle::Dense;

pub fn dense(inst: &MipInstance) -> Dense {
    let n = inst.num_vars();
    let a = (0..inst.num_cons())
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, v) in inst.row(i) {
                row[j] += v;
            }
            row
        })
        .collect();
    Dense {
        c: inst.objective_coeffs().to_vec(),
        a,
        b: inst.rhs().to_vec(),
        lower: inst.lower().to_vec(),
        upper: inst.upper().to_vec(),
    }
}

/// A small LP with integer data: 2 to 4 variables with finite lower bounds,
/// 1 to 4 rows of mixed senses. Infeasible and unbounded draws are common.
pub fn random_lp(seed: u64) -> MipInstance {
    let mut rng = SplitMix64::new(seed);
    let mut int = |lo: i64, hi: i64| lo + rng.below((hi - lo + 1) as u64) as i64;
    let n = int(2, 4) as usize;
    let m = int(1, 4) as usize;
    let mut b = InstanceBuilder::new(format!("lp-{seed}"));
    for _ in 0..n {
        let lower = -(int(0, 2) as f64);
        let upper = match int(0, 3) {
            0 => f64::INFINITY,
            k => k as f64,
        };
        b.add_var(int(-3, 3) as f64, lower, upper, false);
    }
    for _ in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, int(-3, 3) as f64)).filter(|(_, v)| *v != 0.0).collect();
        let sense = [Sense::Le, Sense::Ge, Sense::Eq][int(0, 2) as usize];
        b.add_row(&coeffs, sense, int(-3, 6) as f64);
    }
    b.build().expect("valid random LP")
}

/// 100 set covers and 100 independent sets, each with at most 12 binaries.
pub fn small_mips() -> Vec<MipInstance> {
    let mut out = Vec::new();
    for s in 0..100u64 {
        let cols = 4 + (s % 9) as usize;
        let rows = 2 + (s % 5) as usize;
        out.push(gen_set_cover(rows, cols.max(rows), 0.3, s).unwrap());
        let nodes = 4 + (s % 9) as usize;
        let affinity = 1 + (s % 3) as usize;
        out.push(gen_indep_set(nodes, affinity.min(nodes - 1), s).unwrap());
    }
    out
}
