//! Analytic gradients against central finite differences.

use covdive::io::gen_set_cover;
use covdive::mip::{solve_lp, Assignment};
use covdive::model::{backward, encode_graph, forward, forward_cached, Group, Head, LossSpec, ModelParams};
use covdive::rng::SplitMix64;

const H: f64 = 1e-4;

fn loss_at(params: &ModelParams, g: &covdive::model::BipartiteGraph, spec: &LossSpec) -> f64 {
    spec.evaluate(&forward(params, g).unwrap()).unwrap().0
}

fn specs(r: usize, seed: u64) -> Vec<(&'static str, LossSpec)> {
    let mut rng = SplitMix64::new(seed ^ 0xabc);
    let target = Assignment((0..r).map(|_| if rng.bernoulli(0.5) { 1.0 } else { 0.0 }).collect());
    vec![
        ("nd", LossSpec::Nd { target, mask: (0..r).collect() }),
        ("coverage", LossSpec::Coverage { rho_star: rng.next_f64() }),
        ("threshold", LossSpec::Threshold { psi_prob: rng.next_f64(), phi_prob: rng.next_f64() }),
        ("prob", LossSpec::Prob { i_feas: rng.bernoulli(0.5), i_lpsat: rng.bernoulli(0.5) }),
    ]
}

fn central_difference(params: &ModelParams, g: &covdive::model::BipartiteGraph, spec: &LossSpec, k: usize, h: f64) -> f64 {
    let mut p = params.clone();
    p.data[k] += h;
    let up = loss_at(&p, g, spec);
    p.data[k] -= 2.0 * h;
    let down = loss_at(&p, g, spec);
    (up - down) / (2.0 * h)
}

#[test]
fn finite_differences_agree() {
    for seed in 0..10u64 {
        let inst = gen_set_cover(5, 8, 0.4, seed).unwrap();
        let g = encode_graph(&inst, &solve_lp(&inst));
        let params = ModelParams::init(8, 2, seed);
        for (name, spec) in specs(inst.num_vars(), seed) {
            let (out, cache) = forward_cached(&params, &g).unwrap();
            let (_, d_out) = spec.evaluate(&out).unwrap();
            let grads = backward(&params, &g, &cache, &d_out);
            // sample among parameters on the loss's path whose gradient is
            // large enough for central differences at H to resolve
            let on_path: Vec<usize> = (0..grads.len()).filter(|&k| grads[k].abs() > 1e-6).collect();
            assert!(on_path.len() >= 20, "{name}: only {} nonzero gradients", on_path.len());
            let mut rng = SplitMix64::derive(seed, 7);
            for _ in 0..20 {
                let k = on_path[rng.below(on_path.len() as u64) as usize];
                let mut fd = central_difference(&params, &g, &spec, k, H);
                // a ReLU kink within H: retry with a step that stays on one side
                let fine = central_difference(&params, &g, &spec, k, H / 10.0);
                if (fd - fine).abs() > 1e-3 * fd.abs().max(1e-6) {
                    fd = fine;
                }
                let rel = (grads[k] - fd).abs() / grads[k].abs().max(fd.abs());
                assert!(rel < 1e-4, "{name} seed {seed} param {k}: analytic {} vs fd {fd} (rel {rel})", grads[k]);
            }
        }
    }
}

#[test]
fn off_path_gradients_are_zero() {
    let inst = gen_set_cover(5, 8, 0.4, 1).unwrap();
    let g = encode_graph(&inst, &solve_lp(&inst));
    let params = ModelParams::init(8, 2, 1);
    let (out, cache) = forward_cached(&params, &g).unwrap();
    let nd = LossSpec::Nd { target: Assignment(vec![1.0; 8]), mask: (0..8).collect() };
    let grads = backward(&params, &g, &cache, &nd.evaluate(&out).unwrap().1);
    for head in Head::ALL {
        assert!(grads[params.layout.group(Group::Head(head))].iter().all(|&v| v == 0.0));
    }
    let cov = LossSpec::Coverage { rho_star: 0.2 };
    let grads = backward(&params, &g, &cache, &cov.evaluate(&out).unwrap().1);
    for group in [Group::VarHead, Group::Head(Head::Psi), Group::Head(Head::Phi), Group::Head(Head::PsiProb), Group::Head(Head::PhiProb)] {
        assert!(grads[params.layout.group(group)].iter().all(|&v| v == 0.0));
    }
    assert!(grads[params.layout.group(Group::Head(Head::Pi))].iter().any(|&v| v != 0.0));
}

#[test]
fn near_zero_gradients_at_clamped_targets() {
    let inst = gen_set_cover(5, 8, 0.4, 2).unwrap();
    let g = encode_graph(&inst, &solve_lp(&inst));
    let mut params = ModelParams::zeros(8, 2);
    params.tensor_mut("out.b").unwrap()[0] = 40.0;
    let (out, cache) = forward_cached(&params, &g).unwrap();
    let nd = LossSpec::Nd { target: Assignment(vec![1.0; 8]), mask: (0..8).collect() };
    let (v, d) = nd.evaluate(&out).unwrap();
    assert!(v < 1e-12);
    assert!(backward(&params, &g, &cache, &d).iter().all(|x| x.abs() < 1e-12));
}
