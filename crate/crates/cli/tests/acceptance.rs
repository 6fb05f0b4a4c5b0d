//! Acceptance criteria 1 to 11. Each prints one PASS/FAIL line to stderr
//! (uncaptured); the test fails if any criterion does.
//!
//! Time budgets run on the deterministic work clock, so every number here
//! is reproducible. Expect several minutes in release mode.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use serde_json::Value;

use covdive::diving::{collect_targets, train_nd, NdConfig, Strategy, TrainingExample};
use covdive::eval::{inversions, primal_integral, run_benchmark, sweep_coverage, BenchSetup, CoverageSweep, Method, ScaleSet};
use covdive::io::{gen_capped_selection, gen_set_cover};
use covdive::mip::{
    solve_lp, solve_mip_opts, Assignment, ClockKind, Incumbent, LpStatus, MipOptions, SolveMode, SolveStatus, SolveTrace,
};
use covdive::model::{backward, encode_graph, forward, forward_cached, BipartiteGraph, LossSpec, ModelParams};
use covdive::par::Parallelism;
use covdive::rng::SplitMix64;
use covdive::tal::properties::crossing;
use covdive::tal::{train_tal, TalConfig};
use covdive_oracle::{lp_by_vertices, mip_by_enumeration, LpOutcome};

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn line(text: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{text}");
}

fn run(n: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let t = Instant::now();
    let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let secs = t.elapsed().as_secs_f64();
    let (tag, detail) = match &verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    line(&format!("criterion {n:>2} {tag} {name}: {detail} [{secs:.1} s]"));
    verdict.is_ok()
}

fn exact_solver() -> Verdict {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    let instances = common::small_mips();
    for inst in &instances {
        assert!(inst.num_discrete() <= 12);
        let trace = solve_mip_opts(inst, &MipOptions::new(60.0, SolveMode::Optimize).with_clock(ClockKind::fixed())).unwrap();
        if trace.best_objective() != mip_by_enumeration(&common::dense(inst), inst.integrality()) {
            mismatches.push(inst.name().to_string());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(mismatches.is_empty() && secs < 120.0, format!("{} instances, mismatches {mismatches:?}, {secs:.2} s", instances.len()))
}

fn lp_correctness() -> Verdict {
    let mut bad = Vec::new();
    let mut seen = [0usize; 3];
    for seed in 0..100 {
        let inst = common::random_lp(seed);
        let lp = solve_lp(&inst);
        let agree = match lp_by_vertices(&common::dense(&inst)) {
            LpOutcome::Optimal(v) => {
                seen[0] += 1;
                lp.status == LpStatus::Optimal && lp.objective.is_some_and(|o| (o - v).abs() <= 1e-6)
            }
            LpOutcome::Infeasible => {
                seen[1] += 1;
                lp.status == LpStatus::Infeasible
            }
            LpOutcome::Unbounded => {
                seen[2] += 1;
                lp.status == LpStatus::Unbounded
            }
        };
        if !agree {
            bad.push(seed);
        }
    }
    check(bad.is_empty(), format!("100 LPs (optimal/infeasible/unbounded {seen:?}), disagreeing seeds {bad:?}"))
}

fn central_difference(params: &ModelParams, g: &BipartiteGraph, spec: &LossSpec, k: usize, h: f64) -> f64 {
    let loss = |p: &ModelParams| spec.evaluate(&forward(p, g).unwrap()).unwrap().0;
    let mut p = params.clone();
    p.data[k] += h;
    let up = loss(&p);
    p.data[k] -= 2.0 * h;
    (up - loss(&p)) / (2.0 * h)
}

fn gradient_fidelity() -> Verdict {
    const H: f64 = 1e-4;
    let (mut checked, mut worst) = (0usize, 0.0f64);
    for seed in 0..10u64 {
        let inst = gen_set_cover(5, 8, 0.4, seed).unwrap();
        let g = encode_graph(&inst, &solve_lp(&inst));
        let params = ModelParams::init(8, 2, seed);
        let mut rng = SplitMix64::new(seed ^ 0xabc);
        let target = Assignment((0..inst.num_vars()).map(|_| f64::from(u8::from(rng.bernoulli(0.5)))).collect());
        let specs = [
            LossSpec::Nd { target, mask: (0..inst.num_vars()).collect() },
            LossSpec::Coverage { rho_star: rng.next_f64() },
            LossSpec::Threshold { psi_prob: rng.next_f64(), phi_prob: rng.next_f64() },
            LossSpec::Prob { i_feas: rng.bernoulli(0.5), i_lpsat: rng.bernoulli(0.5) },
        ];
        for spec in &specs {
            let (out, cache) = forward_cached(&params, &g).unwrap();
            let grads = backward(&params, &g, &cache, &spec.evaluate(&out).unwrap().1);
            let on_path: Vec<usize> = (0..grads.len()).filter(|&k| grads[k].abs() > 1e-6).collect();
            if on_path.len() < 20 {
                return Err(format!("seed {seed}: only {} parameters on the loss path", on_path.len()));
            }
            let mut pick = SplitMix64::derive(seed, 7);
            for _ in 0..20 {
                let k = on_path[pick.below(on_path.len() as u64) as usize];
                let mut fd = central_difference(&params, &g, spec, k, H);
                // a ReLU kink within h: the finer step stays on one side
                let fine = central_difference(&params, &g, spec, k, H / 10.0);
                if (fd - fine).abs() > 1e-3 * fd.abs().max(1e-6) {
                    fd = fine;
                }
                worst = worst.max((grads[k] - fd).abs() / grads[k].abs().max(fd.abs()));
                checked += 1;
            }
        }
    }
    check(worst < 1e-4, format!("{checked} checks over 4 losses x 10 seeds, worst relative error {worst:.2e}"))
}

fn covdive(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_covdive")).args(args).output().expect("binary runs");
    assert!(out.status.code().is_some_and(|c| c <= 1), "covdive {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn theory_report(dir: &Path) -> Value {
    let t = Instant::now();
    covdive(&["--out", dir.to_str().unwrap(), "verify-theory", "--instances", "20", "--max-vars", "10"]);
    let mut report: Value = serde_json::from_str(&fs::read_to_string(dir.join("theory.json")).unwrap()).unwrap();
    report["seconds"] = t.elapsed().as_secs_f64().into();
    report
}

fn lemma_suite(report: &Value) -> Verdict {
    let lemmas = &report["lemmas"];
    let pairs: u64 = lemmas["instances"].as_array().unwrap().iter().map(|r| r["pairs"].as_u64().unwrap()).sum();
    let (p, q) = (lemmas["p_violations"].as_u64().unwrap(), lemmas["q_violations"].as_u64().unwrap());
    let secs = report["seconds"].as_f64().unwrap();
    let n = lemmas["instances"].as_array().unwrap().len();
    check(
        n == 20 && p == 0 && q == 0 && secs < 300.0,
        format!("{n} instances, {pairs} chain pairs, P violations {p}, Q violations {q}, {secs:.1} s"),
    )
}

fn frequency_fit(report: &Value) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for fit in report["frequency_fit"].as_array().unwrap() {
        let (mu, p, steps) = (fit["mean"].as_f64().unwrap(), fit["fitted"].as_f64().unwrap(), fit["steps"].as_u64().unwrap());
        ok &= (p - mu).abs() <= 1e-4 && steps <= 10_000;
        parts.push(format!("mu {mu}: {p:.6} in {steps} steps"));
    }
    check(ok && parts.len() == 3, parts.join(", "))
}

/// Targets from 100 set covers with 50 rows and 100 columns.
fn training_data() -> Vec<TrainingExample> {
    let train: Vec<_> = (0..100).map(|s| gen_set_cover(50, 100, 0.05, s).unwrap()).collect();
    let coll = collect_targets(&train, 10.0, ClockKind::fixed(), Parallelism::default()).unwrap();
    assert!(coll.dropped.is_empty(), "no incumbent for {:?}", coll.dropped);
    coll.examples
}

fn s_curve(data: &[TrainingExample]) -> Verdict {
    let cfg = NdConfig { epochs: 50, ..NdConfig::default() };
    let nd = train_nd(data, &cfg, Parallelism::default()).unwrap();
    // k-times scale keeps the expected row length (five columns) fixed
    let sets: Vec<ScaleSet> = (1..=3)
        .map(|k| ScaleSet {
            scale: k as f64,
            instances: (0..10).map(|s| gen_set_cover(50 * k, 100 * k, 0.05 / k as f64, 5000 + s).unwrap()).collect(),
        })
        .collect();
    let rhos: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let sweep = CoverageSweep {
        rhos: rhos.clone(),
        strategy: Strategy::BernoulliRandom,
        samples: 50,
        budget: 0.2,
        clock: ClockKind::fixed(),
        seed: 1,
    };
    let rows = sweep_coverage(&nd.params, &sets, &sweep, Parallelism::default()).unwrap();
    let curve = |k: usize| -> Vec<f64> { rows[k * 21..(k + 1) * 21].iter().map(|r| r.feasible_ratio).collect() };
    let base = curve(0);
    let base_x = crossing(&rhos, &base, true);
    let base_inv = inversions(&base, 0.1);
    let mut ok = base_x.is_some() && base_inv <= 2;
    let mut parts = vec![format!("1x crossing {base_x:.3?} inversions {base_inv}")];
    for k in 1..3 {
        let x = crossing(&rhos, &curve(k), true);
        ok &= matches!((x, base_x), (Some(x), Some(b)) if (x - b).abs() <= 0.15);
        parts.push(format!("{}x crossing {x:.3?}", k + 1));
    }
    check(ok, parts.join(", "))
}

fn capped_family(seed: u64) -> Vec<covdive::mip::MipInstance> {
    (0..4).map(|i| gen_capped_selection(20, 8, seed * 100 + i).unwrap()).collect()
}

/// Backbone whose per-variable head predicts one everywhere.
fn all_ones_model(seed: u64) -> ModelParams {
    let mut p = ModelParams::init(16, 2, seed);
    p.tensor_mut("out.w").unwrap().fill(0.0);
    p.tensor_mut("out.b").unwrap().fill(10.0);
    p
}

fn tal_contraction() -> Verdict {
    let threshold = 8.0 / 20.0;
    let (mut near, mut shrunk) = (0usize, 0usize);
    let mut finals = Vec::new();
    let mut trained = None;
    for seed in 0..10u64 {
        let mut cfg = TalConfig::new(20, 10, 1.0, 5);
        cfg.probe.clock = ClockKind::fixed();
        cfg.probe.seed = seed;
        let mut first = None;
        let state = train_tal(&all_ones_model(seed), &capped_family(seed), &cfg, |s| {
            first.get_or_insert((s.rho_psi, s.rho_phi));
        })
        .unwrap();
        let last = state.history.last().unwrap();
        let (psi0, phi0) = first.unwrap();
        near += usize::from((last.rho_psi - threshold).abs() <= 0.1);
        shrunk += usize::from((last.rho_psi - last.rho_phi).abs() < (psi0 - phi0).abs());
        finals.push(format!("{:.2}", last.rho_psi));
        trained.get_or_insert(state.params);
    }
    // one sub-MIP per instance at test time
    let test = capped_family(99);
    let nd = all_ones_model(0);
    let setup = BenchSetup {
        test: &test,
        validation: &test,
        nd: &nd,
        tal: trained.as_ref(),
        budget: 0.1,
        gamma: 0.9,
        gamma_grid: vec![0.9, 0.99],
        reference_budget: 1.0,
        clock: ClockKind::fixed(),
        strategy: Strategy::ConfidenceTopK,
        seed: 0,
        par: Parallelism::default(),
    };
    let report = run_benchmark(&setup).unwrap();
    let solves: Vec<usize> = report.rows_for(Method::Tal).map(|r| r.solves).collect();
    let one_each = solves.len() == test.len() && solves.iter().all(|&s| s == 1);
    check(
        near == 10 && shrunk >= 8 && one_each,
        format!("psi within 0.1 of {threshold} in {near}/10 (final {}), gap shrank in {shrunk}/10, TaL solves per instance {solves:?}", finals.join(" ")),
    )
}

fn benchmark(data: &[TrainingExample]) -> covdive::eval::BenchReport {
    let nd = train_nd(data, &NdConfig::default(), Parallelism::default()).unwrap();
    let validation: Vec<_> = (0..30).map(|s| gen_set_cover(200, 400, 0.05, 8000 + s).unwrap()).collect();
    let test: Vec<_> = (0..30).map(|s| gen_set_cover(200, 400, 0.05, 9000 + s).unwrap()).collect();
    let budget = 2.0;
    let mut cfg = TalConfig::new(3, 10, budget, 3);
    cfg.lr = [0.1, 0.05, 0.03];
    cfg.probe.clock = ClockKind::fixed();
    let tal = train_tal(&nd.params, &validation, &cfg, |_| {}).unwrap();
    let setup = BenchSetup {
        test: &test,
        validation: &validation,
        nd: &nd.params,
        tal: Some(&tal.params),
        budget,
        gamma: 0.9,
        gamma_grid: vec![0.6, 0.7, 0.8, 0.9, 0.95, 0.99],
        reference_budget: 5.0,
        clock: ClockKind::fixed(),
        strategy: Strategy::ConfidenceTopK,
        seed: 0,
        par: Parallelism::default(),
    };
    run_benchmark(&setup).unwrap()
}

fn cf_beats_baseline(report: &covdive::eval::BenchReport) -> Verdict {
    let base = report.summary(Method::Baseline).unwrap();
    let auto = report.summary(Method::CfAuto).unwrap();
    let (bpi, api) = (base.mean_pi.unwrap(), auto.mean_pi.unwrap());
    let pairs: Vec<_> = report.rows_for(Method::Baseline).zip(report.rows_for(Method::CfAuto)).collect();
    let better = pairs.iter().filter(|(b, c)| c.og_pct.unwrap() < b.og_pct.unwrap()).count();
    let share = better as f64 / pairs.len() as f64;
    check(
        api <= bpi && share >= 0.6,
        format!(
            "tuned gamma {:.3}, mean PI CF(auto) {api:.1} vs baseline {bpi:.1}, OG strictly better on {better}/{}",
            report.tuning.gamma,
            pairs.len()
        ),
    )
}

fn tal_vs_cf(report: &covdive::eval::BenchReport) -> Verdict {
    let tal = report.summary(Method::Tal).unwrap().mean_pb.unwrap();
    let auto = report.summary(Method::CfAuto).unwrap().mean_pb.unwrap();
    let slack = 0.01 * report.references.iter().map(|(_, r)| r.objective.abs()).sum::<f64>() / report.references.len() as f64;
    check(
        tal <= auto + slack,
        format!("mean PB TaL {tal:.2} vs CF(auto) {auto:.2} + {slack:.2} (1% of mean |reference|), seeds: ND 0, TaL probes 0, bench 0"),
    )
}

fn determinism(dir: &Path) -> Verdict {
    let p = |name: &str| dir.join(name);
    let s = |name: &str| p(name).to_str().unwrap().to_string();
    let gen = |name: &str, seed: &str| {
        covdive(&["--out", &s(name), "generate", "set-cover", "--rows", "30", "--cols", "60", "--density", "0.1", "--count", "8", "--seed", seed]);
        fs::remove_file(p(name).join("manifest.json")).unwrap();
    };
    gen("train", "0");
    gen("val", "100");
    gen("test", "200");
    covdive(&["--fixed-clock", "--out", &s("collect"), "collect", "--instances", &s("train"), "--budget", "2"]);
    covdive(&["--fixed-clock", "--out", &s("nd"), "train-nd", "--data", &s("collect/training.json"), "--epochs", "30"]);
    covdive(&[
        "--fixed-clock", "--out", &s("tal"), "train-tal", "--model", &s("nd/model.json"), "--instances", &s("val"),
        "--outer", "2", "--inner", "4", "--tau", "0.1", "--probes", "3",
    ]);
    let config = serde_json::json!({
        "test": "test", "validation": "val", "nd_model": "nd/model.json", "tal_model": "tal/model.json",
        "budget": 0.1, "reference_budget": 2.0, "fixed_clock": true,
    });
    fs::write(p("bench.json"), config.to_string()).unwrap();
    let bodies: Vec<String> = (0..2)
        .map(|k| {
            let out = format!("bench-{k}");
            covdive(&["--out", &s(&out), "bench", "--config", &s("bench.json")]);
            fs::read_to_string(p(&out).join("metrics.csv")).unwrap()
        })
        .collect();
    check(bodies[0] == bodies[1] && bodies[0].lines().count() == 33, format!("two bench runs, {} bytes each, identical: {}", bodies[0].len(), bodies[0] == bodies[1]))
}

fn staircase() -> Verdict {
    let trace = |events: &[(f64, f64)]| SolveTrace {
        events: events.iter().map(|&(time, objective)| Incumbent { time, objective }).collect(),
        status: SolveStatus::Feasible,
        best: None,
        dual_bound: f64::NEG_INFINITY,
        nodes: 0,
        lp_iterations: 0,
        elapsed: 2.0,
    };
    let got: Vec<f64> = [trace(&[(0.0, 8.0)]), trace(&[(0.0, 10.0)]), trace(&[(0.0, 12.0), (1.0, 8.0)])]
        .iter()
        .map(|t| primal_integral(t, 2.0, 8.0, None).unwrap())
        .collect();
    check(got == [0.0, 4.0, 4.0], format!("{got:?}"))
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let mut failed = Vec::new();
    let mut record = |n: usize, ok: bool| {
        if !ok {
            failed.push(n);
        }
    };
    record(1, run(1, "exact solver vs enumeration", exact_solver));
    record(2, run(2, "LP vs vertex enumeration", lp_correctness));
    record(3, run(3, "gradient fidelity", gradient_fidelity));
    let theory = theory_report(&tmp.path().join("theory"));
    record(4, run(4, "monotonicity lemmas", || lemma_suite(&theory)));
    record(5, run(5, "frequency fit convergence", || frequency_fit(&theory)));
    let data = training_data();
    record(6, run(6, "threshold S-curve", || s_curve(&data)));
    let report = catch_unwind(AssertUnwindSafe(|| benchmark(&data)));
    record(7, run(7, "CF(auto) vs baseline", || cf_beats_baseline(report.as_ref().map_err(|_| "benchmark panicked".to_string())?)));
    record(8, run(8, "TaL interval contraction", tal_contraction));
    record(9, run(9, "TaL vs CF(auto) primal bound", || tal_vs_cf(report.as_ref().map_err(|_| "benchmark panicked".to_string())?)));
    record(10, run(10, "bench determinism", || determinism(tmp.path())));
    record(11, run(11, "primal integral staircases", staircase));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
