//! Invariants checked on generated inputs.

mod common;

use covdive::diving::{cf_select, realize_subset, Prediction, Strategy as Realize};
use covdive::eval::{primal_integral, primal_integral_between};
use covdive::io::{gen_capped_selection, gen_indep_set, gen_set_cover, parse_mps, read_instance, write_instance, write_mps};
use covdive::mip::{
    solve_lp, solve_mip_opts, Assignment, ClockKind, Incumbent, LpResult, LpStatus, MipInstance, MipOptions, PartialAssignment,
    SolveMode, SolveStatus, SolveTrace,
};
use covdive::model::{encode_graph, forward, ModelParams};
use covdive::rng::SplitMix64;
use covdive::tal::properties::verify_lemmas;
use covdive::tal::{fit_frequency, kappa};
use proptest::prelude::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete, DiscreteCDF};

fn small_set_cover() -> impl Strategy<Value = MipInstance> {
    (2usize..8, 0usize..6, any::<u64>()).prop_map(|(rows, extra, seed)| gen_set_cover(rows, rows + extra + 2, 0.3, seed).unwrap())
}

fn any_generated() -> impl Strategy<Value = MipInstance> {
    prop_oneof![
        small_set_cover(),
        (4usize..14, 1usize..3, any::<u64>()).prop_map(|(n, a, s)| gen_indep_set(n, a, s).unwrap()),
        (3usize..12, 1usize..3, any::<u64>()).prop_map(|(r, k, s)| gen_capped_selection(r, k, s).unwrap()),
    ]
}

fn solve(inst: &MipInstance) -> SolveTrace {
    solve_mip_opts(inst, &MipOptions::new(30.0, SolveMode::Optimize).with_clock(ClockKind::fixed())).unwrap()
}

/// `inst` with its variables reordered: new variable `k` is old `perm[k]`.
fn permuted(inst: &MipInstance, perm: &[usize]) -> MipInstance {
    let n = inst.num_vars();
    let mut pos = vec![0; n];
    for (k, &j) in perm.iter().enumerate() {
        pos[j] = k;
    }
    let pick = |v: &[f64]| perm.iter().map(|&j| v[j]).collect::<Vec<f64>>();
    MipInstance::new(
        inst.name(),
        n,
        inst.num_cons(),
        pick(inst.objective_coeffs()),
        inst.triplets().iter().map(|&(i, j, v)| (i, pos[j], v)).collect(),
        inst.rhs().to_vec(),
        perm.iter().map(|&j| inst.integrality()[j]).collect(),
        pick(inst.lower()),
        pick(inst.upper()),
    )
    .unwrap()
}

fn staircase() -> impl Strategy<Value = SolveTrace> {
    prop::collection::vec((prop_oneof![Just(0.0), 0.0f64..2.5], 1i32..50), 0..6).prop_map(|mut raw| {
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut events: Vec<Incumbent> = Vec::new();
        for (time, obj) in raw {
            // strictly decreasing objectives
            let objective = events.last().map_or(obj as f64 + 50.0, |e| e.objective - obj as f64 / 10.0);
            events.push(Incumbent { time, objective });
        }
        SolveTrace {
            events,
            status: SolveStatus::Feasible,
            best: None,
            dual_bound: f64::NEG_INFINITY,
            nodes: 0,
            lp_iterations: 0,
            elapsed: 2.0,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_bound_below_every_integer_point(inst in small_set_cover()) {
        let lp = solve_lp(&inst);
        prop_assert_eq!(lp.status, LpStatus::Optimal);
        let lp_obj = lp.objective.unwrap();
        let ones = Assignment(vec![1.0; inst.num_vars()]);
        prop_assert!(lp_obj <= inst.objective(&ones).unwrap() + 1e-9);
        let best = solve(&inst).best_objective().unwrap();
        prop_assert!(lp_obj <= best + 1e-9);
    }

    #[test]
    fn fixing_more_never_lowers_the_lp_bound(inst in small_set_cover(), seed in any::<u64>()) {
        let trace = solve(&inst);
        let x = trace.best.clone().unwrap().0;
        let mut order: Vec<usize> = inst.discrete_indices();
        let mut rng = SplitMix64::new(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let mut last = f64::NEG_INFINITY;
        for k in 0..=order.len() {
            let sub = inst.fix_variables(&PartialAssignment::from_assignment(&order[..k], &x, inst.num_discrete())).unwrap();
            let lp = solve_lp(&sub);
            prop_assert_eq!(lp.status, LpStatus::Optimal);
            let obj = lp.objective.unwrap();
            prop_assert!(obj >= last - 1e-9, "{} after {}", obj, last);
            last = obj;
        }
    }

    #[test]
    fn traces_strictly_improve_and_end_at_the_best(inst in any_generated()) {
        let trace = solve(&inst);
        for w in trace.events.windows(2) {
            prop_assert!(w[1].objective < w[0].objective);
            prop_assert!(w[1].time >= w[0].time);
        }
        match (&trace.best, trace.events.last()) {
            (Some(x), Some(e)) => prop_assert_eq!(inst.objective(x).unwrap(), e.objective),
            (None, None) => {}
            _ => prop_assert!(false, "best assignment and last event disagree"),
        }
    }

    #[test]
    fn generators_are_deterministic(rows in 2usize..10, seed in any::<u64>()) {
        let a = write_instance(&gen_set_cover(rows, 2 * rows, 0.2, seed).unwrap());
        prop_assert_eq!(&a, &write_instance(&gen_set_cover(rows, 2 * rows, 0.2, seed).unwrap()));
        let b = write_instance(&gen_indep_set(rows + 3, 2, seed).unwrap());
        prop_assert_eq!(&b, &write_instance(&gen_indep_set(rows + 3, 2, seed).unwrap()));
    }

    #[test]
    fn set_covers_admit_all_ones(rows in 1usize..30, extra in 0usize..30, density in 0.01f64..0.9, seed in any::<u64>()) {
        let inst = gen_set_cover(rows, (rows + extra).max(2), density, seed).unwrap();
        prop_assert!(inst.check_feasible(&Assignment(vec![1.0; inst.num_vars()]), 0.0).unwrap());
    }

    #[test]
    fn serialization_round_trips(inst in any_generated()) {
        prop_assert_eq!(&read_instance(&write_instance(&inst)).unwrap(), &inst);
        prop_assert_eq!(&parse_mps(&write_mps(&inst)).unwrap(), &inst);
    }

    #[test]
    fn model_is_permutation_equivariant(inst in small_set_cover(), seed in any::<u64>()) {
        let n = inst.num_vars();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = SplitMix64::new(seed);
        for i in (1..n).rev() {
            perm.swap(i, rng.below(i as u64 + 1) as usize);
        }
        let lp = solve_lp(&inst);
        // reuse the same LP point so that alternative optima cannot differ
        let lp_perm = LpResult { x: lp.x.as_ref().map(|x| perm.iter().map(|&j| x[j]).collect()), ..lp.clone() };
        let params = ModelParams::init(8, 2, seed);
        let a = forward(&params, &encode_graph(&inst, &lp)).unwrap();
        let b = forward(&params, &encode_graph(&permuted(&inst, &perm), &lp_perm)).unwrap();
        for (k, &j) in perm.iter().enumerate() {
            prop_assert!((b.probs[k] - a.probs[j]).abs() < 1e-9);
        }
        for h in 0..5 {
            prop_assert!((a.heads[h] - b.heads[h]).abs() < 1e-9);
        }
        let again = forward(&params, &encode_graph(&inst, &lp)).unwrap();
        prop_assert_eq!(a, again);
    }

    #[test]
    fn coverage_is_antitone_in_the_cutoff(probs in prop::collection::vec(0.0f64..=1.0, 1..40), g1 in 0.5f64..=1.0, g2 in 0.5f64..=1.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let wide = cf_select(&probs, lo).unwrap();
        let narrow = cf_select(&probs, hi).unwrap();
        prop_assert!(narrow.iter().zip(&wide).all(|(n, w)| !n || *w));
    }

    #[test]
    fn top_k_subsets_are_nested(probs in prop::collection::vec(0.0f64..=1.0, 3..12), r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0) {
        let inst = gen_capped_selection(probs.len(), 1, 0).unwrap();
        let pred = Prediction::from_probs(&inst, probs, [0.5; 5]).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let small = realize_subset(&pred, lo, Realize::ConfidenceTopK, 0).unwrap().index_set();
        let big = realize_subset(&pred, hi, Realize::ConfidenceTopK, 0).unwrap().index_set();
        prop_assert!(small.is_subset(&big));
    }

    #[test]
    fn kappa_is_bracketed(rho in 0.0f64..=1.0, lp in -100.0f64..100.0, gap in 0.0f64..100.0) {
        let k = kappa(rho, lp + gap, lp);
        prop_assert!(lp <= k + 1e-12 && k <= lp + gap + 1e-12);
    }

    #[test]
    fn scalar_bce_descent_finds_the_mean(targets in prop::collection::vec(any::<bool>(), 2..60)) {
        let mu = targets.iter().filter(|&&t| t).count() as f64 / targets.len() as f64;
        prop_assume!(mu > 0.0 && mu < 1.0);
        let (p, _) = fit_frequency(&targets, 1.0, 10_000, 1e-12);
        prop_assert!((p - mu).abs() < 1e-4, "{} vs {}", p, mu);
    }

    #[test]
    fn primal_integral_is_additive(trace in staircase(), split in 0.0f64..2.0) {
        let opt = 0.0;
        let cap = Some(200.0);
        let total = primal_integral(&trace, 2.0, opt, cap).unwrap();
        let parts = primal_integral_between(&trace, 0.0, split, opt, cap).unwrap()
            + primal_integral_between(&trace, split, 2.0, opt, cap).unwrap();
        prop_assert!((total - parts).abs() <= 1e-9 * total.abs().max(1.0));
    }

    #[test]
    fn primal_integral_vanishes_only_for_an_immediate_optimum(trace in staircase()) {
        prop_assume!(!trace.events.is_empty());
        let opt = trace.events.last().unwrap().objective;
        let pi = primal_integral(&trace, 2.0, opt, Some(200.0)).unwrap();
        // the incumbent held at t = 0, after any events stamped 0
        let immediate = trace.objective_at(0.0) == Some(opt);
        prop_assert_eq!(pi == 0.0, immediate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lemmas_hold_exhaustively(inst in any_generated().prop_filter("at most 10 binaries", |i| i.num_discrete() <= 10)) {
        let trace = solve(&inst);
        prop_assume!(trace.best.is_some());
        let x = trace.best.unwrap().0;
        let lp = solve_lp(&inst).objective.unwrap();
        let inc = inst.objective(&Assignment(x.clone())).unwrap();
        let kappas: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&r| kappa(r, inc, lp)).collect();
        let report = verify_lemmas(&inst, &x, &kappas).unwrap();
        prop_assert_eq!(report.p_violations, 0);
        prop_assert_eq!(report.q_violations, 0);
    }
}

/// Subset sizes under `BernoulliRandom` follow `Binomial(r, rho)`.
#[test]
fn bernoulli_subset_sizes_are_binomial() {
    let (r, rho, draws) = (20usize, 0.3, 10_000u64);
    let inst = gen_capped_selection(r, 1, 0).unwrap();
    let pred = Prediction::from_probs(&inst, vec![0.9; r], [0.5; 5]).unwrap();
    let mut counts = vec![0usize; r + 1];
    for seed in 0..draws {
        counts[realize_subset(&pred, rho, Realize::BernoulliRandom, seed).unwrap().len()] += 1;
    }
    let binom = Binomial::new(rho, r as u64).unwrap();
    // pool sizes into bins with at least 5 expected draws
    let (mut stat, mut bins, mut obs, mut exp) = (0.0, 0usize, 0.0, 0.0);
    for (k, &c) in counts.iter().enumerate() {
        obs += c as f64;
        exp += draws as f64 * binom.pmf(k as u64);
        if exp >= 5.0 && (draws as f64 * (1.0 - binom.cdf(k as u64))) >= 5.0 {
            stat += (obs - exp).powi(2) / exp;
            bins += 1;
            obs = 0.0;
            exp = 0.0;
        }
    }
    stat += (obs - exp).powi(2) / exp;
    bins += 1;
    let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
    assert!(p_value > 0.001, "chi-square {stat} over {bins} bins, p = {p_value}");
}
