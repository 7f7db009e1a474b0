//! The adaptive follower saves at most a quarter of the evasion premium:
//! cost sandwich, its sharpened form with the shortest path subtracted,
//! and the matching pointwise bounds on flexible revenue.

use farekit::follower::{
    nonadaptive_cost, solve_adaptive, solve_nonadaptive_exact,
};
use farekit::graph::{cost_weights, distances_to};
use farekit::instance::samples;
use farekit::leader::{revenue, VariantId};

#[test]
fn parallel_arcs_example_is_exact() {
    let (inst, strategy) = samples::parallel_arcs();
    let net = &inst.network;
    // Both committed routes cost 2; rerouting after the first inspection
    // brings the trip down to 3/2, a ratio of exactly 4/3.
    let risky = nonadaptive_cost(net, &strategy, inst.fine, &[0, 1]).unwrap();
    let paid = nonadaptive_cost(net, &strategy, inst.fine, &[0, 2]).unwrap();
    assert!((risky - 2.0).abs() < 1e-12);
    assert!((paid - 2.0).abs() < 1e-12);
    let best_n = solve_nonadaptive_exact(net, &strategy, inst.fine, 0, 2).unwrap();
    assert!((best_n.result.value - 2.0).abs() < 1e-12);
    let best_a = solve_adaptive(net, &strategy, inst.fine, 0, 2).unwrap();
    assert!((best_a.value - 1.5).abs() < 1e-12);
    assert!((best_n.result.value / best_a.value - 4.0 / 3.0).abs() < 1e-12);
    // The adaptive passenger still commits to the paid arc; the free arc
    // only enters after an inspection on s->v.
    assert_eq!(best_a.path, vec![0, 2]);
    assert!((best_a.label.survival - 0.5).abs() < 1e-12);
}

#[test]
fn adaptivity_saves_at_most_a_quarter() {
    let mut draws = 0;
    for seed in 0..250 {
        let inst = samples::random_instance(seed);
        let strategy = samples::random_strategy(seed ^ 0x0BAD_5EED, &inst);
        let net = &inst.network;
        let weights = cost_weights(net);
        for com in &inst.commodities {
            let v_n =
                solve_nonadaptive_exact(net, &strategy, inst.fine, com.source, com.target)
                    .unwrap()
                    .result
                    .value;
            let v_a = solve_adaptive(net, &strategy, inst.fine, com.source, com.target)
                .unwrap()
                .value;
            assert!(v_a <= v_n + 1e-9, "seed {seed}: adaptive {v_a} beats itself {v_n}");
            assert!(
                v_n <= 4.0 / 3.0 * v_a + 1e-9,
                "seed {seed}: gap ratio {} too large",
                v_n / v_a
            );
            // Sharper form: only the premium over the plain shortest path
            // is subject to the 4/3 factor.
            let sp = distances_to(net, &weights, com.target)[com.source];
            assert!(
                v_n - sp <= 4.0 / 3.0 * (v_a - sp) + 1e-9,
                "seed {seed}: premium gap violated ({} vs {})",
                v_n - sp,
                v_a - sp
            );
            draws += 1;
        }
    }
    assert!(draws >= 500, "only {draws} sandwich draws");
}

#[test]
fn flexible_revenue_sandwich_matches_the_gap() {
    let mut draws = 0;
    for seed in 0..250 {
        let inst = samples::random_instance(seed);
        let strategy = samples::random_strategy(seed ^ 0x0BAD_5EED, &inst);
        for i in 0..inst.commodities.len() {
            let flex_n = revenue(&inst, &strategy, i, VariantId::FLEX_N).unwrap().revenue;
            let flex_a = revenue(&inst, &strategy, i, VariantId::FLEX_A).unwrap().revenue;
            assert!(
                flex_a <= flex_n + 1e-9,
                "seed {seed} commodity {i}: adaptive passengers pay more ({flex_a} > {flex_n})"
            );
            assert!(
                flex_n <= 4.0 / 3.0 * flex_a + 1e-9,
                "seed {seed} commodity {i}: revenue gap beyond 4/3 ({flex_n} vs {flex_a})"
            );
            draws += 1;
        }
    }
    assert!(draws >= 500, "only {draws} revenue draws");
}
