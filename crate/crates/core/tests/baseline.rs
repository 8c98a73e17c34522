mod common;

use proptest::prelude::*;
use sdar_core::baseline::{
    exhaustive_single_arm_actions, min_fvs, sequential_makespan, sequential_makespan_of,
    single_arm_optimal_actions,
};
use sdar_core::instances::{gen_double_cycle, gen_random, gen_single_cycle};
use sdar_core::{run_instance, DepGraph, PlannerConfig};

use common::{fixture, fvs_by_enumeration};

fn arb_graph(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n), 0..(2 * n + 2))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn min_fvs_matches_subset_enumeration((n, edges) in arb_graph(9)) {
        let g = DepGraph::from_edges(n, edges.iter().copied());
        prop_assert_eq!(min_fvs(&g).unwrap(), fvs_by_enumeration(n, &g.edges()));
    }

    #[test]
    fn exhaustive_search_agrees_with_fvs_formula((n, edges) in arb_graph(7)) {
        let g = DepGraph::from_edges(n, edges.iter().copied());
        prop_assert_eq!(exhaustive_single_arm_actions(&g).unwrap(), n + min_fvs(&g).unwrap());
    }
}

#[test]
fn running_example_needs_one_buffer() {
    let inst = fixture("running_example.inst");
    let o = single_arm_optimal_actions(&inst).unwrap();
    assert_eq!(o.min_fvs, 1);
    assert_eq!(o.single_arm_optimal_actions, 10);
    assert!(o.assumption_holds);
}

#[test]
fn cycle_oracles() {
    let s5 = single_arm_optimal_actions(&gen_single_cycle(5, 0).unwrap()).unwrap();
    assert_eq!((s5.min_fvs, s5.single_arm_optimal_actions), (1, 6));
    let d8 = single_arm_optimal_actions(&gen_double_cycle(8, 0).unwrap()).unwrap();
    assert_eq!((d8.min_fvs, d8.single_arm_optimal_actions), (2, 10));
    let id = single_arm_optimal_actions(&fixture("identity.inst")).unwrap();
    assert_eq!(id.single_arm_optimal_actions, 0);
}

#[test]
fn unobstructed_sequential_makespan_is_the_sum_of_moves() {
    let inst = fixture("ladder_sync.inst");
    let cfg = PlannerConfig::for_workspace(&inst.workspace);
    let run = run_instance(&inst, cfg, 0).unwrap();
    let sum: f64 = run
        .motions
        .iter()
        .map(|m| (0..2).map(|a| m.request.from[a].dist(m.request.to[a])).sum::<f64>())
        .sum();
    let seq = sequential_makespan_of(&run, &cfg).unwrap();
    assert!((seq - sum).abs() < 1e-9, "{seq} vs {sum}");
    assert!(run.metrics.makespan < seq);
}

#[test]
fn dual_arm_is_never_slower_than_sequential() {
    for seed in 0..20 {
        let inst = gen_random(10, seed).unwrap();
        let cfg = PlannerConfig::for_workspace(&inst.workspace);
        let run = run_instance(&inst, cfg, seed).unwrap();
        let seq = sequential_makespan(&inst, &cfg, seed).unwrap();
        assert!(run.metrics.makespan <= seq + 1e-9, "seed {seed}");
    }
}

#[test]
fn planner_matches_or_beats_the_single_arm_oracle() {
    for seed in 0..20 {
        let inst = gen_random(8, seed).unwrap();
        let o = single_arm_optimal_actions(&inst).unwrap();
        let run = run_instance(&inst, PlannerConfig::for_workspace(&inst.workspace), seed).unwrap();
        if o.assumption_holds {
            assert!(run.metrics.actions <= o.single_arm_optimal_actions, "seed {seed}");
        }
    }
}
