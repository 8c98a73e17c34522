mod common;

use proptest::prelude::*;
use sdar_core::instances::{
    default_suite, format_instance, gen_double_cycle, gen_mixed, gen_random, gen_single_cycle, load,
    parse_instance, save, Category,
};
use sdar_core::decompose;

use common::fixture;

#[test]
fn generation_is_deterministic() {
    assert_eq!(gen_random(8, 42).unwrap(), gen_random(8, 42).unwrap());
    assert_eq!(gen_single_cycle(6, 42).unwrap(), gen_single_cycle(6, 42).unwrap());
    assert_eq!(gen_double_cycle(9, 42).unwrap(), gen_double_cycle(9, 42).unwrap());
    assert_eq!(gen_mixed(3, 42).unwrap(), gen_mixed(3, 42).unwrap());
    assert_ne!(gen_random(8, 42).unwrap(), gen_random(8, 43).unwrap());
}

#[test]
fn random_instances_are_feasible_for_many_seeds() {
    for seed in 0..100 {
        for n in [4, 8, 12] {
            let inst = gen_random(n, seed).unwrap();
            assert_eq!(inst.len(), n);
            inst.validate().unwrap_or_else(|e| panic!("n={n} seed={seed}: {e}"));
        }
    }
}

#[test]
fn single_cycles_are_one_simple_cycle() {
    for n in 2..=10 {
        for seed in 0..5 {
            let d = decompose(&gen_single_cycle(n, seed).unwrap().dependency_graph().unwrap());
            assert_eq!(d.cycles.len(), 1, "n={n} seed={seed}");
            assert_eq!(d.cycles[0].len(), n);
            assert!(d.chains.is_empty() && d.complex_sccs.is_empty());
        }
    }
}

#[test]
fn double_cycles_split_evenly() {
    for n in 4..=12 {
        let d = decompose(&gen_double_cycle(n, 1).unwrap().dependency_graph().unwrap());
        let mut lens: Vec<usize> = d.cycles.iter().map(Vec::len).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![n / 2, n - n / 2], "n={n}");
        assert!(d.complex_sccs.is_empty());
    }
    let d = decompose(&gen_double_cycle(7, 0).unwrap().dependency_graph().unwrap());
    let mut lens: Vec<usize> = d.cycles.iter().map(Vec::len).collect();
    lens.sort_unstable();
    assert_eq!(lens, vec![3, 4]);
}

#[test]
fn mixed_instances_combine_every_structure() {
    for m in 1..=20 {
        let inst = gen_mixed(m, 7 + m as u64).unwrap();
        let d = decompose(&inst.dependency_graph().unwrap());
        let mut lens: Vec<usize> = d.cycles.iter().map(Vec::len).collect();
        lens.sort_unstable();
        assert_eq!(lens, vec![2, 3], "M{m}");
        assert_eq!(d.chains.iter().map(Vec::len).collect::<Vec<_>>(), vec![4], "M{m}");
        assert_eq!(d.isolated.len(), 3, "M{m}");
        assert!(d.complex_sccs.is_empty() && d.other.is_empty(), "M{m}");
    }
}

#[test]
fn default_suite_has_two_hundred_distinct_instances() {
    let suite = default_suite(0);
    assert_eq!(suite.len(), 200);
    let count = |c| suite.iter().filter(|e| e.category == c).count();
    assert_eq!(
        Category::ALL.map(count),
        [90, 45, 45, 20]
    );
    let mut names: Vec<String> = suite
        .iter()
        .map(|e| e.generate().unwrap().name())
        .collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), 200);
}

#[test]
fn save_and_load_through_a_file() {
    let dir = std::env::temp_dir().join(format!("sdar-inst-{}", std::process::id()));
    let path = dir.join("nested").join("x.inst");
    let inst = gen_double_cycle(7, 11).unwrap();
    save(&inst, &path).unwrap();
    assert_eq!(load(&path).unwrap(), inst);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fixtures_load_and_keep_their_hash() {
    for name in [
        "running_example.inst",
        "identity.inst",
        "ladder_sync.inst",
        "ladder_untangled.inst",
        "ladder_sequential.inst",
    ] {
        let inst = fixture(name);
        inst.validate().unwrap();
        let again = parse_instance(&format_instance(&inst)).unwrap();
        assert_eq!(again.hash(), inst.hash(), "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn text_round_trip_is_exact(n in 1usize..=12, seed in any::<u64>()) {
        let inst = gen_random(n, seed).unwrap();
        let text = format_instance(&inst);
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(format_instance(&back), text);
    }
}
