mod common;

use sdar_core::baseline::displaced_objects;
use sdar_core::instances::{gen_mixed, gen_random, gen_single_cycle};
use sdar_core::sim::rung_histogram;
use sdar_core::{run_instance, verify_trace, Instance, PlannerConfig, Rung, Trace};

use common::fixture;

fn run(inst: &Instance, seed: u64) -> sdar_core::Run {
    let r = run_instance(inst, PlannerConfig::for_workspace(&inst.workspace), seed).unwrap();
    assert!(r.metrics.success, "{}: {:?}", inst.name(), r.metrics.failure);
    verify_trace(&r.trace, inst).unwrap_or_else(|v| panic!("{}: {v:?}", inst.name()));
    r
}

fn check_invariants(inst: &Instance, r: &sdar_core::Run) {
    let m = &r.metrics;
    assert_eq!(m.actions, displaced_objects(inst).len() + m.buffers_used, "{}", inst.name());
    assert_eq!(m.sequence.len(), m.actions);
    assert!(m.sync_steps <= m.actions);
    assert!(2 * m.sync_steps >= m.actions);
    assert_eq!(m.sync_steps, r.subtasks.len());
    assert_eq!(r.motions.len(), 2 * m.sync_steps);
    let total: f64 = r.trace.stages.iter().map(|s| s.duration).sum();
    assert!((total - m.makespan).abs() < 1e-9);
    let stages: usize = m.fallback_counts.values().sum();
    assert_eq!(stages, r.trace.stages.len());
    let hist = rung_histogram(&r.trace);
    for rung in Rung::ALL {
        assert_eq!(hist.get(&rung).copied().unwrap_or(0), m.fallbacks(rung));
    }
}

#[test]
fn identity_instance_needs_no_motion() {
    let inst = fixture("identity.inst");
    let r = run(&inst, 0);
    assert_eq!(r.metrics.actions, 0);
    assert_eq!(r.metrics.sync_steps, 0);
    assert_eq!(r.metrics.makespan, 0.0);
    assert!(r.trace.stages.is_empty());
}

#[test]
fn running_example_uses_one_buffer() {
    let inst = fixture("running_example.inst");
    let r = run(&inst, 0);
    assert_eq!(r.metrics.actions, 10);
    assert_eq!(r.metrics.buffers_used, 1);
    assert_eq!(r.metrics.sync_steps, 5);
    check_invariants(&inst, &r);
}

#[test]
fn two_cycles_swap_without_buffers() {
    for seed in 0..5 {
        let inst = gen_single_cycle(2, seed).unwrap();
        let r = run(&inst, seed);
        assert_eq!(r.metrics.actions, 2);
        assert_eq!(r.metrics.buffers_used, 0);
        assert_eq!(r.metrics.sync_steps, 1);
    }
}

#[test]
fn mixed_instances_use_a_single_buffer() {
    for m in 1..=20 {
        let inst = gen_mixed(m, m as u64 - 1).unwrap();
        let r = run(&inst, 0);
        assert_eq!(r.metrics.buffers_used, 1, "M{m}");
        check_invariants(&inst, &r);
    }
}

#[test]
fn metric_invariants_hold_on_random_instances() {
    for seed in 0..30 {
        let inst = gen_random(4 + (seed as usize % 9), seed).unwrap();
        let r = run(&inst, seed);
        check_invariants(&inst, &r);
    }
}

#[test]
fn trace_text_round_trips() {
    let inst = fixture("running_example.inst");
    let r = run(&inst, 0);
    let text = r.trace.to_text();
    let back = Trace::parse(&text).unwrap();
    assert_eq!(back, r.trace);
    assert_eq!(back.to_text(), text);
    verify_trace(&back, &inst).unwrap();
}

#[test]
fn tampered_traces_are_rejected() {
    let inst = fixture("running_example.inst");
    let good = run(&inst, 0).trace;

    let mut t = good.clone();
    let knot = t.stages[2].knots[0].last_mut().unwrap();
    knot.p.x += 0.01;
    assert!(verify_trace(&t, &inst).is_err(), "moved knot");

    let mut t = good.clone();
    t.samples[7].y += 0.01;
    assert!(verify_trace(&t, &inst).is_err(), "moved sample");

    let mut t = good.clone();
    let ev = t.stages.iter_mut().flat_map(|s| &mut s.events).last().unwrap();
    ev.pose.x += 0.05;
    assert!(verify_trace(&t, &inst).is_err(), "moved final placement");

    let mut t = good.clone();
    t.stages.pop();
    assert!(verify_trace(&t, &inst).is_err(), "missing stage");

    let mut t = good.clone();
    t.header.instance_hash = "0".repeat(16);
    assert!(verify_trace(&t, &inst).is_err(), "wrong instance");

    let other = gen_random(9, 1).unwrap();
    assert!(verify_trace(&good, &other).is_err(), "other instance");
}

#[test]
fn broken_trace_text_reports_a_line() {
    let inst = fixture("identity.inst");
    let text = run(&inst, 0).trace.to_text();
    let bad = text.replacen("\"kind\":\"metrics\"", "\"kind\":\"bogus\"", 1);
    match Trace::parse(&bad) {
        Err(sdar_core::trace::TraceError::Parse { line, .. }) => assert!(line >= 2),
        other => panic!("unexpected {other:?}"),
    }
    assert!(Trace::parse("sdar-trace/0\n").is_err());
}
