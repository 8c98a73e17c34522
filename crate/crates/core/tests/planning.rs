mod common;

use proptest::prelude::*;
use sdar_core::geom::overlaps;
use sdar_core::instances::gen_random;
use sdar_core::motion::{
    certify_clearance, plan_motion, plan_stage, rung_durations, select_best_task, StageRequest,
};
use sdar_core::taskplan::assign_arms;
use sdar_core::{
    next_task_plan, run_instance, Instance, PlannerConfig, PlannerSession, Point2, Rung, Stage,
    TaskPlanError,
};

use common::fixture;

fn config(inst: &Instance) -> PlannerConfig {
    PlannerConfig::for_workspace(&inst.workspace)
}

/// Minimum distance between the two arm segments over a fine uniform grid.
fn fine_clearance(m: &sdar_core::motion::SyncMotion, cfg: &PlannerConfig, steps: usize) -> f64 {
    let mut min = f64::INFINITY;
    for k in 0..=steps {
        let t = m.duration * k as f64 / steps as f64;
        let [a, b] = m.positions_at(t);
        let d = sdar_core::geom::segment_clearance(cfg.arms[0].base, a, cfg.arms[1].base, b);
        min = min.min(d);
    }
    min
}

#[test]
fn running_example_first_plan_lists_movable_pairs() {
    let inst = fixture("running_example.inst");
    let session = PlannerSession::new(inst.clone(), config(&inst), 0);
    let plan = next_task_plan(&session).unwrap();
    assert_eq!(plan.stage, Stage::ToStart);
    assert_eq!(plan.candidates, vec![(4, 7), (4, 8), (7, 8)]);
    assert!(!plan.need_buffer);
}

#[test]
fn arm_assignment_ignores_pair_order() {
    let inst = fixture("running_example.inst");
    let arms = config(&inst).arms;
    for i in 0..inst.len() {
        for j in 0..inst.len() {
            if i == j {
                continue;
            }
            let a = assign_arms((i, j), &inst.start, &arms);
            let b = assign_arms((j, i), &inst.start, &arms);
            assert_eq!(a, b);
            let (xl, xr) = (inst.start.pose(a[0]).unwrap().x, inst.start.pose(a[1]).unwrap().x);
            assert!(xl <= xr);
        }
    }
}

#[test]
fn completed_session_reports_task_complete() {
    let inst = fixture("identity.inst");
    let session = PlannerSession::new(inst.clone(), config(&inst), 0);
    assert!(session.is_complete());
    assert_eq!(next_task_plan(&session), Err(TaskPlanError::TaskComplete));
}

#[test]
fn ladder_fixtures_hit_their_rungs() {
    for (name, rung) in [
        ("ladder_sync.inst", Rung::Synchronous),
        ("ladder_untangled.inst", Rung::Untangled),
        ("ladder_sequential.inst", Rung::Sequential),
    ] {
        let inst = fixture(name);
        let run = run_instance(&inst, config(&inst), 0).unwrap();
        assert!(run.metrics.success, "{name}");
        let goal = run.motions.iter().find(|m| m.stage == Stage::ToGoal).unwrap();
        assert_eq!(goal.motion.mode, rung, "{name}");
    }
}

#[test]
fn stage_motion_follows_the_instantiated_subtask() {
    let inst = fixture("running_example.inst");
    let mut session = PlannerSession::new(inst.clone(), config(&inst), 3);
    let plan = next_task_plan(&session).unwrap();
    let sub = select_best_task(&plan, &mut session).unwrap();
    session.begin_round(sub.clone());
    let m = plan_motion(&session).unwrap();
    assert_eq!(m.stage, Stage::ToStart);
    for (a, task) in sub.tasks.iter().enumerate() {
        if let Some(task) = task {
            let t = m.motion.target_times[a].unwrap();
            assert!(m.motion.paths[a].at(t).dist(task.pick.position()) < 1e-12);
        }
    }
}

#[test]
fn same_seed_same_run() {
    let inst = gen_random(9, 17).unwrap();
    let a = run_instance(&inst, config(&inst), 5).unwrap();
    let b = run_instance(&inst, config(&inst), 5).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.trace.to_text(), b.trace.to_text());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_stage_keeps_clearance_between_samples(n in 2usize..=9, seed in 0u64..5000) {
        let inst = gen_random(n, seed).unwrap();
        let cfg = config(&inst);
        let run = run_instance(&inst, cfg, seed).unwrap();
        prop_assert!(run.metrics.success, "{:?}", run.metrics.failure);
        for m in &run.motions {
            let d = fine_clearance(&m.motion, &cfg, 2000);
            prop_assert!(d >= cfg.clearance() - 1e-6, "clearance {} in {:?}", d, m.motion.mode);
        }
    }

    #[test]
    fn placements_never_overlap_objects_on_the_table(n in 2usize..=10, seed in 0u64..5000) {
        let inst = gen_random(n, seed).unwrap();
        let run = run_instance(&inst, config(&inst), seed).unwrap();
        prop_assert!(run.metrics.success);
        let mut poses: Vec<_> = (0..inst.len()).map(|i| Some(inst.start.pose(i).unwrap())).collect();
        for st in &run.trace.stages {
            for ev in &st.events {
                match ev.action {
                    sdar_core::taskplan::Gripper::Close => poses[ev.object] = None,
                    sdar_core::taskplan::Gripper::Open => {
                        let placed = inst.shapes[ev.object].at(ev.pose);
                        for (j, p) in poses.iter().enumerate() {
                            if let Some(p) = p {
                                prop_assert!(!overlaps(&placed, &inst.shapes[j].at(*p)),
                                    "object {} placed onto {}", ev.object, j);
                            }
                        }
                        poses[ev.object] = Some(ev.pose);
                    }
                }
            }
        }
    }

    #[test]
    fn higher_rungs_are_never_faster_than_sequential(
        ax in 0.05f64..0.95, ay in 0.05f64..0.45, bx in 0.05f64..0.95, by in 0.05f64..0.45,
    ) {
        let cfg = PlannerConfig::for_workspace(&Default::default());
        let req = StageRequest {
            from: [cfg.arms[0].retract, cfg.arms[1].retract],
            to: [Point2::new(ax, ay), Point2::new(bx, by)],
            active: [true, true],
        };
        let d = rung_durations(&req, &cfg.arms, cfg.dt);
        if let Some(seq) = d[2] {
            for x in d.iter().flatten() {
                prop_assert!(*x <= seq + 1e-12);
            }
            let m = plan_stage(&req, &cfg.arms, cfg.dt).unwrap();
            prop_assert!(certify_clearance(&m, &cfg.arms, cfg.dt).is_ok());
            prop_assert!(m.duration <= seq + 1e-12);
            // synchronous lower bound: the longer of the two straight moves
            let lb = req.from[0].dist(req.to[0]).max(req.from[1].dist(req.to[1]));
            prop_assert!(m.duration >= lb - 1e-12);
        }
    }
}
