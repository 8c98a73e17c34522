//! Session execution and independent trace verification.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::depgraph::{ArmId, ObjectId};
use crate::geom::{inside, overlaps, segment_clearance, Point2, Pose2};
use crate::instances::{format_instance, Instance};
use crate::motion::{
    plan_motion, select_best_task, InstantiatedSubTask, PlannerConfig, Rung, StageMotion, TargetKind,
};
use crate::taskplan::{next_task_plan, Gripper, PlannerSession, Stage, TaskPlan, TaskPlanError};
use crate::trace::{GripperEvent, RunMetrics, Sample, StageRecord, Trace, TraceHeader};

/// Final poses must match the goal this closely.
pub const GOAL_TOLERANCE: f64 = 1e-9;
/// Clearance slack allowed when re-checking a trace.
pub const VERIFY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// An execution invariant broke; this is a planner bug.
    #[error("validation failure in round {round}: {message}")]
    Validation { round: usize, message: String },
}

/// Everything produced by one execution.
#[derive(Debug, Clone)]
pub struct Run {
    pub metrics: RunMetrics,
    pub trace: Trace,
    /// Sub-task of every round, in order.
    pub subtasks: Vec<InstantiatedSubTask>,
    /// Motion of every executed stage, in order.
    pub motions: Vec<StageMotion>,
    /// Wall-clock time spent in task and motion planning.
    pub planning_time: Duration,
}

/// Runs `instance` to completion with a fresh session.
pub fn run_instance(instance: &Instance, config: PlannerConfig, seed: u64) -> Result<Run, SimError> {
    execute(PlannerSession::new(instance.clone(), config, seed))
}

fn stage_samples(
    index: usize,
    start: f64,
    sm: &StageMotion,
    sub: &InstantiatedSubTask,
    dt: f64,
) -> Vec<Sample> {
    let m = &sm.motion;
    let mut out = Vec::new();
    for t in m.sample_times(dt) {
        for arm in ArmId::BOTH {
            let a = arm.index();
            let p = m.paths[a].at(t);
            let carried = sub.task(arm).and_then(|task| {
                let tt = m.target_times[a]?;
                let holding = match sm.stage {
                    Stage::ToStart => t >= tt,
                    Stage::ToGoal => t < tt,
                };
                holding.then_some(task.object)
            });
            out.push(Sample {
                stage: index,
                t: start + t,
                arm,
                x: p.x,
                y: p.y,
                carried,
            });
        }
    }
    out
}

fn stage_events(start: f64, sm: &StageMotion, sub: &InstantiatedSubTask) -> Vec<GripperEvent> {
    let mut events: Vec<GripperEvent> = ArmId::BOTH
        .iter()
        .filter_map(|&arm| {
            let task = sub.task(arm)?;
            let tt = sm.motion.target_times[arm.index()]?;
            let (action, pose) = match sm.stage {
                Stage::ToStart => (Gripper::Close, task.pick),
                Stage::ToGoal => (Gripper::Open, task.place),
            };
            Some(GripperEvent {
                t: start + tt,
                arm,
                action,
                object: task.object,
                pose,
            })
        })
        .collect();
    events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.arm.cmp(&b.arm)));
    events
}

/// Alternates task planning and motion planning until the session is
/// solved, checking arrangement feasibility after every stage.
///
/// Planning failures end the run with `success = false`; broken execution
/// invariants are reported as [`SimError::Validation`].
pub fn execute(mut session: PlannerSession) -> Result<Run, SimError> {
    let cfg = *session.config();
    let inst = session.instance().clone();
    let header = TraceHeader {
        instance_hash: inst.hash(),
        seed: session.rng_seed(),
        dt: cfg.dt,
        k_buffers: cfg.k_buffers,
        arms: cfg.arms,
        instance: format_instance(&inst),
    };
    let mut metrics = RunMetrics {
        fallback_counts: Rung::ALL.iter().map(|r| (r.name().to_string(), 0)).collect(),
        ..RunMetrics::default()
    };
    let mut stages = Vec::new();
    let mut samples = Vec::new();
    let mut subtasks = Vec::new();
    let mut motions = Vec::new();
    let mut planning = Duration::ZERO;
    let mut clock = 0.0;

    let fail = |metrics: &mut RunMetrics, round: usize, what: String| {
        metrics.failure = Some(format!("round {round}: {what}"));
    };

    loop {
        let round = session.rounds();
        let t0 = Instant::now();
        let plan: TaskPlan = match next_task_plan(&session) {
            Ok(p) => p,
            Err(TaskPlanError::TaskComplete) => break,
            Err(e) => {
                fail(&mut metrics, round, format!("task planning: {e}"));
                break;
            }
        };
        if plan.stage == Stage::ToStart {
            match select_best_task(&plan, &mut session) {
                Ok(sub) => {
                    subtasks.push(sub.clone());
                    session.begin_round(sub);
                }
                Err(e) => {
                    planning += t0.elapsed();
                    fail(&mut metrics, round, format!("sub-task selection: {e}"));
                    break;
                }
            }
        }
        let sm = match plan_motion(&session) {
            Ok(sm) => sm,
            Err(e) => {
                planning += t0.elapsed();
                fail(&mut metrics, round, format!("motion ({}): {e}", Rung::Sequential.name()));
                break;
            }
        };
        planning += t0.elapsed();

        let sub = session.pending().cloned().expect("a sub-task is active");
        let index = stages.len();
        samples.extend(stage_samples(index, clock, &sm, &sub, cfg.dt));
        stages.push(StageRecord {
            round,
            stage: sm.stage,
            candidates: plan.candidates.clone(),
            single_arm: plan.single_arm,
            objects: sub.tasks.map(|t| t.map(|t| t.object)),
            grasps: sub.tasks.map(|t| t.map(|t| t.grasp)),
            buffer: sub.buffer(),
            mode: sm.motion.mode,
            start_time: clock,
            duration: sm.motion.duration,
            knots: sm.motion.paths.clone().map(|p| p.knots),
            events: stage_events(clock, &sm, &sub),
        });
        *metrics
            .fallback_counts
            .entry(sm.motion.mode.name().to_string())
            .or_insert(0) += 1;
        clock += sm.motion.duration;

        if sm.stage == Stage::ToGoal {
            for task in sub.tasks.iter().flatten() {
                metrics.actions += 1;
                if task.target == TargetKind::Buffer {
                    metrics.buffers_used += 1;
                }
            }
        }
        session.complete_stage(sm.motion.final_positions());
        motions.push(sm);

        session
            .current()
            .check_feasible(&inst.shapes, &inst.workspace)
            .map_err(|e| SimError::Validation {
                round,
                message: e.to_string(),
            })?;
    }

    metrics.sync_steps = session.rounds();
    metrics.makespan = clock;
    metrics.sequence = session.removal_sequence().to_vec();
    if metrics.failure.is_none() {
        for id in 0..inst.len() {
            let goal = inst.goal.pose(id).expect("goal on table");
            let ok = session
                .current()
                .pose(id)
                .is_some_and(|p| p.approx_eq(&goal, GOAL_TOLERANCE));
            if !ok {
                return Err(SimError::Validation {
                    round: session.rounds(),
                    message: format!("object {id} is not at its goal after completion"),
                });
            }
        }
        metrics.success = true;
    }

    Ok(Run {
        trace: Trace {
            header,
            stages,
            samples,
            metrics: metrics.clone(),
        },
        metrics,
        subtasks,
        motions,
        planning_time: planning,
    })
}

/// First problem found by [`verify_trace`].
#[derive(Debug, Clone, PartialEq, Error)]
#[error("stage {stage:?}, sample {sample:?}: {message}")]
pub struct TraceViolation {
    pub stage: Option<usize>,
    pub sample: Option<usize>,
    pub message: String,
}

fn violation(stage: Option<usize>, sample: Option<usize>, message: impl Into<String>) -> TraceViolation {
    TraceViolation {
        stage,
        sample,
        message: message.into(),
    }
}

/// Piecewise-linear interpolation of `(t, p)` knots, holding the ends.
fn interpolate(knots: &[(f64, Point2)], t: f64) -> Point2 {
    let (t0, p0) = knots[0];
    if t <= t0 {
        return p0;
    }
    for w in knots.windows(2) {
        let ((ta, pa), (tb, pb)) = (w[0], w[1]);
        if t <= tb {
            if tb - ta <= 0.0 {
                return pb;
            }
            let s = (t - ta) / (tb - ta);
            return Point2::new(pa.x + (pb.x - pa.x) * s, pa.y + (pb.y - pa.y) * s);
        }
    }
    knots[knots.len() - 1].1
}

fn near(a: Point2, b: Point2) -> bool {
    a.dist(b) <= GOAL_TOLERANCE
}

fn same_pose(a: &Pose2, b: &Pose2) -> bool {
    (a.x - b.x).abs() <= GOAL_TOLERANCE
        && (a.y - b.y).abs() <= GOAL_TOLERANCE
        && (a.theta - b.theta).abs() <= GOAL_TOLERANCE
}

/// Replays `trace` against `instance` using only the geometry primitives.
///
/// Checks continuity of the end-effector paths, arm clearance on a grid
/// twice as fine as the planner's (less [`VERIFY_MARGIN`]), that every grasp
/// and release happens at the effector position with valid object states,
/// that every placement is inside the table and overlap-free, that recorded
/// samples lie on the paths, and that the run ends at the goal.
pub fn verify_trace(trace: &Trace, instance: &Instance) -> Result<(), TraceViolation> {
    let h = &trace.header;
    if h.instance_hash != instance.hash() {
        return Err(violation(None, None, "trace belongs to a different instance"));
    }
    let arms = &h.arms;
    let clearance = arms[0].clearance.max(arms[1].clearance) - VERIFY_MARGIN;
    let n = instance.len();
    let mut table: Vec<Option<Pose2>> = (0..n).map(|i| instance.start.pose(i)).collect();
    let mut held: [Option<ObjectId>; 2] = [None, None];
    let mut ee = [arms[0].retract, arms[1].retract];
    let mut clock = 0.0;
    let steps = (2.0 / h.dt).round() as usize;
    let mut stage_knots: Vec<[Vec<(f64, Point2)>; 2]> = Vec::new();

    for (k, st) in trace.stages.iter().enumerate() {
        let at = Some(k);
        if (st.start_time - clock).abs() > GOAL_TOLERANCE {
            return Err(violation(at, None, "stage does not start when the previous one ends"));
        }
        let knots: [Vec<(f64, Point2)>; 2] = [0, 1].map(|a| st.knots[a].iter().map(|q| (q.t, q.p)).collect());
        for a in 0..2 {
            let ks = &knots[a];
            if ks.is_empty() {
                return Err(violation(at, None, "empty path"));
            }
            if ks[0].0.abs() > GOAL_TOLERANCE || !near(ks[0].1, ee[a]) {
                return Err(violation(at, None, format!("arm {} path is discontinuous", a + 1)));
            }
            if ks.windows(2).any(|w| w[1].0 < w[0].0) || ks[ks.len() - 1].0 > st.duration + GOAL_TOLERANCE {
                return Err(violation(at, None, format!("arm {} knot times are invalid", a + 1)));
            }
            // unit speed bound
            if ks.windows(2).any(|w| w[0].1.dist(w[1].1) > (w[1].0 - w[0].0) + 1e-9) {
                return Err(violation(at, None, format!("arm {} exceeds unit speed", a + 1)));
            }
        }
        for j in 0..=steps {
            let t = st.duration * j as f64 / steps as f64;
            let p = [interpolate(&knots[0], t), interpolate(&knots[1], t)];
            let d = segment_clearance(arms[0].base, p[0], arms[1].base, p[1]);
            if d < clearance {
                return Err(violation(at, Some(j), format!("arm clearance {d:.6} below limit")));
            }
        }

        let mut events = st.events.clone();
        events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.arm.cmp(&b.arm)));
        for ev in &events {
            let a = ev.arm.index();
            let rel = ev.t - st.start_time;
            if rel < -GOAL_TOLERANCE || rel > st.duration + GOAL_TOLERANCE {
                return Err(violation(at, None, "gripper event outside its stage"));
            }
            if ev.object >= n {
                return Err(violation(at, None, format!("unknown object {}", ev.object)));
            }
            match ev.action {
                Gripper::Close => {
                    if held[a].is_some() {
                        return Err(violation(at, None, format!("arm {} grasps while holding", a + 1)));
                    }
                    match table[ev.object] {
                        Some(p) if same_pose(&p, &ev.pose) => {}
                        _ => {
                            return Err(violation(at, None, format!("object {} is not where it is grasped", ev.object)))
                        }
                    }
                    table[ev.object] = None;
                    held[a] = Some(ev.object);
                }
                Gripper::Open => {
                    if held[a] != Some(ev.object) {
                        return Err(violation(at, None, format!("arm {} releases an object it does not hold", a + 1)));
                    }
                    let b = instance.shapes[ev.object].at(ev.pose);
                    if !inside(&instance.workspace, &b) {
                        return Err(violation(at, None, format!("object {} placed off the table", ev.object)));
                    }
                    for (other, p) in table.iter().enumerate() {
                        if let Some(p) = p {
                            if overlaps(&instance.shapes[other].at(*p), &b) {
                                return Err(violation(
                                    at,
                                    None,
                                    format!("object {} placed onto object {other}", ev.object),
                                ));
                            }
                        }
                    }
                    table[ev.object] = Some(ev.pose);
                    held[a] = None;
                }
            }
            if !near(interpolate(&knots[a], rel), ev.pose.position()) {
                return Err(violation(at, None, format!("arm {} is not at the object for its gripper event", a + 1)));
            }
        }

        ee = [knots[0][knots[0].len() - 1].1, knots[1][knots[1].len() - 1].1];
        clock += st.duration;
        stage_knots.push(knots);
    }

    for (j, s) in trace.samples.iter().enumerate() {
        let Some(st) = trace.stages.get(s.stage) else {
            return Err(violation(None, Some(j), "sample refers to a missing stage"));
        };
        let p = interpolate(&stage_knots[s.stage][s.arm.index()], s.t - st.start_time);
        if !near(p, Point2::new(s.x, s.y)) {
            return Err(violation(Some(s.stage), Some(j), "sample is off the recorded path"));
        }
    }

    if held.iter().any(Option::is_some) {
        return Err(violation(None, None, "an arm still holds an object at the end"));
    }
    for (id, p) in table.iter().enumerate() {
        let goal = instance.goal.pose(id).expect("goal on table");
        if !p.is_some_and(|p| same_pose(&p, &goal)) {
            return Err(violation(None, None, format!("object {id} does not end at its goal")));
        }
    }
    Ok(())
}

/// Counts of stages per rung in a trace.
pub fn rung_histogram(trace: &Trace) -> BTreeMap<Rung, usize> {
    let mut h = BTreeMap::new();
    for st in &trace.stages {
        *h.entry(st.mode).or_insert(0) += 1;
    }
    h
}
