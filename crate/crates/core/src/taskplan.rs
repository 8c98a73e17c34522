//! Dependency-driven dual-arm task planning.
//!
//! A [`PlannerSession`] tracks the rearrangement state; [`next_task_plan`]
//! turns it into the next [`TaskPlan`] at each synchronization point. Both
//! arms always share an execution stage: a round is one `ToStart` stage
//! (both grippers close on their objects) followed by one `ToGoal` stage
//! (both grippers open at the targets).

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{
    build_dependency_graph, decompose, Arrangement, ArmId, DepGraph, ObjectId, Placement,
};
use crate::geom::{Point2, Pose2, EPS};
use crate::instances::Instance;
use crate::motion::{ArmModel, GraspAngle, InstantiatedSubTask, PlannerConfig, TargetKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gripper {
    Open,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    ToStart,
    ToGoal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmState {
    pub gripper: Gripper,
    pub assigned: Option<ObjectId>,
    pub grasp: Option<GraspAngle>,
    pub stage: Stage,
}

impl Default for ArmState {
    fn default() -> Self {
        Self {
            gripper: Gripper::Open,
            assigned: None,
            grasp: None,
            stage: Stage::ToStart,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub object: ObjectId,
    pub grasp: GraspAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleArmTask {
    pub arm: ArmId,
    pub object: ObjectId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub stage: Stage,
    /// Candidate object pairs; arm binding is decided by [`assign_arms`].
    pub candidates: Vec<(ObjectId, ObjectId)>,
    pub gripper_actions: [Gripper; 2],
    pub assignments: [Option<Assignment>; 2],
    pub need_buffer: bool,
    pub single_arm: Option<SingleArmTask>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskPlanError {
    #[error("all objects are at their goals")]
    TaskComplete,
    #[error("arms are in different execution stages")]
    InconsistentState,
    #[error("buffer targets need a cycle of length >= 3, got {0}")]
    CycleTooShort(usize),
    #[error("{0}")]
    Graph(#[from] crate::depgraph::DepGraphError),
}

/// Mutable planning state for one instance.
#[derive(Debug, Clone)]
pub struct PlannerSession {
    instance: Instance,
    config: PlannerConfig,
    current: Arrangement,
    remaining: BTreeSet<ObjectId>,
    buffered: BTreeMap<ObjectId, Pose2>,
    arm_states: [ArmState; 2],
    ee: [Point2; 2],
    rng_seed: u64,
    rng: ChaCha8Rng,
    pending: Option<InstantiatedSubTask>,
    sequence: Vec<ObjectId>,
    rounds: usize,
}

impl PlannerSession {
    /// Objects whose start pose already equals their goal start out solved.
    pub fn new(instance: Instance, config: PlannerConfig, rng_seed: u64) -> Self {
        let remaining = (0..instance.len())
            .filter(|&i| {
                let s = instance.start.pose(i).expect("start is on table");
                let g = instance.goal.pose(i).expect("goal is on table");
                !s.approx_eq(&g, EPS)
            })
            .collect();
        let ee = [config.arms[0].retract, config.arms[1].retract];
        Self {
            current: instance.start.clone(),
            instance,
            config,
            remaining,
            buffered: BTreeMap::new(),
            arm_states: [ArmState::default(); 2],
            ee,
            rng_seed,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            pending: None,
            sequence: Vec::new(),
            rounds: 0,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn current(&self) -> &Arrangement {
        &self.current
    }

    pub fn remaining(&self) -> &BTreeSet<ObjectId> {
        &self.remaining
    }

    pub fn buffered(&self) -> &BTreeMap<ObjectId, Pose2> {
        &self.buffered
    }

    pub fn arm_states(&self) -> &[ArmState; 2] {
        &self.arm_states
    }

    pub fn ee_positions(&self) -> [Point2; 2] {
        self.ee
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn pending(&self) -> Option<&InstantiatedSubTask> {
        self.pending.as_ref()
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn is_complete(&self) -> bool {
        self.remaining.is_empty()
    }

    pub(crate) fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Stage shared by both arms, or `None` when they disagree.
    pub fn stage(&self) -> Option<Stage> {
        let [a, b] = self.arm_states;
        (a.stage == b.stage).then_some(a.stage)
    }

    /// Dependency graph of the unsolved objects at their current poses.
    pub fn dependency_graph(&self) -> Result<DepGraph, TaskPlanError> {
        let g = build_dependency_graph(
            &self.current,
            &self.instance.goal,
            &self.instance.shapes,
            &self.instance.workspace,
        )?;
        Ok(g.restricted_to(&self.remaining))
    }

    /// Records the sub-task chosen for the current round.
    pub fn begin_round(&mut self, sub: InstantiatedSubTask) {
        self.pending = Some(sub);
    }

    /// Applies the end of a stage: grippers close (`ToStart`) or open
    /// (`ToGoal`) and the arms end at `ee_final`.
    pub fn complete_stage(&mut self, ee_final: [Point2; 2]) {
        let sub = self
            .pending
            .clone()
            .expect("complete_stage without an active sub-task");
        self.ee = ee_final;
        match self.stage().expect("arms share a stage") {
            Stage::ToStart => {
                for arm in ArmId::BOTH {
                    let st = &mut self.arm_states[arm.index()];
                    st.stage = Stage::ToGoal;
                    if let Some(task) = sub.task(arm) {
                        st.gripper = Gripper::Close;
                        st.assigned = Some(task.object);
                        st.grasp = Some(task.grasp);
                        self.current.placements[task.object] = Placement::Held(arm);
                    }
                }
            }
            Stage::ToGoal => {
                for arm in ArmId::BOTH {
                    if let Some(task) = sub.task(arm) {
                        self.current.placements[task.object] = Placement::OnTable(task.place);
                        self.sequence.push(task.object);
                        match task.target {
                            TargetKind::Goal => {
                                self.remaining.remove(&task.object);
                                self.buffered.remove(&task.object);
                            }
                            TargetKind::Buffer => {
                                self.buffered.insert(task.object, task.place);
                            }
                        }
                    }
                    self.arm_states[arm.index()] = ArmState::default();
                }
                self.pending = None;
                self.rounds += 1;
            }
        }
    }

    /// Realized removal order; buffered objects appear twice.
    pub fn removal_sequence(&self) -> &[ObjectId] {
        &self.sequence
    }
}

/// Realized removal sequence of a finished (or partially executed) session.
pub fn removal_sequence_trace(session: &PlannerSession) -> Vec<ObjectId> {
    session.removal_sequence().to_vec()
}

/// Binds a pair to arms: the object with the smaller current x goes to the
/// left arm; ties go to the object nearer the left base, then the smaller id.
pub fn assign_arms(
    pair: (ObjectId, ObjectId),
    current: &Arrangement,
    arms: &[ArmModel; 2],
) -> [ObjectId; 2] {
    let (i, j) = pair;
    let pi = current.pose(i).expect("assigned object is on the table");
    let pj = current.pose(j).expect("assigned object is on the table");
    let key = |id: ObjectId, p: Pose2| (p.x, p.position().dist(arms[0].base), id);
    let (ki, kj) = (key(i, pi), key(j, pj));
    let i_first = ki
        .partial_cmp(&kj)
        .expect("finite poses")
        .is_lt();
    if i_first {
        [i, j]
    } else {
        [j, i]
    }
}

/// Arm used for a lone object: the one whose base is nearer (left on ties).
pub fn single_arm_for(object: ObjectId, current: &Arrangement, arms: &[ArmModel; 2]) -> ArmId {
    let p = current.pose(object).expect("object on the table").position();
    if p.dist(arms[1].base) < p.dist(arms[0].base) {
        ArmId::Right
    } else {
        ArmId::Left
    }
}

/// For each cycle edge `a -> b`: `a` goes straight to its goal, `b` to a buffer.
pub fn mark_buffer_target(cycle: &[ObjectId]) -> Result<Vec<(ObjectId, ObjectId)>, TaskPlanError> {
    if cycle.len() < 3 {
        return Err(TaskPlanError::CycleTooShort(cycle.len()));
    }
    Ok(adjacent_pairs(cycle))
}

fn adjacent_pairs(cycle: &[ObjectId]) -> Vec<(ObjectId, ObjectId)> {
    (0..cycle.len())
        .map(|k| (cycle[k], cycle[(k + 1) % cycle.len()]))
        .collect()
}

/// Strongly connected parts with no edge leaving them.
fn sink_parts(g: &DepGraph, parts: &[Vec<ObjectId>]) -> Vec<Vec<ObjectId>> {
    parts
        .iter()
        .filter(|part| {
            let members: BTreeSet<_> = part.iter().copied().collect();
            part.iter()
                .all(|&v| g.successors(v).iter().all(|w| members.contains(w)))
        })
        .cloned()
        .collect()
}

/// Vertex of a complex component buffered first: maximum out-degree, then smallest id.
fn complex_breaker(g: &DepGraph, part: &[ObjectId]) -> ObjectId {
    *part
        .iter()
        .max_by(|&&a, &&b| g.out_degree(a).cmp(&g.out_degree(b)).then(b.cmp(&a)))
        .expect("non-empty component")
}

/// Emits the plan for the next stage of `session`.
pub fn next_task_plan(session: &PlannerSession) -> Result<TaskPlan, TaskPlanError> {
    let stage = session.stage().ok_or(TaskPlanError::InconsistentState)?;
    match stage {
        Stage::ToGoal => Ok(goal_stage_plan(session)),
        Stage::ToStart => {
            if session.remaining.is_empty() {
                return Err(TaskPlanError::TaskComplete);
            }
            start_stage_plan(session)
        }
    }
}

fn goal_stage_plan(session: &PlannerSession) -> TaskPlan {
    let assignments = session.arm_states.map(|st| {
        st.assigned.map(|object| Assignment {
            object,
            grasp: st.grasp.expect("assigned arms carry a grasp"),
        })
    });
    let (candidates, single_arm, need_buffer) = match &session.pending {
        Some(sub) => {
            let need_buffer = sub.tasks.iter().flatten().any(|t| t.target == TargetKind::Buffer);
            match sub.tasks {
                [Some(a), Some(b)] => (vec![(a.object, b.object)], None, need_buffer),
                [Some(a), None] => (
                    vec![],
                    Some(SingleArmTask { arm: ArmId::Left, object: a.object }),
                    need_buffer,
                ),
                [None, Some(b)] => (
                    vec![],
                    Some(SingleArmTask { arm: ArmId::Right, object: b.object }),
                    need_buffer,
                ),
                [None, None] => (vec![], None, false),
            }
        }
        None => (vec![], None, false),
    };
    TaskPlan {
        stage: Stage::ToGoal,
        candidates,
        gripper_actions: [Gripper::Open; 2],
        assignments,
        need_buffer,
        single_arm,
    }
}

fn start_stage_plan(session: &PlannerSession) -> Result<TaskPlan, TaskPlanError> {
    let g = session.dependency_graph()?;
    let d = decompose(&g);
    let arms = &session.config.arms;
    let current = &session.current;

    let mut plan = TaskPlan {
        stage: Stage::ToStart,
        candidates: Vec::new(),
        gripper_actions: [Gripper::Close; 2],
        assignments: [None, None],
        need_buffer: false,
        single_arm: None,
    };
    let single = |object: ObjectId| SingleArmTask {
        arm: single_arm_for(object, current, arms),
        object,
    };

    if session.remaining.len() == 1 {
        let object = *session.remaining.iter().next().unwrap();
        plan.single_arm = Some(single(object));
        return Ok(plan);
    }

    let movable = &d.movable_now;
    if movable.len() >= 2 {
        for (k, &i) in movable.iter().enumerate() {
            for &j in &movable[k + 1..] {
                plan.candidates.push((i, j));
            }
        }
        return Ok(plan);
    }

    let parts: Vec<Vec<ObjectId>> = d.cyclic_parts().cloned().collect();
    let sinks = sink_parts(&g, &parts);
    let two_cycles: Vec<&Vec<ObjectId>> = sinks.iter().filter(|p| p.len() == 2).collect();
    let long_cycle = sinks
        .iter()
        .find(|p| p.len() >= 3 && d.cycles.contains(p));
    let complex = sinks.iter().find(|p| d.complex_sccs.contains(p));

    if let [m] = movable[..] {
        // leaf plus every predecessor that depends on nothing else
        let chain_len = |v: ObjectId| {
            d.chains
                .iter()
                .find(|c| c.contains(&v))
                .map_or(0, Vec::len)
        };
        let mut preds: Vec<ObjectId> = g
            .predecessors(m)
            .iter()
            .copied()
            .filter(|&p| g.out_degree(p) == 1)
            .collect();
        preds.sort_by(|&a, &b| chain_len(b).cmp(&chain_len(a)).then(a.cmp(&b)));
        if !preds.is_empty() {
            plan.candidates = preds.into_iter().map(|p| (p, m)).collect();
            return Ok(plan);
        }
        if let Some(cycle) = long_cycle {
            plan.candidates = cycle.iter().map(|&x| (m, x)).collect();
            plan.need_buffer = true;
            return Ok(plan);
        }
        if let Some(part) = complex {
            plan.candidates = vec![(m, complex_breaker(&g, part))];
            plan.need_buffer = true;
            return Ok(plan);
        }
        plan.single_arm = Some(single(m));
        return Ok(plan);
    }

    // nothing movable: some strongly connected part has no outgoing edge
    if !two_cycles.is_empty() {
        plan.candidates = two_cycles.iter().map(|c| (c[0], c[1])).collect();
        return Ok(plan);
    }
    if let Some(cycle) = long_cycle {
        plan.candidates = mark_buffer_target(cycle)?;
        plan.need_buffer = true;
        return Ok(plan);
    }
    let part = complex.expect("a graph without sinks has a sink component");
    let breaker = complex_breaker(&g, part);
    let movers: Vec<ObjectId> = g
        .predecessors(breaker)
        .iter()
        .copied()
        .filter(|&u| g.out_degree(u) == 1)
        .collect();
    plan.need_buffer = true;
    if movers.is_empty() {
        plan.single_arm = Some(single(breaker));
    } else {
        plan.candidates = movers.into_iter().map(|u| (u, breaker)).collect();
    }
    Ok(plan)
}
