//! Instantiating task-plan candidates into concrete sub-tasks.

use serde::{Deserialize, Serialize};

use super::buffer::sample_buffers;
use super::grasp::{grasp_feasible, GraspAngle};
use super::ladder::{plan_stage, stage_request, StageRequest};
use super::path::SyncMotion;
use super::{ArmModel, ArmTask, InstantiatedSubTask, MotionError, TargetKind};
use crate::depgraph::{DepGraph, ObjectId};
use crate::geom::{overlaps, OrientedBox, Pose2};
use crate::taskplan::{assign_arms, PlannerSession, Stage, TaskPlan, TaskPlanError};

/// Planned motion for the session's current stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMotion {
    pub stage: Stage,
    pub request: StageRequest,
    pub motion: SyncMotion,
}

/// Goal when every remaining dependency of `object` is its partner.
fn target_kind(g: &DepGraph, object: ObjectId, partner: Option<ObjectId>) -> TargetKind {
    if g.successors(object).iter().all(|&s| Some(s) == partner) {
        TargetKind::Goal
    } else {
        TargetKind::Buffer
    }
}

/// First grasp angle usable both at pick and at place.
fn choose_grasp(
    pick: &OrientedBox,
    pick_obstacles: &[OrientedBox],
    place: &OrientedBox,
    place_obstacles: &[OrientedBox],
    arm: &ArmModel,
) -> Option<GraspAngle> {
    GraspAngle::LADDER.into_iter().find(|&a| {
        grasp_feasible(pick, a, pick_obstacles, arm) && grasp_feasible(place, a, place_obstacles, arm)
    })
}

struct Scene<'a> {
    session: &'a PlannerSession,
    graph: DepGraph,
}

impl Scene<'_> {
    fn footprint(&self, id: ObjectId) -> Option<OrientedBox> {
        let inst = self.session.instance();
        self.session.current().footprint(id, &inst.shapes)
    }

    fn goal_footprint(&self, id: ObjectId) -> OrientedBox {
        let inst = self.session.instance();
        inst.shapes[id].at(inst.goal.pose(id).expect("goals are on the table"))
    }

    /// On-table footprints except `skip`.
    fn table_except(&self, skip: &[ObjectId]) -> Vec<OrientedBox> {
        (0..self.session.instance().len())
            .filter(|id| !skip.contains(id))
            .filter_map(|id| self.footprint(id))
            .collect()
    }
}

/// Binds objects (indexed by arm) to grasps and target poses, choosing the
/// cheapest buffer among the samples when one object must be parked.
fn instantiate(
    scene: &Scene,
    objs: [Option<ObjectId>; 2],
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Option<InstantiatedSubTask>, MotionError> {
    let session = scene.session;
    let inst = session.instance();
    let cfg = session.config();
    let arms = &cfg.arms;
    let ee = session.ee_positions();

    let kinds = [0, 1].map(|a| {
        objs[a].map(|o| target_kind(&scene.graph, o, objs[1 - a]))
    });
    let buffer_arm = match kinds {
        [Some(TargetKind::Buffer), Some(TargetKind::Buffer)] => return Ok(None),
        [Some(TargetKind::Buffer), _] => Some(0),
        [_, Some(TargetKind::Buffer)] => Some(1),
        _ => None,
    };

    let picked: Vec<ObjectId> = objs.iter().flatten().copied().collect();
    let rest = scene.table_except(&picked);

    // goal-bound objects first; their goal footprints constrain the buffer
    let mut places: [Option<Pose2>; 2] = [None, None];
    let mut goal_boxes = Vec::new();
    for a in 0..2 {
        if let (Some(o), Some(TargetKind::Goal)) = (objs[a], kinds[a]) {
            let b = scene.goal_footprint(o);
            if rest.iter().any(|r| overlaps(r, &b)) {
                return Ok(None);
            }
            places[a] = inst.goal.pose(o);
            goal_boxes.push(b);
        }
    }

    let mut buffer_options: Vec<Pose2> = Vec::new();
    if let Some(a) = buffer_arm {
        let o = objs[a].expect("buffer arm holds an object");
        let mut occupied = rest.clone();
        occupied.extend(goal_boxes.iter().copied());
        let pending: Vec<OrientedBox> = session
            .remaining()
            .iter()
            .filter(|&&r| r != o)
            .map(|&r| scene.goal_footprint(r))
            .collect();
        buffer_options = match sample_buffers(&inst.workspace, &inst.shapes[o], &occupied, &pending, cfg.k_buffers, rng) {
            Ok(v) => v,
            Err(_) => sample_buffers(&inst.workspace, &inst.shapes[o], &occupied, &[], cfg.k_buffers, rng)?,
        };
    }

    let travel = |a: usize, pick: Pose2, place: Pose2| ee[a].dist(pick.position()) + pick.position().dist(place.position());
    let all_now = scene.table_except(&[]);

    let build = |places: [Option<Pose2>; 2]| -> Option<InstantiatedSubTask> {
        let mut tasks: [Option<ArmTask>; 2] = [None, None];
        let mut cost: f64 = 0.0;
        for a in 0..2 {
            let Some(o) = objs[a] else { continue };
            let pick_pose = session.current().pose(o).expect("picked object is on the table");
            let place_pose = places[a].expect("every held object has a target");
            let pick_box = inst.shapes[o].at(pick_pose);
            let place_box = inst.shapes[o].at(place_pose);
            let pick_obs: Vec<OrientedBox> = all_now
                .iter()
                .filter(|b| **b != pick_box)
                .copied()
                .collect();
            let mut place_obs = rest.clone();
            if let (Some(p), Some(po)) = (objs[1 - a], places[1 - a]) {
                place_obs.push(inst.shapes[p].at(po));
            }
            let grasp = choose_grasp(&pick_box, &pick_obs, &place_box, &place_obs, &arms[a])?;
            cost = cost.max(travel(a, pick_pose, place_pose));
            tasks[a] = Some(ArmTask {
                object: o,
                grasp,
                pick: pick_pose,
                place: place_pose,
                target: kinds[a].expect("held objects have a target kind"),
            });
        }
        Some(InstantiatedSubTask { tasks, cost })
    };

    match buffer_arm {
        None => Ok(build(places)),
        Some(a) => {
            let mut best: Option<InstantiatedSubTask> = None;
            for pose in buffer_options {
                let mut p = places;
                p[a] = Some(pose);
                if let Some(sub) = build(p) {
                    if best.as_ref().is_none_or(|b| sub.cost < b.cost) {
                        best = Some(sub);
                    }
                }
            }
            Ok(best)
        }
    }
}

/// Picks the cheapest feasible instantiation among the plan's candidates.
///
/// Candidates are tried in plan order and ties keep the earlier one. Pairs
/// in which both objects would need a buffer are skipped.
pub fn select_best_task(plan: &TaskPlan, session: &mut PlannerSession) -> Result<InstantiatedSubTask, MotionError> {
    let graph = session.dependency_graph()?;
    let arms = session.config().arms;
    let mut options: Vec<[Option<ObjectId>; 2]> = plan
        .candidates
        .iter()
        .map(|&pair| assign_arms(pair, session.current(), &arms).map(Some))
        .collect();
    if let Some(single) = plan.single_arm {
        let mut objs = [None, None];
        objs[single.arm.index()] = Some(single.object);
        options.push(objs);
    }
    if options.is_empty() {
        return Err(MotionError::TaskPlan(TaskPlanError::InconsistentState));
    }

    let mut rng = session.rng_mut().clone();
    let scene = Scene { session, graph };
    let mut best: Option<InstantiatedSubTask> = None;
    let mut exhausted = None;
    for objs in options {
        match instantiate(&scene, objs, &mut rng) {
            Ok(Some(sub)) => {
                if best.as_ref().is_none_or(|b| sub.cost < b.cost) {
                    best = Some(sub);
                }
            }
            Ok(None) => {}
            Err(e @ MotionError::BufferSamplingExhausted { .. }) => exhausted = Some(e),
            Err(e) => return Err(e),
        }
    }
    *session.rng_mut() = rng;
    best.ok_or_else(|| exhausted.unwrap_or(MotionError::NoFeasibleSubTask))
}

/// Motion for the session's current stage of its pending sub-task.
pub fn plan_motion(session: &PlannerSession) -> Result<StageMotion, MotionError> {
    let stage = session
        .stage()
        .ok_or(MotionError::TaskPlan(TaskPlanError::InconsistentState))?;
    let sub = session
        .pending()
        .ok_or_else(|| MotionError::MotionFailure("no active sub-task".into()))?;
    let cfg = session.config();
    let request = stage_request(session.ee_positions(), sub, stage, &cfg.arms);
    let motion = plan_stage(&request, &cfg.arms, cfg.dt)?;
    Ok(StageMotion { stage, request, motion })
}
