//! Synchronous dual-arm motion generation over a planar arm surrogate.
//!
//! Each arm is modelled as the segment from its fixed base to its end
//! effector. Grasp feasibility stands in for inverse kinematics (reach plus
//! gripper clearance), and arm-arm safety is a minimum segment clearance.
//! Objects travel above the table, so only arm-arm conflicts and placement
//! feasibility constrain a motion.

mod buffer;
mod grasp;
mod ladder;
mod path;
mod select;

pub use buffer::sample_buffers;
pub use grasp::{grasp_feasible, GraspAngle};
pub use ladder::{
    plan_stage, plan_sync, rung_durations, sequential_fallback, stage_request, untangle, StageRequest,
    UntangleFailure, UNTANGLE_VARIANTS,
};
pub use path::{certify_clearance, ArmPath, Conflict, Knot, SyncMotion};
pub use select::{plan_motion, select_best_task, StageMotion};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{ArmId, ObjectId};
use crate::geom::{Point2, Pose2, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub base: Point2,
    pub reach: f64,
    pub ee_radius: f64,
    /// Minimum allowed distance between the two arms' base-to-effector segments.
    pub clearance: f64,
    /// Parking pose outside the workspace.
    pub retract: Point2,
    /// Via point on the arm's own workspace edge, used to untangle motions.
    pub waypoint: Point2,
    pub gripper_width: f64,
    pub gripper_depth: f64,
    pub finger_width: f64,
    pub finger_depth: f64,
}

/// Distance of the bases from the short workspace edges.
pub const BASE_OFFSET: f64 = 0.15;
/// Distance of the retract poses from the bases, toward the workspace.
pub const RETRACT_OFFSET: f64 = 0.05;

impl ArmModel {
    /// Left and right arms facing each other across the short edges of `ws`.
    pub fn default_pair(ws: &Workspace) -> [ArmModel; 2] {
        let mid = ws.height / 2.0;
        let make = |base_x: f64, retract_x: f64, edge_x: f64| ArmModel {
            base: Point2::new(base_x, mid),
            reach: ws.diagonal() + 0.1,
            ee_radius: 0.04,
            clearance: 0.10,
            retract: Point2::new(retract_x, mid),
            waypoint: Point2::new(edge_x, mid),
            gripper_width: 0.04,
            gripper_depth: 0.02,
            finger_width: 0.02,
            finger_depth: 0.015,
        };
        [
            make(-BASE_OFFSET, -BASE_OFFSET + RETRACT_OFFSET, 0.0),
            make(
                ws.width + BASE_OFFSET,
                ws.width + BASE_OFFSET - RETRACT_OFFSET,
                ws.width,
            ),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub arms: [ArmModel; 2],
    /// Sampling step as a fraction of each motion's duration.
    pub dt: f64,
    pub k_buffers: usize,
}

impl PlannerConfig {
    pub fn for_workspace(ws: &Workspace) -> Self {
        Self {
            arms: ArmModel::default_pair(ws),
            dt: 0.02,
            k_buffers: 20,
        }
    }

    pub fn with_clearance(mut self, clearance: f64) -> Self {
        for arm in &mut self.arms {
            arm.clearance = clearance;
        }
        self
    }

    pub fn clearance(&self) -> f64 {
        self.arms[0].clearance.max(self.arms[1].clearance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rung {
    Synchronous,
    Untangled,
    Sequential,
}

impl Rung {
    pub const ALL: [Rung; 3] = [Rung::Synchronous, Rung::Untangled, Rung::Sequential];

    pub fn name(self) -> &'static str {
        match self {
            Rung::Synchronous => "synchronous",
            Rung::Untangled => "untangled",
            Rung::Sequential => "sequential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetKind {
    Goal,
    Buffer,
}

/// One arm's pick-and-place inside a sub-task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmTask {
    pub object: ObjectId,
    pub grasp: GraspAngle,
    pub pick: Pose2,
    pub place: Pose2,
    pub target: TargetKind,
}

/// A candidate bound to arms, grasps and concrete target poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantiatedSubTask {
    pub tasks: [Option<ArmTask>; 2],
    /// Larger of the two arms' end-effector travel distances.
    pub cost: f64,
}

impl InstantiatedSubTask {
    pub fn task(&self, arm: ArmId) -> Option<&ArmTask> {
        self.tasks[arm.index()].as_ref()
    }

    pub fn buffer(&self) -> Option<(ObjectId, Pose2)> {
        self.tasks
            .iter()
            .flatten()
            .find(|t| t.target == TargetKind::Buffer)
            .map(|t| (t.object, t.place))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("no candidate sub-task is feasible")]
    NoFeasibleSubTask,
    #[error("buffer sampling exhausted after {draws} draws")]
    BufferSamplingExhausted { draws: usize },
    #[error("sub-task infeasible even with sequential execution: {0}")]
    SubTaskInfeasible(String),
    #[error("motion planning failed: {0}")]
    MotionFailure(String),
    #[error("{0}")]
    TaskPlan(#[from] crate::taskplan::TaskPlanError),
}
