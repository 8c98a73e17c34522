//! Synchronous dual-arm tabletop rearrangement planning.
//!
//! The pipeline: [`depgraph`] captures which objects block which goals,
//! [`taskplan`] turns the graph into synchronized two-arm sub-tasks,
//! [`motion`] instantiates and times each sub-task, and [`sim`] executes a
//! whole session and audits the result.

pub mod depgraph;
pub mod geom;
pub mod instances;
pub mod baseline;
pub mod motion;
pub mod sim;
pub mod taskplan;
pub mod trace;

pub use depgraph::{
    build_dependency_graph, decompose, Arrangement, ArmId, DepGraph, DepGraphError, Decomposition,
    ObjectId, ObjectShape, Placement,
};
pub use geom::{overlaps, OrientedBox, Point2, Pose2, Workspace};
pub use instances::{Category, Instance, Label};
pub use motion::{ArmModel, MotionError, PlannerConfig, Rung};
pub use taskplan::{next_task_plan, PlannerSession, Stage, TaskPlan, TaskPlanError};
pub use sim::{execute, run_instance, verify_trace, Run, SimError};
pub use trace::{RunMetrics, Trace};
