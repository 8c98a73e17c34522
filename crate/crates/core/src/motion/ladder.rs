//! Motion fallback ladder: synchronous, then untangled, then sequential.

use serde::{Deserialize, Serialize};

use super::path::{certify_clearance, ArmPath, Conflict, SyncMotion};
use super::{ArmModel, InstantiatedSubTask, MotionError, Rung};
use crate::depgraph::ArmId;
use crate::geom::Point2;
use crate::taskplan::Stage;

/// End-effector endpoints for one stage. Inactive arms only park.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRequest {
    pub from: [Point2; 2],
    pub to: [Point2; 2],
    pub active: [bool; 2],
}

impl StageRequest {
    fn len(&self, arm: usize) -> f64 {
        self.from[arm].dist(self.to[arm])
    }
}

/// Active arms head for the pick (`ToStart`) or place (`ToGoal`) pose of
/// their object; idle arms retract.
pub fn stage_request(
    from: [Point2; 2],
    sub: &InstantiatedSubTask,
    stage: Stage,
    arms: &[ArmModel; 2],
) -> StageRequest {
    let mut to = [arms[0].retract, arms[1].retract];
    let mut active = [false; 2];
    for arm in ArmId::BOTH {
        if let Some(task) = sub.task(arm) {
            let pose = match stage {
                Stage::ToStart => task.pick,
                Stage::ToGoal => task.place,
            };
            to[arm.index()] = pose.position();
            active[arm.index()] = true;
        }
    }
    StageRequest { from, to, active }
}

fn target_times(req: &StageRequest, t: [f64; 2]) -> [Option<f64>; 2] {
    [
        req.active[0].then_some(t[0]),
        req.active[1].then_some(t[1]),
    ]
}

/// Both arms move in straight lines, starting and arriving together.
pub fn plan_sync(req: &StageRequest, arms: &[ArmModel; 2], dt: f64) -> Result<SyncMotion, Conflict> {
    let duration = req.len(0).max(req.len(1));
    let paths = [0, 1].map(|a| {
        let mut p = ArmPath::stationary(req.from[a]);
        p.move_to(req.to[a], duration);
        p
    });
    let motion = SyncMotion {
        paths,
        mode: Rung::Synchronous,
        duration,
        target_times: target_times(req, [duration; 2]),
    };
    certify_clearance(&motion, arms, dt)?;
    Ok(motion)
}

/// Untangling strategies, tried in order.
pub const UNTANGLE_VARIANTS: [&str; 4] = ["delay-25", "delay-50", "via-sync", "via-staggered"];

/// Every untangling variant conflicted, or none beat sequential execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UntangleFailure {
    /// Conflict (if any) per variant, in [`UNTANGLE_VARIANTS`] order.
    pub conflicts: Vec<Option<Conflict>>,
}

fn untangle_variant(req: &StageRequest, arms: &[ArmModel; 2], variant: usize) -> SyncMotion {
    // the arm with the shorter path yields; the right arm on ties
    let yielder = if req.len(0) < req.len(1) { 0 } else { 1 };
    let leader = 1 - yielder;
    let lead_len = req.len(leader);
    let mut lead = ArmPath::stationary(req.from[leader]);
    let mut yld = ArmPath::stationary(req.from[yielder]);
    lead.travel_to(req.to[leader]);
    match variant {
        0 | 1 => {
            let delay = if variant == 0 { 0.25 } else { 0.5 } * lead_len;
            yld.wait_until(delay);
            yld.travel_to(req.to[yielder]);
        }
        2 => {
            let via = arms[yielder].waypoint;
            let via_len = req.from[yielder].dist(via) + via.dist(req.to[yielder]);
            let duration = lead_len.max(via_len);
            if duration > 0.0 {
                let s = via_len / duration;
                lead = ArmPath::stationary(req.from[leader]);
                lead.move_to(req.to[leader], duration);
                let t_via = if s > 0.0 { req.from[yielder].dist(via) / s } else { 0.0 };
                yld.move_to(via, t_via);
                yld.move_to(req.to[yielder], duration);
            }
        }
        _ => {
            yld.travel_to(arms[yielder].waypoint);
            yld.wait_until(lead.end_time());
            yld.travel_to(req.to[yielder]);
        }
    }
    let mut paths = [lead.clone(), yld.clone()];
    if leader == 1 {
        paths.swap(0, 1);
    }
    let duration = paths[0].end_time().max(paths[1].end_time());
    let t = [paths[0].end_time(), paths[1].end_time()];
    SyncMotion {
        target_times: target_times(req, t),
        paths,
        mode: Rung::Untangled,
        duration,
    }
}

/// Tries each untangling variant in order; a variant is accepted only when
/// it certifies and is no slower than sequential execution.
pub fn untangle(req: &StageRequest, arms: &[ArmModel; 2], dt: f64) -> Result<SyncMotion, UntangleFailure> {
    let limit = sequential_fallback(req, arms, dt).map_or(f64::INFINITY, |m| m.duration);
    let mut conflicts = Vec::with_capacity(UNTANGLE_VARIANTS.len());
    for variant in 0..UNTANGLE_VARIANTS.len() {
        let motion = untangle_variant(req, arms, variant);
        match certify_clearance(&motion, arms, dt) {
            Ok(()) if motion.duration <= limit => return Ok(motion),
            Ok(()) => conflicts.push(None),
            Err(c) => conflicts.push(Some(c)),
        }
    }
    Err(UntangleFailure { conflicts })
}

/// Point on the arm segment `RETRACT_OFFSET` from the base.
fn retreat_point(arm: &ArmModel, ee: Point2) -> Point2 {
    let d = ee.dist(arm.base);
    let r = arm.base.dist(arm.retract);
    if d <= r {
        return ee;
    }
    arm.base.lerp(ee, r / d)
}

/// One arm at a time. `first_clears` sends the waiting arm to its retract
/// pose before the other moves; `then_clears` sends the finished arm back
/// to retract before the waiting arm moves.
fn sequential_motion(req: &StageRequest, arms: &[ArmModel; 2], first_clears: bool, then_clears: bool) -> SyncMotion {
    // the right arm moves first unless it has nothing to do
    let first = if req.active[1] || !req.active[0] { 1 } else { 0 };
    let second = 1 - first;
    let mut f = ArmPath::stationary(req.from[first]);
    let mut s = ArmPath::stationary(req.from[second]);

    if first_clears {
        s.travel_to(retreat_point(&arms[second], req.from[second]));
        s.travel_to(arms[second].retract);
    }
    f.wait_until(s.end_time());
    f.travel_to(req.to[first]);
    let t_first = f.end_time();
    if then_clears && req.active[first] {
        f.travel_to(retreat_point(&arms[first], req.to[first]));
        f.travel_to(arms[first].retract);
    }
    s.wait_until(f.end_time());
    s.travel_to(req.to[second]);
    let t_second = s.end_time();

    let mut paths = [f, s];
    let mut t = [t_first, t_second];
    if first == 1 {
        paths.swap(0, 1);
        t.swap(0, 1);
    }
    let duration = paths[0].end_time().max(paths[1].end_time());
    SyncMotion {
        target_times: target_times(req, t),
        paths,
        mode: Rung::Sequential,
        duration,
    }
}

/// One arm at a time: the shortest certified ordering among moving in
/// place, clearing the waiting arm first, clearing the finished arm
/// afterwards, or both.
pub fn sequential_fallback(req: &StageRequest, arms: &[ArmModel; 2], dt: f64) -> Result<SyncMotion, Conflict> {
    let mut best: Option<SyncMotion> = None;
    let mut last_conflict = None;
    for (a, b) in [(false, false), (true, false), (false, true), (true, true)] {
        let m = sequential_motion(req, arms, a, b);
        if best.as_ref().is_some_and(|x| x.duration <= m.duration) {
            continue;
        }
        match certify_clearance(&m, arms, dt) {
            Ok(()) => best = Some(m),
            Err(c) => last_conflict = Some(c),
        }
    }
    best.ok_or_else(|| last_conflict.expect("some ordering was tried"))
}

/// Lowest rung of the ladder that yields a certified motion.
pub fn plan_stage(req: &StageRequest, arms: &[ArmModel; 2], dt: f64) -> Result<SyncMotion, MotionError> {
    if let Ok(m) = plan_sync(req, arms, dt) {
        return Ok(m);
    }
    if let Ok(m) = untangle(req, arms, dt) {
        return Ok(m);
    }
    sequential_fallback(req, arms, dt).map_err(|c| {
        MotionError::SubTaskInfeasible(format!(
            "sequential motion violates clearance at t={:.4} (distance {:.4})",
            c.time, c.distance
        ))
    })
}

/// Duration achieved by each rung on its own, `None` where it fails.
pub fn rung_durations(req: &StageRequest, arms: &[ArmModel; 2], dt: f64) -> [Option<f64>; 3] {
    [
        plan_sync(req, arms, dt).ok().map(|m| m.duration),
        untangle(req, arms, dt).ok().map(|m| m.duration),
        sequential_fallback(req, arms, dt).ok().map(|m| m.duration),
    ]
}
