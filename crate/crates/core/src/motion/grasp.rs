use serde::{Deserialize, Serialize};

use super::ArmModel;
use crate::geom::{overlaps, OrientedBox, Point2, Pose2};

/// Gripper approach directions, in the order they are tried.
///
/// Top-down grasps close the fingers on a pair of opposite faces. Side grasps
/// come in tilted through one face: plane 0 goes through a long face, plane 1
/// through a short face, and the sign picks which of the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraspAngle {
    /// Fingers on the two long faces.
    TopDownLong,
    /// Fingers on the two short faces.
    TopDownShort,
    SidePlane0Pos,
    SidePlane0Neg,
    SidePlane1Pos,
    SidePlane1Neg,
}

impl GraspAngle {
    pub const TOP_DOWN: [GraspAngle; 2] = [GraspAngle::TopDownLong, GraspAngle::TopDownShort];
    pub const LADDER: [GraspAngle; 6] = [
        GraspAngle::TopDownLong,
        GraspAngle::TopDownShort,
        GraspAngle::SidePlane0Pos,
        GraspAngle::SidePlane0Neg,
        GraspAngle::SidePlane1Pos,
        GraspAngle::SidePlane1Neg,
    ];

    pub fn is_top_down(self) -> bool {
        matches!(self, GraspAngle::TopDownLong | GraspAngle::TopDownShort)
    }

    /// Approach tilt from vertical.
    pub fn tilt_degrees(self) -> f64 {
        if self.is_top_down() {
            0.0
        } else {
            45.0
        }
    }
}

/// Long and short local axes with their half-extents.
fn principal_axes(obj: &OrientedBox) -> ((Point2, f64), (Point2, f64)) {
    let [u, v] = obj.axes();
    if obj.half_width >= obj.half_height {
        ((u, obj.half_width), (v, obj.half_height))
    } else {
        ((v, obj.half_height), (u, obj.half_width))
    }
}

/// Rectangle flush against the face with outward `normal` at distance
/// `offset` from the center, extending `depth` outward and `width` along it.
fn face_patch(obj: &OrientedBox, normal: Point2, offset: f64, depth: f64, width: f64) -> OrientedBox {
    let c = obj.center.position() + normal * (offset + depth / 2.0);
    let theta = normal.y.atan2(normal.x);
    OrientedBox::new(Pose2::new(c.x, c.y, theta), depth / 2.0, width / 2.0)
}

/// Gripper volumes that must be free of other footprints for `angle`.
pub(crate) fn clearance_patches(obj: &OrientedBox, angle: GraspAngle, arm: &ArmModel) -> Vec<OrientedBox> {
    let ((long, h_long), (short, h_short)) = principal_axes(obj);
    let pads = |n: Point2, off: f64| {
        vec![
            face_patch(obj, n, off, arm.finger_depth, arm.finger_width),
            face_patch(obj, -n, off, arm.finger_depth, arm.finger_width),
        ]
    };
    let corridor =
        |n: Point2, off: f64| vec![face_patch(obj, n, off, 2.0 * arm.gripper_depth, arm.gripper_width)];
    match angle {
        GraspAngle::TopDownLong => pads(short, h_short),
        GraspAngle::TopDownShort => pads(long, h_long),
        GraspAngle::SidePlane0Pos => corridor(short, h_short),
        GraspAngle::SidePlane0Neg => corridor(-short, h_short),
        GraspAngle::SidePlane1Pos => corridor(long, h_long),
        GraspAngle::SidePlane1Neg => corridor(-long, h_long),
    }
}

/// Surrogate inverse-kinematics check: the object center is within reach and
/// the gripper volumes for `angle` touch none of `obstacles` (footprints of
/// every other object on the table).
pub fn grasp_feasible(
    obj: &OrientedBox,
    angle: GraspAngle,
    obstacles: &[OrientedBox],
    arm: &ArmModel,
) -> bool {
    if obj.center.position().dist(arm.base) > arm.reach {
        return false;
    }
    clearance_patches(obj, angle, arm)
        .iter()
        .all(|patch| obstacles.iter().all(|o| !overlaps(patch, o)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Workspace;

    fn arm() -> ArmModel {
        ArmModel::default_pair(&Workspace::default())[0]
    }

    fn rect(x: f64, y: f64) -> OrientedBox {
        // long axis along x
        OrientedBox::new(Pose2::new(x, y, 0.0), 0.05, 0.03)
    }

    #[test]
    fn isolated_object_accepts_every_angle() {
        let obj = rect(0.5, 0.3);
        for a in GraspAngle::LADDER {
            assert!(grasp_feasible(&obj, a, &[], &arm()), "{a:?}");
        }
    }

    #[test]
    fn flush_neighbour_on_long_face() {
        let obj = rect(0.5, 0.3);
        // shares the +y long face
        let neighbour = rect(0.5, 0.36);
        let obstacles = [neighbour];
        assert!(grasp_feasible(&obj, GraspAngle::TopDownShort, &obstacles, &arm()));
        assert!(!grasp_feasible(&obj, GraspAngle::SidePlane0Pos, &obstacles, &arm()));
        assert!(!grasp_feasible(&obj, GraspAngle::TopDownLong, &obstacles, &arm()));
        assert!(grasp_feasible(&obj, GraspAngle::SidePlane0Neg, &obstacles, &arm()));
        assert!(grasp_feasible(&obj, GraspAngle::SidePlane1Pos, &obstacles, &arm()));
    }

    #[test]
    fn out_of_reach_rejects_everything() {
        let mut short = arm();
        short.reach = 0.2;
        let obj = rect(0.8, 0.3);
        for a in GraspAngle::LADDER {
            assert!(!grasp_feasible(&obj, a, &[], &short));
        }
    }

    #[test]
    fn ladder_starts_with_top_down() {
        assert!(GraspAngle::LADDER[..2].iter().all(|a| a.is_top_down()));
        assert!(GraspAngle::LADDER[2..].iter().all(|a| a.tilt_degrees() == 45.0));
    }
}
