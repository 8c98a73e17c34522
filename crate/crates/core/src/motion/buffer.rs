use std::f64::consts::PI;

use rand::Rng;

use super::MotionError;
use crate::depgraph::ObjectShape;
use crate::geom::{inside, overlaps, OrientedBox, Pose2, Workspace};

/// Rejection-samples up to `k` buffer poses for an object of `shape`.
///
/// Each returned footprint lies inside `ws` and overlaps none of `occupied`
/// (current on-table footprints), `pending_goals`, or previously returned
/// buffers. At most `100 * k` draws are made.
pub fn sample_buffers<R: Rng + ?Sized>(
    ws: &Workspace,
    shape: &ObjectShape,
    occupied: &[OrientedBox],
    pending_goals: &[OrientedBox],
    k: usize,
    rng: &mut R,
) -> Result<Vec<Pose2>, MotionError> {
    assert!(k >= 1, "at least one buffer must be requested");
    let draws = 100 * k;
    let mut found: Vec<Pose2> = Vec::with_capacity(k);
    let mut taken: Vec<OrientedBox> = Vec::with_capacity(k);
    for _ in 0..draws {
        if found.len() == k {
            break;
        }
        let pose = Pose2::new(
            rng.gen_range(0.0..ws.width),
            rng.gen_range(0.0..ws.height),
            rng.gen_range(-PI..PI),
        );
        let b = shape.at(pose);
        if !inside(ws, &b) {
            continue;
        }
        let clash = occupied
            .iter()
            .chain(pending_goals)
            .chain(&taken)
            .any(|o| overlaps(o, &b));
        if !clash {
            found.push(pose);
            taken.push(b);
        }
    }
    if found.is_empty() {
        Err(MotionError::BufferSamplingExhausted { draws })
    } else {
        Ok(found)
    }
}
