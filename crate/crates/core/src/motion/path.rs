use serde::{Deserialize, Serialize};

use super::{ArmModel, Rung};
use crate::geom::{segment_clearance, Point2};

/// Interval lower bounds may undershoot the clearance by this much.
const CERTIFY_SLACK: f64 = 1e-7;
/// Cap on clearance evaluations spent refining one motion.
const CERTIFY_BUDGET: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knot {
    pub t: f64,
    pub p: Point2,
}

/// Piecewise-linear timed end-effector path. Knot times are non-decreasing;
/// the arm holds its last position after the final knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmPath {
    pub knots: Vec<Knot>,
}

impl ArmPath {
    pub fn stationary(p: Point2) -> Self {
        Self {
            knots: vec![Knot { t: 0.0, p }],
        }
    }

    pub fn start(&self) -> Point2 {
        self.knots[0].p
    }

    pub fn end(&self) -> Point2 {
        self.knots.last().expect("paths have at least one knot").p
    }

    pub fn end_time(&self) -> f64 {
        self.knots.last().expect("paths have at least one knot").t
    }

    /// Holds position until `t`.
    pub fn wait_until(&mut self, t: f64) {
        let end = self.end();
        if t > self.end_time() {
            self.knots.push(Knot { t, p: end });
        }
    }

    /// Moves in a straight line to `p`, arriving at time `t`.
    pub fn move_to(&mut self, p: Point2, t: f64) {
        debug_assert!(t >= self.end_time());
        if p == self.end() && t == self.end_time() {
            return;
        }
        self.knots.push(Knot { t, p });
    }

    /// Moves to `p` at unit speed.
    pub fn travel_to(&mut self, p: Point2) {
        let t = self.end_time() + self.end().dist(p);
        self.move_to(p, t);
    }

    pub fn length(&self) -> f64 {
        self.knots.windows(2).map(|w| w[0].p.dist(w[1].p)).sum()
    }

    pub fn at(&self, t: f64) -> Point2 {
        let first = self.knots[0];
        if t <= first.t {
            return first.p;
        }
        for w in self.knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            if t <= b.t {
                let span = b.t - a.t;
                if span <= 0.0 {
                    return b.p;
                }
                return a.p.lerp(b.p, (t - a.t) / span);
            }
        }
        self.end()
    }
}

/// A synchronized pair of arm paths over `[0, duration]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncMotion {
    pub paths: [ArmPath; 2],
    pub mode: Rung,
    pub duration: f64,
    /// When each arm sits at its target (gripper event time); `None` when
    /// the arm only parks.
    pub target_times: [Option<f64>; 2],
}

impl SyncMotion {
    pub fn positions_at(&self, t: f64) -> [Point2; 2] {
        [self.paths[0].at(t), self.paths[1].at(t)]
    }

    pub fn final_positions(&self) -> [Point2; 2] {
        [self.paths[0].end(), self.paths[1].end()]
    }

    /// Uniform sample times `k * dt * duration` for `k = 0..=round(1/dt)`.
    pub fn sample_times(&self, dt: f64) -> Vec<f64> {
        let n = (1.0 / dt).round() as usize;
        (0..=n).map(|k| self.duration * k as f64 / n as f64).collect()
    }

    fn breakpoints(&self, dt: f64) -> Vec<f64> {
        let mut ts = self.sample_times(dt);
        ts.extend(self.paths.iter().flat_map(|p| p.knots.iter().map(|k| k.t)));
        ts.retain(|t| *t <= self.duration);
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        ts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        ts
    }
}

/// First detected clearance violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub time: f64,
    /// Index of the nearest uniform sample.
    pub sample: usize,
    pub distance: f64,
}

pub(crate) fn arm_distance(arms: &[ArmModel; 2], ee: [Point2; 2]) -> f64 {
    segment_clearance(arms[0].base, ee[0], arms[1].base, ee[1])
}

/// Checks that the two arm segments keep `clearance` apart over the whole
/// motion, not only at the uniform `dt` samples.
///
/// Each arm segment moves by at most its end-effector displacement, so the
/// clearance between two samples is bounded below by
/// `(d0 + d1 - displacement) / 2`; intervals whose bound falls short are
/// bisected until certified or a violation is found.
pub fn certify_clearance(motion: &SyncMotion, arms: &[ArmModel; 2], dt: f64) -> Result<(), Conflict> {
    let clearance = arms[0].clearance.max(arms[1].clearance);
    let n = (1.0 / dt).round() as usize;
    let nearest = |t: f64| {
        if motion.duration <= 0.0 {
            0
        } else {
            ((t / motion.duration) * n as f64).round() as usize
        }
    };
    let conflict = |t: f64, d: f64| Conflict {
        time: t,
        sample: nearest(t),
        distance: d,
    };
    let dist = |t: f64| arm_distance(arms, motion.positions_at(t));

    let ts = motion.breakpoints(dt);
    let ds: Vec<f64> = ts.iter().map(|&t| dist(t)).collect();
    for (&t, &d) in ts.iter().zip(&ds) {
        if d < clearance {
            return Err(conflict(t, d));
        }
    }

    let mut budget = CERTIFY_BUDGET;
    for k in 0..ts.len().saturating_sub(1) {
        let mut stack = vec![(ts[k], ts[k + 1], ds[k], ds[k + 1])];
        while let Some((t0, t1, d0, d1)) = stack.pop() {
            let [a0, b0] = motion.positions_at(t0);
            let [a1, b1] = motion.positions_at(t1);
            let sweep = a0.dist(a1) + b0.dist(b1);
            if (d0 + d1 - sweep) / 2.0 >= clearance - CERTIFY_SLACK {
                continue;
            }
            if budget == 0 {
                return Err(conflict(t0, d0.min(d1)));
            }
            budget -= 1;
            let tm = 0.5 * (t0 + t1);
            let dm = dist(tm);
            if dm < clearance {
                return Err(conflict(tm, dm));
            }
            stack.push((tm, t1, dm, d1));
            stack.push((t0, tm, d0, dm));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_interpolation() {
        let mut p = ArmPath::stationary(Point2::new(0.0, 0.0));
        p.travel_to(Point2::new(1.0, 0.0));
        p.wait_until(2.0);
        p.move_to(Point2::new(1.0, 1.0), 3.0);
        assert_eq!(p.at(0.5), Point2::new(0.5, 0.0));
        assert_eq!(p.at(1.5), Point2::new(1.0, 0.0));
        assert_eq!(p.at(2.5), Point2::new(1.0, 0.5));
        assert_eq!(p.at(10.0), Point2::new(1.0, 1.0));
        assert!((p.length() - 2.0).abs() < 1e-12);
    }
}
