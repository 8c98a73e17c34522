//! Seeded generators for the four instance categories.
//!
//! Structured categories are built from rings: starts on a circle (or, when
//! a circle would not fit, an ellipse with equal arc spacing) and each goal
//! sitting just outside the next object's start, so the goal of object `i`
//! overlaps only the start of object `i + 1`. Every generated instance is
//! audited against its intended dependency structure and regenerated on
//! mismatch.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Category, GenerationError, Instance, Label};
use crate::depgraph::{decompose, Arrangement, ObjectShape};
use crate::geom::{inside, overlaps, OrientedBox, Point2, Pose2, Workspace};

const MAX_ATTEMPTS: usize = 10_000;
/// Minimum free gap between footprints of one randomly sampled arrangement.
const RANDOM_GAP: f64 = 0.02;
const RANDOM_HALF_EXTENT: (f64, f64) = (0.03, 0.06);
const RING_HALF_EXTENT: (f64, f64) = (0.03, 0.045);
const RING_SPACING: (f64, f64) = (0.145, 0.16);
const RING_OFFSET: (f64, f64) = (0.015, 0.03);
/// Clearance kept between a ring's point set and its region boundary.
const RING_MARGIN: f64 = RING_OFFSET.1 + 0.045 * std::f64::consts::SQRT_2 + 0.01;

fn rng_for(category: Category, n: usize, seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((category.letter() as u64) << 32) | n as u64);
    rng
}

fn exhausted(what: impl Into<String>) -> GenerationError {
    GenerationError::GenerationExhausted {
        what: what.into(),
        attempts: MAX_ATTEMPTS,
    }
}

fn random_angle<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(-PI..PI)
}

fn random_shape<R: Rng>(rng: &mut R, range: (f64, f64)) -> ObjectShape {
    ObjectShape::new(rng.gen_range(range.0..=range.1), rng.gen_range(range.0..=range.1))
}

/// Rejection-samples a gapped arrangement; `budget` counts pose draws.
fn sample_arrangement<R: Rng>(
    ws: &Workspace,
    shapes: &[ObjectShape],
    rng: &mut R,
    budget: &mut usize,
) -> Option<Vec<Pose2>> {
    let mut poses = Vec::with_capacity(shapes.len());
    let mut boxes: Vec<OrientedBox> = Vec::with_capacity(shapes.len());
    for shape in shapes {
        loop {
            if *budget == 0 {
                return None;
            }
            *budget -= 1;
            let p = Pose2::new(
                rng.gen_range(0.0..ws.width),
                rng.gen_range(0.0..ws.height),
                random_angle(rng),
            );
            let b = shape.at(p);
            if inside(ws, &b) && boxes.iter().all(|o| !overlaps(&o.inflated(RANDOM_GAP), &b)) {
                poses.push(p);
                boxes.push(b);
                break;
            }
        }
    }
    Some(poses)
}

/// `n` random rectangles with independently sampled start and goal
/// arrangements.
pub fn gen_random(n: usize, seed: u64) -> Result<Instance, GenerationError> {
    if n == 0 {
        return Err(GenerationError::InvalidArgument("R needs n >= 1".into()));
    }
    let ws = Workspace::default();
    let mut rng = rng_for(Category::R, n, seed);
    let shapes: Vec<ObjectShape> = (0..n).map(|_| random_shape(&mut rng, RANDOM_HALF_EXTENT)).collect();
    let mut budget = MAX_ATTEMPTS;
    let start = sample_arrangement(&ws, &shapes, &mut rng, &mut budget)
        .ok_or_else(|| exhausted(format!("R{n} start")))?;
    let mut budget = MAX_ATTEMPTS;
    let goal = sample_arrangement(&ws, &shapes, &mut rng, &mut budget)
        .ok_or_else(|| exhausted(format!("R{n} goal")))?;
    Ok(Instance {
        label: Label::new(Category::R, n),
        seed,
        workspace: ws,
        shapes,
        start: Arrangement::on_table(start),
        goal: Arrangement::on_table(goal),
    })
}

/// Ramanujan's approximation of an ellipse perimeter.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt())
}

/// `k` ring points (with outward unit normals) spaced `s` apart along the
/// curve, centered at `c` and fitting in a box of half-size `lim`.
fn ring_points(c: Point2, k: usize, s: f64, lim: (f64, f64), phase: f64) -> Option<Vec<(Point2, Point2)>> {
    if k == 2 {
        let d = Point2::new(phase.cos(), phase.sin());
        if (s / 2.0) * d.x.abs() > lim.0 || (s / 2.0) * d.y.abs() > lim.1 {
            return None;
        }
        return Some(vec![(c - d * (s / 2.0), -d), (c + d * (s / 2.0), d)]);
    }
    let r = s / (2.0 * (PI / k as f64).sin());
    if r <= lim.0.min(lim.1) {
        return Some(
            (0..k)
                .map(|i| {
                    let t = phase + TAU * i as f64 / k as f64;
                    let n = Point2::new(t.cos(), t.sin());
                    (c + n * r, n)
                })
                .collect(),
        );
    }
    // ellipse: the short semi-axis takes its limit, the long one grows
    // until the perimeter holds k arcs of length s
    let need = k as f64 * s;
    let (short, long_lim) = (lim.0.min(lim.1), lim.0.max(lim.1));
    if ellipse_perimeter(long_lim, short) < need {
        return None;
    }
    let (mut lo, mut hi) = (short, long_lim);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ellipse_perimeter(mid, short) < need {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = if lim.0 >= lim.1 { (hi, short) } else { (short, hi) };
    const STEPS: usize = 4096;
    let at = |t: f64| Point2::new(a * t.cos(), b * t.sin());
    let mut cum = Vec::with_capacity(STEPS + 1);
    cum.push(0.0);
    for j in 1..=STEPS {
        let t0 = TAU * (j - 1) as f64 / STEPS as f64;
        let t1 = TAU * j as f64 / STEPS as f64;
        cum.push(cum[j - 1] + at(t0).dist(at(t1)));
    }
    let total = cum[STEPS];
    let offset = phase.rem_euclid(TAU) / TAU * total;
    let pts = (0..k)
        .map(|i| {
            let target = (offset + total * i as f64 / k as f64) % total;
            let j = cum.partition_point(|&x| x < target).clamp(1, STEPS);
            let frac = (target - cum[j - 1]) / (cum[j] - cum[j - 1]).max(f64::MIN_POSITIVE);
            let t = TAU * ((j - 1) as f64 + frac) / STEPS as f64;
            let n = Point2::new(t.cos() / a, t.sin() / b);
            (c + at(t), n * (1.0 / n.norm()))
        })
        .collect();
    Some(pts)
}

/// Objects being assembled for one instance.
#[derive(Default)]
struct Builder {
    shapes: Vec<ObjectShape>,
    start: Vec<Pose2>,
    goal: Vec<Pose2>,
}

impl Builder {
    fn push(&mut self, shape: ObjectShape, start: Point2, goal: Point2, rng: &mut ChaCha8Rng) {
        self.shapes.push(shape);
        self.start.push(Pose2::new(start.x, start.y, random_angle(rng)));
        self.goal.push(Pose2::new(goal.x, goal.y, random_angle(rng)));
    }

    /// Ring of `k` objects whose goals each overlap the next start.
    fn ring(&mut self, c: Point2, k: usize, lim: (f64, f64), rng: &mut ChaCha8Rng) -> bool {
        let s = rng.gen_range(RING_SPACING.0..=RING_SPACING.1);
        let phase = rng.gen_range(0.0..TAU);
        let Some(pts) = ring_points(c, k, s, lim, phase) else {
            return false;
        };
        for i in 0..k {
            let (next, normal) = pts[(i + 1) % k];
            let off = rng.gen_range(RING_OFFSET.0..=RING_OFFSET.1);
            let shape = random_shape(rng, RING_HALF_EXTENT);
            self.push(shape, pts[i].0, next + normal * off, rng);
        }
        true
    }

    fn build(self, label: Label, seed: u64, ws: Workspace) -> Instance {
        Instance {
            label,
            seed,
            workspace: ws,
            shapes: self.shapes,
            start: Arrangement::on_table(self.start),
            goal: Arrangement::on_table(self.goal),
        }
    }
}

/// Expected decomposition of a structured instance.
struct Structure {
    cycles: Vec<usize>,
    chains: Vec<usize>,
    isolated: usize,
}

fn audit(inst: &Instance, want: &Structure) -> bool {
    if inst.validate().is_err() {
        return false;
    }
    let Ok(g) = inst.dependency_graph() else {
        return false;
    };
    let d = decompose(&g);
    let mut cycles: Vec<usize> = d.cycles.iter().map(Vec::len).collect();
    cycles.sort_unstable();
    let mut want_cycles = want.cycles.clone();
    want_cycles.sort_unstable();
    let mut chains: Vec<usize> = d.chains.iter().map(Vec::len).collect();
    chains.sort_unstable();
    let mut want_chains = want.chains.clone();
    want_chains.sort_unstable();
    cycles == want_cycles
        && chains == want_chains
        && d.isolated.len() == want.isolated
        && d.complex_sccs.is_empty()
        && d.other.is_empty()
}

fn generate_audited(
    label: Label,
    seed: u64,
    n: usize,
    want: &Structure,
    mut attempt: impl FnMut(&mut ChaCha8Rng, &Workspace) -> Option<Builder>,
) -> Result<Instance, GenerationError> {
    let ws = Workspace::default();
    let mut rng = rng_for(label.category, n, seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(b) = attempt(&mut rng, &ws) {
            let inst = b.build(label, seed, ws);
            if audit(&inst, want) {
                return Ok(inst);
            }
        }
    }
    Err(exhausted(label.to_string()))
}

/// One dependency cycle through all `n` objects.
pub fn gen_single_cycle(n: usize, seed: u64) -> Result<Instance, GenerationError> {
    if n < 2 {
        return Err(GenerationError::InvalidArgument("S needs n >= 2".into()));
    }
    let want = Structure {
        cycles: vec![n],
        chains: vec![],
        isolated: 0,
    };
    generate_audited(Label::new(Category::S, n), seed, n, &want, |rng, ws| {
        let lim = (ws.width / 2.0 - RING_MARGIN, ws.height / 2.0 - RING_MARGIN);
        let mut b = Builder::default();
        b.ring(ws.center(), n, lim, rng).then_some(b)
    })
}

/// Two vertex-disjoint cycles of `ceil(n/2)` and `floor(n/2)` objects, one in
/// each half of the table.
pub fn gen_double_cycle(n: usize, seed: u64) -> Result<Instance, GenerationError> {
    if n < 4 {
        return Err(GenerationError::InvalidArgument("D needs n >= 4".into()));
    }
    let (k1, k2) = (n.div_ceil(2), n / 2);
    let want = Structure {
        cycles: vec![k1, k2],
        chains: vec![],
        isolated: 0,
    };
    generate_audited(Label::new(Category::D, n), seed, n, &want, |rng, ws| {
        let lim = (ws.width / 4.0 - RING_MARGIN, ws.height / 2.0 - RING_MARGIN);
        let y = ws.height / 2.0;
        let mut b = Builder::default();
        let ok = b.ring(Point2::new(ws.width / 4.0, y), k1, lim, rng)
            && b.ring(Point2::new(3.0 * ws.width / 4.0, y), k2, lim, rng);
        ok.then_some(b)
    })
}

/// Twelve objects: a 2-cycle, a 3-cycle, a 4-chain and 3 isolated objects.
/// `index` only names the instance.
pub fn gen_mixed(index: usize, seed: u64) -> Result<Instance, GenerationError> {
    let want = Structure {
        cycles: vec![2, 3],
        chains: vec![4],
        isolated: 3,
    };
    generate_audited(Label::new(Category::M, index), seed, 12, &want, |rng, _ws| {
        let mut jitter = |p: (f64, f64)| Point2::new(p.0 + rng.gen_range(-0.01..=0.01), p.1 + rng.gen_range(-0.01..=0.01));
        let (c2, c3) = (jitter((0.2, 0.4)), jitter((0.56, 0.4)));
        let chain0 = jitter((0.1, 0.08));
        let iso = [jitter((0.88, 0.12)), jitter((0.88, 0.3)), jitter((0.88, 0.48))];

        let mut b = Builder::default();
        if !b.ring(c2, 2, (0.12, 0.1), rng) || !b.ring(c3, 3, (0.12, 0.12), rng) {
            return None;
        }
        // chain: goal j sits just above start j + 1; the last goal is free
        let s = rng.gen_range(RING_SPACING.0..=RING_SPACING.1);
        for j in 0..4 {
            let start = chain0 + Point2::new(s * j as f64, 0.0);
            let next = chain0 + Point2::new(s * (j + 1) as f64, 0.0);
            let off = rng.gen_range(RING_OFFSET.0..=RING_OFFSET.1);
            let shape = random_shape(rng, RING_HALF_EXTENT);
            b.push(shape, start, next + Point2::new(0.0, off), rng);
        }
        for p in iso {
            let d = Point2::new(rng.gen_range(-0.02..=0.02), rng.gen_range(-0.02..=0.02));
            let shape = random_shape(rng, RING_HALF_EXTENT);
            b.push(shape, p, p + d, rng);
        }
        Some(b)
    })
}

/// One instance to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub category: Category,
    /// Object count, or the ordinal for mixed instances.
    pub index: usize,
    pub seed: u64,
}

impl SuiteEntry {
    pub fn generate(&self) -> Result<Instance, GenerationError> {
        match self.category {
            Category::R => gen_random(self.index, self.seed),
            Category::S => gen_single_cycle(self.index, self.seed),
            Category::D => gen_double_cycle(self.index, self.seed),
            Category::M => gen_mixed(self.index, self.seed),
        }
    }
}

/// The 200-instance benchmark suite: R4..R12 x 10, S2..S10 x 5,
/// D4..D12 x 5 and M1..M20.
pub fn default_suite(seed: u64) -> Vec<SuiteEntry> {
    let mut out = Vec::new();
    let mut add = |category, indices: std::ops::RangeInclusive<usize>, reps: u64| {
        for index in indices {
            for r in 0..reps {
                out.push(SuiteEntry {
                    category,
                    index,
                    seed: seed + r,
                });
            }
        }
    };
    add(Category::R, 4..=12, 10);
    add(Category::S, 2..=10, 5);
    add(Category::D, 4..=12, 5);
    for m in 1..=20 {
        out.push(SuiteEntry {
            category: Category::M,
            index: m,
            seed: seed + m as u64 - 1,
        });
    }
    out
}
