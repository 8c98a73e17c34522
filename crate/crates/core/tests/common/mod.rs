#![allow(dead_code)]

use std::path::PathBuf;

use sdar_core::geom::{OrientedBox, Point2};
use sdar_core::instances::load;
use sdar_core::{DepGraph, Instance};

pub fn fixture(name: &str) -> Instance {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Strict proper-crossing test for two segments.
fn segments_cross(p: Point2, q: Point2, r: Point2, s: Point2) -> bool {
    let d1 = cross(r, s, p);
    let d2 = cross(r, s, q);
    let d3 = cross(p, q, r);
    let d4 = cross(p, q, s);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Point in convex counter-clockwise polygon (closed).
fn in_polygon(poly: &[Point2; 4], p: Point2) -> bool {
    (0..4).all(|i| cross(poly[i], poly[(i + 1) % 4], p) >= 0.0)
}

/// Polygon-level overlap: a corner of one box lies in the other, or two
/// edges cross. Independent of the separating-axis implementation.
pub fn polygon_overlap(a: &OrientedBox, b: &OrientedBox) -> bool {
    let (pa, pb) = (a.corners(), b.corners());
    if pa.iter().any(|&p| in_polygon(&pb, p)) || pb.iter().any(|&p| in_polygon(&pa, p)) {
        return true;
    }
    (0..4).any(|i| (0..4).any(|j| segments_cross(pa[i], pa[(i + 1) % 4], pb[j], pb[(j + 1) % 4])))
}

/// `Some(answer)` when the oracle is stable under a small inflation and
/// deflation of both boxes, `None` for near-touching pairs.
pub fn robust_overlap(a: &OrientedBox, b: &OrientedBox) -> Option<bool> {
    let m = 1e-6;
    let grown = polygon_overlap(&a.inflated(m), &b.inflated(m));
    let shrunk = polygon_overlap(&a.inflated(-m), &b.inflated(-m));
    (grown == shrunk).then_some(grown)
}

/// Dependency graph by direct all-pairs comparison of goal and start
/// footprints.
pub fn brute_force_graph(inst: &Instance) -> DepGraph {
    let n = inst.len();
    let mut edges = Vec::new();
    for i in 0..n {
        let gi = inst.shapes[i].at(inst.goal.pose(i).unwrap());
        for j in 0..n {
            if i != j && polygon_overlap(&gi, &inst.shapes[j].at(inst.start.pose(j).unwrap())) {
                edges.push((i, j));
            }
        }
    }
    DepGraph::from_edges(n, edges)
}

/// Minimum feedback vertex set by trying every vertex subset and checking
/// acyclicity of the rest with Kahn's algorithm.
pub fn fvs_by_enumeration(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut best = n;
    for mask in 0u32..(1 << n) {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let alive = |v: usize| mask & (1 << v) == 0;
        let mut indeg = vec![0; n];
        for &(a, b) in edges {
            if a != b && alive(a) && alive(b) {
                indeg[b] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| alive(v) && indeg[v] == 0).collect();
        let mut removed = 0;
        while let Some(v) = stack.pop() {
            removed += 1;
            for &(a, b) in edges {
                if a == v && a != b && alive(b) {
                    indeg[b] -= 1;
                    if indeg[b] == 0 {
                        stack.push(b);
                    }
                }
            }
        }
        if removed == n - k {
            best = k;
        }
    }
    best
}
