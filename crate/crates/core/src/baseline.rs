//! Comparison oracles: exact minimum feedback vertex sets, the optimal
//! single-arm action count they imply, and sequential-execution makespans.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{decompose, DepGraph, DepGraphError, ObjectId};
use crate::geom::EPS;
use crate::instances::Instance;
use crate::motion::{sequential_fallback, stage_request, PlannerConfig};
use crate::sim::{run_instance, Run, SimError};
use crate::taskplan::Stage;

/// Largest vertex count the exhaustive searches accept.
pub const MAX_ORACLE_VERTICES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("exhaustive search budget exceeded: {n} vertices (limit {MAX_ORACLE_VERTICES})")]
    BudgetExceeded { n: usize },
    #[error(transparent)]
    Graph(#[from] DepGraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("run failed: {0}")]
    RunFailed(String),
}

fn is_acyclic_without(g: &DepGraph, verts: &[ObjectId], removed: u32) -> bool {
    let keep = |k: usize| removed & (1 << k) == 0;
    let index: HashMap<ObjectId, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let mut indeg = vec![0usize; verts.len()];
    for (k, &v) in verts.iter().enumerate() {
        if !keep(k) {
            continue;
        }
        for w in g.successors(v) {
            if let Some(&j) = index.get(w) {
                if keep(j) {
                    indeg[j] += 1;
                }
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..verts.len()).filter(|&k| keep(k) && indeg[k] == 0).collect();
    let mut seen = 0;
    while let Some(k) = queue.pop_front() {
        seen += 1;
        for w in g.successors(verts[k]) {
            if let Some(&j) = index.get(w) {
                if keep(j) {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    seen == (0..verts.len()).filter(|&k| keep(k)).count()
}

/// Exact minimum feedback vertex set size.
///
/// Only vertices on some cycle (members of a non-trivial strongly connected
/// component) can matter, so subsets of those are enumerated in increasing
/// cardinality until one leaves the graph acyclic.
pub fn min_fvs(g: &DepGraph) -> Result<usize, BaselineError> {
    let n = g.vertices().count();
    if n > MAX_ORACLE_VERTICES {
        return Err(BaselineError::BudgetExceeded { n });
    }
    let verts: Vec<ObjectId> = g
        .strongly_connected_components()
        .into_iter()
        .filter(|c| c.len() > 1)
        .flatten()
        .collect();
    let m = verts.len();
    if m == 0 {
        return Ok(0);
    }
    for k in 1..=m {
        // Gosper's hack over k-subsets of m bits
        let mut s: u32 = (1 << k) - 1;
        while s < (1u32 << m) {
            if is_acyclic_without(g, &verts, s) {
                return Ok(k);
            }
            let c = s & s.wrapping_neg();
            let r = s + c;
            s = (((r ^ s) >> 2) / c) | r;
        }
    }
    unreachable!("removing every cycle vertex leaves an acyclic graph")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub min_fvs: usize,
    /// Displaced objects plus `min_fvs`; exact when `assumption_holds`,
    /// otherwise a lower bound.
    pub single_arm_optimal_actions: usize,
    /// Every non-trivial strongly connected component is a simple cycle.
    pub assumption_holds: bool,
}

/// Objects whose start pose differs from their goal.
pub fn displaced_objects(instance: &Instance) -> BTreeSet<ObjectId> {
    (0..instance.len())
        .filter(|&i| {
            let s = instance.start.pose(i).expect("start on table");
            let g = instance.goal.pose(i).expect("goal on table");
            !s.approx_eq(&g, EPS)
        })
        .collect()
}

/// Optimal single-arm action count: every displaced object moves once, and
/// each object of a minimum feedback vertex set moves once more.
pub fn single_arm_optimal_actions(instance: &Instance) -> Result<OracleResult, BaselineError> {
    let displaced = displaced_objects(instance);
    let g = instance.dependency_graph()?.restricted_to(&displaced);
    let fvs = min_fvs(&g)?;
    Ok(OracleResult {
        min_fvs: fvs,
        single_arm_optimal_actions: displaced.len() + fvs,
        assumption_holds: decompose(&g).complex_sccs.is_empty(),
    })
}

/// Fewest single-arm actions on the abstract dependency graph, by
/// breadth-first search over (solved, buffered) sets.
///
/// An object may go to its goal once none of its successors still sits at
/// its start; any object still at its start may go to a buffer. Buffer
/// space is assumed unlimited.
pub fn exhaustive_single_arm_actions(g: &DepGraph) -> Result<usize, BaselineError> {
    let verts: Vec<ObjectId> = g.vertices().collect();
    let n = verts.len();
    if n > MAX_ORACLE_VERTICES {
        return Err(BaselineError::BudgetExceeded { n });
    }
    let index: HashMap<ObjectId, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let succ: Vec<u32> = verts
        .iter()
        .map(|&v| g.successors(v).iter().map(|w| 1u32 << index[w]).fold(0, |a, b| a | b))
        .collect();
    let all: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let mut dist: HashMap<(u32, u32), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert((0, 0), 0);
    queue.push_back((0u32, 0u32));
    while let Some((solved, buffered)) = queue.pop_front() {
        let d = dist[&(solved, buffered)];
        if solved == all {
            return Ok(d);
        }
        let at_start = all & !solved & !buffered;
        for (k, &deps) in succ.iter().enumerate() {
            let bit = 1 << k;
            if solved & bit != 0 {
                continue;
            }
            let mut next = Vec::with_capacity(2);
            if deps & at_start & !bit == 0 {
                next.push((solved | bit, buffered & !bit));
            }
            if at_start & bit != 0 {
                next.push((solved, buffered | bit));
            }
            for s in next {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(s) {
                    e.insert(d + 1);
                    queue.push_back(s);
                }
            }
        }
    }
    unreachable!("buffering everything always leads to a solution")
}

/// Makespan of the sub-tasks of `run` when every stage is forced onto the
/// sequential rung.
pub fn sequential_makespan_of(run: &Run, config: &PlannerConfig) -> Result<f64, BaselineError> {
    let arms = &config.arms;
    let mut ee = [arms[0].retract, arms[1].retract];
    let mut total = 0.0;
    for (round, sub) in run.subtasks.iter().enumerate() {
        for stage in [Stage::ToStart, Stage::ToGoal] {
            let req = stage_request(ee, sub, stage, arms);
            let m = sequential_fallback(&req, arms, config.dt).map_err(|c| {
                BaselineError::RunFailed(format!(
                    "round {round}: sequential motion conflicts at t={:.4}",
                    c.time
                ))
            })?;
            ee = m.final_positions();
            total += m.duration;
        }
    }
    Ok(total)
}

/// Plans `instance` and returns its makespan under sequential execution of
/// the same sub-task sequence.
pub fn sequential_makespan(instance: &Instance, config: &PlannerConfig, seed: u64) -> Result<f64, BaselineError> {
    let run = run_instance(instance, *config, seed)?;
    if !run.metrics.success {
        return Err(BaselineError::RunFailed(run.metrics.failure.unwrap_or_default()));
    }
    sequential_makespan_of(&run, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(k: usize) -> DepGraph {
        DepGraph::from_edges(k, (0..k).map(|i| (i, (i + 1) % k)))
    }

    #[test]
    fn acyclic_graph_needs_nothing() {
        let g = DepGraph::from_edges(4, [(0, 1), (1, 2), (0, 3)]);
        assert_eq!(min_fvs(&g), Ok(0));
    }

    #[test]
    fn single_cycles_need_one() {
        for k in 2..8 {
            assert_eq!(min_fvs(&cycle(k)), Ok(1), "k={k}");
        }
    }

    #[test]
    fn two_triangles_sharing_a_vertex_need_one() {
        let g = DepGraph::from_edges(5, [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]);
        assert_eq!(min_fvs(&g), Ok(1));
    }

    #[test]
    fn complete_digraph_needs_all_but_one() {
        let n = 5;
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
        assert_eq!(min_fvs(&DepGraph::from_edges(n, edges)), Ok(n - 1));
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(min_fvs(&cycle(21)), Err(BaselineError::BudgetExceeded { n: 21 }));
    }

    #[test]
    fn exhaustive_search_matches_cycle_counts() {
        // 5-cycle: 5 moves plus one buffer
        assert_eq!(exhaustive_single_arm_actions(&cycle(5)), Ok(6));
        // two disjoint 4-cycles: 8 moves plus two buffers
        let mut edges: Vec<(usize, usize)> = (0..4).map(|i| (i, (i + 1) % 4)).collect();
        edges.extend((0..4).map(|i| (4 + i, 4 + (i + 1) % 4)));
        assert_eq!(exhaustive_single_arm_actions(&DepGraph::from_edges(8, edges)), Ok(10));
        // chain and isolated vertex: no buffers
        let g = DepGraph::from_edges(4, [(0, 1), (1, 2)]);
        assert_eq!(exhaustive_single_arm_actions(&g), Ok(4));
    }
}
