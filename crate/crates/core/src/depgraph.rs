//! Dependency graphs between objects and their structural decomposition.
//!
//! An edge `i -> j` means object `i` cannot be placed at its goal while
//! object `j` still occupies its current pose.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{inside, overlaps, OrientedBox, Pose2, Workspace};

pub type ObjectId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArmId {
    Left,
    Right,
}

impl ArmId {
    pub const BOTH: [ArmId; 2] = [ArmId::Left, ArmId::Right];

    pub fn index(self) -> usize {
        match self {
            ArmId::Left => 0,
            ArmId::Right => 1,
        }
    }

    pub fn other(self) -> ArmId {
        match self {
            ArmId::Left => ArmId::Right,
            ArmId::Right => ArmId::Left,
        }
    }

    /// 1-based number used in reports.
    pub fn number(self) -> usize {
        self.index() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectShape {
    pub half_width: f64,
    pub half_height: f64,
}

impl ObjectShape {
    pub fn new(half_width: f64, half_height: f64) -> Self {
        Self {
            half_width,
            half_height,
        }
    }

    pub fn at(&self, pose: Pose2) -> OrientedBox {
        OrientedBox::new(pose, self.half_width, self.half_height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Placement {
    OnTable(Pose2),
    Held(ArmId),
}

impl Placement {
    pub fn pose(&self) -> Option<Pose2> {
        match self {
            Placement::OnTable(p) => Some(*p),
            Placement::Held(_) => None,
        }
    }
}

/// Placement of every object, indexed by object id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrangement {
    pub placements: Vec<Placement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DepGraphError {
    #[error("infeasible arrangement: {0}")]
    InfeasibleArrangement(String),
}

impl Arrangement {
    pub fn on_table(poses: impl IntoIterator<Item = Pose2>) -> Self {
        Self {
            placements: poses.into_iter().map(Placement::OnTable).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn pose(&self, id: ObjectId) -> Option<Pose2> {
        self.placements[id].pose()
    }

    pub fn footprint(&self, id: ObjectId, shapes: &[ObjectShape]) -> Option<OrientedBox> {
        self.pose(id).map(|p| shapes[id].at(p))
    }

    /// Checks pairwise non-overlap, containment and single-object-per-arm.
    pub fn check_feasible(&self, shapes: &[ObjectShape], ws: &Workspace) -> Result<(), DepGraphError> {
        if shapes.len() != self.placements.len() {
            return Err(DepGraphError::InfeasibleArrangement(format!(
                "{} placements for {} objects",
                self.placements.len(),
                shapes.len()
            )));
        }
        let mut holders = BTreeSet::new();
        let mut boxes = Vec::new();
        for (id, pl) in self.placements.iter().enumerate() {
            match pl {
                Placement::Held(arm) => {
                    if !holders.insert(*arm) {
                        return Err(DepGraphError::InfeasibleArrangement(format!(
                            "arm {} holds more than one object",
                            arm.number()
                        )));
                    }
                }
                Placement::OnTable(p) => {
                    if !p.is_finite() {
                        return Err(DepGraphError::InfeasibleArrangement(format!(
                            "object {id} has a non-finite pose"
                        )));
                    }
                    let b = shapes[id].at(*p);
                    if !inside(ws, &b) {
                        return Err(DepGraphError::InfeasibleArrangement(format!(
                            "object {id} leaves the workspace"
                        )));
                    }
                    boxes.push((id, b));
                }
            }
        }
        for (k, (i, a)) in boxes.iter().enumerate() {
            for (j, b) in &boxes[k + 1..] {
                if overlaps(a, b) {
                    return Err(DepGraphError::InfeasibleArrangement(format!(
                        "objects {i} and {j} overlap"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Directed dependency graph over object ids `0..n`.
///
/// Vertices can be marked absent (solved objects); absent vertices carry no
/// edges and are ignored by [`decompose`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepGraph {
    n: usize,
    present: Vec<bool>,
    out: Vec<BTreeSet<ObjectId>>,
    inc: Vec<BTreeSet<ObjectId>>,
}

impl DepGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            present: vec![true; n],
            out: vec![BTreeSet::new(); n],
            inc: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (ObjectId, ObjectId)>) -> Self {
        let mut g = Self::new(n);
        for (i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Adds `i -> j`; self-loops are ignored.
    pub fn add_edge(&mut self, i: ObjectId, j: ObjectId) {
        assert!(i < self.n && j < self.n, "vertex out of range");
        if i != j {
            self.out[i].insert(j);
            self.inc[j].insert(i);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_present(&self, v: ObjectId) -> bool {
        self.present[v]
    }

    pub fn vertices(&self) -> impl Iterator<Item = ObjectId> + '_ {
        (0..self.n).filter(|&v| self.present[v])
    }

    pub fn successors(&self, v: ObjectId) -> &BTreeSet<ObjectId> {
        &self.out[v]
    }

    pub fn predecessors(&self, v: ObjectId) -> &BTreeSet<ObjectId> {
        &self.inc[v]
    }

    pub fn out_degree(&self, v: ObjectId) -> usize {
        self.out[v].len()
    }

    pub fn in_degree(&self, v: ObjectId) -> usize {
        self.inc[v].len()
    }

    pub fn has_edge(&self, i: ObjectId, j: ObjectId) -> bool {
        self.out[i].contains(&j)
    }

    pub fn edges(&self) -> Vec<(ObjectId, ObjectId)> {
        (0..self.n)
            .flat_map(|i| self.out[i].iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(BTreeSet::len).sum()
    }

    /// Drops vertex `v` and its incident edges.
    pub fn remove_vertex(&mut self, v: ObjectId) {
        for j in std::mem::take(&mut self.out[v]) {
            self.inc[j].remove(&v);
        }
        for i in std::mem::take(&mut self.inc[v]) {
            self.out[i].remove(&v);
        }
        self.present[v] = false;
    }

    /// Keeps only the vertices in `keep`.
    pub fn restricted_to(&self, keep: &BTreeSet<ObjectId>) -> DepGraph {
        let mut g = self.clone();
        for v in 0..self.n {
            if !keep.contains(&v) {
                g.remove_vertex(v);
            }
        }
        g
    }

    /// DOT export: one `i -> j;` line per edge.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph dependencies {\n");
        for v in self.vertices() {
            let _ = writeln!(s, "  {v};");
        }
        for (i, j) in self.edges() {
            let _ = writeln!(s, "  {i} -> {j};");
        }
        s.push_str("}\n");
        s
    }

    /// Strongly connected components over present vertices (Tarjan, iterative).
    /// Each component is sorted ascending; components are listed in the order
    /// Tarjan completes them (reverse topological order of the condensation).
    pub fn strongly_connected_components(&self) -> Vec<Vec<ObjectId>> {
        const UNSEEN: usize = usize::MAX;
        let mut index = vec![UNSEEN; self.n];
        let mut low = vec![0; self.n];
        let mut on_stack = vec![false; self.n];
        let mut stack = Vec::new();
        let mut comps = Vec::new();
        let mut next = 0;

        for root in self.vertices() {
            if index[root] != UNSEEN {
                continue;
            }
            // (vertex, successors still to visit)
            let mut work: Vec<(ObjectId, Vec<ObjectId>)> = Vec::new();
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;
            work.push((root, self.out[root].iter().rev().copied().collect()));

            while let Some((v, pending)) = work.last_mut() {
                let v = *v;
                if let Some(w) = pending.pop() {
                    if index[w] == UNSEEN {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        work.push((w, self.out[w].iter().rev().copied().collect()));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                work.pop();
                if let Some((parent, _)) = work.last() {
                    low[*parent] = low[*parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
        comps
    }

    pub fn is_acyclic(&self) -> bool {
        self.strongly_connected_components().iter().all(|c| c.len() < 2)
    }
}

/// Builds the dependency graph of a start/goal pair. Objects held by an arm
/// in either arrangement contribute no edges.
pub fn build_dependency_graph(
    start: &Arrangement,
    goal: &Arrangement,
    shapes: &[ObjectShape],
    ws: &Workspace,
) -> Result<DepGraph, DepGraphError> {
    if start.len() != goal.len() {
        return Err(DepGraphError::InfeasibleArrangement(format!(
            "start has {} objects, goal has {}",
            start.len(),
            goal.len()
        )));
    }
    start.check_feasible(shapes, ws)?;
    goal.check_feasible(shapes, ws)?;
    let n = start.len();
    let goal_boxes: Vec<_> = (0..n).map(|i| goal.footprint(i, shapes)).collect();
    let start_boxes: Vec<_> = (0..n).map(|j| start.footprint(j, shapes)).collect();
    let mut g = DepGraph::new(n);
    for (i, gi) in goal_boxes.iter().enumerate() {
        let Some(gi) = gi else { continue };
        for (j, sj) in start_boxes.iter().enumerate() {
            if i == j {
                continue;
            }
            if let Some(sj) = sj {
                if overlaps(gi, sj) {
                    g.add_edge(i, j);
                }
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decomposition {
    /// Zero out-degree vertices, ascending.
    pub movable_now: Vec<ObjectId>,
    /// Vertices without any incident edge, ascending.
    pub isolated: Vec<ObjectId>,
    /// Directed paths listed along edge direction; the last entry is the leaf.
    pub chains: Vec<Vec<ObjectId>>,
    /// Simple cycles starting at their smallest id and following edges.
    pub cycles: Vec<Vec<ObjectId>>,
    /// Strongly connected components (size >= 2) that are not simple cycles.
    pub complex_sccs: Vec<Vec<ObjectId>>,
    /// Everything not covered by the classes above, ascending.
    pub other: Vec<ObjectId>,
}

impl Decomposition {
    /// Strongly connected parts (simple cycles and complex components).
    pub fn cyclic_parts(&self) -> impl Iterator<Item = &Vec<ObjectId>> {
        self.cycles.iter().chain(&self.complex_sccs)
    }
}

/// Classifies the present vertices of `g` into isolated vertices, chains,
/// simple cycles and complex strongly connected components.
pub fn decompose(g: &DepGraph) -> Decomposition {
    let mut d = Decomposition::default();
    let mut in_scc = vec![false; g.n()];

    for comp in g.strongly_connected_components() {
        if comp.len() < 2 {
            continue;
        }
        for &v in &comp {
            in_scc[v] = true;
        }
        let members: BTreeSet<_> = comp.iter().copied().collect();
        let internal: usize = comp
            .iter()
            .map(|&v| g.successors(v).intersection(&members).count())
            .sum();
        if internal == comp.len() {
            // every vertex has exactly one internal successor
            let mut cycle = vec![comp[0]];
            loop {
                let last = *cycle.last().unwrap();
                let nxt = *g
                    .successors(last)
                    .intersection(&members)
                    .next()
                    .expect("strongly connected vertex has an internal successor");
                if nxt == comp[0] {
                    break;
                }
                cycle.push(nxt);
            }
            d.cycles.push(cycle);
        } else {
            d.complex_sccs.push(comp);
        }
    }
    d.cycles.sort();
    d.complex_sccs.sort();

    for v in g.vertices() {
        if g.out_degree(v) == 0 {
            d.movable_now.push(v);
            if g.in_degree(v) == 0 {
                d.isolated.push(v);
            }
        }
    }

    // Chains live among acyclic vertices whose degrees inside that acyclic
    // subgraph are at most one in each direction.
    let acyclic_out = |v: ObjectId| g.successors(v).iter().filter(|&&w| !in_scc[w]).count();
    let acyclic_in = |v: ObjectId| g.predecessors(v).iter().filter(|&&w| !in_scc[w]).count();
    let chain_vertex: Vec<bool> = (0..g.n())
        .map(|v| g.is_present(v) && !in_scc[v] && acyclic_out(v) <= 1 && acyclic_in(v) <= 1)
        .collect();
    let chain_next = |v: ObjectId| -> Option<ObjectId> {
        g.successors(v)
            .iter()
            .copied()
            .find(|&w| !in_scc[w] && chain_vertex[w])
    };
    let has_chain_pred = |v: ObjectId| {
        g.predecessors(v)
            .iter()
            .any(|&u| !in_scc[u] && chain_vertex[u])
    };
    let mut covered = vec![false; g.n()];
    for v in g.vertices() {
        if !chain_vertex[v] || has_chain_pred(v) {
            continue;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(w) = chain_next(cur) {
            path.push(w);
            cur = w;
        }
        if path.len() >= 2 {
            for &w in &path {
                covered[w] = true;
            }
            d.chains.push(path);
        }
    }
    d.chains
        .sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));

    for &v in &d.isolated {
        covered[v] = true;
    }
    for part in d.cycles.iter().chain(&d.complex_sccs) {
        for &v in part {
            covered[v] = true;
        }
    }
    d.other = g.vertices().filter(|&v| !covered[v]).collect();
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn running_example_graph() -> DepGraph {
        DepGraph::from_edges(
            9,
            [(0, 1), (1, 2), (2, 3), (3, 0), (6, 5), (5, 4), (0, 8)],
        )
    }

    #[test]
    fn running_example_decomposition() {
        let d = decompose(&running_example_graph());
        assert_eq!(d.cycles, vec![vec![0, 1, 2, 3]]);
        assert_eq!(d.chains, vec![vec![6, 5, 4]]);
        assert_eq!(d.isolated, vec![7]);
        assert_eq!(d.movable_now, vec![4, 7, 8]);
        assert!(d.complex_sccs.is_empty());
        assert_eq!(d.other, vec![8]);
    }

    #[test]
    fn empty_graph_is_all_isolated() {
        let d = decompose(&DepGraph::new(5));
        assert_eq!(d.isolated, vec![0, 1, 2, 3, 4]);
        assert_eq!(d.movable_now, vec![0, 1, 2, 3, 4]);
        assert!(d.chains.is_empty() && d.cycles.is_empty());
    }

    #[test]
    fn two_disjoint_two_cycles() {
        let g = DepGraph::from_edges(4, [(0, 1), (1, 0), (2, 3), (3, 2)]);
        let d = decompose(&g);
        assert_eq!(d.cycles, vec![vec![0, 1], vec![2, 3]]);
        assert!(d.movable_now.is_empty());
    }

    #[test]
    fn chorded_component_is_complex() {
        let g = DepGraph::from_edges(3, [(0, 1), (1, 2), (2, 0), (0, 2)]);
        let d = decompose(&g);
        assert!(d.cycles.is_empty());
        assert_eq!(d.complex_sccs, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn self_edges_are_dropped() {
        let g = DepGraph::from_edges(2, [(0, 0), (0, 1)]);
        assert_eq!(g.edges(), vec![(0, 1)]);
    }

    #[test]
    fn removal_clears_incident_edges() {
        let mut g = running_example_graph();
        g.remove_vertex(0);
        assert!(!g.has_edge(3, 0) && !g.has_edge(0, 1) && !g.has_edge(0, 8));
        let d = decompose(&g);
        assert!(d.cycles.is_empty());
        assert_eq!(d.chains[0], vec![1, 2, 3]);
    }

    #[test]
    fn dot_lists_every_edge() {
        let dot = running_example_graph().to_dot();
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 7);
        assert!(dot.contains("  6 -> 5;"));
    }
}
