//! Graph view of matching-polytope bases. A column set is a basis exactly
//! when its valid edges form a forest and every connected component carries
//! exactly one loop; cardinal pivots then act along an even cycle or a
//! two-loop path, which is how the production solver computes candidate sets
//! in O(component) instead of a rational ratio test.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::polytope::FeasibleBasis;

use super::{Edge, MarriageInstance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BasisGraphViolation {
    #[error("expected {expected} distinct in-range columns")]
    BadColumnSet { expected: usize },
    #[error("valid edges contain a cycle closed by column {column}")]
    CycleDetected { column: usize },
    #[error("component of node {node} has no loop")]
    NoLoop { node: usize },
    #[error("component of node {node} has {count} loops")]
    MultipleLoops { node: usize, count: usize },
}

/// One component of the basis graph: a tree of valid edges plus its loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub nodes: Vec<usize>,
    pub loop_column: usize,
    pub valid_columns: Vec<usize>,
}

/// Structural view of a basis column set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisGraph {
    pub components: Vec<Component>,
    /// Valid-edge degree per node (loops not counted).
    pub degree: Vec<usize>,
}

/// Checks the forest-with-single-loops predicate for an arbitrary column
/// set. This is the combinatorial side of the basis characterization; the
/// algebraic side (invertibility of A_B) is cross-checked in tests.
pub fn basis_graph(inst: &MarriageInstance, columns: &[usize]) -> Result<BasisGraph, BasisGraphViolation> {
    let n = inst.n();
    let edges = inst.edges();
    let mut cols: Vec<usize> = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != columns.len() || cols.iter().any(|&j| j >= inst.num_columns()) {
        return Err(BasisGraphViolation::BadColumnSet { expected: n });
    }

    // Union-find over agents; valid edges must never close a cycle.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut degree = vec![0usize; n];
    for &col in &cols {
        if let Edge::Valid { man, woman } = edges.edge(col) {
            let (a, b) = (inst.man_row(man), inst.woman_row(woman));
            degree[a] += 1;
            degree[b] += 1;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(BasisGraphViolation::CycleDetected { column: col });
            }
            parent[ra] = rb;
        }
    }
    // Attach loops and count them per component.
    let mut loop_count = vec![0usize; n];
    let mut loop_column = vec![usize::MAX; n];
    for &col in &cols {
        if let Edge::Loop(node) = edges.edge(col) {
            let r = find(&mut parent, node);
            loop_count[r] += 1;
            loop_column[r] = col;
        }
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        let r = find(&mut parent, v);
        members[r].push(v);
    }
    let mut components = Vec::new();
    for r in 0..n {
        if members[r].is_empty() {
            continue;
        }
        match loop_count[r] {
            0 => return Err(BasisGraphViolation::NoLoop { node: members[r][0] }),
            1 => {}
            count => return Err(BasisGraphViolation::MultipleLoops { node: members[r][0], count }),
        }
        let node_set: BTreeSet<usize> = members[r].iter().copied().collect();
        let valid_columns: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&col| match edges.edge(col) {
                Edge::Valid { man, .. } => node_set.contains(&inst.man_row(man)),
                Edge::Loop(_) => false,
            })
            .collect();
        components.push(Component {
            nodes: members[r].clone(),
            loop_column: loop_column[r],
            valid_columns,
        });
    }
    Ok(BasisGraph { components, degree })
}

/// Graph view of a feasible basis produced by the rational path.
pub fn validate_basis_graph(
    inst: &MarriageInstance,
    basis: &FeasibleBasis,
) -> Result<BasisGraph, BasisGraphViolation> {
    basis_graph(inst, basis.columns())
}

/// Arithmetic the incremental basis state needs from its x-values: plain
/// integers for the unperturbed run, symbolic epsilon polynomials for the
/// perturbed one.
pub trait PivotValue: Clone + Ord {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn sub_assign(&mut self, other: &Self);
    /// Whether this basic value stands for a matched edge (x = 1 after
    /// rounding away the perturbation).
    fn rounds_to_one(&self) -> bool;
}

impl PivotValue for i64 {
    fn zero() -> Self {
        0
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }

    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn sub_assign(&mut self, other: &Self) {
        *self -= other;
    }

    fn rounds_to_one(&self) -> bool {
        *self == 1
    }
}

/// Result of scanning the entering column against the current basis graph:
/// the alternating cycle or two-loop path it closes, the step length t, and
/// the leaving candidates (the decreasing columns whose value hits zero).
#[derive(Debug, Clone)]
pub struct PivotScan<V> {
    pub entering: usize,
    /// Walk edges with their sign in the pivot direction (+1 increases).
    pub walk: Vec<(usize, i8)>,
    pub t: V,
    pub candidates: Vec<usize>,
}

/// Incremental basis of the matching polytope: membership, x-values, and the
/// valid-edge adjacency needed to find cycles and loop paths.
#[derive(Debug, Clone)]
pub struct BasisState<V> {
    in_basis: Vec<bool>,
    x: Vec<V>,
    adj: Vec<Vec<usize>>,
    has_loop: Vec<bool>,
    columns: BTreeSet<usize>,
}

impl<V: PivotValue> BasisState<V> {
    /// The start basis: every loop, x = b.
    pub fn all_loops(inst: &MarriageInstance, rhs: &[V]) -> Self {
        let n = inst.n();
        let mut x = vec![V::zero(); inst.num_columns()];
        let mut in_basis = vec![false; inst.num_columns()];
        for v in 0..n {
            x[v] = rhs[v].clone();
            in_basis[v] = true;
        }
        Self {
            in_basis,
            x,
            adj: vec![Vec::new(); n],
            has_loop: vec![true; n],
            columns: (0..n).collect(),
        }
    }

    pub fn contains(&self, column: usize) -> bool {
        self.in_basis[column]
    }

    pub fn columns(&self) -> Vec<usize> {
        self.columns.iter().copied().collect()
    }

    pub fn x(&self, column: usize) -> &V {
        &self.x[column]
    }

    /// The matched pairs of the current basic solution.
    pub fn matching_pairs(&self, inst: &MarriageInstance) -> Vec<(usize, usize)> {
        let edges = inst.edges();
        let mut pairs = Vec::new();
        for &col in &self.columns {
            if let Edge::Valid { man, woman } = edges.edge(col) {
                if self.x[col].rounds_to_one() {
                    pairs.push((man, woman));
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }

    /// BFS from `start` over basis valid edges; returns (parent edge column
    /// per node, visited order). Stops early when `target` is reached.
    fn explore(
        &self,
        inst: &MarriageInstance,
        start: usize,
        target: Option<usize>,
    ) -> (Vec<Option<usize>>, Vec<usize>) {
        let edges = inst.edges();
        let mut parent_edge: Vec<Option<usize>> = vec![None; inst.n()];
        let mut seen = vec![false; inst.n()];
        let mut order = vec![start];
        let mut head = 0;
        seen[start] = true;
        while head < order.len() {
            let v = order[head];
            head += 1;
            if Some(v) == target {
                break;
            }
            for &col in &self.adj[v] {
                let (a, b) = edges.rows(col);
                let b = b.expect("adjacency holds valid edges only");
                let next = if a == v { b } else { a };
                if !seen[next] {
                    seen[next] = true;
                    parent_edge[next] = Some(col);
                    order.push(next);
                }
            }
        }
        (parent_edge, order)
    }

    /// Path of basis edges from `from` back to `to` (exclusive of loops),
    /// ordered starting at `from`.
    fn path_edges(
        &self,
        inst: &MarriageInstance,
        parent_edge: &[Option<usize>],
        from: usize,
        to: usize,
    ) -> Vec<usize> {
        let edges = inst.edges();
        let mut path = Vec::new();
        let mut v = from;
        while v != to {
            let col = parent_edge[v].expect("target is in the same tree");
            path.push(col);
            let (a, b) = edges.rows(col);
            let b = b.expect("valid edge");
            v = if a == v { b } else { a };
        }
        path
    }

    /// Walk from one endpoint of the entering edge to its component's loop,
    /// signing edges alternately starting with -1.
    fn side_walk(&self, inst: &MarriageInstance, start: usize) -> Vec<(usize, i8)> {
        let (parent_edge, order) = self.explore(inst, start, None);
        let loop_node = order
            .iter()
            .copied()
            .find(|&v| self.has_loop[v])
            .expect("every component holds exactly one loop");
        // parent_edge points towards start; walk from loop_node back, then
        // reverse so the walk leaves `start`.
        let mut path = self.path_edges(inst, &parent_edge, loop_node, start);
        path.reverse();
        let mut walk = Vec::with_capacity(path.len() + 1);
        let mut sign = -1i8;
        for col in path {
            walk.push((col, sign));
            sign = -sign;
        }
        walk.push((inst.edges().loop_column(loop_node), sign));
        walk
    }

    /// Determines the cycle or two-loop path closed by `entering` and the
    /// resulting leaving candidates.
    pub fn pivot_scan(&self, inst: &MarriageInstance, entering: usize) -> PivotScan<V> {
        assert!(!self.in_basis[entering], "entering column is already basic");
        let edges = inst.edges();
        let mut walk: Vec<(usize, i8)> = vec![(entering, 1)];
        match edges.edge(entering) {
            Edge::Loop(v) => {
                walk.extend(self.side_walk(inst, v));
            }
            Edge::Valid { man, woman } => {
                let (a, b) = (inst.man_row(man), inst.woman_row(woman));
                let (parent_edge, order) = self.explore(inst, a, Some(b));
                if order.contains(&b) {
                    // Even cycle inside one tree.
                    let mut sign = -1i8;
                    for col in self.path_edges(inst, &parent_edge, b, a) {
                        walk.push((col, sign));
                        sign = -sign;
                    }
                    // An odd path plus the entering edge closes an even
                    // cycle; the flipped sign ends back at +1.
                    debug_assert_eq!(sign, 1, "alternating cycle must be even");
                } else {
                    // Two components: loop-to-loop path through the entering
                    // edge.
                    walk.extend(self.side_walk(inst, a));
                    walk.extend(self.side_walk(inst, b));
                }
            }
        }
        let t = walk
            .iter()
            .filter(|(_, sign)| *sign < 0)
            .map(|(col, _)| self.x[*col].clone())
            .min()
            .expect("a decreasing edge always exists on the matching polytope");
        let mut candidates: Vec<usize> = walk
            .iter()
            .filter(|(col, sign)| *sign < 0 && self.x[*col] == t)
            .map(|(col, _)| *col)
            .collect();
        candidates.sort_unstable();
        PivotScan { entering, walk, t, candidates }
    }

    /// Applies the pivot: shifts x along the walk by t and swaps `leaving`
    /// for the entering column.
    pub fn apply(&mut self, inst: &MarriageInstance, scan: &PivotScan<V>, leaving: usize) {
        debug_assert!(scan.candidates.contains(&leaving));
        let edges = inst.edges();
        for &(col, sign) in &scan.walk {
            if sign > 0 {
                self.x[col].add_assign(&scan.t);
            } else {
                self.x[col].sub_assign(&scan.t);
            }
        }
        debug_assert!(self.x[leaving].is_zero());
        self.insert_column(inst, scan.entering);
        self.x[leaving] = V::zero();
        self.in_basis[leaving] = false;
        self.columns.remove(&leaving);
        match edges.edge(leaving) {
            Edge::Loop(v) => self.has_loop[v] = false,
            Edge::Valid { man, woman } => {
                self.adj[inst.man_row(man)].retain(|&c| c != leaving);
                self.adj[inst.woman_row(woman)].retain(|&c| c != leaving);
            }
        }
    }

    fn insert_column(&mut self, inst: &MarriageInstance, column: usize) {
        self.in_basis[column] = true;
        self.columns.insert(column);
        match inst.edges().edge(column) {
            Edge::Loop(v) => self.has_loop[v] = true,
            Edge::Valid { man, woman } => {
                self.adj[inst.man_row(man)].push(column);
                self.adj[inst.woman_row(woman)].push(column);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marriage::{build_system, random_instance};
    use crate::polytope::basic_solution;

    #[test]
    fn all_loops_is_a_valid_basis_graph() {
        let inst = random_instance(3, 0);
        let g = basis_graph(&inst, &(0..6).collect::<Vec<_>>()).unwrap();
        assert_eq!(g.components.len(), 6);
        assert!(g.components.iter().all(|c| c.valid_columns.is_empty()));
    }

    #[test]
    fn cycle_is_rejected_and_singular() {
        // Two men, two women, all four edges: an even cycle.
        let inst = random_instance(2, 0);
        let edges = inst.edges();
        let cols: Vec<usize> = (0..2)
            .flat_map(|m| (0..2).map(move |w| (m, w)))
            .map(|(m, w)| edges.valid_column(m, w))
            .collect();
        assert!(matches!(
            basis_graph(&inst, &cols),
            Err(BasisGraphViolation::CycleDetected { .. })
        ));
        let sys = build_system(&inst);
        assert!(basic_solution(&sys, &cols).is_err());
    }

    #[test]
    fn missing_loop_is_rejected() {
        // One edge joining two singleton components, no loop on that
        // component.
        let inst = random_instance(2, 1);
        let edges = inst.edges();
        let cols = vec![edges.valid_column(0, 0), 1, 3, edges.valid_column(1, 1)];
        // Component {m0, w0} has no loop (columns 0 and 2 are absent).
        assert!(matches!(
            basis_graph(&inst, &cols),
            Err(BasisGraphViolation::NoLoop { .. })
        ));
    }

    #[test]
    fn pivot_scan_on_two_singleton_loops() {
        let inst = random_instance(2, 2);
        let edges = inst.edges();
        let rhs = vec![1i64; 4];
        let state: BasisState<i64> = BasisState::all_loops(&inst, &rhs);
        let entering = edges.valid_column(0, 1);
        let scan = state.pivot_scan(&inst, entering);
        // Walk: entering edge plus both endpoint loops, both decreasing.
        assert_eq!(scan.t, 1);
        assert_eq!(
            scan.candidates,
            vec![inst.man_row(0), inst.woman_row(1)]
        );
    }

    #[test]
    fn apply_updates_x_and_membership() {
        let inst = random_instance(2, 3);
        let edges = inst.edges();
        let rhs = vec![1i64; 4];
        let mut state: BasisState<i64> = BasisState::all_loops(&inst, &rhs);
        let entering = edges.valid_column(1, 0);
        let scan = state.pivot_scan(&inst, entering);
        let leaving = scan.candidates[0];
        state.apply(&inst, &scan, leaving);
        assert!(state.contains(entering));
        assert!(!state.contains(leaving));
        assert_eq!(*state.x(entering), 1);
        assert_eq!(state.matching_pairs(&inst), vec![(1, 0)]);
    }
}
