//! Symbolic perturbation of the right-hand side. Every man i receives demand
//! 1 + eps^{k+1+i} and every woman j receives 1 + eps^{1+j} (0-based), which
//! makes every basic solution nondegenerate: the sum of all men's epsilon
//! terms is smaller than any single woman's term, so no partial sum of
//! perturbations cancels. Under such a right-hand side the cardinal pivot has
//! a unique leaving column at every step and the whole run is tie-break-free.
//!
//! The module runs the solver over polynomials in eps ordered
//! lexicographically by coefficient (constant term first), checks the
//! structural claims that make the perturbed run meaningful, and compares the
//! forced pivot sequence against the explicit selection rule of the
//! unperturbed solver: every column the perturbation forces out is either the
//! separator's loop or woman-disliked.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::marriage::{
    basis_graph, build_ordinal_matrix, separator_from_parts, BasisState, Edge, MarriageInstance,
    Matching, OrdinalState, PivotValue, SeparatorError, SolveError, SolveOptions,
};
use crate::ordinal::OrdinalPivotError;
use crate::trace::{PivotTrace, TraceIteration, TraceLevel};
use crate::Rational;

/// A polynomial in the perturbation parameter eps with integer coefficients,
/// ordered as the values themselves are for every sufficiently small positive
/// eps: lexicographically by coefficient, constant term most significant.
/// Trailing zero coefficients are trimmed so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpsilonValue {
    coeffs: Vec<i64>,
}

impl EpsilonValue {
    pub fn constant(value: i64) -> Self {
        Self { coeffs: vec![value] }.trimmed()
    }

    /// The monomial eps^degree.
    pub fn epsilon_power(degree: usize) -> Self {
        let mut coeffs = vec![0; degree + 1];
        coeffs[degree] = 1;
        Self { coeffs }
    }

    fn trimmed(mut self) -> Self {
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
        self
    }

    pub fn coeff(&self, degree: usize) -> i64 {
        self.coeffs.get(degree).copied().unwrap_or(0)
    }

    /// Coefficient of eps^0, the value after rounding the perturbation away.
    pub fn constant_part(&self) -> i64 {
        self.coeff(0)
    }

    /// The pure-eps remainder, self minus its constant part.
    pub fn epsilon_part(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        if !coeffs.is_empty() {
            coeffs[0] = 0;
        }
        Self { coeffs }.trimmed()
    }

    pub fn is_positive(&self) -> bool {
        *self > Self::zero()
    }

    /// Whether the value exceeds 1/2 for all small eps > 0. Coefficients are
    /// integral, so this holds exactly when the constant part is at least 1.
    pub fn exceeds_half(&self) -> bool {
        self.constant_part() >= 1
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&c| -c).collect() }
    }

    /// Evaluates the polynomial at a concrete rational eps.
    pub fn eval(&self, eps: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * eps + Rational::from_integer(BigInt::from(c));
        }
        acc
    }
}

impl PartialOrd for EpsilonValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EpsilonValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let degrees = self.coeffs.len().max(other.coeffs.len());
        for d in 0..degrees {
            match self.coeff(d).cmp(&other.coeff(d)) {
                Ordering::Equal => {}
                unequal => return unequal,
            }
        }
        Ordering::Equal
    }
}

impl PivotValue for EpsilonValue {
    fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_assign(&mut self, other: &Self) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0);
        }
        for (d, &c) in other.coeffs.iter().enumerate() {
            self.coeffs[d] += c;
        }
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    fn sub_assign(&mut self, other: &Self) {
        if self.coeffs.len() < other.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), 0);
        }
        for (d, &c) in other.coeffs.iter().enumerate() {
            self.coeffs[d] -= c;
        }
        while self.coeffs.last() == Some(&0) {
            self.coeffs.pop();
        }
    }

    fn rounds_to_one(&self) -> bool {
        self.constant_part() == 1
    }
}

/// The perturbed demand vector b(eps), one value per polytope row.
#[derive(Debug, Clone)]
pub struct PerturbedRhs {
    values: Vec<EpsilonValue>,
}

impl PerturbedRhs {
    pub fn new(k: usize) -> Self {
        let one = EpsilonValue::constant(1);
        let mut values = Vec::with_capacity(2 * k);
        for man in 0..k {
            values.push(one.add(&EpsilonValue::epsilon_power(k + 1 + man)));
        }
        for woman in 0..k {
            values.push(one.add(&EpsilonValue::epsilon_power(1 + woman)));
        }
        Self { values }
    }

    pub fn values(&self) -> &[EpsilonValue] {
        &self.values
    }

    /// The eps term of one row's demand.
    pub fn epsilon_part(&self, row: usize) -> EpsilonValue {
        self.values[row].epsilon_part()
    }
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("cardinal pivot at iteration {iteration} has {count} leaving candidates")]
    DegenerateTie { iteration: usize, count: usize },
    #[error("ordinal pivot failed at iteration {iteration}: {source}")]
    Ordinal {
        iteration: usize,
        source: OrdinalPivotError,
    },
    #[error("separator detection failed at iteration {iteration}: {source}")]
    Separator {
        iteration: usize,
        source: SeparatorError,
    },
    #[error("no convergence within {limit} iterations")]
    IterationLimitExceeded { limit: usize },
    #[error("structural claim violated at iteration {iteration}: {detail}")]
    ClaimViolated { iteration: usize, detail: String },
}

#[derive(Debug, Clone)]
pub struct PerturbedOutput {
    pub matching: Matching,
    pub trace: PivotTrace,
    /// Utility vector of the dominating basis.
    pub utility: Vec<i64>,
}

/// Runs the solver loop over the perturbed system. No selection rule is
/// involved: every cardinal pivot must have a unique leaving candidate, and
/// at every visited basis the structural claims are verified (nondegeneracy,
/// rounding consistency, tree shape, closed forms, path monotonicity).
pub fn perturbed_run(inst: &MarriageInstance) -> Result<PerturbedOutput, PerturbError> {
    let k = inst.k();
    let n = inst.n();
    let rhs = PerturbedRhs::new(k);
    let c = build_ordinal_matrix(inst);
    let mut basis: BasisState<EpsilonValue> = BasisState::all_loops(inst, rhs.values());
    let j0 = (n..inst.num_columns()).max_by_key(|&j| c.entry(0, j)).expect("k >= 1");
    let mut d_cols: Vec<usize> = (1..n).collect();
    d_cols.push(j0);
    let mut d = OrdinalState::new(&c, &d_cols);

    let limit = crate::marriage::default_max_iterations(k);
    let mut iterations: Vec<TraceIteration> = Vec::new();
    let mut entering = j0;
    loop {
        let iteration = iterations.len();
        if iteration >= limit {
            return Err(PerturbError::IterationLimitExceeded { limit });
        }
        check_basis_claims(inst, &basis, &rhs, iteration)?;
        let utility = d.utility();
        let sep = separator_from_parts(inst, d.columns(), &utility)
            .map_err(|source| PerturbError::Separator { iteration, source })?;

        let scan = basis.pivot_scan(inst, entering);
        if scan.candidates.len() != 1 {
            return Err(PerturbError::DegenerateTie { iteration, count: scan.candidates.len() });
        }
        let leaving = scan.candidates[0];

        let mut record = TraceIteration {
            index: iteration,
            b_columns: Some(basis.columns()),
            d_columns: Some(d.columns().to_vec()),
            entering,
            candidates: scan.candidates.clone(),
            leaving,
            ordinal: None,
            utility: Some(utility),
            phase: Some(sep.phase),
            separator: Some(sep.separator),
            sum_women_utility: Some(sep.potential.1),
        };
        basis.apply(inst, &scan, leaving);
        if leaving == 0 {
            iterations.push(record);
            break;
        }
        let rec = d
            .pivot(inst, &c, leaving)
            .map_err(|source| PerturbError::Ordinal { iteration, source })?;
        record.ordinal = Some(rec);
        iterations.push(record);
        if rec.entering == 0 {
            break;
        }
        entering = rec.entering;
    }
    check_basis_claims(inst, &basis, &rhs, iterations.len())?;
    debug_assert_eq!(basis.columns(), d.columns());

    let matching = Matching::from_pairs(k, &basis.matching_pairs(inst))
        .expect("rounded basic solution matches each agent at most once");
    let trace = PivotTrace {
        n,
        m: inst.num_valid_edges(),
        k: Some(k),
        iterations,
        final_columns: d.columns().to_vec(),
    };
    Ok(PerturbedOutput { matching, trace, utility: d.utility() })
}

fn claim(iteration: usize, detail: String) -> PerturbError {
    PerturbError::ClaimViolated { iteration, detail }
}

/// Verifies, for one visited perturbed basis:
/// - the column set is a basis of the unperturbed polytope and the rounded
///   values (constant parts) form a 0/1 feasible solution of it,
/// - every basic value is strictly positive (nondegeneracy) and exceeds 1/2
///   exactly when its constant part is 1,
/// - node balance: incident basic values sum to the perturbed demand,
/// - every degree-1 tree node other than the loop root is a man, and every
///   woman has total degree at most 2,
/// - below any tree edge, a 1-edge carries 1 plus the men's minus the women's
///   eps terms of its subtree, and a 0-edge the women's minus the men's,
/// - along every root-to-leaf path (loop first) the 0-edge values strictly
///   decrease, the 1-edge values strictly increase, and only the final leaf
///   edge exceeds 1.
fn check_basis_claims(
    inst: &MarriageInstance,
    basis: &BasisState<EpsilonValue>,
    rhs: &PerturbedRhs,
    iteration: usize,
) -> Result<(), PerturbError> {
    let k = inst.k();
    let n = inst.n();
    let edges = inst.edges();
    let columns = basis.columns();
    let graph = basis_graph(inst, &columns)
        .map_err(|e| claim(iteration, format!("column set is not a basis: {e}")))?;

    let mut row_sum_const = vec![0i64; n];
    let mut row_sum = vec![EpsilonValue::zero(); n];
    for &col in &columns {
        let x = basis.x(col);
        if !x.is_positive() {
            return Err(claim(iteration, format!("basic value of column {col} is not positive")));
        }
        let constant = x.constant_part();
        if constant != 0 && constant != 1 {
            return Err(claim(iteration, format!("column {col} rounds to {constant}")));
        }
        if (constant == 1) != x.exceeds_half() {
            return Err(claim(iteration, format!("column {col} disagrees with the 1/2 threshold")));
        }
        let (r1, r2) = edges.rows(col);
        for row in [Some(r1), r2].into_iter().flatten() {
            row_sum_const[row] += constant;
            row_sum[row].add_assign(x);
        }
    }
    for row in 0..n {
        if row_sum_const[row] != 1 {
            return Err(claim(
                iteration,
                format!("rounded solution covers row {row} {} times", row_sum_const[row]),
            ));
        }
        if row_sum[row] != rhs.values()[row] {
            return Err(claim(iteration, format!("node balance fails at row {row}")));
        }
    }

    for component in &graph.components {
        let root = match edges.edge(component.loop_column) {
            Edge::Loop(node) => node,
            Edge::Valid { .. } => unreachable!("loop column"),
        };
        for &node in &component.nodes {
            let loops_here = usize::from(node == root);
            if node >= k && graph.degree[node] + loops_here > 2 {
                return Err(claim(iteration, format!("woman row {node} has degree > 2")));
            }
            if graph.degree[node] == 1 && node != root && node >= k {
                return Err(claim(iteration, format!("tree leaf at row {node} is a woman")));
            }
        }
        check_component_values(inst, basis, rhs, component, root, iteration)?;
    }
    Ok(())
}

/// Closed forms and path monotonicity on one component, rooted at its loop.
fn check_component_values(
    inst: &MarriageInstance,
    basis: &BasisState<EpsilonValue>,
    rhs: &PerturbedRhs,
    component: &crate::marriage::Component,
    root: usize,
    iteration: usize,
) -> Result<(), PerturbError> {
    let k = inst.k();
    let edges = inst.edges();
    // Local adjacency over the component's valid edges.
    let mut adj: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    let index_of = |adj: &Vec<(usize, Vec<(usize, usize)>)>, node: usize| {
        adj.iter().position(|&(v, _)| v == node)
    };
    for &node in &component.nodes {
        adj.push((node, Vec::new()));
    }
    for &col in &component.valid_columns {
        let (a, b) = edges.rows(col);
        let b = b.expect("valid edge");
        let ia = index_of(&adj, a).expect("incident node is in the component");
        let ib = index_of(&adj, b).expect("incident node is in the component");
        adj[ia].1.push((b, col));
        adj[ib].1.push((a, col));
    }

    // Iterative DFS from the root: first pass orders nodes, second pass folds
    // subtree eps-sums leaf-to-root. net(v) = men's minus women's eps terms
    // over the subtree at v.
    let ir = index_of(&adj, root).expect("root is in the component");
    let mut order = vec![(ir, usize::MAX, usize::MAX)]; // (node idx, parent idx, parent column)
    let mut head = 0;
    while head < order.len() {
        let (iv, ip, _) = order[head];
        head += 1;
        let (node, neighbors) = adj[iv].clone();
        let _ = node;
        for (next, col) in neighbors {
            let inx = index_of(&adj, next).expect("neighbor is in the component");
            if inx != ip {
                order.push((inx, iv, col));
            }
        }
    }
    let mut net: Vec<EpsilonValue> = adj
        .iter()
        .map(|&(node, _)| {
            let part = rhs.epsilon_part(node);
            if node < k {
                part
            } else {
                part.neg()
            }
        })
        .collect();
    for &(iv, ip, col) in order.iter().skip(1).rev() {
        let subtree = net[iv].clone();
        net[ip].add_assign(&subtree);
        let x = basis.x(col);
        let expected = match x.constant_part() {
            1 => EpsilonValue::constant(1).add(&subtree),
            0 => subtree.neg(),
            other => {
                return Err(claim(iteration, format!("tree edge {col} rounds to {other}")));
            }
        };
        if *x != expected {
            return Err(claim(
                iteration,
                format!("closed form fails for tree edge {col} at iteration start"),
            ));
        }
    }

    if component.nodes.len() == 1 {
        return Ok(());
    }
    // Root-to-leaf paths: reconstruct via parent pointers from the DFS order.
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; adj.len()];
    let mut is_internal = vec![false; adj.len()];
    for &(iv, ip, col) in order.iter().skip(1) {
        parent[iv] = Some((ip, col));
        is_internal[ip] = true;
    }
    for (leaf, &internal) in is_internal.iter().enumerate() {
        if internal || leaf == ir {
            continue;
        }
        let mut path = Vec::new();
        let mut v = leaf;
        while let Some((ip, col)) = parent[v] {
            path.push(col);
            v = ip;
        }
        path.push(component.loop_column);
        path.reverse();
        check_path_monotonicity(basis, &path, iteration)?;
    }
    Ok(())
}

/// One root-to-leaf path f_0 (the loop), f_1, ..., f_p. Values alternate
/// between the 0-class and the 1-class; within the 0-class they strictly
/// decrease towards the leaf, within the 1-class they strictly increase, and
/// exactly the final leaf edge exceeds 1.
fn check_path_monotonicity(
    basis: &BasisState<EpsilonValue>,
    path: &[usize],
    iteration: usize,
) -> Result<(), PerturbError> {
    let one = EpsilonValue::constant(1);
    let mut prev_const: Option<i64> = None;
    let mut last_zero: Option<&EpsilonValue> = None;
    let mut last_one: Option<&EpsilonValue> = None;
    for (pos, &col) in path.iter().enumerate() {
        let x = basis.x(col);
        let constant = x.constant_part();
        if let Some(prev) = prev_const {
            if prev == constant {
                return Err(claim(
                    iteration,
                    format!("path values do not alternate at column {col}"),
                ));
            }
        }
        prev_const = Some(constant);
        match constant {
            0 => {
                if let Some(prev) = last_zero {
                    if x >= prev {
                        return Err(claim(
                            iteration,
                            format!("0-edge values do not decrease at column {col}"),
                        ));
                    }
                }
                last_zero = Some(x);
            }
            1 => {
                if let Some(prev) = last_one {
                    if x <= prev {
                        return Err(claim(
                            iteration,
                            format!("1-edge values do not increase at column {col}"),
                        ));
                    }
                }
                let above_one = *x > one;
                if above_one != (pos + 1 == path.len()) {
                    return Err(claim(
                        iteration,
                        format!("column {col} exceeds 1 away from the leaf edge"),
                    ));
                }
                last_one = Some(x);
            }
            other => {
                return Err(claim(iteration, format!("path column {col} rounds to {other}")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("unperturbed solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
}

/// Outcome of pitting the perturbation-forced run against the explicit rule.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Every column the perturbed run forced out was a legal choice of the
    /// explicit rule: the separator's loop or a woman-disliked column.
    pub rule_conformant: bool,
    /// First perturbed iteration breaking the rule, if any.
    pub first_violation: Option<usize>,
    /// Whether both runs visited the same bases in the same order.
    pub sequences_equal: bool,
    /// First iteration at which the two runs diverge, if they do.
    pub first_divergence: Option<usize>,
    pub matchings_equal: bool,
    pub unperturbed_iterations: usize,
    pub perturbed_iterations: usize,
}

/// Runs both the unperturbed solver and the perturbed run and reports how
/// the forced pivot sequence relates to the explicit selection rule. The two
/// sequences need not be identical (the rule may have had several legal
/// choices), but every forced choice must have been legal, and both runs must
/// end in a stable matching.
pub fn compare_sequences(inst: &MarriageInstance) -> Result<ComparisonReport, CompareError> {
    let unperturbed = crate::marriage::solve_with(inst, &SolveOptions {
        trace_level: TraceLevel::Full,
        ..SolveOptions::default()
    })?;
    let perturbed = perturbed_run(inst)?;

    let k = inst.k();
    let mut first_violation = None;
    for it in &perturbed.trace.iterations {
        let separator = it.separator.expect("perturbed trace always carries the separator");
        let separator_loop = separator - 1;
        let legal = if it.leaving == separator_loop {
            true
        } else {
            // The disliker of the leaving column is the gainer row of the
            // ordinal pivot that follows; terminal iterations leave column 0,
            // which is handled by the separator branch above.
            it.ordinal.is_some_and(|rec| rec.row_gainer >= k)
        };
        if !legal {
            first_violation = Some(it.index);
            break;
        }
    }

    let a = &unperturbed.trace;
    let b = &perturbed.trace;
    let mut first_divergence = a.iterations.iter().zip(&b.iterations).position(|(x, y)| {
        x.entering != y.entering || x.leaving != y.leaving || x.d_columns != y.d_columns
    });
    if first_divergence.is_none() && a.iteration_count() != b.iteration_count() {
        first_divergence = Some(a.iteration_count().min(b.iteration_count()));
    }
    let sequences_equal = first_divergence.is_none() && a.final_columns == b.final_columns;

    Ok(ComparisonReport {
        rule_conformant: first_violation.is_none(),
        first_violation,
        sequences_equal,
        first_divergence,
        matchings_equal: unperturbed.matching == perturbed.matching,
        unperturbed_iterations: a.iteration_count(),
        perturbed_iterations: b.iteration_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marriage::{fixture, random_instance, Fixture};
    use crate::oracle;
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_eps(n: usize) -> Rational {
        let denom = BigInt::from(((2 * n + 1) * (2 * n + 1)) as u64);
        Rational::new(BigInt::one(), denom)
    }

    #[test]
    fn order_agrees_with_evaluation_at_small_eps() {
        let n = 8;
        let eps = small_eps(n);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..500 {
            let degree = rng.gen_range(0..=2 * n);
            let draw = |rng: &mut ChaCha8Rng| EpsilonValue {
                coeffs: (0..=degree).map(|_| rng.gen_range(-1i64..=1)).collect(),
            }
            .trimmed();
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            assert_eq!(a.cmp(&b), a.eval(&eps).cmp(&b.eval(&eps)), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn men_sum_stays_below_every_woman_term() {
        for k in 1..=8 {
            let rhs = PerturbedRhs::new(k);
            let mut men_sum = EpsilonValue::zero();
            for man in 0..k {
                men_sum.add_assign(&rhs.epsilon_part(man));
            }
            for woman in 0..k {
                assert!(men_sum < rhs.epsilon_part(k + woman));
            }
        }
    }

    #[test]
    fn arithmetic_and_rounding() {
        let one = EpsilonValue::constant(1);
        let tiny = EpsilonValue::epsilon_power(3);
        let above = one.add(&tiny);
        let below = one.sub(&tiny);
        assert!(above > one && below < one && below > EpsilonValue::constant(0));
        assert!(above.rounds_to_one() && below.rounds_to_one());
        assert!(!tiny.rounds_to_one() && !tiny.exceeds_half());
        assert!(above.sub(&above.clone()).is_zero());
        assert_eq!(above.epsilon_part(), tiny);
    }

    #[test]
    fn perturbed_run_is_nondegenerate_and_stable() {
        for k in 1..=5 {
            for seed in 0..4 {
                let inst = random_instance(k, seed);
                let out = perturbed_run(&inst).unwrap_or_else(|e| panic!("k={k} seed={seed}: {e}"));
                assert!(out.matching.is_perfect());
                assert_eq!(oracle::first_blocking_pair(&inst, &out.matching), None);
                for it in &out.trace.iterations {
                    assert_eq!(it.candidates.len(), 1);
                }
            }
        }
    }

    #[test]
    fn forced_sequence_conforms_to_the_selection_rule() {
        let mut cases = vec![fixture(Fixture::Example51), fixture(Fixture::Example83)];
        for k in 1..=6 {
            for seed in 0..3 {
                cases.push(random_instance(k, seed));
            }
        }
        for inst in &cases {
            let report = compare_sequences(inst).expect("both runs succeed");
            assert!(report.rule_conformant, "violation at {:?}", report.first_violation);
            assert!(report.matchings_equal);
        }
    }
}
