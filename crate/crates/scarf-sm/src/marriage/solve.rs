//! Algorithm 1: the marriage-specific cardinal pivoting rule and the fast
//! solver loop built on the graph basis state and the incremental ordinal
//! state. The rule: let the separator's loop leave if it is a candidate,
//! otherwise let the smallest-index woman-disliked candidate leave. The
//! potential (separator position, total women's utility) evolves
//! componentwise monotonically with a strict increase every iteration, which
//! bounds the run at k^2 + k + 2 pivots.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::engine::{CardinalStrategy, StrategyContext, StrategyError};
use crate::ordinal::{OrdinalBasis, OrdinalMatrix, OrdinalPivotError};
use crate::trace::{OrdinalPivotRecord, Phase, PivotTrace, TraceIteration, TraceLevel};

use super::graph::BasisState;
use super::ordinal_state::OrdinalState;
use super::{build_ordinal_matrix, Edge, MarriageInstance, ValueClass};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("pair ({man}, {woman}) is out of range for k={k}")]
    PairOutOfRange { man: usize, woman: usize, k: usize },
    #[error("{side} {agent} appears in two pairs")]
    Rematched { side: &'static str, agent: usize },
}

/// A (possibly partial) matching between k men and k women.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    man_to_woman: Vec<Option<usize>>,
    woman_to_man: Vec<Option<usize>>,
}

impl Matching {
    pub fn from_pairs(k: usize, pairs: &[(usize, usize)]) -> Result<Self, MatchingError> {
        let mut man_to_woman = vec![None; k];
        let mut woman_to_man = vec![None; k];
        for &(man, woman) in pairs {
            if man >= k || woman >= k {
                return Err(MatchingError::PairOutOfRange { man, woman, k });
            }
            if man_to_woman[man].is_some() {
                return Err(MatchingError::Rematched { side: "man", agent: man });
            }
            if woman_to_man[woman].is_some() {
                return Err(MatchingError::Rematched { side: "woman", agent: woman });
            }
            man_to_woman[man] = Some(woman);
            woman_to_man[woman] = Some(man);
        }
        Ok(Self { man_to_woman, woman_to_man })
    }

    pub fn k(&self) -> usize {
        self.man_to_woman.len()
    }

    pub fn woman_of(&self, man: usize) -> Option<usize> {
        self.man_to_woman[man]
    }

    pub fn man_of(&self, woman: usize) -> Option<usize> {
        self.woman_to_man[woman]
    }

    pub fn is_perfect(&self) -> bool {
        self.man_to_woman.iter().all(Option::is_some)
    }

    /// Sorted (man, woman) pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.man_to_woman
            .iter()
            .enumerate()
            .filter_map(|(m, w)| w.map(|w| (m, w)))
            .collect()
    }
}

/// Who dislikes a basis column: a man other than m_1, a woman, or m_1 itself
/// (row 0's disliked column is set apart by Algorithm 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DislikedClass {
    Man,
    Woman,
    M1,
}

/// Classifies every column of D by its disliker's side. Loops come out
/// disliked by their own agent, since the own-loop entry 0 is the row
/// minimum whenever the loop is basic.
pub fn classify_disliked(inst: &MarriageInstance, d: &OrdinalBasis) -> Vec<(usize, DislikedClass)> {
    let k = inst.k();
    d.columns()
        .iter()
        .map(|&col| {
            let row = d.disliker_of(col).expect("disliked map is a bijection over D");
            let class = if row == 0 {
                DislikedClass::M1
            } else if row < k {
                DislikedClass::Man
            } else {
                DislikedClass::Woman
            };
            (col, class)
        })
        .collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeparatorError {
    #[error("no man satisfies the separator conditions: {detail}")]
    NoSeparator { detail: String },
}

/// Phase and separator of an ordinal basis, plus the potential pair used for
/// monotonicity checks. `separator` is the 1-based man name (1 in the M
/// phase); the potential's first component maps the M phase to k+1 so it
/// follows every L-phase position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeparatorState {
    pub phase: Phase,
    pub separator: usize,
    pub potential: (usize, i64),
}

impl SeparatorState {
    /// Column of the separator's loop (row index of the separator).
    pub fn separator_loop(&self) -> usize {
        self.separator - 1
    }
}

pub(crate) fn separator_from_parts(
    inst: &MarriageInstance,
    columns: &[usize],
    utility: &[i64],
) -> Result<SeparatorState, SeparatorError> {
    let k = inst.k();
    let sum_women: i64 = utility[k..].iter().sum();
    match super::value_class(k, utility[0]) {
        ValueClass::M => {
            return Ok(SeparatorState { phase: Phase::M, separator: 1, potential: (k + 1, sum_women) });
        }
        ValueClass::L => {}
        other => {
            return Err(SeparatorError::NoSeparator {
                detail: format!("u_1 = {} is in class {:?}, neither L nor M", utility[0], other),
            });
        }
    }
    // L phase: find the unique man incident in D to both his loop and a
    // valid edge, with the Prop.-1 shape around him.
    let edges = inst.edges();
    let mut has_loop = vec![false; k];
    let mut has_valid = vec![false; k];
    for &col in columns {
        match edges.edge(col) {
            Edge::Loop(row) if row < k => has_loop[row] = true,
            Edge::Valid { man, .. } => has_valid[man] = true,
            Edge::Loop(_) => {}
        }
    }
    let mut separator = None;
    for man in 1..k {
        if has_loop[man] && has_valid[man] {
            if separator.is_some() {
                return Err(SeparatorError::NoSeparator {
                    detail: "two men are incident to both a loop and a valid edge".into(),
                });
            }
            separator = Some(man);
        }
    }
    let sep = separator.ok_or_else(|| SeparatorError::NoSeparator {
        detail: "no man is incident to both a loop and a valid edge".into(),
    })?;
    if has_loop[0] || has_valid[0] {
        return Err(SeparatorError::NoSeparator { detail: "m_1 is not isolated".into() });
    }
    for man in 1..sep {
        if has_loop[man] || !has_valid[man] {
            return Err(SeparatorError::NoSeparator {
                detail: format!("man {} before the separator is not valid-only", man + 1),
            });
        }
    }
    for man in sep + 1..k {
        if !has_loop[man] || has_valid[man] {
            return Err(SeparatorError::NoSeparator {
                detail: format!("man {} after the separator is not loop-only", man + 1),
            });
        }
    }
    let name = sep + 1;
    Ok(SeparatorState { phase: Phase::L, separator: name, potential: (name, sum_women) })
}

/// Separator of an almost-feasible ordinal basis, verifying all of the
/// Prop.-1 conditions in the L phase.
pub fn find_separator(inst: &MarriageInstance, d: &OrdinalBasis) -> Result<SeparatorState, SeparatorError> {
    separator_from_parts(inst, d.columns(), d.utility())
}

/// The Algorithm-1 selection: the separator's loop if it is a leaving
/// candidate, else the smallest-index woman-disliked candidate. A candidate
/// of one of these kinds always exists on Algorithm-1 runs; `NoValidCandidate`
/// firing means that guarantee failed.
pub fn algorithm1_choice(
    separator_loop: usize,
    candidates: &[usize],
    mut is_woman_disliked: impl FnMut(usize) -> bool,
) -> Result<usize, StrategyError> {
    if candidates.contains(&separator_loop) {
        return Ok(separator_loop);
    }
    candidates
        .iter()
        .copied()
        .find(|&j| is_woman_disliked(j))
        .ok_or(StrategyError::NoValidCandidate)
}

/// Algorithm 1 as a pluggable strategy for the generic driver; used to
/// cross-check the fast solver below on small instances.
#[derive(Debug, Clone, Copy)]
pub struct Algorithm1Strategy<'a> {
    pub inst: &'a MarriageInstance,
}

impl CardinalStrategy for Algorithm1Strategy<'_> {
    fn choose(&mut self, ctx: &StrategyContext<'_>) -> Result<usize, StrategyError> {
        let k = self.inst.k();
        let sep = find_separator(self.inst, &ctx.pair.ordinal)
            .map_err(|_| StrategyError::NoValidCandidate)?;
        let d = &ctx.pair.ordinal;
        algorithm1_choice(sep.separator_loop(), ctx.candidates, |j| {
            d.disliker_of(j).is_some_and(|row| row >= k)
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub trace_level: TraceLevel,
    /// Audit the per-iteration lemma invariants (utility ranges, separator
    /// order, reference-column class, phase transitions, potential
    /// monotonicity). Costs O(n) per iteration.
    pub assert_invariants: bool,
    /// Overrides the default cap of k^2 + k + 2 iterations.
    pub max_iterations: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { trace_level: TraceLevel::Full, assert_invariants: cfg!(debug_assertions), max_iterations: None }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("separator detection failed at iteration {iteration}: {source}")]
    Separator {
        iteration: usize,
        source: SeparatorError,
        trace: Box<PivotTrace>,
    },
    #[error("no loop or woman-disliked leaving candidate at iteration {iteration}")]
    NoValidCandidate { iteration: usize, trace: Box<PivotTrace> },
    #[error("ordinal pivot failed at iteration {iteration}: {source}")]
    Ordinal {
        iteration: usize,
        source: OrdinalPivotError,
        trace: Box<PivotTrace>,
    },
    #[error("no convergence within {limit} iterations")]
    IterationLimitExceeded { limit: usize, trace: Box<PivotTrace> },
    #[error("invariant violated at iteration {iteration}: {detail}")]
    InvariantViolated {
        iteration: usize,
        detail: String,
        trace: Box<PivotTrace>,
    },
    #[error("output matching admits the blocking pair ({man}, {woman})")]
    UnstableOutput {
        man: usize,
        woman: usize,
        trace: Box<PivotTrace>,
    },
}

impl SolveError {
    /// The trace accumulated up to the failure.
    pub fn trace(&self) -> &PivotTrace {
        match self {
            SolveError::Separator { trace, .. }
            | SolveError::NoValidCandidate { trace, .. }
            | SolveError::Ordinal { trace, .. }
            | SolveError::IterationLimitExceeded { trace, .. }
            | SolveError::InvariantViolated { trace, .. }
            | SolveError::UnstableOutput { trace, .. } => trace,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub matching: Matching,
    pub trace: PivotTrace,
    /// Utility vector of the dominating basis.
    pub utility: Vec<i64>,
}

pub fn default_max_iterations(k: usize) -> usize {
    k * k + k + 2
}

pub fn solve(inst: &MarriageInstance) -> Result<SolveOutput, SolveError> {
    solve_with(inst, &SolveOptions::default())
}

struct LoopState<'a> {
    inst: &'a MarriageInstance,
    c: OrdinalMatrix,
    basis: BasisState<i64>,
    d: OrdinalState,
    iterations: Vec<TraceIteration>,
}

impl LoopState<'_> {
    fn trace(&self, final_columns: Vec<usize>) -> PivotTrace {
        PivotTrace {
            n: self.inst.n(),
            m: self.inst.num_valid_edges(),
            k: Some(self.inst.k()),
            iterations: self.iterations.clone(),
            final_columns,
        }
    }

    fn fail_trace(&self) -> Box<PivotTrace> {
        Box::new(self.trace(Vec::new()))
    }
}

/// The production solver: same pivot sequence as the generic driver under
/// `Algorithm1Strategy`, but with graph-based cardinal pivots and the
/// incremental ordinal state, so a solve is near-linear per iteration.
pub fn solve_with(inst: &MarriageInstance, options: &SolveOptions) -> Result<SolveOutput, SolveError> {
    let k = inst.k();
    let n = inst.n();
    let c = build_ordinal_matrix(inst);
    let basis = BasisState::all_loops(inst, &vec![1i64; n]);
    let j0 = (n..inst.num_columns()).max_by_key(|&j| c.entry(0, j)).expect("k >= 1");
    let mut d_cols: Vec<usize> = (1..n).collect();
    d_cols.push(j0);
    let d = OrdinalState::new(&c, &d_cols);
    let mut state = LoopState { inst, c, basis, d, iterations: Vec::new() };

    let limit = options.max_iterations.unwrap_or_else(|| default_max_iterations(k));
    let mut entering = j0;
    let mut prev_potential: Option<(usize, i64)> = None;
    loop {
        let iteration = state.iterations.len();
        if iteration >= limit {
            return Err(SolveError::IterationLimitExceeded { limit, trace: state.fail_trace() });
        }
        let utility = state.d.utility();
        let sep = separator_from_parts(inst, state.d.columns(), &utility).map_err(|source| {
            SolveError::Separator { iteration, source, trace: state.fail_trace() }
        })?;
        if options.assert_invariants {
            check_monotone_potential(&state, prev_potential, sep.potential)?;
            check_iteration_start(&state, &utility, &sep)?;
        }
        prev_potential = Some(sep.potential);

        let scan = state.basis.pivot_scan(inst, entering);
        let leaving = {
            let d = &state.d;
            algorithm1_choice(sep.separator_loop(), &scan.candidates, |j| {
                d.disliker_of(j).is_some_and(|row| row >= k)
            })
        }
        .map_err(|_| SolveError::NoValidCandidate { iteration, trace: state.fail_trace() })?;

        let mut record = TraceIteration {
            index: iteration,
            b_columns: None,
            d_columns: None,
            entering,
            candidates: scan.candidates.clone(),
            leaving,
            ordinal: None,
            utility: None,
            phase: Some(sep.phase),
            separator: Some(sep.separator),
            sum_women_utility: Some(sep.potential.1),
        };
        if options.trace_level == TraceLevel::Full {
            record.b_columns = Some(state.basis.columns());
            record.d_columns = Some(state.d.columns().to_vec());
            record.utility = Some(utility);
        }
        state.basis.apply(inst, &scan, leaving);
        if leaving == 0 {
            // The loop of m_1 left the feasible basis: B' = D, done.
            state.iterations.push(record);
            break;
        }
        let rec = state.d.pivot(inst, &state.c, leaving).map_err(|source| {
            SolveError::Ordinal { iteration, source, trace: state.fail_trace() }
        })?;
        record.ordinal = Some(rec);
        state.iterations.push(record);
        if options.assert_invariants {
            check_after_pivot(&state, &sep, leaving, &rec)?;
        }
        if rec.entering == 0 {
            // Column 0 entered D: D' = B', done.
            break;
        }
        entering = rec.entering;
    }
    debug_assert_eq!(state.basis.columns(), state.d.columns());

    let matching = Matching::from_pairs(k, &state.basis.matching_pairs(inst))
        .expect("basic solution matches each agent at most once");
    if let Some((man, woman)) = crate::oracle::first_blocking_pair(inst, &matching) {
        return Err(SolveError::UnstableOutput { man, woman, trace: state.fail_trace() });
    }
    let trace = state.trace(state.d.columns().to_vec());
    let utility = state.d.utility();
    Ok(SolveOutput { matching, trace, utility })
}

/// Solves a batch sequentially; the baseline `solve_batch` is compared
/// against.
pub fn solve_batch_sequential(
    instances: &[MarriageInstance],
    options: &SolveOptions,
) -> Vec<Result<SolveOutput, SolveError>> {
    instances.iter().map(|inst| solve_with(inst, options)).collect()
}

/// Solves a batch of instances. With the `parallel` feature the work is
/// distributed over rayon's thread pool; without it this is the sequential
/// loop. Output order always matches input order.
pub fn solve_batch(
    instances: &[MarriageInstance],
    options: &SolveOptions,
) -> Vec<Result<SolveOutput, SolveError>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        instances.par_iter().map(|inst| solve_with(inst, options)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        solve_batch_sequential(instances, options)
    }
}

fn invariant(state: &LoopState<'_>, detail: String) -> SolveError {
    SolveError::InvariantViolated {
        iteration: state.iterations.len(),
        detail,
        trace: state.fail_trace(),
    }
}

fn check_monotone_potential(
    state: &LoopState<'_>,
    prev: Option<(usize, i64)>,
    cur: (usize, i64),
) -> Result<(), SolveError> {
    let Some(prev) = prev else { return Ok(()) };
    let monotone = cur.0 >= prev.0 && cur.1 >= prev.1;
    let strict = cur.0 > prev.0 || cur.1 > prev.1;
    if !(monotone && strict) {
        return Err(invariant(
            state,
            format!("potential did not increase componentwise: {prev:?} -> {cur:?}"),
        ));
    }
    Ok(())
}

fn check_iteration_start(
    state: &LoopState<'_>,
    utility: &[i64],
    sep: &SeparatorState,
) -> Result<(), SolveError> {
    let inst = state.inst;
    match sep.phase {
        Phase::L => {
            let k = inst.k() as i64;
            for (i, &u) in utility.iter().enumerate().skip(1) {
                if u > k {
                    return Err(invariant(state, format!("u_{} = {} is above class M", i + 1, u)));
                }
            }
            // Some woman's loop sits in both bases while she is unmatched in
            // the basic solution.
            let d_cols: BTreeSet<usize> = state.d.columns().iter().copied().collect();
            let witness = (inst.k()..inst.n()).any(|row| {
                d_cols.contains(&row)
                    && state.basis.contains(row)
                    && *state.basis.x(row) == 1
            });
            if !witness {
                return Err(invariant(state, "no improperly matched woman with a shared loop".into()));
            }
            // The rightmost column of D belongs to the separator's block.
            let rightmost = *state.d.columns().last().expect("D nonempty");
            match inst.edges().edge(rightmost) {
                Edge::Valid { man, .. } if man + 1 == sep.separator => {}
                other => {
                    return Err(invariant(
                        state,
                        format!("rightmost D column {rightmost} ({other:?}) is not incident to the separator"),
                    ));
                }
            }
        }
        Phase::M => {
            if state.d.columns().iter().any(|&col| col < inst.k()) {
                return Err(invariant(state, "a man's loop is still in D during the M phase".into()));
            }
            match inst.edges().edge(state.d.disliked_column(0)) {
                Edge::Valid { man: 0, .. } => {}
                other => {
                    return Err(invariant(
                        state,
                        format!("m_1-disliked column is {other:?}, not an edge at m_1"),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_after_pivot(
    state: &LoopState<'_>,
    sep: &SeparatorState,
    leaving: usize,
    rec: &OrdinalPivotRecord,
) -> Result<(), SolveError> {
    let inst = state.inst;
    let k = inst.k();
    if sep.phase == Phase::L {
        if rec.reference < inst.n() {
            return Err(invariant(state, format!("reference column {} is a loop", rec.reference)));
        }
        let ref_entry = state.c.entry(rec.row_gainer, rec.reference);
        if !(1..=k as i64).contains(&ref_entry) {
            return Err(invariant(
                state,
                format!("c[i_l][j_r] = {ref_entry} is outside class M"),
            ));
        }
    }
    let entering_disliker = state
        .d
        .disliker_of(rec.entering)
        .expect("entering column joined D");
    if leaving == sep.separator_loop() {
        // The separator's loop left: the entering edge is m_1-disliked and
        // sits at the next man (or at m_1 itself when the sweep wraps).
        if entering_disliker != 0 {
            return Err(invariant(
                state,
                format!("entering column is disliked by row {entering_disliker}, not m_1"),
            ));
        }
        let expected_man = if sep.separator == k { 0 } else { sep.separator };
        match inst.edges().edge(rec.entering) {
            Edge::Valid { man, .. } if man == expected_man => {}
            other => {
                return Err(invariant(
                    state,
                    format!("entering column {other:?} is not at man {}", expected_man + 1),
                ));
            }
        }
        if sep.separator == k && super::value_class(k, state.d.utility_of(0)) != ValueClass::M {
            return Err(invariant(state, "u_1 did not enter class M at the phase flip".into()));
        }
    } else {
        // A woman-disliked edge left: in the L phase the gainer is a woman
        // and the loser a man; in both phases the entering edge is
        // man-disliked in D'.
        if sep.phase == Phase::L && rec.row_gainer < k {
            return Err(invariant(state, format!("gainer row {} is not a woman", rec.row_gainer)));
        }
        if sep.phase == Phase::L && rec.row_loser >= k {
            return Err(invariant(state, format!("loser row {} is not a man", rec.row_loser)));
        }
        if entering_disliker >= k {
            return Err(invariant(
                state,
                format!("entering column is woman-disliked (row {entering_disliker})"),
            ));
        }
    }
    Ok(())
}
