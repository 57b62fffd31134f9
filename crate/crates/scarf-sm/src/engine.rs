//! The generic Scarf driver: alternate cardinal and ordinal pivots from the
//! start configuration until column 0 leaves the feasible basis or enters
//! the ordinal basis. The cardinal leaving column is chosen by an injected
//! strategy; everything else is forced.
//!
//! This driver does full-scan ordinal pivots and exact rational ratio tests,
//! which is fine for generic systems and small marriage instances; large
//! marriage runs go through the structure-aware engine in `marriage`.

use thiserror::Error;

use crate::ordinal::{self, OrdinalBasis, OrdinalMatrix, OrdinalPivotError, UtilityError};
use crate::polytope::{self, BasisError, FeasibleBasis, PivotError, StandardFormSystem};
use crate::trace::{OrdinalPivotRecord, PivotTrace, TraceIteration, TraceLevel};

/// The evolving state: a feasible basis B and an ordinal basis D sharing
/// n-1 columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScarfPair {
    pub basis: FeasibleBasis,
    pub ordinal: OrdinalBasis,
}

impl ScarfPair {
    /// The unique column of D not in B; None once B = D.
    pub fn entering_column(&self) -> Option<usize> {
        self.ordinal
            .columns()
            .iter()
            .copied()
            .find(|&j| !self.basis.contains(j))
    }

    pub fn shared_count(&self) -> usize {
        self.ordinal
            .columns()
            .iter()
            .filter(|&&j| self.basis.contains(j))
            .count()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InitError {
    #[error("start basis is not feasible: {0}")]
    Basis(#[from] BasisError),
    #[error("start columns do not form an ordinal basis: {0}")]
    Ordinal(#[from] UtilityError),
}

/// Start configuration: B_0 = {0,..,n-1} (all slack columns) and
/// D_0 = {j_0, 1,..,n-1} with j_0 the non-slack maximizer of row 0.
pub fn initialize(sys: &StandardFormSystem, c: &OrdinalMatrix) -> Result<ScarfPair, InitError> {
    let n = sys.n();
    let slack: Vec<usize> = (0..n).collect();
    let basis = polytope::basic_solution(sys, &slack)?;
    let j0 = (n..c.num_columns())
        .max_by_key(|&j| c.entry(0, j))
        .expect("m >= 1");
    let mut d_cols: Vec<usize> = (1..n).collect();
    d_cols.push(j0);
    let ordinal = ordinal::compute_utility(c, &d_cols)?;
    Ok(ScarfPair { basis, ordinal })
}

/// Everything a strategy may look at when picking the cardinal leaving
/// column.
pub struct StrategyContext<'a> {
    pub sys: &'a StandardFormSystem,
    pub c: &'a OrdinalMatrix,
    pub pair: &'a ScarfPair,
    pub entering: usize,
    /// Sorted candidate leaving columns (min-ratio ties).
    pub candidates: &'a [usize],
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrategyError {
    #[error("no candidate satisfies the pivoting rule")]
    NoValidCandidate,
}

/// Policy for choosing among cardinal leaving candidates. Algorithm 1 lives
/// in `marriage`; the generic default takes the smallest column index.
pub trait CardinalStrategy {
    fn choose(&mut self, ctx: &StrategyContext<'_>) -> Result<usize, StrategyError>;
}

/// Deterministic generic default: lexicographically smallest leaving column.
#[derive(Debug, Default, Clone, Copy)]
pub struct LexMinStrategy;

impl CardinalStrategy for LexMinStrategy {
    fn choose(&mut self, ctx: &StrategyContext<'_>) -> Result<usize, StrategyError> {
        ctx.candidates
            .first()
            .copied()
            .ok_or(StrategyError::NoValidCandidate)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("initialization failed: {0}")]
    Init(#[from] InitError),
    #[error("cardinal pivot failed: {0}")]
    Cardinal(#[from] PivotError),
    #[error("ordinal pivot failed: {0}")]
    Ordinal(#[from] OrdinalPivotError),
    #[error("strategy failed: {0}")]
    Strategy(#[from] StrategyError),
    #[error("no convergence within {limit} iterations")]
    IterationLimitExceeded { limit: usize, trace: Box<PivotTrace> },
}

/// Successful run: the dominating basis (B = D) with its basic solution and
/// utility vector, plus the full trace.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub basis: FeasibleBasis,
    pub ordinal: OrdinalBasis,
    pub trace: PivotTrace,
}

/// Default iteration cap for generic runs, which may cycle under degenerate
/// strategies.
pub fn default_max_iterations(sys: &StandardFormSystem) -> usize {
    sys.n() * sys.num_columns() * 4
}

/// The driver loop. Each iteration: the unique column of D minus B enters B,
/// the strategy picks the leaving column among the ratio-test candidates,
/// and the same column leaves D through an ordinal pivot. Halts when column
/// 0 leaves B (then B' = D) or enters D (then D' = B').
pub fn run(
    sys: &StandardFormSystem,
    c: &OrdinalMatrix,
    strategy: &mut dyn CardinalStrategy,
    max_iterations: usize,
    trace_level: TraceLevel,
) -> Result<RunOutcome, RunError> {
    let mut pair = initialize(sys, c)?;
    let mut iterations: Vec<TraceIteration> = Vec::new();
    while let Some(entering) = pair.entering_column() {
        if iterations.len() >= max_iterations {
            return Err(RunError::IterationLimitExceeded {
                limit: max_iterations,
                trace: Box::new(PivotTrace {
                    n: sys.n(),
                    m: sys.m(),
                    k: None,
                    iterations,
                    final_columns: Vec::new(),
                }),
            });
        }
        let candidates = polytope::cardinal_pivot_candidates(sys, &pair.basis, entering)?;
        let candidate_cols: Vec<usize> = candidates.iter().map(|(j, _)| *j).collect();
        let leaving = {
            let ctx = StrategyContext {
                sys,
                c,
                pair: &pair,
                entering,
                candidates: &candidate_cols,
            };
            strategy.choose(&ctx)?
        };
        let (_, next_basis) = candidates
            .into_iter()
            .find(|(j, _)| *j == leaving)
            .expect("strategy must pick a candidate");

        let mut record = TraceIteration {
            index: iterations.len(),
            b_columns: None,
            d_columns: None,
            entering,
            candidates: candidate_cols,
            leaving,
            ordinal: None,
            utility: None,
            phase: None,
            separator: None,
            sum_women_utility: None,
        };
        if trace_level == TraceLevel::Full {
            record.b_columns = Some(pair.basis.columns().to_vec());
            record.d_columns = Some(pair.ordinal.columns().to_vec());
            record.utility = Some(pair.ordinal.utility().to_vec());
        }

        if leaving == 0 {
            // Column 0 leaves B: the new feasible basis equals D.
            iterations.push(record);
            pair.basis = next_basis;
            break;
        }
        let (result, next_ordinal) = ordinal::ordinal_pivot(c, &pair.ordinal, leaving)?;
        record.ordinal = Some(OrdinalPivotRecord {
            leaving: result.leaving,
            reference: result.reference,
            entering: result.entering,
            row_loser: result.row_loser,
            row_gainer: result.row_gainer,
        });
        iterations.push(record);
        pair = ScarfPair { basis: next_basis, ordinal: next_ordinal };
        if result.entering == 0 {
            // Column 0 enters D: the new ordinal basis equals B'.
            break;
        }
    }
    debug_assert_eq!(pair.basis.columns(), pair.ordinal.columns());
    let trace = PivotTrace {
        n: sys.n(),
        m: sys.m(),
        k: None,
        iterations,
        final_columns: pair.basis.columns().to_vec(),
    };
    Ok(RunOutcome { basis: pair.basis, ordinal: pair.ordinal, trace })
}
