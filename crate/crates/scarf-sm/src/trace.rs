//! Pivot traces: the per-iteration record of Scarf pairs, cardinal candidate
//! sets, ordinal pivot outcomes, and (in marriage mode) separator/phase state
//! and the potential vector.
//!
//! All column and row indices in a trace are 0-based; `io` converts to the
//! 1-based external convention when serializing.

use serde::{Deserialize, Serialize};

/// Value class of u_1: L while the separator sweeps the men, M once the
/// algorithm enters its closing phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    L,
    M,
}

/// How much per-iteration state a run retains. Summary keeps scalars only
/// (enough for potential/phase checks and csv output); Full additionally
/// keeps the B/D column sets and the utility vector of every iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceLevel {
    #[default]
    Full,
    Summary,
}

/// The ordinal half of one iteration: the columns j_l, j_r, j* and the rows
/// i_r, i_l of the pivot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdinalPivotRecord {
    pub leaving: usize,
    pub reference: usize,
    pub entering: usize,
    pub row_loser: usize,
    pub row_gainer: usize,
}

/// One iteration of the driver loop. `b_columns`/`d_columns`/`utility`
/// describe the Scarf pair at the start of the iteration (None under
/// Summary); `ordinal` is None only on the terminal iteration where column 0
/// leaves the feasible basis and no ordinal pivot runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceIteration {
    pub index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub b_columns: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_columns: Option<Vec<usize>>,
    pub entering: usize,
    pub candidates: Vec<usize>,
    pub leaving: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ordinal: Option<OrdinalPivotRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub utility: Option<Vec<i64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase: Option<Phase>,
    /// Separator as the 1-based man name m_i (1 in the M phase).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub separator: Option<usize>,
    /// Total women's utility, the second potential component.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sum_women_utility: Option<i64>,
}

impl TraceIteration {
    /// The potential pair (separator position, total women's utility) used
    /// for monotonicity checks. The M-phase separator m_1 follows every
    /// L-phase separator in the sweep order, so it maps to position k+1.
    pub fn potential(&self, k: usize) -> Option<(usize, i64)> {
        let sep = self.separator?;
        let sum = self.sum_women_utility?;
        let position = if sep == 1 { k + 1 } else { sep };
        Some((position, sum))
    }
}

/// Full record of a run: every iteration plus the dominating basis it ended
/// on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotTrace {
    pub n: usize,
    pub m: usize,
    /// Set in marriage mode (n = 2k).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    pub iterations: Vec<TraceIteration>,
    pub final_columns: Vec<usize>,
}

impl PivotTrace {
    pub fn iteration_count(&self) -> usize {
        self.iterations.len()
    }
}
