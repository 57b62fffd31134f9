//! Ordinal matrices, ordinal bases, utility vectors, and the ordinal pivot:
//! remove a column, find the reference column that now carries two row
//! minimizers, and bring in the argmax column of the candidate set K.

use thiserror::Error;

/// Integer matrix C with per-row ordering semantics. Row-wise distinctness is
/// the operative invariant (row minimizers must be unique); additionally the
/// diagonal entry of each row is smaller than every non-slack entry, which is
/// smaller than every off-diagonal slack entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalMatrix {
    n: usize,
    m: usize,
    entries: Vec<Vec<i64>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalMatrixViolation {
    #[error("matrix shape does not match n={n}, m={m}")]
    ShapeMismatch { n: usize, m: usize },
    #[error("row {row} repeats value {value} at columns {col_a} and {col_b}")]
    DuplicateInRow { row: usize, col_a: usize, col_b: usize, value: i64 },
    #[error("row {row}: c[{row}][{col_mid}] must lie strictly between c[{row}][{row}] and c[{row}][{col_high}]")]
    OrderViolation { row: usize, col_mid: usize, col_high: usize },
}

impl OrdinalMatrix {
    /// Shape-checks only; use [`OrdinalMatrix::validate`] for the ordering
    /// invariants.
    pub fn new(n: usize, m: usize, entries: Vec<Vec<i64>>) -> Result<Self, OrdinalMatrixViolation> {
        if n == 0 || m == 0 || entries.len() != n || entries.iter().any(|r| r.len() != n + m) {
            return Err(OrdinalMatrixViolation::ShapeMismatch { n, m });
        }
        Ok(Self { n, m, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn num_columns(&self) -> usize {
        self.n + self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> i64 {
        self.entries[row][col]
    }

    pub fn row(&self, row: usize) -> &[i64] {
        &self.entries[row]
    }

    /// Checks both ordinal-matrix invariants, reporting the first violation:
    /// duplicate values within a row, or a breach of
    /// c[i][i] < c[i][k] < c[i][j] (k non-slack, j a different slack column).
    pub fn validate(&self) -> Result<(), OrdinalMatrixViolation> {
        for (i, row) in self.entries.iter().enumerate() {
            let mut seen: Vec<(i64, usize)> = row.iter().copied().zip(0..).collect();
            seen.sort_unstable();
            for pair in seen.windows(2) {
                if pair[0].0 == pair[1].0 {
                    return Err(OrdinalMatrixViolation::DuplicateInRow {
                        row: i,
                        col_a: pair[0].1.min(pair[1].1),
                        col_b: pair[0].1.max(pair[1].1),
                        value: pair[0].0,
                    });
                }
            }
            for k in self.n..self.n + self.m {
                if row[i] >= row[k] {
                    return Err(OrdinalMatrixViolation::OrderViolation { row: i, col_mid: i, col_high: k });
                }
                for j in 0..self.n {
                    if j != i && row[k] >= row[j] {
                        return Err(OrdinalMatrixViolation::OrderViolation { row: i, col_mid: k, col_high: j });
                    }
                }
            }
        }
        Ok(())
    }
}

/// An ordinal basis: n columns dominating every outside column, with the
/// row-wise utility minima and the disliked bijection (row i maps to the
/// unique basis column realizing u_i).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrdinalBasis {
    columns: Vec<usize>,
    utility: Vec<i64>,
    disliked: Vec<usize>,
}

impl OrdinalBasis {
    /// Sorted basis columns.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn contains(&self, column: usize) -> bool {
        self.columns.binary_search(&column).is_ok()
    }

    pub fn utility(&self) -> &[i64] {
        &self.utility
    }

    /// The column row `row` dislikes (its utility minimizer).
    pub fn disliked_column(&self, row: usize) -> usize {
        self.disliked[row]
    }

    /// The row that dislikes `column`, if it is a basis column.
    pub fn disliker_of(&self, column: usize) -> Option<usize> {
        self.disliked.iter().position(|&c| c == column)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UtilityError {
    #[error("expected {expected} distinct in-range columns")]
    BadColumnSet { expected: usize },
    #[error("not an ordinal basis: column {witness} exceeds the utility vector in every row")]
    NotOrdinalBasis { witness: usize },
    #[error("rows {row_a} and {row_b} share the minimizer column {column}")]
    DuplicateMinimizer { row_a: usize, row_b: usize, column: usize },
}

/// Computes the utility vector and disliked bijection for `columns`, checking
/// the domination condition against every outside column.
pub fn compute_utility(c: &OrdinalMatrix, columns: &[usize]) -> Result<OrdinalBasis, UtilityError> {
    let n = c.n();
    let mut cols: Vec<usize> = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != n || cols.iter().any(|&j| j >= c.num_columns()) {
        return Err(UtilityError::BadColumnSet { expected: n });
    }
    let mut utility = Vec::with_capacity(n);
    let mut disliked = Vec::with_capacity(n);
    for i in 0..n {
        let (&j, _) = cols
            .iter()
            .map(|j| (j, c.entry(i, *j)))
            .min_by_key(|&(_, v)| v)
            .expect("n >= 1");
        utility.push(c.entry(i, j));
        disliked.push(j);
    }
    for i in 0..n {
        for i2 in i + 1..n {
            if disliked[i] == disliked[i2] {
                return Err(UtilityError::DuplicateMinimizer { row_a: i, row_b: i2, column: disliked[i] });
            }
        }
    }
    let mut outside = vec![true; c.num_columns()];
    for &j in &cols {
        outside[j] = false;
    }
    for (h, _) in outside.iter().enumerate().filter(|(_, &o)| o) {
        let dominated = (0..n).any(|i| c.entry(i, h) <= utility[i]);
        if !dominated {
            return Err(UtilityError::NotOrdinalBasis { witness: h });
        }
    }
    Ok(OrdinalBasis { columns: cols, utility, disliked })
}

/// Outcome of one ordinal pivot: the leaving column j_l, the reference column
/// j_r (the one left holding two row minimizers), the entering column j*, the
/// rows whose utility moved, and the size of the candidate set K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrdinalPivotResult {
    pub leaving: usize,
    pub reference: usize,
    pub entering: usize,
    /// i_r: the row whose utility strictly decreases.
    pub row_loser: usize,
    /// i_l: the row whose utility strictly increases.
    pub row_gainer: usize,
    pub candidate_set_size: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrdinalPivotError {
    #[error("leaving column {0} is not in the ordinal basis")]
    LeavingNotInBasis(usize),
    #[error("the remaining columns all lie in the slack block; the pivot is undefined at this configuration")]
    DegenerateRemainder,
    #[error("candidate set K is empty (precondition violated)")]
    EmptyCandidateSet,
}

/// The ordinal pivot: removes `leaving` from D, recomputes the provisional
/// utilities over the remaining columns, locates the reference column and the
/// rows i_l / i_r, forms K = {k : c[i][k] > u-bar[i] for all i != i_r}, and
/// enters j* = argmax over K of c[i_r][k].
///
/// This is the generic full-scan implementation; the marriage engine has an
/// equivalent structure-aware fast path that is cross-checked against this
/// one in tests.
pub fn ordinal_pivot(
    c: &OrdinalMatrix,
    d: &OrdinalBasis,
    leaving: usize,
) -> Result<(OrdinalPivotResult, OrdinalBasis), OrdinalPivotError> {
    let n = c.n();
    if !d.contains(leaving) {
        return Err(OrdinalPivotError::LeavingNotInBasis(leaving));
    }
    let remaining: Vec<usize> = d.columns().iter().copied().filter(|&j| j != leaving).collect();
    if remaining.iter().all(|&j| j < n) {
        return Err(OrdinalPivotError::DegenerateRemainder);
    }
    let i_gain = d.disliker_of(leaving).expect("disliked map is a bijection");

    // Provisional utilities over D minus the leaving column: only the row
    // that disliked the leaving column changes.
    let mut u_bar: Vec<i64> = d.utility().to_vec();
    let (&j_r, new_min) = remaining
        .iter()
        .map(|j| (j, c.entry(i_gain, *j)))
        .min_by_key(|&(_, v)| v)
        .expect("n >= 2 whenever a pivot is requested");
    u_bar[i_gain] = new_min;
    let i_lose = d.disliker_of(j_r).expect("reference column is in D");

    let mut entering = None;
    let mut k_size = 0usize;
    for k in 0..c.num_columns() {
        if remaining.binary_search(&k).is_ok() {
            continue;
        }
        let admissible = (0..n).all(|i| i == i_lose || c.entry(i, k) > u_bar[i]);
        if admissible {
            k_size += 1;
            let value = c.entry(i_lose, k);
            if entering.is_none_or(|(_, best)| value > best) {
                entering = Some((k, value));
            }
        }
    }
    let (j_star, _) = entering.ok_or(OrdinalPivotError::EmptyCandidateSet)?;

    let mut new_cols = remaining;
    new_cols.push(j_star);
    new_cols.sort_unstable();
    let next = compute_utility(c, &new_cols)
        .expect("ordinal pivot must restore an ordinal basis");
    debug_assert!(next.utility()[i_gain] > d.utility()[i_gain]);
    debug_assert!(next.utility()[i_lose] < d.utility()[i_lose]);
    let result = OrdinalPivotResult {
        leaving,
        reference: j_r,
        entering: j_star,
        row_loser: i_lose,
        row_gainer: i_gain,
        candidate_set_size: k_size,
    };
    Ok((result, next))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The 3x6 ordinal matrix of the paper's introductory example.
    pub fn example_matrix() -> OrdinalMatrix {
        OrdinalMatrix::new(
            3,
            3,
            vec![
                vec![0, 5, 4, 2, 3, 1],
                vec![5, 0, 4, 1, 2, 3],
                vec![5, 4, 0, 3, 1, 2],
            ],
        )
        .unwrap()
    }

    #[test]
    fn example_matrix_is_ordinal() {
        assert_eq!(example_matrix().validate(), Ok(()));
    }

    #[test]
    fn broken_diagonal_is_reported() {
        let mut rows = vec![
            vec![6, 5, 4, 2, 3, 1],
            vec![5, 0, 4, 1, 2, 3],
            vec![5, 4, 0, 3, 1, 2],
        ];
        rows[0][0] = 6;
        let c = OrdinalMatrix::new(3, 3, rows).unwrap();
        assert_eq!(
            c.validate(),
            Err(OrdinalMatrixViolation::OrderViolation { row: 0, col_mid: 0, col_high: 3 })
        );
    }

    #[test]
    fn duplicate_in_row_is_reported() {
        let c = OrdinalMatrix::new(
            2,
            1,
            vec![vec![0, 2, 2], vec![2, 0, 1]],
        )
        .unwrap();
        assert_eq!(
            c.validate(),
            Err(OrdinalMatrixViolation::DuplicateInRow { row: 0, col_a: 1, col_b: 2, value: 2 })
        );
    }

    #[test]
    fn utility_of_example_basis() {
        let c = example_matrix();
        let d = compute_utility(&c, &[3, 4, 5]).unwrap();
        assert_eq!(d.utility(), &[1, 1, 1]);
        // Row 0 minimizes at column 5, row 1 at column 3, row 2 at column 4.
        assert_eq!(d.disliked_column(0), 5);
        assert_eq!(d.disliked_column(1), 3);
        assert_eq!(d.disliked_column(2), 4);
    }

    #[test]
    fn slack_columns_are_not_an_ordinal_basis_here() {
        // Columns {0,1,2} give u = (0,0,0), but column 3 = (2,1,3) exceeds u
        // in every row, so domination fails with witness 3.
        let c = example_matrix();
        assert_eq!(
            compute_utility(&c, &[0, 1, 2]),
            Err(UtilityError::NotOrdinalBasis { witness: 3 })
        );
    }

    /// Brute-force helper: all columns j completing `partial` to an ordinal
    /// basis.
    fn completions(c: &OrdinalMatrix, partial: &[usize]) -> Vec<usize> {
        (0..c.num_columns())
            .filter(|j| !partial.contains(j))
            .filter(|&j| {
                let mut cols = partial.to_vec();
                cols.push(j);
                compute_utility(c, &cols).is_ok()
            })
            .collect()
    }

    #[test]
    fn pivot_on_example_matches_brute_force() {
        let c = example_matrix();
        let d = compute_utility(&c, &[3, 4, 5]).unwrap();
        let (result, next) = ordinal_pivot(&c, &d, 3).unwrap();
        // Removing column 3 leaves {4,5}; brute force says columns 2 and 3
        // are the only completions, so the pivot must enter column 2.
        assert_eq!(completions(&c, &[4, 5]), vec![2, 3]);
        assert_eq!(result.entering, 2);
        assert_eq!(result.reference, 4);
        assert_eq!(result.row_gainer, 1);
        assert_eq!(result.row_loser, 2);
        assert_eq!(next.columns(), &[2, 4, 5]);
        assert_eq!(next.utility(), &[1, 2, 0]);
    }

    #[test]
    fn pivot_is_reversible() {
        let c = example_matrix();
        let d = compute_utility(&c, &[3, 4, 5]).unwrap();
        let (result, next) = ordinal_pivot(&c, &d, 3).unwrap();
        let (back, restored) = ordinal_pivot(&c, &next, result.entering).unwrap();
        assert_eq!(back.entering, 3);
        assert_eq!(restored, d);
    }

    #[test]
    fn degenerate_remainder_is_rejected() {
        let c = example_matrix();
        // {0,1,3}: removing 3 leaves only slack columns.
        if let Ok(d) = compute_utility(&c, &[0, 1, 3]) {
            assert_eq!(
                ordinal_pivot(&c, &d, 3),
                Err(OrdinalPivotError::DegenerateRemainder)
            );
        }
    }
}
