//! Standard-form systems Ax = b with A = (I | A'), feasible bases, basic
//! solutions, and the generic cardinal (simplex-style) pivot. All arithmetic
//! is exact rational; degenerate pivots return the full candidate set and
//! leave the selection policy to the caller.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SystemError {
    #[error("dimensions must be positive (n={n}, m={m})")]
    EmptyDimensions { n: usize, m: usize },
    #[error("matrix shape does not match n={n}, m={m}")]
    ShapeMismatch { n: usize, m: usize },
    #[error("first {0} columns must form the identity (violated at row {1}, column {2})")]
    NotIdentityBlock(usize, usize, usize),
    #[error("negative entry at row {0}, column {1}")]
    NegativeEntry(usize, usize),
    #[error("b[{0}] must be strictly positive")]
    NonPositiveRhs(usize),
}

/// The pair (A, b) with A an n x (n+m) nonnegative matrix whose first n
/// columns are the identity and b strictly positive. Column indices are
/// 0-based internally; conversion to the paper's 1-based convention happens
/// at the `io`/CLI boundary.
///
/// Boundedness of {x >= 0 : Ax = b} is a documented precondition for
/// arbitrary input; the matching-polytope construction satisfies it because
/// every column has a positive entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardFormSystem {
    n: usize,
    m: usize,
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
}

impl StandardFormSystem {
    pub fn new(n: usize, m: usize, a: Vec<Vec<Rational>>, b: Vec<Rational>) -> Result<Self, SystemError> {
        if n == 0 || m == 0 {
            return Err(SystemError::EmptyDimensions { n, m });
        }
        if a.len() != n || b.len() != n || a.iter().any(|row| row.len() != n + m) {
            return Err(SystemError::ShapeMismatch { n, m });
        }
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if j < n {
                    let expect = if i == j { Rational::one() } else { Rational::zero() };
                    if *v != expect {
                        return Err(SystemError::NotIdentityBlock(n, i, j));
                    }
                } else if v.is_negative() {
                    return Err(SystemError::NegativeEntry(i, j));
                }
            }
        }
        for (i, v) in b.iter().enumerate() {
            if !v.is_positive() {
                return Err(SystemError::NonPositiveRhs(i));
            }
        }
        Ok(Self { n, m, a, b })
    }

    /// Convenience constructor from integer entries.
    pub fn from_ints(n: usize, m: usize, a: &[Vec<i64>], b: &[i64]) -> Result<Self, SystemError> {
        let a = a
            .iter()
            .map(|row| row.iter().map(|&v| Rational::from_integer(v.into())).collect())
            .collect();
        let b = b.iter().map(|&v| Rational::from_integer(v.into())).collect();
        Self::new(n, m, a, b)
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

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.a[i][j]
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.b
    }
}

/// A feasible basis: n column indices whose submatrix is invertible, together
/// with the (nonnegative) basic solution extended by zeros to all columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleBasis {
    columns: Vec<usize>,
    solution: Vec<Rational>,
}

impl FeasibleBasis {
    /// Sorted basis columns.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn contains(&self, column: usize) -> bool {
        self.columns.binary_search(&column).is_ok()
    }

    /// Full-length basic solution (zero off-basis).
    pub fn solution(&self) -> &[Rational] {
        &self.solution
    }

    pub fn value(&self, column: usize) -> &Rational {
        &self.solution[column]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BasisError {
    #[error("expected {expected} distinct in-range columns")]
    BadColumnSet { expected: usize },
    #[error("the selected columns are linearly dependent")]
    SingularBasis,
    #[error("basic solution is infeasible: x[{column}] < 0")]
    InfeasibleBasis { column: usize },
}

/// Solves A_B x_B = b exactly. Returns the feasible basis or the reason the
/// column set fails (singular submatrix or a negative basic value).
pub fn basic_solution(sys: &StandardFormSystem, columns: &[usize]) -> Result<FeasibleBasis, BasisError> {
    let n = sys.n;
    let mut cols: Vec<usize> = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != n || cols.iter().any(|&j| j >= sys.num_columns()) {
        return Err(BasisError::BadColumnSet { expected: n });
    }
    let rhs = solve_columns(sys, &cols, std::slice::from_ref(&sys.b)).ok_or(BasisError::SingularBasis)?;
    let x_b = &rhs[0];
    let mut solution = vec![Rational::zero(); sys.num_columns()];
    for (idx, &j) in cols.iter().enumerate() {
        if x_b[idx].is_negative() {
            return Err(BasisError::InfeasibleBasis { column: j });
        }
        solution[j] = x_b[idx].clone();
    }
    Ok(FeasibleBasis { columns: cols, solution })
}

/// Solves A_B y = r for each right-hand side r by exact Gaussian elimination.
/// Returns None when A_B is singular.
#[allow(clippy::needless_range_loop)]
fn solve_columns(
    sys: &StandardFormSystem,
    cols: &[usize],
    rhs: &[Vec<Rational>],
) -> Option<Vec<Vec<Rational>>> {
    let n = sys.n;
    // Augmented matrix: A_B followed by the right-hand sides.
    let width = n + rhs.len();
    let mut mat: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rational> = cols.iter().map(|&j| sys.a[i][j].clone()).collect();
            for r in rhs {
                row.push(r[i].clone());
            }
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !mat[r][col].is_zero())?;
        mat.swap(col, pivot);
        let inv = mat[col][col].clone();
        for j in col..width {
            mat[col][j] = &mat[col][j] / &inv;
        }
        for r in 0..n {
            if r != col && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                for j in col..width {
                    let delta = &factor * &mat[col][j];
                    mat[r][j] = &mat[r][j] - &delta;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(rhs.len());
    for k in 0..rhs.len() {
        out.push((0..n).map(|i| mat[i][n + k].clone()).collect());
    }
    Some(out)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PivotError {
    #[error("entering column {0} is already basic")]
    EnteringIsBasic(usize),
    #[error("entering column {0} is out of range")]
    ColumnOutOfRange(usize),
    #[error("no basic variable decreases in the entering direction")]
    UnboundedDirection,
}

/// Generic ratio-test pivot. Returns every leaving column reachable by a
/// single pivot on `entering` (all min-ratio ties), each with the resulting
/// feasible basis. Nondegenerate systems yield a singleton.
pub fn cardinal_pivot_candidates(
    sys: &StandardFormSystem,
    basis: &FeasibleBasis,
    entering: usize,
) -> Result<Vec<(usize, FeasibleBasis)>, PivotError> {
    if entering >= sys.num_columns() {
        return Err(PivotError::ColumnOutOfRange(entering));
    }
    if basis.contains(entering) {
        return Err(PivotError::EnteringIsBasic(entering));
    }
    let cols = &basis.columns;
    let a_e: Vec<Rational> = (0..sys.n).map(|i| sys.a[i][entering].clone()).collect();
    let solved = solve_columns(sys, cols, &[a_e]).expect("feasible basis must be invertible");
    let direction = &solved[0];

    // Ratio test: x'_B = x_B - t * direction; t limited by rows with
    // direction > 0.
    let mut best: Option<Rational> = None;
    for (idx, d) in direction.iter().enumerate() {
        if d.is_positive() {
            let ratio = basis.value(cols[idx]) / d;
            if best.as_ref().is_none_or(|b| ratio < *b) {
                best = Some(ratio);
            }
        }
    }
    let t = best.ok_or(PivotError::UnboundedDirection)?;

    // The pivoted solution is the same for every min-ratio candidate.
    let mut solution = vec![Rational::zero(); sys.num_columns()];
    solution[entering] = t.clone();
    for (idx, &j) in cols.iter().enumerate() {
        solution[j] = basis.value(j) - &t * &direction[idx];
    }

    let mut out = Vec::new();
    for (idx, d) in direction.iter().enumerate() {
        if d.is_positive() && basis.value(cols[idx]) / d == t {
            let leaving = cols[idx];
            let mut new_cols: Vec<usize> = cols.iter().copied().filter(|&j| j != leaving).collect();
            new_cols.push(entering);
            new_cols.sort_unstable();
            let mut new_solution = solution.clone();
            new_solution[leaving] = Rational::zero();
            out.push((
                leaving,
                FeasibleBasis { columns: new_cols, solution: new_solution },
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn identity_system_basic_solution() {
        // n=1 needs m>=1 under our constructor; use the 1x2 system with a
        // redundant non-slack column and the slack basis.
        let sys = StandardFormSystem::from_ints(1, 1, &[vec![1, 1]], &[1]).unwrap();
        let basis = basic_solution(&sys, &[0]).unwrap();
        assert_eq!(basis.solution(), &[rat(1), rat(0)]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            StandardFormSystem::from_ints(2, 1, &[vec![1, 0, 1], vec![0, 2, 1]], &[1, 1]),
            Err(SystemError::NotIdentityBlock(..))
        ));
        assert!(matches!(
            StandardFormSystem::from_ints(1, 1, &[vec![1, 1]], &[0]),
            Err(SystemError::NonPositiveRhs(0))
        ));
    }

    #[test]
    fn singular_and_infeasible_bases_are_reported() {
        let sys = StandardFormSystem::from_ints(
            2,
            2,
            &[vec![1, 0, 1, 2], vec![0, 1, 1, 2]],
            &[1, 2],
        )
        .unwrap();
        // Columns 2 and 3 are parallel.
        assert_eq!(basic_solution(&sys, &[2, 3]), Err(BasisError::SingularBasis));
        // Basis {1, 2}: x_2 = 1, x_1 = 2 - 1 = 1 feasible; basis {0, 2} gives
        // x_2 = 2 and x_0 = 1 - 2 < 0.
        assert!(basic_solution(&sys, &[1, 2]).is_ok());
        assert_eq!(
            basic_solution(&sys, &[0, 2]),
            Err(BasisError::InfeasibleBasis { column: 0 })
        );
    }

    #[test]
    fn nondegenerate_pivot_has_unique_candidate() {
        // 2x3 system with strictly distinct ratios for the entering column.
        let sys = StandardFormSystem::from_ints(
            2,
            1,
            &[vec![1, 0, 1], vec![0, 1, 3]],
            &[2, 3],
        )
        .unwrap();
        let basis = basic_solution(&sys, &[0, 1]).unwrap();
        let candidates = cardinal_pivot_candidates(&sys, &basis, 2).unwrap();
        // Ratios: 2/1 vs 3/3 -> row 1 wins uniquely.
        assert_eq!(candidates.len(), 1);
        let (leaving, next) = &candidates[0];
        assert_eq!(*leaving, 1);
        assert_eq!(next.value(2), &rat(1));
        assert_eq!(next.value(0), &rat(1));
    }

    #[test]
    fn degenerate_pivot_returns_all_ties() {
        let sys = StandardFormSystem::from_ints(
            2,
            1,
            &[vec![1, 0, 1], vec![0, 1, 1]],
            &[1, 1],
        )
        .unwrap();
        let basis = basic_solution(&sys, &[0, 1]).unwrap();
        let candidates = cardinal_pivot_candidates(&sys, &basis, 2).unwrap();
        let leavers: Vec<usize> = candidates.iter().map(|(l, _)| *l).collect();
        assert_eq!(leavers, vec![0, 1]);
        for (_, next) in &candidates {
            assert_eq!(next.value(2), &rat(1));
        }
    }

    #[test]
    fn unbounded_direction_is_detected() {
        // Column 3 is identically zero, so no basic variable decreases when
        // it enters (the region is unbounded in that direction).
        let sys = StandardFormSystem::from_ints(
            2,
            2,
            &[vec![1, 0, 1, 0], vec![0, 1, 1, 0]],
            &[1, 1],
        )
        .unwrap();
        let basis = basic_solution(&sys, &[0, 1]).unwrap();
        assert_eq!(
            cardinal_pivot_candidates(&sys, &basis, 3),
            Err(PivotError::UnboundedDirection)
        );
    }
}
