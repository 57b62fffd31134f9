//! Marriage instances and their encoding as a Scarf triple (A, b, C*):
//! the node-edge incidence system of the matching polytope, the consistent
//! ordinal matrix built from the preference lists, the graph view of bases,
//! and the Algorithm-1 pivoting strategy with its separator/phase logic.

mod graph;
mod ordinal_state;
mod solve;

pub use graph::{
    basis_graph, validate_basis_graph, BasisGraph, BasisGraphViolation, BasisState, Component,
    PivotScan, PivotValue,
};
pub use ordinal_state::OrdinalState;
pub(crate) use solve::separator_from_parts;
pub use solve::{
    algorithm1_choice, classify_disliked, default_max_iterations, find_separator, solve,
    solve_batch, solve_batch_sequential, solve_with, Algorithm1Strategy, DislikedClass, Matching, MatchingError, SeparatorError,
    SeparatorState, SolveError, SolveOptions, SolveOutput,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ordinal::OrdinalMatrix;
use crate::polytope::StandardFormSystem;
use crate::Rational;
use num_traits::{One, Zero};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("k must be positive")]
    EmptyInstance,
    #[error("expected {expected} preference lists per side, got {got}")]
    WrongListCount { expected: usize, got: usize },
    #[error("list for {side} {agent} repeats partner {partner}")]
    DuplicateEntry { side: &'static str, agent: usize, partner: usize },
    #[error("list for {side} {agent} references out-of-range partner {partner}")]
    PartnerOutOfRange { side: &'static str, agent: usize, partner: usize },
}

/// A marriage instance with k men and k women and complete strict preference
/// lists (best first, 0-based indices). Partial lists are accepted and
/// completed by appending the missing partners in increasing index order;
/// `was_completed` records that this happened.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarriageInstance {
    k: usize,
    men_prefs: Vec<Vec<usize>>,
    women_prefs: Vec<Vec<usize>>,
    /// rank[m][w] = position of w in m's list (0 = best).
    men_rank: Vec<Vec<usize>>,
    women_rank: Vec<Vec<usize>>,
    was_completed: bool,
}

impl MarriageInstance {
    pub fn new(men_prefs: Vec<Vec<usize>>, women_prefs: Vec<Vec<usize>>) -> Result<Self, InstanceError> {
        let k = men_prefs.len();
        if k == 0 {
            return Err(InstanceError::EmptyInstance);
        }
        if women_prefs.len() != k {
            return Err(InstanceError::WrongListCount { expected: k, got: women_prefs.len() });
        }
        let mut completed = false;
        let men_prefs = complete_side(k, men_prefs, "man", &mut completed)?;
        let women_prefs = complete_side(k, women_prefs, "woman", &mut completed)?;
        let men_rank = ranks(k, &men_prefs);
        let women_rank = ranks(k, &women_prefs);
        Ok(Self { k, men_prefs, women_prefs, men_rank, women_rank, was_completed: completed })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of polytope rows: one per agent.
    pub fn n(&self) -> usize {
        2 * self.k
    }

    /// Number of valid-edge columns.
    pub fn num_valid_edges(&self) -> usize {
        self.k * self.k
    }

    pub fn num_columns(&self) -> usize {
        self.n() + self.num_valid_edges()
    }

    pub fn was_completed(&self) -> bool {
        self.was_completed
    }

    /// Man m's list, best first.
    pub fn man_prefs(&self, m: usize) -> &[usize] {
        &self.men_prefs[m]
    }

    pub fn woman_prefs(&self, w: usize) -> &[usize] {
        &self.women_prefs[w]
    }

    /// 0-based position of w in m's list.
    pub fn man_rank(&self, m: usize, w: usize) -> usize {
        self.men_rank[m][w]
    }

    pub fn woman_rank(&self, w: usize, m: usize) -> usize {
        self.women_rank[w][m]
    }

    /// Row index of man m.
    pub fn man_row(&self, m: usize) -> usize {
        m
    }

    /// Row index of woman w.
    pub fn woman_row(&self, w: usize) -> usize {
        self.k + w
    }

    pub fn edges(&self) -> EdgeIndex<'_> {
        EdgeIndex { inst: self }
    }
}

fn complete_side(
    k: usize,
    lists: Vec<Vec<usize>>,
    side: &'static str,
    completed: &mut bool,
) -> Result<Vec<Vec<usize>>, InstanceError> {
    if lists.len() != k {
        return Err(InstanceError::WrongListCount { expected: k, got: lists.len() });
    }
    let mut out = Vec::with_capacity(k);
    for (agent, list) in lists.into_iter().enumerate() {
        let mut seen = vec![false; k];
        for &p in &list {
            if p >= k {
                return Err(InstanceError::PartnerOutOfRange { side, agent, partner: p });
            }
            if seen[p] {
                return Err(InstanceError::DuplicateEntry { side, agent, partner: p });
            }
            seen[p] = true;
        }
        let mut full = list;
        if full.len() < k {
            *completed = true;
            full.extend((0..k).filter(|&p| !seen[p]));
        }
        out.push(full);
    }
    Ok(out)
}

fn ranks(k: usize, lists: &[Vec<usize>]) -> Vec<Vec<usize>> {
    lists
        .iter()
        .map(|list| {
            let mut rank = vec![0; k];
            for (pos, &p) in list.iter().enumerate() {
                rank[p] = pos;
            }
            rank
        })
        .collect()
}

/// What a column stands for in the edge-index convention: columns 0..n-1 are
/// the loops (men then women), and man m's valid edges occupy the contiguous
/// block starting at 2k + m*k, ordered best-to-worst by m's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    /// Loop at the agent occupying the given row.
    Loop(usize),
    Valid { man: usize, woman: usize },
}

/// The column <-> edge bijection for one instance.
#[derive(Debug, Clone, Copy)]
pub struct EdgeIndex<'a> {
    inst: &'a MarriageInstance,
}

impl<'a> EdgeIndex<'a> {
    pub fn n(&self) -> usize {
        self.inst.n()
    }

    pub fn num_columns(&self) -> usize {
        self.inst.num_columns()
    }

    /// Column of the loop at row (= agent) index `row`.
    pub fn loop_column(&self, row: usize) -> usize {
        row
    }

    pub fn valid_column(&self, man: usize, woman: usize) -> usize {
        let k = self.inst.k;
        2 * k + man * k + self.inst.man_rank(man, woman)
    }

    pub fn edge(&self, column: usize) -> Edge {
        let k = self.inst.k;
        if column < 2 * k {
            Edge::Loop(column)
        } else {
            let man = (column - 2 * k) / k;
            let pos = (column - 2 * k) % k;
            Edge::Valid { man, woman: self.inst.men_prefs[man][pos] }
        }
    }

    /// The rows (agents) a column's edge is incident to.
    pub fn rows(&self, column: usize) -> (usize, Option<usize>) {
        match self.edge(column) {
            Edge::Loop(row) => (row, None),
            Edge::Valid { man, woman } => (man, Some(self.inst.k + woman)),
        }
    }

    pub fn is_loop(&self, column: usize) -> bool {
        column < self.inst.n()
    }
}

/// The incidence system of the matching polytope with loop slack: n = 2k
/// rows, m = k^2 valid-edge columns, b all ones.
#[allow(clippy::needless_range_loop)]
pub fn build_system(inst: &MarriageInstance) -> StandardFormSystem {
    let n = inst.n();
    let m = inst.num_valid_edges();
    let edges = inst.edges();
    let mut a = vec![vec![Rational::zero(); n + m]; n];
    for col in 0..n + m {
        let (r1, r2) = edges.rows(col);
        a[r1][col] = Rational::one();
        if let Some(r2) = r2 {
            a[r2][col] = Rational::one();
        }
    }
    let b = vec![Rational::one(); n];
    StandardFormSystem::new(n, m, a, b).expect("incidence construction is always valid")
}

/// Value classes of C* entries for an instance of size k: the own loop (S),
/// incident valid edges (M), non-incident valid edges (L), foreign loops (XL).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueClass {
    S,
    M,
    L,
    Xl,
}

/// Classifies a C* entry value by row size k.
pub fn value_class(k: usize, value: i64) -> ValueClass {
    let k = k as i64;
    if value == 0 {
        ValueClass::S
    } else if value <= k {
        ValueClass::M
    } else if value <= k * k {
        ValueClass::L
    } else {
        ValueClass::Xl
    }
}

/// The consistent ordinal matrix C* of the construction: per row, the own
/// loop gets 0, incident valid edges get k+1-rank, non-incident valid edges
/// get the L values in decreasing column order, and foreign loops get the XL
/// values in decreasing column order.
#[allow(clippy::needless_range_loop)]
pub fn build_ordinal_matrix(inst: &MarriageInstance) -> OrdinalMatrix {
    let k = inst.k as i64;
    let n = inst.n();
    let cols = inst.num_columns();
    let edges = inst.edges();
    let mut entries = vec![vec![0i64; cols]; n];
    for row in 0..n {
        let mut next_l = k * k;
        let mut next_xl = k * k + 2 * k - 1;
        for col in 0..cols {
            entries[row][col] = match edges.edge(col) {
                Edge::Loop(r) if r == row => 0,
                Edge::Loop(_) => {
                    let v = next_xl;
                    next_xl -= 1;
                    v
                }
                Edge::Valid { man, woman } => {
                    if row == man {
                        k - inst.man_rank(man, woman) as i64
                    } else if row == inst.woman_row(woman) {
                        k - inst.woman_rank(woman, man) as i64
                    } else {
                        let v = next_l;
                        next_l -= 1;
                        v
                    }
                }
            };
        }
    }
    OrdinalMatrix::new(n, inst.num_valid_edges(), entries).expect("shape is correct by construction")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// The exponential family with 4-entry lists (k even).
    IrvingLeather,
    /// Uniformly random complete lists, deterministic in the seed.
    Random { seed: u64 },
    Fixture(Fixture),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    /// k=2: the worked C-matrix example.
    Example51,
    /// k=3: the instance with three stable matchings, one intermediate.
    Example83,
    /// k=10: the tabulated member of the exponential family.
    Table82,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error("this family requires even k, got {0}")]
    OddK(usize),
    #[error("k must be positive")]
    ZeroK,
    #[error("fixture has k={expected}, got k={got}")]
    FixtureSize { expected: usize, got: usize },
}

/// Builds a family member of size k. Fixtures carry their own size, which
/// must match `k`.
pub fn generate_family(kind: &FamilyKind, k: usize) -> Result<MarriageInstance, GenerateError> {
    if k == 0 {
        return Err(GenerateError::ZeroK);
    }
    match kind {
        FamilyKind::IrvingLeather => irving_leather(k),
        FamilyKind::Random { seed } => Ok(random_instance(k, *seed)),
        FamilyKind::Fixture(f) => {
            let inst = fixture(*f);
            if inst.k() != k {
                return Err(GenerateError::FixtureSize { expected: inst.k(), got: k });
            }
            Ok(inst)
        }
    }
}

/// The family with exponentially many stable matchings: man i lists
/// w_i, w_{i+1}, w_{i+k/2+1}, w_{i+k/2+2} (mod k, first occurrence kept when
/// offsets collide at small k); woman j ranks the men listing her in reverse
/// position order. Missing partners are appended at the end in index order.
pub fn irving_leather(k: usize) -> Result<MarriageInstance, GenerateError> {
    if !k.is_multiple_of(2) {
        return Err(GenerateError::OddK(k));
    }
    let half = k / 2;
    let men: Vec<Vec<usize>> = (0..k)
        .map(|i| {
            let mut list = dedup_mod(k, &[i, i + 1, i + half + 1, i + half + 2]);
            let seen: Vec<bool> = (0..k).map(|w| list.contains(&w)).collect();
            list.extend((0..k).filter(|&w| !seen[w]));
            list
        })
        .collect();
    // Woman j lists man i at position 5-l when man i lists her at position
    // l <= 4; collecting men by descending position realizes that. Only the
    // leading four positions count, so small-k collisions resolved by the
    // completion above keep the rotation structure of the large-k family.
    let mut listed_by: Vec<Vec<(usize, usize)>> = vec![Vec::new(); k];
    for (m, list) in men.iter().enumerate() {
        for (pos, &w) in list.iter().take(4).enumerate() {
            listed_by[w].push((pos, m));
        }
    }
    let women: Vec<Vec<usize>> = listed_by
        .into_iter()
        .map(|mut entries| {
            entries.sort_by_key(|&(pos, m)| (std::cmp::Reverse(pos), m));
            entries.into_iter().map(|(_, m)| m).collect()
        })
        .collect();
    Ok(MarriageInstance::new(men, women).expect("formula lists are valid"))
}

fn dedup_mod(k: usize, entries: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    for &e in entries {
        let e = e % k;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

pub fn random_instance(k: usize, seed: u64) -> MarriageInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = |_: usize| -> Vec<Vec<usize>> {
        (0..k)
            .map(|_| {
                let mut list: Vec<usize> = (0..k).collect();
                list.shuffle(&mut rng);
                list
            })
            .collect()
    };
    let men = side(0);
    let women = side(1);
    MarriageInstance::new(men, women).expect("shuffled lists are permutations")
}

pub fn fixture(which: Fixture) -> MarriageInstance {
    let (men, women): (Vec<Vec<usize>>, Vec<Vec<usize>>) = match which {
        Fixture::Example51 => (
            vec![vec![1, 0], vec![0, 1]],
            vec![vec![1, 0], vec![0, 1]],
        ),
        Fixture::Example83 => (
            vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            vec![vec![1, 2, 0], vec![2, 0, 1], vec![0, 1, 2]],
        ),
        Fixture::Table82 => {
            // The k=10 table of the exponential family, transcribed verbatim
            // (0-based agent numbers; partial lists completed on load).
            let men = vec![
                vec![0, 1, 6, 7],
                vec![1, 2, 7, 8],
                vec![2, 3, 8, 9],
                vec![3, 4, 9, 0],
                vec![4, 5, 0, 1],
                vec![5, 6, 1, 2],
                vec![6, 7, 2, 3],
                vec![7, 8, 3, 4],
                vec![8, 9, 4, 5],
                vec![9, 0, 5, 6],
            ];
            let women = vec![
                vec![3, 4, 9, 0],
                vec![4, 5, 0, 1],
                vec![5, 6, 1, 2],
                vec![6, 7, 2, 3],
                vec![7, 8, 3, 4],
                vec![8, 9, 4, 5],
                vec![9, 0, 5, 6],
                vec![0, 1, 6, 7],
                vec![1, 2, 7, 8],
                vec![2, 3, 8, 9],
            ];
            (men, women)
        }
    };
    MarriageInstance::new(men, women).expect("fixtures are valid")
}
