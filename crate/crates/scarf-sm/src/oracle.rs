//! Independent ground truth for the solver: deferred acceptance, blocking
//! pair scans, exhaustive and rotation-based enumeration of stable
//! matchings, v-optimality classification, and standalone dominating-basis
//! and consistency checks. Nothing here reuses the pivoting code paths, so
//! agreement between the two sides is meaningful evidence.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::marriage::{MarriageInstance, Matching};
use crate::ordinal::OrdinalMatrix;
use crate::polytope::StandardFormSystem;
use crate::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("matching is over k={got} agents, instance has k={expected}")]
    MalformedMatching { expected: usize, got: usize },
    #[error("matching is not stable: blocked by ({man}, {woman})")]
    NotStable { man: usize, woman: usize },
    #[error("enumeration exceeds the cap of {limit} matchings")]
    TooLarge { limit: usize },
}

/// Cap for brute-force enumeration: k! grows past 10^4 beyond this point.
pub const BRUTE_FORCE_MAX_K: usize = 7;
/// Cap on the number of matchings the rotation search will collect.
pub const ROTATION_ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposingSide {
    Men,
    Women,
}

/// Whether man m and woman w block `mu`: each strictly prefers the other to
/// their current situation (being unmatched is worse than any partner).
fn blocks(inst: &MarriageInstance, mu: &Matching, man: usize, woman: usize) -> bool {
    let man_gains = match mu.woman_of(man) {
        None => true,
        Some(cur) => inst.man_rank(man, woman) < inst.man_rank(man, cur),
    };
    if !man_gains {
        return false;
    }
    match mu.man_of(woman) {
        None => true,
        Some(cur) => inst.woman_rank(woman, man) < inst.woman_rank(woman, cur),
    }
}

/// Lexicographically first blocking pair, if any.
pub fn first_blocking_pair(inst: &MarriageInstance, mu: &Matching) -> Option<(usize, usize)> {
    let k = inst.k();
    (0..k).flat_map(|m| (0..k).map(move |w| (m, w))).find(|&(m, w)| blocks(inst, mu, m, w))
}

/// Stability check: Ok(None) if stable, Ok(Some(pair)) with the first
/// blocking pair otherwise.
pub fn is_stable(inst: &MarriageInstance, mu: &Matching) -> Result<Option<(usize, usize)>, OracleError> {
    if mu.k() != inst.k() {
        return Err(OracleError::MalformedMatching { expected: inst.k(), got: mu.k() });
    }
    Ok(first_blocking_pair(inst, mu))
}

/// Classical deferred acceptance. Men proposing yields the man-optimal
/// stable matching mu_0; women proposing yields the woman-optimal mu_z.
pub fn gale_shapley(inst: &MarriageInstance, side: ProposingSide) -> Matching {
    let k = inst.k();
    let (prefs, rank): (Vec<&[usize]>, &dyn Fn(usize, usize) -> usize) = match side {
        ProposingSide::Men => ((0..k).map(|m| inst.man_prefs(m)).collect(), &|r, p| inst.woman_rank(r, p)),
        ProposingSide::Women => ((0..k).map(|w| inst.woman_prefs(w)).collect(), &|r, p| inst.man_rank(r, p)),
    };
    let mut next_proposal = vec![0usize; k];
    let mut engaged_to: Vec<Option<usize>> = vec![None; k]; // receiver -> proposer
    let mut free: VecDeque<usize> = (0..k).collect();
    while let Some(p) = free.pop_front() {
        let r = prefs[p][next_proposal[p]];
        next_proposal[p] += 1;
        match engaged_to[r] {
            None => engaged_to[r] = Some(p),
            Some(cur) if rank(r, p) < rank(r, cur) => {
                engaged_to[r] = Some(p);
                free.push_back(cur);
            }
            Some(_) => free.push_back(p),
        }
    }
    let pairs: Vec<(usize, usize)> = engaged_to
        .iter()
        .enumerate()
        .map(|(r, p)| {
            let p = p.expect("complete lists leave nobody unmatched");
            match side {
                ProposingSide::Men => (p, r),
                ProposingSide::Women => (r, p),
            }
        })
        .collect();
    Matching::from_pairs(k, &pairs).expect("deferred acceptance yields a matching")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerationMethod {
    BruteForce,
    Rotations,
}

/// All stable matchings of the instance, canonically sorted by pair list.
/// Complete lists make every stable matching perfect, so brute force ranges
/// over the k! perfect matchings (k <= 7); the rotation method walks the
/// elimination order from the man-optimal matching.
pub fn enumerate_stable(
    inst: &MarriageInstance,
    method: EnumerationMethod,
) -> Result<Vec<Matching>, OracleError> {
    match method {
        EnumerationMethod::BruteForce => {
            if inst.k() > BRUTE_FORCE_MAX_K {
                return Err(OracleError::TooLarge { limit: BRUTE_FORCE_MAX_K });
            }
            let mut found = Vec::new();
            let mut partner = vec![usize::MAX; inst.k()];
            let mut used = vec![false; inst.k()];
            brute_force_scan(inst, 0, &mut partner, &mut used, &mut found);
            found.sort_by_key(Matching::pairs);
            Ok(found)
        }
        EnumerationMethod::Rotations => {
            let mut seen: BTreeMap<Vec<(usize, usize)>, Matching> = BTreeMap::new();
            let mu0 = gale_shapley(inst, ProposingSide::Men);
            let mut queue = VecDeque::from([mu0.clone()]);
            seen.insert(mu0.pairs(), mu0);
            while let Some(mu) = queue.pop_front() {
                for rho in exposed_rotations(inst, &mu)? {
                    let next = eliminate_rotation(&mu, &rho);
                    if seen.len() >= ROTATION_ENUMERATION_CAP {
                        return Err(OracleError::TooLarge { limit: ROTATION_ENUMERATION_CAP });
                    }
                    if seen.insert(next.pairs(), next.clone()).is_none() {
                        queue.push_back(next);
                    }
                }
            }
            Ok(seen.into_values().collect())
        }
    }
}

fn brute_force_scan(
    inst: &MarriageInstance,
    man: usize,
    partner: &mut Vec<usize>,
    used: &mut Vec<bool>,
    found: &mut Vec<Matching>,
) {
    let k = inst.k();
    if man == k {
        let pairs: Vec<(usize, usize)> = partner.iter().copied().enumerate().collect();
        let mu = Matching::from_pairs(k, &pairs).expect("permutation");
        if first_blocking_pair(inst, &mu).is_none() {
            found.push(mu);
        }
        return;
    }
    for w in 0..k {
        if !used[w] {
            used[w] = true;
            partner[man] = w;
            brute_force_scan(inst, man + 1, partner, used, found);
            used[w] = false;
        }
    }
}

/// A rotation: the cyclic sequence (m_0, w_0), ..., (m_{r-1}, w_{r-1}) with
/// w_j = mu(m_j) and s_mu(m_j) = w_{j+1}. Stored starting from the smallest
/// man so equal rotations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Rotation {
    pairs: Vec<(usize, usize)>,
}

impl Rotation {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// s_mu(m): the first woman after mu(m) on m's list who prefers m to her own
/// partner. None when no such woman exists (m is then in no exposed
/// rotation).
fn successor_woman(inst: &MarriageInstance, mu: &Matching, man: usize) -> Option<usize> {
    let cur = mu.woman_of(man).expect("stable matchings on complete lists are perfect");
    let start = inst.man_rank(man, cur) + 1;
    inst.man_prefs(man)[start..].iter().copied().find(|&w| {
        let hers = mu.man_of(w).expect("perfect");
        inst.woman_rank(w, man) < inst.woman_rank(w, hers)
    })
}

/// All rotations exposed at the stable matching `mu`: the cycles of the map
/// m -> mu-partner of s_mu(m). Cycles of a function are vertex-disjoint by
/// construction; this is asserted.
pub fn exposed_rotations(inst: &MarriageInstance, mu: &Matching) -> Result<Vec<Rotation>, OracleError> {
    if let Some((man, woman)) = is_stable(inst, mu)? {
        return Err(OracleError::NotStable { man, woman });
    }
    let k = inst.k();
    let next: Vec<Option<usize>> = (0..k)
        .map(|m| successor_woman(inst, mu, m).map(|w| mu.man_of(w).expect("perfect")))
        .collect();
    let mut rotations = Vec::new();
    let mut on_some_cycle = vec![false; k];
    for start in 0..k {
        if on_some_cycle[start] {
            continue;
        }
        // Follow the map until it stalls or revisits; a cycle through
        // `start` is a rotation exactly when the walk returns to it.
        let mut walk = vec![start];
        let mut seen_at = BTreeMap::from([(start, 0usize)]);
        let cycle = loop {
            let Some(m) = next[*walk.last().expect("nonempty")] else { break None };
            if on_some_cycle[m] {
                // The walk drained into a cycle already recorded.
                break None;
            }
            if let Some(&pos) = seen_at.get(&m) {
                break Some(&walk[pos..]);
            }
            seen_at.insert(m, walk.len());
            walk.push(m);
        };
        let Some(cycle) = cycle else { continue };
        if cycle[0] != *cycle.iter().min().expect("nonempty") {
            // The cycle will be found again from its smallest member.
            continue;
        }
        for &m in cycle {
            assert!(!on_some_cycle[m], "exposed rotations must be vertex-disjoint");
            on_some_cycle[m] = true;
        }
        let pairs = cycle
            .iter()
            .map(|&m| (m, mu.woman_of(m).expect("perfect")))
            .collect();
        rotations.push(Rotation { pairs });
    }
    rotations.sort();
    Ok(rotations)
}

/// Eliminates an exposed rotation: each man in the cycle moves on to the
/// next woman of the cycle; everyone else keeps their partner.
pub fn eliminate_rotation(mu: &Matching, rho: &Rotation) -> Matching {
    let k = mu.k();
    let mut pairs: BTreeMap<usize, usize> = mu.pairs().into_iter().collect();
    let r = rho.pairs.len();
    for (j, &(man, _)) in rho.pairs.iter().enumerate() {
        let (_, next_woman) = rho.pairs[(j + 1) % r];
        pairs.insert(man, next_woman);
    }
    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    Matching::from_pairs(k, &pairs).expect("rotation elimination permutes partners")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// The agents for whom the matching is best among all stable matchings.
    VOptimal { men: Vec<usize>, women: Vec<usize> },
    Intermediate,
}

/// Classifies a stable matching by full enumeration: v-optimal with the set
/// of witnessing agents, or intermediate when no agent does best here.
pub fn classify(inst: &MarriageInstance, mu: &Matching) -> Result<Classification, OracleError> {
    if let Some((man, woman)) = is_stable(inst, mu)? {
        return Err(OracleError::NotStable { man, woman });
    }
    let all = enumerate_stable(inst, preferred_method(inst))?;
    let k = inst.k();
    let mut men = Vec::new();
    let mut women = Vec::new();
    for m in 0..k {
        let best = all
            .iter()
            .map(|s| inst.man_rank(m, s.woman_of(m).expect("perfect")))
            .min()
            .expect("at least one stable matching");
        if inst.man_rank(m, mu.woman_of(m).expect("perfect")) == best {
            men.push(m);
        }
    }
    for w in 0..k {
        let best = all
            .iter()
            .map(|s| inst.woman_rank(w, s.man_of(w).expect("perfect")))
            .min()
            .expect("at least one stable matching");
        if inst.woman_rank(w, mu.man_of(w).expect("perfect")) == best {
            women.push(w);
        }
    }
    if men.is_empty() && women.is_empty() {
        Ok(Classification::Intermediate)
    } else {
        Ok(Classification::VOptimal { men, women })
    }
}

fn preferred_method(inst: &MarriageInstance) -> EnumerationMethod {
    if inst.k() <= BRUTE_FORCE_MAX_K {
        EnumerationMethod::BruteForce
    } else {
        EnumerationMethod::Rotations
    }
}

/// Dominating-basis check by direct definition, sharing no code with the
/// pivoting modules: the column set must index an invertible, feasible basis
/// of (A, b) and must row-wise dominate every outside column of C.
#[allow(clippy::needless_range_loop)]
pub fn check_dominating(sys: &StandardFormSystem, c: &OrdinalMatrix, columns: &[usize]) -> bool {
    let n = sys.n();
    let mut cols: Vec<usize> = columns.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != n || cols.iter().any(|&j| j >= sys.num_columns()) {
        return false;
    }
    // Feasibility: solve A_B x_B = b by plain Gauss-Jordan elimination.
    let mut tableau: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            cols.iter()
                .map(|&j| sys.entry(i, j).clone())
                .chain(std::iter::once(sys.rhs()[i].clone()))
                .collect()
        })
        .collect();
    for col in 0..n {
        let Some(pivot_row) = (col..n).find(|&r| !tableau[r][col].is_zero()) else {
            return false; // singular
        };
        tableau.swap(col, pivot_row);
        let pivot = tableau[col][col].clone();
        for entry in &mut tableau[col] {
            *entry = &*entry / &pivot;
        }
        for r in 0..n {
            if r != col && !tableau[r][col].is_zero() {
                let factor = tableau[r][col].clone();
                for j in 0..=n {
                    let delta = &factor * &tableau[col][j];
                    tableau[r][j] = &tableau[r][j] - delta;
                }
            }
        }
    }
    if (0..n).any(|i| tableau[i][n].is_negative()) {
        return false;
    }
    // Ordinal-basis condition: every outside column is beaten by some row's
    // utility, and the row minimizers are pairwise distinct.
    let utility: Vec<i64> = (0..n)
        .map(|i| cols.iter().map(|&j| c.entry(i, j)).min().expect("n >= 1"))
        .collect();
    let minimizers: BTreeSet<usize> = (0..n)
        .map(|i| {
            *cols
                .iter()
                .find(|&&j| c.entry(i, j) == utility[i])
                .expect("minimum is attained")
        })
        .collect();
    if minimizers.len() != n {
        return false;
    }
    (0..c.num_columns())
        .filter(|j| cols.binary_search(j).is_err())
        .all(|h| (0..n).any(|i| c.entry(i, h) <= utility[i]))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConsistencyViolation {
    #[error("column {col}: incident row {row_in} has value {v_in} >= non-incident row {row_out}'s {v_out}")]
    CrossRow { col: usize, row_in: usize, row_out: usize, v_in: i64, v_out: i64 },
    #[error("row {row}: order of incident columns {col_a}, {col_b} contradicts the preference list")]
    PreferenceOrder { row: usize, col_a: usize, col_b: usize },
}

/// Consistency of an ordinal matrix with the instance: (i) incident rows
/// carry smaller values than non-incident rows in every column; (ii) within
/// a row, incident columns are ordered exactly by the agent's preference
/// list, with the own loop worst.
pub fn check_consistency(inst: &MarriageInstance, c: &OrdinalMatrix) -> Result<(), ConsistencyViolation> {
    let n = inst.n();
    let edges = inst.edges();
    for col in 0..inst.num_columns() {
        let (a, b) = edges.rows(col);
        let incident: Vec<usize> = [Some(a), b].into_iter().flatten().collect();
        for &row_in in &incident {
            for row_out in (0..n).filter(|r| !incident.contains(r)) {
                let (v_in, v_out) = (c.entry(row_in, col), c.entry(row_out, col));
                if v_in >= v_out {
                    return Err(ConsistencyViolation::CrossRow { col, row_in, row_out, v_in, v_out });
                }
            }
        }
    }
    for row in 0..n {
        // Incident columns from most to least preferred, own loop last; the
        // row's values must strictly decrease along it.
        let ordered: Vec<usize> = if row < inst.k() {
            inst.man_prefs(row)
                .iter()
                .map(|&w| edges.valid_column(row, w))
                .chain(std::iter::once(row))
                .collect()
        } else {
            let w = row - inst.k();
            inst.woman_prefs(w)
                .iter()
                .map(|&m| edges.valid_column(m, w))
                .chain(std::iter::once(row))
                .collect()
        };
        for pair in ordered.windows(2) {
            if c.entry(row, pair[0]) <= c.entry(row, pair[1]) {
                return Err(ConsistencyViolation::PreferenceOrder { row, col_a: pair[0], col_b: pair[1] });
            }
        }
    }
    Ok(())
}
