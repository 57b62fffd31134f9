//! Scarf's pivoting algorithm for computing dominating vertices of
//! standard-form down-monotone polytopes, specialized to bipartite stable
//! matching with a polynomial pivoting rule and a symbolic perturbation
//! scheme, plus independent oracles (Gale-Shapley, brute force, rotations)
//! used to cross-check every step.

pub mod engine;
pub mod io;
pub mod marriage;
pub mod oracle;
pub mod ordinal;
pub mod perturb;
pub mod polytope;
pub mod trace;

pub use num_rational::BigRational as Rational;
