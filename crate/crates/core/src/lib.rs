//! Numerical laboratory for the restricted discrete quadratic Carleson operator:
//! quadratic Weyl-sum multipliers, complete Gauss sums, major-arc approximants,
//! oscillatory integrals, arithmetic-Minkowski Cantor sets and maximal-operator probes.

pub mod arithmetic;
pub mod bump;
pub mod oscillatory;
pub mod phase;
pub mod multiplier;
pub mod operators;
pub mod stats;
pub mod lambda_sets;
