//! Quadratic operators on the standard simplex.
//!
//! A cubic matrix `P[i][j][k]` defines the quadratic map
//! `x'_k = sum_{i,j} P[i][j][k] x_i x_j`. This crate checks when such a map
//! sends the simplex into itself, iterates it, and analyses the resulting
//! dynamics: fixed points and their stability, periodic orbits, Lyapunov
//! exponents, logistic conjugacies and invariant-set decompositions of a few
//! named two-dimensional examples.
//!
//! ```
//! use qnso::models::ModelSpec;
//! use qnso::operator::SimplexPoint;
//!
//! let v3 = ModelSpec::v3(1.0).unwrap().build();
//! let s4 = SimplexPoint::new(vec![1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]).unwrap();
//! let image = v3.apply(&s4).unwrap();
//! for (a, b) in image.iter().zip(s4.coords()) {
//!     assert!((a - b).abs() < 1e-15);
//! }
//! ```
//!
//! The `book/` directory at the workspace root walks through the concepts;
//! every snippet there is compiled and run as a doc-test of this crate.

// `!(x < tol)` is used on purpose so that NaN counts as a failure
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cubic;
pub mod dynamics;
mod error;
pub mod models;
pub mod operator;

pub use cubic::{check_conditions, check_edge_necessity, CubicMatrix, ConditionReport};
pub use error::{Error, Result};
pub use operator::{SimplexPoint, Trajectory};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cubic-matrices.md")]
    mod cubic_matrices {}
    #[doc = include_str!("../../../book/src/preservation-oracle.md")]
    mod preservation_oracle {}
    #[doc = include_str!("../../../book/src/fixed-points.md")]
    mod fixed_points {}
    #[doc = include_str!("../../../book/src/one-dimensional.md")]
    mod one_dimensional {}
    #[doc = include_str!("../../../book/src/splitted-chaos.md")]
    mod splitted_chaos {}
    #[doc = include_str!("../../../book/src/invariant-sets.md")]
    mod invariant_sets {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
