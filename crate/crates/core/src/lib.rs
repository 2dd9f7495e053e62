//! Numerical companion for sharp singular Trudinger-Moser inequalities on the
//! Heisenberg group `H^n`: group geometry, sub-elliptic calculus, covering
//! nets, cutoffs, quadrature, the functional itself, Moser extremal families
//! and the local-to-global gluing argument.

// `!(x > 0.0)` is the idiom used to reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod covering;
pub mod cutoff;
pub mod error;
pub mod functional;
pub mod gluing;
pub mod hgroup;
pub mod moser;
pub mod quadrature;

pub use error::{Error, Result};
pub use hgroup::{GroupDim, HBall, HBox, HPoint};
