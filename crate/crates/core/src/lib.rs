//! Successive convex relaxations of linear complementarity problems.
//!
//! The crate covers LCP instances and a brute-force pattern oracle
//! ([`instance`], [`oracle`]), the problem encodings used by the
//! relaxations ([`formulations`]), the lift operators and hierarchy
//! drivers ([`relaxation`]), and facet-based disjunctive strengthening
//! ([`disjunctive`]). Everything runs on a small dense simplex ([`lp`]).

// index loops mirror the matrix formulas they implement
#![allow(clippy::needless_range_loop)]

pub mod cone;
pub mod disjunctive;
pub mod error;
pub mod formulations;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod polytope;
pub mod quadratic;
pub mod relaxation;

pub use error::{Error, InstanceError, LpError, Result};
pub use instance::{LcpInstance, LcpSolution};
pub use polytope::{FacetList, Support};
