//! Numerical laboratory for the tilted displacement functional
//! `J(x, y) = ‖x − f(x)‖ − ‖y − f(x)‖` on closed convex unbounded subsets of
//! finite-dimensional normed spaces.
//!
//! The crate evaluates and globally minimizes `J(·, y)`, certifies (on
//! samples) that the minimizer is unique, locates fixed points of `f` as
//! minimizers of `Φ(x) = sup_y J(x, y) = ‖x − f(x)‖`, checks the associated
//! saddle inequalities and minimax equality, and sweeps map families for
//! instances with several global minima.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod functional;
pub mod linalg;
pub mod maps;
pub mod optimize;
pub mod spaces;

pub use error::{Error, Result};
pub use functional::{GenericBifunctional, TiltedFunctional};
pub use linalg::Matrix;
pub use maps::{analytic_fixed_point, evaluate, growth_coefficient, GrowthEstimate, MapSpec};
pub use optimize::{brute_force_minima, global_minimize, MinimizationResult, OptimizeConfig};
pub use spaces::{Exponent, FeasibleSet, NormSpec, SampleDomain};
