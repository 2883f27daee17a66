//! Symbolic-numeric engine for the covariant Hamilton geometry of the dual
//! 1-jet space `J^{1*}(R, M)` with coordinates `(t, x^i, p_i)`.
//!
//! The crate builds the geometric objects of the theory as exact symbolic
//! expressions (Christoffel symbols, canonical semisprays of momenta, nonlinear
//! connections, adapted frames) and verifies every transformation law they are
//! supposed to obey by evaluating both sides at sample points.
//!
//! Layout:
//!
//! * [`expr`]: expression trees, parsing, differentiation, evaluation
//! * [`jetspace`]: coordinate changes and their transition factors
//! * [`metrics`]: the metric pair `(h_11(t), φ_ij(x))` and Christoffel symbols
//! * [`dtensor`]: distinguished tensors and their transformation law
//! * [`spray`]: temporal and spatial semisprays of momenta
//! * [`nlconn`]: nonlinear connections
//! * [`frames`]: adapted bases, duality and direct-sum decompositions
//! * [`report`]: per-point residual records shared by all verifiers

pub mod dtensor;
pub mod error;
pub mod expr;
pub mod frames;
pub mod jetspace;
pub(crate) mod linalg;
pub mod metrics;
pub mod nlconn;
pub mod report;
pub mod sampling;
pub mod spray;
pub mod testing;

pub use error::{Error, Result};
pub use expr::{parse, Expr, Point, Var};
pub use jetspace::{CoordChange, TransitionData};
pub use report::{Record, Report};

/// Closed-form inverses and Christoffel symbols are provided up to this dimension.
pub const MAX_DIM: usize = 4;
