//! Problem-file driver for `jetham-core`.
//!
//! A problem file names a metric pair, a list of charts and a set of sample
//! points. The commands build the canonical objects of the pair and check
//! their transformation laws between the base chart and every listed chart.

pub mod app;
pub mod commands;
pub mod error;
pub mod point;
pub mod problem;

pub use app::run;
pub use commands::{verify, Perturbation, Suite, VerifyOptions};
pub use error::{CliError, Result};
pub use point::parse_point;
pub use problem::{Problem, ProblemFile};
