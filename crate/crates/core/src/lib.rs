//! Numerical laboratory for Liouville-type theorems of regular Dirichlet
//! forms on weighted graphs and one-dimensional meshes.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod family;
pub mod fit;
pub mod form;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod liouville;
pub mod metric;
pub mod recurrence;
pub mod semigroup;
pub mod verify;

pub use config::Tolerances;
pub use error::{LabError, Result};
pub use form::{DirichletFormModel, JumpKernel, LocalPart, ReferenceMeasure, StateSpace};
pub use metric::MetricField;
