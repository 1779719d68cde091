//! Exterior-calculus engine for variational principles on fibered
//! coordinate spaces.
//!
//! The crate is layered bottom-up:
//!
//! * [`symexpr`]: exact symbolic scalars (the coefficient field).
//! * [`forms`]: charts, differential forms, vector fields and sections.
//! * [`ideals`]: Cartan ideals, annihilators and Frobenius checks.
//! * [`decomp`]: factorized (decomposable) forms and their normal forms.
//! * [`varprin`]: variational problems, classification and critical
//!   equations.
//! * [`flows`]: numeric integration of characteristic distributions.
//! * [`liouville`]: Liouville dynamics and the homotopy operator.
//! * [`spec`], [`fixtures`], [`report`]: problem files, the bundled worked
//!   examples and the report layer shared with the command-line tool.

pub mod error;
pub mod flows;
pub mod decomp;
pub mod fixtures;
pub mod forms;
pub mod ideals;
pub mod linalg;
pub mod liouville;
pub mod report;
pub mod sampling;
pub mod spec;
pub mod varprin;
pub mod symexpr;
#[cfg(test)]
mod testkit;

pub use error::{Error, Point, Result};
pub use sampling::{SampleBox, Sampler};
pub use symexpr::{parse, ScalarExpr};
