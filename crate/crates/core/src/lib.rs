#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cs;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod matcomp;
pub mod prox;
pub mod splitting;
pub mod testing;

pub use datagen::RngSeed;
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, ObservationSet};
pub use splitting::{RunStatus, StepSize, StoppingRule};
