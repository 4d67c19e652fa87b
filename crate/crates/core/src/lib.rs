//! Jet-based verification of explicit solutions to p-Laplace type equations
//! on the Heisenberg group and on Grushin-type planes.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod jet;
pub mod operators;
pub mod solutions;
pub mod suite;

pub use error::{Error, Result};
pub use geometry::{HorizontalFrame, Space, SpaceParams};
pub use jet::{CJet1, CJet2, C64};
pub use operators::{OperatorTag, ResidualValue};
pub use solutions::{FamilyTag, SolutionFamily};
