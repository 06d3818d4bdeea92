//! Multipliers, quasimultipliers and operator-algebra products on
//! finite-dimensional concrete operator spaces.
//!
//! The crate computes relative and envelope-based multiplier spaces by exact
//! linear algebra, decides whether a bilinear product is induced by a
//! contractive quasimultiplier through minimum-norm semidefinite solves,
//! certifies complete contractivity of linear maps through Choi-matrix
//! feasibility on the Paulsen system, and analyzes linear complete
//! isometries between operator algebras.

pub mod banachstone;
pub mod catalog;
pub mod cpcone;
pub mod error;
pub mod mult;
pub mod numerics;
pub mod opspace;
pub mod product;
pub mod sdp;

pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, SubspaceBasis, Tolerances, C64};
pub use opspace::{EnvelopeEmbedding, OperatorSpace};
pub use product::BilinearProduct;

