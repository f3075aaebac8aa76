//! Dense complex linear algebra with explicit tolerances.
//!
//! Every rank decision in the crate goes through this module, so that the
//! set-theoretic statements made elsewhere (ranges, kernels, preimages,
//! containment) are thresholded consistently.

pub mod encoding;
pub mod linalg;
pub mod subspace;
mod tolerance;

pub use linalg::{ComplexMatrix, ComplexVector};
pub use subspace::{
    complement, image, intersect, kernel, kernel_scaled, orthonormal_range, orthonormal_range_scaled,
    preimage, subspace_relation, sum, Relation, Subspace, SubspaceRelation,
};
pub use tolerance::ToleranceConfig;
