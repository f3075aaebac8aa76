pub mod association;
pub mod dynamics;
pub mod error;
pub mod fov;
pub mod gallery;
pub mod generation;
pub mod model;
pub mod numerics;
pub mod report;
pub mod structure;

pub use error::{Error, Result};
pub use model::{h_coordinates, load_problem, normalize, Certificate, FormSystem, RawProblem, Verdict};
pub use numerics::{ComplexMatrix, ComplexVector, Subspace, ToleranceConfig};
