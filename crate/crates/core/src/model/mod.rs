//! Problem ingestion and the central [`FormSystem`] type.

mod certificate;
mod problem;
mod system;

pub use certificate::{Certificate, Verdict};
pub use problem::{h_coordinates, load_problem, normalize, RawProblem};
pub use system::FormSystem;
