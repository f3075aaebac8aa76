use serde::{Deserialize, Serialize};

use crate::numerics::encoding::opt_vector;
use crate::numerics::ComplexVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
}

/// Outcome of a single check together with the evidence behind it.
///
/// `margin` is check-specific (its meaning is documented at each producer);
/// larger is more robust. A witness vector is attached exactly when the
/// check fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub operation: String,
    pub verdict: Verdict,
    pub margin: f64,
    pub tolerance: f64,
    #[serde(with = "opt_vector")]
    pub witness: Option<ComplexVector>,
}

/// JSON has no infinities; keep margins representable.
fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(f64::MIN, f64::MAX)
    }
}

impl Certificate {
    pub fn holds(operation: &str, margin: f64, tolerance: f64) -> Self {
        Certificate {
            operation: operation.to_string(),
            verdict: Verdict::Holds,
            margin: finite(margin),
            tolerance,
            witness: None,
        }
    }

    pub fn fails(operation: &str, margin: f64, tolerance: f64, witness: ComplexVector) -> Self {
        Certificate {
            operation: operation.to_string(),
            verdict: Verdict::Fails,
            margin: finite(margin),
            tolerance,
            witness: Some(witness),
        }
    }

    /// Builds a certificate from a boolean verdict; the witness is only
    /// computed on failure.
    pub fn decide(
        operation: &str,
        holds: bool,
        margin: f64,
        tolerance: f64,
        witness: impl FnOnce() -> ComplexVector,
    ) -> Self {
        if holds {
            Self::holds(operation, margin, tolerance)
        } else {
            Self::fails(operation, margin, tolerance, witness())
        }
    }

    pub fn is_holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}
