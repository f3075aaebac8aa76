use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thresholds used for every numerical decision.
///
/// * `rank_rtol`: singular values below `rank_rtol * scale` count as zero.
/// * `angle_tol`: two subspaces are equal when all principal angles are below it.
/// * `residual_tol`: bound on residuals of solves and semidefinite tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub rank_rtol: f64,
    pub angle_tol: f64,
    pub residual_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_rtol: 1e-10,
            angle_tol: 1e-8,
            residual_tol: 1e-9,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank_rtol", self.rank_rtol),
            ("angle_tol", self.angle_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "tolerance {name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ToleranceConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let tol = ToleranceConfig {
            rank_rtol: 0.0,
            ..Default::default()
        };
        assert!(tol.validate().is_err());
        let tol = ToleranceConfig {
            angle_tol: 1.5,
            ..Default::default()
        };
        assert!(tol.validate().is_err());
    }
}
