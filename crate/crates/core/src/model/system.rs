use serde::{Deserialize, Serialize};

use super::Certificate;
use crate::error::{Error, Result};
use crate::numerics::encoding::matrix;
use crate::numerics::linalg::{is_finite, min_hermitian_eigenvalue, svd};
use crate::numerics::{ComplexMatrix, ComplexVector, ToleranceConfig};

/// A form `a(u, v) = v* T0 u` on `V = C^dim_V` together with a linking map
/// `J: V -> H = C^dim_H`, both in orthonormal coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormSystem {
    #[serde(with = "matrix")]
    t0: ComplexMatrix,
    #[serde(with = "matrix")]
    j: ComplexMatrix,
    tolerances: ToleranceConfig,
}

impl FormSystem {
    pub fn new(t0: ComplexMatrix, j: ComplexMatrix, tolerances: ToleranceConfig) -> Result<Self> {
        tolerances.validate()?;
        if !t0.is_square() {
            return Err(Error::dims(format!("T0 is {}x{}, expected square", t0.nrows(), t0.ncols())));
        }
        if j.ncols() != t0.nrows() {
            return Err(Error::dims(format!(
                "J has {} columns but dim_V = {}",
                j.ncols(),
                t0.nrows()
            )));
        }
        if !is_finite(&t0) || !is_finite(&j) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(FormSystem { t0, j, tolerances })
    }

    pub fn dim_v(&self) -> usize {
        self.t0.nrows()
    }

    pub fn dim_h(&self) -> usize {
        self.j.nrows()
    }

    pub fn t0(&self) -> &ComplexMatrix {
        &self.t0
    }

    pub fn j(&self) -> &ComplexMatrix {
        &self.j
    }

    pub fn tolerances(&self) -> &ToleranceConfig {
        &self.tolerances
    }

    pub fn with_tolerances(mut self, tolerances: ToleranceConfig) -> Self {
        self.tolerances = tolerances;
        self
    }

    /// `T = T0 + J* J`, the operator of `b(u, v) = a(u, v) + <Ju, Jv>`.
    pub fn derived_t(&self) -> ComplexMatrix {
        &self.t0 + self.j.adjoint() * &self.j
    }

    /// `J*`, mapping `H` into `V`.
    pub fn adjoint_j(&self) -> ComplexMatrix {
        self.j.adjoint()
    }

    /// `a(u, v)`.
    pub fn form(&self, u: &ComplexVector, v: &ComplexVector) -> num_complex::Complex64 {
        v.dotc(&(&self.t0 * u))
    }

    /// Accretivity: smallest eigenvalue of `(T0 + T0*)/2` is at least
    /// `-residual_tol`. Margin is that eigenvalue; the witness is its
    /// eigenvector.
    pub fn condition_i(&self) -> Certificate {
        let tol = self.tolerances.residual_tol;
        let (lam, vec) = min_hermitian_eigenvalue(&self.t0);
        let margin = if self.dim_v() == 0 { 0.0 } else { lam };
        Certificate::decide("condition_i", margin >= -tol, margin, tol, || vec.expect("nonempty"))
    }

    /// Dense range: `J` has numerical rank `dim_H`. Margin is
    /// `sigma_min(J) / sigma_max(J)`; the witness is a unit vector of `H`
    /// orthogonal to the range of `J`.
    pub fn condition_ii(&self) -> Certificate {
        let rtol = self.tolerances.rank_rtol;
        let (m, n) = self.j.shape();
        if m == 0 {
            return Certificate::holds("condition_ii", 1.0, rtol);
        }
        let dec = svd(&self.j);
        let smax = dec.s.first().copied().unwrap_or(0.0);
        let rank = dec.s.iter().filter(|&&s| s > rtol * smax && s > 0.0).count();
        let ratio = if m > n || smax == 0.0 {
            0.0
        } else {
            dec.s[m - 1] / smax
        };
        Certificate::decide("condition_ii", rank == m, ratio, rtol, || {
            let k = crate::numerics::kernel(&self.j.adjoint(), &self.tolerances);
            k.basis().column(0).into_owned()
        })
    }

    /// Both standing assumptions, as a hard precondition.
    pub fn require_standing_assumptions(&self) -> Result<()> {
        let c1 = self.condition_i();
        if !c1.is_holds() {
            return Err(Error::ConditionViolated {
                condition: "I",
                detail: format!("form is not accretive (min Re eigenvalue {:.3e})", c1.margin),
            });
        }
        let c2 = self.condition_ii();
        if !c2.is_holds() {
            return Err(Error::ConditionViolated {
                condition: "II",
                detail: "linking map is not surjective".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::from_real_rows;

    fn multival() -> FormSystem {
        FormSystem::new(
            from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]),
            from_real_rows(&[&[0.0, 1.0]]),
            ToleranceConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn derived_t_of_multival() {
        let t = multival().derived_t();
        assert_eq!(t, from_real_rows(&[&[0.0, 1.0], &[-1.0, 1.0]]));
    }

    #[test]
    fn derived_t_of_zero_form() {
        let fs = FormSystem::new(
            ComplexMatrix::zeros(2, 2),
            from_real_rows(&[&[1.0, 0.0]]),
            ToleranceConfig::default(),
        )
        .unwrap();
        assert_eq!(fs.derived_t(), from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]));
    }

    #[test]
    fn adjoint_of_j() {
        assert_eq!(multival().adjoint_j(), from_real_rows(&[&[0.0], &[1.0]]));
    }

    #[test]
    fn conditions_on_multival() {
        let fs = multival();
        assert!(fs.condition_i().is_holds());
        assert!(fs.condition_ii().is_holds());
    }

    #[test]
    fn condition_ii_fails_for_zero_link() {
        let fs = FormSystem::new(ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(1, 2), Default::default())
            .unwrap();
        let c = fs.condition_ii();
        assert!(!c.is_holds());
        assert_eq!(c.witness.unwrap().len(), 1);
    }

    #[test]
    fn shape_errors() {
        assert!(FormSystem::new(ComplexMatrix::zeros(2, 3), ComplexMatrix::zeros(1, 2), Default::default())
            .is_err());
        assert!(FormSystem::new(ComplexMatrix::zeros(2, 2), ComplexMatrix::zeros(1, 3), Default::default())
            .is_err());
    }
}
