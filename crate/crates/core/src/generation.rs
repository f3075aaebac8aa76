//! Cayley transform, recovery of an operator from it, and the form that
//! generates a given everywhere-defined accretive operator.

use serde::{Deserialize, Serialize};

use crate::association::{build_operator, AssociatedOperator};
use crate::error::{Error, Result};
use crate::model::FormSystem;
use crate::numerics::encoding::{from_raw, matrix, RawMatrix};
use crate::numerics::linalg::{diag_real, identity, inverse, min_hermitian_eigenvalue, spectral_norm, svd};
use crate::numerics::{ComplexMatrix, Subspace, ToleranceConfig};

/// `J = (I - A)(I + A)^{-1}` on `rg(I + A)`.
///
/// `j_matrix` holds the images of the orthonormal basis of `domain_of_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CayleyData {
    #[serde(with = "matrix")]
    pub j_matrix: ComplexMatrix,
    pub domain_of_j: Subspace,
}

impl CayleyData {
    /// `J` as a matrix on `H` when its domain is all of `H`.
    pub fn full_matrix(&self) -> Option<ComplexMatrix> {
        self.domain_of_j
            .is_full()
            .then(|| &self.j_matrix * self.domain_of_j.basis().adjoint())
    }
}

/// Splits `P = U S W*` and returns `(U, M W S^{-1})`: an orthonormal basis of
/// `rg P` and the map `P x -> M x` expressed on that basis.
fn transfer(p: &ComplexMatrix, m: &ComplexMatrix, what: &str, tol: &ToleranceConfig) -> Result<(Subspace, ComplexMatrix)> {
    let k = p.ncols();
    let dec = svd(p);
    let scale = spectral_norm(p).max(1.0);
    if dec.s.len() < k || dec.s.iter().any(|&s| s <= tol.rank_rtol * scale) {
        return Err(Error::degenerate(format!("{what} is not injective on its domain")));
    }
    let sinv: Vec<f64> = dec.s.iter().map(|s| 1.0 / s).collect();
    let action = m * &dec.v * diag_real(&sinv);
    Ok((Subspace::from_orthonormal(dec.u), action))
}

/// The Cayley transform of an accretive operator, checked to be contractive.
pub fn cayley(a: &AssociatedOperator, tol: &ToleranceConfig) -> Result<CayleyData> {
    let scale = spectral_norm(&a.action).max(1.0);
    if a.accretivity_margin() < -tol.residual_tol * scale {
        return Err(Error::precondition("operator is not accretive"));
    }
    let u = a.domain.basis();
    let plus = u + &a.action;
    let minus = u - &a.action;
    let (domain_of_j, j_matrix) = transfer(&plus, &minus, "I + A", tol)?;
    let norm = spectral_norm(&j_matrix);
    if norm > 1.0 + tol.residual_tol * scale {
        return Err(Error::BoundViolation(format!("Cayley transform has norm {norm} > 1")));
    }
    Ok(CayleyData { j_matrix, domain_of_j })
}

/// The operator with `A (I + J) u = (I - J) u`.
pub fn recover_operator(c: &CayleyData, tol: &ToleranceConfig) -> Result<AssociatedOperator> {
    let q = c.domain_of_j.basis();
    let plus = q + &c.j_matrix;
    let minus = q - &c.j_matrix;
    let (domain, action) = transfer(&plus, &minus, "I + J", tol)?;
    AssociatedOperator::from_parts(domain, action, tol)
}

/// Operator file, `{"dim_H", "A"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    #[serde(rename = "dim_H")]
    pub dim_h: usize,
    #[serde(rename = "A")]
    pub a: RawMatrix,
}

pub fn load_operator(text: &[u8]) -> Result<ComplexMatrix> {
    let f: OperatorFile = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    let a = from_raw(&f.a, f.dim_h).map_err(Error::Parse)?;
    if a.shape() != (f.dim_h, f.dim_h) {
        return Err(Error::dims(format!("A must be {0}x{0}", f.dim_h)));
    }
    Ok(a)
}

/// A form generating the given everywhere-defined accretive operator:
/// `V = H`, link `I + J` and `a(u, v) = <(I - J) u, (I + J) v>` with `J` the
/// Cayley transform. The associated operator of the result is checked to
/// be `A` again.
pub fn generate_form(a: &AssociatedOperator, tol: &ToleranceConfig) -> Result<FormSystem> {
    let m = a
        .full_matrix()
        .ok_or_else(|| Error::precondition("generate_form needs an operator defined on all of H"))?;
    let n = m.nrows();
    let scale = spectral_norm(&m).max(1.0);
    if n > 0 && min_hermitian_eigenvalue(&m).0 < -tol.residual_tol * scale {
        return Err(Error::precondition("operator is not accretive"));
    }
    let i = identity(n);
    let inv = inverse(&(&i + &m)).ok_or_else(|| Error::degenerate("I + A is singular"))?;
    let jc = (&i - &m) * inv;
    let link = &i + &jc;
    let t0 = (&i + jc.adjoint()) * (&i - &jc);
    let fs = FormSystem::new(t0, link, *tol)?;

    let cj = min_hermitian_eigenvalue(&(&i - jc.adjoint() * &jc)).0;
    if n > 0 && (fs.condition_i().margin - cj).abs() > tol.residual_tol * scale {
        return Err(Error::degenerate("Re a(u,u) differs from |u|^2 - |Ju|^2"));
    }
    let back = build_operator(&fs)?
        .full_matrix()
        .ok_or_else(|| Error::degenerate("generated form has a partial operator"))?;
    let dev = spectral_norm(&(back - &m));
    if dev > tol.residual_tol * scale {
        return Err(Error::degenerate(format!("generated form reproduces A only to {dev:.3e}")));
    }
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::from_real_rows;

    fn op(m: &ComplexMatrix) -> AssociatedOperator {
        AssociatedOperator::from_matrix(m, &ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn cayley_of_zero_and_identity() {
        let tol = ToleranceConfig::default();
        let c = cayley(&op(&ComplexMatrix::zeros(3, 3)), &tol).unwrap();
        assert!((c.full_matrix().unwrap() - identity(3)).norm() < 1e-14);
        let c = cayley(&op(&identity(3)), &tol).unwrap();
        assert!(c.full_matrix().unwrap().norm() < 1e-14);
    }

    #[test]
    fn cayley_of_skew_is_unitary() {
        let tol = ToleranceConfig::default();
        let c = cayley(&op(&from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])), &tol).unwrap();
        let j = c.full_matrix().unwrap();
        assert!((j.adjoint() * &j - identity(2)).norm() < 1e-14);
    }

    #[test]
    fn recover_examples() {
        let tol = ToleranceConfig::default();
        let c = CayleyData { j_matrix: identity(2), domain_of_j: Subspace::full(2) };
        assert!(recover_operator(&c, &tol).unwrap().full_matrix().unwrap().norm() < 1e-14);
        let c = CayleyData { j_matrix: ComplexMatrix::zeros(2, 2), domain_of_j: Subspace::full(2) };
        let a = recover_operator(&c, &tol).unwrap().full_matrix().unwrap();
        assert!((a - identity(2)).norm() < 1e-14);
    }

    #[test]
    fn generate_examples() {
        let tol = ToleranceConfig::default();
        let fs = generate_form(&op(&ComplexMatrix::zeros(2, 2)), &tol).unwrap();
        assert!((fs.j() - identity(2) * crate::numerics::linalg::real(2.0)).norm() < 1e-14);
        assert!(fs.t0().norm() < 1e-14);
        let fs = generate_form(&op(&identity(2)), &tol).unwrap();
        assert!((fs.j() - identity(2)).norm() < 1e-14 && (fs.t0() - identity(2)).norm() < 1e-14);
    }

    #[test]
    fn operator_file() {
        let a = load_operator(br#"{"dim_H": 1, "A": [[[2, 0]]]}"#).unwrap();
        assert_eq!(a[(0, 0)].re, 2.0);
        assert!(load_operator(br#"{"dim_H": 2, "A": [[[2, 0]]]}"#).is_err());
    }
}
