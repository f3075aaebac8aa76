//! Association of a form with an operator: the spaces `D_j(a)` and
//! `V_j(a)`, the associated operator, m-accretivity and the resolvent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Certificate, FormSystem};
use crate::numerics::encoding::matrix;
use crate::numerics::linalg::{diag_real, identity, lstsq, min_hermitian_eigenvalue, spectral_norm, svd};
use crate::numerics::subspace::farthest_vector;
use crate::numerics::{
    complement, intersect, kernel, orthonormal_range, orthonormal_range_scaled, preimage,
    subspace_relation, ComplexMatrix, ComplexVector, Subspace, SubspaceRelation, ToleranceConfig,
};

/// A linear operator in `H` defined on a subspace: `A x = action * (basis* x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociatedOperator {
    pub domain: Subspace,
    #[serde(with = "matrix")]
    pub action: ComplexMatrix,
    pub m_accretive: Certificate,
}

impl AssociatedOperator {
    /// Wraps an operator given on an orthonormal domain basis and certifies
    /// m-accretivity directly (accretive on the domain and `I + A` onto).
    pub fn from_parts(domain: Subspace, action: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        if action.nrows() != domain.ambient_dim() || action.ncols() != domain.dim() {
            return Err(Error::dims("action does not match the domain".to_string()));
        }
        let m_accretive = direct_m_accretive(&domain, &action, tol);
        Ok(AssociatedOperator { domain, action, m_accretive })
    }

    /// An everywhere-defined operator.
    pub fn from_matrix(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims(format!("operator must be square, got {}x{}", a.nrows(), a.ncols())));
        }
        Self::from_parts(Subspace::full(a.nrows()), a.clone(), tol)
    }

    pub fn dim_h(&self) -> usize {
        self.domain.ambient_dim()
    }

    pub fn is_full_domain(&self) -> bool {
        self.domain.is_full()
    }

    /// The matrix of `A` on `H` when `D(A) = H`.
    pub fn full_matrix(&self) -> Option<ComplexMatrix> {
        self.is_full_domain()
            .then(|| &self.action * self.domain.basis().adjoint())
    }

    /// Applies `A` to a vector of its domain.
    pub fn apply(&self, x: &ComplexVector, tol: &ToleranceConfig) -> Result<ComplexVector> {
        if x.len() != self.dim_h() {
            return Err(Error::dims("vector length differs from dim_H".to_string()));
        }
        if self.domain.distance_ratio(x) > tol.angle_tol {
            return Err(Error::InvalidInput("vector is not in the domain".into()));
        }
        Ok(&self.action * (self.domain.basis().adjoint() * x))
    }

    /// `min Re <Ax, x>` over unit vectors of the domain.
    pub fn accretivity_margin(&self) -> f64 {
        if self.domain.dim() == 0 {
            return 0.0;
        }
        min_hermitian_eigenvalue(&(self.domain.basis().adjoint() * &self.action)).0
    }

    /// `(I + A)` restricted to the domain, as a `dim_H x dim D(A)` matrix.
    pub fn i_plus_a(&self) -> ComplexMatrix {
        self.domain.basis() + &self.action
    }
}

/// Accretive on the domain and `I + A` surjective.
/// Margin: `sigma_min(I + A)` on the domain (at least 1 for accretive `A`).
fn direct_m_accretive(domain: &Subspace, action: &ComplexMatrix, tol: &ToleranceConfig) -> Certificate {
    let n = domain.ambient_dim();
    let op = "operator_m_accretive";
    let (acc, acc_vec) = if domain.dim() == 0 {
        (0.0, None)
    } else {
        min_hermitian_eigenvalue(&(domain.basis().adjoint() * action))
    };
    let scale = spectral_norm(action).max(1.0);
    if acc < -tol.residual_tol * scale {
        let w = domain.basis() * acc_vec.expect("nonempty domain");
        return Certificate::fails(op, acc, tol.residual_tol, w);
    }
    let ipa = domain.basis() + action;
    let dec = svd(&ipa);
    let smin = if domain.dim() == n { dec.s.last().copied().unwrap_or(1.0) } else { 0.0 };
    let onto = domain.dim() == n && smin > tol.rank_rtol * scale;
    Certificate::decide(op, onto, smin, tol.rank_rtol, || {
        let r = orthonormal_range(&ipa, tol);
        complement(&r).basis().column(0).into_owned()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub associated: Certificate,
    pub d_ja: Subspace,
    pub v_ja: Subspace,
    pub ker_t: Subspace,
    pub ker_j: Subspace,
    pub operator: Option<AssociatedOperator>,
}

fn containment(op: &str, rel: &SubspaceRelation, s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> Certificate {
    Certificate::decide(
        op,
        rel.first_contained(),
        tol.angle_tol - rel.gap_first_in_second,
        tol.angle_tol,
        || farthest_vector(s1, s2).expect("nonzero subspace"),
    )
}

pub(crate) fn equality(op: &str, s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> Result<Certificate> {
    let rel = subspace_relation(s1, s2, tol)?;
    let gap = rel.gap_first_in_second.max(rel.gap_second_in_first);
    Ok(Certificate::decide(op, rel.is_equal(), tol.angle_tol - gap, tol.angle_tol, || {
        if rel.first_contained() {
            farthest_vector(s2, s1).expect("nonzero subspace")
        } else {
            farthest_vector(s1, s2).expect("nonzero subspace")
        }
    }))
}

/// `rg J*`.
pub fn range_j_adjoint(fs: &FormSystem) -> Subspace {
    orthonormal_range(&fs.adjoint_j(), fs.tolerances())
}

/// `ker T`.
pub fn kernel_t(fs: &FormSystem) -> Subspace {
    kernel(&fs.derived_t(), fs.tolerances())
}

/// `D_j(a)`: preimage of `rg J*` under `T0`, cross-checked against the
/// preimage under `T`.
pub fn domain_subspace(fs: &FormSystem) -> Result<Subspace> {
    let tol = fs.tolerances();
    let r = range_j_adjoint(fs);
    let via_t0 = preimage(fs.t0(), &r, tol)?;
    let via_t = preimage(&fs.derived_t(), &r, tol)?;
    if !subspace_relation(&via_t0, &via_t, tol)?.is_equal() {
        return Err(Error::degenerate(format!(
            "D_j(a) differs between T0 and T (dims {} and {})",
            via_t0.dim(),
            via_t.dim()
        )));
    }
    Ok(via_t0)
}

/// `V_j(a) = (T* ker J)^perp`, cross-checked against `T^{-1}[(ker J)^perp]`.
pub fn vja_subspace(fs: &FormSystem) -> Result<Subspace> {
    let tol = fs.tolerances();
    let t = fs.derived_t();
    let ker_j = kernel(fs.j(), tol);
    let scale = spectral_norm(&t);
    let v1 = complement(&orthonormal_range_scaled(&(t.adjoint() * ker_j.basis()), scale, tol));
    let v2 = preimage(&t, &complement(&ker_j), tol)?;
    if !subspace_relation(&v1, &v2, tol)?.is_equal() {
        return Err(Error::degenerate(format!(
            "V_j(a) formulas disagree (dims {} and {})",
            v1.dim(),
            v2.dim()
        )));
    }
    Ok(v1)
}

/// Decides whether `(a, j)` is associated with an operator, i.e. whether
/// `D_j(a) ∩ ker j ⊂ ker T`, and builds the operator when it is.
pub fn check_associated(fs: &FormSystem) -> Result<AssociationResult> {
    fs.require_standing_assumptions()?;
    let tol = fs.tolerances();
    let d_ja = domain_subspace(fs)?;
    let v_ja = vja_subspace(fs)?;
    let ker_t = kernel_t(fs);
    let ker_j = kernel(fs.j(), tol);
    let inter = intersect(&d_ja, &ker_j, tol)?;
    let rel = subspace_relation(&inter, &ker_t, tol)?;
    let associated = containment("check_associated", &rel, &inter, &ker_t, tol);
    let operator = if associated.is_holds() {
        Some(build_from_domain(fs, &d_ja, &inter)?)
    } else {
        None
    };
    Ok(AssociationResult { associated, d_ja, v_ja, ker_t, ker_j, operator })
}

/// The operator associated with `(a, j)`; fails if the pair is not associated.
pub fn build_operator(fs: &FormSystem) -> Result<AssociatedOperator> {
    let res = check_associated(fs)?;
    res.operator.ok_or_else(|| {
        Error::precondition("the form is not associated with an operator (D_j(a) ∩ ker j ⊄ ker T)")
    })
}

fn build_from_domain(fs: &FormSystem, d_ja: &Subspace, d_cap_kerj: &Subspace) -> Result<AssociatedOperator> {
    let tol = fs.tolerances();
    let t0 = fs.t0();
    let jmat = fs.j();
    let jscale = spectral_norm(jmat);
    let t0scale = spectral_norm(t0).max(1.0);

    // single-valuedness: a(k, .) must vanish for k in D_j(a) ∩ ker j
    if d_cap_kerj.dim() > 0 {
        let leak = spectral_norm(&(t0 * d_cap_kerj.basis()));
        let allowed = tol.angle_tol.max(tol.residual_tol) * spectral_norm(&fs.derived_t()).max(1.0);
        if leak > allowed {
            return Err(Error::degenerate(format!(
                "operator would be multivalued: |T0 k| = {leak:.3e} on D_j(a) ∩ ker j"
            )));
        }
    }

    // j maps D_j(a) onto the domain; pick u_k with j(u_k) = x_k orthonormal
    let dec = svd(&(jmat * d_ja.basis()));
    let r = dec.s.iter().filter(|&&s| s > tol.rank_rtol * jscale && s > 0.0).count();
    let n_h = fs.dim_h();
    let x = ComplexMatrix::from_fn(n_h, r, |i, k| dec.u[(i, k)]);
    let w = ComplexMatrix::from_fn(dec.v.nrows(), r, |i, k| dec.v[(i, k)]);
    let sinv: Vec<f64> = dec.s[..r].iter().map(|s| 1.0 / s).collect();
    let u = d_ja.basis() * w * diag_real(&sinv);

    let rhs = t0 * &u;
    let jadj = fs.adjoint_j();
    let f = lstsq(&jadj, &rhs, tol.rank_rtol);
    let scale = t0scale * spectral_norm(&u).max(1.0);
    let resid = spectral_norm(&(&jadj * &f - &rhs));
    if resid > tol.residual_tol * scale {
        return Err(Error::degenerate(format!(
            "J* f = T0 u not solvable on D_j(a) (residual {resid:.3e})"
        )));
    }
    // j*(I + A) j u = T u
    let lhs = &jadj * (jmat * &u + &f);
    let ident = spectral_norm(&(lhs - fs.derived_t() * &u));
    if ident > tol.residual_tol * scale {
        return Err(Error::degenerate(format!(
            "identity j*(I+A)j = T fails on D_j(a) (residual {ident:.3e})"
        )));
    }

    let domain = Subspace::from_orthonormal(x);
    let m_accretive = range_condition(fs)?;
    let op = AssociatedOperator { domain, action: f, m_accretive };
    let direct = direct_m_accretive(&op.domain, &op.action, tol);
    if direct.is_holds() != op.m_accretive.is_holds() {
        return Err(Error::degenerate(format!(
            "range condition says {:?} but I + A surjectivity says {:?}",
            op.m_accretive.verdict, direct.verdict
        )));
    }
    Ok(op)
}

/// `rg J* ⊂ rg T`. Margin: `angle_tol` minus the containment gap.
fn range_condition(fs: &FormSystem) -> Result<Certificate> {
    let tol = fs.tolerances();
    let rj = range_j_adjoint(fs);
    let rt = orthonormal_range(&fs.derived_t(), tol);
    let rel = subspace_relation(&rj, &rt, tol)?;
    Ok(containment("check_m_accretive", &rel, &rj, &rt, tol))
}

/// m-accretivity of the associated operator via the range condition,
/// cross-checked against surjectivity of `I + A`.
pub fn check_m_accretive(fs: &FormSystem) -> Result<Certificate> {
    Ok(build_operator(fs)?.m_accretive)
}

/// `Z` with `T Z = J*` and columns in `(ker T)^perp`.
pub fn resolvent_factor(fs: &FormSystem) -> Result<ComplexMatrix> {
    let cert = check_m_accretive(fs)?;
    if !cert.is_holds() {
        return Err(Error::precondition("the associated operator is not m-accretive"));
    }
    solve_z(fs)
}

fn solve_z(fs: &FormSystem) -> Result<ComplexMatrix> {
    let tol = fs.tolerances();
    let t = fs.derived_t();
    let w = complement(&kernel_t(fs));
    let tw = &t * w.basis();
    let jadj = fs.adjoint_j();
    let y = lstsq(&tw, &jadj, tol.rank_rtol);
    let z = w.basis() * y;
    let resid = spectral_norm(&(&t * &z - &jadj));
    let scale = (spectral_norm(&t) * spectral_norm(&z)).max(spectral_norm(&jadj)).max(1.0);
    if resid > tol.residual_tol * scale {
        return Err(Error::degenerate(format!("T Z = J* residual {resid:.3e}")));
    }
    Ok(z)
}

/// `(I + A)^{-1} = J Z`, verified against the built operator.
pub fn resolvent_at_one(fs: &FormSystem) -> Result<ComplexMatrix> {
    let op = build_operator(fs)?;
    if !op.m_accretive.is_holds() {
        return Err(Error::precondition("the associated operator is not m-accretive"));
    }
    let z = solve_z(fs)?;
    let r = fs.j() * z;
    let tol = fs.tolerances();
    let coords = op.domain.basis().adjoint() * &r;
    let outside = spectral_norm(&(&r - op.domain.basis() * &coords));
    let back = &r + &op.action * &coords;
    let resid = spectral_norm(&(back - identity(fs.dim_h())));
    let scale = spectral_norm(&op.action).max(1.0) * spectral_norm(&r).max(1.0);
    if outside > tol.residual_tol * scale || resid > tol.residual_tol * scale {
        return Err(Error::degenerate(format!(
            "(I + A) J Z = I fails (residual {resid:.3e}, off-domain {outside:.3e})"
        )));
    }
    Ok(r)
}

/// `rg(I + A) = {f : J* f ∈ T(D_j(a))}`.
pub fn range_of_i_plus_a(fs: &FormSystem) -> Result<Subspace> {
    let res = check_associated(fs)?;
    if !res.associated.is_holds() {
        return Err(Error::precondition("the form is not associated with an operator"));
    }
    let tol = fs.tolerances();
    let t = fs.derived_t();
    let img = orthonormal_range_scaled(&(&t * res.d_ja.basis()), spectral_norm(&t), tol);
    preimage(&fs.adjoint_j(), &img, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{c, from_real_rows, real};

    fn fs(t0: ComplexMatrix, j: ComplexMatrix) -> FormSystem {
        FormSystem::new(t0, j, ToleranceConfig::default()).unwrap()
    }

    fn multival() -> FormSystem {
        fs(from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]), from_real_rows(&[&[0.0, 1.0]]))
    }

    fn zero_rank1() -> FormSystem {
        fs(ComplexMatrix::zeros(2, 2), from_real_rows(&[&[1.0, 0.0]]))
    }

    #[test]
    fn multival_is_not_associated() {
        let fs = multival();
        let d = domain_subspace(&fs).unwrap();
        assert!(subspace_relation(&d, &Subspace::coordinate(2, &[0]), fs.tolerances()).unwrap().is_equal());
        let res = check_associated(&fs).unwrap();
        assert!(!res.associated.is_holds());
        let w = res.associated.witness.unwrap();
        assert!((fs.t0() * &w).norm() > 0.9);
        assert!((fs.j() * &w).norm() < 1e-12);
        assert!(res.operator.is_none());
        assert!(matches!(check_m_accretive(&fs), Err(Error::Precondition(_))));
    }

    #[test]
    fn multival_vja_contains_domain() {
        let fs = multival();
        let v = vja_subspace(&fs).unwrap();
        let d = domain_subspace(&fs).unwrap();
        assert!(subspace_relation(&d, &v, fs.tolerances()).unwrap().first_contained());
    }

    #[test]
    fn zero_form_rank_one_link() {
        let fs = zero_rank1();
        assert!(domain_subspace(&fs).unwrap().is_full());
        let res = check_associated(&fs).unwrap();
        assert!(res.associated.is_holds());
        let op = res.operator.unwrap();
        assert!(op.m_accretive.is_holds());
        assert!(op.full_matrix().unwrap().norm() < 1e-14);
        let r = range_of_i_plus_a(&fs).unwrap();
        assert!(r.is_full());
        assert!((resolvent_at_one(&fs).unwrap()[(0, 0)] - real(1.0)).norm() < 1e-14);
    }

    #[test]
    fn four_thirds() {
        let fs = fs(from_real_rows(&[&[1.0 / 3.0]]), from_real_rows(&[&[0.5]]));
        let a = build_operator(&fs).unwrap().full_matrix().unwrap();
        assert!((a[(0, 0)] - real(4.0 / 3.0)).norm() < 1e-14);
        let r = resolvent_at_one(&fs).unwrap();
        assert!((r[(0, 0)] - real(3.0 / 7.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_form_identity_link() {
        let fs = fs(ComplexMatrix::zeros(3, 3), identity(3));
        let a = build_operator(&fs).unwrap().full_matrix().unwrap();
        assert!(a.norm() < 1e-14);
        assert!((resolvent_at_one(&fs).unwrap() - identity(3)).norm() < 1e-14);
    }

    #[test]
    fn operator_from_matrix_certifies() {
        let tol = ToleranceConfig::default();
        let skew = ComplexMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
        assert!(AssociatedOperator::from_matrix(&skew, &tol).unwrap().m_accretive.is_holds());
        let neg = from_real_rows(&[&[-1.0]]);
        assert!(!AssociatedOperator::from_matrix(&neg, &tol).unwrap().m_accretive.is_holds());
    }

    #[test]
    fn standing_assumptions_enforced() {
        let bad = fs(from_real_rows(&[&[-1.0]]), from_real_rows(&[&[1.0]]));
        assert!(matches!(check_associated(&bad), Err(Error::ConditionViolated { condition: "I", .. })));
        let bad = fs(identity(1), ComplexMatrix::zeros(1, 1));
        assert!(matches!(check_associated(&bad), Err(Error::ConditionViolated { condition: "II", .. })));
    }
}
