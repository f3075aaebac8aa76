//! Reduction by `ker T`, restriction, the dual form, the radical and the
//! identities that hold under invertibility of `T`.

use serde::{Deserialize, Serialize};

use crate::association::{build_operator, domain_subspace, equality, kernel_t, vja_subspace, AssociatedOperator};
use crate::error::{Error, Result};
use crate::fov::check_condition_iii;
use crate::model::{Certificate, FormSystem};
use crate::numerics::linalg::{spectral_norm, svd};
use crate::numerics::subspace::farthest_vector;
use crate::numerics::{
    complement, image, intersect, kernel, orthonormal_range, subspace_relation, sum, ComplexMatrix, Subspace,
};

/// Compresses the system onto `W = (ker T)^perp`.
///
/// Returns the reduced system and the embedding whose columns are an
/// orthonormal basis of `W`. The decompositions of `D_j(a)`, `V_j(a)` and
/// `ker j` as the reduced space plus `ker T` are verified.
pub fn reduce_ker_t(fs: &FormSystem) -> Result<(FormSystem, ComplexMatrix)> {
    let tol = fs.tolerances();
    let ker_t = kernel_t(fs);
    let w = complement(&ker_t);
    let embed = w.basis().clone();
    let hat = FormSystem::new(embed.adjoint() * fs.t0() * &embed, fs.j() * &embed, *tol)?;

    let pairs = [
        ("D_j(a)", domain_subspace(fs)?, domain_subspace(&hat)?),
        ("V_j(a)", vja_subspace(fs)?, vja_subspace(&hat)?),
        ("ker j", kernel(fs.j(), tol), kernel(hat.j(), tol)),
    ];
    for (name, full, reduced) in pairs {
        let lifted = image(&embed, &reduced, tol)?;
        let joined = sum(&lifted, &ker_t, tol)?;
        if !subspace_relation(&joined, &full, tol)?.is_equal() {
            return Err(Error::degenerate(format!("{name} does not split as reduced part plus ker T")));
        }
    }
    Ok((hat, embed))
}

fn compress(fs: &FormSystem, w: &Subspace) -> Result<FormSystem> {
    if w.ambient_dim() != fs.dim_v() {
        return Err(Error::dims(format!(
            "subspace lives in C^{} but dim_V = {}",
            w.ambient_dim(),
            fs.dim_v()
        )));
    }
    let q = w.basis();
    FormSystem::new(q.adjoint() * fs.t0() * q, fs.j() * q, *fs.tolerances())
}

/// The restriction of `a` and `j` to `W`, in an orthonormal basis of `W`.
/// The restricted linking map must still be onto.
pub fn restrict(fs: &FormSystem, w: &Subspace) -> Result<FormSystem> {
    let r = compress(fs, w)?;
    if !r.condition_ii().is_holds() {
        return Err(Error::ConditionViolated {
            condition: "II",
            detail: "the linking map restricted to W is not onto".into(),
        });
    }
    Ok(r)
}

/// Whether the operator of the restriction to `W` extends the operator of
/// the full system: `D(A) ⊂ D(Â)` and `Â = A` on `D(A)`.
/// Margin: `residual_tol` minus the largest deviation of `Â` from `A`.
pub fn restriction_extends(fs: &FormSystem, w: &Subspace) -> Result<Certificate> {
    let tol = fs.tolerances();
    let a = build_operator(fs)?;
    let a_hat = build_operator(&restrict(fs, w)?)?;
    let op = "restriction_extends";
    let rel = subspace_relation(&a.domain, &a_hat.domain, tol)?;
    if !rel.first_contained() {
        return Ok(Certificate::fails(
            op,
            -rel.gap_first_in_second,
            tol.angle_tol,
            farthest_vector(&a.domain, &a_hat.domain).expect("nonzero domain"),
        ));
    }
    let x = a.domain.basis();
    let diff = &a_hat.action * (a_hat.domain.basis().adjoint() * x) - &a.action;
    let dev = spectral_norm(&diff);
    let scale = spectral_norm(&a.action).max(1.0);
    Ok(Certificate::decide(op, dev <= tol.residual_tol * scale, tol.residual_tol * scale - dev, tol.residual_tol, || {
        let dec = svd(&diff);
        x * dec.v.column(0)
    }))
}

/// The dual form `a*(u, v) = conj(a(v, u))`, represented by `T0*`.
pub fn dual(fs: &FormSystem) -> FormSystem {
    FormSystem::new(fs.t0().adjoint(), fs.j().clone(), *fs.tolerances()).expect("shapes preserved")
}

/// `R(a) = ker T0`, checked to coincide with `ker T0*`.
pub fn radical(fs: &FormSystem) -> Result<Subspace> {
    let tol = fs.tolerances();
    let r = kernel(fs.t0(), tol);
    let rs = kernel(&fs.t0().adjoint(), tol);
    if !subspace_relation(&r, &rs, tol)?.is_equal() {
        return Err(Error::degenerate(format!(
            "ker T0 and ker T0* differ (dims {} and {})",
            r.dim(),
            rs.dim()
        )));
    }
    Ok(r)
}

/// Identities that hold when `T` is invertible. In finite dimensions the
/// density statements become equalities and are checked as such.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cond3Report {
    pub condition_iii: Certificate,
    /// `D_j(a) = V_j(a)`.
    pub dja_dense_in_vja: Certificate,
    /// `D_j(a) = V_j(a)` exactly when `j` is onto.
    pub dha_eq_va: Certificate,
    /// `T(V_j(a) ∩ ker j) = T*(V_j(a*) ∩ ker j)`.
    pub identity_c3b: Certificate,
    /// `T(V_j(a) ∩ ker j) = (V_j(a) + ker j)^perp`.
    pub identity_c3c: Certificate,
    /// `V_j(a) + ker j = V` exactly when `V_j(a) ∩ ker j = {0}`.
    pub identity_c3d: Certificate,
    /// `V_j(a) + ker j = V_j(a*) + ker j`.
    pub identity_c3e: Certificate,
    /// `V_j(a) + ker j = V`.
    pub decomposition: Certificate,
    /// Invertibility of `T` for the restriction to `V_j(a)`.
    pub restriction_cond3: Certificate,
}

fn agreement(op: &str, lhs: bool, rhs: bool, witness: impl FnOnce() -> crate::ComplexVector) -> Certificate {
    Certificate::decide(op, lhs == rhs, if lhs == rhs { 1.0 } else { -1.0 }, 0.0, witness)
}

pub fn cond3_report(fs: &FormSystem) -> Result<Cond3Report> {
    let tol = fs.tolerances();
    let n = fs.dim_v();
    let t = fs.derived_t();
    let ds = dual(fs);
    let condition_iii = check_condition_iii(fs).certificate;

    let d = domain_subspace(fs)?;
    let v = vja_subspace(fs)?;
    let vs = vja_subspace(&ds)?;
    let ker_j = kernel(fs.j(), tol);

    let dja_dense_in_vja = equality("dja_dense_in_vja", &d, &v, tol)?;
    let j_onto = fs.condition_ii().is_holds();
    let dha_eq_va = agreement("dha_eq_va", dja_dense_in_vja.is_holds(), j_onto, || {
        dja_dense_in_vja
            .witness
            .clone()
            .unwrap_or_else(|| crate::ComplexVector::zeros(n))
    });

    let v_cap = intersect(&v, &ker_j, tol)?;
    let vs_cap = intersect(&vs, &ker_j, tol)?;
    let t_side = image(&t, &v_cap, tol)?;
    let ts_side = image(&t.adjoint(), &vs_cap, tol)?;
    let identity_c3b = equality("identity_c3b", &t_side, &ts_side, tol)?;

    let v_plus = sum(&v, &ker_j, tol)?;
    let identity_c3c = equality("identity_c3c", &t_side, &complement(&v_plus), tol)?;

    let decomposition = Certificate::decide(
        "decomposition",
        v_plus.is_full(),
        -((n - v_plus.dim()) as f64),
        tol.angle_tol,
        || complement(&v_plus).basis().column(0).into_owned(),
    );
    let identity_c3d = agreement("identity_c3d", v_plus.is_full(), v_cap.is_zero(), || {
        if v_cap.is_zero() {
            complement(&v_plus).basis().column(0).into_owned()
        } else {
            v_cap.basis().column(0).into_owned()
        }
    });
    let vs_plus = sum(&vs, &ker_j, tol)?;
    let identity_c3e = equality("identity_c3e", &v_plus, &vs_plus, tol)?;

    let restricted = compress(fs, &v)?;
    let rc = check_condition_iii(&restricted).certificate;
    let restriction_cond3 = match rc.witness {
        Some(w) => Certificate::fails("restriction_cond3", rc.margin, rc.tolerance, v.basis() * w),
        None => Certificate::holds("restriction_cond3", rc.margin, rc.tolerance),
    };

    Ok(Cond3Report {
        condition_iii,
        dja_dense_in_vja,
        dha_eq_va,
        identity_c3b,
        identity_c3c,
        identity_c3d,
        identity_c3e,
        decomposition,
        restriction_cond3,
    })
}

/// Graph `{(x, Ax)}` of an operator as a subspace of `H x H`.
fn graph(a: &AssociatedOperator, tol: &crate::ToleranceConfig) -> Subspace {
    let u = a.domain.basis();
    let stacked = ComplexMatrix::from_fn(2 * u.nrows(), u.ncols(), |i, k| {
        if i < u.nrows() {
            u[(i, k)]
        } else {
            a.action[(i - u.nrows(), k)]
        }
    });
    orthonormal_range(&stacked, tol)
}

/// Graph of the adjoint: the orthogonal complement of `{(Ax, -x)}`.
fn adjoint_graph(a: &AssociatedOperator, tol: &crate::ToleranceConfig) -> Subspace {
    let u = a.domain.basis();
    let flipped = ComplexMatrix::from_fn(2 * u.nrows(), u.ncols(), |i, k| {
        if i < u.nrows() {
            a.action[(i, k)]
        } else {
            -u[(i - u.nrows(), k)]
        }
    });
    complement(&orthonormal_range(&flipped, tol))
}

/// Checks that the operator of the dual form is the adjoint of the
/// operator of the form. Margin: tolerance minus the deviation.
pub fn dual_adjoint_check(fs: &FormSystem) -> Result<Certificate> {
    let tol = fs.tolerances();
    if !check_condition_iii(fs).certificate.is_holds() {
        return Err(Error::precondition("T is not invertible"));
    }
    let a = build_operator(fs)?;
    let a1 = build_operator(&dual(fs))?;
    let op = "dual_adjoint_check";
    if let (Some(m), Some(m1)) = (a.full_matrix(), a1.full_matrix()) {
        let diff = &m1 - m.adjoint();
        let dev = spectral_norm(&diff);
        let allowed = tol.residual_tol * spectral_norm(&m).max(1.0);
        return Ok(Certificate::decide(op, dev <= allowed, allowed - dev, tol.residual_tol, || {
            svd(&diff).v.column(0).into_owned()
        }));
    }
    let g1 = graph(&a1, tol);
    let gs = adjoint_graph(&a, tol);
    equality(op, &g1, &gs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::check_associated;
    use crate::numerics::linalg::{from_real_rows, identity};
    use crate::ToleranceConfig;

    fn fs(t0: ComplexMatrix, j: ComplexMatrix) -> FormSystem {
        FormSystem::new(t0, j, ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn reduce_trivial_kernel() {
        let sys = fs(identity(2), identity(2));
        let (hat, embed) = reduce_ker_t(&sys).unwrap();
        assert_eq!(hat.dim_v(), 2);
        assert!((embed.adjoint() * &embed - identity(2)).norm() < 1e-14);
    }

    #[test]
    fn reduce_zero_form() {
        let sys = fs(ComplexMatrix::zeros(2, 2), from_real_rows(&[&[1.0, 0.0]]));
        let (hat, _) = reduce_ker_t(&sys).unwrap();
        assert_eq!(hat.dim_v(), 1);
        assert!((hat.derived_t()[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn restrict_to_whole_space() {
        let sys = fs(from_real_rows(&[&[1.0, 2.0], &[-2.0, 1.0]]), from_real_rows(&[&[1.0, 1.0]]));
        let r = restrict(&sys, &Subspace::full(2)).unwrap();
        assert!((r.t0() - sys.t0()).norm() < 1e-14);
        assert!(restrict(&sys, &Subspace::coordinate(2, &[0])).is_ok());
        let no_link = fs(identity(2), from_real_rows(&[&[0.0, 1.0]]));
        assert!(restrict(&no_link, &Subspace::coordinate(2, &[0])).is_err());
    }

    #[test]
    fn dual_is_involution() {
        let sys = fs(from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]), from_real_rows(&[&[0.0, 1.0]]));
        let d = dual(&sys);
        assert_eq!(d.t0(), &(-sys.t0()));
        assert_eq!(dual(&d), sys);
    }

    #[test]
    fn radical_examples() {
        assert!(radical(&fs(identity(2), identity(2))).unwrap().is_zero());
        assert!(radical(&fs(ComplexMatrix::zeros(2, 2), identity(2))).unwrap().is_full());
    }

    #[test]
    fn cond3_on_identity() {
        let r = cond3_report(&fs(identity(2), identity(2))).unwrap();
        for c in [
            &r.condition_iii,
            &r.dja_dense_in_vja,
            &r.dha_eq_va,
            &r.identity_c3b,
            &r.identity_c3c,
            &r.identity_c3d,
            &r.identity_c3e,
            &r.decomposition,
            &r.restriction_cond3,
        ] {
            assert!(c.is_holds(), "{} failed", c.operation);
        }
    }

    #[test]
    fn cond3_on_multival() {
        let sys = fs(from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]), from_real_rows(&[&[0.0, 1.0]]));
        let r = cond3_report(&sys).unwrap();
        assert!(r.condition_iii.is_holds());
        assert!(r.dja_dense_in_vja.is_holds());
        assert!(!r.decomposition.is_holds());
        assert!(!r.restriction_cond3.is_holds());
        assert!(r.identity_c3b.is_holds() && r.identity_c3c.is_holds() && r.identity_c3d.is_holds());
    }

    #[test]
    fn dual_adjoint_hermitian() {
        let sys = fs(from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]), identity(2));
        assert!(dual_adjoint_check(&sys).unwrap().is_holds());
        assert!(check_associated(&sys).unwrap().associated.is_holds());
    }
}
