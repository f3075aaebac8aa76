//! The full analysis of one system, as emitted by the command-line tool.

use serde::{Deserialize, Serialize};

use crate::association::{check_associated, range_j_adjoint, resolvent_at_one};
use crate::error::Result;
use crate::fov::{
    check_condition_iii, check_incomplete_bound, check_j_elliptic, default_omega_grid, field_of_values,
    IncompleteBound, JElliptic, DEFAULT_ANGLES,
};
use crate::model::{Certificate, FormSystem};
use crate::numerics::encoding::matrix;
use crate::numerics::{ComplexMatrix, Subspace};
use crate::fov::FieldOfValues;

pub const TOOL_VERSION: &str = concat!("accform ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCertificates {
    pub condition_i: Certificate,
    pub condition_ii: Certificate,
    pub condition_iii: Certificate,
    /// `sigma_min(T)`.
    pub mu: f64,
    pub j_elliptic: Option<JElliptic>,
    pub incomplete_bound: IncompleteBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimensions {
    pub dim_v: usize,
    pub dim_h: usize,
    pub d_ja: usize,
    pub v_ja: usize,
    pub ker_t: usize,
    pub ker_j: usize,
    pub rg_j_adjoint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub domain: Subspace,
    /// Images of the domain basis vectors.
    #[serde(with = "matrix")]
    pub action: ComplexMatrix,
    /// The operator as a matrix on `H` when its domain is all of `H`.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    pub matrix: Option<ComplexMatrix>,
}

mod opt_matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::numerics::encoding::{from_raw, to_raw, RawMatrix};
    use crate::numerics::ComplexMatrix;

    pub fn serialize<S: Serializer>(m: &Option<ComplexMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(to_raw).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ComplexMatrix>, D::Error> {
        let raw: Option<RawMatrix> = Option::deserialize(d)?;
        raw.map(|r| from_raw(&r, 0).map_err(serde::de::Error::custom)).transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub input_digest: String,
    pub conditions: ConditionCertificates,
    pub dims: Dimensions,
    /// `T = T0 + J*J`.
    #[serde(with = "matrix")]
    pub derived_t: ComplexMatrix,
    pub association: Certificate,
    pub m_accretivity: Option<Certificate>,
    pub operator: Option<OperatorReport>,
    /// `(I + A)^{-1}`, present when `A` is m-accretive.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_matrix")]
    pub resolvent_at_one: Option<ComplexMatrix>,
    pub fov_of_t: FieldOfValues,
}

impl AnalysisReport {
    /// Every verdict in the report holds.
    pub fn all_hold(&self) -> bool {
        let c = &self.conditions;
        c.condition_i.is_holds()
            && c.condition_ii.is_holds()
            && self.association.is_holds()
            && self.m_accretivity.as_ref().is_some_and(Certificate::is_holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Analyses a system. The standing assumptions are reported, not required;
/// when they fail the association fields carry the failing certificate.
pub fn analyze(fs: &FormSystem, input_digest: &str, n_angles: usize) -> Result<AnalysisReport> {
    let tol = fs.tolerances();
    let condition_i = fs.condition_i();
    let condition_ii = fs.condition_ii();
    let c3 = check_condition_iii(fs);
    let j_elliptic = check_j_elliptic(fs, &default_omega_grid())?;
    let incomplete_bound = check_incomplete_bound(fs);
    let t = fs.derived_t();
    let fov_of_t = field_of_values(&t, n_angles.max(8))?;
    let conditions = ConditionCertificates {
        condition_i: condition_i.clone(),
        condition_ii: condition_ii.clone(),
        condition_iii: c3.certificate,
        mu: c3.mu,
        j_elliptic,
        incomplete_bound,
    };
    let ker_j = crate::numerics::kernel(fs.j(), tol);
    let mut dims = Dimensions {
        dim_v: fs.dim_v(),
        dim_h: fs.dim_h(),
        d_ja: 0,
        v_ja: 0,
        ker_t: crate::association::kernel_t(fs).dim(),
        ker_j: ker_j.dim(),
        rg_j_adjoint: range_j_adjoint(fs).dim(),
    };

    if !condition_i.is_holds() || !condition_ii.is_holds() {
        let failed = if condition_i.is_holds() { &condition_ii } else { &condition_i };
        let association = Certificate {
            operation: "check_associated".into(),
            verdict: crate::Verdict::Fails,
            margin: failed.margin,
            tolerance: failed.tolerance,
            witness: failed.witness.clone(),
        };
        dims.d_ja = crate::association::domain_subspace(fs).map(|s| s.dim()).unwrap_or(0);
        return Ok(AnalysisReport {
            tool_version: TOOL_VERSION.into(),
            input_digest: input_digest.into(),
            conditions,
            dims,
            derived_t: t,
            association,
            m_accretivity: None,
            operator: None,
            resolvent_at_one: None,
            fov_of_t,
        });
    }

    let res = check_associated(fs)?;
    dims.d_ja = res.d_ja.dim();
    dims.v_ja = res.v_ja.dim();
    let (m_accretivity, operator, resolvent) = match &res.operator {
        Some(op) => {
            let cert = op.m_accretive.clone();
            let resolvent = if cert.is_holds() { Some(resolvent_at_one(fs)?) } else { None };
            let report = OperatorReport { domain: op.domain.clone(), action: op.action.clone(), matrix: op.full_matrix() };
            (Some(cert), Some(report), resolvent)
        }
        None => (None, None, None),
    };
    Ok(AnalysisReport {
        tool_version: TOOL_VERSION.into(),
        input_digest: input_digest.into(),
        conditions,
        dims,
        derived_t: t,
        association: res.associated,
        m_accretivity,
        operator,
        resolvent_at_one: resolvent,
        fov_of_t,
    })
}

/// [`analyze`] with the default number of FOV angles.
pub fn analyze_default(fs: &FormSystem, input_digest: &str) -> Result<AnalysisReport> {
    analyze(fs, input_digest, DEFAULT_ANGLES)
}
