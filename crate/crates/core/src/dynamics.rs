//! Semigroups, resolvents, invariance of closed convex sets, the
//! perturbation bound and the form-approximation experiment.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::association::{build_operator, resolvent_at_one, resolvent_factor, AssociatedOperator};
use crate::error::{Error, Result};
use crate::fov::{check_j_elliptic, check_sectorial};
use crate::model::{Certificate, FormSystem};
use crate::numerics::encoding::{from_raw, to_raw, RawMatrix};
use crate::numerics::linalg::{
    expm, hermitian_eigen, identity, inverse, lstsq, min_hermitian_eigenvalue, real, spectral_norm, svd,
};
use crate::numerics::{ComplexMatrix, ComplexVector, Subspace, ToleranceConfig};

fn full_matrix(a: &AssociatedOperator) -> Result<ComplexMatrix> {
    a.full_matrix()
        .ok_or_else(|| Error::precondition("operator must be defined on all of H"))
}

fn require_m_accretive(a: &AssociatedOperator) -> Result<()> {
    if !a.m_accretive.is_holds() {
        return Err(Error::precondition("operator is not m-accretive"));
    }
    Ok(())
}

/// `e^{-tA}`, checked to be a contraction.
pub fn semigroup_at(a: &AssociatedOperator, t: f64, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be finite and nonnegative, got {t}")));
    }
    let m = full_matrix(a)?;
    require_m_accretive(a)?;
    let s = expm(&(m * real(-t)));
    let norm = spectral_norm(&s);
    if norm > 1.0 + 10.0 * tol.residual_tol {
        return Err(Error::BoundViolation(format!("|e^(-tA)| = {norm} exceeds 1 at t = {t}")));
    }
    Ok(s)
}

/// `(lambda I + A)^{-1}` for `lambda > 0`.
pub fn resolvent(a: &AssociatedOperator, lambda: f64) -> Result<ComplexMatrix> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let m = full_matrix(a)?;
    let n = m.nrows();
    inverse(&(identity(n) * real(lambda) + m))
        .ok_or_else(|| Error::degenerate(format!("lambda I + A is singular at lambda = {lambda}")))
}

/// The closed convex set `C` whose invariance is tested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionSpec {
    Subspace(Subspace),
    /// Entrywise nonnegative real vectors; only for real systems.
    NonnegOrthant,
}

impl ProjectionSpec {
    pub fn project(&self, x: &ComplexVector) -> ComplexVector {
        match self {
            ProjectionSpec::Subspace(s) => s.basis() * (s.basis().adjoint() * x),
            ProjectionSpec::NonnegOrthant => x.map(|z| Complex64::from(z.re.max(0.0))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Certified,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub holds: bool,
    /// Smallest value of the tested quantity; negative values beyond the
    /// tolerance are violations.
    pub margin: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    /// `S_t C ⊂ C`.
    pub semigroup: CriterionResult,
    /// `lambda (lambda I + A)^{-1} C ⊂ C`.
    pub resolvent: CriterionResult,
    /// `Re <Ax, x - Px> >= 0`.
    pub operator: CriterionResult,
    /// For the orthant: exact sign-structure test (`-A` has nonnegative
    /// off-diagonal entries), which decides invariance for all times.
    pub sign_certificate: Option<Certificate>,
    pub equivalent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceOptions {
    pub lambdas: Vec<f64>,
    pub times: Vec<f64>,
    /// Random points for the operator criterion on the orthant.
    pub n_samples: usize,
    /// Random points of `C` pushed through resolvents and the semigroup.
    pub n_push_samples: usize,
    pub seed: u64,
}

/// `2^-3, ..., 2^3`.
pub fn default_grid() -> Vec<f64> {
    (-3..=3).map(|k| 2f64.powi(k)).collect()
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        InvarianceOptions {
            lambdas: default_grid(),
            times: default_grid(),
            n_samples: 10_000,
            n_push_samples: 1_000,
            seed: 0,
        }
    }
}

fn is_real(m: &ComplexMatrix, tol: f64) -> bool {
    m.iter().all(|z| z.im.abs() <= tol)
}

/// Checks the three equivalent invariance criteria for `C`.
///
/// Subspaces are decided exactly: `(I-P) X P = 0` for the resolvents and
/// semigroup, and the Hermitian eigenvalue test of `(I-P)A` for the
/// operator criterion. The orthant is sampled, and additionally decided
/// by sign structure. A disagreement between the criteria is an error.
pub fn invariance_check(
    a: &AssociatedOperator,
    spec: &ProjectionSpec,
    opts: &InvarianceOptions,
    tol: &ToleranceConfig,
) -> Result<InvarianceReport> {
    let m = full_matrix(a)?;
    require_m_accretive(a)?;
    let n = m.nrows();
    if opts.lambdas.iter().chain(&opts.times).any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::InvalidInput("lambdas and times must be positive".into()));
    }
    let resolvents = opts
        .lambdas
        .iter()
        .map(|&l| resolvent(a, l).map(|r| r * real(l)))
        .collect::<Result<Vec<_>>>()?;
    let semigroups = opts
        .times
        .iter()
        .map(|&t| semigroup_at(a, t, tol))
        .collect::<Result<Vec<_>>>()?;
    let rt = tol.residual_tol;
    let scale = spectral_norm(&m).max(1.0);

    let report = match spec {
        ProjectionSpec::Subspace(s) => {
            if s.ambient_dim() != n {
                return Err(Error::dims("subspace does not live in H".to_string()));
            }
            let p = s.projector();
            let q = identity(n) - &p;
            let leak = |x: &ComplexMatrix| -spectral_norm(&(&q * x * &p));
            let res_margin = resolvents.iter().map(leak).fold(0.0, f64::min);
            let sg_margin = semigroups.iter().map(leak).fold(0.0, f64::min);
            let op_margin = if n == 0 { 0.0 } else { min_hermitian_eigenvalue(&(&q * &m)).0 };
            InvarianceReport {
                semigroup: CriterionResult { holds: sg_margin >= -rt, margin: sg_margin, mode: Mode::Certified },
                resolvent: CriterionResult { holds: res_margin >= -rt, margin: res_margin, mode: Mode::Certified },
                operator: CriterionResult {
                    holds: op_margin >= -rt * scale,
                    margin: op_margin,
                    mode: Mode::Certified,
                },
                sign_certificate: None,
                equivalent: true,
            }
        }
        ProjectionSpec::NonnegOrthant => {
            if !is_real(&m, rt) {
                return Err(Error::precondition("the orthant needs a real operator"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut op_margin = f64::INFINITY;
            for _ in 0..opts.n_samples {
                let x = ComplexVector::from_fn(n, |_, _| Complex64::from(rng.sample::<f64, _>(StandardNormal)));
                let nx = x.norm_squared();
                if nx == 0.0 {
                    continue;
                }
                let val = (&x - spec.project(&x)).dotc(&(&m * &x)).re / nx;
                op_margin = op_margin.min(val);
            }
            let pushes: Vec<ComplexVector> = (0..opts.n_push_samples)
                .map(|_| ComplexVector::from_fn(n, |_, _| Complex64::from(rng.random::<f64>())))
                .collect();
            let min_entry = |ops: &[ComplexMatrix]| {
                ops.iter()
                    .flat_map(|op| pushes.iter().map(move |x| op * x))
                    .flat_map(|y| y.iter().map(|z| z.re).collect::<Vec<_>>())
                    .fold(f64::INFINITY, f64::min)
            };
            let res_margin = min_entry(&resolvents).min(0.0);
            let sg_margin = min_entry(&semigroups).min(0.0);
            let op_margin = if op_margin.is_finite() { op_margin.min(0.0) } else { 0.0 };
            let max_off = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].re)
                .fold(f64::NEG_INFINITY, f64::max);
            let max_off = if n < 2 { 0.0 } else { max_off };
            let sign = Certificate::decide("orthant_sign_structure", max_off <= rt * scale, -max_off, rt, || {
                let (i, j) = (0..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                    .max_by(|&(a, b), &(c, d)| m[(a, b)].re.total_cmp(&m[(c, d)].re))
                    .expect("n >= 2");
                let mut w = ComplexVector::zeros(n);
                w[i] = Complex64::from(1.0);
                w[j] = Complex64::from(1.0);
                w
            });
            InvarianceReport {
                semigroup: CriterionResult { holds: sg_margin >= -rt, margin: sg_margin, mode: Mode::Sampled },
                resolvent: CriterionResult { holds: res_margin >= -rt, margin: res_margin, mode: Mode::Sampled },
                operator: CriterionResult { holds: op_margin >= -rt * scale, margin: op_margin, mode: Mode::Sampled },
                sign_certificate: Some(sign),
                equivalent: true,
            }
        }
    };
    let verdicts = [report.semigroup.holds, report.resolvent.holds, report.operator.holds];
    let mut equivalent = verdicts.iter().all(|&v| v == verdicts[0]);
    if let Some(c) = &report.sign_certificate {
        equivalent &= c.is_holds() == verdicts[0];
    }
    if !equivalent {
        return Err(Error::degenerate(format!(
            "invariance criteria disagree (semigroup {}, resolvent {}, operator {}{})",
            verdicts[0],
            verdicts[1],
            verdicts[2],
            report
                .sign_certificate
                .as_ref()
                .map_or(String::new(), |c| format!(", sign structure {}", c.is_holds()))
        )));
    }
    Ok(InvarianceReport { equivalent, ..report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormInvarianceReport {
    /// Smallest `Re a(u, u - w)` over the tested `u` (normalized by `|j u|^2`).
    pub min_value: f64,
    pub holds: bool,
    pub mode: Mode,
    /// `P j(u)` was not in the range of `j`; the verdict then comes from the
    /// operator criterion.
    pub approximation_required: bool,
    pub operator_criterion: CriterionResult,
}

/// Invariance through the form: with `j(w) = P j(u)`, `Re a(u, u - w) >= 0`
/// for all `u` in `D_j(a)`. Must agree with the operator criterion.
pub fn form_invariance_check(
    fs: &FormSystem,
    spec: &ProjectionSpec,
    opts: &InvarianceOptions,
) -> Result<FormInvarianceReport> {
    let tol = *fs.tolerances();
    let op = build_operator(fs)?;
    require_m_accretive(&op)?;
    let operator_criterion = invariance_check(&op, spec, opts, &tol)?.operator;
    let j = fs.j();
    let t0 = fs.t0();
    let rt = tol.residual_tol;
    let d = crate::association::domain_subspace(fs)?;
    let scale = spectral_norm(t0).max(1.0);

    let (min_value, approximation_required, mode) = match spec {
        ProjectionSpec::Subspace(s) => {
            if s.ambient_dim() != fs.dim_h() {
                return Err(Error::dims("subspace does not live in H".to_string()));
            }
            // coordinates of D_j(a) in which j is an isometry onto D(A)
            let jd = j * d.basis();
            let dec = svd(&jd);
            let r = dec.s.iter().filter(|&&x| x > tol.rank_rtol * spectral_norm(j) && x > 0.0).count();
            let sinv = crate::numerics::linalg::diag_real(&dec.s[..r].iter().map(|x| 1.0 / x).collect::<Vec<_>>());
            let w_r = ComplexMatrix::from_fn(dec.v.nrows(), r, |i, k| dec.v[(i, k)]);
            let u = d.basis() * w_r * sinv;
            let target = s.projector() * j * &u;
            let w = lstsq(j, &target, tol.rank_rtol);
            let miss = spectral_norm(&(j * &w - &target));
            let approx = miss > rt * spectral_norm(&target).max(1.0);
            let mq = (&u - &w).adjoint() * t0 * &u;
            let val = if r == 0 { 0.0 } else { hermitian_eigen(&mq).0[0] };
            (val, approx, Mode::Certified)
        }
        ProjectionSpec::NonnegOrthant => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
            let n = fs.dim_h();
            let jd = j * d.basis();
            let mut worst = f64::INFINITY;
            let mut approx = false;
            for _ in 0..opts.n_samples {
                let x = ComplexVector::from_fn(n, |_, _| Complex64::from(rng.sample::<f64, _>(StandardNormal)));
                let nx = x.norm_squared();
                if nx == 0.0 {
                    continue;
                }
                let c = lstsq(&jd, &ComplexMatrix::from_column_slice(n, 1, x.as_slice()), tol.rank_rtol);
                let u = d.basis() * c;
                let px = spec.project(&x);
                let w = lstsq(j, &ComplexMatrix::from_column_slice(n, 1, px.as_slice()), tol.rank_rtol);
                if (j * &w).column(0).into_owned().metric_distance(&px) > rt * px.norm().max(1.0) {
                    approx = true;
                }
                let uw = (&u - &w).column(0).into_owned();
                let val = uw.dotc(&(t0 * u.column(0))).re / nx;
                worst = worst.min(val);
            }
            (if worst.is_finite() { worst.min(0.0) } else { 0.0 }, approx, Mode::Sampled)
        }
    };
    let holds = if approximation_required {
        operator_criterion.holds
    } else {
        min_value >= -rt * scale
    };
    if holds != operator_criterion.holds {
        return Err(Error::degenerate(format!(
            "form criterion ({holds}) disagrees with operator criterion ({})",
            operator_criterion.holds
        )));
    }
    Ok(FormInvarianceReport { min_value, holds, mode, approximation_required, operator_criterion })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbReport {
    /// `|(A + S)^{-1}|`.
    pub lhs: f64,
    /// `2|A^{-1}| + (1 + tan theta)^2 |S| |A^{-1}|^2`.
    pub rhs: f64,
    pub slack: f64,
    pub theta: f64,
    /// `A + S` is m-accretive and invertible.
    pub sum_m_accretive: Certificate,
    pub verdict: Certificate,
}

/// Bound on the inverse of an m-accretive operator perturbed by a bounded
/// sectorial one.
pub fn perturb_bound_check(a: &ComplexMatrix, s: &ComplexMatrix, tol: &ToleranceConfig) -> Result<PerturbReport> {
    if !a.is_square() || a.shape() != s.shape() {
        return Err(Error::dims("A and S must be square of equal size".to_string()));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::InvalidInput("empty operators".into()));
    }
    let rt = tol.residual_tol;
    if min_hermitian_eigenvalue(a).0 < -rt {
        return Err(Error::precondition("A is not accretive"));
    }
    let sa = svd(a);
    if sa.s[n - 1] <= tol.rank_rtol * sa.s[0] {
        return Err(Error::precondition("A is not invertible"));
    }
    let sect = check_sectorial(s, rt)?;
    let theta = match (sect.vertex_zero, sect.semi_angle) {
        (true, Some(t)) => t,
        _ => return Err(Error::precondition("S is not sectorial with vertex 0")),
    };
    let ainv = 1.0 / sa.s[n - 1];
    let snorm = spectral_norm(s);
    let sum = a + s;
    let ss = svd(&sum);
    let lhs = 1.0 / ss.s[n - 1];
    let rhs = 2.0 * ainv + (1.0 + theta.tan()).powi(2) * snorm * ainv * ainv;
    let slack = rhs - lhs;

    let sum_op = AssociatedOperator::from_matrix(&sum, tol)?;
    let invertible = ss.s[n - 1] > tol.rank_rtol * ss.s[0];
    let sum_m_accretive = match (&sum_op.m_accretive.witness, invertible) {
        (None, true) => Certificate::holds("sum_m_accretive", ss.s[n - 1], rt),
        (Some(w), _) => Certificate::fails("sum_m_accretive", sum_op.m_accretive.margin, rt, w.clone()),
        (None, false) => Certificate::fails("sum_m_accretive", ss.s[n - 1], rt, ss.v.column(n - 1).into_owned()),
    };
    let verdict = Certificate::decide("perturb_bound_check", slack >= -rt, slack, rt, || {
        ss.v.column(n - 1).into_owned()
    });
    Ok(PerturbReport { lhs, rhs, slack, theta, sum_m_accretive, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `B_n = I / n`.
    ScaledIdentity,
    /// `B_n = M / n` for a matrix with positive definite Hermitian part.
    ScaledMatrix,
}

/// Experiment configuration, `{"family", "matrix"?, "theta", "n_max"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<RawMatrix>,
    pub theta: f64,
    pub n_max: u64,
}

impl ApproxConfig {
    pub fn scaled_identity(n_max: u64) -> Self {
        ApproxConfig { family: Family::ScaledIdentity, matrix: None, theta: 0.0, n_max }
    }

    pub fn scaled_matrix(m: &ComplexMatrix, n_max: u64) -> Self {
        ApproxConfig { family: Family::ScaledMatrix, matrix: Some(to_raw(m)), theta: 0.0, n_max }
    }

    pub fn from_json(text: &[u8]) -> Result<Self> {
        serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub n: u64,
    pub delta_n: f64,
    pub epsilon_n: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxReport {
    pub schedule: Vec<SchedulePoint>,
    /// `|(I + A_n)^{-1} - (I + A)^{-1}|`.
    pub errors: Vec<f64>,
    /// `(1 + tan theta) (epsilon_n / sqrt(delta_n)) |Z|`.
    pub bounds: Vec<f64>,
    pub z_norm: f64,
    pub warnings: Vec<String>,
}

/// Perturbs the form by `B_n = M / n` for `n = 1, 2, 4, ... <= n_max` and
/// compares the resolvents at 1 against the theoretical bound.
pub fn approx_experiment(fs: &FormSystem, cfg: &ApproxConfig) -> Result<ApproxReport> {
    let tol = *fs.tolerances();
    let dim = fs.dim_v();
    if cfg.n_max < 1 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if !(cfg.theta >= 0.0 && cfg.theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidInput("theta must lie in [0, pi/2)".into()));
    }
    let base = match cfg.family {
        Family::ScaledIdentity => identity(dim),
        Family::ScaledMatrix => {
            let raw = cfg
                .matrix
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("scaled_matrix needs a matrix".into()))?;
            let m = from_raw(raw, dim).map_err(Error::Parse)?;
            if m.shape() != (dim, dim) {
                return Err(Error::dims(format!("schedule matrix must be {dim}x{dim}")));
            }
            m
        }
    };
    let (eig, _) = hermitian_eigen(&base);
    let (lo, hi) = (eig.first().copied().unwrap_or(1.0), eig.last().copied().unwrap_or(1.0));
    if lo <= 0.0 {
        return Err(Error::precondition("schedule matrix must have positive definite Hermitian part"));
    }
    let sect = check_sectorial(&base, tol.residual_tol)?;
    let theta = cfg
        .theta
        .max(sect.semi_angle.ok_or_else(|| Error::precondition("schedule matrix is not sectorial"))?);

    let r = resolvent_at_one(fs)?;
    let z = resolvent_factor(fs)?;
    let z_norm = spectral_norm(&z);

    let mut report = ApproxReport {
        schedule: Vec::new(),
        errors: Vec::new(),
        bounds: Vec::new(),
        z_norm,
        warnings: Vec::new(),
    };
    let mut n: u64 = 1;
    let mut prev_ratio = f64::INFINITY;
    while n <= cfg.n_max {
        let inv = 1.0 / n as f64;
        let (delta, eps) = (lo * inv, hi * inv);
        let fs_n = FormSystem::new(fs.t0() + &base * real(inv), fs.j().clone(), tol)?;
        if check_j_elliptic(&fs_n, &[0.0])?.is_none() {
            return Err(Error::degenerate(format!("perturbed form is not j-elliptic at n = {n}")));
        }
        let r_n = resolvent_at_one(&fs_n)?;
        let err = spectral_norm(&(r_n - &r));
        let bound = (1.0 + theta.tan()) * (eps / delta.sqrt()) * z_norm;
        if err > bound + tol.residual_tol {
            return Err(Error::BoundViolation(format!(
                "resolvent error {err:.3e} exceeds bound {bound:.3e} at n = {n}"
            )));
        }
        let ratio = eps * eps / delta;
        if ratio >= prev_ratio {
            report.warnings.push(format!("epsilon_n^2 / delta_n does not decrease at n = {n}"));
        }
        prev_ratio = ratio;
        report.schedule.push(SchedulePoint { n, delta_n: delta, epsilon_n: eps, theta });
        report.errors.push(err);
        report.bounds.push(bound);
        n = match n.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::from_real_rows;

    fn op(m: ComplexMatrix) -> AssociatedOperator {
        AssociatedOperator::from_matrix(&m, &ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn semigroup_examples() {
        let tol = ToleranceConfig::default();
        let a = op(identity(3));
        assert!((semigroup_at(&a, 0.0, &tol).unwrap() - identity(3)).norm() < 1e-15);
        let e = semigroup_at(&a, 1.0, &tol).unwrap();
        assert!((e - identity(3) * real((-1f64).exp())).norm() < 1e-14);
        let skew = op(from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
        let t = 2.5;
        let e = semigroup_at(&skew, t, &tol).unwrap();
        let rot = from_real_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]);
        assert!((e - rot).norm() < 1e-13);
        assert!(semigroup_at(&skew, -1.0, &tol).is_err());
    }

    #[test]
    fn identity_keeps_subspaces() {
        let tol = ToleranceConfig::default();
        let r = invariance_check(
            &op(identity(3)),
            &ProjectionSpec::Subspace(Subspace::coordinate(3, &[0, 2])),
            &InvarianceOptions::default(),
            &tol,
        )
        .unwrap();
        assert!(r.semigroup.holds && r.resolvent.holds && r.operator.holds && r.equivalent);
    }

    #[test]
    fn rotation_breaks_subspace() {
        let tol = ToleranceConfig::default();
        let r = invariance_check(
            &op(from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]])),
            &ProjectionSpec::Subspace(Subspace::coordinate(2, &[0])),
            &InvarianceOptions::default(),
            &tol,
        )
        .unwrap();
        assert!(!r.semigroup.holds && !r.resolvent.holds && !r.operator.holds);
    }

    #[test]
    fn perturb_trivial_cases() {
        let tol = ToleranceConfig::default();
        let r = perturb_bound_check(&identity(2), &ComplexMatrix::zeros(2, 2), &tol).unwrap();
        assert!(r.verdict.is_holds());
        let r = perturb_bound_check(&identity(2), &identity(2), &tol).unwrap();
        assert!((r.lhs - 0.5).abs() < 1e-14 && (r.rhs - 3.0).abs() < 1e-14);
        assert!(r.sum_m_accretive.is_holds());
    }

    #[test]
    fn approx_on_zero_form() {
        let fs = FormSystem::new(ComplexMatrix::zeros(2, 2), identity(2), ToleranceConfig::default()).unwrap();
        let rep = approx_experiment(&fs, &ApproxConfig::scaled_identity(64)).unwrap();
        assert_eq!(rep.errors.len(), 7);
        for (e, b) in rep.errors.iter().zip(&rep.bounds) {
            assert!(e <= b);
        }
    }

    #[test]
    fn config_parses() {
        let cfg = ApproxConfig::from_json(br#"{"family":"scaled_identity","theta":0.0,"n_max":8}"#).unwrap();
        assert_eq!(cfg, ApproxConfig::scaled_identity(8));
        assert!(ApproxConfig::from_json(br#"{"family":"other","theta":0,"n_max":8}"#).is_err());
    }
}
