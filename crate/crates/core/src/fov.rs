//! Numerical range and the scalar condition certificates derived from it.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Certificate, FormSystem};
use crate::numerics::linalg::{
    hermitian_part, max_hermitian_eigenvalue, min_hermitian_eigenvalue, spectral_norm, svd,
};
use crate::numerics::{ComplexMatrix, ComplexVector};

pub const DEFAULT_ANGLES: usize = 360;

/// Support points of `W(M)`, counterclockwise.
///
/// The polygon lies inside `W(M)`; `error_bound` is the largest distance
/// from a polygon edge to the intersection of the support lines at its
/// ends, so `W(M)` lies within `error_bound` of the polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldOfValues {
    pub boundary_points: Vec<Complex64>,
    pub n_angles: usize,
    pub error_bound: f64,
}

/// Edges whose outer gap exceeds this (relative to `|M|_F`) are refined.
const REFINE_RTOL: f64 = 1e-12;
/// Edges narrower than this angle are never split.
const MIN_SPLIT_ANGLE: f64 = 1e-13;

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::dims(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

fn rotate(m: &ComplexMatrix, phi: f64) -> ComplexMatrix {
    m * Complex64::from_polar(1.0, -phi)
}

/// The point of `W(M)` extremal in direction `e^{i phi}`, with the unit
/// vector that realizes it.
pub fn support_point(m: &ComplexMatrix, phi: f64) -> (Complex64, ComplexVector) {
    let (_, x) = max_hermitian_eigenvalue(&rotate(m, phi));
    let x = x.expect("nonempty matrix");
    (x.dotc(&(m * &x)), x)
}

/// Sweeps `n_angles` equally spaced directions, then spends a bounded number
/// of further support points splitting the edges with the largest outer gap.
/// Corners of polygonal ranges are found this way even when they fall
/// between sweep directions.
pub fn field_of_values(m: &ComplexMatrix, n_angles: usize) -> Result<FieldOfValues> {
    require_square(m)?;
    if n_angles < 8 {
        return Err(Error::InvalidInput(format!("n_angles must be at least 8, got {n_angles}")));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidInput("field of values of an empty matrix".into()));
    }
    let tol = REFINE_RTOL * m.norm().max(f64::MIN_POSITIVE);
    let sweep: Vec<(f64, Complex64)> = (0..=n_angles)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_angles as f64;
            (phi, support_point(m, phi).0)
        })
        .collect();
    let mut points: Vec<(f64, Complex64)> = sweep[..n_angles].to_vec();
    let mut heap: BinaryHeap<Edge> = sweep.windows(2).map(|w| Edge::new(w[0], w[1])).collect();
    let budget = (48 * m.nrows()).clamp(n_angles, 8 * n_angles);
    for _ in 0..budget {
        match heap.peek() {
            Some(e) if e.gap > tol && e.b.0 - e.a.0 > MIN_SPLIT_ANGLE => {}
            _ => break,
        }
        let e = heap.pop().expect("peeked");
        let phi = 0.5 * (e.a.0 + e.b.0);
        let mid = (phi, support_point(m, phi).0);
        points.push(mid);
        heap.push(Edge::new(e.a, mid));
        heap.push(Edge::new(mid, e.b));
    }
    let error_bound = heap.peek().map_or(0.0, |e| e.gap);
    points.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(FieldOfValues { boundary_points: points.into_iter().map(|p| p.1).collect(), n_angles, error_bound })
}

struct Edge {
    gap: f64,
    a: (f64, Complex64),
    b: (f64, Complex64),
}

impl Edge {
    fn new(a: (f64, Complex64), b: (f64, Complex64)) -> Self {
        let gap = if a.1 == b.1 { 0.0 } else { outer_gap(a, b) };
        Edge { gap, a, b }
    }
}

impl PartialEq for Edge {
    fn eq(&self, other: &Self) -> bool {
        self.gap.total_cmp(&other.gap).is_eq()
    }
}

impl Eq for Edge {}

impl PartialOrd for Edge {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Edge {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.gap.total_cmp(&other.gap)
    }
}

/// Distance from the chord `pa pb` to the corner where the support lines
/// at `phi_a` and `phi_b` meet. Computed from the angles between the chord
/// normal and the two directions, which stays accurate for close angles.
fn outer_gap((phi_a, pa): (f64, Complex64), (phi_b, pb): (f64, Complex64)) -> f64 {
    let e = pb - pa;
    let width = phi_b - phi_a;
    let normal = e.arg() - FRAC_PI_2;
    let alpha = (normal - phi_a).rem_euclid(2.0 * PI);
    let alpha = if alpha > PI { alpha - 2.0 * PI } else { alpha }.clamp(0.0, width);
    let beta = width - alpha;
    let denom = width.sin();
    if denom <= 0.0 {
        return e.norm();
    }
    e.norm() * alpha.sin() * beta.sin() / denom
}

impl FieldOfValues {
    /// Distance from `z` to the polygon spanned by the support points.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        let pts = &self.boundary_points;
        let n = pts.len();
        let mut inside = true;
        let mut best = f64::INFINITY;
        for k in 0..n {
            let a = pts[k];
            let b = pts[(k + 1) % n];
            let e = b - a;
            let cross = e.re * (z - a).im - e.im * (z - a).re;
            if cross < -1e-15 * (e.norm() * (z - a).norm()).max(1e-300) {
                inside = false;
            }
            best = best.min(segment_distance(z, a, b));
        }
        if inside && n >= 3 && self.area() > 0.0 {
            0.0
        } else {
            best
        }
    }

    /// Signed area (positive for counterclockwise order).
    pub fn area(&self) -> f64 {
        let pts = &self.boundary_points;
        let n = pts.len();
        (0..n)
            .map(|k| {
                let a = pts[k];
                let b = pts[(k + 1) % n];
                a.re * b.im - a.im * b.re
            })
            .sum::<f64>()
            / 2.0
    }
}

pub(crate) fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let e = b - a;
    let len2 = e.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * e.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + e * t)).norm()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionIii {
    pub certificate: Certificate,
    pub mu: f64,
}

/// Invertibility of `T`: `mu = sigma_min(T)`, holding when
/// `mu > dim_V * rank_rtol * ||T||`. Witness: the right singular vector of
/// the smallest singular value.
pub fn check_condition_iii(fs: &FormSystem) -> ConditionIii {
    let t = fs.derived_t();
    let n = fs.dim_v();
    let rtol = fs.tolerances().rank_rtol;
    if n == 0 {
        return ConditionIii {
            certificate: Certificate::holds("condition_iii", 0.0, rtol),
            mu: 0.0,
        };
    }
    let dec = svd(&t);
    let mu = dec.s[n - 1];
    let threshold = n as f64 * rtol * dec.s[0];
    let certificate = Certificate::decide("condition_iii", mu > threshold, mu, rtol, || {
        dec.v.column(n - 1).into_owned()
    });
    ConditionIii { certificate, mu }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JElliptic {
    pub omega: f64,
    pub mu: f64,
}

/// `0, 1, 2, 4, ..., 2^10`.
pub fn default_omega_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((0..=10).map(|k| f64::from(1u32 << k))).collect()
}

/// First `omega` on the grid with `lambda_min(Re T0 + omega J*J) > residual_tol`.
pub fn check_j_elliptic(fs: &FormSystem, omega_grid: &[f64]) -> Result<Option<JElliptic>> {
    if omega_grid.is_empty() {
        return Err(Error::InvalidInput("omega grid is empty".into()));
    }
    let re = hermitian_part(fs.t0());
    let jj = fs.j().adjoint() * fs.j();
    let tol = fs.tolerances().residual_tol;
    for &omega in omega_grid {
        let (mu, _) = min_hermitian_eigenvalue(&(&re + &jj * Complex64::from(omega)));
        if mu > tol {
            return Ok(Some(JElliptic { omega, mu }));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorialityReport {
    pub vertex_zero: bool,
    /// `lambda_min` of the Hermitian part.
    pub vertex_margin: f64,
    /// Smallest certified semi-angle, present only for sectorial input.
    pub semi_angle: Option<f64>,
    pub certificate: Certificate,
}

/// Largest violation of the two half-planes bounding the sector of
/// semi-angle `theta`; the sector contains `W(M)` iff this is `<= 0`.
fn sector_excess(m: &ComplexMatrix, theta: f64) -> f64 {
    let upper = max_hermitian_eigenvalue(&rotate(m, theta + FRAC_PI_2)).0;
    let lower = max_hermitian_eigenvalue(&rotate(m, -(theta + FRAC_PI_2))).0;
    upper.max(lower)
}

/// Decides whether `W(M)` lies in a closed sector `|arg z| <= theta` with
/// `theta < pi/2`, and finds the smallest such angle by bisection.
///
/// The sector test at each angle is the exact half-plane eigenvalue test,
/// so the reported angle never undershoots the true one by more than the
/// bisection width plus rounding.
pub fn check_sectorial(m: &ComplexMatrix, residual_tol: f64) -> Result<SectorialityReport> {
    require_square(m)?;
    let n = m.nrows();
    let (lam, vec) = min_hermitian_eigenvalue(m);
    let vertex_margin = if n == 0 { 0.0 } else { lam };
    let vertex_zero = vertex_margin >= -residual_tol;
    let slack = 64.0 * f64::EPSILON * spectral_norm(m).max(f64::MIN_POSITIVE) * (n.max(1) as f64);
    let fits = |theta: f64| sector_excess(m, theta) <= slack;
    let semi_angle = if n == 0 || fits(0.0) {
        Some(0.0)
    } else {
        let mut hi = FRAC_PI_2 * (1.0 - 1e-12);
        if !fits(hi) {
            None
        } else {
            let mut lo = 0.0;
            for _ in 0..64 {
                let mid = 0.5 * (lo + hi);
                if fits(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    };
    let sectorial = vertex_zero && semi_angle.is_some();
    let certificate = Certificate::decide(
        "check_sectorial",
        sectorial,
        semi_angle.map_or(-1.0, |t| FRAC_PI_2 - t),
        residual_tol,
        || {
            if !vertex_zero {
                return vec.clone().expect("nonempty");
            }
            // a unit vector whose value leaves every sector: the Re = 0 extreme
            let (_, x) = support_point(m, PI);
            x
        },
    );
    Ok(SectorialityReport {
        vertex_zero,
        vertex_margin,
        semi_angle: if vertex_zero { semi_angle } else { None },
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncompleteBound {
    pub rho: f64,
    pub certificate: Certificate,
}

/// `h(phi) = lambda_min(Herm(e^{-i phi} T))`; `max_phi h` is the distance
/// from 0 to `W(T)` when positive.
fn separation(t: &ComplexMatrix, phi: f64) -> f64 {
    min_hermitian_eigenvalue(&rotate(t, phi)).0
}

/// Certified lower bound `rho` on the distance from 0 to `W(T)`.
///
/// Evaluates the separating-line bound on a grid of directions and refines
/// the best one by golden-section search; each evaluated direction yields a
/// valid lower bound, so `rho` never exceeds the true distance.
pub fn check_incomplete_bound(fs: &FormSystem) -> IncompleteBound {
    let t = fs.derived_t();
    let tol = fs.tolerances().residual_tol;
    if fs.dim_v() == 0 {
        return IncompleteBound {
            rho: 0.0,
            certificate: Certificate::holds("check_incomplete_bound", 0.0, tol),
        };
    }
    let n = DEFAULT_ANGLES;
    let step = 2.0 * PI / n as f64;
    let (mut best_phi, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..n {
        let phi = k as f64 * step;
        let h = separation(&t, phi);
        if h > best {
            best = h;
            best_phi = phi;
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (best_phi - step, best_phi + step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (separation(&t, c), separation(&t, d));
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = separation(&t, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = separation(&t, d);
        }
    }
    best = best.max(fc).max(fd);
    let rho = best.max(0.0);
    let certificate = Certificate::decide("check_incomplete_bound", rho > tol, rho, tol, || {
        let (_, x) = min_hermitian_eigenvalue(&rotate(&t, best_phi));
        x.expect("nonempty")
    });
    IncompleteBound { rho, certificate }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{c, from_real_rows, identity};
    use crate::ToleranceConfig;

    fn fs(t0: ComplexMatrix, j: ComplexMatrix) -> FormSystem {
        FormSystem::new(t0, j, ToleranceConfig::default()).unwrap()
    }

    #[test]
    fn fov_of_identity() {
        let w = field_of_values(&identity(3), 16).unwrap();
        assert!(w.boundary_points.iter().all(|p| (p - Complex64::from(1.0)).norm() < 1e-12));
    }

    #[test]
    fn refinement_finds_sharp_corners() {
        // a thin triangle whose apex normal cone is far narrower than the sweep step
        let eig = [c(0.0, 0.0), c(10.0, 0.01), c(10.0, -0.01)];
        let m = ComplexMatrix::from_diagonal(&ComplexVector::from_row_slice(&eig));
        let w = field_of_values(&m, 16).unwrap();
        for z in eig {
            assert!(w.distance_to(z) < 1e-9, "{z} at {}", w.distance_to(z));
        }
        assert!(w.error_bound < 1e-9);
    }

    #[test]
    fn fov_rejects_bad_input() {
        assert!(field_of_values(&ComplexMatrix::zeros(2, 3), 16).is_err());
        assert!(field_of_values(&identity(2), 4).is_err());
    }

    #[test]
    fn fov_is_counterclockwise() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let w = field_of_values(&m, 64).unwrap();
        assert!(w.area() > 0.0);
    }

    #[test]
    fn condition_iii_examples() {
        let multival = fs(
            from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]),
            from_real_rows(&[&[0.0, 1.0]]),
        );
        let r = check_condition_iii(&multival);
        assert!(r.certificate.is_holds());
        // singular values of [[0,1],[-1,1]] are the golden ratio and its inverse
        assert!((r.mu - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-14);

        let zero = fs(ComplexMatrix::zeros(2, 2), from_real_rows(&[&[1.0, 0.0]]));
        let r = check_condition_iii(&zero);
        assert!(!r.certificate.is_holds());
        let w = r.certificate.witness.unwrap();
        assert!(w[0].norm() < 1e-14 && (w[1].norm() - 1.0).abs() < 1e-14);

        let id = fs(identity(2), ComplexMatrix::zeros(0, 2));
        assert!((check_condition_iii(&id).mu - 1.0).abs() < 1e-15);
    }

    #[test]
    fn j_elliptic_examples() {
        let r = check_j_elliptic(&fs(identity(2), from_real_rows(&[&[3.0, 1.0]])), &default_omega_grid())
            .unwrap()
            .unwrap();
        assert_eq!(r.omega, 0.0);
        assert!((r.mu - 1.0).abs() < 1e-14);
        let multival = fs(
            from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]),
            from_real_rows(&[&[0.0, 1.0]]),
        );
        assert!(check_j_elliptic(&multival, &default_omega_grid()).unwrap().is_none());
        assert!(check_j_elliptic(&multival, &[]).is_err());
    }

    #[test]
    fn sectorial_examples() {
        let r = check_sectorial(&identity(2), 1e-9).unwrap();
        assert!(r.vertex_zero && r.semi_angle == Some(0.0));

        let d = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, -1.0)]);
        let r = check_sectorial(&d, 1e-9).unwrap();
        let theta = r.semi_angle.unwrap();
        assert!(theta >= std::f64::consts::FRAC_PI_4 - 1e-12 && theta < std::f64::consts::FRAC_PI_4 + 1e-9);

        let skew = from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let r = check_sectorial(&skew, 1e-9).unwrap();
        assert!(r.vertex_zero && r.semi_angle.is_none() && !r.certificate.is_holds());
    }

    #[test]
    fn incomplete_bound_examples() {
        let r = check_incomplete_bound(&fs(identity(2), ComplexMatrix::zeros(0, 2)));
        assert!((r.rho - 1.0).abs() < 1e-12 && r.certificate.is_holds());
        let r = check_incomplete_bound(&fs(from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]), ComplexMatrix::zeros(0, 2)));
        assert_eq!(r.rho, 0.0);
        assert!(!r.certificate.is_holds());
    }
}
