use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Builds a matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(nrows, ncols, |i, j| real(rows[i][j]))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Thin singular value decomposition `M = U diag(s) V*` with singular values
/// sorted in decreasing order. `U` is `m x k`, `V` is `n x k`, `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

fn to_faer(m: &ComplexMatrix) -> faer::Mat<Complex64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, Complex64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (nr, nc) = m.shape();
    let k = nr.min(nc);
    if k == 0 {
        return Svd {
            u: ComplexMatrix::zeros(nr, 0),
            s: Vec::new(),
            v: ComplexMatrix::zeros(nc, 0),
        };
    }
    let dec = to_faer(m).thin_svd().expect("SVD did not converge");
    let s = (0..k).map(|i| dec.S()[i].re).collect();
    Svd { u: from_faer(dec.U()), s, v: from_faer(dec.V()) }
}

/// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending.
pub fn hermitian_eigen(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = h.nrows();
    assert!(h.is_square(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let dec = to_faer(&hermitian_part(h))
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigensolver did not converge");
    let vals = (0..n).map(|i| dec.S()[i].re).collect();
    (vals, from_faer(dec.U()))
}

/// Smallest eigenvalue of the Hermitian part (`+inf` for the empty matrix).
pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> (f64, Option<ComplexVector>) {
    let (vals, vecs) = hermitian_eigen(m);
    match vals.first() {
        Some(&v) => (v, Some(vecs.column(0).into_owned())),
        None => (f64::INFINITY, None),
    }
}

/// Largest eigenvalue of the Hermitian part (`-inf` for the empty matrix).
pub fn max_hermitian_eigenvalue(m: &ComplexMatrix) -> (f64, Option<ComplexVector>) {
    let (vals, vecs) = hermitian_eigen(m);
    match vals.last() {
        Some(&v) => (v, Some(vecs.column(vals.len() - 1).into_owned())),
        None => (f64::NEG_INFINITY, None),
    }
}

pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    svd(m).s.first().copied().unwrap_or(0.0)
}

/// Smallest singular value of a square (or tall) matrix; `+inf` when empty.
pub fn sigma_min(m: &ComplexMatrix) -> f64 {
    svd(m).s.last().copied().unwrap_or(f64::INFINITY)
}

/// Minimum-norm least-squares solution of `A X = B`, discarding singular
/// values below `rtol * sigma_max(A)`.
pub fn lstsq(a: &ComplexMatrix, b: &ComplexMatrix, rtol: f64) -> ComplexMatrix {
    assert_eq!(a.nrows(), b.nrows(), "lstsq: row mismatch");
    let dec = svd(a);
    let cutoff = rtol * dec.s.first().copied().unwrap_or(0.0);
    let mut x = ComplexMatrix::zeros(a.ncols(), b.ncols());
    let ub = dec.u.adjoint() * b;
    for (k, &s) in dec.s.iter().enumerate() {
        if s > cutoff && s > 0.0 {
            let row = ub.row(k).unscale(s);
            x += dec.v.column(k) * row;
        }
    }
    x
}

pub fn inverse(m: &ComplexMatrix) -> Option<ComplexMatrix> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    m.clone().try_inverse().filter(is_finite)
}

/// Matrix exponential `e^M` (Pade scaling and squaring).
pub fn expm(m: &ComplexMatrix) -> ComplexMatrix {
    if m.nrows() == 0 {
        return m.clone();
    }
    m.exp()
}

/// Frobenius-free helper: `||a - b||_2`.
pub fn dist2(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    spectral_norm(&(a - b))
}

/// Stacks matrices with equal row counts side by side.
pub fn hstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let nrows = blocks.first().map_or(0, |b| b.nrows());
    let ncols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(nrows, ncols);
    let mut col = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows, "hstack: row mismatch");
        out.view_mut((0, col), (nrows, b.ncols())).copy_from(*b);
        col += b.ncols();
    }
    out
}

/// Builds a 2x2 block matrix.
pub fn block2(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    c: &ComplexMatrix,
    d: &ComplexMatrix,
) -> ComplexMatrix {
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    assert_eq!(b.shape(), (r1, c2));
    assert_eq!(c.shape(), (r2, c1));
    let mut out = ComplexMatrix::zeros(r1 + r2, c1 + c2);
    out.view_mut((0, 0), (r1, c1)).copy_from(a);
    out.view_mut((0, c1), (r1, c2)).copy_from(b);
    out.view_mut((r1, 0), (r2, c1)).copy_from(c);
    out.view_mut((r1, c1), (r2, c2)).copy_from(d);
    out
}

pub fn diag_real(d: &[f64]) -> ComplexMatrix {
    let n = d.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { real(0.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_of_nearly_rank_deficient_residual() {
        // a projection residual with rounding noise in place of exact zeros
        let m = from_real_rows(&[
            &[1.9860273225978188e-16, -0.19999999999999962, 0.4000000000000002],
            &[0.9999999999999998, -6.661338147750939e-16, -3.3306690738754696e-16],
            &[-1.5722716303899398e-16, -0.13333333333333353, 0.2666666666666665],
        ]);
        let d = svd(&m);
        assert!((&d.u * diag_real(&d.s) * d.v.adjoint() - &m).norm() < 1e-14);
        assert!((d.s[1] - 0.53748384988657).abs() < 1e-12);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let m = ComplexMatrix::from_fn(4, 3, |i, j| c((i * 3 + j) as f64 * 0.3 - 1.0, (i as f64) - (j as f64) * 0.5));
        let d = svd(&m);
        assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        let recon = &d.u * diag_real(&d.s) * d.v.adjoint();
        assert!((recon - &m).norm() < 1e-12);
    }

    #[test]
    fn svd_of_empty_matrix() {
        let d = svd(&ComplexMatrix::zeros(0, 3));
        assert!(d.s.is_empty());
        assert_eq!(d.v.shape(), (3, 0));
    }

    #[test]
    fn hermitian_eigen_ascending() {
        let m = from_real_rows(&[&[2.0, 0.0], &[0.0, -1.0]]);
        let (vals, _) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 2);
        assert!((vals[0] + 1.0).abs() < 1e-14 && (vals[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lstsq_solves_full_rank() {
        let a = from_real_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let b = from_real_rows(&[&[1.0], &[2.0]]);
        let x = lstsq(&a, &b, 1e-12);
        assert!((&a * &x - &b).norm() < 1e-14);
    }

    #[test]
    fn expm_of_skew_is_rotation() {
        let t = 0.7;
        let a = from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]).scale(-t);
        let e = expm(&a);
        let expected = from_real_rows(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]);
        assert!((e - expected).norm() < 1e-14);
    }
}
