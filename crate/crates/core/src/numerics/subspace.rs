use serde::{Deserialize, Serialize};

use super::linalg::{hermitian_eigen, identity, spectral_norm, svd, ComplexMatrix, ComplexVector};
use super::ToleranceConfig;
use crate::error::{Error, Result};

/// A linear subspace of `C^n`, stored as a matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient_dim: usize,
    #[serde(with = "super::encoding::matrix")]
    basis: ComplexMatrix,
}

impl Subspace {
    /// Wraps a matrix whose columns are already orthonormal.
    pub(crate) fn from_orthonormal(basis: ComplexMatrix) -> Self {
        Subspace {
            ambient_dim: basis.nrows(),
            basis,
        }
    }

    /// Wraps a basis after checking orthonormality to `10 * rank_rtol`.
    pub fn from_orthonormal_checked(basis: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let defect = spectral_norm(&(basis.adjoint() * &basis - identity(basis.ncols())));
        if defect > 10.0 * tol.rank_rtol.max(1e-12) {
            return Err(Error::InvalidInput(format!(
                "basis is not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(Self::from_orthonormal(basis))
    }

    pub fn zero(n: usize) -> Self {
        Self::from_orthonormal(ComplexMatrix::zeros(n, 0))
    }

    pub fn full(n: usize) -> Self {
        Self::from_orthonormal(identity(n))
    }

    /// Span of the given standard basis vectors (0-based indices).
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut b = ComplexMatrix::zeros(n, indices.len());
        for (col, &i) in indices.iter().enumerate() {
            b[(i, col)] = 1.0.into();
        }
        Self::from_orthonormal(b)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `(I - P) x`, the component of `x` orthogonal to the subspace.
    pub fn residual(&self, x: &ComplexMatrix) -> ComplexMatrix {
        x - &self.basis * (self.basis.adjoint() * x)
    }

    /// `||basis* basis - I||_2`.
    pub fn orthonormality_defect(&self) -> f64 {
        spectral_norm(&(self.basis.adjoint() * &self.basis - identity(self.dim())))
    }

    /// Relative distance of a vector from the subspace, `||(I-P)x|| / ||x||`.
    pub fn distance_ratio(&self, x: &ComplexVector) -> f64 {
        let n = x.norm();
        if n == 0.0 {
            return 0.0;
        }
        let r = x - &self.basis * (self.basis.adjoint() * x);
        r.norm() / n
    }
}

fn check_same_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::dims(format!(
            "subspaces live in C^{} and C^{}",
            a.ambient_dim, b.ambient_dim
        )));
    }
    Ok(())
}

/// Column space of `m`, rank decided relative to its largest singular value.
pub fn orthonormal_range(m: &ComplexMatrix, tol: &ToleranceConfig) -> Subspace {
    let sv = svd(m);
    let scale = sv.s.first().copied().unwrap_or(0.0);
    range_from_svd(m.nrows(), &sv, tol.rank_rtol * scale)
}

/// Column space of `m`, treating singular values below `rank_rtol * scale`
/// as zero. Use this when `m` is a product whose natural magnitude is known
/// (e.g. `(I - P) M` where `||M||` sets the scale).
pub fn orthonormal_range_scaled(m: &ComplexMatrix, scale: f64, tol: &ToleranceConfig) -> Subspace {
    let sv = svd(m);
    range_from_svd(m.nrows(), &sv, tol.rank_rtol * scale)
}

fn range_from_svd(nrows: usize, sv: &super::linalg::Svd, cutoff: f64) -> Subspace {
    let keep: Vec<usize> = sv
        .s
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cutoff && s > 0.0)
        .map(|(i, _)| i)
        .collect();
    let basis = ComplexMatrix::from_fn(nrows, keep.len(), |i, j| sv.u[(i, keep[j])]);
    Subspace::from_orthonormal(basis)
}

/// Numerical null space of `m`; `dim kernel + dim range = cols`.
pub fn kernel(m: &ComplexMatrix, tol: &ToleranceConfig) -> Subspace {
    complement(&orthonormal_range(&m.adjoint(), tol))
}

/// Null space with an explicit scale for the rank cutoff.
pub fn kernel_scaled(m: &ComplexMatrix, scale: f64, tol: &ToleranceConfig) -> Subspace {
    complement(&orthonormal_range_scaled(&m.adjoint(), scale, tol))
}

/// Orthogonal complement.
pub fn complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim;
    if s.dim() == 0 {
        return Subspace::full(n);
    }
    if s.dim() >= n {
        return Subspace::zero(n);
    }
    // I - P has eigenvalues exactly 0 and 1; split at 1/2.
    let q = identity(n) - s.projector();
    let (vals, vecs) = hermitian_eigen(&q);
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    debug_assert_eq!(keep.len(), n - s.dim());
    Subspace::from_orthonormal(ComplexMatrix::from_fn(n, keep.len(), |i, j| vecs[(i, keep[j])]))
}

/// Splits `s2` against `s1`: returns orthonormal directions that extend `s1`
/// to `s1 + s2`, and an orthonormal basis of `s1 ∩ s2`.
/// Both come from one SVD so that `dim(sum) + dim(intersection)` always
/// equals `dim s1 + dim s2`.
fn split(s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> (ComplexMatrix, ComplexMatrix) {
    let n = s1.ambient_dim;
    let r = s1.residual(&s2.basis);
    let sv = svd(&r);
    let cut = tol.angle_tol.sin();
    let k2 = s2.dim();
    let extra: Vec<usize> = (0..sv.s.len()).filter(|&i| sv.s[i] > cut).collect();
    let inter: Vec<usize> = (0..k2).filter(|i| !extra.contains(i)).collect();
    let extend = ComplexMatrix::from_fn(n, extra.len(), |i, j| sv.u[(i, extra[j])]);
    let w = ComplexMatrix::from_fn(k2, inter.len(), |i, j| sv.v[(i, inter[j])]);
    (extend, &s2.basis * w)
}

pub fn intersect(s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> Result<Subspace> {
    check_same_ambient(s1, s2)?;
    let (_, inter) = split(s1, s2, tol);
    Ok(Subspace::from_orthonormal(inter))
}

pub fn sum(s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> Result<Subspace> {
    check_same_ambient(s1, s2)?;
    let (extend, _) = split(s1, s2, tol);
    Ok(Subspace::from_orthonormal(super::linalg::hstack(&[&s1.basis, &extend])))
}

/// `{u : M u ∈ S}`, computed as `kernel((I - P_S) M)` with the rank cutoff
/// scaled by `||M||`.
pub fn preimage(m: &ComplexMatrix, s: &Subspace, tol: &ToleranceConfig) -> Result<Subspace> {
    if m.nrows() != s.ambient_dim {
        return Err(Error::dims(format!(
            "preimage: map has {} rows, subspace lives in C^{}",
            m.nrows(),
            s.ambient_dim
        )));
    }
    let scale = spectral_norm(m);
    Ok(kernel_scaled(&s.residual(m), scale, tol))
}

/// Image `M(S)` as an orthonormal subspace, rank cutoff scaled by `||M||`.
pub fn image(m: &ComplexMatrix, s: &Subspace, tol: &ToleranceConfig) -> Result<Subspace> {
    if m.ncols() != s.ambient_dim {
        return Err(Error::dims(format!(
            "image: map has {} columns, subspace lives in C^{}",
            m.ncols(),
            s.ambient_dim
        )));
    }
    let scale = spectral_norm(m);
    Ok(orthonormal_range_scaled(&(m * &s.basis), scale, tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Equal,
    /// First subspace contained in the second.
    Subset,
    /// Second subspace contained in the first.
    Superset,
    Incomparable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceRelation {
    pub relation: Relation,
    /// Largest principal angle relevant to the verdict (radians).
    pub max_principal_angle: f64,
    /// Largest angle between a vector of the first subspace and the second.
    pub gap_first_in_second: f64,
    /// Largest angle between a vector of the second subspace and the first.
    pub gap_second_in_first: f64,
}

impl SubspaceRelation {
    pub fn first_contained(&self) -> bool {
        matches!(self.relation, Relation::Equal | Relation::Subset)
    }

    pub fn second_contained(&self) -> bool {
        matches!(self.relation, Relation::Equal | Relation::Superset)
    }

    pub fn is_equal(&self) -> bool {
        self.relation == Relation::Equal
    }
}

/// Largest angle between a unit vector of `a` and the subspace `b`.
fn containment_gap(a: &Subspace, b: &Subspace) -> f64 {
    if a.dim() == 0 {
        return 0.0;
    }
    spectral_norm(&b.residual(&a.basis)).min(1.0).asin()
}

pub fn subspace_relation(s1: &Subspace, s2: &Subspace, tol: &ToleranceConfig) -> Result<SubspaceRelation> {
    check_same_ambient(s1, s2)?;
    let g12 = containment_gap(s1, s2);
    let g21 = containment_gap(s2, s1);
    let in12 = g12 <= tol.angle_tol;
    let in21 = g21 <= tol.angle_tol;
    let (relation, angle) = match (in12, in21) {
        (true, true) => (Relation::Equal, g12.max(g21)),
        (true, false) => (Relation::Subset, g12),
        (false, true) => (Relation::Superset, g21),
        (false, false) => (Relation::Incomparable, g12.max(g21)),
    };
    Ok(SubspaceRelation {
        relation,
        max_principal_angle: angle,
        gap_first_in_second: g12,
        gap_second_in_first: g21,
    })
}

/// Unit vector of `a` that is farthest from `b` (`None` when `a = {0}`).
pub fn farthest_vector(a: &Subspace, b: &Subspace) -> Option<ComplexVector> {
    if a.dim() == 0 {
        return None;
    }
    let r = b.residual(&a.basis);
    let sv = svd(&r);
    // top right-singular vector in a's coordinates
    let coeff = sv.v.column(0).into_owned();
    let x = &a.basis * coeff;
    let n = x.norm();
    Some(if n > 0.0 { x.unscale(n) } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{c, from_real_rows};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn range_of_identity_and_zero() {
        assert_eq!(orthonormal_range(&identity(3), &tol()).dim(), 3);
        assert_eq!(orthonormal_range(&ComplexMatrix::zeros(3, 3), &tol()).dim(), 0);
    }

    #[test]
    fn range_drops_tiny_singular_value() {
        let m = from_real_rows(&[&[1.0, 0.0], &[0.0, 1e-16]]);
        let s = orthonormal_range(&m, &tol());
        assert_eq!(s.dim(), 1);
        assert!((s.basis()[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&identity(4), &tol()).dim(), 0);
        let j = from_real_rows(&[&[0.0, 1.0]]);
        let k = kernel(&j, &tol());
        assert_eq!(k.dim(), 1);
        assert!((k.basis()[(0, 0)].norm() - 1.0).abs() < 1e-14);
        let t0 = from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        assert_eq!(kernel(&t0, &tol()).dim(), 0);
    }

    #[test]
    fn degenerate_shapes() {
        let m = ComplexMatrix::zeros(0, 3);
        assert_eq!(kernel(&m, &tol()).dim(), 3);
        assert_eq!(orthonormal_range(&m, &tol()).dim(), 0);
        let z = Subspace::zero(0);
        assert_eq!(complement(&z).dim(), 0);
    }

    #[test]
    fn intersect_and_sum_of_axes() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(intersect(&e1, &e2, &tol()).unwrap().dim(), 0);
        assert_eq!(sum(&e1, &e2, &tol()).unwrap().dim(), 2);
        let same = intersect(&e1, &e1, &tol()).unwrap();
        assert!(subspace_relation(&same, &e1, &tol()).unwrap().is_equal());
        let plus_zero = sum(&e1, &Subspace::zero(2), &tol()).unwrap();
        assert!(subspace_relation(&plus_zero, &e1, &tol()).unwrap().is_equal());
    }

    #[test]
    fn complement_of_diagonal() {
        let s = orthonormal_range(&from_real_rows(&[&[1.0], &[1.0]]), &tol());
        let cs = complement(&s);
        let expected = orthonormal_range(&from_real_rows(&[&[1.0], &[-1.0]]), &tol());
        assert!(subspace_relation(&cs, &expected, &tol()).unwrap().is_equal());
        assert_eq!(complement(&Subspace::full(3)).dim(), 0);
    }

    #[test]
    fn preimage_examples() {
        let s = Subspace::coordinate(2, &[1]);
        let pre = preimage(&identity(2), &s, &tol()).unwrap();
        assert!(subspace_relation(&pre, &s, &tol()).unwrap().is_equal());
        let pre0 = preimage(&ComplexMatrix::zeros(2, 2), &s, &tol()).unwrap();
        assert!(pre0.is_full());
        let t = from_real_rows(&[&[0.0, 1.0], &[-1.0, 1.0]]);
        let d = preimage(&t, &s, &tol()).unwrap();
        assert!(subspace_relation(&d, &Subspace::coordinate(2, &[0]), &tol()).unwrap().is_equal());
    }

    #[test]
    fn preimage_dimension_errors() {
        let s = Subspace::coordinate(3, &[1]);
        assert!(preimage(&identity(2), &s, &tol()).is_err());
        assert!(intersect(&s, &Subspace::full(2), &tol()).is_err());
    }

    #[test]
    fn relation_cases() {
        let e1 = Subspace::coordinate(2, &[0]);
        let r = subspace_relation(&e1, &Subspace::full(2), &tol()).unwrap();
        assert_eq!(r.relation, Relation::Subset);
        let r = subspace_relation(&Subspace::full(2), &e1, &tol()).unwrap();
        assert_eq!(r.relation, Relation::Superset);
        let e2 = Subspace::coordinate(2, &[1]);
        let r = subspace_relation(&e1, &e2, &tol()).unwrap();
        assert_eq!(r.relation, Relation::Incomparable);
        assert!((r.max_principal_angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn complex_vectors_handled() {
        let m = ComplexMatrix::from_row_slice(2, 1, &[c(1.0, 1.0), c(0.0, 2.0)]);
        let s = orthonormal_range(&m, &tol());
        assert_eq!(s.dim(), 1);
        assert!(s.orthonormality_defect() < 1e-14);
        let k = kernel(&m.adjoint(), &tol());
        assert_eq!(k.dim(), 1);
        assert!((m.adjoint() * k.basis()).norm() < 1e-14);
    }
}
