use serde::{Deserialize, Serialize};

use super::FormSystem;
use crate::error::{Error, Result};
use crate::numerics::encoding::{from_raw, to_raw, RawMatrix};
use crate::numerics::linalg::{hermitian_eigen, identity, spectral_norm};
use crate::numerics::{ComplexMatrix, ToleranceConfig};

/// A problem as read from disk: matrices in user coordinates, optionally
/// with Gram matrices for the inner products of `V` and `H`.
///
/// The form is `a(u, v) = v* T0_raw u` (linear in `u`), and the inner
/// products are `<u, v>_V = v* gram_V u`, `<f, g>_H = g* gram_H f`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawProblem {
    pub dim_v: usize,
    pub dim_h: usize,
    pub t0_raw: ComplexMatrix,
    pub j_raw: ComplexMatrix,
    pub gram_v: Option<ComplexMatrix>,
    pub gram_h: Option<ComplexMatrix>,
    pub tolerances: ToleranceConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "dim_V")]
    dim_v: usize,
    #[serde(rename = "dim_H")]
    dim_h: usize,
    #[serde(rename = "T0")]
    t0: RawMatrix,
    #[serde(rename = "J")]
    j: RawMatrix,
    #[serde(rename = "gram_V", default, skip_serializing_if = "Option::is_none")]
    gram_v: Option<RawMatrix>,
    #[serde(rename = "gram_H", default, skip_serializing_if = "Option::is_none")]
    gram_h: Option<RawMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tolerances: Option<ToleranceConfig>,
}

fn parse_matrix(name: &str, raw: &RawMatrix, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    let m = from_raw(raw, cols).map_err(|e| Error::Parse(format!("{name}: {e}")))?;
    if m.shape() != (rows, cols) {
        return Err(Error::dims(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

/// Parses and checks a problem file.
pub fn load_problem(text: &[u8]) -> Result<RawProblem> {
    let file: ProblemFile = serde_json::from_slice(text).map_err(|e| Error::Parse(e.to_string()))?;
    let p = RawProblem {
        dim_v: file.dim_v,
        dim_h: file.dim_h,
        t0_raw: parse_matrix("T0", &file.t0, file.dim_v, file.dim_v)?,
        j_raw: parse_matrix("J", &file.j, file.dim_h, file.dim_v)?,
        gram_v: file
            .gram_v
            .as_ref()
            .map(|g| parse_matrix("gram_V", g, file.dim_v, file.dim_v))
            .transpose()?,
        gram_h: file
            .gram_h
            .as_ref()
            .map(|g| parse_matrix("gram_H", g, file.dim_h, file.dim_h))
            .transpose()?,
        tolerances: file.tolerances.unwrap_or_default(),
    };
    p.validate()?;
    Ok(p)
}

impl RawProblem {
    /// A problem already in orthonormal coordinates.
    pub fn plain(t0: ComplexMatrix, j: ComplexMatrix) -> Self {
        RawProblem {
            dim_v: t0.nrows(),
            dim_h: j.nrows(),
            t0_raw: t0,
            j_raw: j,
            gram_v: None,
            gram_h: None,
            tolerances: ToleranceConfig::default(),
        }
    }

    pub fn from_system(fs: &FormSystem) -> Self {
        RawProblem {
            tolerances: *fs.tolerances(),
            ..Self::plain(fs.t0().clone(), fs.j().clone())
        }
    }

    pub fn to_json(&self) -> String {
        let file = ProblemFile {
            dim_v: self.dim_v,
            dim_h: self.dim_h,
            t0: to_raw(&self.t0_raw),
            j: to_raw(&self.j_raw),
            gram_v: self.gram_v.as_ref().map(to_raw),
            gram_h: self.gram_h.as_ref().map(to_raw),
            tolerances: Some(self.tolerances),
        };
        serde_json::to_string_pretty(&file).expect("problem serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        let (n, m) = (self.dim_v, self.dim_h);
        if self.t0_raw.shape() != (n, n) {
            return Err(Error::dims(format!("T0 must be {n}x{n}")));
        }
        if self.j_raw.shape() != (m, n) {
            return Err(Error::dims(format!("J must be {m}x{n}")));
        }
        let rt = self.tolerances.residual_tol;
        if let Some(g) = &self.gram_v {
            if g.shape() != (n, n) {
                return Err(Error::dims(format!("gram_V must be {n}x{n}")));
            }
            check_hermitian("gram_V", g, rt)?;
            let (vals, _) = hermitian_eigen(g);
            if vals.first().is_some_and(|&l| l < -rt) {
                return Err(Error::InvalidInput("gram_V has a negative eigenvalue".into()));
            }
        }
        if let Some(g) = &self.gram_h {
            if g.shape() != (m, m) {
                return Err(Error::dims(format!("gram_H must be {m}x{m}")));
            }
            check_hermitian("gram_H", g, rt)?;
            let (vals, _) = hermitian_eigen(g);
            if vals.first().is_some_and(|&l| l <= rt) {
                return Err(Error::InvalidInput("gram_H is not positive definite".into()));
            }
        }
        Ok(())
    }
}

fn check_hermitian(name: &str, g: &ComplexMatrix, tol: f64) -> Result<()> {
    let defect = spectral_norm(&(g - g.adjoint()));
    if defect > tol * spectral_norm(g).max(1.0) {
        return Err(Error::InvalidInput(format!("{name} is not Hermitian (defect {defect:.3e})")));
    }
    Ok(())
}

/// Factorization of a Gram matrix `G`: `to_coords` maps raw vectors to
/// orthonormal coordinates (`L*`), `from_coords_adj` is `L^+` so that
/// raw representatives of coordinates `y` are `(L^+)* y`.
struct GramFactor {
    to_coords: ComplexMatrix,
    pinv: ComplexMatrix,
    null: ComplexMatrix,
}

fn factor_gram(g: &ComplexMatrix, tol: &ToleranceConfig) -> GramFactor {
    let n = g.nrows();
    let h = crate::numerics::linalg::hermitian_part(g);
    let (vals, vecs) = hermitian_eigen(&h);
    let lmax = vals.last().copied().unwrap_or(0.0);
    let cutoff = tol.rank_rtol * lmax;
    let definite = vals.first().is_some_and(|&l| l > cutoff && l > 0.0);
    if definite {
        if let Some(ch) = h.clone().cholesky() {
            let l = ch.l();
            let linv = l
                .solve_lower_triangular(&identity(n))
                .expect("Cholesky factor is invertible");
            return GramFactor {
                to_coords: l.adjoint(),
                pinv: linv,
                null: ComplexMatrix::zeros(n, 0),
            };
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| vals[i] > cutoff && vals[i] > 0.0).collect();
    let drop: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let r = keep.len();
    let to_coords = ComplexMatrix::from_fn(r, n, |i, j| vecs[(j, keep[i])].conj() * vals[keep[i]].sqrt());
    let pinv = ComplexMatrix::from_fn(r, n, |i, j| vecs[(j, keep[i])].conj() / vals[keep[i]].sqrt());
    let null = ComplexMatrix::from_fn(n, drop.len(), |i, j| vecs[(i, drop[j])]);
    GramFactor { to_coords, pinv, null }
}

/// The map from raw `H` coordinates to the orthonormal ones used by
/// [`normalize`] (`L*` for `gram_H = L L*`).
pub fn h_coordinates(p: &RawProblem) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(match &p.gram_h {
        None => identity(p.dim_h),
        Some(g) => factor_gram(g, &p.tolerances).to_coords,
    })
}

/// Brings a problem into orthonormal coordinates.
///
/// A singular `gram_V` is handled by passing to the quotient by its null
/// space; the form and the linking map must vanish there. Returns the
/// system and the map from raw `V` coordinates to normalized ones.
pub fn normalize(p: &RawProblem) -> Result<(FormSystem, ComplexMatrix)> {
    p.validate()?;
    let tol = &p.tolerances;
    let (t0, j, change) = match &p.gram_v {
        None => (p.t0_raw.clone(), p.j_raw.clone(), identity(p.dim_v)),
        Some(g) => {
            let f = factor_gram(g, tol);
            if f.null.ncols() > 0 {
                let rt = tol.residual_tol;
                let scale = spectral_norm(&p.t0_raw).max(1.0);
                let leak = spectral_norm(&(&p.t0_raw * &f.null))
                    .max(spectral_norm(&(f.null.adjoint() * &p.t0_raw)));
                if leak > rt * scale {
                    return Err(Error::InvalidInput(format!(
                        "T0 does not vanish on the null space of gram_V (residual {leak:.3e})"
                    )));
                }
                let jleak = spectral_norm(&(&p.j_raw * &f.null));
                if jleak > rt * spectral_norm(&p.j_raw).max(1.0) {
                    return Err(Error::InvalidInput(format!(
                        "J does not vanish on the null space of gram_V (residual {jleak:.3e})"
                    )));
                }
            }
            let pa = f.pinv.adjoint();
            (&f.pinv * &p.t0_raw * &pa, &p.j_raw * &pa, f.to_coords)
        }
    };
    let j = match &p.gram_h {
        None => j,
        Some(g) => {
            let f = factor_gram(g, tol);
            if f.null.ncols() > 0 {
                return Err(Error::InvalidInput("gram_H is singular".into()));
            }
            &f.to_coords * j
        }
    };
    Ok((FormSystem::new(t0, j, *tol)?, change))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::{diag_real, from_real_rows};

    const MULTIVAL: &str = r#"{
        "dim_V": 2, "dim_H": 1,
        "T0": [[[0,0],[1,0]],[[-1,0],[0,0]]],
        "J": [[[0,0],[1,0]]]
    }"#;

    #[test]
    fn loads_minimal_file() {
        let p = load_problem(MULTIVAL.as_bytes()).unwrap();
        assert_eq!((p.dim_v, p.dim_h), (2, 1));
        assert_eq!(p.t0_raw, from_real_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_shapes() {
        let extra = MULTIVAL.replace("\"dim_H\": 1,", "\"dim_H\": 1, \"colour\": 3,");
        assert!(matches!(load_problem(extra.as_bytes()), Err(Error::Parse(_))));
        let bad = MULTIVAL.replace("\"J\": [[[0,0],[1,0]]]", "\"J\": [[[0,0],[1,0],[2,0]]]");
        assert!(matches!(load_problem(bad.as_bytes()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn accepts_semidefinite_gram() {
        let mut p = load_problem(MULTIVAL.as_bytes()).unwrap();
        p.gram_v = Some(diag_real(&[1.0, 0.0]));
        p.validate().unwrap();
        p.t0_raw = ComplexMatrix::zeros(2, 2);
        p.j_raw = from_real_rows(&[&[1.0, 0.0]]);
        let (fs, change) = normalize(&p).unwrap();
        assert_eq!(fs.dim_v(), 1);
        assert_eq!(change.shape(), (1, 2));
    }

    #[test]
    fn rejects_non_hermitian_gram() {
        let mut p = load_problem(MULTIVAL.as_bytes()).unwrap();
        p.gram_v = Some(from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]));
        assert!(p.validate().is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut p = load_problem(MULTIVAL.as_bytes()).unwrap();
        p.gram_h = Some(diag_real(&[2.0]));
        let back = load_problem(p.to_json().as_bytes()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn identity_normalization() {
        let p = load_problem(MULTIVAL.as_bytes()).unwrap();
        let (fs, change) = normalize(&p).unwrap();
        assert_eq!(fs.t0(), &p.t0_raw);
        assert_eq!(change, identity(2));
    }

    #[test]
    fn scaled_gram_divides_form() {
        let mut p = load_problem(MULTIVAL.as_bytes()).unwrap();
        p.gram_v = Some(diag_real(&[4.0, 4.0]));
        let (fs, _) = normalize(&p).unwrap();
        assert!((fs.t0() - p.t0_raw.scale(0.25)).norm() < 1e-15);
    }
}
