//! JSON encoding of complex matrices: a list of rows, each entry `[re, im]`.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::linalg::ComplexMatrix;

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

pub fn to_raw(m: &ComplexMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Converts rows of `[re, im]` pairs; `ncols` is needed when there are no rows.
pub fn from_raw(rows: &RawMatrix, ncols_if_empty: usize) -> Result<ComplexMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(ncols_if_empty, |r| r.len());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(format!("row {i} has {} entries, expected {ncols}", r.len()));
        }
        for z in r {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(format!("row {i} contains a non-finite entry"));
            }
        }
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Serde adapter for `ComplexMatrix` fields.
///
/// Matrices with zero rows lose their column count; the shape is stored
/// alongside to keep round trips exact.
pub mod matrix {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Shaped {
        rows: usize,
        cols: usize,
        data: RawMatrix,
    }

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        Shaped {
            rows: m.nrows(),
            cols: m.ncols(),
            data: to_raw(m),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let sh = Shaped::deserialize(d)?;
        if sh.data.len() != sh.rows {
            return Err(D::Error::custom("row count does not match data"));
        }
        let m = from_raw(&sh.data, sh.cols).map_err(D::Error::custom)?;
        if m.ncols() != sh.cols {
            return Err(D::Error::custom("column count does not match data"));
        }
        Ok(m)
    }
}

/// Serde adapter for complex vectors stored as a list of `[re, im]`.
pub mod vector {
    use super::*;
    use crate::numerics::linalg::ComplexVector;

    pub fn serialize<S: Serializer>(v: &ComplexVector, s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexVector, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(ComplexVector::from_iterator(
            raw.len(),
            raw.iter().map(|z| Complex64::new(z[0], z[1])),
        ))
    }
}

/// Serde adapter for `Option<ComplexVector>`.
pub mod opt_vector {
    use super::*;
    use crate::numerics::linalg::ComplexVector;

    pub fn serialize<S: Serializer>(v: &Option<ComplexVector>, s: S) -> Result<S::Ok, S::Error> {
        let raw: Option<Vec<[f64; 2]>> = v.as_ref().map(|v| v.iter().map(|z| [z.re, z.im]).collect());
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ComplexVector>, D::Error> {
        let raw = Option::<Vec<[f64; 2]>>::deserialize(d)?;
        Ok(raw.map(|r| ComplexVector::from_iterator(r.len(), r.iter().map(|z| Complex64::new(z[0], z[1])))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::c;

    #[test]
    fn raw_round_trip() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, -1.0), c(0.0, 2.0), c(3.5, 0.0), c(0.0, 0.0)]);
        let back = from_raw(&to_raw(&m), 0).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn ragged_rows_rejected() {
        let raw: RawMatrix = vec![vec![[1.0, 0.0]], vec![[1.0, 0.0], [2.0, 0.0]]];
        assert!(from_raw(&raw, 0).is_err());
    }

    #[test]
    fn empty_keeps_columns() {
        let m = from_raw(&Vec::new(), 3).unwrap();
        assert_eq!(m.shape(), (0, 3));
    }
}
