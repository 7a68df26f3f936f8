//! Serde adapters that write nalgebra values as plain arrays, matrices row-major.

use nalgebra::{SMatrix, SVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod smatrix {
    use super::*;

    pub fn serialize<S: Serializer, const R: usize, const C: usize>(
        m: &SMatrix<f64, R, C>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const R: usize, const C: usize>(
        d: D,
    ) -> Result<SMatrix<f64, R, C>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        if rows.len() != R || rows.iter().any(|r| r.len() != C) {
            return Err(D::Error::custom(format!("expected a {R}x{C} matrix")));
        }
        Ok(SMatrix::from_fn(|i, j| rows[i][j]))
    }
}

pub mod svector {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(
        v: &SVector<f64, N>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<SVector<f64, N>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        if v.len() != N {
            return Err(D::Error::custom(format!(
                "expected {N} components, found {}",
                v.len()
            )));
        }
        Ok(SVector::from_column_slice(&v))
    }
}

pub mod svector_list {
    use super::*;

    pub fn serialize<S: Serializer, const N: usize>(
        v: &[SVector<f64, N>],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|p| p.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const N: usize>(
        d: D,
    ) -> Result<Vec<SVector<f64, N>>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        rows.into_iter()
            .map(|r| {
                if r.len() == N {
                    Ok(SVector::from_column_slice(&r))
                } else {
                    Err(D::Error::custom(format!(
                        "expected {N} components, found {}",
                        r.len()
                    )))
                }
            })
            .collect()
    }
}

pub mod option_smatrix {
    use super::*;

    pub fn serialize<S: Serializer, const R: usize, const C: usize>(
        m: &Option<SMatrix<f64, R, C>>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        m.map(|m| {
            m.row_iter()
                .map(|r| r.iter().copied().collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        })
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>, const R: usize, const C: usize>(
        d: D,
    ) -> Result<Option<SMatrix<f64, R, C>>, D::Error> {
        let rows = Option::<Vec<Vec<f64>>>::deserialize(d)?;
        match rows {
            None => Ok(None),
            Some(rows) => {
                if rows.len() != R || rows.iter().any(|r| r.len() != C) {
                    return Err(D::Error::custom(format!("expected a {R}x{C} matrix")));
                }
                Ok(Some(SMatrix::from_fn(|i, j| rows[i][j])))
            }
        }
    }
}

// Short aliases used by the planar types.
pub use smatrix as matrix2;
pub use svector as vector2;
pub use svector as vector3;
pub use svector_list as vector2_list;
