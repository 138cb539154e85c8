//! Structured-text documents for algebras, bimodules and matrices.
//!
//! Complex numbers are encoded as `[re, im]` pairs. Matrices are row-major
//! nested arrays. Loading a document always re-runs the certifications of the
//! corresponding constructor.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraError, Bimodule, FiniteAlgebra, NormKind, WeightedNorm};
use crate::linalg::{Matrix, Vector};

pub type ComplexPair = [f64; 2];

pub fn pair(z: Complex64) -> ComplexPair {
    [z.re, z.im]
}

pub fn unpair(p: ComplexPair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn vector_to_doc(v: &Vector) -> Vec<ComplexPair> {
    v.iter().map(|z| pair(*z)).collect()
}

pub fn vector_from_doc(v: &[ComplexPair]) -> Vector {
    Vector::from_iterator(v.len(), v.iter().map(|p| unpair(*p)))
}

pub fn matrix_to_doc(m: &Matrix) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect()
}

/// `cols` is needed when `rows == 0`.
pub fn matrix_from_doc(rows: &[Vec<ComplexPair>], cols: usize) -> Result<Matrix, AlgebraError> {
    let mut m = Matrix::zeros(rows.len(), cols);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(AlgebraError::Shape(format!("matrix row {i} has {} entries, expected {cols}", row.len())));
        }
        for (j, p) in row.iter().enumerate() {
            m[(i, j)] = unpair(*p);
        }
    }
    Ok(m)
}

/// serde adapter for `Matrix` fields.
pub mod complex_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Doc {
        rows: usize,
        cols: usize,
        data: Vec<Vec<ComplexPair>>,
    }

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        Doc { rows: m.nrows(), cols: m.ncols(), data: matrix_to_doc(m) }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let doc = Doc::deserialize(d)?;
        if doc.data.len() != doc.rows {
            return Err(serde::de::Error::custom("row count mismatch"));
        }
        matrix_from_doc(&doc.data, doc.cols).map_err(serde::de::Error::custom)
    }
}

/// serde adapter for `Vector` fields.
pub mod complex_vector {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        vector_to_doc(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let doc = Vec::<ComplexPair>::deserialize(d)?;
        Ok(vector_from_doc(&doc))
    }
}

pub mod complex_scalar {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        pair(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        Ok(unpair(ComplexPair::deserialize(d)?))
    }
}

pub mod vec_of_complex_vectors {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vector], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(vector_to_doc).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vector>, D::Error> {
        let doc = Vec::<Vec<ComplexPair>>::deserialize(d)?;
        Ok(doc.iter().map(|v| vector_from_doc(v)).collect())
    }
}

/// On-disk form of a [`FiniteAlgebra`]: `structure[i][j][k]` is the
/// coefficient of `e_k` in `e_i e_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub dim: usize,
    pub structure: Vec<Vec<Vec<ComplexPair>>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub unit_index: Option<usize>,
    /// Unit coordinates when the identity is not a basis element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Vec<ComplexPair>>,
}

impl AlgebraDoc {
    pub fn from_algebra(a: &FiniteAlgebra) -> Self {
        let n = a.dim();
        let structure = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| pair(a.structure_constant(i, j, k))).collect()).collect())
            .collect();
        let unit = match (a.unit_index(), a.unit()) {
            (None, Some(u)) => Some(vector_to_doc(u)),
            _ => None,
        };
        Self { dim: n, structure, weights: a.norm().weights().to_vec(), unit_index: a.unit_index(), unit }
    }

    pub fn load(&self) -> Result<FiniteAlgebra, AlgebraError> {
        let n = self.dim;
        if self.structure.len() != n {
            return Err(AlgebraError::Shape(format!("structure has {} slices, expected {n}", self.structure.len())));
        }
        let mut flat = Vec::with_capacity(n * n * n);
        for (i, slice) in self.structure.iter().enumerate() {
            if slice.len() != n || slice.iter().any(|row| row.len() != n) {
                return Err(AlgebraError::Shape(format!("structure slice {i} is not {n}x{n}")));
            }
            for row in slice {
                flat.extend(row.iter().map(|p| unpair(*p)));
            }
        }
        let unit = self.unit.as_ref().map(|u| vector_from_doc(u));
        FiniteAlgebra::with_unit(n, flat, self.weights.clone(), self.unit_index, unit)
    }
}

/// On-disk form of a [`Bimodule`]: `left_action[i][j][k]` is the coefficient
/// of `x_k` in `e_i . x_j`; `right_action[j][i][k]` that of `x_k` in `x_j . e_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BimoduleDoc {
    pub dim: usize,
    pub left_action: Vec<Vec<Vec<ComplexPair>>>,
    pub right_action: Vec<Vec<Vec<ComplexPair>>>,
    pub weights: Vec<f64>,
    #[serde(default = "default_norm_kind")]
    pub norm: NormKind,
}

fn default_norm_kind() -> NormKind {
    NormKind::L1
}

impl BimoduleDoc {
    pub fn from_bimodule(x: &Bimodule) -> Self {
        let n = x.algebra().dim();
        let m = x.dim();
        let left_action = (0..n)
            .map(|i| (0..m).map(|j| (0..m).map(|k| pair(x.left_matrix(i)[(k, j)])).collect()).collect())
            .collect();
        let right_action = (0..m)
            .map(|j| (0..n).map(|i| (0..m).map(|k| pair(x.right_matrix(i)[(k, j)])).collect()).collect())
            .collect();
        Self { dim: m, left_action, right_action, weights: x.norm().weights().to_vec(), norm: x.norm().kind() }
    }

    pub fn load(&self, algebra: Arc<FiniteAlgebra>) -> Result<Bimodule, AlgebraError> {
        let n = algebra.dim();
        let m = self.dim;
        let bad = |what: &str| AlgebraError::Shape(format!("{what} has the wrong shape"));
        if self.left_action.len() != n
            || self.left_action.iter().any(|s| s.len() != m || s.iter().any(|r| r.len() != m))
        {
            return Err(bad("left_action"));
        }
        if self.right_action.len() != m
            || self.right_action.iter().any(|s| s.len() != n || s.iter().any(|r| r.len() != m))
        {
            return Err(bad("right_action"));
        }
        let left = (0..n).map(|i| Matrix::from_fn(m, m, |k, j| unpair(self.left_action[i][j][k]))).collect();
        let right = (0..n).map(|i| Matrix::from_fn(m, m, |k, j| unpair(self.right_action[j][i][k]))).collect();
        let norm = WeightedNorm::new(self.norm, self.weights.clone())?;
        Bimodule::new(algebra, left, right, norm)
    }
}
