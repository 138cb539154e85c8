use serde::{Deserialize, Serialize};

use super::norm::{operator_norm, WeightedNorm};
use super::AlgebraError;
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceTag {
    Algebra,
    Module,
}

/// A dense complex matrix `codomain × domain` with space tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    #[serde(with = "crate::io::complex_matrix")]
    matrix: Matrix,
    domain: SpaceTag,
    codomain: SpaceTag,
}

impl LinearMap {
    pub fn new(matrix: Matrix, domain: SpaceTag, codomain: SpaceTag) -> Result<Self, AlgebraError> {
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(AlgebraError::NonFinite("linear map"));
        }
        Ok(Self { matrix, domain, codomain })
    }

    /// A map `A → A`.
    pub fn endo(matrix: Matrix) -> Result<Self, AlgebraError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(AlgebraError::Shape(format!("endomorphism matrix is {}x{}", matrix.nrows(), matrix.ncols())));
        }
        Self::new(matrix, SpaceTag::Algebra, SpaceTag::Algebra)
    }

    /// A map `A → X`.
    pub fn to_module(matrix: Matrix) -> Result<Self, AlgebraError> {
        Self::new(matrix, SpaceTag::Algebra, SpaceTag::Module)
    }

    pub fn identity(n: usize) -> Self {
        Self { matrix: Matrix::identity(n, n), domain: SpaceTag::Algebra, codomain: SpaceTag::Algebra }
    }

    pub fn zero(rows: usize, cols: usize, codomain: SpaceTag) -> Self {
        Self { matrix: Matrix::zeros(rows, cols), domain: SpaceTag::Algebra, codomain }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn domain(&self) -> SpaceTag {
        self.domain
    }

    pub fn codomain(&self) -> SpaceTag {
        self.codomain
    }

    pub fn domain_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector, AlgebraError> {
        if v.len() != self.matrix.ncols() {
            return Err(AlgebraError::Dimension { expected: self.matrix.ncols(), found: v.len() });
        }
        Ok(&self.matrix * v)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { matrix: &self.matrix * num_complex::Complex64::new(factor, 0.0), ..self.clone() }
    }

    /// Pads the codomain with `extra` zero rows.
    pub fn extend_codomain(&self, extra: usize) -> Self {
        let mut m = Matrix::zeros(self.matrix.nrows() + extra, self.matrix.ncols());
        m.rows_mut(0, self.matrix.nrows()).copy_from(&self.matrix);
        Self { matrix: m, ..self.clone() }
    }

    pub fn operator_norm(&self, from: &WeightedNorm, to: &WeightedNorm) -> f64 {
        operator_norm(&self.matrix, from, to)
    }
}
