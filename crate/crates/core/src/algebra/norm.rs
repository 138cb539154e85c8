use serde::{Deserialize, Serialize};

use super::AlgebraError;
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// `‖x‖ = Σ w_i |x_i|`
    L1,
    /// `‖x‖ = max_i |x_i| / w_i`, the exact dual of weighted ℓ1.
    Linf,
}

/// Weighted coordinate norm on `C^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorm {
    kind: NormKind,
    weights: Vec<f64>,
}

impl WeightedNorm {
    pub fn new(kind: NormKind, weights: Vec<f64>) -> Result<Self, AlgebraError> {
        for (index, &value) in weights.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(AlgebraError::Weight { index, value });
            }
        }
        Ok(Self { kind, weights })
    }

    pub fn unit_weights(kind: NormKind, dim: usize) -> Self {
        Self { kind, weights: vec![1.0; dim] }
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        debug_assert_eq!(v.len(), self.weights.len());
        match self.kind {
            NormKind::L1 => v.iter().zip(&self.weights).map(|(z, w)| w * z.norm()).sum(),
            NormKind::Linf => v.iter().zip(&self.weights).map(|(z, w)| z.norm() / w).fold(0.0, f64::max),
        }
    }

    /// Norm of the i-th coordinate vector.
    pub fn basis_norm(&self, i: usize) -> f64 {
        match self.kind {
            NormKind::L1 => self.weights[i],
            NormKind::Linf => 1.0 / self.weights[i],
        }
    }

    pub fn dual(&self) -> Self {
        let kind = match self.kind {
            NormKind::L1 => NormKind::Linf,
            NormKind::Linf => NormKind::L1,
        };
        Self { kind, weights: self.weights.clone() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { kind: self.kind, weights: self.weights.iter().map(|w| w * factor).collect() }
    }

    pub fn extended(&self, extra: usize) -> Self {
        let mut weights = self.weights.clone();
        weights.extend(std::iter::repeat_n(1.0, extra));
        Self { kind: self.kind, weights }
    }
}

/// Operator norm of `m : (C^c, from) -> (C^r, to)`.
///
/// Exact whenever the domain is weighted ℓ1 (extreme points are scaled basis
/// vectors) and for ℓ∞ → ℓ∞. For ℓ∞ → ℓ1 the value is an upper bound.
pub fn operator_norm(m: &Matrix, from: &WeightedNorm, to: &WeightedNorm) -> f64 {
    debug_assert_eq!(m.ncols(), from.dim());
    debug_assert_eq!(m.nrows(), to.dim());
    match (from.kind, to.kind) {
        (NormKind::L1, _) => {
            (0..m.ncols()).map(|j| to.norm(&m.column(j).into_owned()) / from.weights[j]).fold(0.0, f64::max)
        }
        (NormKind::Linf, NormKind::Linf) => (0..m.nrows())
            .map(|k| {
                let row: f64 = (0..m.ncols()).map(|j| m[(k, j)].norm() * from.weights[j]).sum();
                row / to.weights[k]
            })
            .fold(0.0, f64::max),
        (NormKind::Linf, NormKind::L1) => (0..m.nrows())
            .map(|k| {
                let row: f64 = (0..m.ncols()).map(|j| m[(k, j)].norm() * from.weights[j]).sum();
                row * to.weights[k]
            })
            .sum(),
    }
}
