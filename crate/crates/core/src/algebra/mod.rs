//! Finite-dimensional complex normed algebras, their bimodules and the
//! linear maps between them.
//!
//! An algebra is stored through its structure constants
//! `e_i e_j = Σ_k c[i][j][k] e_k` together with a weighted ℓ1 norm. The
//! weights are rescaled at construction until `‖e_i e_j‖ ≤ ‖e_i‖ ‖e_j‖`
//! holds on every basis pair, which makes the norm submultiplicative on the
//! whole algebra.

mod bimodule;
mod fixtures;
mod linear_map;
mod norm;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, Matrix, Scalar, SubspaceBasis, Vector, RANK_RTOL};

pub use bimodule::{dual_bimodule, Bimodule};
pub use fixtures::{dual_numbers, make_matrix_algebra, matrix_unit_index, upper_triangular, zero_product};
pub use linear_map::{LinearMap, SpaceTag};
pub use norm::{operator_norm, NormKind, WeightedNorm};

/// Entrywise tolerance for associativity, unit and module-axiom checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Largest admissible algebra dimension.
pub const MAX_DIM: usize = 64;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("size out of range: {0}")]
    Size(String),
    #[error("malformed input: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("weight {index} must be positive and finite, got {value}")]
    Weight { index: usize, value: f64 },
    #[error("associativity fails on basis triple ({i}, {j}, {k}): residual {residual:e}")]
    Associativity { i: usize, j: usize, k: usize, residual: f64 },
    #[error("element {index} is not a two-sided unit: residual {residual:e}")]
    Unit { index: usize, residual: f64 },
    #[error("bimodule axiom `{axiom}` fails at basis ({i}, {j}): residual {residual:e}")]
    ModuleAxiom { axiom: &'static str, i: usize, j: usize, residual: f64 },
    #[error("element is not invertible in the algebra")]
    NotInvertible,
    #[error("algebra has no unit")]
    NoUnit,
}

fn check_len(v: &Vector, expected: usize) -> Result<(), AlgebraError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(AlgebraError::Dimension { expected, found: v.len() })
    }
}

/// A structure-constant algebra over `C` with a certified submultiplicative
/// weighted ℓ1 norm. Immutable after construction.
#[derive(Clone, Debug)]
pub struct FiniteAlgebra {
    dim: usize,
    structure: Vec<Scalar>,
    /// `left[i]` is the matrix of `x ↦ e_i x`.
    left: Vec<Matrix>,
    /// `right[j]` is the matrix of `x ↦ x e_j`.
    right: Vec<Matrix>,
    norm: WeightedNorm,
    unit: Option<Vector>,
    unit_index: Option<usize>,
    weight_rescale: f64,
}

impl FiniteAlgebra {
    /// Builds and certifies an algebra from the flattened tensor
    /// `structure[(i * n + j) * n + k] = c[i][j][k]`.
    pub fn new(
        dim: usize,
        structure: Vec<Scalar>,
        weights: Vec<f64>,
        unit_index: Option<usize>,
    ) -> Result<Self, AlgebraError> {
        Self::with_unit(dim, structure, weights, unit_index, None)
    }

    pub(crate) fn with_unit(
        dim: usize,
        structure: Vec<Scalar>,
        weights: Vec<f64>,
        unit_index: Option<usize>,
        unit: Option<Vector>,
    ) -> Result<Self, AlgebraError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(AlgebraError::Size(format!("algebra dimension {dim} not in 1..={MAX_DIM}")));
        }
        if structure.len() != dim * dim * dim {
            return Err(AlgebraError::Shape(format!(
                "structure tensor has {} entries, expected {}",
                structure.len(),
                dim * dim * dim
            )));
        }
        if structure.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(AlgebraError::NonFinite("structure tensor"));
        }
        if weights.len() != dim {
            return Err(AlgebraError::Dimension { expected: dim, found: weights.len() });
        }
        let norm = WeightedNorm::new(NormKind::L1, weights)?;
        let n = dim;
        let c = |i: usize, j: usize, k: usize| structure[(i * n + j) * n + k];
        let left: Vec<Matrix> = (0..n).map(|i| Matrix::from_fn(n, n, |k, j| c(i, j, k))).collect();
        let right: Vec<Matrix> = (0..n).map(|j| Matrix::from_fn(n, n, |k, i| c(i, j, k))).collect();

        let mut alg = Self { dim, structure, left, right, norm, unit: None, unit_index: None, weight_rescale: 1.0 };
        if let Some((i, j, k, residual)) = alg.worst_associativity_triple() {
            if residual > STRUCTURE_TOL {
                return Err(AlgebraError::Associativity { i, j, k, residual });
            }
        }

        let unit = match (unit_index, unit) {
            (Some(idx), _) if idx >= dim => return Err(AlgebraError::Size(format!("unit_index {idx} out of range"))),
            (Some(idx), _) => Some(alg.basis(idx)),
            (None, Some(u)) => {
                check_len(&u, dim)?;
                Some(u)
            }
            (None, None) => None,
        };
        if let Some(u) = &unit {
            let residual = alg.unit_residual(u);
            if residual > STRUCTURE_TOL {
                return Err(AlgebraError::Unit { index: unit_index.unwrap_or(usize::MAX), residual });
            }
        }
        alg.unit = unit;
        alg.unit_index = unit_index;

        let k = alg.submultiplicativity_ratio();
        if k > 1.0 {
            alg.norm = alg.norm.scaled(k);
            alg.weight_rescale = k;
        }
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }

    pub fn element_norm(&self, a: &Vector) -> f64 {
        self.norm.norm(a)
    }

    /// Factor applied to the user weights to certify submultiplicativity (1 if none).
    pub fn weight_rescale(&self) -> f64 {
        self.weight_rescale
    }

    pub fn unit(&self) -> Option<&Vector> {
        self.unit.as_ref()
    }

    pub fn unit_index(&self) -> Option<usize> {
        self.unit_index
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> Scalar {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    pub fn basis(&self, i: usize) -> Vector {
        let mut v = Vector::zeros(self.dim);
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn zero(&self) -> Vector {
        Vector::zeros(self.dim)
    }

    pub fn left_basis_matrix(&self, i: usize) -> &Matrix {
        &self.left[i]
    }

    pub fn right_basis_matrix(&self, j: usize) -> &Matrix {
        &self.right[j]
    }

    /// Matrix of `x ↦ a x`.
    pub fn left_mul_matrix(&self, a: &Vector) -> Result<Matrix, AlgebraError> {
        check_len(a, self.dim)?;
        Ok(combine(&self.left, a, self.dim))
    }

    /// Matrix of `x ↦ x b`.
    pub fn right_mul_matrix(&self, b: &Vector) -> Result<Matrix, AlgebraError> {
        check_len(b, self.dim)?;
        Ok(combine(&self.right, b, self.dim))
    }

    pub fn mul(&self, a: &Vector, b: &Vector) -> Result<Vector, AlgebraError> {
        check_len(a, self.dim)?;
        check_len(b, self.dim)?;
        let n = self.dim;
        let mut out = Vector::zeros(n);
        for i in 0..n {
            if a[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let base = (i * n + j) * n;
                for k in 0..n {
                    out[k] += ab * self.structure[base + k];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise discrepancy `(e_i e_j) e_k − e_i (e_j e_k)` and where it occurs.
    pub fn worst_associativity_triple(&self) -> Option<(usize, usize, usize, f64)> {
        let n = self.dim;
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for i in 0..n {
            for j in 0..n {
                // (e_i e_j) e_k = R_k (e_i e_j); e_i (e_j e_k) = L_i L_j e_k
                let lilj = &self.left[i] * &self.left[j];
                let eiej = self.left[i].column(j).into_owned();
                let lhs_all = combine(&self.left, &eiej, n);
                for k in 0..n {
                    let r = (lhs_all.column(k) - lilj.column(k)).camax();
                    if worst.is_none_or(|w| r > w.3) {
                        worst = Some((i, j, k, r));
                    }
                }
            }
        }
        worst
    }

    pub fn associativity_residual(&self) -> f64 {
        self.worst_associativity_triple().map_or(0.0, |w| w.3)
    }

    fn unit_residual(&self, u: &Vector) -> f64 {
        let lu = combine(&self.left, u, self.dim);
        let ru = combine(&self.right, u, self.dim);
        let id = Matrix::identity(self.dim, self.dim);
        linalg::max_abs(&(lu - &id)).max(linalg::max_abs(&(ru - id)))
    }

    /// `max ‖e_i e_j‖ / (‖e_i‖ ‖e_j‖)` over basis pairs under the current norm.
    pub fn submultiplicativity_ratio(&self) -> f64 {
        let mut k = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let p = self.left[i].column(j).into_owned();
                let r = self.norm.norm(&p) / (self.norm.basis_norm(i) * self.norm.basis_norm(j));
                k = k.max(r);
            }
        }
        k
    }

    /// `ran A = {x : a x = 0 for all a}`.
    pub fn right_annihilator(&self) -> SubspaceBasis {
        linalg::nullspace(&stack(&self.left, self.dim), RANK_RTOL)
    }

    /// `lan A = {x : x a = 0 for all a}`.
    pub fn left_annihilator(&self) -> SubspaceBasis {
        linalg::nullspace(&stack(&self.right, self.dim), RANK_RTOL)
    }

    /// Two-sided inverse, if the algebra is unital and `u` is invertible.
    pub fn inverse(&self, u: &Vector) -> Result<Vector, AlgebraError> {
        let unit = self.unit.as_ref().ok_or(AlgebraError::NoUnit)?;
        let lu = self.left_mul_matrix(u)?;
        let v = lu.clone().lu().solve(unit).ok_or(AlgebraError::NotInvertible)?;
        let check_l = (&lu * &v - unit).camax();
        let check_r = (self.mul(&v, u)? - unit).camax();
        if check_l.max(check_r) > 1e-10 * (1.0 + v.camax()) {
            return Err(AlgebraError::NotInvertible);
        }
        Ok(v)
    }

    /// The matrix of `a ↦ u a u⁻¹`.
    pub fn conjugation(&self, u: &Vector) -> Result<Matrix, AlgebraError> {
        let inv = self.inverse(u)?;
        Ok(self.left_mul_matrix(u)? * self.right_mul_matrix(&inv)?)
    }
}

fn combine(mats: &[Matrix], coeffs: &Vector, m: usize) -> Matrix {
    let mut out = Matrix::zeros(m, m);
    for (c, mat) in coeffs.iter().zip(mats) {
        if *c != Complex64::new(0.0, 0.0) {
            out += mat * *c;
        }
    }
    out
}

fn stack(mats: &[Matrix], cols: usize) -> Matrix {
    let rows: usize = mats.iter().map(|m| m.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut r = 0;
    for m in mats {
        out.rows_mut(r, m.nrows()).copy_from(m);
        r += m.nrows();
    }
    out
}

pub(crate) fn combine_matrices(mats: &[Matrix], coeffs: &Vector, m: usize) -> Matrix {
    combine(mats, coeffs, m)
}

pub(crate) fn stack_rows(mats: &[Matrix], cols: usize) -> Matrix {
    stack(mats, cols)
}
