//! Builtin algebras with exact integer structure constants.

use num_complex::Complex64;

use super::{AlgebraError, FiniteAlgebra};
use crate::linalg::{Scalar, Vector};

const ONE: Scalar = Complex64::new(1.0, 0.0);
const ZERO: Scalar = Complex64::new(0.0, 0.0);

/// Basis index of the matrix unit `E_ij` in `M_n(C)`.
pub fn matrix_unit_index(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// `M_n(C)` in the matrix-unit basis, `E_ij E_kl = δ_jk E_il`, unit weights.
pub fn make_matrix_algebra(n: usize) -> Result<FiniteAlgebra, AlgebraError> {
    if !(1..=8).contains(&n) {
        return Err(AlgebraError::Size(format!("matrix algebra size {n} not in 1..=8")));
    }
    let dim = n * n;
    let mut s = vec![ZERO; dim * dim * dim];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let a = matrix_unit_index(n, i, j);
                let b = matrix_unit_index(n, j, l);
                let c = matrix_unit_index(n, i, l);
                s[(a * dim + b) * dim + c] = ONE;
            }
        }
    }
    let mut unit = Vector::zeros(dim);
    for i in 0..n {
        unit[matrix_unit_index(n, i, i)] = ONE;
    }
    let unit_index = (n == 1).then_some(0);
    FiniteAlgebra::with_unit(dim, s, vec![1.0; dim], unit_index, Some(unit))
}

/// `C[ε]/ε²` with basis `(1, ε)`.
pub fn dual_numbers() -> FiniteAlgebra {
    let mut s = vec![ZERO; 8];
    s[0] = ONE; // 1·1 = 1
    s[3] = ONE; // 1·ε = ε
    s[5] = ONE; // ε·1 = ε
    FiniteAlgebra::new(2, s, vec![1.0, 1.0], Some(0)).expect("dual numbers are a valid algebra")
}

/// Upper-triangular `n×n` matrices, basis `E_ij` (`i ≤ j`) in row-major order.
pub fn upper_triangular(n: usize) -> Result<FiniteAlgebra, AlgebraError> {
    if !(1..=8).contains(&n) {
        return Err(AlgebraError::Size(format!("upper-triangular size {n} not in 1..=8")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let dim = pairs.len();
    let index = |i: usize, j: usize| pairs.iter().position(|&p| p == (i, j));
    let mut s = vec![ZERO; dim * dim * dim];
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate() {
            if j == k {
                let c = index(i, l).expect("i <= j = k <= l");
                s[(a * dim + b) * dim + c] = ONE;
            }
        }
    }
    let mut unit = Vector::zeros(dim);
    for i in 0..n {
        unit[index(i, i).unwrap()] = ONE;
    }
    let unit_index = (n == 1).then_some(0);
    FiniteAlgebra::with_unit(dim, s, vec![1.0; dim], unit_index, Some(unit))
}

/// `C^n` with every product zero.
pub fn zero_product(n: usize) -> Result<FiniteAlgebra, AlgebraError> {
    FiniteAlgebra::new(n, vec![ZERO; n * n * n], vec![1.0; n], None)
}
