use std::sync::Arc;

use super::norm::{operator_norm, NormKind, WeightedNorm};
use super::{combine_matrices, stack_rows, AlgebraError, FiniteAlgebra, STRUCTURE_TOL};
use crate::linalg::{self, Matrix, SubspaceBasis, Vector, RANK_RTOL};

/// A finite-dimensional two-sided module over a [`FiniteAlgebra`].
///
/// `left[i]` is the matrix of `x ↦ e_i·x` and `right[i]` that of `x ↦ x·e_i`.
/// `action_bound` is the smallest `C` with `‖a·x‖, ‖x·a‖ ≤ C‖a‖‖x‖`, computed
/// exactly from the basis action operators.
#[derive(Clone, Debug)]
pub struct Bimodule {
    algebra: Arc<FiniteAlgebra>,
    dim: usize,
    left: Vec<Matrix>,
    right: Vec<Matrix>,
    norm: WeightedNorm,
    action_bound: f64,
}

impl Bimodule {
    pub fn new(
        algebra: Arc<FiniteAlgebra>,
        left: Vec<Matrix>,
        right: Vec<Matrix>,
        norm: WeightedNorm,
    ) -> Result<Self, AlgebraError> {
        let n = algebra.dim();
        let m = norm.dim();
        if left.len() != n || right.len() != n {
            return Err(AlgebraError::Shape(format!(
                "expected {n} action operators per side, got {} and {}",
                left.len(),
                right.len()
            )));
        }
        for op in left.iter().chain(&right) {
            if op.nrows() != m || op.ncols() != m {
                return Err(AlgebraError::Shape(format!("action operator is not {m}x{m}")));
            }
            if op.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(AlgebraError::NonFinite("action tensor"));
            }
        }
        let mut module = Self { algebra, dim: m, left, right, norm, action_bound: 0.0 };
        module.certify_axioms()?;
        module.action_bound = module.compute_action_bound();
        Ok(module)
    }

    /// `X = A` with multiplication as both actions.
    pub fn regular(algebra: Arc<FiniteAlgebra>) -> Self {
        let n = algebra.dim();
        let left = (0..n).map(|i| algebra.left_basis_matrix(i).clone()).collect();
        let right = (0..n).map(|i| algebra.right_basis_matrix(i).clone()).collect();
        let norm = algebra.norm().clone();
        Self::new(algebra, left, right, norm).expect("regular module of a certified algebra")
    }

    /// The zero module `{0}`.
    pub fn zero(algebra: Arc<FiniteAlgebra>) -> Self {
        let n = algebra.dim();
        let empty = vec![Matrix::zeros(0, 0); n];
        Self::new(algebra, empty.clone(), empty, WeightedNorm::unit_weights(NormKind::L1, 0)).expect("zero module")
    }

    fn certify_axioms(&self) -> Result<(), AlgebraError> {
        let a = &self.algebra;
        let n = a.dim();
        for i in 0..n {
            for j in 0..n {
                let eiej = a.left_basis_matrix(i).column(j).into_owned();
                let l_prod = combine_matrices(&self.left, &eiej, self.dim);
                let r_prod = combine_matrices(&self.right, &eiej, self.dim);
                let checks = [
                    ("(ab)x = a(bx)", &l_prod - &self.left[i] * &self.left[j]),
                    ("x(ab) = (xa)b", &r_prod - &self.right[j] * &self.right[i]),
                    ("(ax)b = a(xb)", &self.right[j] * &self.left[i] - &self.left[i] * &self.right[j]),
                ];
                for (axiom, diff) in checks {
                    let residual = linalg::max_abs(&diff);
                    if residual > STRUCTURE_TOL {
                        return Err(AlgebraError::ModuleAxiom { axiom, i, j, residual });
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_action_bound(&self) -> f64 {
        let an = self.algebra.norm();
        let mut c = 0.0f64;
        for i in 0..self.algebra.dim() {
            let l = operator_norm(&self.left[i], &self.norm, &self.norm);
            let r = operator_norm(&self.right[i], &self.norm, &self.norm);
            c = c.max(l.max(r) / an.basis_norm(i));
        }
        c
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> &WeightedNorm {
        &self.norm
    }

    pub fn element_norm(&self, x: &Vector) -> f64 {
        self.norm.norm(x)
    }

    pub fn action_bound(&self) -> f64 {
        self.action_bound
    }

    pub fn left_matrix(&self, i: usize) -> &Matrix {
        &self.left[i]
    }

    pub fn right_matrix(&self, i: usize) -> &Matrix {
        &self.right[i]
    }

    pub fn zero_element(&self) -> Vector {
        Vector::zeros(self.dim)
    }

    /// Matrix of `x ↦ a·x`.
    pub fn left_action_matrix(&self, a: &Vector) -> Result<Matrix, AlgebraError> {
        self.check_algebra_elem(a)?;
        Ok(combine_matrices(&self.left, a, self.dim))
    }

    /// Matrix of `x ↦ x·a`.
    pub fn right_action_matrix(&self, a: &Vector) -> Result<Matrix, AlgebraError> {
        self.check_algebra_elem(a)?;
        Ok(combine_matrices(&self.right, a, self.dim))
    }

    pub fn act_left(&self, a: &Vector, x: &Vector) -> Result<Vector, AlgebraError> {
        self.check_module_elem(x)?;
        Ok(self.left_action_matrix(a)? * x)
    }

    pub fn act_right(&self, x: &Vector, a: &Vector) -> Result<Vector, AlgebraError> {
        self.check_module_elem(x)?;
        Ok(self.right_action_matrix(a)? * x)
    }

    fn check_algebra_elem(&self, a: &Vector) -> Result<(), AlgebraError> {
        if a.len() != self.algebra.dim() {
            return Err(AlgebraError::Dimension { expected: self.algebra.dim(), found: a.len() });
        }
        Ok(())
    }

    fn check_module_elem(&self, x: &Vector) -> Result<(), AlgebraError> {
        if x.len() != self.dim {
            return Err(AlgebraError::Dimension { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    /// `{z : a·z = z·a = 0 for all a}`.
    pub fn two_sided_annihilator(&self) -> SubspaceBasis {
        if self.dim == 0 {
            return SubspaceBasis::empty(0);
        }
        let ops: Vec<Matrix> = self.left.iter().chain(&self.right).cloned().collect();
        linalg::nullspace(&stack_rows(&ops, self.dim), RANK_RTOL)
    }

    /// `X ⊕ C^extra`, the extra summand carrying zero actions and unit weights.
    pub fn extend_with_annihilator(&self, extra: usize) -> Self {
        let m = self.dim + extra;
        let pad = |op: &Matrix| {
            let mut out = Matrix::zeros(m, m);
            out.view_mut((0, 0), (self.dim, self.dim)).copy_from(op);
            out
        };
        let left = self.left.iter().map(pad).collect();
        let right = self.right.iter().map(pad).collect();
        Self::new(self.algebra.clone(), left, right, self.norm.extended(extra))
            .expect("direct sum with a trivial module")
    }

    pub fn with_norm(&self, norm: WeightedNorm) -> Result<Self, AlgebraError> {
        if norm.dim() != self.dim {
            return Err(AlgebraError::Dimension { expected: self.dim, found: norm.dim() });
        }
        Self::new(self.algebra.clone(), self.left.clone(), self.right.clone(), norm)
    }
}

/// The dual module `X*` with `(a·f)(x) = f(x·a)` and `(f·a)(x) = f(a·x)`,
/// normed by the weighted ℓ∞ norm dual to the weighted ℓ1 norm of `X` (and
/// vice versa). The action operators are plain transposes with sides swapped.
pub fn dual_bimodule(x: &Bimodule) -> Result<Bimodule, AlgebraError> {
    let left = x.right.iter().map(|r| r.transpose()).collect();
    let right = x.left.iter().map(|l| l.transpose()).collect();
    Bimodule::new(x.algebra.clone(), left, right, x.norm.dual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{dual_numbers, make_matrix_algebra, upper_triangular};
    use crate::sampling::SampleRng;
    use num_complex::Complex64;

    #[test]
    fn regular_actions_are_multiplication() {
        let a = Arc::new(make_matrix_algebra(2).unwrap());
        let x = Bimodule::regular(a.clone());
        let mut rng = SampleRng::new(3);
        for _ in 0..10 {
            let p = rng.complex_vector(4);
            let q = rng.complex_vector(4);
            assert!((x.act_left(&p, &q).unwrap() - a.mul(&p, &q).unwrap()).camax() < 1e-14);
            assert!((x.act_right(&q, &p).unwrap() - a.mul(&q, &p).unwrap()).camax() < 1e-14);
        }
        assert_eq!(x.act_left(&a.zero(), &rng.complex_vector(4)).unwrap(), x.zero_element());
        assert!((x.action_bound() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dual_of_commutative_regular_module() {
        // (ε·f)(x) = f(x·ε): left action of ε on X* is the transpose of right multiplication
        let a = Arc::new(dual_numbers());
        let x = Bimodule::regular(a.clone());
        let xs = dual_bimodule(&x).unwrap();
        assert_eq!(xs.left_matrix(1), &a.right_basis_matrix(1).transpose());
        // hand computation: e*_0 ↦ 0, e*_1 ↦ e*_0 under f ↦ ε·f
        let l = xs.left_matrix(1);
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(l[(0, 1)], one);
        assert_eq!(l[(1, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(xs.norm().kind(), NormKind::Linf);
    }

    #[test]
    fn double_dual_is_original() {
        let a = Arc::new(upper_triangular(2).unwrap());
        let x = Bimodule::regular(a);
        let xss = dual_bimodule(&dual_bimodule(&x).unwrap()).unwrap();
        for i in 0..x.algebra().dim() {
            assert_eq!(xss.left_matrix(i), x.left_matrix(i));
            assert_eq!(xss.right_matrix(i), x.right_matrix(i));
        }
        assert_eq!(xss.norm(), x.norm());
    }

    #[test]
    fn zero_module_dual() {
        let a = Arc::new(dual_numbers());
        let z = Bimodule::zero(a);
        let zs = dual_bimodule(&z).unwrap();
        assert_eq!(zs.dim(), 0);
        assert_eq!(zs.action_bound(), 0.0);
    }

    #[test]
    fn action_bound_holds_on_samples() {
        let a = Arc::new(make_matrix_algebra(2).unwrap());
        let x = dual_bimodule(&Bimodule::regular(a.clone())).unwrap();
        let c = x.action_bound();
        let mut rng = SampleRng::new(11);
        for _ in 0..200 {
            let p = rng.complex_vector(4);
            let v = rng.complex_vector(4);
            let bound = c * a.element_norm(&p) * x.element_norm(&v);
            assert!(x.element_norm(&x.act_left(&p, &v).unwrap()) <= bound * (1.0 + 1e-12));
            assert!(x.element_norm(&x.act_right(&v, &p).unwrap()) <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn annihilator_extension() {
        let a = Arc::new(make_matrix_algebra(2).unwrap());
        let x = Bimodule::regular(a);
        assert!(x.two_sided_annihilator().is_trivial());
        let ext = x.extend_with_annihilator(1);
        let z = ext.two_sided_annihilator();
        assert_eq!(z.dim(), 1);
        assert!((z.vectors[0][4].norm() - 1.0).abs() < 1e-12);
        for i in 0..4 {
            assert!((ext.right_matrix(i) * &z.vectors[0]).camax() <= 1e-12);
        }
    }

    #[test]
    fn rejects_broken_module() {
        let a = Arc::new(dual_numbers());
        let x = Bimodule::regular(a.clone());
        let mut left: Vec<Matrix> = (0..2).map(|i| x.left_matrix(i).clone()).collect();
        left[1][(0, 0)] = Complex64::new(1.0, 0.0);
        let right = (0..2).map(|i| x.right_matrix(i).clone()).collect();
        let err = Bimodule::new(a, left, right, x.norm().clone()).unwrap_err();
        assert!(matches!(err, AlgebraError::ModuleAxiom { .. }), "{err}");
    }
}
