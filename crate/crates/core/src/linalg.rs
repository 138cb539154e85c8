//! Dense complex linear algebra helpers: pivoted-QR nullspaces, SVD ranges
//! and orthonormal subspace bases.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub type Scalar = Complex64;
pub type Vector = DVector<Complex64>;
pub type Matrix = DMatrix<Complex64>;

/// Singular values at or below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-10;

/// An orthonormal (Euclidean) basis of a subspace of `C^ambient_dim`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubspaceBasis {
    pub ambient_dim: usize,
    #[serde(with = "crate::io::vec_of_complex_vectors")]
    pub vectors: Vec<Vector>,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self { ambient_dim, vectors: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.ambient_dim);
        for q in &self.vectors {
            let c = q.dotc(v);
            out.axpy(c, q, Complex64::new(1.0, 0.0));
        }
        out
    }

    /// Euclidean length of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &Vector) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dotc(b) - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

fn threshold(singular_values: &DVector<f64>, rtol: f64) -> f64 {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    smax * rtol
}

/// Passes of [`NullspaceTracker::restrict`]; later ones catch rounding leftovers.
const RESTRICT_PASSES: usize = 3;

/// Orthonormal basis `N` of a nullspace, shrunk one constraint block at a
/// time. Callers pass the image `B·N` of each block `B`, which lets them
/// exploit sparsity in `B`.
pub struct NullspaceTracker {
    basis: Matrix,
}

impl NullspaceTracker {
    pub fn new(dim: usize) -> Self {
        Self { basis: Matrix::identity(dim, dim) }
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Replaces `N` by an orthonormal basis of `{N y : image · y = 0}`.
    /// Singular values of `image` at or below `abs_tol` count as zero.
    pub fn restrict(&mut self, image: &Matrix, abs_tol: f64) {
        assert_eq!(image.ncols(), self.dim(), "image width mismatch");
        let mut image = image.clone();
        for _ in 0..RESTRICT_PASSES {
            let k = self.reflect_out(&mut image, abs_tol);
            if k == 0 {
                return;
            }
            let r = self.dim();
            self.basis = self.basis.columns(k, r - k).into_owned();
            image = image.columns(k, r - k).into_owned();
        }
    }

    /// Column-pivoted Householder QR of `imageᴴ`. Each reflector is applied
    /// to `N` and `image` from the right; returns the number of reflectors.
    fn reflect_out(&mut self, image: &mut Matrix, abs_tol: f64) -> usize {
        let r = self.dim();
        let mut w = image.adjoint();
        let cols = w.ncols();
        let one = Complex64::new(1.0, 0.0);
        let mut t = 0;
        while t < r.min(cols) {
            let (p, pn) = (t..cols).map(|c| (c, w.view((t, c), (r - t, 1)).norm())).fold((t, -1.0), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pn <= abs_tol {
                break;
            }
            w.swap_columns(t, p);
            let mut v = w.view((t, t), (r - t, 1)).column(0).into_owned();
            let phase = if v[0] == Complex64::new(0.0, 0.0) { one } else { v[0] / v[0].norm() };
            v[0] += phase * pn;
            let coef = Complex64::new(-2.0 / v.norm_squared(), 0.0);
            let mut rest = w.view_mut((t, t), (r - t, cols - t));
            let z = rest.ad_mul(&v);
            rest.gerc(coef, &v, &z, one);
            for m in [&mut self.basis, &mut *image] {
                let mut c = m.columns_mut(t, r - t);
                let y = &c * &v;
                c.gerc(coef, &y, &v, one);
            }
            t += 1;
        }
        t
    }

    pub fn finish(self) -> SubspaceBasis {
        SubspaceBasis {
            ambient_dim: self.basis.nrows(),
            vectors: self.basis.column_iter().map(|c| c.into_owned()).collect(),
        }
    }
}

/// Orthonormal basis of `{v : M v = 0}`.
pub fn nullspace(m: &Matrix, rtol: f64) -> SubspaceBasis {
    let mut t = NullspaceTracker::new(m.ncols());
    if m.nrows() > 0 && m.ncols() > 0 {
        let scale = m.singular_values().iter().cloned().fold(0.0, f64::max);
        t.restrict(m, rtol * scale);
    }
    t.finish()
}

/// Orthonormal basis of the column space of `m`.
pub fn range(m: &Matrix, rtol: f64) -> SubspaceBasis {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return SubspaceBasis::empty(rows);
    }
    let svd = m.clone().svd(true, false);
    let thresh = threshold(&svd.singular_values, rtol);
    let u = svd.u.expect("requested U");
    let mut vectors = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s > thresh {
            vectors.push(u.column(k).into_owned());
        }
    }
    SubspaceBasis { ambient_dim: rows, vectors }
}

pub fn rank(m: &Matrix, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let thresh = threshold(&sv, rtol);
    sv.iter().filter(|s| **s > thresh).count()
}

/// Minimum-norm least-squares solution of `m x = b`.
pub fn least_squares(m: &Matrix, b: &Vector, rtol: f64) -> Vector {
    if m.ncols() == 0 {
        return Vector::zeros(0);
    }
    if m.nrows() == 0 {
        return Vector::zeros(m.ncols());
    }
    let svd = m.clone().svd(true, true);
    let eps = threshold(&svd.singular_values, rtol);
    // a zero matrix has threshold 0; solve() would divide by zero
    if eps == 0.0 {
        return Vector::zeros(m.ncols());
    }
    svd.solve(b, eps).expect("U and V were computed")
}

/// Stack column-major `vec(M)` of an `rows x cols` matrix.
pub fn vectorize(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &Vector, rows: usize, cols: usize) -> Matrix {
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real(x: f64) -> Scalar {
    Complex64::new(x, 0.0)
}
