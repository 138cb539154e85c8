//! Exact brute-force oracles over the rationals, built from explicit matrix
//! products rather than from the library's structure tensors.
#![allow(dead_code)]

use num_rational::Rational64;

pub type Q = Rational64;

/// Multiplication table: `mul[i][j]` holds the coordinates of `e_i e_j`.
pub struct Table {
    pub n: usize,
    pub mul: Vec<Vec<Vec<i64>>>,
}

/// Integer action matrices: `left[i][r][c]` is the `r`-th coordinate of
/// `e_i · x_c`, `right[i][r][c]` that of `x_c · e_i`.
pub struct Module {
    pub m: usize,
    pub left: Vec<Vec<Vec<i64>>>,
    pub right: Vec<Vec<Vec<i64>>>,
}

fn mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let k = a.len();
    (0..k).map(|r| (0..k).map(|c| (0..k).map(|t| a[r][t] * b[t][c]).sum()).collect()).collect()
}

/// `M_k(C)` with basis `E_rc` at index `r*k + c`, multiplied as matrices.
pub fn matrix_table(k: usize) -> Table {
    let unit = |r: usize, c: usize| {
        let mut m = vec![vec![0i64; k]; k];
        m[r][c] = 1;
        m
    };
    let basis: Vec<Vec<Vec<i64>>> = (0..k * k).map(|i| unit(i / k, i % k)).collect();
    let mul =
        basis.iter().map(|a| basis.iter().map(|b| mat_mul(a, b).into_iter().flatten().collect()).collect()).collect();
    Table { n: k * k, mul }
}

/// `C[ε]/(ε²)` with basis `{1, ε}`.
pub fn dual_numbers_table() -> Table {
    Table { n: 2, mul: vec![vec![vec![1, 0], vec![0, 1]], vec![vec![0, 1], vec![0, 0]]] }
}

/// Upper-triangular `k × k` matrices, basis `E_rc` with `r ≤ c`.
pub fn upper_triangular_table(k: usize) -> Table {
    let idx: Vec<(usize, usize)> = (0..k).flat_map(|r| (r..k).map(move |c| (r, c))).collect();
    let n = idx.len();
    let mut mul = vec![vec![vec![0i64; n]; n]; n];
    for (i, &(a, b)) in idx.iter().enumerate() {
        for (j, &(c, d)) in idx.iter().enumerate() {
            if b == c {
                let t = idx.iter().position(|&p| p == (a, d)).unwrap();
                mul[i][j][t] = 1;
            }
        }
    }
    Table { n, mul }
}

pub fn zero_table(n: usize) -> Table {
    Table { n, mul: vec![vec![vec![0; n]; n]; n] }
}

pub fn regular(t: &Table) -> Module {
    let n = t.n;
    let left = (0..n).map(|i| (0..n).map(|r| (0..n).map(|c| t.mul[i][c][r]).collect()).collect()).collect();
    let right = (0..n).map(|i| (0..n).map(|r| (0..n).map(|c| t.mul[c][i][r]).collect()).collect()).collect();
    Module { m: n, left, right }
}

/// `X*` in the dual basis: `(a·f)(x) = f(x·a)` and `(f·a)(x) = f(a·x)`.
pub fn dual(x: &Module) -> Module {
    let m = x.m;
    let n = x.left.len();
    // coordinate r of e_i·f_c is (e_i·f_c)(x_r) = f_c(x_r·e_i)
    let left = (0..n).map(|i| (0..m).map(|r| (0..m).map(|c| x.right[i][c][r]).collect()).collect()).collect();
    let right = (0..n).map(|i| (0..m).map(|r| (0..m).map(|c| x.left[i][c][r]).collect()).collect()).collect();
    Module { m, left, right }
}

#[allow(clippy::needless_range_loop)]
pub fn rank(mut rows: Vec<Vec<Q>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] != Q::from_integer(0)) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank][c];
        for r in 0..rows.len() {
            if r != rank && rows[r][c] != Q::from_integer(0) {
                let f = rows[r][c] / pivot;
                for k in c..cols {
                    let v = rows[rank][k];
                    rows[r][k] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// `(dim Der(A, X), dim Inn(A, X))` for identity twists.
pub fn dims(t: &Table, x: &Module) -> (usize, usize) {
    let (n, m) = (t.n, x.m);
    let q = |v: i64| Q::from_integer(v);
    // unknown D(e_i)_l at column i*m + l
    let mut der = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for l in 0..m {
                let mut row = vec![q(0); n * m];
                for k in 0..n {
                    row[k * m + l] += q(t.mul[i][j][k]);
                }
                for p in 0..m {
                    row[i * m + p] -= q(x.right[j][l][p]);
                    row[j * m + p] -= q(x.left[i][l][p]);
                }
                der.push(row);
            }
        }
    }
    let der_dim = n * m - if der.is_empty() { 0 } else { rank(der) };
    // x ↦ (x·e_i − e_i·x)_i as an (n m) × m matrix, rank via its transpose rows
    let inner_rows: Vec<Vec<Q>> = (0..m)
        .map(|c| {
            (0..n)
                .flat_map(|i| (0..m).map(move |r| (i, r)))
                .map(|(i, r)| q(x.right[i][r][c] - x.left[i][r][c]))
                .collect()
        })
        .collect();
    let inner_dim = if m == 0 || n == 0 { 0 } else { rank(inner_rows) };
    (der_dim, inner_dim)
}
