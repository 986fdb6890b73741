use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!("non-finite matrix entry {bad}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_mul_vec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// First `n` rows.
    pub fn top_rows(&self, n: usize) -> Matrix {
        assert!(n <= self.rows);
        Matrix {
            rows: n,
            cols: self.cols,
            data: self.data[..n * self.cols].to_vec(),
        }
    }

    /// First `n` columns.
    pub fn leading_columns(&self, n: usize) -> Matrix {
        assert!(n <= self.cols);
        let mut out = Matrix::zeros(self.rows, n);
        for i in 0..self.rows {
            for j in 0..n {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    /// Copy widened to `cols` columns; new columns are zero.
    pub fn zero_padded(&self, cols: usize) -> Matrix {
        assert!(cols >= self.cols);
        let mut out = Matrix::zeros(self.rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self · selfᵀ`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Householder QR with column pivoting of an `n×p` matrix `A`:
/// `A·Π = H·R`, `H = H_0 H_1 … H_{p'-1}` with `p' = min(n, p)`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    n: usize,
    /// Householder vectors, `v_j` has length `n - j` and `v_j[0] = 1`.
    reflectors: Vec<(Vec<f64>, f64)>,
    /// `R` stored as `p' × p` upper-trapezoidal.
    r: Matrix,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &Matrix) -> Self {
        let n = a.rows();
        let p = a.cols();
        let steps = n.min(p);
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..p).collect();
        let mut reflectors = Vec::with_capacity(steps);

        for j in 0..steps {
            // pivot: largest remaining column norm
            let (best, _) = (j..p)
                .map(|c| (c, (j..n).map(|i| work[(i, c)].powi(2)).sum::<f64>()))
                .fold((j, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best != j {
                for i in 0..n {
                    let tmp = work[(i, j)];
                    work[(i, j)] = work[(i, best)];
                    work[(i, best)] = tmp;
                }
                perm.swap(j, best);
            }

            let x: Vec<f64> = (j..n).map(|i| work[(i, j)]).collect();
            let xnorm = norm_sq(&x).sqrt();
            if xnorm == 0.0 {
                reflectors.push((vec![0.0; n - j], 0.0));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
            let mut v = x;
            v[0] -= alpha;
            let v0 = v[0];
            for vi in v.iter_mut() {
                *vi /= v0;
            }
            let beta = 2.0 / norm_sq(&v);

            work[(j, j)] = alpha;
            for i in j + 1..n {
                work[(i, j)] = 0.0;
            }
            for c in j + 1..p {
                let s: f64 = (j..n).map(|i| v[i - j] * work[(i, c)]).sum::<f64>() * beta;
                for i in j..n {
                    work[(i, c)] -= s * v[i - j];
                }
            }
            reflectors.push((v, beta));
        }

        let mut r = Matrix::zeros(steps, p);
        for i in 0..steps {
            for c in i..p {
                r[(i, c)] = work[(i, c)];
            }
        }
        Self {
            n,
            reflectors,
            r,
            perm,
        }
    }

    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.r.rows()).map(|i| self.r[(i, i)]).collect()
    }

    /// Number of `|R_ii|` above `tol · max(|R_00|, floor)`.
    pub fn rank(&self, tol: f64, floor: f64) -> usize {
        let diag = self.r_diag();
        let lead = diag.first().map_or(0.0, |d| d.abs()).max(floor);
        if lead == 0.0 {
            return 0;
        }
        diag.iter().take_while(|d| d.abs() > tol * lead).count()
    }

    /// `H · v` for `v` of length `n`.
    pub fn apply_h(&self, v: &mut [f64]) {
        for (j, (h, beta)) in self.reflectors.iter().enumerate().rev() {
            apply_reflector(&mut v[j..], h, *beta);
        }
    }

    /// `Hᵀ · v`.
    pub fn apply_ht(&self, v: &mut [f64]) {
        for (j, (h, beta)) in self.reflectors.iter().enumerate() {
            apply_reflector(&mut v[j..], h, *beta);
        }
    }

    /// Column `j` of the full orthogonal factor `H`.
    pub fn h_column(&self, j: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.n];
        e[j] = 1.0;
        self.apply_h(&mut e);
        e
    }

    pub fn r(&self) -> &Matrix {
        &self.r
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }
}

fn apply_reflector(v: &mut [f64], h: &[f64], beta: f64) {
    if beta == 0.0 {
        return;
    }
    let s = dot(v, h) * beta;
    for (vi, hi) in v.iter_mut().zip(h) {
        *vi -= s * hi;
    }
}

/// Orthonormal basis (as columns) of the null space of `m`.
///
/// `tol` is the relative rank cutoff against the leading pivot of the
/// rank-revealing factorization of `mᵀ`.
pub fn kernel_onb(m: &Matrix, tol: f64) -> Matrix {
    let n = m.cols();
    let qr = PivotedQr::new(&m.transpose());
    let rank = qr.rank(tol, 0.0);
    let mut basis = Matrix::zeros(n, n - rank);
    for (c, j) in (rank..n).enumerate() {
        let col = qr.h_column(j);
        for (i, v) in col.into_iter().enumerate() {
            basis[(i, c)] = v;
        }
    }
    basis
}

/// Numerical rank of `m`; `floor` is an absolute scale below which the
/// leading pivot counts as zero.
pub fn numerical_rank(m: &Matrix, tol: f64, floor: f64) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    PivotedQr::new(&m.transpose()).rank(tol, floor)
}

/// Minimal-norm solution of `m·x = w` for `m` with full row rank.
pub fn least_norm_solution(m: &Matrix, w: &[f64], tol: f64) -> Result<Vec<f64>> {
    let rows = m.rows();
    let n = m.cols();
    if w.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "rhs of length {} for {} rows",
            w.len(),
            rows
        )));
    }
    // mᵀ Π = H R  ⇒  m = Π Rᵀ Hᵀ; x = H [c; 0] with Rᵀ c = Πᵀ w.
    let qr = PivotedQr::new(&m.transpose());
    let rank = qr.rank(tol, 0.0);
    if rank < rows {
        return Err(Error::RankDeficient {
            rank,
            expected: rows,
        });
    }
    let r = qr.r();
    let pw: Vec<f64> = qr.perm().iter().map(|&p| w[p]).collect();
    let mut c = vec![0.0; n];
    for i in 0..rows {
        let s: f64 = (0..i).map(|l| r[(l, i)] * c[l]).sum();
        c[i] = (pw[i] - s) / r[(i, i)];
    }
    qr.apply_h(&mut c);
    Ok(c)
}

/// Lower-triangular `C` with `C·Cᵀ = g`.
pub fn cholesky(g: &Matrix) -> Result<Matrix> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::DimensionMismatch("cholesky of a non-square matrix".into()));
    }
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let s: f64 = (0..j).map(|l| c[(j, l)] * c[(j, l)]).sum();
        let pivot = g[(j, j)] - s;
        if !(pivot > 0.0) {
            return Err(Error::NotSpd { index: j, pivot });
        }
        let d = pivot.sqrt();
        c[(j, j)] = d;
        for i in j + 1..n {
            let s: f64 = (0..j).map(|l| c[(i, l)] * c[(j, l)]).sum();
            c[(i, j)] = (g[(i, j)] - s) / d;
        }
    }
    Ok(c)
}

/// Solves `c·cᵀ·x = rhs` for a lower-triangular Cholesky factor `c`.
pub fn cholesky_solve(c: &Matrix, rhs: &[f64]) -> Vec<f64> {
    let n = c.rows();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|l| c[(i, l)] * y[l]).sum();
        y[i] = (rhs[i] - s) / c[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|l| c[(l, i)] * x[l]).sum();
        x[i] = (y[i] - s) / c[(i, i)];
    }
    x
}

/// Solves `g·x = rhs` for symmetric positive definite `g` and returns
/// `(x, ln det g)`.
pub fn spd_solve_and_logdet(g: &Matrix, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    if rhs.len() != g.rows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs of length {} for a {}x{} system",
            rhs.len(),
            g.rows(),
            g.cols()
        )));
    }
    let c = cholesky(g)?;
    let logdet = 2.0 * (0..c.rows()).map(|i| c[(i, i)].ln()).sum::<f64>();
    Ok((cholesky_solve(&c, rhs), logdet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-10;

    #[test]
    fn kernel_of_axis_constraint_is_first_axis() {
        let k = kernel_onb(&Matrix::from_rows(&[vec![0.0, 1.0]]), TOL);
        assert_eq!((k.rows(), k.cols()), (2, 1));
        assert_abs_diff_eq!(k[(0, 0)].abs(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(k[(1, 0)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn kernel_of_three_four() {
        let k = kernel_onb(&Matrix::from_rows(&[vec![3.0, 4.0]]), TOL);
        assert_eq!(k.cols(), 1);
        let v = k.column(0);
        // oracle: substitute into the constraint and check the norm
        assert_abs_diff_eq!(3.0 * v[0] + 4.0 * v[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(norm_sq(&v), 1.0, epsilon = 1e-14);
        let s = v[0].signum();
        assert_abs_diff_eq!(s * v[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(s * v[1], -0.6, epsilon = 1e-14);
    }

    #[test]
    fn kernel_of_full_rank_is_empty() {
        let k = kernel_onb(&Matrix::identity(2), TOL);
        assert_eq!((k.rows(), k.cols()), (2, 0));
    }

    #[test]
    fn least_norm_examples() {
        let x = least_norm_solution(&Matrix::from_rows(&[vec![0.0, 1.0]]), &[2.5], TOL).unwrap();
        assert_abs_diff_eq!(x[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 2.5, epsilon = 1e-15);

        // normal equations by hand: 25 λ = 5, x = (3, 4) λ
        let x = least_norm_solution(&Matrix::from_rows(&[vec![3.0, 4.0]]), &[5.0], TOL).unwrap();
        assert_abs_diff_eq!(x[0], 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(norm_sq(&x), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn least_norm_rejects_dependent_rows() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(
            least_norm_solution(&m, &[1.0, 1.0], TOL),
            Err(Error::RankDeficient { rank: 1, expected: 2 })
        ));
    }

    #[test]
    fn spd_examples() {
        let (x, ld) = spd_solve_and_logdet(&Matrix::identity(2), &[1.0, 2.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert_eq!(ld, 0.0);

        let (x, ld) = spd_solve_and_logdet(&Matrix::from_rows(&[vec![0.64]]), &[1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.5625, epsilon = 1e-14);
        assert_abs_diff_eq!(ld, 0.64f64.ln(), epsilon = 1e-14);

        let g = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            spd_solve_and_logdet(&g, &[1.0, 1.0]),
            Err(Error::NotSpd { .. })
        ));
    }

    #[test]
    fn matrix_rejects_bad_shapes() {
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::new(1, 1, vec![f64::NAN]).is_err());
    }
}
