//! Dense linear algebra over any [`Real`]: Cholesky, leading minors, LU
//! determinants and a symmetric eigensolver (Householder tridiagonalization
//! followed by implicit QL, after the EISPACK `tred2`/`tql2` pair).

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::real::{Precision, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("symmetric eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    NoConvergence { index: usize, iterations: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize, prec: Precision) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![R::zero(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: Precision) -> Self {
        let mut m = Self::zeros(n, n, prec);
        for i in 0..n {
            m[(i, i)] = R::one(prec);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Dimension("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn precision(&self) -> Precision {
        self.data.first().map_or(Precision::DOUBLE, Real::precision)
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<R> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn scaled(&self, c: &R) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.clone() * c.clone()).collect(),
        }
    }

    /// `self - c * other`, entrywise.
    pub fn sub_scaled(&self, c: &R, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() - c.clone() * b.clone())
                .collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let prec = self.precision();
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = R::zero(prec);
            for k in 0..self.cols {
                acc += self[(i, k)].clone() * other[(k, j)].clone();
            }
            acc
        })
    }

    pub fn matvec(&self, v: &[R]) -> Vec<R> {
        assert_eq!(self.cols, v.len());
        let prec = self.precision();
        (0..self.rows)
            .map(|i| {
                let mut acc = R::zero(prec);
                for (a, x) in self.row(i).iter().zip(v) {
                    acc += a.clone() * x.clone();
                }
                acc
            })
            .collect()
    }

    /// `<v| self |v>`.
    pub fn quadratic_form(&self, v: &[R]) -> R {
        let mv = self.matvec(v);
        dot(v, &mv)
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> R {
        let prec = self.precision();
        let mut best = R::zero(prec);
        for j in 0..self.cols {
            let mut s = R::zero(prec);
            for i in 0..self.rows {
                s += self[(i, j)].abs();
            }
            if s > best {
                best = s;
            }
        }
        best
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Leading principal `k x k` submatrix.
    pub fn leading(&self, k: usize) -> Self {
        Matrix::from_fn(k, k, |i, j| self[(i, j)].clone())
    }

    pub fn map<S: Real>(&self, f: impl Fn(&R) -> S) -> Matrix<S> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Real::to_f64)
    }
}

impl<R> Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Matrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: fmt::Debug> fmt::Debug for Matrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols.max(1)) {
            writeln!(f, "  {:?}", row)?;
        }
        write!(f, "]")
    }
}

pub fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    assert_eq!(a.len(), b.len());
    let prec = a.first().map_or(Precision::DOUBLE, Real::precision);
    let mut acc = R::zero(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x.clone() * y.clone();
    }
    acc
}

/// Upper-triangular Cholesky factor `R` with `A = RᵀR`.
#[derive(Debug, Clone)]
pub struct Cholesky<R> {
    factor: Matrix<R>,
}

impl<R: Real> Cholesky<R> {
    /// Factors a symmetric matrix; only the upper triangle is read.
    pub fn new(a: &Matrix<R>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension(
                "cholesky of a non-square matrix".into(),
            ));
        }
        let n = a.nrows();
        let prec = a.precision();
        let mut r: Matrix<R> = Matrix::zeros(n, n, prec);
        for j in 0..n {
            let mut d = a[(j, j)].clone();
            for k in 0..j {
                d -= r[(k, j)].clone() * r[(k, j)].clone();
            }
            if !(d > R::zero(prec)) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    pivot: j,
                    value: d.to_f64(),
                });
            }
            let rjj = d.sqrt();
            for i in (j + 1)..n {
                let mut s = a[(j, i)].clone();
                for k in 0..j {
                    s -= r[(k, j)].clone() * r[(k, i)].clone();
                }
                r[(j, i)] = s / rjj.clone();
            }
            r[(j, j)] = rjj;
        }
        Ok(Cholesky { factor: r })
    }

    pub fn factor(&self) -> &Matrix<R> {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    /// Squared pivots `R_jj²`.
    pub fn pivots(&self) -> Vec<R> {
        (0..self.dim())
            .map(|j| self.factor[(j, j)].clone() * self.factor[(j, j)].clone())
            .collect()
    }

    /// min/max over the squared pivots; small values flag near-singular `A`.
    pub fn pivot_ratio(&self) -> f64 {
        let p = self.pivots();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in &p {
            let v = v.to_f64();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi > 0.0 {
            lo / hi
        } else {
            0.0
        }
    }

    /// Leading principal minors `det A[0..=n, 0..=n]` for every `n`.
    pub fn leading_minors(&self) -> Vec<R> {
        let mut acc: Option<R> = None;
        self.pivots()
            .into_iter()
            .map(|p| {
                let next = match acc.take() {
                    None => p,
                    Some(a) => a * p,
                };
                acc = Some(next.clone());
                next
            })
            .collect()
    }

    /// Solves `Rᵀ y = b` (forward substitution).
    pub fn solve_rt(&self, b: &[R]) -> Vec<R> {
        let n = self.dim();
        let r = &self.factor;
        let mut y: Vec<R> = b.to_vec();
        for i in 0..n {
            let mut s = y[i].clone();
            for k in 0..i {
                s -= r[(k, i)].clone() * y[k].clone();
            }
            y[i] = s / r[(i, i)].clone();
        }
        y
    }

    /// Solves `R x = y` (back substitution).
    pub fn solve_r(&self, y: &[R]) -> Vec<R> {
        let n = self.dim();
        let r = &self.factor;
        let mut x: Vec<R> = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i].clone();
            for k in (i + 1)..n {
                s -= r[(i, k)].clone() * x[k].clone();
            }
            x[i] = s / r[(i, i)].clone();
        }
        x
    }

    /// `R⁻ᵀ H R⁻¹`, symmetrized.
    pub fn congruence(&self, h: &Matrix<R>) -> Matrix<R> {
        let n = self.dim();
        assert_eq!((h.nrows(), h.ncols()), (n, n));
        // W = R⁻ᵀ H, column by column.
        let mut w = Matrix::zeros(n, n, h.precision());
        for j in 0..n {
            let col = self.solve_rt(&h.column(j));
            for i in 0..n {
                w[(i, j)] = col[i].clone();
            }
        }
        // C = W R⁻¹  <=>  Cᵀ = R⁻ᵀ Wᵀ.
        let wt = w.transpose();
        let mut c = Matrix::zeros(n, n, h.precision());
        for j in 0..n {
            let col = self.solve_rt(&wt.column(j));
            for i in 0..n {
                c[(j, i)] = col[i].clone();
            }
        }
        let half = c[(0, 0)].lift(0.5);
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                c[(i, i)].clone()
            } else {
                half.clone() * (c[(i, j)].clone() + c[(j, i)].clone())
            }
        })
    }
}

/// Determinant by LU with partial pivoting.
pub fn determinant<R: Real>(a: &Matrix<R>) -> R {
    assert!(a.is_square());
    let n = a.nrows();
    let prec = a.precision();
    let mut m = a.clone();
    let mut det = R::one(prec);
    for k in 0..n {
        let mut p = k;
        let mut best = m[(k, k)].abs();
        for i in (k + 1)..n {
            let v = m[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best.is_zero() {
            return R::zero(prec);
        }
        if p != k {
            for j in 0..n {
                let tmp = m[(k, j)].clone();
                m[(k, j)] = m[(p, j)].clone();
                m[(p, j)] = tmp;
            }
            det = -det;
        }
        let pivot = m[(k, k)].clone();
        det *= pivot.clone();
        for i in (k + 1)..n {
            let f = m[(i, k)].clone() / pivot.clone();
            if f.is_zero() {
                continue;
            }
            for j in (k + 1)..n {
                let v = m[(k, j)].clone();
                m[(i, j)] -= f.clone() * v;
            }
        }
    }
    det
}

/// Leading principal minors of a symmetric matrix via an unpivoted LDLᵀ
/// sweep. Once a pivot vanishes the remaining minors are computed one by one
/// with [`determinant`].
pub fn leading_minors_ldl<R: Real>(a: &Matrix<R>) -> Vec<R> {
    assert!(a.is_square());
    let n = a.nrows();
    let prec = a.precision();
    let mut minors = Vec::with_capacity(n);
    let mut l = Matrix::<R>::identity(n, prec);
    let mut d: Vec<R> = Vec::with_capacity(n);
    let mut running = R::one(prec);
    for j in 0..n {
        let mut dj = a[(j, j)].clone();
        for k in 0..j {
            dj -= l[(j, k)].clone() * l[(j, k)].clone() * d[k].clone();
        }
        if dj.is_zero() || !dj.is_finite() {
            minors.push(R::zero(prec));
            for m in (j + 1)..n {
                minors.push(determinant(&a.leading(m + 1)));
            }
            return minors;
        }
        for i in (j + 1)..n {
            let mut s = a[(i, j)].clone();
            for k in 0..j {
                s -= l[(i, k)].clone() * l[(j, k)].clone() * d[k].clone();
            }
            l[(i, j)] = s / dj.clone();
        }
        running *= dj.clone();
        minors.push(running.clone());
        d.push(dj);
    }
    minors
}

/// Eigen-decomposition of a real symmetric matrix. Eigenvalues ascend;
/// column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<R> {
    pub values: Vec<R>,
    pub vectors: Matrix<R>,
}

impl<R: Real> SymmetricEigen<R> {
    pub fn new(a: &Matrix<R>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::Dimension(
                "eigen of a non-square matrix".into(),
            ));
        }
        let n = a.nrows();
        let prec = a.precision();
        if n == 0 {
            return Ok(SymmetricEigen {
                values: vec![],
                vectors: Matrix::zeros(0, 0, prec),
            });
        }
        let mut v = a.clone();
        let mut d = vec![R::zero(prec); n];
        let mut e = vec![R::zero(prec); n];
        tred2(&mut v, &mut d, &mut e);
        tql2(&mut v, &mut d, &mut e)?;
        Ok(SymmetricEigen {
            values: d,
            vectors: v,
        })
    }

    pub fn min(&self) -> &R {
        &self.values[0]
    }

    pub fn max(&self) -> &R {
        &self.values[self.values.len() - 1]
    }

    pub fn vector(&self, k: usize) -> Vec<R> {
        self.vectors.column(k)
    }
}

fn tred2<R: Real>(v: &mut Matrix<R>, d: &mut [R], e: &mut [R]) {
    let n = d.len();
    let prec = v.precision();
    let zero = R::zero(prec);
    for j in 0..n {
        d[j] = v[(n - 1, j)].clone();
    }

    for i in (1..n).rev() {
        let mut scale = zero.clone();
        let mut h = zero.clone();
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale.is_zero() {
            e[i] = d[i - 1].clone();
            for j in 0..i {
                d[j] = v[(i - 1, j)].clone();
                v[(i, j)] = zero.clone();
                v[(j, i)] = zero.clone();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale.clone();
                h += dk.clone() * dk.clone();
            }
            let mut f = d[i - 1].clone();
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale.clone() * g.clone();
            h -= f.clone() * g.clone();
            d[i - 1] = f - g.clone();
            for ej in e.iter_mut().take(i) {
                *ej = zero.clone();
            }

            for j in 0..i {
                f = d[j].clone();
                v[(j, i)] = f.clone();
                g = e[j].clone() + v[(j, j)].clone() * f.clone();
                for k in (j + 1)..i {
                    g += v[(k, j)].clone() * d[k].clone();
                    e[k] += v[(k, j)].clone() * f.clone();
                }
                e[j] = g;
            }
            f = zero.clone();
            for j in 0..i {
                e[j] /= h.clone();
                f += e[j].clone() * d[j].clone();
            }
            let hh = f / (h.clone() + h.clone());
            for j in 0..i {
                e[j] -= hh.clone() * d[j].clone();
            }
            for j in 0..i {
                f = d[j].clone();
                g = e[j].clone();
                for k in j..i {
                    let delta = f.clone() * e[k].clone() + g.clone() * d[k].clone();
                    v[(k, j)] -= delta;
                }
                d[j] = v[(i - 1, j)].clone();
                v[(i, j)] = zero.clone();
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v[(n - 1, i)] = v[(i, i)].clone();
        v[(i, i)] = R::one(prec);
        let h = d[i + 1].clone();
        if !h.is_zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)].clone() / h.clone();
            }
            for j in 0..=i {
                let mut g = zero.clone();
                for k in 0..=i {
                    g += v[(k, i + 1)].clone() * v[(k, j)].clone();
                }
                for k in 0..=i {
                    let delta = g.clone() * d[k].clone();
                    v[(k, j)] -= delta;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero.clone();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)].clone();
        v[(n - 1, j)] = zero.clone();
    }
    v[(n - 1, n - 1)] = R::one(prec);
    e[0] = zero;
}

const QL_MAX_ITER: usize = 60;

fn tql2<R: Real>(v: &mut Matrix<R>, d: &mut [R], e: &mut [R]) -> Result<(), LinalgError> {
    let n = d.len();
    let prec = v.precision();
    let zero = R::zero(prec);
    let one = R::one(prec);
    let two = R::from_f64(2.0, prec);

    for i in 1..n {
        e[i - 1] = e[i].clone();
    }
    e[n - 1] = zero.clone();

    let mut f = zero.clone();
    let mut tst1 = zero.clone();
    let eps = d[0].epsilon();
    for l in 0..n {
        let t = d[l].abs() + e[l].abs();
        if t > tst1 {
            tst1 = t;
        }
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps.clone() * tst1.clone() {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(LinalgError::NoConvergence {
                        index: l,
                        iterations: iter - 1,
                    });
                }
                let mut g = d[l].clone();
                let mut p = (d[l + 1].clone() - g.clone()) / (two.clone() * e[l].clone());
                let mut r = p.hypot(&one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l].clone() / (p.clone() + r.clone());
                d[l + 1] = e[l].clone() * (p.clone() + r.clone());
                let dl1 = d[l + 1].clone();
                let mut h = g - d[l].clone();
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h.clone();
                }
                f += h;

                p = d[m].clone();
                let mut c = one.clone();
                let mut c2 = c.clone();
                let mut c3 = c.clone();
                let el1 = e[l + 1].clone();
                let mut s = zero.clone();
                let mut s2 = zero.clone();
                for i in (l..m).rev() {
                    c3 = c2.clone();
                    c2 = c.clone();
                    s2 = s.clone();
                    g = c.clone() * e[i].clone();
                    h = c.clone() * p.clone();
                    r = p.hypot(&e[i]);
                    e[i + 1] = s.clone() * r.clone();
                    s = e[i].clone() / r.clone();
                    c = p.clone() / r.clone();
                    p = c.clone() * d[i].clone() - s.clone() * g.clone();
                    d[i + 1] =
                        h.clone() + s.clone() * (c.clone() * g.clone() + s.clone() * d[i].clone());

                    for k in 0..n {
                        h = v[(k, i + 1)].clone();
                        v[(k, i + 1)] = s.clone() * v[(k, i)].clone() + c.clone() * h.clone();
                        v[(k, i)] = c.clone() * v[(k, i)].clone() - s.clone() * h.clone();
                    }
                }
                p = -s.clone() * s2 * c3 * el1 * e[l].clone() / dl1;
                e[l] = s * p.clone();
                d[l] = c * p;

                if e[l].abs() <= eps.clone() * tst1.clone() {
                    break;
                }
            }
        }
        d[l] = d[l].clone() + f.clone();
        e[l] = zero.clone();
    }

    // Selection sort keeps eigenvector columns paired with their values.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i].clone();
        for (j, dj) in d.iter().enumerate().skip(i + 1) {
            if *dj < p {
                k = j;
                p = dj.clone();
            }
        }
        if k != i {
            d[k] = d[i].clone();
            d[i] = p;
            for row in 0..n {
                let tmp = v[(row, i)].clone();
                v[(row, i)] = v[(row, k)].clone();
                v[(row, k)] = tmp;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::MpFloat;
    use approx::assert_relative_eq;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = m(&[&[4.0, 2.0, 0.4], &[2.0, 5.0, 1.0], &[0.4, 1.0, 3.0]]);
        let ch = Cholesky::new(&a).unwrap();
        let r = ch.factor();
        let back = r.transpose().matmul(r);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(back[(i, j)], a[(i, j)], epsilon = 1e-14);
            }
        }
        let minors = ch.leading_minors();
        assert_relative_eq!(minors[0], 4.0);
        assert_relative_eq!(minors[1], 16.0, epsilon = 1e-12);
        assert_relative_eq!(minors[2], determinant(&a), epsilon = 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = m(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            Cholesky::new(&a),
            Err(LinalgError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn ldl_minors_match_determinants_for_indefinite() {
        let a = m(&[&[1.0, 2.0, 0.0], &[2.0, 1.0, 1.0], &[0.0, 1.0, -2.0]]);
        let minors = leading_minors_ldl(&a);
        for (k, v) in minors.iter().enumerate() {
            assert_relative_eq!(*v, determinant(&a.leading(k + 1)), epsilon = 1e-12);
        }
        let z = m(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(leading_minors_ldl(&z), vec![0.0, -1.0]);
    }

    #[test]
    fn eigen_small_known() {
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_relative_eq!(eig.values[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(eig.values[1], 3.0, epsilon = 1e-14);
        let v = eig.vector(0);
        assert_relative_eq!(v[0].abs(), 0.5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(v[0], -v[1], epsilon = 1e-14);
    }

    #[test]
    fn eigen_decomposition_reconstructs() {
        let n = 7;
        let a = Matrix::from_fn(n, n, |i, j| {
            1.0 / (1.0 + i as f64 + j as f64) + if i == j { 0.3 } else { 0.0 }
        });
        let eig = SymmetricEigen::new(&a).unwrap();
        for k in 0..n {
            let v = eig.vector(k);
            let av = a.matvec(&v);
            for i in 0..n {
                assert_relative_eq!(av[i], eig.values[k] * v[i], epsilon = 1e-12);
            }
            assert_relative_eq!(dot(&v, &v), 1.0, epsilon = 1e-12);
        }
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn eigen_one_by_one_and_diagonal() {
        let a = m(&[&[-3.5]]);
        let eig = SymmetricEigen::new(&a).unwrap();
        assert_eq!(eig.values, vec![-3.5]);
        let d = m(&[&[3.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let eig = SymmetricEigen::new(&d).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn hilbert_spectrum_in_multiprecision() {
        // The 12x12 Hilbert matrix has condition ~1.7e16; its smallest
        // eigenvalue is ~2.6e-17 and unresolvable in doubles.
        let prec = Precision::from_digits(60);
        let n = 12;
        let h = Matrix::from_fn(n, n, |i, j| {
            MpFloat::one(prec) / MpFloat::from_i64((i + j + 1) as i64, prec)
        });
        let eig = SymmetricEigen::new(&h).unwrap();
        let lo = eig.min().to_f64();
        assert!(lo > 0.0 && lo < 1e-15, "{lo}");
        // Trace identity.
        let trace: f64 = (0..n).map(|i| 1.0 / (2 * i + 1) as f64).sum();
        let sum: f64 = eig.values.iter().map(Real::to_f64).sum();
        assert_relative_eq!(sum, trace, epsilon = 1e-14);
        // det = product of eigenvalues, checked in multiprecision.
        let det = determinant(&h);
        let prod = eig
            .values
            .iter()
            .cloned()
            .fold(MpFloat::one(prec), |a, b| a * b);
        assert_relative_eq!(prod.to_f64() / det.to_f64(), 1.0, epsilon = 1e-30);
    }

    #[test]
    fn congruence_matches_explicit_inverse() {
        let u = m(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let h = m(&[&[1.0, 3.0], &[3.0, -2.0]]);
        let ch = Cholesky::new(&u).unwrap();
        let c = ch.congruence(&h);
        let r = ch.factor();
        // Explicit inverse of the 2x2 upper-triangular factor.
        let rinv = m(&[
            &[1.0 / r[(0, 0)], -r[(0, 1)] / (r[(0, 0)] * r[(1, 1)])],
            &[0.0, 1.0 / r[(1, 1)]],
        ]);
        let expect = rinv.transpose().matmul(&h).matmul(&rinv);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(c[(i, j)], expect[(i, j)], epsilon = 1e-13);
            }
        }
    }
}
