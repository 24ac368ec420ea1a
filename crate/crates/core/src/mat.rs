//! Minimal dense row-major matrix and vector helpers.
//!
//! Desk-scale only (n up to a few thousand); everything is plain `Vec`
//! storage with straightforward loops.

use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Real> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[S]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// y = A x
    pub fn matvec(&self, x: &[S]) -> Vec<S> {
        assert_eq!(x.len(), self.cols, "matvec dimension");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// C = A B
    pub fn matmul(&self, b: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, b.rows, "matmul dimension");
        let mut c = Mat::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == S::zero() {
                    continue;
                }
                for j in 0..b.cols {
                    c[(i, j)] = c[(i, j)] + aik * b[(k, j)];
                }
            }
        }
        c
    }

    pub fn add(&self, b: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        let data = self
            .data
            .iter()
            .zip(&b.data)
            .map(|(&x, &y)| x + y)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, b: &Mat<S>) -> Mat<S> {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        let data = self
            .data
            .iter()
            .zip(&b.data)
            .map(|(&x, &y)| x - y)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, c: S) -> Mat<S> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> S {
        self.data
            .iter()
            .map(|&x| x * x)
            .fold(S::zero(), |a, b| a + b)
            .sqrt()
    }
}

impl<S> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len(), "dot dimension");
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<S: Real>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// y += c x
pub fn axpy<S: Real>(y: &mut [S], c: S, x: &[S]) {
    assert_eq!(y.len(), x.len(), "axpy dimension");
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + c * xi;
    }
}

pub fn scaled<S: Real>(v: &[S], c: S) -> Vec<S> {
    v.iter().map(|&x| x * c).collect()
}

pub fn sub<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "sub dimension");
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn add<S: Real>(a: &[S], b: &[S]) -> Vec<S> {
    assert_eq!(a.len(), b.len(), "add dimension");
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// Normalizes in place; returns the original norm. Zero vectors are left as-is.
pub fn normalize<S: Real>(v: &mut [S]) -> S {
    let n = norm(v);
    if n > S::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
    n
}

/// Orthonormalizes the columns of `m` in place by modified Gram-Schmidt
/// with one re-orthogonalization pass. Panics if the columns are
/// numerically dependent (never the case for the seeded Gaussian draws
/// this is used on).
pub fn orthonormalize_columns<S: Real>(m: &mut Mat<S>) {
    let cols = m.cols();
    for j in 0..cols {
        let mut v = m.col(j);
        for _ in 0..2 {
            for i in 0..j {
                let qi = m.col(i);
                let c = dot(&qi, &v);
                axpy(&mut v, -c, &qi);
            }
        }
        let n = normalize(&mut v);
        assert!(
            n > S::epsilon().sqrt(),
            "column {j} numerically dependent during orthonormalization"
        );
        m.set_col(j, &v);
    }
}

/// Kahan compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum<S> {
    sum: S,
    carry: S,
}

impl<S: Real> KahanSum<S> {
    pub fn new() -> Self {
        KahanSum {
            sum: S::zero(),
            carry: S::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: S) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> S {
        self.sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_matmul_agree_on_identity() {
        let a = Mat::<f64>::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let i = Mat::identity(2);
        assert_eq!(a.matmul(&i).data(), a.data());
        assert_eq!(a.matvec(&[1.0, 0.0]), vec![1.0, 3.0]);
    }

    #[test]
    fn kahan_recovers_lost_low_bits() {
        let mut k = KahanSum::<f64>::new();
        k.add(1e16);
        for _ in 0..1000 {
            k.add(1.0);
        }
        k.add(-1e16);
        assert_eq!(k.value(), 1000.0);
    }

    #[test]
    fn normalize_unit_norm() {
        let mut v = vec![3.0f64, 4.0];
        let n = normalize(&mut v);
        assert_eq!(n, 5.0);
        assert!((norm(&v) - 1.0).abs() < 1e-15);
    }
}
