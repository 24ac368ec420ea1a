//! Shared test oracles, all independent of the library paths they check:
//! characteristic-polynomial root bracketing via LU determinants, and the
//! closed-form linear-flow solution via the eigenbasis of the Hessian.
#![allow(dead_code)] // each test binary uses its own subset

use driftlab::geometry::{eigendecompose, SymMatrix};
use driftlab::mat::Mat;
use driftlab::rng::CounterRng;

/// det(A - x I) via LU with partial pivoting; independent of the Jacobi
/// eigensolver.
pub fn charpoly_eval(a: &SymMatrix<f64>, x: f64) -> f64 {
    let n = a.n();
    let mut m = a.mat().clone();
    for i in 0..n {
        m[(i, i)] -= x;
    }
    let mut det = 1.0;
    for col in 0..n {
        // pivot
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[(row, col)].abs() > m[(pivot, col)].abs() {
                pivot = row;
            }
        }
        if m[(pivot, col)] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            det = -det;
        }
        det *= m[(col, col)];
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            for j in col..n {
                m[(row, j)] -= factor * m[(col, j)];
            }
        }
    }
    det
}

/// All real roots of det(A - x I) by grid scan plus bisection. Assumes
/// simple roots (true almost surely for random matrices).
pub fn charpoly_roots_by_bisection(a: &SymMatrix<f64>, grid: usize) -> Vec<f64> {
    let bound = a.op_norm() * 1.5 + 1.0;
    let (lo, hi) = (-bound, bound);
    let step = (hi - lo) / grid as f64;
    let mut roots = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = charpoly_eval(a, x_prev);
    for k in 1..=grid {
        let x = lo + step * k as f64;
        let f = charpoly_eval(a, x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev * f < 0.0 {
            let (mut l, mut r) = (x_prev, x);
            let mut fl = f_prev;
            for _ in 0..200 {
                let mid = 0.5 * (l + r);
                let fm = charpoly_eval(a, mid);
                if fl * fm <= 0.0 {
                    r = mid;
                } else {
                    l = mid;
                    fl = fm;
                }
            }
            roots.push(0.5 * (l + r));
        }
        x_prev = x;
        f_prev = f;
    }
    roots.sort_by(|p, q| q.partial_cmp(p).unwrap());
    roots
}

/// Closed-form displacement of the linear flow
/// d(delta)/dt = -(g0 + H delta), delta(0) = 0:
/// delta(t) = -sum_j phi(lambda_j, t) (v_jᵀ g0) v_j with
/// phi(l, t) = (1 - e^{-l t}) / l and phi(0, t) = t.
pub fn linear_flow_displacement(h: &SymMatrix<f64>, g0: &[f64], t: f64) -> Vec<f64> {
    let spectrum = eigendecompose(h);
    let n = h.n();
    let mut delta = vec![0.0; n];
    for j in 0..n {
        let v = spectrum.eigenvector(j);
        let lambda = spectrum.eigenvalue(j);
        let coeff: f64 = v.iter().zip(g0).map(|(&a, &b)| a * b).sum();
        let phi = if lambda.abs() < 1e-300 {
            t
        } else {
            -(-lambda * t).exp_m1() / lambda
        };
        for i in 0..n {
            delta[i] -= phi * coeff * v[i];
        }
    }
    delta
}

/// Random symmetric matrix with entries of the given scale.
pub fn random_sym(n: usize, seed: u64, scale: f64) -> SymMatrix<f64> {
    let rng = CounterRng::new(seed);
    let mut s = rng.stream(0);
    let m = Mat::from_fn(n, n, |_, _| s.next_gaussian::<f64>() * scale);
    SymMatrix::from_fn_sym(n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Random PSD matrix A Aᵀ / n plus a small ridge.
pub fn random_psd(n: usize, seed: u64) -> SymMatrix<f64> {
    let rng = CounterRng::new(seed);
    let mut s = rng.stream(0);
    let a = Mat::from_fn(n, n, |_, _| s.next_gaussian::<f64>());
    SymMatrix::from_fn_sym(n, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            acc += a[(i, k)] * a[(j, k)];
        }
        acc / n as f64 + if i == j { 0.1 } else { 0.0 }
    })
}
