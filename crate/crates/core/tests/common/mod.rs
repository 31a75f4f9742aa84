#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn norm(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Number of eigenvalues below `x` of the symmetric tridiagonal matrix with
/// diagonal `d` and off-diagonal `e`.
pub fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let denom = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a tridiagonal matrix by bisection on the Sturm count.
pub fn sturm_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            assert!(i.abs_diff(j) <= 1 || m[(i, j)] == 0.0, "matrix is not tridiagonal");
        }
    }
    let d: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    let e: Vec<f64> = (0..n - 1).map(|i| m[(i + 1, i)]).collect();
    // Gershgorin interval
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(&d, &e, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// `v(t)` and `v'(t)` for `v'' = a1 v' + c v`, `v(0) = 1`, `v'(0) = 0`, by
/// summing the Taylor series until the terms drop below roundoff.
pub fn taylor_solution(a1: f64, c: f64, t: f64) -> (f64, f64) {
    let mut coeff = vec![1.0, 0.0];
    let mut v = 1.0;
    let mut dv = 0.0;
    let mut n = 0;
    loop {
        // (n+2)(n+1) c_{n+2} = a1 (n+1) c_{n+1} + c c_n
        let next = (a1 * (n + 1) as f64 * coeff[n + 1] + c * coeff[n]) / ((n + 2) * (n + 1)) as f64;
        coeff.push(next);
        let term = next * t.powi(n as i32 + 2);
        let dterm = (n + 2) as f64 * next * t.powi(n as i32 + 1);
        v += term;
        dv += dterm;
        n += 1;
        if n > 20 && term.abs() < 1e-18 * v.abs() && dterm.abs() < 1e-18 * dv.abs().max(1.0) {
            break;
        }
        assert!(n < 2000, "series did not converge");
    }
    (v, dv)
}

/// Random smooth periodic function on an `nx` by `ny` grid.
pub fn random_field(rng: &mut impl Rng, nx: usize, ny: usize, modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nx, ny);
    for _ in 0..modes {
        let kx = rng.gen_range(0..6) as f64;
        let ky = rng.gen_range(0..6) as f64;
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let px = rng.gen_range(0.0..std::f64::consts::TAU);
        let py = rng.gen_range(0.0..std::f64::consts::TAU);
        for i in 0..nx {
            for j in 0..ny {
                let x = std::f64::consts::TAU * i as f64 / nx as f64;
                let y = std::f64::consts::TAU * j as f64 / ny as f64;
                m[(i, j)] += amp * (kx * x + px).cos() * (ky * y + py).cos();
            }
        }
    }
    m
}
