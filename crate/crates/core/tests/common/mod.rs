// Independent oracles shared by the integration tests. Nothing here calls the
// library's kernel, Sinkhorn or Fokker-Planck code.
#![allow(dead_code)]

use std::f64::consts::PI;

pub type Matrix = Vec<Vec<f64>>;

/// Heat kernel with variance `v` as a plain Fourier sum over |k| ≤ 400.
pub fn heat_series(dx: f64, v: f64) -> f64 {
    let mut acc = 0.0;
    for k in (1..=400).rev() {
        let k = k as f64;
        acc += (-0.5 * v * k * k).exp() * (k * dx).cos();
    }
    (1.0 + 2.0 * acc) / (2.0 * PI)
}

pub fn nodes(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Gradient of `(0.5 + 0.3 sin t) cos x + 0.2 sin t cos 2x`, written out by hand.
pub fn benchmark_grad(t: f64, x: f64) -> f64 {
    -(0.5 + 0.3 * t.sin()) * x.sin() - 0.4 * t.sin() * (2.0 * x).sin()
}

/// Normalized samples of `exp(w(x))` on `n` nodes (density w.r.t. dx).
pub fn density_from(n: usize, w: impl Fn(f64) -> f64) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    let mut v: Vec<f64> = nodes(n).into_iter().map(|x| w(x).exp()).collect();
    let s: f64 = v.iter().sum::<f64>() * h;
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Plain-domain Sinkhorn on masses `a`, `b` with Gibbs matrix `k`; returns the
/// coupling masses `u_i K_ij v_j`.
pub fn dense_sinkhorn(k: &Matrix, a: &[f64], b: &[f64]) -> Matrix {
    let n = a.len();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; n];
    for _ in 0..1_000_000 {
        for i in 0..n {
            let s: f64 = (0..n).map(|j| k[i][j] * v[j]).sum();
            u[i] = a[i] / s;
        }
        for j in 0..n {
            let s: f64 = (0..n).map(|i| k[i][j] * u[i]).sum();
            v[j] = b[j] / s;
        }
        let err: f64 = (0..n)
            .map(|i| ((0..n).map(|j| u[i] * k[i][j] * v[j]).sum::<f64>() - a[i]).abs())
            .sum();
        if err < 1e-15 {
            break;
        }
    }
    (0..n)
        .map(|i| (0..n).map(|j| u[i] * k[i][j] * v[j]).collect())
        .collect()
}

/// Fourier differentiation matrices for an even number of nodes.
fn diff_matrices(n: usize) -> (Matrix, Matrix) {
    let h = 2.0 * PI / n as f64;
    let mut d1 = vec![vec![0.0; n]; n];
    let mut d2 = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                d2[i][j] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
                continue;
            }
            let sign = if (i + n - j).is_multiple_of(2) { 1.0 } else { -1.0 };
            let half = (i as f64 - j as f64) * h / 2.0;
            d1[i][j] = 0.5 * sign / half.tan();
            d2[i][j] = -0.5 * sign / half.sin().powi(2);
        }
    }
    (d1, d2)
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for l in 0..n {
            let x = a[i][l];
            if x == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

/// Transition densities `q(x_i → x_j)` of `dZ = grad(t, Z) dt + √τ dW` over
/// `[t0, t1]`: every spike is carried by a dense generator with classical RK4.
pub fn dense_transition(
    n: usize,
    grad: impl Fn(f64, f64) -> f64,
    tau: f64,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Matrix {
    let (d1, d2) = diff_matrices(n);
    let xs = nodes(n);
    let h = 2.0 * PI / n as f64;
    let generator = |t: f64| -> Matrix {
        let g: Vec<f64> = xs.iter().map(|&x| grad(t, x)).collect();
        (0..n)
            .map(|i| (0..n).map(|j| -d1[i][j] * g[j] + 0.5 * tau * d2[i][j]).collect())
            .collect()
    };
    let axpy = |r: &Matrix, s: f64, k: &Matrix| -> Matrix {
        r.iter()
            .zip(k)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            .collect()
    };
    // columns are the evolving spikes
    let mut r: Matrix = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 / h } else { 0.0 }).collect())
        .collect();
    let dt = (t1 - t0) / steps as f64;
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let (la, lb, lc) = (generator(t), generator(t + 0.5 * dt), generator(t + dt));
        let k1 = mat_mul(&la, &r);
        let k2 = mat_mul(&lb, &axpy(&r, 0.5 * dt, &k1));
        let k3 = mat_mul(&lb, &axpy(&r, 0.5 * dt, &k2));
        let k4 = mat_mul(&lc, &axpy(&r, dt, &k3));
        for i in 0..n {
            for j in 0..n {
                r[i][j] += dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
    }
    (0..n).map(|i| (0..n).map(|j| r[j][i]).collect()).collect()
}

/// Periodic trapezoid rule on `points` nodes over one period.
pub fn periodic_quadrature(points: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = 2.0 * PI / points as f64;
    (0..points).map(|i| f(i as f64 * h)).sum::<f64>() * h
}

/// Total variation between two probability vectors.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// `Σ p log(p/q)` over two arrays of masses.
pub fn kl_masses(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum()
}
