//! Independent numerical oracles for the integration suites: a Taylor-series
//! matrix exponential with its own scaling strategy, and a fixed-step RK4
//! integrator. Neither shares code with the library's flow machinery.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// exp(A t) by scaling so the norm is tiny, summing the Taylor series to
/// machine saturation, and squaring back.
pub fn taylor_expm(a: &Matrix, t: f64) -> Matrix {
    let n = a.nrows();
    let at = a * t;
    let norm = at.iter().map(|x| x.abs()).fold(0.0, f64::max) * n as f64;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = &at / 2f64.powi(squarings as i32);
    let mut sum = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    for k in 1..=60 {
        term = &term * &scaled / k as f64;
        let before = sum.clone();
        sum += &term;
        if sum == before {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Fixed-step classical RK4 for x' = A x + b over [0, t].
pub fn rk4(a: &Matrix, b: &Vector, x0: &Vector, t: f64, steps: usize) -> Vector {
    let h = t / steps as f64;
    let f = |x: &Vector| a * x + b;
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Random Hurwitz-stable mode dynamics: strictly diagonally dominant with
/// negative diagonal, plus a small affine drift.
pub fn random_stable_flows(
    rng: &mut Rng,
    n: usize,
    modes: usize,
    tau: f64,
) -> Vec<switchsynth::flow::FlowMap> {
    (1..=modes)
        .map(|id| {
            let mut a = Matrix::from_fn(n, n, |_, _| rng.uniform(-1.0, 1.0));
            for i in 0..n {
                let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
                a[(i, i)] = -(off + rng.uniform(0.2, 1.5));
            }
            let b = Vector::from_fn(n, |_, _| rng.uniform(-0.5, 0.5));
            switchsynth::flow::affine_flow(&a, &b, tau, id).unwrap()
        })
        .collect()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// A deterministic xorshift-based stream of floats in [lo, hi).
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + u * (hi - lo)
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}
