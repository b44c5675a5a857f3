//! Interpolation and differentiation on uniformly spaced samples.
//!
//! All graded-grid quantities are smooth functions of `s = ln|x|` sampled at
//! equal steps, so everything here works in that variable.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

/// Stencil width used for derivatives (seven points, sixth order).
pub const FD_POINTS: usize = 7;

/// Finite-difference weights for the `order`-th derivative at `z` from the
/// nodes `xs` (Fornberg's recursion).
pub fn fornberg_weights(z: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Precomputed stencils for derivatives of uniformly spaced samples.
#[derive(Debug, Clone)]
pub struct UniformDerivative {
    /// `weights[pos]` is the stencil for a point sitting at offset `pos`
    /// inside a window of `FD_POINTS` consecutive samples.
    weights: Vec<Vec<f64>>,
    order: usize,
}

impl UniformDerivative {
    pub fn new(order: usize) -> Self {
        let nodes: Vec<f64> = (0..FD_POINTS).map(|k| k as f64).collect();
        let weights = (0..FD_POINTS)
            .map(|pos| fornberg_weights(pos as f64, &nodes, order))
            .collect();
        Self { weights, order }
    }

    /// Derivative of `values` with respect to the sampling variable (step `h`).
    pub fn apply<T>(&self, values: &[T], h: f64) -> Vec<T>
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        let n = values.len();
        assert!(n >= FD_POINTS, "need at least {FD_POINTS} samples");
        let half = FD_POINTS / 2;
        let scale = 1.0 / h.powi(self.order as i32);
        (0..n)
            .map(|i| {
                let start = i.saturating_sub(half).min(n - FD_POINTS);
                let w = &self.weights[i - start];
                let mut acc = T::zero();
                for (k, wk) in w.iter().enumerate() {
                    acc = acc + values[start + k] * *wk;
                }
                acc * scale
            })
            .collect()
    }

    /// Derivative at a single interior index using the centred stencil.
    pub fn at<T>(&self, values: &[T], i: usize, h: f64) -> T
    where
        T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
    {
        let half = FD_POINTS / 2;
        let start = i.saturating_sub(half).min(values.len() - FD_POINTS);
        let w = &self.weights[i - start];
        let mut acc = T::zero();
        for (k, wk) in w.iter().enumerate() {
            acc = acc + values[start + k] * *wk;
        }
        acc * (1.0 / h.powi(self.order as i32))
    }
}

/// Floater-Hormann barycentric rational interpolant on equispaced nodes,
/// evaluated on a sliding window of [`FH_WINDOW`] nodes around the target.
///
/// Inside a window the interpolant is infinitely differentiable, which matters
/// when it is itself finite-differenced; restricting it to a window keeps
/// samples of very different magnitude far away from polluting the result.
#[derive(Debug, Clone)]
pub struct Barycentric {
    start: f64,
    step: f64,
    n: usize,
    weights: Vec<f64>,
}

/// Blending degree of the rational interpolant.
pub const FH_DEGREE: usize = 10;

/// Number of nodes entering one evaluation.
pub const FH_WINDOW: usize = 24;

fn floater_hormann_weights(n: usize) -> Vec<f64> {
    let d = FH_DEGREE.min(n.saturating_sub(1));
    let nn = n - 1;
    let binom = |k: usize| -> f64 {
        let mut b = 1.0;
        for j in 0..k {
            b = b * (d - j) as f64 / (j + 1) as f64;
        }
        b
    };
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(d);
            let hi = k.min(nn - d);
            let mut acc = 0.0;
            if lo <= hi {
                for i in lo..=hi {
                    acc += binom(k - i);
                }
            }
            if (k + d) % 2 == 1 {
                -acc
            } else {
                acc
            }
        })
        .collect()
}

impl Barycentric {
    pub fn new(start: f64, step: f64, n: usize) -> Self {
        Self {
            start,
            step,
            n,
            weights: floater_hormann_weights(n.min(FH_WINDOW)),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn node(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn eval<T>(&self, values: &[T], z: f64) -> T
    where
        T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let pos = (z - self.start) / self.step;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < values.len() {
            return values[nearest as usize];
        }
        self.eval_in_window(values, z, self.window_start(values.len(), pos))
    }

    /// Like [`Barycentric::eval`], but the window is the one `anchor` would
    /// use. Evaluations sharing an anchor lie on one smooth interpolant, which
    /// is what finite differences of the interpolant need.
    pub fn eval_anchored<T>(&self, values: &[T], z: f64, anchor: f64) -> T
    where
        T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let pos = (anchor - self.start) / self.step;
        self.eval_in_window(values, z, self.window_start(values.len(), pos))
    }

    fn window_start(&self, len: usize, pos: f64) -> usize {
        let width = self.weights.len();
        let centre = pos.floor().max(0.0) as usize;
        centre.saturating_sub(width / 2 - 1).min(len.saturating_sub(width))
    }

    fn eval_in_window<T>(&self, values: &[T], z: f64, first: usize) -> T
    where
        T: Copy + Zero + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    {
        let mut num = T::zero();
        let mut den = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            let d = z - self.node(first + k);
            if d == 0.0 {
                return values[first + k];
            }
            let t = w / d;
            num = num + values[first + k] * t;
            den += t;
        }
        num * (1.0 / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_first_derivative() {
        let xs = [-1.0, 0.0, 1.0];
        let w = fornberg_weights(0.0, &xs, 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_derivative_is_sixth_order() {
        let err = |h: f64| {
            let v: Vec<f64> = (0..40).map(|k| (k as f64 * h).sin()).collect();
            let d = UniformDerivative::new(1).apply(&v, h);
            d.iter()
                .enumerate()
                .map(|(k, dv)| (dv - (k as f64 * h).cos()).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 < 1e-6, "{e1}");
        assert!(e1 / e2 > 40.0, "order too low: {}", e1 / e2);
    }

    #[test]
    fn barycentric_reproduces_smooth_function() {
        let n = 60;
        let h = 0.1;
        let v: Vec<f64> = (0..n).map(|k| (0.3 * k as f64 * h).exp()).collect();
        let b = Barycentric::new(0.0, h, n);
        for &z in &[0.05, 1.234, 3.3333, 5.85] {
            assert!((b.eval(&v, z) - (0.3 * z).exp()).abs() < 1e-10);
        }
        assert_eq!(b.eval(&v, 2.0), v[20]);
    }

    #[test]
    fn window_isolates_large_far_samples() {
        let n = 400;
        let h = 0.07;
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * h).exp()).collect();
        let b = Barycentric::new(0.0, h, n);
        let z = 1.234;
        assert!((b.eval(&v, z) / z.exp() - 1.0).abs() < 1e-12);
    }
}
