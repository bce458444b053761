//! One-dimensional quadrature rules.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Which composite rule was applied to a uniformly sampled integrand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UniformRule {
    Simpson,
    /// Used when the sample count is even and Simpson does not apply.
    Trapezoid,
}

/// Weights of the composite Simpson rule for `len` samples with spacing `h`.
///
/// Falls back to the composite trapezoid rule when `len` is even.
pub fn uniform_weights(len: usize, h: f64) -> (Vec<f64>, UniformRule) {
    match len {
        0 => (Vec::new(), UniformRule::Trapezoid),
        1 => (vec![0.0], UniformRule::Trapezoid),
        _ if len % 2 == 1 => {
            let mut w: Vec<f64> = (0..len)
                .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 })
                .collect();
            w[0] = 1.0;
            w[len - 1] = 1.0;
            w.iter_mut().for_each(|x| *x *= h / 3.0);
            (w, UniformRule::Simpson)
        }
        _ => {
            let mut w = vec![h; len];
            w[0] = h / 2.0;
            w[len - 1] = h / 2.0;
            (w, UniformRule::Trapezoid)
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = order as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss–Legendre rule on `[a, b]`: `panels` equal panels of `order` nodes.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * width * (xi + 1.0));
            weights.push(0.5 * width * wi);
        }
    }
    (nodes, weights)
}
