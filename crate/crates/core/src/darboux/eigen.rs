//! Radial Dirichlet eigenfunctions of the Laplacian on the unit ball.
//!
//! For degree `m` the radial factors are `phi_j(r) = r^m j_mu(lambda_j r)` with
//! `mu = m + (n-2)/2` and `lambda_j` the positive zeros of `J_mu`.

use crate::error::Result;
use crate::specfun::{bessel_j_pair, bessel_zeros, normalized_j, BesselOrder};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub dimension: usize,
    pub m: usize,
    pub order: BesselOrder,
    pub lambdas: Vec<f64>,
    /// `N_j = int_0^1 phi_j^2 r^(n-1) dr = lambda^(-2 mu) J_{mu+1}(lambda)^2 / 2`.
    pub norms: Vec<f64>,
    /// `phi_j'(1) = -lambda^(1-mu) J_{mu+1}(lambda)`.
    pub boundary_slopes: Vec<f64>,
}

pub fn dirichlet_eigendata(n: usize, m: usize, count: usize) -> Result<EigenData> {
    if n < 2 {
        return Err(crate::Error::UnsupportedDimension(n));
    }
    let order = BesselOrder::dirichlet(n, m);
    let mu = order.value();
    let zeros = bessel_zeros(order, count)?;
    let mut norms = Vec::with_capacity(count);
    let mut boundary_slopes = Vec::with_capacity(count);
    for &lambda in &zeros.zeros {
        let (_, jp) = bessel_j_pair(order, lambda);
        norms.push(lambda.powf(-2.0 * mu) * jp * jp / 2.0);
        boundary_slopes.push(-lambda.powf(1.0 - mu) * jp);
    }
    Ok(EigenData { dimension: n, m, order, lambdas: zeros.zeros, norms, boundary_slopes })
}

impl EigenData {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn phi(&self, j: usize, r: f64) -> f64 {
        r.powi(self.m as i32) * normalized_j(self.order, self.lambdas[j] * r)
    }

    /// Coefficients of `r^m` in this basis: `c_j = <r^m, phi_j> / N_j = -phi_j'(1) / (lambda_j^2 N_j)`.
    pub fn extension_coeffs(&self) -> Vec<f64> {
        self.lambdas
            .iter()
            .zip(&self.norms)
            .zip(&self.boundary_slopes)
            .map(|((l, nj), d)| -d / (l * l * nj))
            .collect()
    }
}

pub fn harmonic_extension_coeffs(n: usize, m: usize, count: usize) -> Result<Vec<f64>> {
    Ok(dirichlet_eigendata(n, m, count)?.extension_coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::composite_gauss_legendre;
    use std::f64::consts::PI;

    fn inner(e: &EigenData, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> f64 {
        let (x, w) = composite_gauss_legendre(0.0, 1.0, 64, 16);
        x.iter()
            .zip(&w)
            .map(|(r, w)| w * f(*r) * g(*r) * r.powi(e.dimension as i32 - 1))
            .sum()
    }

    #[test]
    fn eigenvalues() {
        let e = dirichlet_eigendata(3, 0, 4).unwrap();
        for (j, l) in e.lambdas.iter().enumerate() {
            assert!((l - (j + 1) as f64 * PI).abs() < 1e-12);
        }
        let e = dirichlet_eigendata(2, 0, 1).unwrap();
        assert!((e.lambdas[0] - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn closed_form_norms_and_orthogonality() {
        for (n, m) in [(2, 0), (2, 3), (3, 0), (3, 2)] {
            let e = dirichlet_eigendata(n, m, 6).unwrap();
            for j in 0..6 {
                let nj = inner(&e, |r| e.phi(j, r), |r| e.phi(j, r));
                assert!((nj - e.norms[j]).abs() < 1e-12 * e.norms[j].max(1e-3), "{n} {m} {j}");
            }
            let cross = inner(&e, |r| e.phi(0, r), |r| e.phi(1, r));
            assert!(cross.abs() < 1e-10);
        }
    }

    #[test]
    fn extension_coefficients_match_quadrature() {
        for (n, m) in [(2, 0), (2, 2), (3, 1)] {
            let e = dirichlet_eigendata(n, m, 8).unwrap();
            let c = e.extension_coeffs();
            for j in 0..8 {
                let direct = inner(&e, |r| r.powi(m as i32), |r| e.phi(j, r)) / e.norms[j];
                assert!((c[j] - direct).abs() < 1e-10 * direct.abs().max(1.0));
            }
        }
    }

    #[test]
    fn partial_sum_reference_value() {
        // scipy: sum_{j<64} 2 J_0(lambda_j / 2) / (lambda_j J_1(lambda_j)) - 1
        let e = dirichlet_eigendata(2, 0, 64).unwrap();
        let c = e.extension_coeffs();
        let sum: f64 = (0..64).map(|j| c[j] * e.phi(j, 0.5)).sum();
        assert!(((sum - 1.0).abs() - 9.178_577_211_944_372e-3).abs() < 1e-12);
    }

    #[test]
    fn partial_sums_approach_power() {
        for (n, m) in [(2, 0), (2, 2), (3, 1)] {
            let e = dirichlet_eigendata(n, m, 128).unwrap();
            let c = e.extension_coeffs();
            let sum = |jj: usize| (0..jj).map(|j| c[j] * e.phi(j, 0.5)).sum::<f64>();
            let target = 0.5f64.powi(m as i32);
            let (e64, e128) = ((sum(64) - target).abs(), (sum(128) - target).abs());
            // pointwise convergence is first order in 1/J
            assert!(e64 <= 1e-2 && e128 < 0.6 * e64, "{n} {m}: {e64} {e128}");
            let bessel: f64 = c.iter().zip(&e.norms).map(|(c, nj)| c * c * nj).sum();
            let full = 1.0 / (2 * m + n) as f64;
            assert!(bessel <= full && full - bessel < 1e-2);
        }
    }
}
