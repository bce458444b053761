//! Backward mode solver.
//!
//! Writing `G_m(r,t) = r^m g(t) + sum_j h_j(t) phi_j(r)` and
//! `w_j = h_j + c_j g`, each eigen-coefficient obeys
//!
//! `w'' + ((n-1)/t) w' + lambda_j^2 w = lambda_j^2 c_j g(t)`,  `w(T) = w'(T) = 0`,
//!
//! which is integrated from `t = T` down to the first positive grid node with
//! classical RK4.

use super::eigen::{dirichlet_eigendata, EigenData};
use crate::error::{Error, Result};
use crate::harmonics::{check_dimension, HarmonicIndex};
use crate::specfun::{bessel_j, bessel_y0_small, normalized_j, BesselOrder};
use crate::transform::{zonal_factor, RadialProfile, TGrid};
use crate::Verdict;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EIGS: usize = 64;
/// Below this time every step is split into [`SUBSTEPS`] RK4 substeps.
pub const FINE_REGION: f64 = 0.1;
pub const SUBSTEPS: usize = 4;
/// Nodes used by the singularity fit.
pub const SIGMA_NODES: usize = 4;
/// Modes whose `lambda * t_4` exceeds this are left out of the singularity fit.
pub const SIGMA_MAX_ARGUMENT: f64 = 8.0;
pub const SIGMA_FACTOR: f64 = 10.0;
/// Support of the reference phantom used for the singularity baseline.
pub const BASELINE_SUPPORT: (f64, f64) = (0.3, 0.8);
/// Fraction of the data-wide scale added to each mode's own scale when
/// normalising the singularity indicator.
pub const SCALE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProblem {
    pub dimension: usize,
    pub m: usize,
    /// `g_{m,k}` on the t-grid.
    pub series: Vec<f64>,
    pub t_grid: TGrid,
    pub eigs: usize,
    pub sigma_threshold: Option<f64>,
    /// Largest magnitude over all modes of the data this series came from.
    pub data_scale: Option<f64>,
}

impl ModeProblem {
    pub fn new(dimension: usize, m: usize, series: Vec<f64>, t_grid: TGrid, eigs: usize) -> Result<Self> {
        let p = Self { dimension, m, series, t_grid, eigs, sigma_threshold: None, data_scale: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.sigma_threshold = Some(threshold);
        self
    }

    pub fn with_data_scale(mut self, scale: f64) -> Self {
        self.data_scale = Some(scale);
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        if self.eigs == 0 {
            return Err(Error::Invalid("at least one eigenfunction is required".into()));
        }
        if self.series.len() != self.t_grid.samples {
            return Err(Error::Invalid(format!(
                "series has {} samples, grid has {}",
                self.series.len(),
                self.t_grid.samples
            )));
        }
        if self.t_grid.samples < 2 * SIGMA_NODES || self.t_grid.time(SIGMA_NODES) > FINE_REGION {
            return Err(Error::GridTooCoarse(format!(
                "t-grid with {} samples on [0, {}] does not resolve t = 0",
                self.t_grid.samples, self.t_grid.t_max
            )));
        }
        let scale = self.series.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let last = self.series[self.series.len() - 1].abs();
        if last > 1e-10 * scale {
            return Err(Error::Precondition(format!(
                "boundary series does not vanish at t = {} (value {last:e})",
                self.t_grid.t_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub dimension: usize,
    pub m: usize,
    pub t_grid: TGrid,
    pub eigen: EigenData,
    /// Harmonic-extension coefficients `c_j`.
    pub coeffs: Vec<f64>,
    pub series: Vec<f64>,
    /// `h[j][i] = h_j(t_i)`; column 0 holds the extrapolated initial values.
    pub h: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
    /// Estimated `h_j'(0)`.
    pub velocity: Vec<f64>,
    /// Estimated `g'(0)`, the velocity of the harmonic-extension part.
    pub boundary_velocity: f64,
    pub velocity_norm: f64,
    /// Velocity the same estimator reports on exact separable solutions.
    pub velocity_floor: f64,
    pub sigma: f64,
    pub sigma_modes: usize,
    pub sigma_threshold: Option<f64>,
    /// `|h_J(0)| sqrt(N_J)` for the last retained eigenfunction.
    pub tail: f64,
    pub verdict: Verdict,
}

impl ModeSolution {
    /// Recovered radial factor `f_m(r) = G_m(r, 0)`, zero outside the ball.
    pub fn profile(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        self.initial.iter().enumerate().map(|(j, a)| a * self.eigen.phi(j, r)).sum::<f64>()
            + self.series[0] * r.powi(self.m as i32)
    }

    /// `G_m(r, t_i)`.
    pub fn slice(&self, r: f64, i: usize) -> f64 {
        self.h.iter().enumerate().map(|(j, hj)| hj[i] * self.eigen.phi(j, r)).sum::<f64>()
            + self.series[i] * r.powi(self.m as i32)
    }

    /// `G_m` on `radii x t-grid`, as `[r][t]`.
    pub fn slice_table(&self, radii: &[f64]) -> Vec<Vec<f64>> {
        radii
            .par_iter()
            .map(|&r| {
                let phis: Vec<f64> = (0..self.eigen.len()).map(|j| self.eigen.phi(j, r)).collect();
                let rm = r.powi(self.m as i32);
                (0..self.t_grid.samples)
                    .map(|i| self.h.iter().zip(&phis).map(|(h, p)| h[i] * p).sum::<f64>() + self.series[i] * rm)
                    .collect()
            })
            .collect()
    }

    pub fn velocity_ratio(&self) -> f64 {
        ratio(self.velocity_norm, self.velocity_floor)
    }
}

pub(crate) fn ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Four-point Lagrange interpolation of uniformly sampled data.
pub(crate) fn interpolate(values: &[f64], h: f64, t: f64) -> f64 {
    let s = t / h;
    let last = values.len() - 4;
    let i = ((s.floor() as isize) - 1).clamp(0, last as isize) as usize;
    let x = s - i as f64;
    let mut acc = 0.0;
    for a in 0..4 {
        let mut l = 1.0;
        for b in 0..4 {
            if a != b {
                l *= (x - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * values[i + a];
    }
    acc
}

/// RK4 from `t_max` down to the first positive node. Returns `w` on every node
/// (entry 0 unused).
fn integrate_backward<F>(n: usize, lambda: f64, grid: TGrid, start: [f64; 2], forcing: F) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let h = grid.spacing();
    let l2 = lambda * lambda;
    let damping = (n - 1) as f64;
    let rhs = |t: f64, y: [f64; 2]| [y[1], forcing(t) - damping / t * y[1] - l2 * y[0]];
    let mut out = vec![0.0; grid.samples];
    let mut y = start;
    out[grid.samples - 1] = y[0];
    for i in (2..grid.samples).rev() {
        let t_hi = grid.time(i);
        let steps = if t_hi <= FINE_REGION + 1e-12 { SUBSTEPS } else { 1 };
        let dt = -h / steps as f64;
        for s in 0..steps {
            let t = t_hi + s as f64 * dt;
            let k1 = rhs(t, y);
            let k2 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
            let k3 = rhs(t + 0.5 * dt, [y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
            let k4 = rhs(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
            y = [
                y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
        }
        out[i - 1] = y[0];
    }
    out
}

/// Exact quadratic through the values at `h, 2h, 3h`: returns `(p(0), p'(0))`.
fn quadratic_start(y: &[f64], h: f64) -> (f64, f64) {
    let (y1, y2, y3) = (y[1], y[2], y[3]);
    (3.0 * y1 - 3.0 * y2 + y3, (-5.0 * y1 + 8.0 * y2 - 3.0 * y3) / (2.0 * h))
}

/// Least-squares `a + b t^2` through the values at `h, 2h, 3h`: returns `a`.
fn even_start(y: &[f64], h: f64) -> f64 {
    let ts = [h, 2.0 * h, 3.0 * h];
    let (mut s0, mut s2, mut s4, mut r0, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (t, v) in ts.iter().zip(&y[1..4]) {
        let t2 = t * t;
        s0 += 1.0;
        s2 += t2;
        s4 += t2 * t2;
        r0 += v;
        r2 += v * t2;
    }
    (r0 * s4 - r2 * s2) / (s0 * s4 - s2 * s2)
}

/// Regular and singular homogeneous solutions near `t = 0`, and `t S'(t)` for the
/// singular one.
fn homogeneous_pair(n: usize, lambda: f64, t: f64) -> (f64, f64, f64) {
    let x = lambda * t;
    if n == 2 {
        let (y0, xdy0) = bessel_y0_small(x);
        (bessel_j(BesselOrder::kernel(2), x), y0, xdy0)
    } else {
        let (s, c) = x.sin_cos();
        (s / x, c / t, -lambda * s - c / t)
    }
}

/// Size of the fitted singular component of `h_j` at the first node.
fn singular_amplitude(n: usize, lambda: f64, h: &[f64], grid: TGrid) -> f64 {
    let rows = SIGMA_NODES;
    let a = DMatrix::from_fn(rows, 2, |i, c| {
        let (reg, sing, _) = homogeneous_pair(n, lambda, grid.time(i + 1));
        if c == 0 {
            reg
        } else {
            sing
        }
    });
    let b = DVector::from_fn(rows, |i, _| h[i + 1]);
    let svd = a.svd(true, true);
    let coef = svd.solve(&b, 1e-300).unwrap_or_else(|_| DVector::zeros(2));
    let (_, _, tds) = homogeneous_pair(n, lambda, grid.time(1));
    coef[1].abs() * tds.abs()
}

pub fn backward_solve_mode(p: &ModeProblem) -> Result<ModeSolution> {
    p.validate()?;
    let n = p.dimension;
    let grid = p.t_grid;
    let h = grid.spacing();
    let eigen = dirichlet_eigendata(n, p.m, p.eigs)?;
    let coeffs = eigen.extension_coeffs();
    let g = &p.series;
    let t_max = grid.t_max;
    let nu = BesselOrder::kernel(n);
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let sigma_scale = scale + SCALE_FLOOR * p.data_scale.unwrap_or(scale);

    struct PerMode {
        h: Vec<f64>,
        initial: f64,
        velocity: f64,
        floor: f64,
        sigma: Option<f64>,
    }

    let per: Vec<PerMode> = (0..eigen.len())
        .into_par_iter()
        .map(|j| {
            let lambda = eigen.lambdas[j];
            let c = coeffs[j];
            let l2c = lambda * lambda * c;
            let w = if scale == 0.0 {
                vec![0.0; grid.samples]
            } else {
                integrate_backward(n, lambda, grid, [0.0, 0.0], |t| l2c * interpolate(g, h, t))
            };
            let mut hj: Vec<f64> = w.iter().zip(g).map(|(w, g)| w - c * g).collect();
            hj[grid.samples - 1] = 0.0;
            let initial = even_start(&hj, h);
            let (fit0, velocity) = quadratic_start(&hj, h);
            hj[0] = initial;

            let x_max = lambda * t_max;
            let sep = integrate_backward(
                n,
                lambda,
                grid,
                [normalized_j(nu, x_max), -lambda * x_max * normalized_j(nu.shifted(1), x_max)],
                |_| 0.0,
            );
            let (s0, s1) = quadratic_start(&sep, h);
            let floor = (s1 / s0).abs() * fit0.abs();

            let sigma = (lambda * grid.time(SIGMA_NODES) <= SIGMA_MAX_ARGUMENT && scale > 0.0)
                .then(|| singular_amplitude(n, lambda, &hj, grid) * eigen.norms[j].sqrt() / sigma_scale);
            PerMode { h: hj, initial, velocity, floor, sigma }
        })
        .collect();

    let norms = &eigen.norms;
    let velocity: Vec<f64> = per.iter().map(|x| x.velocity).collect();
    let (_, boundary_velocity) = quadratic_start(g, h);
    let extension_norm2 = boundary_velocity * boundary_velocity / (2 * p.m + n) as f64;
    let velocity_norm = (velocity.iter().zip(norms).map(|(b, nj)| b * b * nj).sum::<f64>() + extension_norm2).sqrt();
    let velocity_floor = per.iter().zip(norms).map(|(x, nj)| x.floor * x.floor * nj).sum::<f64>().sqrt();
    let sigmas: Vec<f64> = per.iter().filter_map(|x| x.sigma).collect();
    let sigma = sigmas.iter().fold(0.0f64, |a, &b| a.max(b));
    let last = eigen.len() - 1;
    let tail = per[last].initial.abs() * norms[last].sqrt();
    let verdict = Verdict::from_pass(p.sigma_threshold.is_none_or(|th| sigma <= th));
    Ok(ModeSolution {
        dimension: n,
        m: p.m,
        t_grid: grid,
        coeffs,
        series: g.clone(),
        initial: per.iter().map(|x| x.initial).collect(),
        h: per.into_iter().map(|x| x.h).collect(),
        eigen,
        velocity,
        boundary_velocity,
        velocity_norm,
        velocity_floor,
        sigma,
        sigma_modes: sigmas.len(),
        sigma_threshold: p.sigma_threshold,
        tail,
        verdict,
    })
}

/// Boundary series of the phantom `profile(r) Y_{m,1}`: by rotation invariance
/// `g(x,t) = g_{m,1}(t) Y_{m,1}(x)`.
pub fn single_mode_series(n: usize, m: usize, profile: RadialProfile, grid: TGrid) -> Result<Vec<f64>> {
    HarmonicIndex::new(n, m, 1)?;
    Ok((0..grid.samples)
        .into_par_iter()
        .map(|i| zonal_factor(n, m, |r| profile.eval(r), (profile.a, profile.b), 1.0, grid.time(i)))
        .collect())
}

/// Singularity indicator of a reference range series at the same grids.
pub fn sigma_baseline(n: usize, m: usize, grid: TGrid, eigs: usize) -> Result<f64> {
    let (a, b) = BASELINE_SUPPORT;
    let profile = RadialProfile::annular_with_peak(a, b, 1.0)?;
    let series = single_mode_series(n, m, profile, grid)?;
    Ok(backward_solve_mode(&ModeProblem::new(n, m, series, grid, eigs)?)?.sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let h = 0.1;
        let v: Vec<f64> = (0..20).map(|i| (i as f64 * h).powi(3) - 2.0 * i as f64 * h).collect();
        for t in [0.0, 0.03, 0.55, 1.87, 1.9] {
            assert!((interpolate(&v, h, t) - (t * t * t - 2.0 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn start_estimators() {
        let h = 0.01;
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 0.5 * i as f64 * h - (i as f64 * h).powi(2)).collect();
        let (a, b) = quadratic_start(&y, h);
        assert!((a - 2.0).abs() < 1e-13 && (b - 0.5).abs() < 1e-10);
        let y: Vec<f64> = (0..5).map(|i| 1.0 + 3.0 * (i as f64 * h).powi(2)).collect();
        assert!((even_start(&y, h) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let grid = TGrid::new(101, 2.0).unwrap();
        let s = backward_solve_mode(&ModeProblem::new(2, 1, vec![0.0; 101], grid, 8).unwrap()).unwrap();
        assert!(s.h.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(s.sigma, 0.0);
        assert_eq!(s.profile(0.5), 0.0);
        assert_eq!(s.velocity_norm, 0.0);
    }

    #[test]
    fn rejects_data_without_support() {
        let grid = TGrid::new(101, 2.0).unwrap();
        let err = ModeProblem::new(2, 0, vec![1.0; 101], grid, 8).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(ModeProblem::new(2, 0, vec![0.0; 11], TGrid::new(11, 2.0).unwrap(), 8).is_err());
    }

    #[test]
    fn singular_fit_separates_components() {
        let grid = TGrid::new(401, 2.0).unwrap();
        for n in [2, 3] {
            let lambda = 3.0;
            let reg: Vec<f64> = (0..401).map(|i| homogeneous_pair(n, lambda, grid.time(i).max(1e-9)).0).collect();
            assert!(singular_amplitude(n, lambda, &reg, grid) < 1e-12);
            let sing: Vec<f64> = (0..401).map(|i| homogeneous_pair(n, lambda, grid.time(i).max(1e-9)).1).collect();
            let (_, _, tds) = homogeneous_pair(n, lambda, grid.time(1));
            assert!((singular_amplitude(n, lambda, &sing, grid) - tds.abs()).abs() < 1e-8 * tds.abs());
        }
    }
}
