//! Range conditions for boundary data.
//!
//! For each angular mode `g_{m,k}(t)` the Fourier–Bessel transform
//! `int g_{m,k}(t) j_{(n-2)/2}(lambda t) t^(n-1) dt` must vanish at every zero
//! `lambda` of `J_{m + (n-2)/2}`.

use crate::error::{Error, Result};
use crate::harmonics::{angular_decompose, eval_unchecked, HarmonicIndex, HarmonicTable, Point};
use crate::quad::{uniform_weights, UniformRule};
use crate::specfun::{bessel_zeros, normalized_j, BesselOrder};
use crate::transform::{BoundaryData, TGrid};
use crate::Verdict;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_ZEROS: usize = 10;
/// Relative size of the residual denominator floor, against the total data norm.
pub const NORM_FLOOR: f64 = 1e-6;
pub const MAX_CONDITION: f64 = 1e12;

/// Quadrature weights for `h(t) t^(n-1) dt` on the grid.
fn weighted_rule(grid: TGrid, n: usize) -> (Vec<f64>, UniformRule) {
    let (mut w, rule) = uniform_weights(grid.samples, grid.spacing());
    for (j, wj) in w.iter_mut().enumerate() {
        *wj *= grid.time(j).powi(n as i32 - 1);
    }
    (w, rule)
}

/// `int_0^T series(t) j_{(n-2)/2}(lambda t) t^(n-1) dt`.
pub fn fourier_bessel(series: &[f64], grid: TGrid, n: usize, lambda: f64) -> (f64, UniformRule) {
    let (w, rule) = weighted_rule(grid, n);
    (fb_with_weights(series, &w, grid, n, lambda), rule)
}

fn fb_with_weights(series: &[f64], w: &[f64], grid: TGrid, n: usize, lambda: f64) -> f64 {
    let nu = BesselOrder::kernel(n);
    series
        .iter()
        .zip(w)
        .enumerate()
        .filter(|(_, (s, _))| **s != 0.0)
        .map(|(j, (s, wj))| s * wj * normalized_j(nu, lambda * grid.time(j)))
        .sum()
}

/// `L^2(t^(n-1) dt)` norm of a sampled series.
pub fn mode_norm(series: &[f64], grid: TGrid, n: usize) -> f64 {
    let (w, _) = weighted_rule(grid, n);
    series.iter().zip(&w).map(|(s, w)| w * s * s).sum::<f64>().max(0.0).sqrt()
}

/// Largest frequency resolved by the grid: four samples per period.
pub fn resolvable_frequency(grid: TGrid) -> f64 {
    std::f64::consts::FRAC_PI_2 / grid.spacing()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeParams {
    pub dimension: usize,
    pub m_max: usize,
    pub q_max: usize,
    pub tolerance: f64,
    pub t_samples: usize,
    pub t_max: f64,
    pub angular_resolution: usize,
    pub rule: UniformRule,
    pub norm_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub m: usize,
    pub k: usize,
    pub q: usize,
    pub lambda: f64,
    pub value: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Untested {
    pub m: usize,
    pub q: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeNorm {
    pub m: usize,
    pub k: usize,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub params: RangeParams,
    pub norms: Vec<ModeNorm>,
    pub residuals: Vec<Residual>,
    pub untested: Vec<Untested>,
    pub max_rho: f64,
    pub verdict: Verdict,
}

impl RangeReport {
    pub fn residual(&self, m: usize, k: usize, q: usize) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.m == m && r.k == k && r.q == q)
    }
}

/// First `q_max` Dirichlet zeros for degree `m`, split into resolved and unresolved.
fn split_zeros(n: usize, m: usize, q_max: usize, grid: TGrid) -> Result<(Vec<f64>, Vec<Untested>)> {
    let zeros = bessel_zeros(BesselOrder::dirichlet(n, m), q_max)?;
    let limit = resolvable_frequency(grid);
    let mut tested = Vec::new();
    let mut untested = Vec::new();
    for (q, &lambda) in zeros.zeros.iter().enumerate() {
        if lambda <= limit {
            tested.push(lambda);
        } else {
            untested.push(Untested { m, q: q + 1, lambda });
        }
    }
    Ok((tested, untested))
}

pub fn orthogonality_residuals(
    g: &BoundaryData,
    m_max: usize,
    q_max: usize,
    tolerance: f64,
) -> Result<RangeReport> {
    g.validate()?;
    if q_max == 0 {
        return Err(Error::Invalid("at least one zero must be tested".into()));
    }
    let n = g.dimension;
    let grid = g.t_grid;
    let coeffs = angular_decompose(&g.centers, &g.values, m_max)?;
    let (w, rule) = weighted_rule(grid, n);
    let norms: Vec<ModeNorm> = coeffs
        .indices
        .iter()
        .zip(&coeffs.values)
        .map(|(idx, s)| ModeNorm {
            m: idx.m,
            k: idx.k,
            norm: s.iter().zip(&w).map(|(s, w)| w * s * s).sum::<f64>().max(0.0).sqrt(),
        })
        .collect();
    let total = norms.iter().map(|x| x.norm * x.norm).sum::<f64>().sqrt();
    let floor = (NORM_FLOOR * total).max(f64::MIN_POSITIVE);

    let zeros: Vec<(Vec<f64>, Vec<Untested>)> = (0..=m_max)
        .into_par_iter()
        .map(|m| split_zeros(n, m, q_max, grid))
        .collect::<Result<_>>()?;

    let residuals: Vec<Residual> = coeffs
        .indices
        .par_iter()
        .zip(&coeffs.values)
        .zip(&norms)
        .flat_map_iter(|((idx, s), norm)| {
            let lambdas = &zeros[idx.m].0;
            let w = &w;
            lambdas.iter().enumerate().map(move |(q, &lambda)| {
                let value = fb_with_weights(s, w, grid, n, lambda);
                Residual {
                    m: idx.m,
                    k: idx.k,
                    q: q + 1,
                    lambda,
                    value,
                    rho: value.abs() / (norm.norm + floor),
                }
            })
        })
        .collect();
    let untested = zeros.into_iter().flat_map(|z| z.1).collect();
    let max_rho = residuals.iter().fold(0.0, |a: f64, r| a.max(r.rho));
    Ok(RangeReport {
        params: RangeParams {
            dimension: n,
            m_max,
            q_max,
            tolerance,
            t_samples: grid.samples,
            t_max: grid.t_max,
            angular_resolution: g.centers.resolution,
            rule,
            norm_floor: floor,
        },
        norms,
        residuals,
        untested,
        max_rho,
        verdict: Verdict::from_pass(max_rho < tolerance),
    })
}

/// Surface-integral form of the orthogonality condition for the Dirichlet
/// eigenfunction `|x|^m j_mu(lambda |x|) Y_{m,k}(x/|x|)`, integrated over all
/// of `Gamma` without angular decomposition. The normal derivative is a
/// centered difference along the radius.
pub fn surface_orthogonality(g: &BoundaryData, idx: HarmonicIndex, lambda: f64) -> Result<f64> {
    g.validate()?;
    let n = g.dimension;
    HarmonicIndex::new(n, idx.m, idx.k)?;
    let mu = BesselOrder::dirichlet(n, idx.m);
    let phi = |x: &Point| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir = [x[0] / r, x[1] / r, x[2] / r];
        r.powi(idx.m as i32) * normalized_j(mu, lambda * r) * eval_unchecked(n, idx, &dir)
    };
    let h = 1e-3;
    let normal: Vec<f64> = g
        .centers
        .nodes
        .iter()
        .map(|p| {
            let at = |s: f64| phi(&[p[0] * s, p[1] * s, p[2] * s]);
            (8.0 * (at(1.0 + h) - at(1.0 - h)) - (at(1.0 + 2.0 * h) - at(1.0 - 2.0 * h))) / (12.0 * h)
        })
        .collect();
    let (w, _) = weighted_rule(g.t_grid, n);
    let kernel: Vec<f64> = (0..g.t_grid.samples)
        .map(|j| normalized_j(BesselOrder::kernel(n), lambda * g.t_grid.time(j)) * w[j])
        .collect();
    Ok(g.values
        .iter()
        .zip(&g.centers.weights)
        .zip(&normal)
        .map(|((row, wc), dn)| wc * dn * row.iter().zip(&kernel).map(|(a, b)| a * b).sum::<f64>())
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    /// `L^2` norm of `M_k` over the circle.
    pub norm: f64,
    /// `sqrt(c_{m,1}^2 + c_{m,2}^2)` for `m = 0..=m_max`.
    pub magnitudes: Vec<f64>,
    /// Largest magnitude over `m > 2k`.
    pub excess: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub formulation: String,
    pub tolerance: f64,
    pub m_max: usize,
    pub rows: Vec<MomentRow>,
    pub verdict: Verdict,
}

/// Checks that `M_k(phi) = int g(phi, t) t^(2k+1) dt` is a trigonometric
/// polynomial of degree `<= 2k` (plane data only).
pub fn moment_test(g: &BoundaryData, k_max: usize, tolerance: f64) -> Result<MomentReport> {
    if g.dimension != 2 {
        return Err(Error::UnsupportedDimension(g.dimension));
    }
    g.validate()?;
    let grid = g.t_grid;
    let (w, _) = uniform_weights(grid.samples, grid.spacing());
    let m_max = g.centers.max_degree();
    let table = HarmonicTable::new(&g.centers, m_max);
    let rows: Vec<MomentRow> = (0..=k_max)
        .map(|k| {
            let moments: Vec<f64> = g
                .values
                .iter()
                .map(|row| {
                    row.iter()
                        .zip(&w)
                        .enumerate()
                        .map(|(j, (v, w))| v * w * grid.time(j).powi(2 * k as i32 + 1))
                        .sum()
                })
                .collect();
            let mut magnitudes = vec![0.0; m_max + 1];
            for (idx, y) in table.indices.iter().zip(&table.values) {
                let c = g.centers.integrate(&y.iter().zip(&moments).map(|(a, b)| a * b).collect::<Vec<_>>());
                magnitudes[idx.m] += c * c;
            }
            let norm = magnitudes.iter().sum::<f64>().sqrt();
            magnitudes.iter_mut().for_each(|v| *v = v.sqrt());
            let excess = magnitudes.iter().skip(2 * k + 1).fold(0.0, |a: f64, &b| a.max(b));
            MomentRow { k, norm, magnitudes, excess, verdict: Verdict::from_pass(excess <= tolerance * norm) }
        })
        .collect();
    let verdict = Verdict::from_pass(rows.iter().all(|r| r.verdict.passed()));
    Ok(MomentReport {
        formulation: "external: M_k restricted to the circle is a trigonometric polynomial of degree <= 2k"
            .into(),
        tolerance,
        m_max,
        rows,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub data: BoundaryData,
    pub max_condition: f64,
    /// Largest absolute change of any sample.
    pub correction: f64,
}

/// Removes from each mode the least-squares combination of
/// `j_{(n-2)/2}(lambda_q t)` that cancels its transforms at the resolved zeros.
pub fn range_project(g: &BoundaryData, m_max: usize, q_max: usize) -> Result<Projection> {
    g.validate()?;
    let n = g.dimension;
    let grid = g.t_grid;
    let coeffs = angular_decompose(&g.centers, &g.values, m_max)?;
    let (w, _) = weighted_rule(grid, n);
    let nu = BesselOrder::kernel(n);
    let zeros: Vec<Vec<f64>> = (0..=m_max)
        .map(|m| split_zeros(n, m, q_max, grid).map(|z| z.0))
        .collect::<Result<_>>()?;

    let deltas: Vec<(Vec<f64>, f64)> = coeffs
        .indices
        .par_iter()
        .zip(&coeffs.values)
        .map(|(idx, s)| {
            let lambdas = &zeros[idx.m];
            let q = lambdas.len();
            if q == 0 {
                return Ok((vec![0.0; grid.samples], 1.0));
            }
            let basis: Vec<Vec<f64>> = lambdas
                .iter()
                .map(|&l| (0..grid.samples).map(|j| normalized_j(nu, l * grid.time(j))).collect())
                .collect();
            let gram = DMatrix::from_fn(q, q, |a, b| {
                basis[a].iter().zip(&basis[b]).zip(&w).map(|((x, y), w)| w * x * y).sum::<f64>()
            });
            let rhs = DVector::from_fn(q, |a, _| basis[a].iter().zip(s).zip(&w).map(|((x, y), w)| w * x * y).sum::<f64>());
            let eig = gram.clone().symmetric_eigen();
            let (lo, hi) = eig
                .eigenvalues
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
            let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            if cond > MAX_CONDITION {
                return Err(Error::IllConditioned { cond });
            }
            let alpha = gram
                .cholesky()
                .ok_or(Error::IllConditioned { cond })?
                .solve(&rhs);
            let delta = (0..grid.samples)
                .map(|j| -basis.iter().zip(alpha.iter()).map(|(b, a)| a * b[j]).sum::<f64>())
                .collect();
            Ok((delta, cond))
        })
        .collect::<Result<_>>()?;

    let max_condition = deltas.iter().fold(0.0, |a: f64, d| a.max(d.1));
    let mut data = g.clone();
    let mut correction = 0.0f64;
    for (row, node) in data.values.iter_mut().zip(&g.centers.nodes) {
        for (idx, (delta, _)) in coeffs.indices.iter().zip(&deltas) {
            let y = eval_unchecked(n, *idx, node);
            for (v, d) in row.iter_mut().zip(delta) {
                *v += y * d;
            }
        }
    }
    for (a, b) in data.values.iter().flatten().zip(g.values.iter().flatten()) {
        correction = correction.max((a - b).abs());
    }
    data.provenance.insert("range_projection".into(), format!("m_max={m_max}, q_max={q_max}"));
    Ok(Projection { data, max_condition, correction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::sphere_grid;
    use approx::assert_abs_diff_eq;

    fn bump(t: f64) -> f64 {
        if t <= 0.5 || t >= 1.5 {
            0.0
        } else {
            (-1.0 / ((t - 0.5) * (1.5 - t))).exp()
        }
    }

    #[test]
    fn transform_of_zero_and_at_origin() {
        let grid = TGrid::default();
        assert_eq!(fourier_bessel(&vec![0.0; 401], grid, 2, 3.0).0, 0.0);
        let s: Vec<f64> = grid.times().iter().map(|&t| bump(t)).collect();
        let (v, rule) = fourier_bessel(&s, grid, 3, 0.0);
        assert_eq!(rule, UniformRule::Simpson);
        let direct: f64 = {
            let (w, _) = uniform_weights(401, grid.spacing());
            s.iter().zip(&w).enumerate().map(|(j, (s, w))| s * w * grid.time(j).powi(2)).sum()
        };
        assert_abs_diff_eq!(v, normalized_j(BesselOrder::kernel(3), 0.0) * direct, epsilon = 1e-15);
        let (_, rule) = fourier_bessel(&vec![0.0; 400], TGrid::new(400, 2.0).unwrap(), 2, 1.0);
        assert_eq!(rule, UniformRule::Trapezoid);
    }

    #[test]
    fn zero_data_passes_with_zero_residuals() {
        let g = BoundaryData::zeros(sphere_grid(2, 32).unwrap(), TGrid::new(101, 2.0).unwrap());
        let rep = orthogonality_residuals(&g, 4, 5, 1e-5).unwrap();
        assert!(rep.residuals.iter().all(|r| r.rho == 0.0));
        assert_eq!(rep.verdict, Verdict::Pass);
    }

    #[test]
    fn coarse_grid_marks_high_zeros_untested() {
        let g = BoundaryData::zeros(sphere_grid(2, 32).unwrap(), TGrid::new(21, 2.0).unwrap());
        let rep = orthogonality_residuals(&g, 1, 10, 1e-5).unwrap();
        // pi/2 / 0.1 ~ 15.7 resolves 5 zeros of J_0 and 4 of J_1
        assert_eq!(rep.untested.len(), 5 + 6);
        assert!(rep.untested.iter().all(|u| u.lambda > resolvable_frequency(g.t_grid)));
    }

    #[test]
    fn bump_violates_orthogonality_and_projection_repairs_it() {
        let centers = sphere_grid(2, 32).unwrap();
        let g = BoundaryData::from_fn(centers, TGrid::default(), |_, t| bump(t));
        let rep = orthogonality_residuals(&g, 2, 5, 1e-5).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        let p = range_project(&g, 2, 5).unwrap();
        let after = orthogonality_residuals(&p.data, 2, 5, 1e-5).unwrap();
        assert!(after.max_rho <= 1e-10, "{}", after.max_rho);
        let twice = range_project(&p.data, 2, 5).unwrap();
        assert!(twice.correction <= 1e-10);
    }

    #[test]
    fn moment_test_rejects_space_data() {
        let g = BoundaryData::zeros(sphere_grid(3, 8).unwrap(), TGrid::new(11, 2.0).unwrap());
        assert_eq!(moment_test(&g, 1, 1e-5).unwrap_err(), Error::UnsupportedDimension(3));
        let g = BoundaryData::zeros(sphere_grid(2, 16).unwrap(), TGrid::new(11, 2.0).unwrap());
        let rep = moment_test(&g, 2, 1e-5).unwrap();
        assert!(rep.rows.iter().all(|r| r.norm == 0.0 && r.excess == 0.0));
    }
}
