//! Quadrature on the unit sphere `S^(n-1)` and real orthonormal spherical
//! harmonics for `n = 2` and `n = 3`.
//!
//! Harmonics are orthonormal with respect to the surface measure `dA`, not the
//! normalized measure. For `n = 2` the branches are `k = 1` (cosine) and `k = 2`
//! (sine). For `n = 3`, `k = 1` is the zonal function, `k = 2l` carries
//! `cos(l phi)` and `k = 2l + 1` carries `sin(l phi)`.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub type Point = [f64; 3];

/// Quadrature grid on the unit sphere. For `n = 2` nodes lie in the plane
/// `z = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub dimension: usize,
    pub resolution: usize,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

/// `(m, k)` with `1 <= k <= d(m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HarmonicIndex {
    pub m: usize,
    pub k: usize,
}

impl HarmonicIndex {
    pub fn new(n: usize, m: usize, k: usize) -> Result<Self> {
        check_dimension(n)?;
        if k == 0 || k > harmonic_count(n, m) {
            return Err(Error::HarmonicIndex { n, m, k });
        }
        Ok(Self { m, k })
    }
}

/// Dimension `d(m)` of the space of degree-`m` harmonics on `S^(n-1)`.
pub fn harmonic_count(n: usize, m: usize) -> usize {
    match (n, m) {
        (2, 0) => 1,
        (2, _) => 2,
        (3, _) => 2 * m + 1,
        _ => 0,
    }
}

/// All indices with degree `<= m_max`, ordered by `m` then `k`.
pub fn indices(n: usize, m_max: usize) -> Vec<HarmonicIndex> {
    (0..=m_max)
        .flat_map(|m| (1..=harmonic_count(n, m)).map(move |k| HarmonicIndex { m, k }))
        .collect()
}

pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if crate::SUPPORTED_DIMENSIONS.contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// Builds the quadrature grid.
///
/// `n = 2`: `resolution` equispaced angles with equal weights.
/// `n = 3`: Gauss–Legendre in the polar cosine (`resolution` nodes) times
/// `2 * resolution` equispaced azimuths.
pub fn sphere_grid(n: usize, resolution: usize) -> Result<SphereGrid> {
    check_dimension(n)?;
    if resolution < 4 {
        return Err(Error::GridTooCoarse(format!(
            "sphere grid resolution must be >= 4, got {resolution}"
        )));
    }
    let (nodes, weights) = if n == 2 {
        let w = 2.0 * PI / resolution as f64;
        let nodes = (0..resolution)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / resolution as f64;
                [phi.cos(), phi.sin(), 0.0]
            })
            .collect();
        (nodes, vec![w; resolution])
    } else {
        let (z, wz) = gauss_legendre(resolution);
        let n_phi = 2 * resolution;
        let w_phi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(resolution * n_phi);
        let mut weights = Vec::with_capacity(resolution * n_phi);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                nodes.push([s * phi.cos(), s * phi.sin(), *zi]);
                weights.push(wi * w_phi);
            }
        }
        (nodes, weights)
    };
    Ok(SphereGrid { dimension: n, resolution, nodes, weights })
}

impl SphereGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest degree whose pairwise products the rule integrates exactly.
    pub fn max_degree(&self) -> usize {
        match self.dimension {
            2 => self.resolution.saturating_sub(3) / 2,
            _ => self.resolution - 1,
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Value of the real orthonormal harmonic `Y_{m,k}` at the unit vector `theta`.
pub fn harmonic_eval(n: usize, idx: HarmonicIndex, theta: &[f64]) -> Result<f64> {
    HarmonicIndex::new(n, idx.m, idx.k)?;
    if theta.len() < n {
        return Err(Error::Invalid(format!("point has {} components, need {n}", theta.len())));
    }
    Ok(eval_unchecked(n, idx, theta))
}

pub(crate) fn eval_unchecked(n: usize, idx: HarmonicIndex, theta: &[f64]) -> f64 {
    if n == 2 {
        let phi = theta[1].atan2(theta[0]);
        circle_harmonic(idx, phi)
    } else {
        let z = theta[2].clamp(-1.0, 1.0);
        let phi = theta[1].atan2(theta[0]);
        let l = idx.k / 2;
        let p = normalized_legendre(idx.m, l, z);
        match idx.k {
            1 => p,
            k if k % 2 == 0 => std::f64::consts::SQRT_2 * p * (l as f64 * phi).cos(),
            _ => std::f64::consts::SQRT_2 * p * (l as f64 * phi).sin(),
        }
    }
}

pub(crate) fn circle_harmonic(idx: HarmonicIndex, phi: f64) -> f64 {
    match (idx.m, idx.k) {
        (0, _) => 1.0 / (2.0 * PI).sqrt(),
        (m, 1) => (m as f64 * phi).cos() / PI.sqrt(),
        (m, _) => (m as f64 * phi).sin() / PI.sqrt(),
    }
}

/// `sqrt((2m+1)/(4 pi) (m-l)!/(m+l)!) P_m^l(z)` without the Condon–Shortley
/// phase, by the standard stable recurrences on normalized values.
fn normalized_legendre(m: usize, l: usize, z: f64) -> f64 {
    let s = (1.0 - z * z).max(0.0).sqrt();
    let mut pll = (0.25 / PI).sqrt();
    for i in 1..=l {
        let fi = i as f64;
        pll *= ((2.0 * fi + 1.0) / (2.0 * fi)).sqrt() * s;
    }
    if m == l {
        return pll;
    }
    let lf = l as f64;
    let mut prev = pll;
    let mut cur = (2.0 * lf + 3.0).sqrt() * z * pll;
    for deg in (l + 2)..=m {
        let d = deg as f64;
        let a = ((4.0 * d * d - 1.0) / (d * d - lf * lf)).sqrt();
        let b = (((d - 1.0) * (d - 1.0) - lf * lf) / (4.0 * (d - 1.0) * (d - 1.0) - 1.0)).sqrt();
        let next = a * (z * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Harmonic values `Y[(m,k)][node]` for every index up to `m_max`.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    pub indices: Vec<HarmonicIndex>,
    pub values: Vec<Vec<f64>>,
}

impl HarmonicTable {
    pub fn new(grid: &SphereGrid, m_max: usize) -> Self {
        let indices = indices(grid.dimension, m_max);
        let values = indices
            .iter()
            .map(|&idx| {
                grid.nodes
                    .iter()
                    .map(|p| eval_unchecked(grid.dimension, idx, p))
                    .collect()
            })
            .collect();
        Self { indices, values }
    }
}

/// Per-`(m,k)` coefficient functions sampled on a common axis (times or radii).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularCoefficients {
    pub dimension: usize,
    pub m_max: usize,
    pub indices: Vec<HarmonicIndex>,
    pub values: Vec<Vec<f64>>,
}

impl AngularCoefficients {
    pub fn zeros(n: usize, m_max: usize, len: usize) -> Self {
        let indices = indices(n, m_max);
        let values = vec![vec![0.0; len]; indices.len()];
        Self { dimension: n, m_max, indices, values }
    }

    pub fn series(&self, idx: HarmonicIndex) -> Option<&[f64]> {
        self.position(idx).map(|p| self.values[p].as_slice())
    }

    pub fn series_mut(&mut self, idx: HarmonicIndex) -> Option<&mut Vec<f64>> {
        self.position(idx).map(move |p| &mut self.values[p])
    }

    pub fn position(&self, idx: HarmonicIndex) -> Option<usize> {
        self.indices.iter().position(|&i| i == idx)
    }

    pub fn sample_len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }
}

/// Projects `samples[node][j]` onto the harmonics of degree `<= m_max`.
pub fn angular_decompose(
    grid: &SphereGrid,
    samples: &[Vec<f64>],
    m_max: usize,
) -> Result<AngularCoefficients> {
    let limit = grid.max_degree();
    if m_max > limit {
        return Err(Error::Aliasing { m_max, limit });
    }
    if samples.len() != grid.len() {
        return Err(Error::Invalid(format!(
            "{} sample rows for a grid of {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    let len = samples.first().map_or(0, Vec::len);
    let table = HarmonicTable::new(grid, m_max);
    let values = table
        .values
        .iter()
        .map(|y| {
            let mut acc = vec![0.0; len];
            for ((row, w), yi) in samples.iter().zip(&grid.weights).zip(y) {
                let c = w * yi;
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += c * v;
                }
            }
            acc
        })
        .collect();
    Ok(AngularCoefficients { dimension: grid.dimension, m_max, indices: table.indices, values })
}

/// Evaluates `sum_{m,k} c_{m,k}(j) Y_{m,k}(theta_i)` on the grid nodes.
pub fn angular_synthesize(coeffs: &AngularCoefficients, grid: &SphereGrid) -> Vec<Vec<f64>> {
    let len = coeffs.sample_len();
    grid.nodes
        .iter()
        .map(|p| {
            let mut row = vec![0.0; len];
            for (idx, series) in coeffs.indices.iter().zip(&coeffs.values) {
                let y = eval_unchecked(grid.dimension, *idx, p);
                for (r, c) in row.iter_mut().zip(series) {
                    *r += y * c;
                }
            }
            row
        })
        .collect()
}
