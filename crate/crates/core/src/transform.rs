//! Phantoms and the forward spherical mean operator.
//!
//! `R f(x, t) = (1 / omega_n) * integral over S^(n-1) of f(x + t theta) dA(theta)`,
//! evaluated on closed-form phantoms either by sphere quadrature or through
//! the Funk–Hecke reduction of each harmonic term. Restricting the centers to
//! the unit sphere gives [`BoundaryData`].

use crate::error::{Error, Result};
use crate::harmonics::{check_dimension, eval_unchecked, HarmonicIndex, Point, SphereGrid};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    /// `A exp(-1 / ((r - a)(b - r)))` on `(a, b)`.
    AnnularBump,
    /// `A exp(-4u^2) exp(1 - 1 / (1 - u^2))` with `u` the position rescaled to `(-1, 1)`.
    TruncatedGaussianBump,
}

/// Smooth radial factor supported in `(a, b)`, including the `r^m` part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub a: f64,
    pub b: f64,
    pub amplitude: f64,
}

impl RadialProfile {
    pub fn new(kind: ProfileKind, a: f64, b: f64, amplitude: f64) -> Result<Self> {
        let p = Self { kind, a, b, amplitude };
        p.validate()?;
        Ok(p)
    }

    /// Annular bump scaled so that its peak value is `peak`.
    pub fn annular_with_peak(a: f64, b: f64, peak: f64) -> Result<Self> {
        let c = 0.5 * (a + b);
        let raw = (-1.0 / ((c - a) * (b - c))).exp();
        Self::new(ProfileKind::AnnularBump, a, b, peak / raw)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a.is_finite()
            && self.b.is_finite()
            && self.amplitude.is_finite()
            && 0.0 <= self.a
            && self.a < self.b
            && self.b <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "profile needs 0 <= a < b <= 1 and finite amplitude, got a={}, b={}, amplitude={}",
                self.a, self.b, self.amplitude
            )))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.a || r >= self.b {
            return 0.0;
        }
        match self.kind {
            ProfileKind::AnnularBump => {
                self.amplitude * (-1.0 / ((r - self.a) * (self.b - r))).exp()
            }
            ProfileKind::TruncatedGaussianBump => {
                let u = (2.0 * r - self.a - self.b) / (self.b - self.a);
                let s = 1.0 - u * u;
                self.amplitude * (-4.0 * u * u).exp() * (1.0 - 1.0 / s).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomTerm {
    pub m: usize,
    pub k: usize,
    pub profile: RadialProfile,
}

impl PhantomTerm {
    pub fn index(&self) -> HarmonicIndex {
        HarmonicIndex { m: self.m, k: self.k }
    }
}

/// `f(r theta) = sum profile_i(r) Y_{m_i,k_i}(theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phantom {
    pub dimension: usize,
    pub terms: Vec<PhantomTerm>,
}

impl Phantom {
    pub fn empty(n: usize) -> Self {
        Self { dimension: n, terms: Vec::new() }
    }

    /// Three annular bumps in modes `(0,1)`, `(1,1)` and `(2,2)` of the plane,
    /// each with unit peak.
    pub fn demo() -> Self {
        let term = |m, k, a, b| PhantomTerm {
            m,
            k,
            profile: RadialProfile::annular_with_peak(a, b, 1.0).expect("valid demo profile"),
        };
        Self {
            dimension: 2,
            terms: vec![term(0, 1, 0.2, 0.9), term(1, 1, 0.25, 0.85), term(2, 2, 0.3, 0.9)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        for t in &self.terms {
            HarmonicIndex::new(self.dimension, t.m, t.k)?;
            t.profile.validate()?;
        }
        Ok(())
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.m).max().unwrap_or(0)
    }

    /// Full radial factor of the `(m,k)` component at radius `r`.
    pub fn mode_profile(&self, idx: HarmonicIndex, r: f64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.index() == idx)
            .map(|t| t.profile.eval(r))
            .sum()
    }

    /// Plane phantom rotated by `alpha`: `f(R_alpha^{-1} x)`.
    pub fn rotated(&self, alpha: f64) -> Result<Self> {
        if self.dimension != 2 {
            return Err(Error::UnsupportedDimension(self.dimension));
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.m == 0 {
                terms.push(*t);
                continue;
            }
            let (s, c) = (t.m as f64 * alpha).sin_cos();
            // cos(m(phi - alpha)) = c cos + s sin, sin(m(phi - alpha)) = c sin - s cos
            let (cos_w, sin_w) = if t.k == 1 { (c, s) } else { (-s, c) };
            for (k, w) in [(1, cos_w), (2, sin_w)] {
                let mut profile = t.profile;
                profile.amplitude *= w;
                terms.push(PhantomTerm { m: t.m, k, profile });
            }
        }
        Ok(Self { dimension: 2, terms })
    }
}

/// Evaluates the phantom at a point of `R^n` (extra components ignored).
pub fn phantom_eval(ph: &Phantom, x: &[f64]) -> f64 {
    let n = ph.dimension;
    let r = x.iter().take(n).map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 || r >= 1.0 {
        return 0.0;
    }
    let mut dir = [0.0; 3];
    for (d, v) in dir.iter_mut().zip(x.iter().take(n)) {
        *d = v / r;
    }
    ph.terms
        .iter()
        .map(|t| {
            let p = t.profile.eval(r);
            if p == 0.0 {
                0.0
            } else {
                p * eval_unchecked(n, t.index(), &dir)
            }
        })
        .sum()
}

/// Mean of `f` over the sphere of center `x` and radius `t`.
pub fn spherical_mean<F>(f: F, x: &Point, t: f64, grid: &SphereGrid) -> f64
where
    F: Fn(&Point) -> f64,
{
    if t == 0.0 {
        return f(x);
    }
    let total: f64 = grid.weights.iter().sum();
    let mut acc = 0.0;
    for (node, w) in grid.nodes.iter().zip(&grid.weights) {
        let y = [x[0] + t * node[0], x[1] + t * node[1], x[2] + t * node[2]];
        acc += w * f(&y);
    }
    acc / total
}

/// Uniform grid `t_j = j * t_max / (samples - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TGrid {
    pub samples: usize,
    pub t_max: f64,
}

impl Default for TGrid {
    fn default() -> Self {
        Self { samples: 401, t_max: 2.0 }
    }
}

impl TGrid {
    pub fn new(samples: usize, t_max: f64) -> Result<Self> {
        if samples < 5 || !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::GridTooCoarse(format!(
                "t-grid needs >= 5 samples and positive t_max, got {samples} on [0, {t_max}]"
            )));
        }
        Ok(Self { samples, t_max })
    }

    pub fn spacing(&self) -> f64 {
        self.t_max / (self.samples - 1) as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.time(j)).collect()
    }

    /// Grid with twice the resolution on the same interval.
    pub fn refined(&self) -> Self {
        Self { samples: 2 * self.samples - 1, t_max: self.t_max }
    }
}

/// Samples `g(theta_i, t_j)` on a sphere of centers times a t-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub dimension: usize,
    pub centers: SphereGrid,
    pub t_grid: TGrid,
    /// `values[i][j] = g(theta_i, t_j)`.
    pub values: Vec<Vec<f64>>,
    pub provenance: BTreeMap<String, String>,
}

impl BoundaryData {
    pub fn zeros(centers: SphereGrid, t_grid: TGrid) -> Self {
        let values = vec![vec![0.0; t_grid.samples]; centers.len()];
        Self {
            dimension: centers.dimension,
            centers,
            t_grid,
            values,
            provenance: BTreeMap::new(),
        }
    }

    /// Tabulates an arbitrary function of `(center, t)`.
    pub fn from_fn<F>(centers: SphereGrid, t_grid: TGrid, f: F) -> Self
    where
        F: Fn(&Point, f64) -> f64 + Sync,
    {
        let times = t_grid.times();
        let values = centers
            .nodes
            .par_iter()
            .map(|c| times.iter().map(|&t| f(c, t)).collect())
            .collect();
        Self {
            dimension: centers.dimension,
            centers,
            t_grid,
            values,
            provenance: BTreeMap::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dimension(self.dimension)?;
        if self.values.is_empty() {
            return Err(Error::EmptyData);
        }
        if self.values.len() != self.centers.len()
            || self.values.iter().any(|row| row.len() != self.t_grid.samples)
        {
            return Err(Error::Invalid("value matrix does not match grids".into()));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite boundary value".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().flatten().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.centers != other.centers || self.t_grid != other.t_grid {
            return Err(Error::Invalid("boundary data on different grids".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(out)
    }
}

/// `g = R_S f` on the given centers and times, averaging with `quad`.
pub fn forward_data(
    ph: &Phantom,
    centers: &SphereGrid,
    t_grid: TGrid,
    quad: &SphereGrid,
) -> Result<BoundaryData> {
    ph.validate()?;
    if centers.dimension != ph.dimension || quad.dimension != ph.dimension {
        return Err(Error::Invalid("phantom and grids disagree on dimension".into()));
    }
    if t_grid.t_max < 2.0 {
        return Err(Error::Invalid(format!("t-grid must cover [0, 2], ends at {}", t_grid.t_max)));
    }
    let f = |y: &Point| phantom_eval(ph, y);
    let mut data = BoundaryData::from_fn(centers.clone(), t_grid, |c, t| spherical_mean(f, c, t, quad));
    data.provenance.insert("source".into(), "forward".into());
    data.provenance.insert("method".into(), "quadrature".into());
    data.provenance.insert("quadrature_resolution".into(), quad.resolution.to_string());
    Ok(data)
}

/// How spherical means of phantoms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanMethod {
    /// Direct sphere quadrature of the assembled function.
    Quadrature,
    /// Funk–Hecke reduction of each harmonic term to a one-dimensional integral.
    #[default]
    Zonal,
}

const ZONAL_PANELS: usize = 32;
const ZONAL_ORDER: usize = 16;

/// Ratio `R[p(|y|) Y(y/|y|)](x, t) / Y(x/|x|)` for any degree-`m` harmonic `Y`,
/// with `rho = |x|` and `p` vanishing outside `support`.
///
/// The mean reduces to `c_n * int_0^pi p(r) Z_m(cos gamma) w_n(psi) dpsi`, where `psi`
/// is the angle between the sphere direction and `x`, `r` and `gamma` are the
/// modulus and polar angle of the point reached, `Z_m = cos(m gamma)` in the plane
/// and the Legendre polynomial in space.
pub fn zonal_factor<P>(n: usize, m: usize, p: P, support: (f64, f64), rho: f64, t: f64) -> f64
where
    P: Fn(f64) -> f64,
{
    if t == 0.0 {
        return p(rho);
    }
    if rho == 0.0 {
        return if m == 0 { p(t) } else { 0.0 };
    }
    let (a, b) = support;
    let two = 2.0 * rho * t;
    let cos_of = |r: f64| ((r * r - rho * rho - t * t) / two).clamp(-1.0, 1.0);
    let lo = cos_of(b).acos();
    let hi = cos_of(a).acos();
    if hi <= lo {
        return 0.0;
    }
    let (nodes, weights) = crate::quad::composite_gauss_legendre(lo, hi, ZONAL_PANELS, ZONAL_ORDER);
    let mut acc = 0.0;
    for (psi, w) in nodes.iter().zip(&weights) {
        let (s, c) = psi.sin_cos();
        let r = (rho * rho + t * t + two * c).max(0.0).sqrt();
        let v = p(r);
        if v == 0.0 || r == 0.0 {
            continue;
        }
        let cg = ((rho + t * c) / r).clamp(-1.0, 1.0);
        let (z, wn) = if n == 2 {
            ((m as f64 * cg.acos()).cos(), 1.0 / std::f64::consts::PI)
        } else {
            (legendre(m, cg), 0.5 * s)
        };
        acc += w * wn * v * z;
    }
    acc
}

fn legendre(m: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return p0;
    }
    for k in 1..m {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Same contract as [`forward_data`], evaluated through [`zonal_factor`].
pub fn forward_data_zonal(ph: &Phantom, centers: &SphereGrid, t_grid: TGrid) -> Result<BoundaryData> {
    ph.validate()?;
    if centers.dimension != ph.dimension {
        return Err(Error::Invalid("phantom and grids disagree on dimension".into()));
    }
    if t_grid.t_max < 2.0 {
        return Err(Error::Invalid(format!("t-grid must cover [0, 2], ends at {}", t_grid.t_max)));
    }
    let n = ph.dimension;
    let times = t_grid.times();
    let factors: Vec<Vec<f64>> = ph
        .terms
        .par_iter()
        .map(|term| {
            let pr = term.profile;
            times
                .iter()
                .map(|&t| zonal_factor(n, term.m, |r| pr.eval(r), (pr.a, pr.b), 1.0, t))
                .collect()
        })
        .collect();
    let angular: Vec<Vec<f64>> = centers
        .nodes
        .iter()
        .map(|c| ph.terms.iter().map(|term| eval_unchecked(n, term.index(), c)).collect())
        .collect();
    let mut data = BoundaryData::zeros(centers.clone(), t_grid);
    for (row, ys) in data.values.iter_mut().zip(&angular) {
        for (j, v) in row.iter_mut().enumerate() {
            *v = ys.iter().zip(&factors).map(|(y, f)| y * f[j]).sum();
        }
    }
    data.provenance.insert("source".into(), "forward".into());
    data.provenance.insert("method".into(), "zonal".into());
    Ok(data)
}

/// Dispatches on `method`; `quad` is only used by [`MeanMethod::Quadrature`].
pub fn simulate(
    ph: &Phantom,
    centers: &SphereGrid,
    t_grid: TGrid,
    method: MeanMethod,
    quad: &SphereGrid,
) -> Result<BoundaryData> {
    match method {
        MeanMethod::Quadrature => forward_data(ph, centers, t_grid, quad),
        MeanMethod::Zonal => forward_data_zonal(ph, centers, t_grid),
    }
}

/// Angle-independent bump `exp(-1 / ((t - 0.5)(1.5 - t)))` on `(0.5, 1.5)`.
/// Its transforms at Bessel zeros do not vanish, so it lies outside the range.
pub fn control_bump(t: f64) -> f64 {
    if t <= 0.5 || t >= 1.5 {
        0.0
    } else {
        (-1.0 / ((t - 0.5) * (1.5 - t))).exp()
    }
}

/// [`control_bump`] sampled at every center.
pub fn control_data(centers: &SphereGrid, t_grid: TGrid) -> BoundaryData {
    let mut data = BoundaryData::from_fn(centers.clone(), t_grid, |_, t| control_bump(t));
    data.provenance.insert("source".into(), "control-bump".into());
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::sphere_grid;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn profile_support_and_peak() {
        let p = RadialProfile::annular_with_peak(0.2, 0.8, 1.0).unwrap();
        assert_eq!(p.eval(0.2), 0.0);
        assert_eq!(p.eval(0.9), 0.0);
        assert_abs_diff_eq!(p.eval(0.5), 1.0, epsilon = 1e-14);
        let g = RadialProfile::new(ProfileKind::TruncatedGaussianBump, 0.1, 0.5, 2.0).unwrap();
        assert_abs_diff_eq!(g.eval(0.3), 2.0, epsilon = 1e-14);
        assert_eq!(g.eval(0.5), 0.0);
        assert!(RadialProfile::new(ProfileKind::AnnularBump, 0.5, 0.4, 1.0).is_err());
        assert!(RadialProfile::new(ProfileKind::AnnularBump, 0.5, 1.2, 1.0).is_err());
    }

    #[test]
    fn phantom_values() {
        assert_eq!(phantom_eval(&Phantom::empty(2), &[0.3, 0.1]), 0.0);
        let p = RadialProfile::annular_with_peak(0.2, 0.8, 1.0).unwrap();
        let radial = Phantom { dimension: 2, terms: vec![PhantomTerm { m: 0, k: 1, profile: p }] };
        assert_eq!(phantom_eval(&radial, &[0.9, 0.0]), 0.0);
        assert_eq!(phantom_eval(&radial, &[0.0, 0.0]), 0.0);
        let dipole = Phantom { dimension: 2, terms: vec![PhantomTerm { m: 1, k: 1, profile: p }] };
        assert_abs_diff_eq!(phantom_eval(&dipole, &[0.5, 0.0]), p.eval(0.5) / PI.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn mean_at_zero_radius_is_point_value() {
        let g = sphere_grid(2, 32).unwrap();
        let f = |y: &Point| y[0] * y[0] + 3.0 * y[1];
        assert_eq!(spherical_mean(f, &[0.2, 0.4, 0.0], 0.0, &g), f(&[0.2, 0.4, 0.0]));
    }

    #[test]
    fn mean_of_plane_wave() {
        let g = sphere_grid(2, 256).unwrap();
        let lam = 7.0;
        let f = |y: &Point| (lam * y[0]).cos();
        let got = spherical_mean(f, &[0.3, -0.2, 0.0], 0.8, &g);
        let expect = crate::specfun::bessel_j(crate::BesselOrder::kernel(2), lam * 0.8) * (lam * 0.3).cos();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-12);
    }

    #[test]
    fn forward_support_and_symmetry() {
        let centers = sphere_grid(2, 16).unwrap();
        let quad = sphere_grid(2, 128).unwrap();
        let tg = TGrid::new(81, 2.5).unwrap();
        let p = RadialProfile::annular_with_peak(0.2, 0.8, 1.0).unwrap();
        let ph = Phantom { dimension: 2, terms: vec![PhantomTerm { m: 0, k: 1, profile: p }] };
        let data = forward_data(&ph, &centers, tg, &quad).unwrap();
        for row in &data.values {
            for (j, v) in row.iter().enumerate() {
                let t = tg.time(j);
                if t > 2.0 || t < 0.2 {
                    assert_eq!(*v, 0.0);
                }
                assert!((v - data.values[0][j]).abs() < 1e-12);
            }
        }
        let empty = forward_data(&Phantom::empty(2), &centers, tg, &quad).unwrap();
        assert_eq!(empty.max_abs(), 0.0);
        assert!(forward_data(&ph, &centers, TGrid::new(41, 1.5).unwrap(), &quad).is_err());
    }

    #[test]
    fn rotation_shifts_data() {
        let n_c = 16;
        let centers = sphere_grid(2, n_c).unwrap();
        let quad = sphere_grid(2, 128).unwrap();
        let tg = TGrid::new(21, 2.0).unwrap();
        let ph = Phantom::demo();
        let step = 2.0 * PI / n_c as f64;
        let rotated = ph.rotated(3.0 * step).unwrap();
        let a = forward_data(&ph, &centers, tg, &quad).unwrap();
        let b = forward_data(&rotated, &centers, tg, &quad).unwrap();
        for i in 0..n_c {
            for j in 0..tg.samples {
                assert!((b.values[(i + 3) % n_c][j] - a.values[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zonal_cap_fractions() {
        for t in [0.1, 0.7, 1.3, 1.9] {
            let f3 = zonal_factor(3, 0, |_| 1.0, (0.0, 1.0), 1.0, t);
            assert_abs_diff_eq!(f3, 0.5 * (1.0 - 0.5 * t), epsilon = 1e-13);
            let f2 = zonal_factor(2, 0, |_| 1.0, (0.0, 1.0), 1.0, t);
            assert_abs_diff_eq!(f2, 1.0 - (-0.5 * t).acos() / PI, epsilon = 1e-13);
        }
    }

    #[test]
    fn zonal_matches_quadrature_in_the_plane() {
        let ph = Phantom::demo();
        let centers = sphere_grid(2, 64).unwrap();
        let tg = TGrid::new(81, 2.0).unwrap();
        let a = forward_data(&ph, &centers, tg, &sphere_grid(2, 512).unwrap()).unwrap();
        let b = forward_data_zonal(&ph, &centers, tg).unwrap();
        for (ra, rb) in a.values.iter().zip(&b.values) {
            for (x, y) in ra.iter().zip(rb) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zonal_matches_quadrature_in_space() {
        let term = |m, k, a, b| PhantomTerm {
            m,
            k,
            profile: RadialProfile::annular_with_peak(a, b, 1.0).unwrap(),
        };
        let ph = Phantom {
            dimension: 3,
            terms: vec![term(0, 1, 0.2, 0.9), term(1, 2, 0.25, 0.85), term(2, 3, 0.3, 0.9)],
        };
        let quad = sphere_grid(3, 128).unwrap();
        let f = |y: &Point| phantom_eval(&ph, y);
        let x = [0.6, -0.48, 0.64];
        let ys: Vec<f64> = ph.terms.iter().map(|tm| eval_unchecked(3, tm.index(), &x)).collect();
        for t in [0.3, 0.9, 1.4] {
            let direct = spherical_mean(f, &x, t, &quad);
            let zonal: f64 = ph
                .terms
                .iter()
                .zip(&ys)
                .map(|(tm, y)| {
                    let p = tm.profile;
                    y * zonal_factor(3, tm.m, |r| p.eval(r), (p.a, p.b), 1.0, t)
                })
                .sum();
            assert_abs_diff_eq!(direct, zonal, epsilon = 1e-9);
        }
    }
}
