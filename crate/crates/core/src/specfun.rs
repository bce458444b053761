//! Bessel functions of the first kind of real order, normalized Bessel
//! functions, their positive zeros, and the Gamma function.
//!
//! `J_nu(x)` is evaluated by its ascending power series for `x <= 8` and by
//! Miller's backward recurrence, normalized with the Neumann series
//! `(x/2)^nu = sum_k (nu + 2k) Gamma(nu + k) / k! * J_{nu+2k}(x)`, beyond that.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Switch-over point between the power series and Miller's algorithm.
const SERIES_LIMIT: f64 = 8.0;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Order `nu >= 0` of a Bessel function.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(Self(nu))
        } else {
            Err(Error::Domain(format!("Bessel order must be finite and >= 0, got {nu}")))
        }
    }

    /// The order `twice / 2`, e.g. `half_integer(1)` is `1/2`.
    pub fn half_integer(twice: u32) -> Self {
        Self(twice as f64 / 2.0)
    }

    /// Order `m + (n - 2)/2` of the radial Dirichlet eigenfunctions for
    /// harmonic degree `m` in `R^n`.
    pub fn dirichlet(n: usize, m: usize) -> Self {
        Self::half_integer((2 * m + n - 2) as u32)
    }

    /// Order `(n - 2)/2` of the time kernel of the Fourier–Bessel transform.
    pub fn kernel(n: usize) -> Self {
        Self::half_integer((n - 2) as u32)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn shifted(self, delta: u32) -> Self {
        Self(self.0 + delta as f64)
    }
}

impl TryFrom<f64> for BesselOrder {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BesselOrder> for f64 {
    fn from(o: BesselOrder) -> f64 {
        o.0
    }
}

/// The first positive zeros of `J_nu`, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTable {
    pub nu: BesselOrder,
    pub zeros: Vec<f64>,
}

impl ZeroTable {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn get(&self, q: usize) -> Option<f64> {
        self.zeros.get(q).copied()
    }
}

/// Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("gamma_fn requires x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::gamma(x))
}

/// `J_nu(x)` for `x >= 0`. Returns NaN for negative `x`.
pub fn bessel_j(nu: BesselOrder, x: f64) -> f64 {
    bessel_j_pair(nu, x).0
}

/// `(J_nu(x), J_{nu+1}(x))`, computed together.
pub fn bessel_j_pair(nu: BesselOrder, x: f64) -> (f64, f64) {
    let nu = nu.value();
    if x.is_nan() || x < 0.0 {
        return (f64::NAN, f64::NAN);
    }
    if x == 0.0 {
        return (if nu == 0.0 { 1.0 } else { 0.0 }, 0.0);
    }
    if x <= SERIES_LIMIT {
        let lead = (0.5 * x).powf(nu);
        (
            lead * normalized_series(nu, x),
            lead * 0.5 * x * normalized_series(nu + 1.0, x),
        )
    } else {
        miller(nu, x)
    }
}

/// `d/dx J_nu(x)`, via `(nu/x) J_nu - J_{nu+1}`.
pub fn bessel_j_derivative(nu: BesselOrder, x: f64) -> f64 {
    if x == 0.0 {
        return match nu.value() {
            1.0 => 0.5,
            v if v == 0.0 || v > 1.0 => 0.0,
            _ => f64::INFINITY,
        };
    }
    let (j, j1) = bessel_j_pair(nu, x);
    nu.value() / x * j - j1
}

/// Normalized Bessel function `x^(-nu) J_nu(x)`; an even entire function of `x`
/// equal to `1 / (2^nu Gamma(nu + 1))` at the origin.
pub fn normalized_j(nu: BesselOrder, x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        0.5f64.powf(nu.value()) * normalized_series(nu.value(), x)
    } else {
        bessel_j(nu, x) / x.powf(nu.value())
    }
}

/// `sum_k (-1)^k (x/2)^(2k) / (k! Gamma(nu + k + 1))`, i.e. `(x/2)^(-nu) J_nu(x)`.
fn normalized_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0 / statrs::function::gamma::gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (nu + kf));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && kf > q.sqrt() {
            break;
        }
    }
    sum
}

fn miller(nu: f64, x: f64) -> (f64, f64) {
    let start = (x + 20.0 + (40.0 * x).sqrt()).ceil() as usize + 2;
    // f[k] ~ J_{nu+k}(x) up to a common factor.
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-30;
    for k in (1..=start).rev() {
        let next = 2.0 * (nu + k as f64) / x * f[k] - f[k + 1];
        f[k - 1] = next;
        if next.abs() > 1e250 {
            f[k - 1..].iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    // Neumann normalization with coefficients divided by Gamma(nu + 1):
    // c_0 = 1, c_{2j} = (nu + 2j) * prod_{i=1}^{j-1} (nu + i) / j!.
    let mut sum = f[0];
    let mut p = 1.0;
    let mut j = 1;
    while 2 * j <= start {
        if j > 1 {
            p *= (nu + (j - 1) as f64) / j as f64;
        }
        sum += (nu + 2.0 * j as f64) * p * f[2 * j];
        j += 1;
    }
    let scale = ((0.5 * x).ln() * nu - statrs::function::gamma::ln_gamma(nu + 1.0)).exp() / sum;
    (f[0] * scale, f[1] * scale)
}

/// The first `count` positive zeros of `J_nu`.
///
/// Brackets come from interlacing: the zeros of `J_{nu0}`, `nu0 = frac(nu)`,
/// sit between consecutive multiples of pi (exactly at them for `nu0 = 1/2`),
/// and each zero of `J_{mu+1}` lies between consecutive zeros of `J_mu`.
/// Each bracket is refined by safeguarded Newton iteration.
pub fn bessel_zeros(nu: BesselOrder, count: usize) -> Result<ZeroTable> {
    if count == 0 {
        return Err(Error::Domain("bessel_zeros requires count >= 1".into()));
    }
    let steps = nu.value().floor() as usize;
    let base = nu.value() - steps as f64;
    let base_order = BesselOrder(base);
    let base_count = count + steps;

    let mut zeros: Vec<f64> = if base == 0.5 {
        (1..=base_count).map(|k| k as f64 * PI).collect()
    } else {
        (1..=base_count)
            .map(|k| {
                let kf = k as f64;
                let (lo, hi) = if base < 0.5 {
                    (if k == 1 { 2.0 } else { (kf - 1.0) * PI }, kf * PI)
                } else {
                    (kf * PI, (kf + 1.0) * PI)
                };
                refine_zero(base_order, lo, hi)
            })
            .collect()
    };

    for level in 1..=steps {
        let order = BesselOrder(base + level as f64);
        zeros = zeros
            .windows(2)
            .map(|w| refine_zero(order, w[0], w[1]))
            .collect();
    }
    zeros.truncate(count);
    Ok(ZeroTable { nu, zeros })
}

fn refine_zero(nu: BesselOrder, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = bessel_j(nu, lo);
    let f_hi = bessel_j(nu, hi);
    debug_assert!(f_lo * f_hi <= 0.0, "no sign change in [{lo}, {hi}] for nu = {}", nu.0);
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (j, j1) = bessel_j_pair(nu, x);
        if j == 0.0 {
            return x;
        }
        if (j < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = j;
        } else {
            hi = x;
        }
        let slope = nu.value() / x * j - j1;
        let newton = x - j / slope;
        let next = if slope != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
    }
    x
}

/// `(Y_0(x), x Y_0'(x))` from the ascending series; intended for `x <= 12`.
///
/// Only used to separate the singular part of a Darboux mode near `t = 0`.
pub(crate) fn bessel_y0_small(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (j0, j1) = bessel_j_pair(BesselOrder(0.0), x);
    let log_part = (0.5 * x).ln() + EULER_GAMMA;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    let mut dsum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        sum += sign * harmonic * term;
        dsum += sign * harmonic * 2.0 * kf * term;
        if term * harmonic < 1e-18 * sum.abs().max(1e-300) && kf > q.sqrt() {
            break;
        }
    }
    let y0 = 2.0 / PI * (log_part * j0 + sum);
    let xdy0 = 2.0 / PI * (j0 - log_part * x * j1 + dsum);
    (y0, xdy0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_values() {
        assert_abs_diff_eq!(gamma_fn(1.0).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(gamma_fn(5.0).unwrap(), 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), epsilon = 1e-13);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
    }

    #[test]
    fn order_validation() {
        assert!(BesselOrder::new(-0.5).is_err());
        assert!(BesselOrder::new(f64::NAN).is_err());
        assert_eq!(BesselOrder::dirichlet(2, 3).value(), 3.0);
        assert_eq!(BesselOrder::dirichlet(3, 2).value(), 2.5);
        assert_eq!(BesselOrder::kernel(3).value(), 0.5);
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(BesselOrder(0.0), 0.0), 1.0);
        assert_eq!(bessel_j(BesselOrder(1.0), 0.0), 0.0);
        assert_abs_diff_eq!(
            normalized_j(BesselOrder(0.5), 0.0),
            1.0 / (2f64.sqrt() * gamma_fn(1.5).unwrap()),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(normalized_j(BesselOrder(0.5), 0.0), 0.797_884_560_802_865_4, epsilon = 1e-12);
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.3, 1.0, 2.5, 7.9, 8.1, 15.0, 42.0, 99.0] {
            let expect = (2.0 / (PI * x)).sqrt() * x.sin();
            assert_abs_diff_eq!(bessel_j(BesselOrder(0.5), x), expect, epsilon = 1e-13);
            let njx = (2.0 / PI).sqrt() * x.sin() / x;
            assert_abs_diff_eq!(normalized_j(BesselOrder(0.5), x), njx, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(normalized_j(BesselOrder(0.5), PI), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zeros_of_half_order_are_multiples_of_pi() {
        let t = bessel_zeros(BesselOrder(0.5), 3).unwrap();
        assert_eq!(t.zeros, vec![PI, 2.0 * PI, 3.0 * PI]);
        assert!(bessel_zeros(BesselOrder(0.0), 0).is_err());
    }

    #[test]
    fn derivative_matches_neighbouring_orders() {
        let nu = BesselOrder(2.0);
        for &x in &[0.5, 3.0, 9.0, 30.0] {
            let lhs = bessel_j_derivative(nu, x);
            let rhs = 0.5 * (bessel_j(BesselOrder(1.0), x) - bessel_j(BesselOrder(3.0), x));
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
        }
        assert_eq!(bessel_j_derivative(BesselOrder(1.0), 0.0), 0.5);
    }

    #[test]
    fn y0_series_against_reference() {
        // scipy.special.y0 / y1
        let cases = [
            (0.01, -3.005_455_637_083_646),
            (0.5, -0.444_518_733_506_706_6),
            (2.0, 0.510_375_672_649_745_1),
        ];
        for &(x, y0) in &cases {
            let (v, _) = bessel_y0_small(x);
            assert_abs_diff_eq!(v, y0, epsilon = 1e-13);
        }
        // x Y0'(x) = -x Y1(x); Y1(2) = -0.10703243154093754
        let (_, xd) = bessel_y0_small(2.0);
        assert_abs_diff_eq!(xd, 2.0 * 0.107_032_431_540_937_56, epsilon = 1e-13);
    }
}
