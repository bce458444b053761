//! The boundary derivative system for `(L_m, Q_m)` and its nondegeneracy checks.

use super::diffop::DiffOp;
use super::laurent::{integer, rational, LaurentPoly, Rational};
use crate::error::{Error, Result};
use crate::Verdict;
use nalgebra::DMatrix;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const M_CAP: usize = 16;
const RUIZ_SWEEPS: usize = 20;

pub type DerivativeRow = Vec<Rational>;
pub type RationalMatrix = Vec<Vec<Rational>>;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

fn r_times_d() -> DiffOp {
    DiffOp::term(1, LaurentPoly::monomial(integer(1), 1))
}

/// `L_m = prod_{s=1}^m ((1/(n + 2(m - s))) r d/dr + 1)`; identity for `m = 0`.
pub fn build_l(n: usize, m: usize) -> Result<DiffOp> {
    check_n(n)?;
    Ok((1..=m).fold(DiffOp::identity(), |acc, s| {
        let factor = r_times_d().scale(&rational(1, (n + 2 * (m - s)) as i64)).add(&DiffOp::identity());
        acc.compose(&factor)
    }))
}

/// `Q_m = d^2/dr^2 + ((n + 2m - 1)/r) d/dr`.
pub fn build_q(n: usize, m: usize) -> Result<DiffOp> {
    check_n(n)?;
    Ok(DiffOp::from_terms([
        (2, LaurentPoly::one()),
        (1, LaurentPoly::monomial(integer((n + 2 * m - 1) as i64), -1)),
    ]))
}

/// Coefficients of `d^i ∘ op` at `r = 1`, padded to `width`.
pub fn derivative_row(op: &DiffOp, width: usize, prefix_order: usize) -> Result<DerivativeRow> {
    let full = DiffOp::derivative(prefix_order).compose(op);
    if let Some(top) = full.order() {
        if top >= width {
            return Err(Error::RowWidth { needed: top, width });
        }
    }
    Ok((0..width).map(|j| full.coeff(j).at_one()).collect())
}

/// Rows `d^i L_m` for `i < m`, then `Q_m^l` for `l < m`.
pub fn system_matrix(n: usize, m: usize) -> Result<RationalMatrix> {
    if m == 0 {
        return Err(Error::Domain("system needs m >= 1".into()));
    }
    let l = build_l(n, m)?;
    let q = build_q(n, m)?;
    let width = 2 * m;
    let mut rows = Vec::with_capacity(width);
    for i in 0..m {
        rows.push(derivative_row(&l, width, i)?);
    }
    let mut ql = DiffOp::identity();
    for _ in 0..m {
        rows.push(derivative_row(&ql, width, 0)?);
        ql = q.compose(&ql);
    }
    Ok(rows)
}

/// Exact determinant by fraction-valued Gaussian elimination.
pub fn determinant(a: &RationalMatrix) -> Rational {
    let k = a.len();
    let mut a = a.clone();
    let mut det = Rational::one();
    for col in 0..k {
        let Some(p) = (col..k).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..k {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            let (upper, lower) = a.split_at_mut(r);
            for (x, y) in lower[0][col..k].iter_mut().zip(&upper[col][col..k]) {
                *x -= &f * y;
            }
        }
    }
    det
}

fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Structural zeros: `A_{i,j} = 0` for `j > m + i` with `A_{i,m+i} != 0`;
/// `B_{l,j} = 0` for `j > 2l` with `B_{l,2l} = 1`, and `B_{l,0} = 0` for `l >= 1`.
pub fn structure_holds(a: &RationalMatrix, m: usize) -> bool {
    let a_ok = (0..m).all(|i| !a[i][m + i].is_zero() && a[i][m + i + 1..].iter().all(Zero::is_zero));
    let b_ok = (0..m).all(|l| {
        let row = &a[m + l];
        row[2 * l].is_one() && row[2 * l + 1..].iter().all(Zero::is_zero) && (l == 0 || row[0].is_zero())
    });
    a_ok && b_ok
}

/// Nonzero entries `B_{l,j}` with `0 < j < l`. `Q_m^l` keeps a first-order
/// term for every `l >= 2`, so the B-block is not banded from below.
pub fn b_entries_below_band(a: &RationalMatrix, m: usize) -> usize {
    (0..m).map(|l| a[m + l][1..l.max(1)].iter().filter(|v| !v.is_zero()).count()).sum()
}

/// Smallest singular value and condition number after Ruiz equilibration
/// (alternating row and column max-norm scaling).
pub fn equilibrated_singular_values(a: &RationalMatrix) -> (f64, f64) {
    let k = a.len();
    let mut mat = DMatrix::from_fn(k, k, |i, j| to_f64(&a[i][j]));
    for _ in 0..RUIZ_SWEEPS {
        for mut row in mat.row_iter_mut() {
            let s = row.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if s > 0.0 {
                row /= s.sqrt();
            }
        }
        for mut col in mat.column_iter_mut() {
            let s = col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if s > 0.0 {
                col /= s.sqrt();
            }
        }
    }
    let sv = mat.singular_values();
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sv.iter().copied().fold(0.0f64, f64::max);
    (min, if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Exact inverse by Gauss-Jordan elimination; `None` if singular.
pub fn inverse(a: &RationalMatrix) -> Option<RationalMatrix> {
    let k = a.len();
    let mut m: RationalMatrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    for col in 0..k {
        let p = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(p, col);
        let pivot = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v /= &pivot;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, w) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * w;
            }
        }
    }
    Some(m.into_iter().map(|row| row[k..].to_vec()).collect())
}

fn inf_norm(a: &RationalMatrix) -> Rational {
    a.iter()
        .map(|row| row.iter().fold(Rational::zero(), |acc, v| acc + v.abs()))
        .max()
        .unwrap_or_else(Rational::zero)
}

/// `||S||_inf ||S^-1||_inf` for `S` the matrix with columns, then rows, scaled
/// to unit max-norm; computed exactly and rounded once.
pub fn scaled_condition(a: &RationalMatrix) -> f64 {
    let k = a.len();
    let mut s = a.clone();
    for j in 0..k {
        let c = (0..k).map(|i| s[i][j].abs()).max().unwrap_or_else(Rational::zero);
        if !c.is_zero() {
            for row in s.iter_mut() {
                row[j] /= &c;
            }
        }
    }
    for row in s.iter_mut() {
        let c = row.iter().map(Signed::abs).max().unwrap_or_else(Rational::zero);
        if !c.is_zero() {
            for v in row.iter_mut() {
                *v /= &c;
            }
        }
    }
    match inverse(&s) {
        Some(inv) => to_f64(&(inf_norm(&s) * inf_norm(&inv))),
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub n: usize,
    pub m: usize,
    /// Exact determinant as `p/q`.
    pub determinant: String,
    pub determinant_approx: f64,
    pub structure_ok: bool,
    pub b_entries_below_band: usize,
    /// Floating-point SVD of the equilibrated matrix; underflows to 0 once the
    /// condition exceeds double precision.
    pub min_singular_value: f64,
    pub svd_condition: f64,
    /// Exact-arithmetic infinity-norm condition of the scaled matrix.
    pub condition: f64,
    pub verdict: Verdict,
}

pub fn nondegeneracy_check(n: usize, m: usize) -> Result<NondegeneracyReport> {
    if m == 0 || m > M_CAP {
        return Err(Error::Domain(format!("m must lie in 1..={M_CAP}, got {m}")));
    }
    let a = system_matrix(n, m)?;
    let det = determinant(&a);
    let (min_singular_value, svd_condition) = equilibrated_singular_values(&a);
    let condition = scaled_condition(&a);
    let structure_ok = structure_holds(&a, m);
    Ok(NondegeneracyReport {
        n,
        m,
        determinant: det.to_string(),
        determinant_approx: to_f64(&det),
        structure_ok,
        b_entries_below_band: b_entries_below_band(&a, m),
        min_singular_value,
        svd_condition,
        condition,
        verdict: Verdict::from_pass(!det.is_zero() && structure_ok),
    })
}

/// `(Psi_p(1), ..., Psi_p^(2m-1)(1))` for `Psi_p(r) = r^(-n-2p)`.
pub fn certificate_vector(n: usize, m: usize, p: usize) -> DerivativeRow {
    let a = -((n + 2 * p) as i64);
    let mut out = Vec::with_capacity(2 * m);
    let mut v = Rational::one();
    for q in 0..2 * m as i64 {
        out.push(v.clone());
        v *= integer(a - q);
    }
    out
}

/// `C_l = prod_{q<l} (n + 2(p+q)) * 2(p + q + 1 - m)`.
pub fn certificate_constant(n: usize, m: usize, p: usize, l: usize) -> Rational {
    (0..l).fold(Rational::one(), |acc, q| {
        acc * integer(((n + 2 * (p + q)) as i64) * 2 * ((p + q + 1) as i64 - m as i64))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// `L_m Psi_p` is identically zero.
    pub annihilated: bool,
    /// `<A_i, v_p>` for `i < m`, as exact fractions.
    pub a_products: Vec<String>,
    /// `<B_l, v_p>` for `l < m`.
    pub b_products: Vec<String>,
    /// Closed-form `C_l` for `l < m`.
    pub constants: Vec<String>,
    /// `Q_m^l Psi_p` equals `C_l r^(-n-2(p+l))` exactly for every `l < m`.
    pub ladder_ok: bool,
    /// First `l` with `<B_l, v_p> = 0`; expected `m - p`.
    pub cutoff: usize,
    pub pivot: String,
    pub verdict: Verdict,
}

pub fn certificate_check(n: usize, m: usize, p: usize) -> Result<CertificateReport> {
    if p >= m {
        return Err(Error::Domain(format!("p = {p} must be below m = {m}")));
    }
    let a = system_matrix(n, m)?;
    let v = certificate_vector(n, m, p);
    let psi = LaurentPoly::monomial(Rational::one(), -((n + 2 * p) as i32));
    let annihilated = build_l(n, m)?.apply(&psi).is_zero();
    let q = build_q(n, m)?;
    let a_products: Vec<Rational> = a[..m].iter().map(|row| dot(row, &v)).collect();
    let b_products: Vec<Rational> = a[m..].iter().map(|row| dot(row, &v)).collect();
    let constants: Vec<Rational> = (0..m).map(|l| certificate_constant(n, m, p, l)).collect();
    let mut image = psi;
    let mut ladder_ok = true;
    for (l, c) in constants.iter().enumerate() {
        let expect = LaurentPoly::monomial(c.clone(), -((n + 2 * (p + l)) as i32));
        ladder_ok &= image == expect && b_products[l] == *c;
        image = q.apply(&image);
    }
    let cutoff = b_products.iter().position(Zero::is_zero).unwrap_or(m);
    let pivot = b_products[m - 1 - p].clone();
    let ok = annihilated
        && a_products.iter().all(Zero::is_zero)
        && ladder_ok
        && cutoff == m - p
        && b_products[cutoff..].iter().all(Zero::is_zero)
        && !pivot.is_zero();
    let s = |v: &[Rational]| v.iter().map(ToString::to_string).collect();
    Ok(CertificateReport {
        n,
        m,
        p,
        annihilated,
        a_products: s(&a_products),
        b_products: s(&b_products),
        constants: s(&constants),
        ladder_ok,
        cutoff,
        pivot: pivot.to_string(),
        verdict: Verdict::from_pass(ok),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceStep {
    /// Row label, `B_l`.
    pub row: String,
    pub p: usize,
    /// `v_p` is orthogonal to every row added before this one.
    pub orthogonal_to_previous: bool,
    pub pivot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub n: usize,
    pub m: usize,
    /// The `A` block is banded upper-triangular with nonzero top entries.
    pub a_block_triangular: bool,
    pub steps: Vec<IndependenceStep>,
    pub verdict: Verdict,
}

/// Adds `B_{m-1}, ..., B_0` to the `A` rows one at a time; `v_p` separates `B_{m-1-p}`
/// from the span of the rows already present.
pub fn independence_certificate(n: usize, m: usize) -> Result<IndependenceCertificate> {
    let a = system_matrix(n, m)?;
    let a_block_triangular = (0..m).all(|i| !a[i][m + i].is_zero() && a[i][m + i + 1..].iter().all(Zero::is_zero));
    let mut present: Vec<&DerivativeRow> = a[..m].iter().collect();
    let mut steps = Vec::with_capacity(m);
    for p in 0..m {
        let l = m - 1 - p;
        let v = certificate_vector(n, m, p);
        let row = &a[m + l];
        let orthogonal_to_previous = present.iter().all(|r| dot(r, &v).is_zero());
        let pivot = dot(row, &v);
        steps.push(IndependenceStep { row: format!("B_{l}"), p, orthogonal_to_previous, pivot: pivot.to_string() });
        present.push(row);
    }
    let ok = a_block_triangular && steps.iter().all(|s| s.orthogonal_to_previous && s.pivot != "0");
    Ok(IndependenceCertificate { n, m, a_block_triangular, steps, verdict: Verdict::from_pass(ok) })
}

/// Coefficient at column `2m` of `d^m L_m` evaluated at `r = 1`.
pub fn shift_coefficient(n: usize, m: usize) -> Result<Rational> {
    let row = derivative_row(&build_l(n, m)?, 2 * m + 1, m)?;
    Ok(row[2 * m].clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub nondegeneracy: NondegeneracyReport,
    pub certificates: Vec<CertificateReport>,
    pub independence: IndependenceCertificate,
    pub shift_coefficient: String,
    pub verdict: Verdict,
}

pub fn lemma_entry(n: usize, m: usize) -> Result<LemmaEntry> {
    let nondegeneracy = nondegeneracy_check(n, m)?;
    let certificates = (0..m).map(|p| certificate_check(n, m, p)).collect::<Result<Vec<_>>>()?;
    let independence = independence_certificate(n, m)?;
    let shift = shift_coefficient(n, m)?;
    let verdict = certificates
        .iter()
        .fold(nondegeneracy.verdict.and(independence.verdict), |v, c| v.and(c.verdict))
        .and(Verdict::from_pass(!shift.is_zero()));
    Ok(LemmaEntry { nondegeneracy, certificates, independence, shift_coefficient: shift.to_string(), verdict })
}

/// All `(n, m)` with `2 <= n <= n_max`, `1 <= m <= m_max`, ordered by `n` then `m`.
pub fn lemma_sweep(n_max: usize, m_max: usize) -> Result<Vec<LemmaEntry>> {
    let pairs: Vec<(usize, usize)> = (2..=n_max).flat_map(|n| (1..=m_max).map(move |m| (n, m))).collect();
    pairs.par_iter().map(|&(n, m)| lemma_entry(n, m)).collect()
}

pub fn abs_det(n: usize, m: usize) -> Result<Rational> {
    Ok(determinant(&system_matrix(n, m)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l_and_q_small_cases() {
        let l = build_l(2, 1).unwrap();
        assert_eq!(l.coeff(1), LaurentPoly::monomial(rational(1, 2), 1));
        assert_eq!(l.coeff(0), LaurentPoly::one());
        let l = build_l(2, 2).unwrap();
        assert_eq!(l.coeff(2), LaurentPoly::monomial(rational(1, 8), 2));
        assert_eq!(l.coeff(1), LaurentPoly::monomial(rational(7, 8), 1));
        assert_eq!(l.coeff(0), LaurentPoly::one());
        assert_eq!(build_l(4, 0).unwrap(), DiffOp::identity());
        let q = build_q(2, 1).unwrap();
        assert_eq!(q.coeff(1), LaurentPoly::monomial(integer(3), -1));
        for (n, m) in [(2usize, 0usize), (3, 2), (5, 4)] {
            let r2 = LaurentPoly::monomial(integer(1), 2);
            assert_eq!(build_q(n, m).unwrap().apply(&r2), LaurentPoly::constant(integer(2 * (n + 2 * m) as i64)));
        }
    }

    #[test]
    fn factors_of_l_commute() {
        let (n, m) = (3usize, 4usize);
        let factors: Vec<DiffOp> = (1..=m)
            .map(|s| r_times_d().scale(&rational(1, (n + 2 * (m - s)) as i64)).add(&DiffOp::identity()))
            .collect();
        let fwd = factors.iter().fold(DiffOp::identity(), |a, f| a.compose(f));
        let rev = factors.iter().rev().fold(DiffOp::identity(), |a, f| a.compose(f));
        assert_eq!(fwd, rev);
        assert_eq!(fwd, build_l(n, m).unwrap());
        let lead: Rational = (1..=m).map(|s| rational(1, (n + 2 * (m - s)) as i64)).product();
        assert_eq!(fwd.coeff(m), LaurentPoly::monomial(lead, m as i32));
    }

    #[test]
    fn rows_and_widths() {
        let l = build_l(2, 1).unwrap();
        assert_eq!(derivative_row(&l, 2, 0).unwrap(), vec![integer(1), rational(1, 2)]);
        let id = DiffOp::identity();
        for i in 0..4 {
            let row = derivative_row(&id, 4, i).unwrap();
            assert!(row.iter().enumerate().all(|(j, v)| *v == if j == i { integer(1) } else { integer(0) }));
        }
        assert_eq!(derivative_row(&l, 2, 1).unwrap_err(), Error::RowWidth { needed: 2, width: 2 });
    }

    #[test]
    fn small_systems() {
        let a = system_matrix(2, 1).unwrap();
        assert_eq!(a, vec![vec![integer(1), rational(1, 2)], vec![integer(1), integer(0)]]);
        assert_eq!(determinant(&a), rational(-1, 2));
        for n in 2..9 {
            assert_eq!(determinant(&system_matrix(n, 1).unwrap()), rational(-1, n as i64));
        }
        assert!(structure_holds(&system_matrix(4, 5).unwrap(), 5));
    }

    #[test]
    fn q_powers_keep_first_order_term() {
        for (n, m) in [(2usize, 3usize), (3, 2), (6, 5)] {
            let c = integer((n + 2 * m - 1) as i64);
            let q2 = build_q(n, m).unwrap().pow(2);
            let two = integer(2);
            assert_eq!(q2.coeff(1), LaurentPoly::monomial(&c * (&two - &c), -3));
            assert!(q2.coeff(0).is_zero());
        }
        let a = system_matrix(2, 3).unwrap();
        assert_eq!(a[5], vec![integer(0), integer(-35), integer(35), integer(14), integer(1), integer(0)]);
        assert_eq!(b_entries_below_band(&a, 3), 1);
    }

    #[test]
    fn inverse_and_condition() {
        let a = system_matrix(3, 4).unwrap();
        let inv = inverse(&a).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let v: Rational = (0..8).map(|k| &a[i][k] * &inv[k][j]).sum();
                assert_eq!(v, if i == j { integer(1) } else { integer(0) });
            }
        }
        let id = vec![vec![integer(2), integer(0)], vec![integer(0), rational(1, 3)]];
        assert_eq!(scaled_condition(&id), 1.0);
        let r = nondegeneracy_check(2, 12).unwrap();
        assert!(r.condition.is_finite() && r.condition > 1.0);
    }

    #[test]
    fn determinant_of_known_matrices() {
        let a = vec![
            vec![integer(0), integer(2), integer(1)],
            vec![integer(1), integer(0), integer(0)],
            vec![integer(3), integer(1), rational(1, 2)],
        ];
        assert_eq!(determinant(&a), integer(0));
        let b = vec![vec![integer(0), integer(1)], vec![integer(1), integer(0)]];
        assert_eq!(determinant(&b), integer(-1));
    }

    #[test]
    fn certificate_spot_values() {
        let c = certificate_check(2, 2, 0).unwrap();
        assert_eq!(c.b_products, vec!["1", "-4"]);
        assert_eq!(c.verdict, Verdict::Pass);
        let q = build_q(5, 3).unwrap();
        let psi = LaurentPoly::monomial(integer(1), -(5 + 4));
        assert!(q.apply(&psi).is_zero());
        assert_eq!(certificate_check(3, 2, 2).unwrap_err(), Error::Domain("p = 2 must be below m = 2".into()));
    }

    #[test]
    fn certificate_vector_derivatives() {
        let v = certificate_vector(2, 2, 1);
        assert_eq!(v, vec![integer(1), integer(-4), integer(20), integer(-120)]);
    }

    #[test]
    fn sweep_is_nondegenerate() {
        for e in lemma_sweep(4, 6).unwrap() {
            assert_eq!(e.verdict, Verdict::Pass, "{} {}", e.nondegeneracy.n, e.nondegeneracy.m);
        }
    }

    #[test]
    fn shift_coefficient_is_nonzero() {
        for n in 2..5 {
            for m in 1..6 {
                assert!(!shift_coefficient(n, m).unwrap().is_zero());
            }
        }
    }
}
