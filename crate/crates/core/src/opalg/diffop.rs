//! Linear differential operators `sum_j p_j(r) d^j/dr^j` with Laurent-polynomial coefficients.

use super::laurent::{integer, LaurentPoly, Rational};
use std::collections::BTreeMap;
use std::fmt;

/// Canonical form: orders ascending, no zero coefficients, so structural
/// equality is operator equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DiffOp {
    coeffs: BTreeMap<usize, LaurentPoly>,
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl DiffOp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::term(0, LaurentPoly::one())
    }

    /// `d^k/dr^k`.
    pub fn derivative(k: usize) -> Self {
        Self::term(k, LaurentPoly::one())
    }

    /// `p(r) d^order/dr^order`.
    pub fn term(order: usize, p: LaurentPoly) -> Self {
        Self::from_terms([(order, p)])
    }

    /// Multiplication by `p(r)`.
    pub fn multiply(p: LaurentPoly) -> Self {
        Self::term(0, p)
    }

    pub fn from_terms<I: IntoIterator<Item = (usize, LaurentPoly)>>(terms: I) -> Self {
        let mut op = Self::zero();
        for (j, p) in terms {
            op.add_term(j, &p);
        }
        op
    }

    fn add_term(&mut self, order: usize, p: &LaurentPoly) {
        if p.is_zero() {
            return;
        }
        let sum = match self.coeffs.get(&order) {
            Some(q) => q + p,
            None => p.clone(),
        };
        if sum.is_zero() {
            self.coeffs.remove(&order);
        } else {
            self.coeffs.insert(order, sum);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest order with a nonzero coefficient, `None` for the zero operator.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, order: usize) -> LaurentPoly {
        self.coeffs.get(&order).cloned().unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &LaurentPoly)> {
        self.coeffs.iter().map(|(j, p)| (*j, p))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (j, p) in &other.coeffs {
            out.add_term(*j, p);
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(j, p)| (*j, p.scale(c))))
    }

    /// `self ∘ other`, using `d^j (q f) = sum_i C(j, i) q^(i) d^(j-i) f`.
    pub fn compose(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (j, p) in &self.coeffs {
            for (k, q) in &other.coeffs {
                let mut dq = q.clone();
                for i in 0..=*j {
                    if dq.is_zero() {
                        break;
                    }
                    let c = p * &dq.scale(&integer(binomial(*j, i)));
                    out.add_term(j - i + k, &c);
                    dq = dq.derivative();
                }
            }
        }
        out
    }

    pub fn pow(&self, l: usize) -> Self {
        (0..l).fold(Self::identity(), |acc, _| self.compose(&acc))
    }

    /// `sum_j p_j f^(j)`.
    pub fn apply(&self, f: &LaurentPoly) -> LaurentPoly {
        self.coeffs.iter().fold(LaurentPoly::zero(), |acc, (j, p)| &acc + &(p * &f.nth_derivative(*j)))
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (i, (j, p)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match j {
                0 => write!(f, "({p})")?,
                _ => write!(f, "({p})*d^{j}")?,
            }
        }
        Ok(())
    }
}
