//! Coefficient rings for finitely supported functions on the lattice tree.
//!
//! The operators in [`super::fns`] are generic over a commutative ring of
//! scalars.  Three rings cover every use here: exact rationals, complex
//! floats, and two-variable Laurent polynomials (for symbolic identities in
//! the pair `(alpha, nu)`).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Commutative ring interface used by the tree operators.
pub trait Scalar: Clone + core::fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn from_int(n: i64) -> Self {
        let mut acc = Self::zero();
        let one = Self::one();
        for _ in 0..n.unsigned_abs() {
            acc = acc.add(&one);
        }
        if n < 0 {
            acc.neg()
        } else {
            acc
        }
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
}

/// Laurent polynomial in two variables `alpha`, `nu` with rational
/// coefficients: a finite sum of monomials `c * alpha^i * nu^j`, `i, j` of
/// either sign.  Exponent pairs are kept sorted; zero coefficients are
/// pruned, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Laurent2 {
    terms: BTreeMap<(i64, i64), BigRational>,
}

impl Laurent2 {
    pub fn monomial(alpha_exp: i64, nu_exp: i64, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !Zero::is_zero(&coeff) {
            terms.insert((alpha_exp, nu_exp), coeff);
        }
        Laurent2 { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &BigRational)> {
        self.terms.iter()
    }

    /// Substitute rational values for the two variables.
    pub fn eval(&self, alpha: &BigRational, nu: &BigRational) -> BigRational {
        let mut acc: BigRational = Zero::zero();
        for (&(i, j), c) in &self.terms {
            acc += c * rational_pow(alpha, i) * rational_pow(nu, j);
        }
        acc
    }
}

impl core::fmt::Display for Laurent2 {
    fn fmt(&self, fm: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.terms.is_empty() {
            return write!(fm, "0");
        }
        for (k, (&(i, j), c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(fm, " {} ", if c.is_negative() { "-" } else { "+" })?;
            } else if c.is_negative() {
                write!(fm, "-")?;
            }
            let a = c.abs();
            let mut lead = true;
            if !a.is_one() || (i == 0 && j == 0) {
                write!(fm, "{}", a)?;
                lead = false;
            }
            for (sym, e) in [("a", i), ("v", j)] {
                if e != 0 {
                    if !lead {
                        write!(fm, "*")?;
                    }
                    lead = false;
                    if e == 1 {
                        write!(fm, "{}", sym)?;
                    } else {
                        write!(fm, "{}^{}", sym, e)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// `x^k` for a nonzero rational base and integer exponent of either sign.
pub fn rational_pow(x: &BigRational, k: i64) -> BigRational {
    if k == 0 {
        return One::one();
    }
    let base = if k < 0 {
        assert!(!Zero::is_zero(x), "zero base with negative exponent");
        x.recip()
    } else {
        x.clone()
    };
    let mut acc: BigRational = One::one();
    let mut sq = base;
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &sq;
        }
        e >>= 1;
        if e > 0 {
            sq = &sq * &sq;
        }
    }
    acc
}

impl Scalar for Laurent2 {
    fn zero() -> Self {
        Laurent2 {
            terms: BTreeMap::new(),
        }
    }
    fn one() -> Self {
        Laurent2::monomial(0, 0, One::one())
    }
    fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            let entry = terms.entry(*k).or_insert_with(Zero::zero);
            *entry += c;
            if Zero::is_zero(entry) {
                terms.remove(k);
            }
        }
        Laurent2 { terms }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        let mut terms: BTreeMap<(i64, i64), BigRational> = BTreeMap::new();
        for (&(i1, j1), c1) in &self.terms {
            for (&(i2, j2), c2) in &other.terms {
                let k = (i1 + i2, j1 + j2);
                let entry = terms.entry(k).or_insert_with(Zero::zero);
                *entry += c1 * c2;
                if Zero::is_zero(entry) {
                    terms.remove(&k);
                }
            }
        }
        Laurent2 { terms }
    }
    fn neg(&self) -> Self {
        Laurent2 {
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn from_int(n: i64) -> Self {
        Laurent2::monomial(0, 0, BigRational::from_integer(BigInt::from(n)))
    }
}

/// Dense rational matrix rank by fraction-free-ish Gaussian elimination.
/// Rows are consumed in place.
pub fn rational_rank(rows: &mut Vec<Vec<BigRational>>) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut rank = 0;
    let mut col = 0;
    while rank < nrows && col < ncols {
        let pivot = (rank..nrows).find(|&r| !Zero::is_zero(&rows[r][col]));
        let Some(pr) = pivot else {
            col += 1;
            continue;
        };
        rows.swap(rank, pr);
        let inv = rows[rank][col].recip();
        for c in col..ncols {
            let v = &rows[rank][c] * &inv;
            rows[rank][c] = v;
        }
        for r in 0..nrows {
            if r != rank && !Zero::is_zero(&rows[r][col]) {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let v = &rows[r][c] - &factor * &rows[rank][c];
                    rows[r][c] = v;
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn laurent_ring_basics() {
        let a = Laurent2::monomial(1, 0, One::one());
        let v = Laurent2::monomial(0, 1, One::one());
        let ainv = Laurent2::monomial(-1, 0, One::one());
        assert_eq!(a.mul(&ainv), Laurent2::one());
        // (a + v)(a - v) = a^2 - v^2
        let lhs = a.add(&v).mul(&a.sub(&v));
        let rhs = Laurent2::monomial(2, 0, One::one()).sub(&Laurent2::monomial(0, 2, One::one()));
        assert_eq!(lhs, rhs);
        assert!(a.sub(&a).is_zero());
        let e = lhs.eval(&rat(3, 1), &rat(1, 2));
        assert_eq!(e, rat(35, 4));
    }

    #[test]
    fn rational_pow_signs() {
        assert_eq!(rational_pow(&rat(2, 3), 2), rat(4, 9));
        assert_eq!(rational_pow(&rat(2, 3), -2), rat(9, 4));
        assert_eq!(rational_pow(&rat(5, 7), 0), rat(1, 1));
    }

    #[test]
    fn rank_of_small_matrices() {
        let mut m = vec![
            vec![rat(1, 1), rat(2, 1), rat(3, 1)],
            vec![rat(2, 1), rat(4, 1), rat(6, 1)],
            vec![rat(0, 1), rat(1, 1), rat(1, 1)],
        ];
        assert_eq!(rational_rank(&mut m), 2);
        let mut id = vec![
            vec![rat(1, 1), rat(0, 1)],
            vec![rat(0, 1), rat(1, 1)],
        ];
        assert_eq!(rational_rank(&mut id), 2);
    }
}
