//! Exact roots of unity and cyclotomic rationals.
//!
//! [`RootOfUnity`] is a point of the circle group Q/Z kept as a reduced
//! fraction, so products and powers never drift.  [`Cyclo`] is an element
//! of `Q[z]/(z^n - 1)` with dense rational coefficients; equality and the
//! rational-part extraction reduce modulo the n-th cyclotomic polynomial,
//! computed by exact integer division.  Character sums stay in [`Cyclo`]
//! until a final numeric embedding, which keeps modulus identities like
//! `g * conj(g) = q` checkable with no tolerance at all.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero as NumZero};

/// `e^{2 pi i num/den}` with `0 <= num < den` and `gcd(num, den) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RootOfUnity {
    num: BigUint,
    den: BigUint,
}

impl RootOfUnity {
    pub fn one() -> Self {
        RootOfUnity { num: BigUint::zero(), den: BigUint::one() }
    }

    /// Reduce `num/den` into Q/Z.  `den` must be nonzero.
    pub fn new(num: &BigInt, den: &BigUint) -> Self {
        assert!(!den.is_zero(), "root of unity needs a nonzero order");
        let d = BigInt::from(den.clone());
        let n = num.mod_floor(&d).to_biguint().expect("nonnegative");
        let g = n.gcd(den);
        RootOfUnity { num: &n / &g, den: den / &g }
    }

    pub fn from_u64(num: u64, den: u64) -> Self {
        Self::new(&BigInt::from(num), &BigUint::from(den))
    }

    pub fn num(&self) -> &BigUint {
        &self.num
    }

    /// The exact multiplicative order.
    pub fn order(&self) -> &BigUint {
        &self.den
    }

    pub fn is_one(&self) -> bool {
        self.num.is_zero()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let num = BigInt::from(&self.num * &other.den) + BigInt::from(&other.num * &self.den);
        Self::new(&num, &(&self.den * &other.den))
    }

    pub fn inv(&self) -> Self {
        if self.num.is_zero() {
            return self.clone();
        }
        RootOfUnity { num: &self.den - &self.num, den: self.den.clone() }
    }

    /// Complex conjugation coincides with inversion on the circle.
    pub fn conj(&self) -> Self {
        self.inv()
    }

    pub fn pow(&self, e: i64) -> Self {
        self.pow_big(&BigInt::from(e))
    }

    pub fn pow_big(&self, e: &BigInt) -> Self {
        let num = BigInt::from(self.num.clone()) * e;
        Self::new(&num, &self.den)
    }

    pub fn to_complex(&self) -> Complex64 {
        let angle = 2.0
            * core::f64::consts::PI
            * (self.num.to_f64().unwrap_or(0.0) / self.den.to_f64().unwrap_or(1.0));
        Complex64::new(libm::cos(angle), libm::sin(angle))
    }
}

/// An element of `Q[z]/(z^n - 1)`, coefficients indexed by the exponent.
#[derive(Debug, Clone)]
pub struct Cyclo {
    n: u64,
    coeffs: Vec<BigRational>,
}

impl Cyclo {
    pub fn zero(n: u64) -> Self {
        assert!(n >= 1);
        Cyclo { n, coeffs: vec![BigRational::zero(); n as usize] }
    }

    pub fn one(n: u64) -> Self {
        Self::from_rational(n, &BigRational::one())
    }

    pub fn from_rational(n: u64, r: &BigRational) -> Self {
        let mut c = Self::zero(n);
        c.coeffs[0] = r.clone();
        c
    }

    pub fn from_int(n: u64, x: i64) -> Self {
        Self::from_rational(n, &BigRational::from_integer(BigInt::from(x)))
    }

    /// The root `z^k`.
    pub fn root(n: u64, k: i64) -> Self {
        let mut c = Self::zero(n);
        let idx = (BigInt::from(k))
            .mod_floor(&BigInt::from(n))
            .to_u64()
            .expect("index fits");
        c.coeffs[idx as usize] = BigRational::one();
        c
    }

    /// Embed an exact circle point; its order must divide `n`.
    pub fn from_root_of_unity(n: u64, r: &RootOfUnity) -> Self {
        let den = r.order().to_u64().expect("order fits u64");
        assert!(n % den == 0, "root order {den} does not divide ring order {n}");
        let k = r.num().to_u64().expect("exponent fits u64") * (n / den);
        Self::root(n, k as i64)
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "mixed cyclotomic orders");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Cyclo { n: self.n, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "mixed cyclotomic orders");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Cyclo { n: self.n, coeffs }
    }

    pub fn neg(&self) -> Self {
        Cyclo { n: self.n, coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "mixed cyclotomic orders");
        let n = self.n as usize;
        let mut out = vec![BigRational::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let k = (i + j) % n;
                out[k] = &out[k] + &(a * b);
            }
        }
        Cyclo { n: self.n, coeffs: out }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Cyclo { n: self.n, coeffs: self.coeffs.iter().map(|a| a * r).collect() }
    }

    /// `z^j -> z^{-j}`.
    pub fn conj(&self) -> Self {
        let n = self.n as usize;
        let mut out = vec![BigRational::zero(); n];
        for (j, a) in self.coeffs.iter().enumerate() {
            out[(n - j) % n] = a.clone();
        }
        Cyclo { n: self.n, coeffs: out }
    }

    /// Reinterpret in a ring of order `m`, with `n | m`.
    pub fn lift(&self, m: u64) -> Self {
        assert!(m % self.n == 0, "lift target must be a multiple of the order");
        let k = m / self.n;
        let mut out = Self::zero(m);
        for (j, a) in self.coeffs.iter().enumerate() {
            out.coeffs[j * k as usize] = a.clone();
        }
        out
    }

    /// True zero in `Q(zeta_n)`: remainder modulo the n-th cyclotomic
    /// polynomial vanishes.
    pub fn is_zero(&self) -> bool {
        self.reduced().iter().all(|c| c.is_zero())
    }

    pub fn eq(&self, other: &Self) -> bool {
        self.sub(other).is_zero()
    }

    /// `Some(c)` when the element equals the rational number `c`.
    pub fn as_rational(&self) -> Option<BigRational> {
        let red = self.reduced();
        if red.iter().skip(1).all(|c| c.is_zero()) {
            Some(red.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let angle = 2.0 * core::f64::consts::PI * (j as f64) / (self.n as f64);
            acc += Complex64::new(libm::cos(angle), libm::sin(angle)) * a.to_f64().unwrap_or(0.0);
        }
        acc
    }

    /// Coefficients after reduction modulo the n-th cyclotomic polynomial.
    fn reduced(&self) -> Vec<BigRational> {
        let phi = cyclotomic_poly(self.n);
        poly_rem_by_monic(&self.coeffs, &phi)
    }
}

/// The n-th cyclotomic polynomial over Z, little-endian, via
/// `x^n - 1 = prod_{d | n} Phi_d(x)` and exact division.
pub fn cyclotomic_poly(n: u64) -> Vec<BigInt> {
    let mut cache: BTreeMap<u64, Vec<BigInt>> = BTreeMap::new();
    for d in divisors(n) {
        // x^d - 1
        let mut poly = vec![BigInt::zero(); d as usize + 1];
        poly[0] = -BigInt::one();
        poly[d as usize] = BigInt::one();
        for e in divisors(d) {
            if e == d {
                continue;
            }
            poly = poly_div_exact(&poly, &cache[&e]);
        }
        cache.insert(d, poly);
    }
    cache.remove(&n).expect("n divides n")
}

fn divisors(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d != n / d {
                out.push(n / d);
            }
        }
        d += 1;
    }
    out.sort_unstable();
    out
}

/// Exact division of integer polynomials; the divisor must be monic and
/// divide exactly.
fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem: Vec<BigInt> = num.to_vec();
    let dd = den.len() - 1;
    assert!(den[dd].is_one(), "divisor must be monic");
    let mut quot = vec![BigInt::zero(); rem.len() - dd];
    for i in (dd..rem.len()).rev() {
        let c = rem[i].clone();
        if c.is_zero() {
            continue;
        }
        quot[i - dd] = c.clone();
        for j in 0..=dd {
            let d = &c * &den[j];
            rem[i - dd + j] -= d;
        }
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()), "division was not exact");
    quot
}

/// Remainder of a rational polynomial modulo a monic integer polynomial.
fn poly_rem_by_monic(num: &[BigRational], den: &[BigInt]) -> Vec<BigRational> {
    let mut rem: Vec<BigRational> = num.to_vec();
    let dd = den.len() - 1;
    debug_assert!(den[dd].is_one());
    for i in (dd..rem.len()).rev() {
        let c = rem[i].clone();
        if c.is_zero() {
            continue;
        }
        for j in 0..=dd {
            let d = &c * BigRational::from_integer(den[j].clone());
            rem[i - dd + j] = &rem[i - dd + j] - &d;
        }
    }
    rem.truncate(dd.max(1));
    rem
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(x: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(x))
    }

    #[test]
    fn circle_group_laws() {
        let a = RootOfUnity::from_u64(7, 12);
        let b = RootOfUnity::from_u64(5, 12);
        assert!(a.mul(&b).is_one());
        assert_eq!(a.mul(&a.inv()), RootOfUnity::one());
        assert_eq!(a.pow(12), RootOfUnity::one());
        assert_eq!(a.pow(-1), a.inv());
        // reduction: 8/12 = 2/3
        let c = RootOfUnity::from_u64(8, 12);
        assert_eq!(c, RootOfUnity::from_u64(2, 3));
        assert_eq!(c.order(), &BigUint::from(3u32));
    }

    #[test]
    fn complex_embedding() {
        let i = RootOfUnity::from_u64(1, 4).to_complex();
        assert!((i.re).abs() < 1e-15 && (i.im - 1.0).abs() < 1e-15);
        let m1 = RootOfUnity::from_u64(1, 2).to_complex();
        assert!((m1.re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cyclotomic_polynomials() {
        let to64 = |v: Vec<BigInt>| -> Vec<i64> { v.iter().map(|c| c.to_i64().unwrap()).collect() };
        assert_eq!(to64(cyclotomic_poly(1)), vec![-1, 1]);
        assert_eq!(to64(cyclotomic_poly(2)), vec![1, 1]);
        assert_eq!(to64(cyclotomic_poly(5)), vec![1, 1, 1, 1, 1]);
        assert_eq!(to64(cyclotomic_poly(6)), vec![1, -1, 1]);
        assert_eq!(to64(cyclotomic_poly(8)), vec![1, 0, 0, 0, 1]);
        assert_eq!(to64(cyclotomic_poly(12)), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn sum_of_all_roots_vanishes() {
        for n in [2u64, 3, 4, 6, 10, 12] {
            let mut s = Cyclo::zero(n);
            for k in 0..n {
                s = s.add(&Cyclo::root(n, k as i64));
            }
            assert!(s.is_zero(), "n = {n}");
        }
        assert!(!Cyclo::one(5).is_zero());
    }

    #[test]
    fn third_roots_inside_sixth_ring() {
        // 1 + z6^2 + z6^4 = 0 since z6^2 is a primitive cube root
        let s = Cyclo::one(6)
            .add(&Cyclo::root(6, 2))
            .add(&Cyclo::root(6, 4));
        assert!(s.is_zero());
    }

    #[test]
    fn quadratic_gauss_sum_squares_to_five() {
        let mut g = Cyclo::zero(5);
        for a in 0..5i64 {
            g = g.add(&Cyclo::root(5, (a * a) % 5));
        }
        // the classical evaluation: g = sum zeta^{a^2} has g^2 = 5 when
        // the modulus is 1 mod 4
        assert_eq!(g.mul(&g).as_rational(), Some(rat(5)));
        assert_eq!(g.mul(&g.conj()).as_rational(), Some(rat(5)));
        assert_eq!(g.as_rational(), None);
    }

    #[test]
    fn lift_preserves_values() {
        let a = Cyclo::root(3, 1).lift(6);
        assert!(a.eq(&Cyclo::root(6, 2)));
        let r = RootOfUnity::from_u64(1, 3);
        let b = Cyclo::from_root_of_unity(6, &r);
        assert!(b.eq(&Cyclo::root(6, 2)));
        let z = a.sub(&b);
        assert!(z.is_zero());
    }

    #[test]
    fn rational_extraction_respects_relations() {
        // z4^2 = -1 even though the stored vector has no constant term
        let m = Cyclo::root(4, 2);
        assert_eq!(m.as_rational(), Some(rat(-1)));
        // 1 + z3 = -z3^2: difference reduces to zero
        let lhs = Cyclo::one(3).add(&Cyclo::root(3, 1));
        let rhs = Cyclo::root(3, 2).neg();
        assert!(lhs.eq(&rhs));
    }
}
