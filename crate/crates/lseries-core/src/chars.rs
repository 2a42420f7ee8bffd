//! Additive and multiplicative characters with their Gauss sums.
//!
//! The additive character sends `x` to the circle point cut out by the
//! fractional part of its trace, so it is trivial exactly on the integers.
//! Multiplicative characters of level at most two are parametrized by a
//! tame index modulo `q - 1` (through a fixed generator of the residue
//! field) and a wild parameter `b` in the residue field pairing against
//! principal units; the value at the uniformizer is free and carried
//! separately, either as an exact rational or as a complex number.
//!
//! Character sums are assembled from exact roots of unity, which keeps the
//! level sums, Gauss sums, and the closed form of the multiplicative
//! integral checkable without floating error; numeric embeddings happen
//! once at the edge.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero as NumZero};

use crate::padic::{Elem, Field, PadicError};
use crate::roots::{Cyclo, RootOfUnity};

/// `psi(x) = e^{2 pi i {Tr(x)}}`: trivial on the integers, exact root of
/// unity of p-power order below them.
pub fn psi(fld: &Field, x: &Elem) -> Result<RootOfUnity, PadicError> {
    let tr = fld.trace(x);
    match fld.fractional_exponent(&tr)? {
        None => Ok(RootOfUnity::one()),
        Some((num, m)) => {
            let den = num_bigint::BigUint::from(fld.p()).pow(m);
            Ok(RootOfUnity::new(&BigInt::from(num), &den))
        }
    }
}

/// The value of a character at the uniformizer: exact rational or numeric.
#[derive(Debug, Clone)]
pub enum PiValue {
    Exact(BigRational),
    Numeric(Complex64),
}

impl PiValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            PiValue::Exact(r) => Complex64::new(r.to_f64().unwrap_or(f64::NAN), 0.0),
            PiValue::Numeric(z) => *z,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            PiValue::Exact(r) => Some(r),
            PiValue::Numeric(_) => None,
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            PiValue::Exact(r) => r.is_zero(),
            PiValue::Numeric(z) => z.re == 0.0 && z.im == 0.0,
        }
    }
}

/// A multiplicative character of level (conductor exponent) 0, 1, or 2.
///
/// On units it takes exact root-of-unity values; the uniformizer value is
/// the free parameter `at_pi`.  Construction validates primitivity: level
/// 1 needs a nontrivial tame index, level 2 a nonzero wild parameter.
#[derive(Debug, Clone)]
pub struct MultChar {
    fld: Field,
    level: u32,
    tame: u64,
    wild: Vec<u64>,
    at_pi: PiValue,
    /// fixed generator of the residue field's units, as a residue vector
    generator: Vec<u64>,
    dlog: BTreeMap<Vec<u64>, u64>,
}

impl MultChar {
    /// Build a character of the given level.  `tame` is read modulo
    /// `q - 1`; `wild` is a residue vector (must be zero unless the level
    /// is 2, nonzero when it is).
    pub fn new(
        fld: &Field,
        level: u32,
        tame: u64,
        wild: &[u64],
        at_pi: PiValue,
    ) -> Result<Self, PadicError> {
        if level > 2 {
            return Err(PadicError::BadParameter("character level above 2 not supported"));
        }
        if at_pi.is_zero() {
            return Err(PadicError::BadParameter("character value at the uniformizer must be nonzero"));
        }
        if fld.precision() < level.max(1) {
            return Err(PadicError::Precision {
                needed: level.max(1) as i64,
                window: fld.precision() as i64,
            });
        }
        let q = fld.q();
        let tame = if q > 1 { tame % (q - 1).max(1) } else { 0 };
        let mut wild_vec: Vec<u64> = wild.iter().map(|&c| c % fld.p()).collect();
        wild_vec.resize(fld.residue_degree() as usize, 0);
        let wild_zero = wild_vec.iter().all(|&c| c == 0);
        match level {
            0 => {
                if tame != 0 || !wild_zero {
                    return Err(PadicError::BadParameter(
                        "level 0 forces trivial tame and wild parts",
                    ));
                }
            }
            1 => {
                if !wild_zero {
                    return Err(PadicError::BadParameter("level 1 forces a zero wild part"));
                }
                if tame == 0 {
                    return Err(PadicError::BadParameter(
                        "no primitive level-1 character exists with this tame index",
                    ));
                }
            }
            _ => {
                if wild_zero {
                    return Err(PadicError::BadParameter(
                        "level 2 needs a nonzero wild parameter",
                    ));
                }
            }
        }
        let (generator, dlog) = residue_generator(fld)?;
        Ok(MultChar { fld: fld.clone(), level, tame, wild: wild_vec, at_pi, generator, dlog })
    }

    /// Unramified character, determined by its uniformizer value.
    pub fn unramified(fld: &Field, at_pi: PiValue) -> Result<Self, PadicError> {
        Self::new(fld, 0, 0, &[], at_pi)
    }

    pub fn field(&self) -> &Field {
        &self.fld
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn at_pi(&self) -> &PiValue {
        &self.at_pi
    }

    pub fn tame_index(&self) -> u64 {
        self.tame
    }

    pub fn wild_param(&self) -> &[u64] {
        &self.wild
    }

    /// The fixed generator of the residue units used for the tame part.
    pub fn generator(&self) -> &[u64] {
        &self.generator
    }

    /// Value on a unit (valuation zero), as an exact root of unity.
    pub fn eval_unit(&self, x: &Elem) -> Result<RootOfUnity, PadicError> {
        if x.valuation() != Some(0) {
            return Err(PadicError::OutsideDomain("unit evaluation needs valuation zero"));
        }
        if self.level == 0 {
            return Ok(RootOfUnity::one());
        }
        let fld = &self.fld;
        let q = fld.q();
        let res = fld.residue(x)?;
        let d = *self.dlog.get(&res).expect("unit residue is in the table");
        let mut out = RootOfUnity::new(
            &BigInt::from(self.tame * d),
            &num_bigint::BigUint::from(q - 1),
        );
        if self.level == 2 {
            // split off the Teichmueller part: u = w(u)(1 + pi w), with
            // w(u) = u^q modulo pi^2
            let teich = fld.pow(x, q as i64)?;
            let y = fld.div(x, &teich)?;
            let w = fld.div(&fld.sub(&y, &fld.one()), &fld.pi())?;
            let b = fld.elem(0, &self.wild.iter().map(|&c| c as i64).collect::<Vec<_>>());
            let tr = fld.trace(&fld.mul(&b, &w));
            let t0 = fld.residue(&tr)?[0];
            out = out.mul(&RootOfUnity::from_u64(t0, fld.p()));
        }
        Ok(out)
    }

    /// Value on any nonzero element, split as (unit-part root, uniformizer
    /// exponent).
    pub fn eval(&self, x: &Elem) -> Result<(RootOfUnity, i64), PadicError> {
        let v = match x.valuation() {
            None => return Err(PadicError::OutsideDomain("character at zero")),
            Some(v) => v,
        };
        let unit = Elem::Scaled { val: 0, unit: x.unit_digits().expect("nonzero").to_vec() };
        Ok((self.eval_unit(&unit)?, v))
    }

    pub fn eval_complex(&self, x: &Elem) -> Result<Complex64, PadicError> {
        let (root, v) = self.eval(x)?;
        Ok(root.to_complex() * powi(self.at_pi.to_complex(), v))
    }

    /// Exact level sum `sum_{a unit mod pi^level} chi(a) psi(pi^m a)` in
    /// `Q[zeta_L]`; returns the sum together with the ring order `L` used.
    pub fn annulus_unit_sum(&self, m: i64, level: u32) -> Result<(Cyclo, u64), PadicError> {
        let fld = &self.fld;
        let q = fld.q();
        let depth = (-m).max(0) as u32;
        let wild_pow = self.level.max(1).max(depth);
        let p_pow = fld
            .p()
            .checked_pow(wild_pow)
            .ok_or(PadicError::BadParameter("cyclotomic order overflow"))?;
        let order = (q - 1).max(1).lcm(&p_pow);
        let mut acc = Cyclo::zero(order);
        let shift = fld.pow(&fld.pi(), m)?;
        for a in fld.unit_reps(level)? {
            let chi = self.eval_unit(&a)?;
            let add = psi(fld, &fld.mul(&shift, &a))?;
            let term = chi.mul(&add);
            acc = acc.add(&Cyclo::from_root_of_unity(order, &term));
        }
        Ok((acc, order))
    }

    /// Exact unit part of the Gauss sum: `sum_u chi(u) psi(u / pi^level)`
    /// over units at the character's own level.  The full Gauss sum is
    /// this times `chi(pi)^{-level}`.
    pub fn gauss_sum_unit_part(&self) -> Result<(Cyclo, u64), PadicError> {
        if self.level == 0 {
            let order = (self.fld.q() - 1).max(1);
            return Ok((Cyclo::one(order), order));
        }
        self.annulus_unit_sum(-(self.level as i64), self.level)
    }

    /// Numeric Gauss sum, uniformizer factor included.  Level 0 gives 1.
    pub fn gauss_sum(&self) -> Result<Complex64, PadicError> {
        if self.level == 0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let (s, _) = self.gauss_sum_unit_part()?;
        Ok(s.to_complex() * powi(self.at_pi.to_complex(), -(self.level as i64)))
    }

    /// Closed form of `int chi(x) psi(x) dx` over the nonzero elements,
    /// additive Haar measure with the integers of volume 1.
    ///
    /// Level 0: `(1 - chi(pi)^{-1}) / (1 - chi(pi)/q)`, requiring
    /// `|chi(pi)| < q` for convergence.  Positive level: the Gauss sum.
    pub fn closed_integral(&self) -> Result<Complex64, PadicError> {
        if self.level > 0 {
            return self.gauss_sum();
        }
        let q = self.fld.q() as f64;
        let c = self.at_pi.to_complex();
        if c.norm() >= q {
            return Err(PadicError::OutsideDomain(
                "level-0 integral diverges unless |chi(pi)| < q",
            ));
        }
        let one = Complex64::new(1.0, 0.0);
        Ok((one - one / c) / (one - c / q))
    }

    /// Independent evaluation of the same integral: exact unit sums per
    /// annulus, geometric tail bound on the unramified side.
    pub fn integral_oracle(&self, tol: f64) -> Result<Complex64, PadicError> {
        let q = self.fld.q() as f64;
        let c = self.at_pi.to_complex();
        if self.level == 0 && c.norm() >= q {
            return Err(PadicError::OutsideDomain(
                "level-0 integral diverges unless |chi(pi)| < q",
            ));
        }
        let m_lo = -(self.level.max(1) as i64) - 2;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut m = m_lo;
        // running power of chi(pi)/q: the annulus term factors as
        // (c/q)^m * q^-level * sum, and keeping the ratio in one
        // accumulator avoids both the quadratic from-scratch powers and
        // the overflow of c^m against the underflow of q^-m on slowly
        // converging tails
        let ratio = c / q;
        let mut ratio_pow = powi(ratio, m_lo);
        loop {
            let level = self.level.max(1).max((-m).max(0) as u32);
            let (s, _) = self.annulus_unit_sum(m, level)?;
            acc += ratio_pow * s.to_complex() * libm::pow(q, -(level as f64));
            ratio_pow *= ratio;
            m += 1;
            if self.level > 0 {
                if m > 2 {
                    break;
                }
            } else {
                // remaining mass is a geometric series with ratio |c|/q
                let r = c.norm() / q;
                let tail = (1.0 - 1.0 / q) * libm::pow(r, (m.max(0)) as f64) / (1.0 - r);
                if m > 2 && tail < tol {
                    break;
                }
            }
        }
        Ok(acc)
    }
}

fn powi(z: Complex64, e: i64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let base = if e < 0 { Complex64::new(1.0, 0.0) / z } else { z };
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    acc
}

/// First unit (in enumeration order) generating the residue units, plus
/// its discrete-log table.
fn residue_generator(fld: &Field) -> Result<(Vec<u64>, BTreeMap<Vec<u64>, u64>), PadicError> {
    let q = fld.q();
    let order = q - 1;
    let mut found: Option<Elem> = None;
    'cand: for g in fld.unit_reps(1)? {
        if order > 1 {
            for l in prime_divisors_u64(order) {
                let e = fld.pow(&g, (order / l) as i64)?;
                if fld.residue(&e)? == fld.residue(&fld.one())? {
                    continue 'cand;
                }
            }
        }
        found = Some(g);
        break;
    }
    let g = found.ok_or(PadicError::BadParameter("no generator found"))?;
    let mut dlog = BTreeMap::new();
    let mut cur = fld.one();
    for d in 0..order {
        dlog.insert(fld.residue(&cur)?, d);
        cur = fld.mul(&cur, &g);
    }
    Ok((fld.residue(&g)?, dlog))
}

fn prime_divisors_u64(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn additive_character_basics() {
        let k = Field::new(5, 1, 8).unwrap();
        assert!(psi(&k, &k.from_int(3)).unwrap().is_one());
        assert!(psi(&k, &k.zero()).unwrap().is_one());
        let fifth = psi(&k, &k.from_rational(1, 5).unwrap()).unwrap();
        assert_eq!(fifth, RootOfUnity::from_u64(1, 5));
        let x = k.from_rational(7, 25).unwrap();
        assert_eq!(psi(&k, &x).unwrap(), RootOfUnity::from_u64(7, 25));
        // additivity
        let y = k.from_rational(2, 5).unwrap();
        let lhs = psi(&k, &k.add(&x, &y)).unwrap();
        assert_eq!(lhs, psi(&k, &x).unwrap().mul(&psi(&k, &y).unwrap()));
    }

    #[test]
    fn additive_character_uses_the_trace() {
        // modulus t^2 + 2 over Q_5: Tr(t) = 0, so t/5 is invisible
        let k = Field::new(5, 2, 8).unwrap();
        let x = k.elem(-1, &[0, 1]);
        assert!(psi(&k, &x).unwrap().is_one());
        // Tr(1/5) = 2/5
        let y = k.elem(-1, &[1]);
        assert_eq!(psi(&k, &y).unwrap(), RootOfUnity::from_u64(2, 5));
    }

    #[test]
    fn construction_validates_levels() {
        let q2 = Field::new(2, 1, 8).unwrap();
        // no primitive level-1 character exists over the 2-adics
        assert!(MultChar::new(&q2, 1, 0, &[], PiValue::Exact(rat(1, 1))).is_err());
        // but the level-2 quadratic character does
        assert!(MultChar::new(&q2, 2, 0, &[1], PiValue::Exact(rat(1, 1))).is_ok());
        let q5 = Field::new(5, 1, 8).unwrap();
        assert!(MultChar::new(&q5, 1, 2, &[], PiValue::Exact(rat(1, 1))).is_ok());
        assert!(MultChar::new(&q5, 1, 0, &[], PiValue::Exact(rat(1, 1))).is_err());
        assert!(MultChar::new(&q5, 2, 1, &[0], PiValue::Exact(rat(1, 1))).is_err());
        assert!(MultChar::new(&q5, 0, 0, &[], PiValue::Exact(rat(0, 1))).is_err());
    }

    #[test]
    fn characters_are_multiplicative() {
        let k = Field::new(5, 2, 8).unwrap();
        let chi = MultChar::new(&k, 2, 3, &[2, 1], PiValue::Numeric(Complex64::new(0.0, 1.0)))
            .unwrap();
        let pairs = [
            (k.elem(0, &[2, 3]), k.elem(0, &[1, 1])),
            (k.elem(0, &[4, 0]), k.elem(0, &[3, 2])),
            (k.elem(1, &[1, 2]), k.elem(-2, &[2, 0])),
        ];
        for (x, y) in pairs {
            let (rx, vx) = chi.eval(&x).unwrap();
            let (ry, vy) = chi.eval(&y).unwrap();
            let (rxy, vxy) = chi.eval(&k.mul(&x, &y)).unwrap();
            assert_eq!(rxy, rx.mul(&ry));
            assert_eq!(vxy, vx + vy);
        }
        assert!(chi.eval(&k.zero()).is_err());
    }

    #[test]
    fn unramified_character_is_trivial_on_units() {
        let k = Field::new(3, 2, 6).unwrap();
        let chi = MultChar::unramified(&k, PiValue::Numeric(Complex64::new(0.5, 0.25))).unwrap();
        let (r, v) = chi.eval(&k.elem(2, &[2, 1])).unwrap();
        assert!(r.is_one());
        assert_eq!(v, 2);
    }

    #[test]
    fn quadratic_gauss_sum_is_exact() {
        // the level-1 quadratic character modulo 5 has Gauss sum sqrt(5)
        let k = Field::new(5, 1, 8).unwrap();
        let chi = MultChar::new(&k, 1, 2, &[], PiValue::Exact(rat(1, 1))).unwrap();
        let (g, order) = chi.gauss_sum_unit_part().unwrap();
        assert_eq!(order, 20);
        let sq = g.mul(&g).as_rational().unwrap();
        assert_eq!(sq, rat(5, 1));
    }

    #[test]
    fn gauss_sums_have_the_right_modulus() {
        for (p, f, level, tame, wild) in [
            (3u64, 1u32, 1u32, 1u64, vec![]),
            (3, 1, 2, 1, vec![1]),
            (5, 1, 2, 3, vec![2]),
            (2, 1, 2, 0, vec![1]),
            (3, 2, 1, 5, vec![]),
            (3, 2, 2, 2, vec![1, 2]),
        ] {
            let k = Field::new(p, f, 8).unwrap();
            let chi = MultChar::new(&k, level, tame, &wild, PiValue::Exact(rat(1, 1))).unwrap();
            let (g, _) = chi.gauss_sum_unit_part().unwrap();
            let qf = BigRational::from_integer(BigInt::from(k.q().pow(level)));
            // g * conj(g) = q^level, exactly
            let norm = g.mul(&g.conj()).as_rational().unwrap();
            assert_eq!(norm, qf, "p={p} f={f} level={level} tame={tame}");
            let numeric = chi.gauss_sum().unwrap().norm();
            let expect = (k.q() as f64).powf(level as f64 / 2.0);
            assert!((numeric - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn level_sums_vanish_off_the_conductor() {
        // for a level-2 character the unit sum at shift -1 dies
        let k = Field::new(5, 1, 8).unwrap();
        let chi = MultChar::new(&k, 2, 1, &[1], PiValue::Exact(rat(1, 1))).unwrap();
        let (s, _) = chi.annulus_unit_sum(-1, 2).unwrap();
        assert!(s.is_zero());
        // and for a level-1 character the shift-0 sum dies too
        let chi1 = MultChar::new(&k, 1, 1, &[], PiValue::Exact(rat(1, 1))).unwrap();
        let (s0, _) = chi1.annulus_unit_sum(0, 1).unwrap();
        assert!(s0.is_zero());
    }

    #[test]
    fn closed_integral_matches_annulus_sums() {
        let k = Field::new(5, 1, 8).unwrap();
        let cases: Vec<MultChar> = vec![
            MultChar::unramified(&k, PiValue::Numeric(Complex64::new(0.3, -0.7))).unwrap(),
            MultChar::unramified(&k, PiValue::Exact(rat(3, 2))).unwrap(),
            MultChar::new(&k, 1, 2, &[], PiValue::Numeric(Complex64::new(0.0, 2.0))).unwrap(),
            MultChar::new(&k, 2, 3, &[4], PiValue::Numeric(Complex64::new(-1.0, 0.5))).unwrap(),
        ];
        for chi in &cases {
            let closed = chi.closed_integral().unwrap();
            let oracle = chi.integral_oracle(1e-12).unwrap();
            let denom = closed.norm().max(1e-30);
            assert!(
                (closed - oracle).norm() / denom < 1e-9,
                "level {} closed {closed} oracle {oracle}",
                chi.level()
            );
        }
        // divergence guard
        let bad = MultChar::unramified(&k, PiValue::Exact(rat(6, 1))).unwrap();
        assert!(bad.closed_integral().is_err());
    }

    #[test]
    fn unramified_integral_over_residue_degree_two() {
        let k = Field::new(3, 2, 8).unwrap();
        let chi = MultChar::unramified(&k, PiValue::Numeric(Complex64::new(1.5, 1.0))).unwrap();
        let closed = chi.closed_integral().unwrap();
        let oracle = chi.integral_oracle(1e-12).unwrap();
        assert!((closed - oracle).norm() / closed.norm() < 1e-9);
    }
}
