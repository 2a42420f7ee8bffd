//! Measure attached to an unramified-principal-series or Steinberg-type
//! local representation.
//!
//! The representation is recorded through its Satake pair `(alpha1, alpha2)`;
//! the associated measure on the nonzero elements has the closed coset values
//!
//! ```text
//!   mu(a (1 + pi^k O)) = beta^{ord a} psi(a) q^{-(k + ord a)},   beta = q / alpha2,
//! ```
//!
//! vanishing when `k + ord a < 0`.  Everything downstream — Whittaker values,
//! the twisted character integrals, and the correction (Euler-type) factors
//! that tie those integrals to the local L-factor — is computed from this one
//! formula, with an exact cyclotomic path whenever the inputs are rational.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::chars::{psi, MultChar, PiValue};
use crate::padic::{Elem, Field, PadicError};
use crate::roots::{Cyclo, RootOfUnity};
use crate::tree::scalars::rational_pow;

/// Errors from the local-measure layer.
#[derive(Debug, Clone, PartialEq)]
pub enum LocalError {
    Padic(PadicError),
    /// The Satake pair does not match the declared kind.
    BadPair(&'static str),
    /// A yes/no question that needs exact input was asked of numeric data.
    NotCertifiable(&'static str),
    /// The measure of a ball through zero was requested with `beta != 1`.
    ZeroInSupport,
    /// Cosets meant to be pairwise disjoint overlap.
    Overlap,
    Pole(&'static str),
    Divergent(&'static str),
    /// A semilocal product was fed mismatched lists.
    ArityMismatch { places: usize, sets: usize },
}

impl core::fmt::Display for LocalError {
    fn fmt(&self, fmt: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LocalError::Padic(e) => write!(fmt, "{e}"),
            LocalError::BadPair(msg) => write!(fmt, "bad Satake pair: {msg}"),
            LocalError::NotCertifiable(msg) => write!(fmt, "not certifiable: {msg}"),
            LocalError::ZeroInSupport => write!(
                fmt,
                "a ball through zero has no measure unless beta = 1"
            ),
            LocalError::Overlap => write!(fmt, "cosets overlap"),
            LocalError::Pole(msg) => write!(fmt, "pole: {msg}"),
            LocalError::Divergent(msg) => write!(fmt, "divergent: {msg}"),
            LocalError::ArityMismatch { places, sets } => write!(
                fmt,
                "semilocal product needs one set per place, got {places} places and {sets} sets"
            ),
        }
    }
}

impl From<PadicError> for LocalError {
    fn from(e: PadicError) -> Self {
        LocalError::Padic(e)
    }
}

/// Whether the pair comes from a full principal series or its special
/// (Steinberg-type) quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepKind {
    Spherical,
    Special,
}

/// A local representation through its Satake pair.
///
/// The pair is stored numerically; exact rational values (when the pair is
/// rational) and exact trace/norm data `(a, nu) = (alpha1 + alpha2,
/// alpha1 alpha2 / q)` (available even when the pair itself is irrational)
/// ride along when known.  A special pair must be ordered so that
/// `alpha2 = q * alpha1`; the reversed order is rejected rather than fixed.
#[derive(Debug, Clone)]
pub struct LocalRep {
    fld: Field,
    kind: RepKind,
    alpha1: Complex64,
    alpha2: Complex64,
    exact_alphas: Option<(BigRational, BigRational)>,
    exact_trace_norm: Option<(BigRational, BigRational)>,
}

fn close(x: Complex64, y: Complex64) -> bool {
    (x - y).norm() <= 1e-9 * (x.norm() + y.norm() + 1.0)
}

impl LocalRep {
    /// Build from an exact rational Satake pair.
    pub fn from_exact(
        fld: &Field,
        kind: RepKind,
        alpha1: BigRational,
        alpha2: BigRational,
    ) -> Result<Self, LocalError> {
        if alpha1.is_zero() || alpha2.is_zero() {
            return Err(LocalError::BadPair("both entries must be nonzero"));
        }
        let q = BigRational::from_integer(BigInt::from(fld.q()));
        let is_special_order = alpha2 == &q * &alpha1;
        let is_reversed = alpha1 == &q * &alpha2;
        match kind {
            RepKind::Special => {
                if is_reversed && !is_special_order {
                    return Err(LocalError::BadPair(
                        "special pair must be ordered as (alpha, q * alpha)",
                    ));
                }
                if !is_special_order {
                    return Err(LocalError::BadPair("special kind needs alpha2 = q * alpha1"));
                }
            }
            RepKind::Spherical => {
                if is_special_order || is_reversed {
                    return Err(LocalError::BadPair(
                        "ratio q between the entries means the pair is special",
                    ));
                }
            }
        }
        let a = &alpha1 + &alpha2;
        let nu = &alpha1 * &alpha2 / &q;
        Ok(LocalRep {
            fld: fld.clone(),
            kind,
            alpha1: rat_to_complex(&alpha1),
            alpha2: rat_to_complex(&alpha2),
            exact_alphas: Some((alpha1, alpha2)),
            exact_trace_norm: Some((a, nu)),
        })
    }

    /// Build from a numeric Satake pair.  Kind validation is up to a relative
    /// `1e-9`; exact questions (ordinarity, exact integrals) will refuse this
    /// data until [`LocalRep::with_trace_norm`] supplies certified values.
    pub fn from_complex(
        fld: &Field,
        kind: RepKind,
        alpha1: Complex64,
        alpha2: Complex64,
    ) -> Result<Self, LocalError> {
        if alpha1.norm() == 0.0 || alpha2.norm() == 0.0 {
            return Err(LocalError::BadPair("both entries must be nonzero"));
        }
        let q = fld.q() as f64;
        let is_special_order = close(alpha2, alpha1.scale(q));
        let is_reversed = close(alpha1, alpha2.scale(q));
        match kind {
            RepKind::Special => {
                if is_reversed && !is_special_order {
                    return Err(LocalError::BadPair(
                        "special pair must be ordered as (alpha, q * alpha)",
                    ));
                }
                if !is_special_order {
                    return Err(LocalError::BadPair("special kind needs alpha2 = q * alpha1"));
                }
            }
            RepKind::Spherical => {
                if is_special_order || is_reversed {
                    return Err(LocalError::BadPair(
                        "ratio q between the entries means the pair is special",
                    ));
                }
            }
        }
        Ok(LocalRep {
            fld: fld.clone(),
            kind,
            alpha1,
            alpha2,
            exact_alphas: None,
            exact_trace_norm: None,
        })
    }

    /// The Steinberg pair `(1, q)`.
    pub fn steinberg(fld: &Field) -> Self {
        Self::from_exact(
            fld,
            RepKind::Special,
            BigRational::one(),
            BigRational::from_integer(BigInt::from(fld.q())),
        )
        .expect("the Steinberg pair is always valid")
    }

    /// Attach exact trace/norm data `(a, nu)` to a numeric pair, e.g. when
    /// the pair consists of irrational conjugates of a rational polynomial.
    pub fn with_trace_norm(
        mut self,
        a: BigRational,
        nu: BigRational,
    ) -> Result<Self, LocalError> {
        let q = self.fld.q() as f64;
        if !close(self.alpha1 + self.alpha2, rat_to_complex(&a))
            || !close(self.alpha1 * self.alpha2, rat_to_complex(&nu).scale(q))
        {
            return Err(LocalError::BadPair("trace/norm data does not match the pair"));
        }
        self.exact_trace_norm = Some((a, nu));
        Ok(self)
    }

    pub fn field(&self) -> &Field {
        &self.fld
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn alpha1(&self) -> Complex64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> Complex64 {
        self.alpha2
    }

    pub fn exact_alphas(&self) -> Option<&(BigRational, BigRational)> {
        self.exact_alphas.as_ref()
    }

    /// Exact `(alpha1 + alpha2, alpha1 alpha2 / q)` when certified.
    pub fn exact_trace_norm(&self) -> Option<&(BigRational, BigRational)> {
        self.exact_trace_norm.as_ref()
    }

    /// `nu = alpha1 alpha2 / q`, the central unramified twist parameter.
    pub fn nu(&self) -> Complex64 {
        self.alpha1 * self.alpha2 / self.fld.q() as f64
    }

    /// `beta = q / alpha2 = alpha1 / nu`, the coset-measure eigenvalue.
    pub fn beta(&self) -> Complex64 {
        Complex64::new(self.fld.q() as f64, 0.0) / self.alpha2
    }

    pub fn beta_exact(&self) -> Option<BigRational> {
        let (_, a2) = self.exact_alphas.as_ref()?;
        Some(BigRational::from_integer(BigInt::from(self.fld.q())) / a2)
    }

    /// Whether `beta = 1` (equivalently `alpha2 = q`), the only case where
    /// the measure extends over zero.  Exact when the pair is exact.
    pub fn beta_is_one(&self) -> bool {
        match &self.exact_alphas {
            Some((_, a2)) => *a2 == BigRational::from_integer(BigInt::from(self.fld.q())),
            None => (self.beta() - Complex64::new(1.0, 0.0)).norm() <= 1e-12,
        }
    }

    /// Ordinarity: both `a = alpha1 + alpha2` and `nu` are units of the
    /// integer ring.  This is decided from exact trace/norm data only; a
    /// numeric pair cannot certify a valuation and is refused.
    pub fn is_ordinary(&self) -> Result<bool, LocalError> {
        let Some((a, nu)) = &self.exact_trace_norm else {
            return Err(LocalError::NotCertifiable(
                "ordinarity needs exact trace/norm data",
            ));
        };
        if a.is_zero() {
            return Ok(false);
        }
        Ok(vp_rat(a, self.fld.p()) == Some(0) && vp_rat(nu, self.fld.p()) == Some(0))
    }
}

fn rat_to_complex(r: &BigRational) -> Complex64 {
    let num = r.numer().to_f64().unwrap_or(f64::NAN);
    let den = r.denom().to_f64().unwrap_or(f64::NAN);
    Complex64::new(num / den, 0.0)
}

fn vp_big(n: &BigInt, p: &BigInt) -> i64 {
    let mut k = 0;
    let mut n = n.abs();
    while !n.is_zero() && (&n % p).is_zero() {
        n /= p;
        k += 1;
    }
    k
}

/// p-adic valuation of a rational, `None` at zero.
pub fn vp_rat(x: &BigRational, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    Some(vp_big(x.numer(), &p) - vp_big(x.denom(), &p))
}

/// A compact open subset of the field, kept as a list of pairwise-disjoint
/// balls `a + pi^n O`.  Multiplicative cosets `a U^(k)` enter as the single
/// ball `a + pi^(k + ord a) O` (for `k >= 1`) or as their `q - 1` unit
/// refinements (for `k = 0`).
#[derive(Debug, Clone)]
pub struct CompactOpen {
    balls: Vec<(Elem, i64)>,
}

impl CompactOpen {
    /// Validates pairwise disjointness: two balls meet exactly when the
    /// coarser contains the finer's centre.
    pub fn from_balls(fld: &Field, balls: Vec<(Elem, i64)>) -> Result<Self, LocalError> {
        for (a, n) in &balls {
            if let Some(v) = a.valuation() {
                if *n - v > fld.precision() as i64 {
                    return Err(LocalError::Padic(PadicError::Precision {
                        needed: *n - v,
                        window: fld.precision() as i64,
                    }));
                }
            }
        }
        for i in 0..balls.len() {
            for j in (i + 1)..balls.len() {
                let d = fld.sub(&balls[i].0, &balls[j].0);
                let meet = match d.valuation() {
                    None => true,
                    Some(v) => v >= balls[i].1.min(balls[j].1),
                };
                if meet {
                    return Err(LocalError::Overlap);
                }
            }
        }
        Ok(CompactOpen { balls })
    }

    /// One ball `a + pi^n O`.
    pub fn ball(fld: &Field, a: &Elem, n: i64) -> Result<Self, LocalError> {
        Self::from_balls(fld, vec![(a.clone(), n)])
    }

    /// Disjoint multiplicative cosets `a U^(k)`; representatives must be
    /// nonzero.  Level 0 means the full unit coset `a O^*`.
    pub fn from_mult_cosets(fld: &Field, cosets: &[(Elem, u32)]) -> Result<Self, LocalError> {
        let mut balls = Vec::new();
        for (a, k) in cosets {
            let Some(v) = a.valuation() else {
                return Err(LocalError::Padic(PadicError::OutsideDomain(
                    "multiplicative coset needs a nonzero representative",
                )));
            };
            if *k == 0 {
                for u in fld.unit_reps(1)? {
                    balls.push((fld.mul(a, &u), v + 1));
                }
            } else {
                balls.push((a.clone(), v + *k as i64));
            }
        }
        Self::from_balls(fld, balls)
    }

    /// The single coset `a U^(k)`.
    pub fn mult_coset(fld: &Field, a: &Elem, k: u32) -> Result<Self, LocalError> {
        Self::from_mult_cosets(fld, &[(a.clone(), k)])
    }

    /// The unit group `O^*`.
    pub fn units(fld: &Field) -> Result<Self, LocalError> {
        Self::mult_coset(fld, &fld.one(), 0)
    }

    /// The annulus `ord = m`, refined into unit cosets of the given level.
    pub fn annulus(fld: &Field, m: i64, level: u32) -> Result<Self, LocalError> {
        let level = level.max(1);
        let shift = fld.pow(&fld.pi(), m)?;
        let mut balls = Vec::new();
        for u in fld.unit_reps(level)? {
            balls.push((fld.mul(&shift, &u), m + level as i64));
        }
        Self::from_balls(fld, balls)
    }

    /// Split every ball down to radius at least `n` (balls already finer are
    /// kept as they are).
    pub fn refine(&self, fld: &Field, n: i64) -> Result<Self, LocalError> {
        let mut balls = Vec::new();
        for (a, m) in &self.balls {
            if *m >= n {
                balls.push((a.clone(), *m));
                continue;
            }
            let step = fld.pow(&fld.pi(), *m)?;
            for r in fld.residue_reps((n - m) as u32)? {
                balls.push((fld.add(a, &fld.mul(&step, &r)), n));
            }
        }
        Self::from_balls(fld, balls)
    }

    pub fn balls(&self) -> &[(Elem, i64)] {
        &self.balls
    }

    pub fn contains_zero(&self) -> bool {
        self.balls
            .iter()
            .any(|(a, n)| a.valuation().is_none_or(|v| v >= *n))
    }
}

/// One closed-form coset value `root * beta^be * q^qe`.
struct MuTerm {
    root: RootOfUnity,
    beta_exp: i64,
    q_exp: i64,
}

/// Closed form on one ball.  `None` means the value is zero (balls coarser
/// than the integers carry no mass).  Balls through zero are only measurable
/// when `beta = 1`, where the value degenerates to the plain additive one.
fn mu_term(
    fld: &Field,
    a: &Elem,
    n: i64,
    beta_is_one: bool,
) -> Result<Option<MuTerm>, LocalError> {
    let zero_in = a.valuation().is_none_or(|v| v >= n);
    if zero_in && !beta_is_one {
        return Err(LocalError::ZeroInSupport);
    }
    if n < 0 {
        return Ok(None);
    }
    if zero_in {
        // the centre lies in pi^n O, where the additive character is trivial
        return Ok(Some(MuTerm { root: RootOfUnity::one(), beta_exp: 0, q_exp: -n }));
    }
    let m = a.valuation().expect("zero-free ball has a nonzero centre");
    Ok(Some(MuTerm { root: psi(fld, a)?, beta_exp: m, q_exp: -n }))
}

/// The measure itself, bound to one representation.
#[derive(Debug, Clone)]
pub struct LocalDist {
    rep: LocalRep,
}

impl LocalDist {
    pub fn new(rep: LocalRep) -> Self {
        LocalDist { rep }
    }

    pub fn rep(&self) -> &LocalRep {
        &self.rep
    }

    /// Numeric value on a compact open set.
    pub fn eval(&self, s: &CompactOpen) -> Result<Complex64, LocalError> {
        let fld = self.rep.field();
        let beta = self.rep.beta();
        let beta_one = self.rep.beta_is_one();
        let q = fld.q() as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, n) in s.balls() {
            if let Some(t) = mu_term(fld, a, *n, beta_one)? {
                acc += t.root.to_complex() * powc(beta, t.beta_exp) * libm::pow(q, t.q_exp as f64);
            }
        }
        Ok(acc)
    }

    /// Exact value in a cyclotomic ring; needs a rational `beta`.  Returns
    /// the value together with the ring order used.
    pub fn eval_exact(&self, s: &CompactOpen) -> Result<(Cyclo, u64), LocalError> {
        let Some(beta) = self.rep.beta_exact() else {
            return Err(LocalError::NotCertifiable(
                "exact evaluation needs an exact Satake pair",
            ));
        };
        let fld = self.rep.field();
        let beta_one = beta.is_one();
        let mut terms = Vec::new();
        for (a, n) in s.balls() {
            if let Some(t) = mu_term(fld, a, *n, beta_one)? {
                terms.push(t);
            }
        }
        let mut order: u64 = 1;
        for t in &terms {
            let o = t
                .root
                .order()
                .to_u64()
                .ok_or(PadicError::BadParameter("cyclotomic order overflow"))?;
            order = order.lcm(&o);
        }
        let q = BigRational::from_integer(BigInt::from(fld.q()));
        let mut acc = Cyclo::zero(order);
        for t in &terms {
            let scalar = rational_pow(&beta, t.beta_exp) * rational_pow(&q, t.q_exp);
            acc = acc.add(&Cyclo::from_root_of_unity(order, &t.root).scale(&scalar));
        }
        Ok((acc, order))
    }
}

pub(crate) fn cexp(z: Complex64) -> Complex64 {
    let r = libm::exp(z.re);
    Complex64::new(r * libm::cos(z.im), r * libm::sin(z.im))
}

pub(crate) fn powc(z: Complex64, e: i64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let base = if e < 0 { Complex64::new(1.0, 0.0) / z } else { z };
    for _ in 0..e.unsigned_abs() {
        acc *= base;
    }
    acc
}

/// Whittaker value `W_H(diag(a, 1)) := mu(a U^(level))` for `H = U^(level)`.
pub fn whittaker_wh(rep: &LocalRep, level: u32, a: &Elem) -> Result<Complex64, LocalError> {
    let s = CompactOpen::mult_coset(rep.field(), a, level)?;
    LocalDist::new(rep.clone()).eval(&s)
}

/// Exact check of the averaging identity behind the Whittaker values: for
/// the indicator of `a U^(m)` with `m <= n` and `H = U^(n)`,
///
/// ```text
///   mu(a U^(m))  =  [U : H] * sum_c W_H(a c) vol^x(a c H),
/// ```
///
/// the sum over coset representatives `c` of `U^(m) / U^(n)`.  Both sides are
/// returned exactly in a common cyclotomic ring.
pub fn whittaker_average_check(
    rep: &LocalRep,
    a: &Elem,
    m: u32,
    n: u32,
) -> Result<(Cyclo, Cyclo, u64), LocalError> {
    if n == 0 || m > n {
        return Err(LocalError::BadPair("the check needs 0 <= m <= n with n >= 1"));
    }
    let fld = rep.field();
    let dist = LocalDist::new(rep.clone());
    let (lhs, lhs_order) = dist.eval_exact(&CompactOpen::mult_coset(fld, a, m)?)?;

    let q = BigInt::from(fld.q());
    // [U : U^(n)] = (q - 1) q^(n - 1), and each coset has multiplicative
    // volume 1 / [U : U^(n)] when the units carry volume 1
    let index = BigRational::from_integer((&q - 1) * q.pow(n - 1));
    let covol = index.recip();

    let reps: Vec<Elem> = if m == 0 {
        fld.unit_reps(n)?
    } else {
        let step = fld.pow(&fld.pi(), m as i64)?;
        fld.residue_reps(n - m)?
            .iter()
            .map(|r| fld.add(&fld.one(), &fld.mul(&step, r)))
            .collect()
    };

    let mut rhs = Cyclo::zero(lhs_order);
    let mut order = lhs_order;
    for c in &reps {
        let (w, o) = dist.eval_exact(&CompactOpen::mult_coset(fld, &fld.mul(a, c), n)?)?;
        order = order.lcm(&o);
        rhs = rhs.lift(order).add(&w.lift(order).scale(&(&index * &covol)));
    }
    Ok((lhs.lift(order), rhs, order))
}

/// The local L-factor evaluated against a character of the given level, at
/// the point `s` (the balanced normalisation: the factor depends on
/// `chi(pi) q^{-(s + 1/2)}`).  Ramified twists give 1.
pub fn l_factor(rep: &LocalRep, chi: &MultChar, s: Complex64) -> Result<Complex64, LocalError> {
    if chi.level() > 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let q = rep.field().q() as f64;
    let c = chi.at_pi().to_complex();
    let w = c * cexp(-(s + Complex64::new(0.5, 0.0)) * libm::log(q));
    let one = Complex64::new(1.0, 0.0);
    let den = match rep.kind() {
        RepKind::Spherical => (one - rep.alpha1() * w) * (one - rep.alpha2() * w),
        RepKind::Special => one - rep.alpha1() * w,
    };
    if den.norm() <= 1e-12 * (1.0 + (rep.alpha1() * w).norm() + (rep.alpha2() * w).norm()) {
        return Err(LocalError::Pole("the L-factor has a pole at this point"));
    }
    Ok(one / den)
}

/// Numeric correction factor `e(alpha1, alpha2, chi(pi))` for a level-`f`
/// twist:
///
/// * `f > 0`: `(alpha2 / q)^f`;
/// * `f = 0`, spherical: `(1 - alpha1 c / q)(1 - alpha2 / (c q))(1 - alpha2 c / q) / (1 - c / alpha2)`;
/// * `f = 0`, special: the same without the third numerator factor.
///
/// At `c = alpha2` the factor has a pole unless `nu = 1`, where the offending
/// numerator factor cancels the denominator exactly and the cancelled form is
/// used.
pub fn euler_factor(rep: &LocalRep, chi: &MultChar) -> Result<Complex64, LocalError> {
    let q = rep.field().q() as f64;
    let f = chi.level();
    if f > 0 {
        return Ok(powc(rep.alpha2() / q, f as i64));
    }
    let c = chi.at_pi().to_complex();
    let one = Complex64::new(1.0, 0.0);
    let a1 = rep.alpha1();
    let a2 = rep.alpha2();
    let nu_is_one = match rep.exact_alphas() {
        Some((x1, x2)) => {
            (x1 * x2) == BigRational::from_integer(BigInt::from(rep.field().q()))
        }
        None => (rep.nu() - one).norm() <= 1e-12,
    };
    if nu_is_one {
        // (1 - alpha1 c / q) = (1 - c / alpha2) when alpha1 alpha2 = q
        let tail = one - a2 / (c * q);
        return Ok(match rep.kind() {
            RepKind::Spherical => tail * (one - a2 * c / q),
            RepKind::Special => tail,
        });
    }
    let den = one - c / a2;
    if den.norm() <= 1e-12 * (1.0 + (c / a2).norm()) {
        return Err(LocalError::Pole(
            "the correction factor has a pole where the twist value meets alpha2",
        ));
    }
    let num = match rep.kind() {
        RepKind::Spherical => (one - a1 * c / q) * (one - a2 / (c * q)) * (one - a2 * c / q),
        RepKind::Special => (one - a1 * c / q) * (one - a2 / (c * q)),
    };
    Ok(num / den)
}

/// Exact twin of [`euler_factor`] for a rational pair and rational twist
/// value at the uniformizer.
pub fn euler_factor_exact(
    rep: &LocalRep,
    c: &BigRational,
    f: u32,
) -> Result<BigRational, LocalError> {
    let Some((a1, a2)) = rep.exact_alphas() else {
        return Err(LocalError::NotCertifiable(
            "the exact correction factor needs an exact Satake pair",
        ));
    };
    let q = BigRational::from_integer(BigInt::from(rep.field().q()));
    if f > 0 {
        return Ok(rational_pow(&(a2 / &q), f as i64));
    }
    if c.is_zero() {
        return Err(LocalError::BadPair("the twist value at the uniformizer is nonzero"));
    }
    let one = BigRational::one();
    if a1 * a2 == q {
        let tail = &one - &(a2 / &(c * &q));
        return Ok(match rep.kind() {
            RepKind::Spherical => &tail * &(&one - &(&(a2 * c) / &q)),
            RepKind::Special => tail,
        });
    }
    let den = &one - &(c / a2);
    if den.is_zero() {
        return Err(LocalError::Pole(
            "the correction factor has a pole where the twist value meets alpha2",
        ));
    }
    let num = match rep.kind() {
        RepKind::Spherical => {
            (&one - &(&(a1 * c) / &q)) * (&one - &(a2 / &(c * &q))) * (&one - &(&(a2 * c) / &q))
        }
        RepKind::Special => (&one - &(&(a1 * c) / &q)) * (&one - &(a2 / &(c * &q))),
    };
    Ok(num / den)
}

/// A truncated integral value with its reported truncation bound.
#[derive(Debug, Clone, Copy)]
pub struct CharIntegral {
    pub value: Complex64,
    /// Bound on the discarded tail; zero when the sum is exact.
    pub tail_bound: f64,
}

/// `int chi(x) beta^{ord x} psi(x) dx` over the nonzero elements: the twisted
/// character integral the measure represents.  Ramified twists terminate
/// exactly; unramified ones need `|chi(pi)| < |alpha2|` and are truncated
/// once the geometric tail drops below `tol / 10` (the bound is reported).
pub fn integrate_char(
    rep: &LocalRep,
    chi: &MultChar,
    tol: f64,
) -> Result<CharIntegral, LocalError> {
    let beta = rep.beta();
    if chi.level() == 0 && chi.at_pi().to_complex().norm() >= rep.alpha2().norm() {
        return Err(LocalError::Divergent(
            "the unramified integral needs |chi(pi)| < |alpha2|",
        ));
    }
    let at_pi = match (chi.at_pi(), rep.beta_exact()) {
        (PiValue::Exact(c), Some(b)) => PiValue::Exact(c * &b),
        (c, _) => PiValue::Numeric(c.to_complex() * beta),
    };
    let twisted = MultChar::new(
        chi.field(),
        chi.level(),
        chi.tame_index(),
        chi.wild_param(),
        at_pi,
    )?;
    let value = twisted.integral_oracle(tol / 10.0)?;
    let tail_bound = if chi.level() == 0 { tol / 10.0 } else { 0.0 };
    Ok(CharIntegral { value, tail_bound })
}

/// Exact twisted integral for a ramified character, computed through the
/// measure itself: every annulus `ord = m` for `m` in `[-f - 2, 2]` is
/// refined into balls on which both the character and the measure are
/// constant, and the ball values are summed in `Q[zeta]`.  Annuli beyond the
/// window vanish by orthogonality; the window's extra entries double-check
/// that.
pub fn integrate_char_exact(rep: &LocalRep, chi: &MultChar) -> Result<(Cyclo, u64), LocalError> {
    let f = chi.level();
    if f == 0 {
        return Err(LocalError::Divergent(
            "the unramified integral has unbounded support; use the numeric path",
        ));
    }
    let Some(beta) = rep.beta_exact() else {
        return Err(LocalError::NotCertifiable(
            "the exact integral needs an exact Satake pair",
        ));
    };
    let PiValue::Exact(c) = chi.at_pi() else {
        return Err(LocalError::NotCertifiable(
            "the exact integral needs an exact twist value at the uniformizer",
        ));
    };
    let fld = rep.field();
    let beta_one = beta.is_one();
    let q = BigRational::from_integer(BigInt::from(fld.q()));
    let order = prop_order(fld, f)?;
    let mut acc = Cyclo::zero(order);
    for m in -(f as i64) - 2..=2 {
        let level = (f.max(1) as i64).max(-m) as u32;
        let annulus = CompactOpen::annulus(fld, m, level)?;
        for (x, n) in annulus.balls() {
            let Some(t) = mu_term(fld, x, *n, beta_one)? else { continue };
            let (chi_root, v) = chi.eval(x)?;
            debug_assert_eq!(v, m);
            let root = chi_root.mul(&t.root);
            let scalar = rational_pow(c, v)
                * rational_pow(&beta, t.beta_exp)
                * rational_pow(&q, t.q_exp);
            acc = acc.add(&Cyclo::from_root_of_unity(order, &root).scale(&scalar));
        }
    }
    Ok((acc, order))
}

/// Cyclotomic order large enough for every annulus in the exact window.
fn prop_order(fld: &Field, f: u32) -> Result<u64, LocalError> {
    let p_pow = fld
        .p()
        .checked_pow(f + 2)
        .ok_or(PadicError::BadParameter("cyclotomic order overflow"))?;
    Ok((fld.q() - 1).max(1).lcm(&p_pow))
}

/// Both sides of the numeric factorisation `int chi beta^ord psi dx =
/// e(alpha1, alpha2, chi(pi)) tau(chi) L(1/2, chi)`.
#[derive(Debug, Clone, Copy)]
pub struct FactorizationSides {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub tail_bound: f64,
}

/// Numeric factorisation check at any level.
pub fn factorization_sides(
    rep: &LocalRep,
    chi: &MultChar,
    tol: f64,
) -> Result<FactorizationSides, LocalError> {
    let lhs = integrate_char(rep, chi, tol)?;
    let e = euler_factor(rep, chi)?;
    let tau = chi.gauss_sum()?;
    let l = l_factor(rep, chi, Complex64::new(0.5, 0.0))?;
    Ok(FactorizationSides { lhs: lhs.value, rhs: e * tau * l, tail_bound: lhs.tail_bound })
}

/// Exact factorisation check for ramified twists: the measure-side integral
/// against `e * tau * L` with `L = 1`, both in the same cyclotomic ring.
pub fn factorization_sides_exact(
    rep: &LocalRep,
    chi: &MultChar,
) -> Result<(Cyclo, Cyclo, u64), LocalError> {
    let f = chi.level();
    let (lhs, order) = integrate_char_exact(rep, chi)?;
    let Some((_, a2)) = rep.exact_alphas() else {
        return Err(LocalError::NotCertifiable(
            "the exact factorisation needs an exact Satake pair",
        ));
    };
    let PiValue::Exact(c) = chi.at_pi() else {
        return Err(LocalError::NotCertifiable(
            "the exact factorisation needs an exact twist value at the uniformizer",
        ));
    };
    let q = BigRational::from_integer(BigInt::from(rep.field().q()));
    let e = rational_pow(&(a2 / &q), f as i64);
    let (tau_unit, _) = chi.gauss_sum_unit_part()?;
    let rhs = tau_unit
        .lift(order)
        .scale(&(rational_pow(c, -(f as i64)) * e));
    Ok((lhs, rhs, order))
}

/// Product of local measures over several places; one compact open set per
/// place.
pub fn semilocal_measure(
    dists: &[LocalDist],
    sets: &[CompactOpen],
) -> Result<Complex64, LocalError> {
    if dists.len() != sets.len() {
        return Err(LocalError::ArityMismatch { places: dists.len(), sets: sets.len() });
    }
    let mut acc = Complex64::new(1.0, 0.0);
    for (d, s) in dists.iter().zip(sets) {
        acc *= d.eval(s)?;
    }
    Ok(acc)
}

/// Render a complex number for reports.
pub fn complex_to_string(z: Complex64) -> String {
    if z.im == 0.0 {
        return alloc::format!("{}", z.re);
    }
    alloc::format!("{} {} {}i", z.re, if z.im < 0.0 { "-" } else { "+" }, z.im.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn q5() -> Field {
        Field::new(5, 1, 8).unwrap()
    }

    #[test]
    fn kind_validation_orders_the_pair() {
        let fld = q5();
        assert!(LocalRep::from_exact(&fld, RepKind::Special, rat(1, 1), rat(5, 1)).is_ok());
        let reversed = LocalRep::from_exact(&fld, RepKind::Special, rat(5, 1), rat(1, 1));
        assert!(matches!(reversed, Err(LocalError::BadPair(msg)) if msg.contains("ordered")));
        let fake = LocalRep::from_exact(&fld, RepKind::Spherical, rat(1, 1), rat(5, 1));
        assert!(matches!(fake, Err(LocalError::BadPair(_))));
        assert!(LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).is_ok());
        let num = LocalRep::from_complex(
            &fld,
            RepKind::Special,
            Complex64::new(5.0, 0.0),
            Complex64::new(1.0, 0.0),
        );
        assert!(num.is_err());
    }

    #[test]
    fn unit_group_measure_and_shifted_units() {
        let fld = q5();
        let st = LocalDist::new(LocalRep::steinberg(&fld));
        let units = CompactOpen::units(&fld).unwrap();
        let (v, _) = st.eval_exact(&units).unwrap();
        assert_eq!(v.as_rational(), Some(rat(4, 5)));

        // one level down: mu(pi^{-1} O^*) = -1/beta
        let sph = LocalDist::new(
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap(),
        );
        let down = CompactOpen::mult_coset(&fld, &fld.pow(&fld.pi(), -1).unwrap(), 0).unwrap();
        let (v, _) = sph.eval_exact(&down).unwrap();
        // beta = 5/3, so the value is -3/5
        assert_eq!(v.as_rational(), Some(rat(-3, 5)));
        // and two levels down the mass vanishes outright
        let down2 = CompactOpen::mult_coset(&fld, &fld.pow(&fld.pi(), -2).unwrap(), 1).unwrap();
        let (v, _) = sph.eval_exact(&down2).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn additivity_under_refinement_is_exact() {
        let fld = q5();
        let rep = LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap();
        let dist = LocalDist::new(rep);
        let a = fld.elem(-1, &[2, 0, 0, 0, 0, 0, 0, 0]);
        // the coset a U^(1) at ord a = -1 is one ball of radius 0
        let coset = CompactOpen::mult_coset(&fld, &a, 1).unwrap();
        let fine = coset.refine(&fld, 3).unwrap();
        assert_eq!(fine.balls().len(), 125);
        let (lhs, lo) = dist.eval_exact(&coset).unwrap();
        let (rhs, ro) = dist.eval_exact(&fine).unwrap();
        let order = lo.lcm(&ro);
        assert!(lhs.lift(order).eq(&rhs.lift(order)));
    }

    #[test]
    fn zero_balls_need_beta_one() {
        let fld = q5();
        let sph = LocalDist::new(
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap(),
        );
        let ball = CompactOpen::ball(&fld, &fld.zero(), 1).unwrap();
        assert!(matches!(sph.eval(&ball), Err(LocalError::ZeroInSupport)));

        // Steinberg has beta = 1: mu(O) = mu(O^*) + mu(pi O) exactly
        let st = LocalDist::new(LocalRep::steinberg(&fld));
        let (whole, wo) = st.eval_exact(&CompactOpen::ball(&fld, &fld.zero(), 0).unwrap()).unwrap();
        let (units, uo) = st.eval_exact(&CompactOpen::units(&fld).unwrap()).unwrap();
        let (inner, io) = st.eval_exact(&ball).unwrap();
        let order = wo.lcm(&uo).lcm(&io);
        assert!(whole.lift(order).eq(&units.lift(order).add(&inner.lift(order))));
        assert_eq!(whole.as_rational(), Some(rat(1, 1)));
    }

    #[test]
    fn overlapping_cosets_are_rejected() {
        let fld = q5();
        let one = fld.one();
        let fine = fld.add(&one, &fld.pow(&fld.pi(), 2).unwrap());
        let balls = vec![(one.clone(), 1_i64), (fine, 3_i64)];
        assert!(matches!(
            CompactOpen::from_balls(&fld, balls),
            Err(LocalError::Overlap)
        ));
        // disjoint siblings pass
        let two = fld.from_int(2);
        assert!(CompactOpen::from_balls(&fld, vec![(one, 1), (two, 1)]).is_ok());
    }

    #[test]
    fn ordinarity_needs_and_uses_exact_data() {
        let fld = q5();
        assert!(LocalRep::steinberg(&fld).is_ordinary().unwrap());

        // trace 1, norm parameter 1: the pair is irrational but certified
        let disc = (4.0 * 5.0 - 1.0_f64).sqrt() / 2.0;
        let a1 = Complex64::new(0.5, disc);
        let a2 = Complex64::new(0.5, -disc);
        let rep = LocalRep::from_complex(&fld, RepKind::Spherical, a1, a2)
            .unwrap()
            .with_trace_norm(rat(1, 1), rat(1, 1))
            .unwrap();
        assert!(rep.is_ordinary().unwrap());

        // trace 0 (supersingular shape): nu is a unit but the trace is not
        let b = Complex64::new(0.0, 5.0_f64.sqrt());
        let ss = LocalRep::from_complex(&fld, RepKind::Spherical, b, -b)
            .unwrap()
            .with_trace_norm(rat(0, 1), rat(1, 1))
            .unwrap();
        assert!(!ss.is_ordinary().unwrap());

        // purely numeric data cannot certify either way
        let bare = LocalRep::from_complex(&fld, RepKind::Spherical, a1, a2).unwrap();
        assert!(matches!(bare.is_ordinary(), Err(LocalError::NotCertifiable(_))));

        // a unit trace with a non-unit norm parameter is not ordinary
        let half = LocalRep::from_exact(&fld, RepKind::Spherical, rat(1, 1), rat(3, 1)).unwrap();
        assert!(!half.is_ordinary().unwrap());
    }

    #[test]
    fn whittaker_values_ignore_the_representative() {
        let fld = q5();
        let rep = LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap();
        let dist = LocalDist::new(rep);
        let a = fld.elem(-2, &[3, 0, 0, 0, 0, 0, 0, 0]);
        let h = fld.add(&fld.one(), &fld.mul(&fld.from_int(2), &fld.pow(&fld.pi(), 2).unwrap()));
        let (w1, o1) = dist.eval_exact(&CompactOpen::mult_coset(&fld, &a, 2).unwrap()).unwrap();
        let (w2, o2) =
            dist.eval_exact(&CompactOpen::mult_coset(&fld, &fld.mul(&a, &h), 2).unwrap()).unwrap();
        let order = o1.lcm(&o2);
        assert!(w1.lift(order).eq(&w2.lift(order)));
        assert!(!w1.is_zero());
    }

    #[test]
    fn whittaker_averages_match_the_measure() {
        let fld = q5();
        for rep in [
            LocalRep::steinberg(&fld),
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap(),
        ] {
            let a = fld.elem(-1, &[2, 0, 0, 0, 0, 0, 0, 0]);
            let (lhs, rhs, _) = whittaker_average_check(&rep, &a, 2, 2).unwrap();
            assert!(lhs.eq(&rhs));
            let (lhs, rhs, _) = whittaker_average_check(&rep, &a, 1, 3).unwrap();
            assert!(lhs.eq(&rhs));
            let (lhs, rhs, _) = whittaker_average_check(&rep, &a, 0, 2).unwrap();
            assert!(lhs.eq(&rhs));
        }
    }

    #[test]
    fn l_factor_values_and_poles() {
        let fld = q5();
        let triv = MultChar::unramified(&fld, PiValue::Exact(rat(1, 1))).unwrap();
        let st = LocalRep::steinberg(&fld);
        // at s = 1/2 the Steinberg factor is 1/(1 - 1/5)
        let l = l_factor(&st, &triv, Complex64::new(0.5, 0.0)).unwrap();
        assert!((l - Complex64::new(1.25, 0.0)).norm() < 1e-12);
        // alpha1 * q^{-s-1/2} = 1 at s = -1/2 for the pair (1, 5): a pole
        let sph = LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap();
        let pole_pt = {
            // choose the twist so that alpha1 c / q = 1 exactly
            let chi = MultChar::unramified(&fld, PiValue::Exact(rat(5, 2))).unwrap();
            l_factor(&sph, &chi, Complex64::new(0.5, 0.0))
        };
        assert!(matches!(pole_pt, Err(LocalError::Pole(_))));
        // ramified twists flatten the factor to 1
        let ram = MultChar::new(&fld, 1, 1, &[], PiValue::Exact(rat(3, 7))).unwrap();
        let l = l_factor(&st, &ram, Complex64::new(0.5, 0.0)).unwrap();
        assert_eq!(l, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn correction_factor_detects_the_exceptional_case() {
        let fld = q5();
        let one = rat(1, 1);

        // ordinary sweep: only the untwisted Steinberg pair kills the factor
        let reps = [
            LocalRep::steinberg(&fld),
            LocalRep::from_exact(&fld, RepKind::Special, rat(-1, 1), rat(-5, 1)).unwrap(),
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(5, 2)).unwrap(),
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(15, 2)).unwrap(),
        ];
        for rep in &reps {
            assert!(rep.is_ordinary().unwrap());
            let e = euler_factor_exact(rep, &one, 0).unwrap();
            let is_steinberg = rep.kind() == RepKind::Special
                && rep.exact_alphas().unwrap().0 == one;
            assert_eq!(e.is_zero(), is_steinberg);
        }

        // the non-split special pair gives exactly 2
        let e = euler_factor_exact(&reps[1], &one, 0).unwrap();
        assert_eq!(e, rat(2, 1));
        // good ordinary with nu = 1: (1 - 1/alpha1)^2
        let e = euler_factor_exact(&reps[2], &one, 0).unwrap();
        assert_eq!(e, rat(1, 4));
        // ramified twists give (alpha2/q)^f
        let e = euler_factor_exact(&reps[3], &one, 2).unwrap();
        assert_eq!(e, rat(9, 4));
    }

    #[test]
    fn correction_factor_pole_and_its_removable_limit() {
        let fld = q5();
        // nu != 1: a genuine pole at c = alpha2
        let sph = LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap();
        assert!(matches!(
            euler_factor_exact(&sph, &rat(3, 1), 0),
            Err(LocalError::Pole(_))
        ));
        // nu = 1 (Steinberg): c -> q approaches the cancelled value 1 - 1/q
        let st = LocalRep::steinberg(&fld);
        let at = |c: f64| {
            let chi = MultChar::unramified(&fld, PiValue::Numeric(Complex64::new(c, 0.0))).unwrap();
            euler_factor(&st, &chi).unwrap()
        };
        let eps = 1e-8;
        let lim = at(5.0 * (1.0 + eps));
        assert!((lim - Complex64::new(0.8, 0.0)).norm() < 1e-6);
        let exact = euler_factor_exact(&st, &rat(5, 1), 0).unwrap();
        assert_eq!(exact, rat(4, 5));
    }

    #[test]
    fn ramified_factorization_is_exact() {
        let fld = q5();
        let reps = [
            LocalRep::steinberg(&fld),
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap(),
        ];
        let chars = [
            MultChar::new(&fld, 1, 1, &[], PiValue::Exact(rat(3, 7))).unwrap(),
            MultChar::new(&fld, 1, 3, &[], PiValue::Exact(rat(-2, 1))).unwrap(),
            MultChar::new(&fld, 2, 2, &[1], PiValue::Exact(rat(1, 2))).unwrap(),
        ];
        for rep in &reps {
            for chi in &chars {
                let (lhs, rhs, _) = factorization_sides_exact(rep, chi).unwrap();
                assert!(lhs.eq(&rhs), "exact factorisation failed at level {}", chi.level());
                assert!(!lhs.is_zero());
            }
        }
    }

    #[test]
    fn unramified_factorization_is_close() {
        let fld = q5();
        let reps = [
            LocalRep::steinberg(&fld),
            LocalRep::from_exact(&fld, RepKind::Spherical, rat(2, 1), rat(3, 1)).unwrap(),
        ];
        for rep in &reps {
            for c in [rat(1, 1), rat(1, 2), rat(-3, 2), rat(2, 1)] {
                let chi = MultChar::unramified(&fld, PiValue::Exact(c)).unwrap();
                let sides = factorization_sides(rep, &chi, 1e-10).unwrap();
                let scale = sides.lhs.norm().max(sides.rhs.norm()).max(1.0);
                assert!(
                    (sides.lhs - sides.rhs).norm() <= 1e-8 * scale,
                    "lhs {} rhs {}",
                    complex_to_string(sides.lhs),
                    complex_to_string(sides.rhs)
                );
            }
        }
        // at |chi(pi)| = |alpha2| the integral no longer converges
        let chi = MultChar::unramified(&fld, PiValue::Exact(rat(3, 1))).unwrap();
        assert!(matches!(
            integrate_char(&reps[1], &chi, 1e-10),
            Err(LocalError::Divergent(_))
        ));
    }

    #[test]
    fn semilocal_products_multiply_and_check_arity() {
        let f5 = q5();
        let f3 = Field::new(3, 1, 8).unwrap();
        let d5 = LocalDist::new(LocalRep::steinberg(&f5));
        let d3 = LocalDist::new(
            LocalRep::from_exact(&f3, RepKind::Spherical, rat(1, 1), rat(2, 1)).unwrap(),
        );
        let s5 = CompactOpen::units(&f5).unwrap();
        let s3 = CompactOpen::units(&f3).unwrap();
        let v = semilocal_measure(&[d5.clone(), d3.clone()], &[s5.clone(), s3.clone()]).unwrap();
        let expected = (1.0 - 1.0 / 5.0) * (1.0 - 1.0 / 3.0);
        assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14);
        assert!(matches!(
            semilocal_measure(&[d5, d3], &[s3]),
            Err(LocalError::ArityMismatch { places: 2, sets: 1 })
        ));
    }
}
