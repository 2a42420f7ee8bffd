//! Finitely supported functions on the lattice graph and the operators the
//! L-series construction needs: the Hecke sum over sublattices, the scaling
//! shift, weighted boundary/coboundary maps between edge and vertex
//! functions, and the twisted extension of ball indicators to the boundary.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_rational::BigRational;

use super::scalars::{rational_pow, Laurent2, Scalar};
use super::{Edge, Fx, Lattice, TreeCtx, TreeError, UpperTri};

/// Finitely supported `K -> S`, stored sparsely; zero values are pruned so
/// equality is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct FnFinSupp<K: Ord + Clone, S: Scalar> {
    map: BTreeMap<K, S>,
}

pub type VertexFn<S> = FnFinSupp<Lattice, S>;
pub type EdgeFn<S> = FnFinSupp<Edge, S>;

impl<K: Ord + Clone, S: Scalar> FnFinSupp<K, S> {
    pub fn zero() -> Self {
        FnFinSupp { map: BTreeMap::new() }
    }

    pub fn indicator(k: K) -> Self {
        let mut map = BTreeMap::new();
        map.insert(k, S::one());
        FnFinSupp { map }
    }

    pub fn from_pairs<I: IntoIterator<Item = (K, S)>>(pairs: I) -> Self {
        let mut out = Self::zero();
        for (k, s) in pairs {
            out.add_at(k, s);
        }
        out
    }

    pub fn get(&self, k: &K) -> S {
        self.map.get(k).cloned().unwrap_or_else(S::zero)
    }

    pub fn add_at(&mut self, k: K, s: S) {
        if s.is_zero() {
            return;
        }
        match self.map.entry(k) {
            alloc::collections::btree_map::Entry::Vacant(e) => {
                e.insert(s);
            }
            alloc::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().add(&s);
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, s) in &other.map {
            out.add_at(k.clone(), s.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, s) in &other.map {
            out.add_at(k.clone(), s.neg());
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero();
        for (k, v) in &self.map {
            out.add_at(k.clone(), v.mul(s));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &S)> {
        self.map.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &K> {
        self.map.keys()
    }

    /// Sum of pointwise products over the (finite) common support.
    pub fn pairing(&self, other: &Self) -> S {
        let mut acc = S::zero();
        for (k, s) in &self.map {
            if let Some(t) = other.map.get(k) {
                acc = acc.add(&s.mul(t));
            }
        }
        acc
    }
}

/// Pair a finitely supported function against an arbitrary (closed-form)
/// function of the vertex.
pub fn pairing_fn<S: Scalar>(phi: &VertexFn<S>, g: impl Fn(&Lattice) -> S) -> S {
    let mut acc = S::zero();
    for (v, c) in phi.iter() {
        acc = acc.add(&c.mul(&g(v)));
    }
    acc
}

/// Pointwise product with a closed-form function.
pub fn pointwise_mul<S: Scalar>(phi: &VertexFn<S>, g: impl Fn(&Lattice) -> S) -> VertexFn<S> {
    let mut out = FnFinSupp::zero();
    for (v, c) in phi.iter() {
        out.add_at(v.clone(), c.mul(&g(v)));
    }
    out
}

// ---- operators ----

/// Hecke operator: `(T phi)(v) = sum of phi over the sublattices of v`.
pub fn hecke_t<S: Scalar>(cx: &TreeCtx, phi: &VertexFn<S>) -> VertexFn<S> {
    let mut out = FnFinSupp::zero();
    for (w, c) in phi.iter() {
        for v in cx.supers(w) {
            out.add_at(v, c.clone());
        }
    }
    out
}

/// Scaling shift: `(R phi)(v) = phi(pi^{-1} v)`.
pub fn shift_r<S: Scalar>(cx: &TreeCtx, phi: &VertexFn<S>) -> VertexFn<S> {
    let mut out = FnFinSupp::zero();
    for (w, c) in phi.iter() {
        out.add_at(cx.scale(w, 1), c.clone());
    }
    out
}

/// Inverse shift: `(R^{-1} phi)(v) = phi(pi v)`.
pub fn shift_r_inv<S: Scalar>(cx: &TreeCtx, phi: &VertexFn<S>) -> VertexFn<S> {
    let mut out = FnFinSupp::zero();
    for (w, c) in phi.iter() {
        out.add_at(cx.scale(w, -1), c.clone());
    }
    out
}

/// Sum of `g` over the sublattices of `v` (pointwise Hecke transform of a
/// closed-form function).
pub fn sub_sum<S: Scalar>(cx: &TreeCtx, g: &impl Fn(&Lattice) -> S, v: &Lattice) -> S {
    let mut acc = S::zero();
    for w in cx.subs(v) {
        acc = acc.add(&g(&w));
    }
    acc
}

/// Sum of `g` over the superlattices of `v`.
pub fn super_sum<S: Scalar>(cx: &TreeCtx, g: &impl Fn(&Lattice) -> S, v: &Lattice) -> S {
    let mut acc = S::zero();
    for w in cx.supers(v) {
        acc = acc.add(&g(&w));
    }
    acc
}

/// Weighted boundary from edge functions to vertex functions:
///
/// ```text
///   (D_rho c)(v) = sum_{t(e)=v} rho(o(e)) c(e)  -  sum_{o(e)=v} rho(t(e)) c(e).
/// ```
pub fn weighted_boundary<S: Scalar>(
    rho: &impl Fn(&Lattice) -> S,
    c: &EdgeFn<S>,
) -> VertexFn<S> {
    let mut out = FnFinSupp::zero();
    for (e, val) in c.iter() {
        out.add_at(e.t.clone(), rho(&e.o).mul(val));
        out.add_at(e.o.clone(), rho(&e.t).mul(val).neg());
    }
    out
}

/// Weighted coboundary, the formal adjoint of [`weighted_boundary`]:
///
/// ```text
///   (D^rho phi)(e) = rho(o(e)) phi(t(e)) - rho(t(e)) phi(o(e)).
/// ```
pub fn weighted_coboundary<S: Scalar>(
    cx: &TreeCtx,
    rho: &impl Fn(&Lattice) -> S,
    phi: &VertexFn<S>,
) -> EdgeFn<S> {
    let mut candidates: BTreeSet<Edge> = BTreeSet::new();
    for v in phi.support() {
        candidates.extend(cx.edges_out(v));
        candidates.extend(cx.edges_in(v));
    }
    let mut out = FnFinSupp::zero();
    for e in candidates {
        let val = rho(&e.o).mul(&phi.get(&e.t)).sub(&rho(&e.t).mul(&phi.get(&e.o)));
        out.add_at(e, val);
    }
    out
}

/// Push a vertex function forward along an invertible upper-triangular
/// matrix: `(g . phi)(L) = phi(g^{-1} L)`.
pub fn translate<S: Scalar>(
    cx: &TreeCtx,
    g: &UpperTri,
    phi: &VertexFn<S>,
) -> Result<VertexFn<S>, TreeError> {
    let mut out = FnFinSupp::zero();
    for (l, c) in phi.iter() {
        out.add_at(cx.act(g, l)?, c.clone());
    }
    Ok(out)
}

// ---- the harmonic weight family ----

/// The two-parameter weight `rho(L) = alpha^(m2 - m1) nu^m1` with exact
/// rational parameters.  Satisfies `T rho = (alpha + q nu / alpha) rho` and
/// `R rho = nu^{-1} rho`.
#[derive(Debug, Clone)]
pub struct RhoFn {
    pub alpha: BigRational,
    pub nu: BigRational,
}

impl RhoFn {
    pub fn new(alpha: BigRational, nu: BigRational) -> RhoFn {
        assert!(
            !num_traits::Zero::is_zero(&alpha) && !num_traits::Zero::is_zero(&nu),
            "weight parameters must be invertible"
        );
        RhoFn { alpha, nu }
    }

    pub fn eval(&self, l: &Lattice) -> BigRational {
        rational_pow(&self.alpha, l.height()) * rational_pow(&self.nu, l.m1())
    }

    /// Eigenvalue of the Hecke operator on this weight.
    pub fn hecke_eigenvalue(&self, q: u64) -> BigRational {
        let qr = BigRational::from_integer(q.into());
        &self.alpha + qr * &self.nu / &self.alpha
    }
}

/// Symbolic version of the weight: the Laurent monomial
/// `alpha^(m2 - m1) nu^m1`.
pub fn rho_symbolic(l: &Lattice) -> Laurent2 {
    Laurent2::monomial(l.height(), l.m1(), num_traits::One::one())
}

/// Symbolic Hecke eigenvalue `alpha + q nu alpha^{-1}`.
pub fn hecke_eigenvalue_symbolic(q: u64) -> Laurent2 {
    let one: BigRational = num_traits::One::one();
    Laurent2::monomial(1, 0, one.clone()).add(&Laurent2::monomial(
        -1,
        1,
        BigRational::from_integer(q.into()),
    ))
}

// ---- ball indicators and the twisted extension ----

/// A finite linear combination of balls `a + pi^n O` in F with coefficients
/// in S: the compactly supported locally constant test functions.
pub type BallCombo<S> = Vec<(Fx, i64, S)>;

/// Extend a combination of ball indicators to an edge function on the tree:
/// each ball corresponds to the edge whose boundary set it is, and the value
/// picks up the twist `twist(ord x)`, constant on a ball avoiding 0.  Balls
/// through 0 are only allowed when the twist is trivial.
pub fn balls_to_edge_fn<S: Scalar>(
    cx: &TreeCtx,
    balls: &BallCombo<S>,
    twist: &impl Fn(i64) -> S,
    twist_is_trivial: bool,
) -> Result<EdgeFn<S>, TreeError> {
    let mut out = FnFinSupp::zero();
    for (a, n, coeff) in balls {
        let factor = match a.val() {
            Some(v) if v < *n => twist(v),
            _ if twist_is_trivial => S::one(),
            _ => return Err(TreeError::BallContainsZero),
        };
        out.add_at(cx.ball_to_edge(a, *n), coeff.mul(&factor));
    }
    Ok(out)
}

/// The boundary image of a test function on F under the weight
/// `rho_{alpha,nu}`: twist by `(alpha/nu)^(ord x)`, extend by zero to the
/// boundary, rewrite as an edge function, and apply the weighted boundary.
/// This is the map whose image carries the distribution-valued pairing.
pub fn boundary_of_balls(
    cx: &TreeCtx,
    rho: &RhoFn,
    balls: &BallCombo<BigRational>,
) -> Result<VertexFn<BigRational>, TreeError> {
    let ratio = &rho.alpha / &rho.nu;
    let trivial = rho.alpha == rho.nu;
    let c = balls_to_edge_fn(cx, balls, &|ord| rational_pow(&ratio, ord), trivial)?;
    Ok(weighted_boundary(&|l| rho.eval(l), &c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::Zero;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn xorshift(state: &mut u64) -> u64 {
        let mut x = *state;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        *state = x;
        x
    }

    /// Deterministic pseudo-random vertex: a short walk from the base point.
    fn random_vertex(cx: &TreeCtx, state: &mut u64) -> Lattice {
        let mut v = cx.standard();
        let steps = (xorshift(state) % 5) as usize;
        for _ in 0..steps {
            let r = xorshift(state) as usize;
            let choices = if r % 2 == 0 { cx.subs(&v) } else { cx.supers(&v) };
            v = choices[r % choices.len()].clone();
        }
        v
    }

    fn random_vertex_fn(cx: &TreeCtx, state: &mut u64, terms: usize) -> VertexFn<BigRational> {
        let mut out = FnFinSupp::zero();
        for _ in 0..terms {
            let v = random_vertex(cx, state);
            let c = (xorshift(state) % 19) as i64 - 9;
            out.add_at(v, rat(c, 1));
        }
        out
    }

    #[test]
    fn square_cycle_lies_in_the_kernel_of_the_boundary() {
        let cx = TreeCtx::new(3, 1).unwrap();
        let v0 = cx.standard();
        let down = cx.subs(&v0);
        let m1 = down[1].clone();
        let m2 = down[2].clone();
        let tl = cx.scale(&v0, 1);
        let e1 = cx.edge(&tl, &m1).unwrap();
        let e2 = cx.edge(&tl, &m2).unwrap();
        let e3 = cx.edge(&m1, &v0).unwrap();
        let e4 = cx.edge(&m2, &v0).unwrap();
        let c: EdgeFn<BigRational> = FnFinSupp::from_pairs([
            (e1, rat(-1, 1)),
            (e2, rat(1, 1)),
            (e3, rat(-1, 1)),
            (e4, rat(1, 1)),
        ]);
        let one = |_: &Lattice| rat(1, 1);
        assert!(weighted_boundary(&one, &c).is_zero());
    }

    #[test]
    fn hecke_and_shift_adjunctions() {
        let cx = TreeCtx::new(3, 1).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        for _ in 0..20 {
            let phi = random_vertex_fn(&cx, &mut state, 4);
            let psi = random_vertex_fn(&cx, &mut state, 4);
            // <T phi, psi> = <phi, TR psi>
            let lhs = hecke_t(&cx, &phi).pairing(&psi);
            let rhs = phi.pairing(&hecke_t(&cx, &shift_r(&cx, &psi)));
            assert_eq!(lhs, rhs);
            // <R phi, psi> = <phi, R^{-1} psi>
            let lhs = shift_r(&cx, &phi).pairing(&psi);
            let rhs = phi.pairing(&shift_r_inv(&cx, &psi));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn boundary_and_coboundary_are_adjoint() {
        let cx = TreeCtx::new(2, 1).unwrap();
        let rho = RhoFn::new(rat(2, 3), rat(-5, 7));
        let rf = |l: &Lattice| rho.eval(l);
        let mut state = 0xdeadbeefcafef00du64;
        for _ in 0..20 {
            let phi = random_vertex_fn(&cx, &mut state, 4);
            // random edge function: coboundary of another random function plus
            // a few indicator edges
            let mut c: EdgeFn<BigRational> = FnFinSupp::zero();
            for _ in 0..4 {
                let v = random_vertex(&cx, &mut state);
                let es = cx.edges_out(&v);
                let e = es[(xorshift(&mut state) as usize) % es.len()].clone();
                c.add_at(e, rat((xorshift(&mut state) % 7) as i64 - 3, 1));
            }
            let lhs = weighted_boundary(&rf, &c).pairing(&phi);
            let rhs = c.pairing(&weighted_coboundary(&cx, &rf, &phi));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn weight_family_eigenvalue_identities() {
        // T rho = (alpha + q nu/alpha) rho and R rho = nu^{-1} rho, exactly,
        // both symbolically and at rational parameters.
        for (p, f) in [(2u64, 1u32), (3, 1)] {
            let cx = TreeCtx::new(p, f).unwrap();
            let q = cx.q();
            let a_sym = hecke_eigenvalue_symbolic(q);
            let nu_inv = Laurent2::monomial(0, -1, rat(1, 1));
            for v in cx.ball(&cx.standard(), 3) {
                let lhs = sub_sum(&cx, &rho_symbolic, &v);
                assert_eq!(lhs, a_sym.mul(&rho_symbolic(&v)), "T at {}", v);
                let shifted = rho_symbolic(&cx.scale(&v, -1));
                assert_eq!(shifted, nu_inv.mul(&rho_symbolic(&v)), "R at {}", v);
            }
        }
        let cx = TreeCtx::new(5, 1).unwrap();
        let rho = RhoFn::new(rat(3, 2), rat(-2, 7));
        let a = rho.hecke_eigenvalue(cx.q());
        let rf = |l: &Lattice| rho.eval(l);
        for v in cx.ball(&cx.standard(), 2) {
            assert_eq!(sub_sum(&cx, &rf, &v), &a * rho.eval(&v));
            assert_eq!(rho.eval(&cx.scale(&v, -1)), rho.eval(&v) / &rho.nu);
        }
    }

    #[test]
    fn composite_of_boundary_and_coboundary_matches_neighbor_sums() {
        // D_{rho1} D^{rho2} phi = (T + TR)(rho1 rho2) . phi
        //                        - rho2 . (T + TR)(rho1 phi),
        // as an identity of finitely supported functions, for arbitrary
        // weights.
        let cx = TreeCtx::new(2, 1).unwrap();
        let rho1 = RhoFn::new(rat(2, 3), rat(-1, 5));
        let rho2 = RhoFn::new(rat(7, 4), rat(3, 2));
        let r1 = |l: &Lattice| rho1.eval(l);
        let r2 = |l: &Lattice| rho2.eval(l);
        let mut state = 0x1234_5678_9abc_def1u64;
        for _ in 0..10 {
            let phi = random_vertex_fn(&cx, &mut state, 5);
            let lhs = weighted_boundary(&r1, &weighted_coboundary(&cx, &r2, &phi));

            let prod_sum = |v: &Lattice| {
                sub_sum(&cx, &|w: &Lattice| r1(w) * r2(w), v)
                    + super_sum(&cx, &|w: &Lattice| r1(w) * r2(w), v)
            };
            let first = pointwise_mul(&phi, prod_sum);
            let weighted = pointwise_mul(&phi, &r1);
            let spread = hecke_t(&cx, &weighted).add(&hecke_t(&cx, &shift_r(&cx, &weighted)));
            let second = pointwise_mul(&spread, &r2);
            assert_eq!(lhs, first.sub(&second));
        }
    }

    #[test]
    fn descent_pairings_vanish_at_unit_similitude() {
        // At nu = 1 the pairing weights are rho_{B,1} for the two roots B of
        // X^2 - aX + q; both kill the images of T - a and R - 1.
        let cx = TreeCtx::new(5, 1).unwrap();
        let alpha = rat(2, 3);
        let q = BigRational::from_integer(cx.q().into());
        let other = &q / &alpha;
        let a = alpha.clone() + other.clone();
        let mut state = 0xfeedface0badf00du64;
        for b in [alpha, other] {
            let rho = RhoFn::new(b, rat(1, 1));
            let rf = |l: &Lattice| rho.eval(l);
            for _ in 0..8 {
                let phi = random_vertex_fn(&cx, &mut state, 5);
                let t_im = hecke_t(&cx, &phi).sub(&phi.scale(&a));
                assert!(Zero::is_zero(&pairing_fn(&t_im, rf)));
                let r_im = shift_r(&cx, &phi).sub(&phi);
                assert!(Zero::is_zero(&pairing_fn(&r_im, rf)));
            }
        }
    }

    #[test]
    fn ball_boundary_is_equivariant_under_the_mirabolic_torus() {
        let cx = TreeCtx::new(5, 1).unwrap();
        let rho = RhoFn::new(rat(3, 2), rat(1, 4));
        let balls: BallCombo<BigRational> = alloc::vec![
            (cx.fx_from_int(1), 1, rat(1, 1)),
            (cx.fx(2, &[1]), 3, rat(-2, 1)),
        ];
        let base = boundary_of_balls(&cx, &rho, &balls).unwrap();
        for t in [cx.fx_pi(1), cx.fx(-1, &[3])] {
            let tv = t.val().unwrap();
            let moved: BallCombo<BigRational> = balls
                .iter()
                .map(|(a, n, c)| (cx.fx_mul(&t, a), n + tv, c.clone()))
                .collect();
            let lhs = boundary_of_balls(&cx, &rho, &moved).unwrap();
            let rhs = translate(&cx, &cx.diag_matrix(&t), &base).unwrap();
            assert_eq!(lhs, rhs, "translation by {}", t);
        }
    }

    #[test]
    fn ball_through_zero_needs_a_trivial_twist() {
        let cx = TreeCtx::new(5, 1).unwrap();
        let rho = RhoFn::new(rat(3, 2), rat(1, 4));
        let balls: BallCombo<BigRational> = alloc::vec![(Fx::zero(), 2, rat(1, 1))];
        assert!(matches!(
            boundary_of_balls(&cx, &rho, &balls),
            Err(TreeError::BallContainsZero)
        ));
        // with alpha = nu the twist is trivial and 0 is fine
        let st = RhoFn::new(rat(1, 4), rat(1, 4));
        assert!(boundary_of_balls(&cx, &st, &balls).is_ok());
        // a deep ball around a nonzero center is also fine
        let balls: BallCombo<BigRational> = alloc::vec![(cx.fx_from_int(3), 4, rat(1, 1))];
        assert!(boundary_of_balls(&cx, &rho, &balls).is_ok());
    }

    #[test]
    fn boundary_image_pairs_to_zero_against_its_own_weight() {
        // <D_rho c, rho> = 0 for every edge function: the defining property
        // of the weight as the kernel direction of the transpose.
        let cx = TreeCtx::new(3, 1).unwrap();
        let rho = RhoFn::new(rat(5, 2), rat(-3, 4));
        let rf = |l: &Lattice| rho.eval(l);
        let mut state = 0x0ddba11_5eed_1234u64;
        for _ in 0..10 {
            let mut c: EdgeFn<BigRational> = FnFinSupp::zero();
            for _ in 0..5 {
                let v = random_vertex(&cx, &mut state);
                let es = cx.edges_in(&v);
                let e = es[(xorshift(&mut state) as usize) % es.len()].clone();
                c.add_at(e, rat((xorshift(&mut state) % 11) as i64 - 5, 1));
            }
            let img = weighted_boundary(&rf, &c);
            assert!(Zero::is_zero(&pairing_fn(&img, rf)));
        }
    }
}
