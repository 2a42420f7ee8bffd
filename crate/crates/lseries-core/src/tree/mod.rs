//! The tree of O-lattices in F^2 for an unramified p-adic field F.
//!
//! Vertices are *lattices* (not homothety classes): the graph has one vertex
//! per lattice L and one directed edge o -> t for every inclusion o ⊂ t of
//! index q.  Scaling by the uniformizer acts freely on this graph, and the
//! quotient by scaling is the usual (q+1)-regular building for GL2(F).
//!
//! Every lattice is kept in a canonical shape
//!
//! ```text
//!     L = O·(pi^m1, 0) + O·(u, pi^m2),     u reduced mod pi^m1,
//! ```
//!
//! where `u` lives in the exact subring Z[t][1/p] of F (enough for every
//! vertex reachable from the standard lattice).  Structural equality on the
//! canonical form is lattice equality, which is what makes BTreeMap-backed
//! finitely supported functions workable.

pub mod basis;
pub mod fns;
pub mod scalars;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::padic::{Elem, Field, PadicError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// Edge constructor got a pair that is not an index-q inclusion.
    NotAdjacent,
    /// Group action with a non-invertible diagonal entry.
    SingularMatrix,
    /// A ball through 0 was fed to the twisted extension map with
    /// distinct Satake parameters; the twist is unbounded there.
    BallContainsZero,
    Padic(PadicError),
}

impl core::fmt::Display for TreeError {
    fn fmt(&self, fm: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TreeError::NotAdjacent => write!(fm, "vertices are not an index-q inclusion"),
            TreeError::SingularMatrix => write!(fm, "matrix has a zero diagonal entry"),
            TreeError::BallContainsZero => {
                write!(fm, "ball contains 0 but the twist ratio is nontrivial")
            }
            TreeError::Padic(e) => write!(fm, "{}", e),
        }
    }
}

impl From<PadicError> for TreeError {
    fn from(e: PadicError) -> Self {
        TreeError::Padic(e)
    }
}

/// Exact scalar `p^v * (c_0 + c_1 t + ... + c_{f-1} t^{f-1})` with integer
/// coefficients, i.e. an element of Z[t][1/p] ⊂ F.  The zero element is the
/// empty polynomial; otherwise the coefficient vector has length f and at
/// least one coefficient prime to p, so the representation is unique and
/// the derived ordering is a total order on values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fx {
    v: i64,
    poly: Vec<BigInt>,
}

impl Fx {
    pub fn zero() -> Fx {
        Fx { v: 0, poly: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty()
    }

    /// Valuation; `None` for zero.
    pub fn val(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.v)
        }
    }

    pub fn unit_coeffs(&self) -> &[BigInt] {
        &self.poly
    }
}

impl core::fmt::Display for Fx {
    fn fmt(&self, fm: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_zero() {
            return write!(fm, "0");
        }
        if self.v != 0 {
            write!(fm, "pi^{}*", self.v)?;
        }
        write!(fm, "(")?;
        let mut first = true;
        for (j, c) in self.poly.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(fm, " + ")?;
            }
            first = false;
            match j {
                0 => write!(fm, "{}", c)?,
                1 => write!(fm, "{}*t", c)?,
                _ => write!(fm, "{}*t^{}", c, j)?,
            }
        }
        write!(fm, ")")
    }
}

/// Lattice in canonical coordinates.  Construct through [`TreeCtx::lattice`]
/// so that `u` is always reduced; all comparisons are structural.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Lattice {
    m1: i64,
    m2: i64,
    u: Fx,
}

impl Lattice {
    pub fn m1(&self) -> i64 {
        self.m1
    }

    pub fn m2(&self) -> i64 {
        self.m2
    }

    pub fn u(&self) -> &Fx {
        &self.u
    }

    /// Height of the underlying homothety class, `m2 - m1`.  Invariant under
    /// scaling, and shifts by `-ord(a)` under `diag(a, 1)`.
    pub fn height(&self) -> i64 {
        self.m2 - self.m1
    }

    /// Largest k such that the first standard basis vector lies in `pi^k L`.
    /// Depends on the lattice itself, not just its class: scaling by pi
    /// lowers it by one.
    pub fn ord_e1(&self) -> i64 {
        -self.m1
    }
}

impl core::fmt::Display for Lattice {
    fn fmt(&self, fm: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(fm, "[{},{},{}]", self.m1, self.m2, self.u)
    }
}

/// Directed edge `o -> t`: an index-q inclusion o ⊂ t.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub o: Lattice,
    pub t: Lattice,
}

/// Upper-triangular matrix `(a b; 0 d)` with exact entries, acting on
/// lattices by multiplying basis vectors.
#[derive(Debug, Clone)]
pub struct UpperTri {
    pub a: Fx,
    pub b: Fx,
    pub d: Fx,
}

/// Arithmetic context: the field parameters plus cached data for exact
/// scalar arithmetic and finite-window unit inversion.
#[derive(Debug, Clone)]
pub struct TreeCtx {
    p: u64,
    f: u32,
    q: u64,
    pbig: BigInt,
    /// Non-leading coefficients of the monic minimal polynomial of t.
    modulus: Vec<BigInt>,
    /// Window field used for unit inversions; precision is adjusted per call.
    window: Field,
}

impl TreeCtx {
    pub fn new(p: u64, f: u32) -> Result<TreeCtx, TreeError> {
        let window = Field::new(p, f, 1)?;
        let q = window.q();
        let modulus: Vec<BigInt> = window.modulus().iter().map(|&c| BigInt::from(c)).collect();
        Ok(TreeCtx { p, f, q, pbig: BigInt::from(p), modulus, window })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn residue_degree(&self) -> u32 {
        self.f
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    // ---- exact scalars ----

    /// `p^v * (coeffs_0 + coeffs_1 t + ...)`, any length up to f.
    pub fn fx(&self, v: i64, coeffs: &[i64]) -> Fx {
        let w: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        self.fx_normalize(v, w)
    }

    pub fn fx_from_int(&self, n: i64) -> Fx {
        self.fx(0, &[n])
    }

    /// `pi^k` as an exact scalar.
    pub fn fx_pi(&self, k: i64) -> Fx {
        self.fx(k, &[1])
    }

    fn fx_normalize(&self, v: i64, mut w: Vec<BigInt>) -> Fx {
        let f = self.f as usize;
        if w.len() > f {
            self.reduce_mod_m(&mut w);
        }
        w.resize(f, BigInt::zero());
        if w.iter().all(|c| c.is_zero()) {
            return Fx::zero();
        }
        let s = w
            .iter()
            .filter(|c| !c.is_zero())
            .map(|c| vp_int(c, &self.pbig))
            .min()
            .expect("nonzero coefficient");
        if s > 0 {
            let shift = self.pbig.pow(s as u32);
            for c in w.iter_mut() {
                *c = &*c / &shift;
            }
        }
        Fx { v: v + s as i64, poly: w }
    }

    fn reduce_mod_m(&self, w: &mut Vec<BigInt>) {
        let f = self.f as usize;
        for i in (f..w.len()).rev() {
            let c = core::mem::replace(&mut w[i], BigInt::zero());
            if c.is_zero() {
                continue;
            }
            for (j, a) in self.modulus.iter().enumerate() {
                let sub = &c * a;
                w[i - f + j] -= sub;
            }
        }
        w.truncate(f);
    }

    pub fn fx_add(&self, a: &Fx, b: &Fx) -> Fx {
        if a.is_zero() {
            return b.clone();
        }
        if b.is_zero() {
            return a.clone();
        }
        let v = a.v.min(b.v);
        let sa = self.pbig.pow((a.v - v) as u32);
        let sb = self.pbig.pow((b.v - v) as u32);
        let w: Vec<BigInt> = a
            .poly
            .iter()
            .zip(b.poly.iter())
            .map(|(x, y)| x * &sa + y * &sb)
            .collect();
        self.fx_normalize(v, w)
    }

    pub fn fx_neg(&self, a: &Fx) -> Fx {
        Fx { v: a.v, poly: a.poly.iter().map(|c| -c).collect() }
    }

    pub fn fx_sub(&self, a: &Fx, b: &Fx) -> Fx {
        self.fx_add(a, &self.fx_neg(b))
    }

    pub fn fx_mul(&self, a: &Fx, b: &Fx) -> Fx {
        if a.is_zero() || b.is_zero() {
            return Fx::zero();
        }
        let f = self.f as usize;
        let mut w = vec![BigInt::zero(); 2 * f - 1];
        for (i, x) in a.poly.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.poly.iter().enumerate() {
                if !y.is_zero() {
                    w[i + j] += x * y;
                }
            }
        }
        self.fx_normalize(a.v + b.v, w)
    }

    /// Multiply by `pi^k`.
    pub fn fx_scale_pi(&self, a: &Fx, k: i64) -> Fx {
        if a.is_zero() {
            Fx::zero()
        } else {
            Fx { v: a.v + k, poly: a.poly.clone() }
        }
    }

    /// Exact equality of possibly non-canonical combinations.
    pub fn fx_eq(&self, a: &Fx, b: &Fx) -> bool {
        self.fx_sub(a, b).is_zero()
    }

    /// Canonical representative of `a mod pi^m`: zero, or digits in
    /// `[0, p^(m - val))` with the common p-power stripped.
    pub fn fx_mod(&self, a: &Fx, m: i64) -> Fx {
        if a.is_zero() || a.v >= m {
            return Fx::zero();
        }
        let window = (m - a.v) as u32;
        let pw = self.pbig.pow(window);
        let w: Vec<BigInt> = a.poly.iter().map(|c| c.mod_floor(&pw)).collect();
        self.fx_normalize(a.v, w)
    }

    /// Inverse of a valuation-zero unit modulo `pi^k`, `k >= 1`, computed in
    /// a digit-window copy of the field and read back exactly.
    pub fn fx_inv_mod(&self, a: &Fx, k: u32) -> Result<Fx, TreeError> {
        if a.is_zero() || a.v != 0 {
            return Err(TreeError::SingularMatrix);
        }
        let fld = self.window.with_precision(k.max(1));
        let e = fld.elem_big(0, &a.poly);
        let inv = fld.inv(&e)?;
        Ok(self.fx_from_elem(&inv))
    }

    fn fx_from_elem(&self, e: &Elem) -> Fx {
        match e.unit_digits() {
            None => Fx::zero(),
            Some(digits) => {
                let v = e.valuation().expect("nonzero");
                let w: Vec<BigInt> = digits.iter().map(|d| BigInt::from(d.clone())).collect();
                self.fx_normalize(v, w)
            }
        }
    }

    /// The q residue representatives of O/pi as exact scalars, digit vectors
    /// over `[0, p)` with the first coordinate moving fastest.
    pub fn residue_reps_fx(&self) -> Vec<Fx> {
        let f = self.f as usize;
        let mut out = Vec::with_capacity(self.q as usize);
        let mut digits = vec![0u64; f];
        loop {
            let coeffs: Vec<BigInt> = digits.iter().map(|&d| BigInt::from(d)).collect();
            out.push(self.fx_normalize(0, coeffs));
            let mut i = 0;
            loop {
                if i == f {
                    return out;
                }
                digits[i] += 1;
                if digits[i] < self.p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    // ---- lattices ----

    /// Canonicalize `(m1, m2, u)`.
    pub fn lattice(&self, m1: i64, m2: i64, u: &Fx) -> Lattice {
        Lattice { m1, m2, u: self.fx_mod(u, m1) }
    }

    /// The standard lattice O ⊕ O.
    pub fn standard(&self) -> Lattice {
        self.lattice(0, 0, &Fx::zero())
    }

    /// The diagonal family `O ⊕ pi^n O`.
    pub fn diagonal(&self, n: i64) -> Lattice {
        self.lattice(0, n, &Fx::zero())
    }

    /// `pi^k L`.
    pub fn scale(&self, l: &Lattice, k: i64) -> Lattice {
        self.lattice(l.m1 + k, l.m2 + k, &self.fx_scale_pi(&l.u, k))
    }

    /// Does the column vector `(y1, y2)` lie in L?
    pub fn contains(&self, l: &Lattice, y1: &Fx, y2: &Fx) -> bool {
        // y2 = b pi^m2 with b in O
        match y2.val() {
            Some(v2) if v2 < l.m2 => return false,
            _ => {}
        }
        // y1 - (y2 / pi^m2) u = a pi^m1 with a in O
        let carry = self.fx_mul(&self.fx_scale_pi(y2, -l.m2), &l.u);
        let rest = self.fx_sub(y1, &carry);
        match rest.val() {
            Some(v1) => v1 >= l.m1,
            None => true,
        }
    }

    /// The q+1 sublattices of index q: one vertical, q horizontal.
    pub fn subs(&self, l: &Lattice) -> Vec<Lattice> {
        let mut out = Vec::with_capacity(self.q as usize + 1);
        out.push(self.lattice(l.m1, l.m2 + 1, &self.fx_scale_pi(&l.u, 1)));
        let step = self.fx_pi(l.m1);
        for c in self.residue_reps_fx() {
            let u = self.fx_add(&l.u, &self.fx_mul(&c, &step));
            out.push(self.lattice(l.m1 + 1, l.m2, &u));
        }
        #[cfg(debug_assertions)]
        for s in &out {
            debug_assert!(self.contains(l, &self.fx_pi(s.m1), &Fx::zero()));
            debug_assert!(self.contains(l, &s.u, &self.fx_pi(s.m2)));
        }
        out
    }

    /// The q+1 superlattices containing L with index q; equals
    /// `pi^(-1) subs(L)` elementwise.
    pub fn supers(&self, l: &Lattice) -> Vec<Lattice> {
        self.subs(l).iter().map(|s| self.scale(s, -1)).collect()
    }

    /// Directed edges out of `l` (to its superlattices).
    pub fn edges_out(&self, l: &Lattice) -> Vec<Edge> {
        self.supers(l)
            .into_iter()
            .map(|t| Edge { o: l.clone(), t })
            .collect()
    }

    /// Directed edges into `l` (from its sublattices).
    pub fn edges_in(&self, l: &Lattice) -> Vec<Edge> {
        self.subs(l)
            .into_iter()
            .map(|o| Edge { o, t: l.clone() })
            .collect()
    }

    /// Validated edge constructor.
    pub fn edge(&self, o: &Lattice, t: &Lattice) -> Result<Edge, TreeError> {
        if self.supers(o).iter().any(|s| s == t) {
            Ok(Edge { o: o.clone(), t: t.clone() })
        } else {
            Err(TreeError::NotAdjacent)
        }
    }

    /// Scaling-canonical representative of the homothety class: the unique
    /// `pi^k L` with first invariant 0.
    pub fn vertex_class(&self, l: &Lattice) -> Lattice {
        self.scale(l, -l.m1)
    }

    /// Left action of an invertible upper-triangular matrix.
    pub fn act(&self, g: &UpperTri, l: &Lattice) -> Result<Lattice, TreeError> {
        let (Some(va), Some(vd)) = (g.a.val(), g.d.val()) else {
            return Err(TreeError::SingularMatrix);
        };
        let m1 = l.m1 + va;
        let m2 = l.m2 + vd;
        // second basis column is (a u + b pi^m2, d pi^m2); strip the unit of d
        let w = self.fx_add(&self.fx_mul(&g.a, &l.u), &self.fx_scale_pi(&g.b, l.m2));
        let u = match w.val() {
            None => Fx::zero(),
            Some(vw) if vw >= m1 => Fx::zero(),
            Some(vw) => {
                let k = (m1 - vw) as u32;
                let unit_d = self.fx_scale_pi(&g.d, -vd);
                let inv = self.fx_inv_mod(&unit_d, k)?;
                self.fx_mul(&w, &inv)
            }
        };
        Ok(self.lattice(m1, m2, &u))
    }

    /// `diag(x, 1)` for the torus action on vertex functions.
    pub fn diag_matrix(&self, x: &Fx) -> UpperTri {
        UpperTri { a: x.clone(), b: Fx::zero(), d: self.fx_from_int(1) }
    }

    // ---- ends ----

    /// The sublattice of L that the ray toward the end `x` (the line through
    /// `(x, 1)`) passes through: the index-q sublattice containing the
    /// primitive vector of `line ∩ L`.
    pub fn end_step(&self, l: &Lattice, x: &Fx) -> Lattice {
        // minimal k with pi^k (x, 1) in L
        let d = self.fx_sub(x, &self.fx_scale_pi(&l.u, -l.m2));
        let k = match d.val() {
            None => l.m2,
            Some(vd) => l.m2.max(l.m1 - vd),
        };
        let g1 = self.fx_scale_pi(x, k);
        let g2 = self.fx_pi(k);
        debug_assert!(self.contains(l, &g1, &g2));
        for s in self.subs(l) {
            if self.contains(&s, &g1, &g2) {
                return s;
            }
        }
        unreachable!("a primitive vector lies in exactly one index-q sublattice");
    }

    /// Is the end `x` in the boundary set attached to the edge, i.e. does
    /// the ray from o(e) toward `x` leave through t(e)?
    pub fn edge_contains_end(&self, e: &Edge, x: &Fx) -> bool {
        self.end_step(&e.o, x) == self.scale(&e.t, 1)
    }

    /// Edge whose boundary set is the ball `a + pi^n O`: the standard edge
    /// moved by `(pi^n, a; 0, 1)`.
    pub fn ball_to_edge(&self, a: &Fx, n: i64) -> Edge {
        let g = UpperTri { a: self.fx_pi(n), b: a.clone(), d: self.fx_from_int(1) };
        let o = self.act(&g, &self.diagonal(1)).expect("diagonal is invertible");
        let t = self.act(&g, &self.standard()).expect("diagonal is invertible");
        Edge { o, t }
    }

    // ---- walks ----

    /// All lattices within `radius` steps of `center` in the lattice graph
    /// (both inclusion directions), BFS order, deduplicated.
    pub fn ball(&self, center: &Lattice, radius: u32) -> Vec<Lattice> {
        let mut seen = alloc::collections::BTreeSet::new();
        let mut frontier = vec![center.clone()];
        seen.insert(center.clone());
        let mut out = vec![center.clone()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for v in &frontier {
                for w in self.subs(v).into_iter().chain(self.supers(v)) {
                    if seen.insert(w.clone()) {
                        out.push(w.clone());
                        next.push(w);
                    }
                }
            }
            frontier = next;
        }
        out
    }

    /// Undirected edges with both endpoints inside the given vertex set.
    pub fn edges_within(&self, vertices: &[Lattice]) -> Vec<Edge> {
        let set: alloc::collections::BTreeSet<&Lattice> = vertices.iter().collect();
        let mut out = Vec::new();
        for v in vertices {
            for e in self.edges_out(v) {
                if set.contains(&e.t) {
                    out.push(e);
                }
            }
        }
        out
    }
}

/// Count factors of p in a nonzero integer.
fn vp_int(c: &BigInt, p: &BigInt) -> u64 {
    let mut n = c.abs();
    let mut v = 0u64;
    loop {
        let (d, r) = n.div_rem(p);
        if !r.is_zero() {
            return v;
        }
        n = d;
        v += 1;
    }
}

/// Render `u` compactly for graph exports.
pub fn fx_to_string(x: &Fx) -> String {
    alloc::format!("{}", x)
}
