//! Shifted-indicator bases for functions on spheres around the base vertex.
//!
//! `C_n` is the set of lattices reached from the standard lattice by n
//! forward (superlattice) steps with no backtracking in the underlying
//! building, so `|C_n| = (q+1) q^(n-1)`.  Dropping one forward child per
//! parent leaves kept sets `V_i` with `sum |V_i| = |C_n|`, and the functions
//! `T^(n-i) 1_v`, `v` in `V_i`, restrict to a basis of the functions on
//! `C_n`; the rank certificate below checks this with exact rational
//! elimination.

use alloc::vec::Vec;

use num_rational::BigRational;

use super::fns::{hecke_t, FnFinSupp, VertexFn};
use super::scalars::rational_rank;
use super::{Lattice, TreeCtx};

/// Levels `C_0..C_n` with, for each vertex, the index of its parent in the
/// previous level (`None` for the base vertex).
pub struct ForwardLevels {
    pub levels: Vec<Vec<(Lattice, Option<usize>)>>,
}

pub fn forward_levels(cx: &TreeCtx, n: u32) -> ForwardLevels {
    let mut levels = Vec::with_capacity(n as usize + 1);
    levels.push(alloc::vec![(cx.standard(), None)]);
    for step in 1..=n {
        let prev = &levels[step as usize - 1];
        let mut next = Vec::new();
        for (idx, (v, parent)) in prev.iter().enumerate() {
            let blocked = parent.map(|pi| {
                let (w, _) = &levels[step as usize - 2][pi];
                cx.scale(w, -1)
            });
            for s in cx.supers(v) {
                if Some(&s) != blocked.as_ref() {
                    next.push((s, Some(idx)));
                }
            }
        }
        levels.push(next);
    }
    #[cfg(debug_assertions)]
    for lvl in &levels {
        let mut sorted: Vec<&Lattice> = lvl.iter().map(|(v, _)| v).collect();
        sorted.sort();
        sorted.dedup();
        debug_assert_eq!(sorted.len(), lvl.len(), "forward levels must not collide");
    }
    ForwardLevels { levels }
}

/// The kept sets `V_0..V_n`: the base vertex; all but the smallest first
/// shell vertex; and, per parent, all but the smallest forward child.
pub fn kept_sets(cx: &TreeCtx, levels: &ForwardLevels) -> Vec<Vec<Lattice>> {
    let n = levels.levels.len() - 1;
    let mut out = Vec::with_capacity(n + 1);
    out.push(alloc::vec![cx.standard()]);
    if n == 0 {
        return out;
    }
    let mut first: Vec<Lattice> = levels.levels[1].iter().map(|(v, _)| v.clone()).collect();
    first.sort();
    out.push(first[1..].to_vec());
    for step in 2..=n {
        let mut kept = Vec::new();
        let level = &levels.levels[step];
        // group the level by parent index; children of one parent are
        // contiguous by construction
        let mut i = 0;
        while i < level.len() {
            let parent = level[i].1;
            let mut group = Vec::new();
            while i < level.len() && level[i].1 == parent {
                group.push(level[i].0.clone());
                i += 1;
            }
            group.sort();
            kept.extend_from_slice(&group[1..]);
        }
        out.push(kept);
    }
    out
}

/// The spanning family for the n-th shell: `T^(n-i) 1_v` for `v` in `V_i`,
/// i = 0..n, in that order.
pub fn shell_spanning_set(cx: &TreeCtx, n: u32) -> Vec<VertexFn<BigRational>> {
    let levels = forward_levels(cx, n);
    let kept = kept_sets(cx, &levels);
    let mut out = Vec::new();
    for (i, vs) in kept.iter().enumerate() {
        for v in vs {
            let mut phi: VertexFn<BigRational> = FnFinSupp::indicator(v.clone());
            for _ in 0..(n as usize - i) {
                phi = hecke_t(cx, &phi);
            }
            out.push(phi);
        }
    }
    out
}

/// Restrict the spanning family to coordinates on `C_n` and return the
/// matrix together with `|C_n|`.
pub fn shell_matrix(cx: &TreeCtx, n: u32) -> (Vec<Vec<BigRational>>, usize) {
    let levels = forward_levels(cx, n);
    let mut columns: Vec<Lattice> = levels.levels[n as usize]
        .iter()
        .map(|(v, _)| v.clone())
        .collect();
    columns.sort();
    let rows = shell_spanning_set(cx, n)
        .into_iter()
        .map(|phi| columns.iter().map(|v| phi.get(v)).collect())
        .collect();
    (rows, columns.len())
}

/// Exact rank of the restricted family versus the shell size.
pub fn shell_rank(cx: &TreeCtx, n: u32) -> (usize, usize) {
    let (mut rows, ncols) = shell_matrix(cx, n);
    (rational_rank(&mut rows), ncols)
}

/// Closed-form shell size `(q+1) q^(n-1)` (1 for n = 0).
pub fn shell_size(q: u64, n: u32) -> u64 {
    if n == 0 {
        1
    } else {
        (q + 1) * q.pow(n - 1)
    }
}

// ---- exactness certificates for the weighted boundary ----

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if the two were already connected (a cycle).
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Structural certificate that, on the ball of the given radius, the
/// boundary images `D_rho(1_e)` span exactly the hyperplane cut out by the
/// weight pairing.  The graph is connected but *not* acyclic (scaling closes
/// squares), so the certificate is the weighted-incidence rank fact: every
/// row pairs to zero against the weight, and a spanning tree's rows are
/// independent by leaf peeling, so the span has dimension `|ball| - 1` —
/// the full kernel of the pairing — precisely when the ball is connected.
pub struct ExactnessCertificate {
    pub vertices: usize,
    pub edges: usize,
    pub spanning_edges: usize,
    pub components: usize,
}

impl ExactnessCertificate {
    pub fn holds(&self) -> bool {
        self.components == 1 && self.spanning_edges + 1 == self.vertices
    }
}

pub fn exactness_certificate(cx: &TreeCtx, radius: u32) -> ExactnessCertificate {
    let ball = cx.ball(&cx.standard(), radius);
    let index: alloc::collections::BTreeMap<&Lattice, usize> =
        ball.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let edges = cx.edges_within(&ball);
    let mut uf = UnionFind::new(ball.len());
    let mut spanning_edges = 0;
    for e in &edges {
        if uf.union(index[&e.o], index[&e.t]) {
            spanning_edges += 1;
        }
    }
    let mut roots = alloc::collections::BTreeSet::new();
    for i in 0..ball.len() {
        roots.insert(uf.find(i));
    }
    let components = roots.len();
    ExactnessCertificate {
        vertices: ball.len(),
        edges: edges.len(),
        spanning_edges,
        components,
    }
}

/// Dense-rank version of the exactness statement on a small ball: the rank
/// of `{D_rho(1_e)}` equals `|ball| - 1`, and adjoining any test vector from
/// the kernel of the weight pairing does not raise it.
pub fn exactness_dense_check(cx: &TreeCtx, radius: u32, rho: &super::fns::RhoFn) -> bool {
    use super::fns::weighted_boundary;
    let ball = cx.ball(&cx.standard(), radius);
    let mut columns = ball.clone();
    columns.sort();
    let edges = cx.edges_within(&ball);
    let rf = |l: &Lattice| rho.eval(l);
    let row_of = |phi: &VertexFn<BigRational>| -> Vec<BigRational> {
        columns.iter().map(|v| phi.get(v)).collect()
    };
    let rows: Vec<Vec<BigRational>> = edges
        .iter()
        .map(|e| row_of(&weighted_boundary(&rf, &FnFinSupp::indicator(e.clone()))))
        .collect();
    let expect = ball.len() - 1;
    if rational_rank(&mut rows.clone()) != expect {
        return false;
    }
    // test vectors rho(w) 1_v - rho(v) 1_w annihilate the weight pairing
    for k in 1..ball.len().min(6) {
        let (v, w) = (&ball[0], &ball[k]);
        let mut phi: VertexFn<BigRational> = FnFinSupp::zero();
        phi.add_at(v.clone(), rho.eval(w));
        phi.add_at(w.clone(), -rho.eval(v));
        let mut augmented = rows.clone();
        augmented.push(row_of(&phi));
        if rational_rank(&mut augmented) != expect {
            return false;
        }
    }
    true
}
