//! Exporters for the lattice graph: DOT and JSON views of a ball around
//! the standard vertex, labeled by height and canonical form.

use lseries_core::tree::{Lattice, TreeCtx, TreeError};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::SCHEMA;

/// Split a prime power `q = p^f`; everything the tree layer accepts is of
/// this shape.
pub fn split_prime_power(q: u64) -> Result<(u64, u32), String> {
    if q < 2 {
        return Err(format!("`{q}` is not a prime power"));
    }
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            break;
        }
        p += 1;
    }
    if q % p != 0 {
        p = q; // q itself is prime
    }
    let mut f = 0;
    let mut rest = q;
    while rest % p == 0 {
        rest /= p;
        f += 1;
    }
    if rest != 1 {
        return Err(format!("`{q}` is not a prime power"));
    }
    Ok((p, f))
}

fn ball_graph(q: u64, radius: u32) -> Result<(Vec<Lattice>, Vec<(Lattice, Lattice)>), String> {
    let (p, f) = split_prime_power(q)?;
    let cx = TreeCtx::new(p, f).map_err(|e: TreeError| e.to_string())?;
    let vertices = cx.ball(&cx.standard(), radius);
    let edges = cx
        .edges_within(&vertices)
        .into_iter()
        .map(|e| (e.o, e.t))
        .collect();
    Ok((vertices, edges))
}

/// DOT text for the radius-`radius` ball: one node per lattice, labeled by
/// height and canonical form, one arrow per index-`q` inclusion.
pub fn ball_dot(q: u64, radius: u32) -> Result<String, String> {
    let (vertices, edges) = ball_graph(q, radius)?;
    let mut out = String::new();
    out.push_str(&format!(
        "digraph ball {{\n  // lattice ball, q = {q}, radius = {radius}\n  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n"
    ));
    for v in &vertices {
        out.push_str(&format!("  \"{v}\" [label=\"h={}\\n{v}\"];\n", v.height()));
    }
    for (o, t) in &edges {
        out.push_str(&format!("  \"{o}\" -> \"{t}\";\n"));
    }
    out.push_str("}\n");
    Ok(out)
}

/// The same ball as JSON.
pub fn ball_json(q: u64, radius: u32) -> Result<Value, String> {
    let (vertices, edges) = ball_graph(q, radius)?;
    Ok(json!({
        "schema": SCHEMA,
        "q": q,
        "radius": radius,
        "vertices": vertices
            .iter()
            .map(|v| json!({"form": v.to_string(), "height": v.height()}))
            .collect::<Vec<_>>(),
        "edges": edges
            .iter()
            .map(|(o, t)| json!({"sub": o.to_string(), "super": t.to_string()}))
            .collect::<Vec<_>>(),
    }))
}

/// JSON view of a complex number, used wherever reports carry one.
pub fn complex_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}
