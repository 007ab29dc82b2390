//! Graphviz DOT rendering of finite pieces of a presentation.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::limits::LimitPresentation;
use crate::structure::{Oracle, Vertex, VertexSet};

/// Undirected drawing of the graph induced on `vertices`; edges lying
/// inside one of the `highlight` sets are drawn bold and red. `labels`
/// optionally names vertices.
pub fn graph_dot(
    pres: &LimitPresentation,
    vertices: &VertexSet,
    highlight: &[VertexSet],
    labels: &[(Vertex, String)],
) -> Result<String> {
    if !pres.is_graph() {
        return Err(Error::Precondition("graph drawing needs a graph presentation".into()));
    }
    let mut out = String::from("graph image {\n  node [shape=circle];\n");
    for v in vertices.iter() {
        match labels.iter().find(|(u, _)| *u == v) {
            Some((_, l)) => writeln!(out, "  {v} [label=\"{l}\"];").unwrap(),
            None => writeln!(out, "  {v};").unwrap(),
        }
    }
    let vs = vertices.as_slice();
    for (i, &a) in vs.iter().enumerate() {
        for &b in &vs[i + 1..] {
            if pres.query(0, &[a, b])? {
                let hot = highlight.iter().any(|h| h.contains(a) && h.contains(b));
                let style = if hot { " [color=red, penwidth=2]" } else { "" };
                writeln!(out, "  {a} -- {b}{style};").unwrap();
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Directed drawing of an ℓ-diagram on `vertices`, one rank per level;
/// nodes are labelled `(i,n)`.
pub fn ldiag_dot(pres: &LimitPresentation, vertices: &VertexSet) -> Result<String> {
    let levels = pres.levels().ok_or_else(|| Error::Precondition("level drawing needs an ℓ-diagram".into()))?;
    let mut out = String::from("digraph diagram {\n  rankdir=BT;\n  node [shape=box];\n");
    for level in 0..levels {
        write!(out, "  {{ rank=same;").unwrap();
        for v in vertices.iter().filter(|&v| pres.split(v).map(|s| s.0) == Some(level)) {
            let (i, n) = pres.split(v).expect("ℓ-diagram vertex");
            write!(out, " {v} [label=\"({i},{n})\"];").unwrap();
        }
        out.push_str(" }\n");
    }
    let vs = vertices.as_slice();
    for &a in vs {
        for &b in vs {
            if a != b && pres.succession(a, b)? {
                writeln!(out, "  {a} -> {b};").unwrap();
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}

/// Picks [`graph_dot`] or [`ldiag_dot`] by presentation kind.
pub fn structure_dot(pres: &LimitPresentation, vertices: &VertexSet) -> Result<String> {
    if pres.is_graph() {
        graph_dot(pres, vertices, &[], &[])
    } else {
        ldiag_dot(pres, vertices)
    }
}
