use std::fmt::Write;

use super::{Dag, NodeKind};

/// Graphviz rendering. Regime indicators are boxes, latent nodes dashed.
pub fn to_dot(g: &Dag) -> String {
    let mut out = String::from("digraph G {\n");
    let mut nodes: Vec<_> = g.nodes().iter().collect();
    nodes.sort_by(|a, b| a.name.cmp(&b.name));
    for n in nodes {
        let attrs = match (n.kind, n.latent) {
            (NodeKind::RegimeIndicator, _) => "shape=box",
            (NodeKind::Chance, true) => "shape=ellipse, style=dashed",
            (NodeKind::Chance, false) => "shape=ellipse",
        };
        let _ = writeln!(out, "  \"{}\" [{}];", n.name, attrs);
    }
    for (a, b) in g.edges() {
        let _ = writeln!(out, "  \"{a}\" -> \"{b}\";");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boxes_for_regime_nodes() {
        let mut g = Dag::from_edges(&["X", "Y"], &[("X", "Y")]).unwrap();
        g.add_regime_indicator("sigma_X", "X").unwrap();
        let dot = to_dot(&g);
        assert!(dot.contains("\"sigma_X\" [shape=box];"));
        assert!(dot.contains("\"X\" -> \"Y\";"));
        assert!(dot.contains("\"sigma_X\" -> \"X\";"));
    }
}
