use std::fmt::Write as _;

use rustc_hash::FxHashSet;

use super::{BddManager, Var};

pub(super) fn render(m: &BddManager, root: u32, name: impl Fn(Var) -> String) -> String {
    let mut out = String::from("digraph bdd {\n  node [shape=circle];\n");
    out.push_str("  n0 [label=\"0\", shape=box];\n  n1 [label=\"1\", shape=box];\n");
    let mut seen = FxHashSet::default();
    let mut stack = vec![root];
    let mut nodes = Vec::new();
    while let Some(n) = stack.pop() {
        if n < 2 || !seen.insert(n) {
            continue;
        }
        nodes.push(n);
        let node = m.nodes[n as usize];
        stack.push(node.hi);
        stack.push(node.lo);
    }
    nodes.sort_unstable();
    for n in nodes {
        let node = m.nodes[n as usize];
        let _ = writeln!(out, "  n{n} [label=\"{}\"];", name(Var(node.var)).replace('"', "\\\""));
        let _ = writeln!(out, "  n{n} -> n{} [style=dashed];", node.lo);
        let _ = writeln!(out, "  n{n} -> n{};", node.hi);
    }
    let _ = writeln!(out, "  root -> n{root};\n  root [shape=none, label=\"\"];\n}}");
    out
}
