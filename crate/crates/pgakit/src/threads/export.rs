//! Deterministic thread exports: adjacency JSON and Graphviz DOT.
//!
//! Nodes are numbered in BFS order from the root (True branch first), so
//! identical threads always serialize identically and the root is node 0.

use serde::Serialize;

use super::{Node, Thread};

#[derive(Serialize)]
struct JsonThread {
    root: usize,
    nodes: Vec<JsonNode>,
}

#[derive(Serialize)]
struct JsonNode {
    id: usize,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<usize>,
}

pub fn thread_to_json(thread: &Thread) -> String {
    let t = thread.renumbered();
    let nodes = t
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, node)| match node {
            Node::Stop => JsonNode {
                id,
                kind: "S",
                action: None,
                t: None,
                f: None,
            },
            Node::Dead => JsonNode {
                id,
                kind: "D",
                action: None,
                t: None,
                f: None,
            },
            Node::Post { action, t, f } => JsonNode {
                id,
                kind: "A",
                action: Some(action.to_string()),
                t: Some(t.0),
                f: Some(f.0),
            },
        })
        .collect();
    let doc = JsonThread { root: 0, nodes };
    let mut out = serde_json::to_string_pretty(&doc).expect("thread export serializes");
    out.push('\n');
    out
}

pub fn thread_to_dot(thread: &Thread) -> String {
    let t = thread.renumbered();
    let mut out = String::from("digraph thread {\n  rankdir=TB;\n");
    for (id, node) in t.nodes().iter().enumerate() {
        match node {
            Node::Stop => out.push_str(&format!("  n{id} [label=\"S\", shape=box];\n")),
            Node::Dead => out.push_str(&format!("  n{id} [label=\"D\", shape=box];\n")),
            Node::Post { action, .. } => {
                out.push_str(&format!("  n{id} [label=\"{action}\"];\n"));
            }
        }
    }
    for (id, node) in t.nodes().iter().enumerate() {
        if let Node::Post { t: tt, f: ff, .. } = node {
            if tt == ff {
                out.push_str(&format!("  n{id} -> n{};\n", tt.0));
            } else {
                out.push_str(&format!("  n{id} -> n{} [label=\"+\"];\n", tt.0));
                out.push_str(&format!("  n{id} -> n{} [label=\"-\"];\n", ff.0));
            }
        }
    }
    out.push_str("}\n");
    out
}
