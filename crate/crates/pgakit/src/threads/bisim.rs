//! Bisimulation equivalence of threads by partition refinement.
//!
//! Both graphs are thrown into one node set, the initial partition groups
//! nodes by observation (`S`, `D`, or the action performed) and blocks are
//! split on successor blocks until stable. Two threads are equivalent iff
//! their roots end up in the same block. Because `tau` postconditionals are
//! canonicalized to equal branches on construction, no extra care for the
//! silent action is needed here.

use std::collections::HashMap;

use super::{Action, Node, Thread};

/// Witness that two threads differ: follow `path` from both roots (the flag
/// picks the True or False branch), after which the observations differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distinction {
    pub path: Vec<(Action, bool)>,
    pub left: String,
    pub right: String,
}

impl std::fmt::Display for Distinction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() {
            write!(f, "at the root: left {}, right {}", self.left, self.right)
        } else {
            let steps: Vec<String> = self
                .path
                .iter()
                .map(|(a, b)| format!("{a}[{}]", if *b { '+' } else { '-' }))
                .collect();
            write!(
                f,
                "after {}: left {}, right {}",
                steps.join(" "),
                self.left,
                self.right
            )
        }
    }
}

struct Arena<'t> {
    nodes: Vec<&'t Node>,
    left_root: usize,
    right_root: usize,
}

fn arena<'t>(a: &'t Thread, b: &'t Thread) -> (Arena<'t>, usize) {
    let mut nodes: Vec<&Node> = a.nodes().iter().collect();
    let offset = nodes.len();
    nodes.extend(b.nodes().iter());
    (
        Arena {
            nodes,
            left_root: a.root().0,
            right_root: b.root().0 + offset,
        },
        offset,
    )
}

fn successor(node: &Node, offset: usize) -> Option<(usize, usize)> {
    match node {
        Node::Post { t, f, .. } => Some((t.0 + offset, f.0 + offset)),
        _ => None,
    }
}

/// Partition history: `rounds[r][i]` is the block of node `i` after round
/// `r`; round 0 groups by observation only.
fn refine(arena: &Arena<'_>, offset: usize) -> Vec<Vec<usize>> {
    let n = arena.nodes.len();
    let shift = |i: usize| if i < offset { 0 } else { offset };
    let mut blocks: Vec<usize> = {
        let mut key_ids: HashMap<String, usize> = HashMap::new();
        arena
            .nodes
            .iter()
            .map(|node| {
                let key = match node {
                    Node::Stop => "S".to_string(),
                    Node::Dead => "D".to_string(),
                    Node::Post { action, .. } => format!("A {action}"),
                };
                let next = key_ids.len();
                *key_ids.entry(key).or_insert(next)
            })
            .collect()
    };
    let mut rounds = vec![blocks.clone()];
    loop {
        let mut key_ids: HashMap<(usize, Option<(usize, usize)>), usize> = HashMap::new();
        let mut next_blocks = Vec::with_capacity(n);
        for (i, node) in arena.nodes.iter().enumerate() {
            let succ = successor(node, shift(i)).map(|(t, f)| (blocks[t], blocks[f]));
            let key = (blocks[i], succ);
            let next = key_ids.len();
            next_blocks.push(*key_ids.entry(key).or_insert(next));
        }
        if next_blocks == blocks {
            return rounds;
        }
        blocks = next_blocks;
        rounds.push(blocks.clone());
    }
}

pub fn bisim_equal(a: &Thread, b: &Thread) -> bool {
    let (arena, offset) = arena(a, b);
    let rounds = refine(&arena, offset);
    let last = rounds.last().unwrap();
    last[arena.left_root] == last[arena.right_root]
}

/// `None` when bisimilar, otherwise a shortest-refinement witness.
pub fn bisim_distinguish(a: &Thread, b: &Thread) -> Option<Distinction> {
    let (arena, offset) = arena(a, b);
    let rounds = refine(&arena, offset);
    let last = rounds.last().unwrap();
    let (mut x, mut y) = (arena.left_root, arena.right_root);
    if last[x] == last[y] {
        return None;
    }
    let describe = |i: usize| match arena.nodes[i] {
        Node::Stop => "terminates (S)".to_string(),
        Node::Dead => "deadlocks (D)".to_string(),
        Node::Post { action, .. } => format!("offers {action}"),
    };
    let first_diff = |x: usize, y: usize| rounds.iter().position(|r| r[x] != r[y]);
    let mut round = first_diff(x, y).expect("roots differ in the final partition");
    let mut path = Vec::new();
    while round > 0 {
        // Same observation, so both are Post nodes with the same action;
        // some successor pair must already differ in the previous round.
        let shift_x = if x < offset { 0 } else { offset };
        let shift_y = if y < offset { 0 } else { offset };
        let Node::Post { action, .. } = arena.nodes[x] else {
            unreachable!("round > 0 requires matching Post nodes")
        };
        let (tx, fx) = successor(arena.nodes[x], shift_x).unwrap();
        let (ty, fy) = successor(arena.nodes[y], shift_y).unwrap();
        let prev = &rounds[round - 1];
        let (branch, nx, ny) = if prev[tx] != prev[ty] {
            (true, tx, ty)
        } else {
            debug_assert_ne!(prev[fx], prev[fy]);
            (false, fx, fy)
        };
        path.push((action.clone(), branch));
        x = nx;
        y = ny;
        round = first_diff(x, y).expect("successors differ");
    }
    Some(Distinction {
        path,
        left: describe(x),
        right: describe(y),
    })
}
