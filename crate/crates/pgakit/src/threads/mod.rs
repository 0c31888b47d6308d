//! Finite-state behaviours: regular threads over basic actions.
//!
//! A thread is a rooted graph whose nodes either terminate (`S`), deadlock
//! (`D`) or perform an action and continue along a True or False branch.
//! The silent action `tau` never lets the False branch matter: postconditional
//! nodes over `tau` are canonicalized to equal branches on construction.

mod bisim;
mod compose;
mod export;

pub use bisim::{bisim_distinguish, bisim_equal, Distinction};
pub use compose::{apply_use, UseError, DEFAULT_PRODUCT_LIMIT};
pub use export::{thread_to_dot, thread_to_json};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Tau,
    Basic { focus: String, method: String },
}

impl Action {
    pub fn basic(focus: &str, method: &str) -> Self {
        Action::Basic {
            focus: focus.to_string(),
            method: method.to_string(),
        }
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, Action::Tau)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Tau => f.write_str("tau"),
            Action::Basic { focus, method } => write!(f, "{focus}.{method}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    /// Successful termination.
    Stop,
    /// Inaction / deadlock.
    Dead,
    /// Perform `action`; continue at `t` on a True reply, `f` on False.
    Post {
        action: Action,
        t: NodeId,
        f: NodeId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thread {
    nodes: Vec<Node>,
    root: NodeId,
}

impl Thread {
    /// Build a thread from explicit nodes. Panics on dangling node ids;
    /// `tau` postconditionals are canonicalized to equal branches.
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Self {
        let nodes: Vec<Node> = nodes.into_iter().map(canonicalize).collect();
        let check = |id: NodeId| {
            assert!(id.0 < nodes.len(), "dangling node id {}", id.0);
        };
        check(root);
        for node in &nodes {
            if let Node::Post { t, f, .. } = node {
                check(*t);
                check(*f);
            }
        }
        Thread { nodes, root }
    }

    pub fn stop() -> Self {
        Thread::new(vec![Node::Stop], NodeId(0))
    }

    pub fn dead() -> Self {
        Thread::new(vec![Node::Dead], NodeId(0))
    }

    /// `action ∘ t`: perform the action, then behave as `t` either way.
    /// Both branches share the continuation's nodes.
    pub fn prefix(action: Action, t: &Thread) -> Self {
        let mut nodes = t.nodes.clone();
        nodes.push(Node::Post {
            action,
            t: t.root,
            f: t.root,
        });
        let root = NodeId(nodes.len() - 1);
        Thread::new(nodes, root)
    }

    /// Postconditional composition of two threads.
    pub fn postcond(action: Action, t: &Thread, f: &Thread) -> Self {
        let mut nodes = t.nodes.clone();
        let offset = nodes.len();
        nodes.extend(f.nodes.iter().cloned().map(|n| shift(n, offset)));
        let root_t = t.root;
        let root_f = NodeId(f.root.0 + offset);
        nodes.push(Node::Post {
            action,
            t: root_t,
            f: root_f,
        });
        let root = NodeId(nodes.len() - 1);
        Thread::new(nodes, root)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nodes reachable from the root in breadth-first order (True branch
    /// before False branch) — the canonical enumeration used by exports.
    pub fn bfs_order(&self) -> Vec<NodeId> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(self.root);
        seen[self.root.0] = true;
        while let Some(id) = queue.pop_front() {
            order.push(id);
            if let Node::Post { t, f, .. } = self.node(id) {
                for next in [*t, *f] {
                    if !seen[next.0] {
                        seen[next.0] = true;
                        queue.push_back(next);
                    }
                }
            }
        }
        order
    }

    /// Copy with nodes renumbered in BFS order and unreachables dropped.
    pub fn renumbered(&self) -> Thread {
        let order = self.bfs_order();
        let mut map = vec![usize::MAX; self.nodes.len()];
        for (new, old) in order.iter().enumerate() {
            map[old.0] = new;
        }
        let nodes = order
            .iter()
            .map(|old| match self.node(*old) {
                Node::Stop => Node::Stop,
                Node::Dead => Node::Dead,
                Node::Post { action, t, f } => Node::Post {
                    action: action.clone(),
                    t: NodeId(map[t.0]),
                    f: NodeId(map[f.0]),
                },
            })
            .collect();
        Thread::new(nodes, NodeId(0))
    }

    /// Abstraction: remove `tau` steps. Chains of `tau` collapse onto the
    /// first visible node; a cycle consisting solely of `tau` steps becomes
    /// `D`. The result contains no `tau` actions and abstracting twice is
    /// the same as abstracting once.
    pub fn abstract_tau(&self) -> Thread {
        #[derive(Clone, Copy, PartialEq)]
        enum Repr {
            Unknown,
            InProgress,
            Node(usize),
            Dead,
        }
        let mut repr = vec![Repr::Unknown; self.nodes.len()];
        for start in 0..self.nodes.len() {
            if repr[start] != Repr::Unknown {
                continue;
            }
            let mut path = Vec::new();
            let mut cur = start;
            let outcome = loop {
                match repr[cur] {
                    Repr::Node(n) => break Repr::Node(n),
                    Repr::Dead => break Repr::Dead,
                    Repr::InProgress => break Repr::Dead, // tau cycle
                    Repr::Unknown => {}
                }
                match &self.nodes[cur] {
                    Node::Post { action, t, .. } if action.is_tau() => {
                        repr[cur] = Repr::InProgress;
                        path.push(cur);
                        cur = t.0;
                    }
                    _ => break Repr::Node(cur),
                }
            };
            for id in path {
                repr[id] = outcome;
            }
            if repr[start] == Repr::Unknown {
                repr[start] = outcome;
            }
        }
        let target = |id: NodeId| match repr[id.0] {
            Repr::Node(n) => Some(n),
            _ => None,
        };
        // Rebuild over representatives; Dead representatives share one node.
        #[derive(Default)]
        struct Rebuild {
            map: BTreeMap<Option<usize>, NodeId>,
            nodes: Vec<Node>,
            queue: Vec<usize>,
        }
        impl Rebuild {
            fn intern(&mut self, key: Option<usize>) -> NodeId {
                if let Some(id) = self.map.get(&key) {
                    return *id;
                }
                let id = NodeId(self.nodes.len());
                self.nodes.push(Node::Dead);
                self.map.insert(key, id);
                if let Some(n) = key {
                    self.queue.push(n);
                }
                id
            }
        }
        let mut rb = Rebuild::default();
        let root = rb.intern(target(self.root));
        let mut i = 0;
        while i < rb.queue.len() {
            let old = rb.queue[i];
            i += 1;
            let new_id = rb.map[&Some(old)];
            let node = match &self.nodes[old] {
                Node::Stop => Node::Stop,
                Node::Dead => Node::Dead,
                Node::Post { action, t, f } => {
                    debug_assert!(!action.is_tau());
                    let t = rb.intern(target(*t));
                    let f = rb.intern(target(*f));
                    Node::Post {
                        action: action.clone(),
                        t,
                        f,
                    }
                }
            };
            rb.nodes[new_id.0] = node;
        }
        Thread::new(rb.nodes, root)
    }

    /// True when no reachable node performs `tau`.
    pub fn is_tau_free(&self) -> bool {
        self.bfs_order().iter().all(|id| match self.node(*id) {
            Node::Post { action, .. } => !action.is_tau(),
            _ => true,
        })
    }
}

fn canonicalize(node: Node) -> Node {
    match node {
        Node::Post { action, t, .. } if action.is_tau() => Node::Post { action, t, f: t },
        other => other,
    }
}

fn shift(node: Node, offset: usize) -> Node {
    match node {
        Node::Post { action, t, f } => Node::Post {
            action,
            t: NodeId(t.0 + offset),
            f: NodeId(f.0 + offset),
        },
        other => other,
    }
}

/// Incremental thread construction with forward references.
pub struct ThreadBuilder {
    nodes: Vec<Node>,
}

impl ThreadBuilder {
    pub fn new() -> Self {
        ThreadBuilder { nodes: Vec::new() }
    }

    /// Allocate a node to be filled in later (defaults to `D`).
    pub fn reserve(&mut self) -> NodeId {
        self.nodes.push(Node::Dead);
        NodeId(self.nodes.len() - 1)
    }

    pub fn set(&mut self, id: NodeId, node: Node) {
        self.nodes[id.0] = canonicalize(node);
    }

    pub fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(canonicalize(node));
        NodeId(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, root: NodeId) -> Thread {
        Thread::new(self.nodes, root)
    }
}

impl Default for ThreadBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Right-hand side of one equation in a guarded recursive specification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rhs {
    Stop,
    Dead,
    Post {
        action: Action,
        t: String,
        f: String,
    },
}

/// A finite guarded recursive specification: every right-hand side is `S`,
/// `D` or a postconditional over named variables, so a unique regular
/// solution always exists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecursiveSpec {
    pub equations: BTreeMap<String, Rhs>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
}

/// The unique solution of `spec` starting at variable `root`.
pub fn from_spec(spec: &RecursiveSpec, root: &str) -> Result<Thread, SpecError> {
    fn lookup<'s>(
        spec: &'s RecursiveSpec,
        name: &str,
        ids: &mut BTreeMap<&'s str, NodeId>,
        builder: &mut ThreadBuilder,
        queue: &mut Vec<&'s str>,
    ) -> Result<NodeId, SpecError> {
        let (key, _) = spec
            .equations
            .get_key_value(name)
            .ok_or_else(|| SpecError::UnboundVariable(name.to_string()))?;
        Ok(*ids.entry(key.as_str()).or_insert_with(|| {
            queue.push(key.as_str());
            builder.reserve()
        }))
    }
    let mut ids: BTreeMap<&str, NodeId> = BTreeMap::new();
    let mut builder = ThreadBuilder::new();
    let mut queue: Vec<&str> = Vec::new();
    let root_id = lookup(spec, root, &mut ids, &mut builder, &mut queue)?;
    let mut i = 0;
    while i < queue.len() {
        let name = queue[i];
        i += 1;
        let id = ids[name];
        let node = match &spec.equations[name] {
            Rhs::Stop => Node::Stop,
            Rhs::Dead => Node::Dead,
            Rhs::Post { action, t, f } => Node::Post {
                action: action.clone(),
                t: lookup(spec, t, &mut ids, &mut builder, &mut queue)?,
                f: lookup(spec, f, &mut ids, &mut builder, &mut queue)?,
            },
        };
        builder.set(id, node);
    }
    Ok(builder.build(root_id))
}

/// Present a thread as a recursive specification with variables `X0`, `X1`,
/// … numbered in BFS order; the root is `X0`.
pub fn to_spec(thread: &Thread) -> RecursiveSpec {
    let t = thread.renumbered();
    let name = |id: NodeId| format!("X{}", id.0);
    let mut equations = BTreeMap::new();
    for (i, node) in t.nodes().iter().enumerate() {
        let rhs = match node {
            Node::Stop => Rhs::Stop,
            Node::Dead => Rhs::Dead,
            Node::Post { action, t, f } => Rhs::Post {
                action: action.clone(),
                t: name(*t),
                f: name(*f),
            },
        };
        equations.insert(name(NodeId(i)), rhs);
    }
    RecursiveSpec { equations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(action: Action, t: &Thread, f: &Thread) -> Thread {
        Thread::postcond(action, t, f)
    }

    #[test]
    fn tau_canonicalized_on_construction() {
        let t = post(Action::Tau, &Thread::stop(), &Thread::dead());
        let Node::Post { t: tt, f: ff, .. } = t.node(t.root()) else {
            panic!()
        };
        assert_eq!(tt, ff);
    }

    #[test]
    fn from_spec_single_loop() {
        let mut spec = RecursiveSpec::default();
        spec.equations.insert(
            "X".into(),
            Rhs::Post {
                action: Action::basic("a", "m"),
                t: "X".into(),
                f: "X".into(),
            },
        );
        let t = from_spec(&spec, "X").unwrap();
        assert_eq!(t.len(), 1);
        let Node::Post { t: tt, f: ff, .. } = t.node(t.root()) else {
            panic!()
        };
        assert_eq!(*tt, t.root());
        assert_eq!(*ff, t.root());
    }

    #[test]
    fn from_spec_unbound() {
        let mut spec = RecursiveSpec::default();
        spec.equations.insert(
            "X".into(),
            Rhs::Post {
                action: Action::Tau,
                t: "Y".into(),
                f: "X".into(),
            },
        );
        assert_eq!(
            from_spec(&spec, "X"),
            Err(SpecError::UnboundVariable("Y".into()))
        );
        assert_eq!(
            from_spec(&spec, "Z"),
            Err(SpecError::UnboundVariable("Z".into()))
        );
    }

    #[test]
    fn spec_round_trip_is_bisimilar() {
        let t = post(
            Action::basic("a", "m"),
            &Thread::prefix(Action::basic("b", "n"), &Thread::stop()),
            &Thread::dead(),
        );
        let spec = to_spec(&t);
        let back = from_spec(&spec, "X0").unwrap();
        assert!(bisim_equal(&t, &back));
    }

    #[test]
    fn abstraction_drops_tau_prefix() {
        // tau ∘ (a ∘ S) = a ∘ S
        let inner = Thread::prefix(Action::basic("a", "m"), &Thread::stop());
        let t = Thread::prefix(Action::Tau, &inner);
        let abs = t.abstract_tau();
        assert!(abs.is_tau_free());
        assert!(bisim_equal(&abs, &inner));
    }

    #[test]
    fn abstraction_of_tau_cycle_is_dead() {
        // tau^ω = D
        let mut spec = RecursiveSpec::default();
        spec.equations.insert(
            "X".into(),
            Rhs::Post {
                action: Action::Tau,
                t: "X".into(),
                f: "X".into(),
            },
        );
        let t = from_spec(&spec, "X").unwrap();
        let abs = t.abstract_tau();
        assert!(bisim_equal(&abs, &Thread::dead()));
    }

    #[test]
    fn abstraction_preserves_visible_branches() {
        // (tau ∘ S) ⊴ a ⊵ (tau ∘ tau^ω) abstracts to S ⊴ a ⊵ D.
        let mut spec = RecursiveSpec::default();
        spec.equations.insert(
            "loop".into(),
            Rhs::Post {
                action: Action::Tau,
                t: "loop".into(),
                f: "loop".into(),
            },
        );
        spec.equations.insert("stop".into(), Rhs::Stop);
        spec.equations.insert(
            "left".into(),
            Rhs::Post {
                action: Action::Tau,
                t: "stop".into(),
                f: "stop".into(),
            },
        );
        spec.equations.insert(
            "root".into(),
            Rhs::Post {
                action: Action::basic("a", "m"),
                t: "left".into(),
                f: "loop".into(),
            },
        );
        let t = from_spec(&spec, "root").unwrap();
        let abs = t.abstract_tau();
        let expect = post(Action::basic("a", "m"), &Thread::stop(), &Thread::dead());
        assert!(bisim_equal(&abs, &expect));
    }

    #[test]
    fn abstraction_idempotent() {
        let t = post(
            Action::basic("a", "m"),
            &Thread::prefix(Action::Tau, &Thread::stop()),
            &Thread::dead(),
        );
        let once = t.abstract_tau();
        let twice = once.abstract_tau();
        assert!(once.is_tau_free());
        assert_eq!(once.renumbered(), twice.renumbered());
    }

    #[test]
    fn bfs_renumbering_is_canonical() {
        // Build the same behaviour with scrambled node order.
        let a = Thread::new(
            vec![
                Node::Stop,
                Node::Post {
                    action: Action::basic("a", "m"),
                    t: NodeId(0),
                    f: NodeId(2),
                },
                Node::Dead,
            ],
            NodeId(1),
        );
        let b = Thread::new(
            vec![
                Node::Dead,
                Node::Stop,
                Node::Post {
                    action: Action::basic("a", "m"),
                    t: NodeId(1),
                    f: NodeId(0),
                },
            ],
            NodeId(2),
        );
        assert_eq!(a.renumbered(), b.renumbered());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        pub fn arb_thread(actions: Vec<Action>, max_nodes: usize) -> BoxedStrategy<Thread> {
            (1..=max_nodes)
                .prop_flat_map(move |n| {
                    let node = prop_oneof![
                        1 => Just(Node::Stop),
                        1 => Just(Node::Dead),
                        4 => (proptest::sample::select(actions.clone()), 0..n, 0..n).prop_map(
                            |(action, t, f)| Node::Post {
                                action,
                                t: NodeId(t),
                                f: NodeId(f),
                            }
                        ),
                    ];
                    proptest::collection::vec(node, n)
                })
                .prop_map(|nodes| Thread::new(nodes, NodeId(0)))
                .boxed()
        }

        fn visible_actions() -> Vec<Action> {
            vec![
                Action::Tau,
                Action::basic("a", "m"),
                Action::basic("b", "n"),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            #[test]
            fn bisimilarity_is_reflexive_and_survives_renumbering(
                t in arb_thread(visible_actions(), 8)
            ) {
                prop_assert!(bisim_equal(&t, &t));
                // t ~ renumbered ~ spec round-trip: checking the ends also
                // spot-checks transitivity through the chain.
                let renumbered = t.renumbered();
                let round = from_spec(&to_spec(&t), "X0").unwrap();
                prop_assert!(bisim_equal(&t, &renumbered));
                prop_assert!(bisim_equal(&renumbered, &round));
                prop_assert!(bisim_equal(&t, &round));
            }

            #[test]
            fn bisimilarity_is_symmetric(
                a in arb_thread(visible_actions(), 6),
                b in arb_thread(visible_actions(), 6),
            ) {
                prop_assert_eq!(bisim_equal(&a, &b), bisim_equal(&b, &a));
            }

            #[test]
            fn abstraction_is_idempotent_and_tau_free(
                t in arb_thread(visible_actions(), 8)
            ) {
                let once = t.abstract_tau();
                prop_assert!(once.is_tau_free());
                prop_assert!(bisim_equal(&once.abstract_tau(), &once));
            }
        }
    }
}
