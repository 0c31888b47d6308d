//! The action-transforming use operator: compose a thread with a service.
//!
//! `apply_use(p, f, H, s)` runs thread `p` against service `H` listening on
//! focus `f`, starting from service state `s`. Actions outside the focus pass
//! through untouched. Actions `f.m` are handed to the service:
//!
//! * reply True — the action becomes `tau` and the True branch continues in
//!   the service's next state;
//! * reply False — likewise with the False branch;
//! * reply Meaningless — the action is replaced by the service's visible
//!   action and both branches continue in the next state;
//! * reply Blocked — the composition deadlocks (`D`).
//!
//! Termination (`S`) and deadlock (`D`) are unaffected, as is `tau`.

use std::collections::HashMap;

use thiserror::Error;

use crate::services::{RegisterState, Reply, ServiceDescription};

use super::{Action, Node, NodeId, Thread, ThreadBuilder};

/// Default cap on the number of (thread node, service state) pairs explored.
pub const DEFAULT_PRODUCT_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UseError {
    #[error("product state space exceeds limit of {limit} states")]
    StateSpaceExceeded { limit: usize },
}

pub fn apply_use(
    thread: &Thread,
    focus: &str,
    service: &dyn ServiceDescription,
    initial: &RegisterState,
    limit: usize,
) -> Result<Thread, UseError> {
    struct Product {
        builder: ThreadBuilder,
        memo: HashMap<(NodeId, RegisterState), NodeId>,
        queue: Vec<(NodeId, RegisterState)>,
        limit: usize,
    }
    impl Product {
        fn intern(&mut self, key: (NodeId, RegisterState)) -> Result<NodeId, UseError> {
            if let Some(id) = self.memo.get(&key) {
                return Ok(*id);
            }
            if self.memo.len() >= self.limit {
                return Err(UseError::StateSpaceExceeded { limit: self.limit });
            }
            let id = self.builder.reserve();
            self.memo.insert(key.clone(), id);
            self.queue.push(key);
            Ok(id)
        }
    }
    let mut p = Product {
        builder: ThreadBuilder::new(),
        memo: HashMap::new(),
        queue: Vec::new(),
        limit,
    };

    let root = p.intern((thread.root(), initial.clone()))?;
    let mut i = 0;
    while i < p.queue.len() {
        let (node_id, state) = p.queue[i].clone();
        i += 1;
        let product_id = p.memo[&(node_id, state.clone())];
        let node = match thread.node(node_id) {
            Node::Stop => Node::Stop,
            Node::Dead => Node::Dead,
            Node::Post { action, t, f } => {
                let passes_through = match action {
                    Action::Tau => true,
                    Action::Basic { focus: g, .. } => g != focus,
                };
                if passes_through {
                    Node::Post {
                        action: action.clone(),
                        t: p.intern((*t, state.clone()))?,
                        f: p.intern((*f, state.clone()))?,
                    }
                } else {
                    let Action::Basic { method, .. } = action else {
                        unreachable!("tau passes through");
                    };
                    let step = service.process(&state, method);
                    match step.reply {
                        Reply::True => {
                            let next = p.intern((*t, step.next))?;
                            Node::Post {
                                action: Action::Tau,
                                t: next,
                                f: next,
                            }
                        }
                        Reply::False => {
                            let next = p.intern((*f, step.next))?;
                            Node::Post {
                                action: Action::Tau,
                                t: next,
                                f: next,
                            }
                        }
                        Reply::Meaningless => Node::Post {
                            action: step.action,
                            t: p.intern((*t, step.next.clone()))?,
                            f: p.intern((*f, step.next))?,
                        },
                        Reply::Blocked => Node::Dead,
                    }
                }
            }
        };
        p.builder.set(product_id, node);
    }
    Ok(p.builder.build(root))
}
