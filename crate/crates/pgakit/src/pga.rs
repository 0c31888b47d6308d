//! PGA terms and their execution: canonical forms, jump resolution, thread
//! extraction, jump-chain normalization, and a direct positional interpreter
//! used as a differential oracle against the thread route.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::services::{RegisterState, Reply, ServiceDescription};
use crate::syntax::{BasicCore, PrimitiveInstruction};
use crate::threads::{Action, Node, NodeId, Thread, ThreadBuilder};

/// A PGA term: a single instruction, concatenation, or repetition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PgaTerm {
    Inst(PrimitiveInstruction),
    Concat(Box<PgaTerm>, Box<PgaTerm>),
    Rep(Box<PgaTerm>),
}

impl PgaTerm {
    /// Right-nested concatenation of a non-empty instruction list.
    pub fn seq(instrs: &[PrimitiveInstruction]) -> PgaTerm {
        let (last, front) = instrs.split_last().expect("seq of empty instruction list");
        front
            .iter()
            .rev()
            .fold(PgaTerm::Inst(last.clone()), |acc, u| {
                PgaTerm::Concat(Box::new(PgaTerm::Inst(u.clone())), Box::new(acc))
            })
    }

    pub fn then(self, other: PgaTerm) -> PgaTerm {
        PgaTerm::Concat(Box::new(self), Box::new(other))
    }

    pub fn rep(self) -> PgaTerm {
        PgaTerm::Rep(Box::new(self))
    }
}

/// First canonical form: a finite prefix, optionally followed by a repeating
/// tail (`P` when `repeat` is empty, `P;Q^ω` otherwise).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalProgram {
    prefix: Vec<PrimitiveInstruction>,
    repeat: Vec<PrimitiveInstruction>,
}

impl CanonicalProgram {
    fn check(instrs: &[PrimitiveInstruction]) {
        assert!(
            !instrs
                .iter()
                .any(|u| matches!(u, PrimitiveInstruction::AbsJump(_))),
            "absolute jumps must be projected away before entering PGA"
        );
    }

    pub fn finite(prefix: Vec<PrimitiveInstruction>) -> Self {
        assert!(!prefix.is_empty(), "empty program");
        Self::check(&prefix);
        CanonicalProgram {
            prefix,
            repeat: Vec::new(),
        }
    }

    pub fn repeating(prefix: Vec<PrimitiveInstruction>, repeat: Vec<PrimitiveInstruction>) -> Self {
        assert!(!repeat.is_empty(), "repeating part must be non-empty");
        Self::check(&prefix);
        Self::check(&repeat);
        CanonicalProgram { prefix, repeat }
    }

    pub fn prefix(&self) -> &[PrimitiveInstruction] {
        &self.prefix
    }

    pub fn repeat(&self) -> &[PrimitiveInstruction] {
        &self.repeat
    }

    pub fn is_finite(&self) -> bool {
        self.repeat.is_empty()
    }

    /// Number of distinct (canonical) positions.
    pub fn total_len(&self) -> usize {
        self.prefix.len() + self.repeat.len()
    }

    /// Map a 1-based position into `[1..total_len]`, wrapping positions past
    /// the end into the repeating part. `None` when the program is finite and
    /// the position is off the end.
    pub fn canonical_position(&self, q: usize) -> Option<usize> {
        debug_assert!(q >= 1);
        if q <= self.total_len() {
            return Some(q);
        }
        if self.repeat.is_empty() {
            return None;
        }
        let n_pre = self.prefix.len();
        Some(n_pre + ((q - n_pre - 1) % self.repeat.len()) + 1)
    }

    /// Instruction at a canonical position.
    pub fn instruction(&self, q: usize) -> &PrimitiveInstruction {
        assert!(q >= 1 && q <= self.total_len(), "position {q} out of range");
        if q <= self.prefix.len() {
            &self.prefix[q - 1]
        } else {
            &self.repeat[q - self.prefix.len() - 1]
        }
    }
}

impl fmt::Display for CanonicalProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |instrs: &[PrimitiveInstruction]| {
            instrs
                .iter()
                .map(crate::syntax::render_instruction)
                .collect::<Vec<_>>()
                .join(";")
        };
        if self.prefix.is_empty() && self.repeat.is_empty() {
            return Ok(());
        }
        if !self.prefix.is_empty() {
            write!(f, "{}", join(&self.prefix))?;
            if !self.repeat.is_empty() {
                f.write_str(";")?;
            }
        }
        if !self.repeat.is_empty() {
            write!(f, "({})^w", join(&self.repeat))?;
        }
        Ok(())
    }
}

/// Reduce a term to canonical form: concatenation is flattened, anything
/// after a repeating part is dropped, and repetition of an already-repeating
/// or finite body becomes the repeating tail.
pub fn canonicalize(term: &PgaTerm) -> CanonicalProgram {
    fn go(term: &PgaTerm) -> (Vec<PrimitiveInstruction>, Vec<PrimitiveInstruction>) {
        match term {
            PgaTerm::Inst(u) => (vec![u.clone()], Vec::new()),
            PgaTerm::Concat(x, y) => {
                let (mut px, rx) = go(x);
                if !rx.is_empty() {
                    return (px, rx);
                }
                let (py, ry) = go(y);
                px.extend(py);
                (px, ry)
            }
            PgaTerm::Rep(x) => {
                let (px, rx) = go(x);
                if rx.is_empty() {
                    (Vec::new(), px)
                } else {
                    (px, rx)
                }
            }
        }
    }
    let (prefix, repeat) = go(term);
    if repeat.is_empty() {
        CanonicalProgram::finite(prefix)
    } else {
        CanonicalProgram::repeating(prefix, repeat)
    }
}

/// Where a control transfer starting at a position ends up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Landing {
    /// Canonical position of a non-jump instruction.
    AtPosition(usize),
    /// Past the end of a finite program.
    OffEnd,
    /// `#0` or an infinite jump chain.
    Divergent,
}

/// Follow forward jumps starting at (raw, 1-based) position `p` until a
/// non-jump instruction, the end of a finite program, or divergence.
pub fn resolve_jump(prog: &CanonicalProgram, p: usize) -> Landing {
    let mut visited = HashSet::new();
    let mut q = p;
    loop {
        let Some(c) = prog.canonical_position(q) else {
            return Landing::OffEnd;
        };
        match prog.instruction(c) {
            PrimitiveInstruction::FwdJump(0) => return Landing::Divergent,
            PrimitiveInstruction::FwdJump(l) => {
                if !visited.insert(c) {
                    return Landing::Divergent;
                }
                q = c + l;
            }
            _ => return Landing::AtPosition(c),
        }
    }
}

fn core_action(core: &BasicCore) -> Action {
    Action::Basic {
        focus: core.focus.clone(),
        method: core.method.render(),
    }
}

/// The behaviour of a canonical program: one thread node per reachable
/// non-jump position, with jump chains resolved on the fly and off-end or
/// divergent transfers landing in `D`.
pub fn extract_thread(prog: &CanonicalProgram) -> Thread {
    struct Extract<'p> {
        prog: &'p CanonicalProgram,
        builder: ThreadBuilder,
        nodes: BTreeMap<usize, NodeId>,
        dead: Option<NodeId>,
        queue: Vec<usize>,
    }
    impl Extract<'_> {
        fn landing_node(&mut self, q: usize) -> NodeId {
            match resolve_jump(self.prog, q) {
                Landing::OffEnd | Landing::Divergent => *self
                    .dead
                    .get_or_insert_with(|| self.builder.push(Node::Dead)),
                Landing::AtPosition(c) => *self.nodes.entry(c).or_insert_with(|| {
                    self.queue.push(c);
                    self.builder.reserve()
                }),
            }
        }
    }
    let mut ex = Extract {
        prog,
        builder: ThreadBuilder::new(),
        nodes: BTreeMap::new(),
        dead: None,
        queue: Vec::new(),
    };
    let root = ex.landing_node(1);
    let mut i = 0;
    while i < ex.queue.len() {
        let c = ex.queue[i];
        i += 1;
        let id = ex.nodes[&c];
        let node = match prog.instruction(c) {
            PrimitiveInstruction::Halt => Node::Stop,
            PrimitiveInstruction::Plain(core) => {
                let next = ex.landing_node(c + 1);
                Node::Post {
                    action: core_action(core),
                    t: next,
                    f: next,
                }
            }
            PrimitiveInstruction::PosTest(core) => Node::Post {
                action: core_action(core),
                t: ex.landing_node(c + 1),
                f: ex.landing_node(c + 2),
            },
            PrimitiveInstruction::NegTest(core) => Node::Post {
                action: core_action(core),
                t: ex.landing_node(c + 2),
                f: ex.landing_node(c + 1),
            },
            PrimitiveInstruction::FwdJump(_) | PrimitiveInstruction::AbsJump(_) => {
                unreachable!("jump positions are resolved, not enqueued")
            }
        };
        ex.builder.set(id, node);
    }
    ex.builder.build(root)
}

/// Normalize jump chains: every jump is replaced by a single jump to the
/// final landing of its chain (reduced into the first unfolding of the
/// repeating part), and divergent chains become `#0`. The extracted
/// behaviour is unchanged.
pub fn struct_normalize(prog: &CanonicalProgram) -> CanonicalProgram {
    let n_rep = prog.repeat.len();
    let normalize_at = |p: usize, l: usize| -> PrimitiveInstruction {
        if l == 0 {
            return PrimitiveInstruction::FwdJump(0);
        }
        // Walk the chain, remembering the raw end for off-end chains.
        let mut visited = HashSet::new();
        let mut q = p;
        loop {
            let Some(c) = prog.canonical_position(q) else {
                // Finite program: the chain ran off the end at raw `q`.
                return PrimitiveInstruction::FwdJump(q - p);
            };
            match prog.instruction(c) {
                PrimitiveInstruction::FwdJump(0) => return PrimitiveInstruction::FwdJump(0),
                PrimitiveInstruction::FwdJump(step) => {
                    if !visited.insert(c) {
                        return PrimitiveInstruction::FwdJump(0);
                    }
                    q = c + step;
                }
                _ => {
                    // Smallest raw position after p that lands at c.
                    let r = if c > p {
                        c
                    } else {
                        c + (((p - c) / n_rep) + 1) * n_rep
                    };
                    return PrimitiveInstruction::FwdJump(r - p);
                }
            }
        }
    };
    let rewrite = |instrs: &[PrimitiveInstruction], offset: usize| {
        instrs
            .iter()
            .enumerate()
            .map(|(i, u)| match u {
                PrimitiveInstruction::FwdJump(l) => normalize_at(offset + i + 1, *l),
                other => other.clone(),
            })
            .collect::<Vec<_>>()
    };
    let prefix = rewrite(&prog.prefix, 0);
    let repeat = rewrite(&prog.repeat, prog.prefix.len());
    CanonicalProgram { prefix, repeat }
}

/// A named collection of services the interpreter may call on.
#[derive(Default)]
pub struct ServiceEnv {
    entries: Vec<(String, Box<dyn ServiceDescription>)>,
}

impl ServiceEnv {
    pub fn new() -> Self {
        ServiceEnv::default()
    }

    pub fn with(mut self, focus: &str, svc: Box<dyn ServiceDescription>) -> Self {
        self.entries.push((focus.to_string(), svc));
        self
    }

    fn index_of(&self, focus: &str) -> Option<usize> {
        self.entries.iter().position(|(f, _)| f == focus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Reached a halt instruction (or `S`).
    Termination,
    /// Deadlock: off the end, divergent jumps, a blocked service request,
    /// or an infinite internal loop.
    Inaction,
    /// Fuel ran out before the run settled.
    Exhausted,
}

/// Externally visible events plus how the run ended. Each event pairs the
/// performed action with the boolean reply used to continue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<(Action, bool)>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("ran out of reply booleans after {consumed} events")]
    RepliesExhausted { consumed: usize },
}

/// Execute a canonical program positionally. Actions whose focus has a
/// service in `env` are processed internally: boolean replies steer tests
/// silently, `Meaningless` replies surface the transformed action as an
/// event, and `Blocked` replies deadlock. Actions with other foci are
/// external events; each event consumes one boolean from `replies` (its
/// observed reply) and one unit of fuel.
pub fn interpret_trace(
    prog: &CanonicalProgram,
    env: &ServiceEnv,
    replies: &[bool],
    fuel: usize,
) -> Result<Trace, TraceError> {
    let mut states: Vec<RegisterState> = env
        .entries
        .iter()
        .map(|(_, svc)| svc.initial_state())
        .collect();
    let mut events: Vec<(Action, bool)> = Vec::new();
    let mut fuel = fuel;
    let mut cursor = 0usize;
    let mut visited: HashSet<(usize, Vec<RegisterState>)> = HashSet::new();
    let mut p = 1usize;
    let done = |events: Vec<(Action, bool)>, outcome: Outcome| Ok(Trace { events, outcome });

    loop {
        let Some(c) = prog.canonical_position(p) else {
            return done(events, Outcome::Inaction);
        };
        // Re-seeing a position with identical service states and nothing
        // consumed in between means the run spins forever without output.
        if !visited.insert((c, states.clone())) {
            return done(events, Outcome::Inaction);
        }
        let instr = prog.instruction(c);
        match instr {
            PrimitiveInstruction::Halt => return done(events, Outcome::Termination),
            PrimitiveInstruction::FwdJump(0) => return done(events, Outcome::Inaction),
            PrimitiveInstruction::FwdJump(l) => {
                p = c + l;
            }
            PrimitiveInstruction::AbsJump(_) => {
                unreachable!("canonical programs contain no absolute jumps")
            }
            PrimitiveInstruction::Plain(core)
            | PrimitiveInstruction::PosTest(core)
            | PrimitiveInstruction::NegTest(core) => {
                let step = env.index_of(&core.focus).map(|idx| (idx, core));
                let (action, taken) = match step {
                    Some((idx, core)) => {
                        let method = core.method.render();
                        let step = env.entries[idx].1.process(&states[idx], &method);
                        match step.reply {
                            Reply::True | Reply::False => {
                                states[idx] = step.next;
                                p = advance(instr, c, step.reply == Reply::True);
                                continue;
                            }
                            Reply::Blocked => return done(events, Outcome::Inaction),
                            Reply::Meaningless => {
                                if fuel == 0 {
                                    return done(events, Outcome::Exhausted);
                                }
                                let Some(b) = replies.get(cursor).copied() else {
                                    return Err(TraceError::RepliesExhausted {
                                        consumed: events.len(),
                                    });
                                };
                                states[idx] = step.next;
                                (step.action, b)
                            }
                        }
                    }
                    None => {
                        if fuel == 0 {
                            return done(events, Outcome::Exhausted);
                        }
                        let Some(b) = replies.get(cursor).copied() else {
                            return Err(TraceError::RepliesExhausted {
                                consumed: events.len(),
                            });
                        };
                        (core_action(core), b)
                    }
                };
                cursor += 1;
                fuel -= 1;
                events.push((action, taken));
                visited.clear();
                p = advance(instr, c, taken);
            }
        }
    }
}

/// Position after a basic instruction at canonical position `c` replied
/// `taken`: plain instructions always fall through; tests skip one
/// instruction on the losing branch.
fn advance(instr: &PrimitiveInstruction, c: usize, taken: bool) -> usize {
    match instr {
        PrimitiveInstruction::Plain(_) => c + 1,
        PrimitiveInstruction::PosTest(_) => {
            if taken {
                c + 1
            } else {
                c + 2
            }
        }
        PrimitiveInstruction::NegTest(_) => {
            if taken {
                c + 2
            } else {
                c + 1
            }
        }
        _ => unreachable!("advance applies to basic instructions only"),
    }
}

/// Walk a thread with a list of reply booleans, producing the same kind of
/// trace as `interpret_trace`: one event per visible action, `tau` steps
/// followed silently (an all-`tau` cycle is inaction).
pub fn walk_thread(thread: &Thread, replies: &[bool], fuel: usize) -> Result<Trace, TraceError> {
    let mut events: Vec<(Action, bool)> = Vec::new();
    let mut fuel = fuel;
    let mut cursor = 0usize;
    let mut visited: HashSet<NodeId> = HashSet::new();
    let mut at = thread.root();
    loop {
        match thread.node(at) {
            Node::Stop => {
                return Ok(Trace {
                    events,
                    outcome: Outcome::Termination,
                })
            }
            Node::Dead => {
                return Ok(Trace {
                    events,
                    outcome: Outcome::Inaction,
                })
            }
            Node::Post { action, t, f } => {
                if action.is_tau() {
                    if !visited.insert(at) {
                        return Ok(Trace {
                            events,
                            outcome: Outcome::Inaction,
                        });
                    }
                    at = *t;
                    continue;
                }
                if fuel == 0 {
                    return Ok(Trace {
                        events,
                        outcome: Outcome::Exhausted,
                    });
                }
                let Some(b) = replies.get(cursor).copied() else {
                    return Err(TraceError::RepliesExhausted {
                        consumed: events.len(),
                    });
                };
                cursor += 1;
                fuel -= 1;
                events.push((action.clone(), b));
                visited.clear();
                at = if b { *t } else { *f };
            }
        }
    }
}
