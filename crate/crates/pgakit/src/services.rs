//! Para-target services: state machines that consume methods and produce
//! replies, used to absorb part of a thread's actions.
//!
//! A service maps (state, method) to a reply, an external action and a next
//! state. Replies are True/False (processed internally, the action is `tau`),
//! Meaningless (the method is turned into a visible action and the reply is
//! delegated to whoever observes it) or Blocked (the method is not accepted
//! and the state collapses to a sink).
//!
//! Two register-file services are provided and selectable by name:
//!
//! * `rfdt` — registers plus dynamic instruction instantiation: accepts
//!   `set:i:n` and proto methods, which it instantiates against the current
//!   register contents (reply Meaningless, visible instantiated action);
//! * `rf` — plain registers: accepts `set:i:n` and `eq:i:n` only.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{
    decimal_enc, instantiate_proto, parse_method, MethodExpr, ProtoMethod, RegisterMap,
};
use crate::threads::Action;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reply {
    True,
    False,
    Meaningless,
    Blocked,
}

impl fmt::Display for Reply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reply::True => "T",
            Reply::False => "F",
            Reply::Meaningless => "M",
            Reply::Blocked => "B",
        })
    }
}

/// Service state: register contents, or the unrecoverable sink.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegisterState {
    Regs(RegisterMap),
    Undef,
}

impl RegisterState {
    pub fn regs(&self) -> Option<&RegisterMap> {
        match self {
            RegisterState::Regs(r) => Some(r),
            RegisterState::Undef => None,
        }
    }
}

impl fmt::Display for RegisterState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegisterState::Regs(r) => write!(f, "{r}"),
            RegisterState::Undef => f.write_str("undef"),
        }
    }
}

/// Result of processing one method: reply, visible action, next state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub reply: Reply,
    pub action: Action,
    pub next: RegisterState,
}

/// A finite-state service description. Implementations must keep `process`
/// pure: the same state and method always give the same step.
pub trait ServiceDescription {
    fn name(&self) -> &str;
    fn initial_state(&self) -> RegisterState;
    /// Finite enumeration of all states, for exhaustive validation.
    fn states(&self) -> Vec<RegisterState>;
    fn process(&self, state: &RegisterState, method: &str) -> Step;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("maxr must be at least 1")]
    BadMaxr,
    #[error("maxn must be at least 1")]
    BadMaxn,
    #[error("state space too large: (maxn+1)^maxr overflows")]
    TooLarge,
}

fn check_config(maxr: u32, maxn: u32) -> Result<(), ConfigError> {
    if maxr == 0 {
        return Err(ConfigError::BadMaxr);
    }
    if maxn == 0 {
        return Err(ConfigError::BadMaxn);
    }
    let mut count: u64 = 1;
    for _ in 0..maxr {
        count = count
            .checked_mul(maxn as u64 + 1)
            .filter(|c| *c <= 1 << 24)
            .ok_or(ConfigError::TooLarge)?;
    }
    Ok(())
}

fn all_register_states(maxr: u32, maxn: u32) -> Vec<RegisterState> {
    let mut states = Vec::new();
    let mut current = vec![0u32; maxr as usize];
    loop {
        states.push(RegisterState::Regs(RegisterMap::from_values(
            current.clone(),
        )));
        let mut i = 0;
        loop {
            if i == current.len() {
                states.push(RegisterState::Undef);
                return states;
            }
            if current[i] < maxn {
                current[i] += 1;
                // Reset lower-index digits for plain odometer order.
                for v in &mut current[..i] {
                    *v = 0;
                }
                break;
            }
            i += 1;
        }
    }
}

/// Decimal numeral without leading zeros.
fn parse_nat(text: &str) -> Option<u32> {
    if text.is_empty() || (text.len() > 1 && text.starts_with('0')) {
        return None;
    }
    if !text.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// `set:i:n` / `eq:i:n` methods with `i` in `[1..maxr]`, `n` in `[0..maxn]`.
fn parse_register_method(method: &str, maxr: u32, maxn: u32) -> Option<(bool, u32, u32)> {
    let mut parts = method.split(':');
    let op = parts.next()?;
    let is_set = match op {
        "set" => true,
        "eq" => false,
        _ => return None,
    };
    let i = parse_nat(parts.next()?)?;
    let n = parse_nat(parts.next()?)?;
    if parts.next().is_some() || i < 1 || i > maxr || n > maxn {
        return None;
    }
    Some((is_set, i, n))
}

fn blocked() -> Step {
    Step {
        reply: Reply::Blocked,
        action: Action::Tau,
        next: RegisterState::Undef,
    }
}

/// Register file with dynamic instruction instantiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfdtConfig {
    pub maxr: u32,
    pub maxn: u32,
}

impl RfdtConfig {
    pub fn new(maxr: u32, maxn: u32) -> Result<Self, ConfigError> {
        check_config(maxr, maxn)?;
        Ok(RfdtConfig { maxr, maxn })
    }

    /// Proto-action membership: a complete (dotted) proto-instruction whose
    /// active segments all name registers in `[1..maxr]`. Anything else is
    /// an unknown method for this service.
    pub fn is_proto(&self, method: &str) -> bool {
        self.parse_proto(method).is_some()
    }

    fn parse_proto(&self, method: &str) -> Option<ProtoMethod> {
        match parse_method(method) {
            Ok(MethodExpr::Proto(p)) if p.is_dotted() && p.references_well_formed() => {
                if p.registers().iter().all(|r| *r >= 1 && *r <= self.maxr) {
                    Some(p)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// The instantiated basic action for a proto method in a given state.
    pub fn theta(&self, proto: &ProtoMethod, regs: &RegisterMap) -> Action {
        let core = instantiate_proto(proto, regs, decimal_enc)
            .expect("is_proto guarantees instantiation succeeds");
        Action::Basic {
            focus: core.focus,
            method: core.method.render(),
        }
    }
}

impl ServiceDescription for RfdtConfig {
    fn name(&self) -> &str {
        "rfdt"
    }

    fn initial_state(&self) -> RegisterState {
        RegisterState::Regs(RegisterMap::zeros(self.maxr))
    }

    fn states(&self) -> Vec<RegisterState> {
        all_register_states(self.maxr, self.maxn)
    }

    fn process(&self, state: &RegisterState, method: &str) -> Step {
        let Some(regs) = state.regs() else {
            return blocked();
        };
        if let Some((true, i, n)) = parse_register_method(method, self.maxr, self.maxn) {
            return Step {
                reply: Reply::True,
                action: Action::Tau,
                next: RegisterState::Regs(regs.with(i, n)),
            };
        }
        if let Some(proto) = self.parse_proto(method) {
            return Step {
                reply: Reply::Meaningless,
                action: self.theta(&proto, regs),
                next: state.clone(),
            };
        }
        blocked()
    }
}

/// Plain register file: `set:i:n` and `eq:i:n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfConfig {
    pub maxr: u32,
    pub maxn: u32,
}

impl RfConfig {
    pub fn new(maxr: u32, maxn: u32) -> Result<Self, ConfigError> {
        check_config(maxr, maxn)?;
        Ok(RfConfig { maxr, maxn })
    }

    /// All methods this service accepts, for validation and tests.
    pub fn methods(&self) -> Vec<String> {
        let mut out = Vec::new();
        for op in ["set", "eq"] {
            for i in 1..=self.maxr {
                for n in 0..=self.maxn {
                    out.push(format!("{op}:{i}:{n}"));
                }
            }
        }
        out
    }
}

impl ServiceDescription for RfConfig {
    fn name(&self) -> &str {
        "rf"
    }

    fn initial_state(&self) -> RegisterState {
        RegisterState::Regs(RegisterMap::zeros(self.maxr))
    }

    fn states(&self) -> Vec<RegisterState> {
        all_register_states(self.maxr, self.maxn)
    }

    fn process(&self, state: &RegisterState, method: &str) -> Step {
        let Some(regs) = state.regs() else {
            return blocked();
        };
        match parse_register_method(method, self.maxr, self.maxn) {
            Some((true, i, n)) => Step {
                reply: Reply::True,
                action: Action::Tau,
                next: RegisterState::Regs(regs.with(i, n)),
            },
            Some((false, i, n)) => Step {
                reply: if regs.get(i) == Some(n) {
                    Reply::True
                } else {
                    Reply::False
                },
                action: Action::Tau,
                next: state.clone(),
            },
            None => blocked(),
        }
    }
}

/// Fold a method sequence through `process`, returning the final state —
/// the state the derived service `∂/∂m ... ∂/∂m' H` starts in.
pub fn derived_state(
    svc: &dyn ServiceDescription,
    from: &RegisterState,
    methods: &[&str],
) -> RegisterState {
    methods
        .iter()
        .fold(from.clone(), |state, m| svc.process(&state, m).next)
}

/// Methods that the service turns into visible actions in at least one of
/// the probed states.
pub fn proto_action_set(
    svc: &dyn ServiceDescription,
    methods: &[&str],
    probe_states: &[RegisterState],
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for m in methods {
        if probe_states
            .iter()
            .any(|s| !svc.process(s, m).action.is_tau())
        {
            out.insert(m.to_string());
        }
    }
    out
}

/// Exhaustive well-formedness check of a service description over a method
/// universe:
///
/// 1. a method that is ever answered Meaningless is never answered True or
///    False in any other state;
/// 2. some state is a blocking sink: it answers Blocked to everything, and
///    every Blocked answer anywhere moves to it;
/// 3. the visible action is non-`tau` exactly on Meaningless answers.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub meaningless_stable: Vec<String>,
    pub sink: Option<RegisterState>,
    pub sink_violations: Vec<String>,
    pub action_discipline: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.meaningless_stable.is_empty()
            && self.sink.is_some()
            && self.sink_violations.is_empty()
            && self.action_discipline.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(
                f,
                "ok (sink state: {})",
                self.sink.as_ref().expect("passed implies sink")
            );
        }
        for v in self
            .meaningless_stable
            .iter()
            .chain(&self.sink_violations)
            .chain(&self.action_discipline)
        {
            writeln!(f, "violation: {v}")?;
        }
        if self.sink.is_none() {
            writeln!(f, "violation: no blocking sink state")?;
        }
        Ok(())
    }
}

pub fn validate_service(svc: &dyn ServiceDescription, methods: &[&str]) -> ValidationReport {
    let states = svc.states();
    let mut report = ValidationReport::default();

    // 1: Meaningless methods never get a boolean answer elsewhere.
    for m in methods {
        let replies: Vec<Reply> = states.iter().map(|s| svc.process(s, m).reply).collect();
        if replies.contains(&Reply::Meaningless) {
            for (s, r) in states.iter().zip(&replies) {
                if matches!(r, Reply::True | Reply::False) {
                    report.meaningless_stable.push(format!(
                        "method `{m}` is Meaningless somewhere but {r} in state {s}"
                    ));
                }
            }
        }
    }

    // 2: a blocking sink exists and receives every Blocked transition.
    let candidates: Vec<&RegisterState> = states
        .iter()
        .filter(|s| {
            methods
                .iter()
                .all(|m| svc.process(s, m).reply == Reply::Blocked)
        })
        .collect();
    report.sink = candidates
        .iter()
        .find(|sink| {
            states.iter().all(|s| {
                methods.iter().all(|m| {
                    let step = svc.process(s, m);
                    step.reply != Reply::Blocked || step.next == ***sink
                })
            })
        })
        .map(|s| (*s).clone());
    if report.sink.is_none() {
        if candidates.is_empty() {
            report
                .sink_violations
                .push("no state answers Blocked to every method".to_string());
        } else {
            for s in states.iter() {
                for m in methods {
                    let step = svc.process(s, m);
                    if step.reply == Reply::Blocked && !candidates.iter().any(|c| **c == step.next)
                    {
                        report.sink_violations.push(format!(
                            "Blocked `{m}` in state {s} moves to non-sink state {}",
                            step.next
                        ));
                    }
                }
            }
        }
    }

    // 3: visible action exactly on Meaningless.
    for s in states.iter() {
        for m in methods {
            let step = svc.process(s, m);
            let meaningless = step.reply == Reply::Meaningless;
            if meaningless == step.action.is_tau() {
                report.action_discipline.push(format!(
                    "method `{m}` in state {s}: reply {} with action {}",
                    step.reply, step.action
                ));
            }
        }
    }

    report
}

/// Services selectable by name, each constructed for given register bounds.
pub fn service_names() -> &'static [&'static str] {
    &["rf", "rfdt"]
}

pub fn lookup_service(
    name: &str,
    maxr: u32,
    maxn: u32,
) -> Option<Result<Box<dyn ServiceDescription>, ConfigError>> {
    match name {
        "rf" => Some(RfConfig::new(maxr, maxn).map(|c| Box::new(c) as Box<dyn ServiceDescription>)),
        "rfdt" => {
            Some(RfdtConfig::new(maxr, maxn).map(|c| Box::new(c) as Box<dyn ServiceDescription>))
        }
        _ => None,
    }
}
