//! Projections between the dialects, and program behaviours built on them.
//!
//! PGLD programs are given meaning by translation to PGA: absolute jumps
//! become relative ones and the whole program is repeated forever, closed off
//! by a pair of `!` instructions so that running off the end terminates.
//!
//! PGLDdii programs are given meaning in two independent ways that are meant
//! to coincide:
//!
//! * the *service route* rewrites each proto-instruction `f.m` into the
//!   method `f.m` of a dynamic-instantiation register file under focus
//!   `rfdt`, takes the PGLD behaviour, and runs it against that service;
//! * the *expansion route* compiles each proto-instruction into a dispatch
//!   tree over all possible register contents, with one concretely
//!   instantiated instruction per leaf, and runs the result against a plain
//!   register file under focus `rf`.
//!
//! [`password_examples`] builds matching fixtures in both dialects, and the
//! [`SemanticsRoute`] registry exposes the two routes by name.

use thiserror::Error;

use crate::pga::{canonicalize, extract_thread, PgaTerm};
use crate::services::{ConfigError, RfConfig, RfdtConfig, ServiceDescription};
use crate::syntax::{
    decimal_enc, instantiate_proto, parse_instruction, parse_method, BasicCore, Dialect,
    InstantiationError, MethodExpr, PrimitiveInstruction, ProgramError, ProtoMethod, RegisterMap,
    SourceProgram,
};
use crate::threads::{apply_use, Thread, UseError, DEFAULT_PRODUCT_LIMIT};

pub mod corpus;

/// Register-file bounds shared by both routes, plus the state-space cap used
/// when composing a behaviour with a service.
#[derive(Debug, Clone, Copy)]
pub struct ProjectionConfig {
    pub maxr: u32,
    pub maxn: u32,
    pub product_limit: usize,
}

impl ProjectionConfig {
    /// Validate the bounds once so every projection can assume they are
    /// usable; the composition limit starts at [`DEFAULT_PRODUCT_LIMIT`].
    pub fn new(maxr: u32, maxn: u32) -> Result<Self, ConfigError> {
        RfdtConfig::new(maxr, maxn)?;
        Ok(ProjectionConfig {
            maxr,
            maxn,
            product_limit: DEFAULT_PRODUCT_LIMIT,
        })
    }

    pub fn with_product_limit(mut self, limit: usize) -> Self {
        self.product_limit = limit;
        self
    }
}

#[derive(Debug, Error)]
pub enum ProjectionError {
    #[error("expected a {expected} program, got {found}")]
    WrongDialect { expected: Dialect, found: Dialect },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Use(#[from] UseError),
    #[error("instruction {index}: {source}")]
    Instantiation {
        index: usize,
        #[source]
        source: InstantiationError,
    },
    /// A projection emitted a program its target dialect rejects.  This
    /// indicates a bug in the projection itself, not bad input.
    #[error("projection produced an invalid program: {0}")]
    Internal(ProgramError),
}

fn require_dialect(p: &SourceProgram, expected: Dialect) -> Result<(), ProjectionError> {
    if p.dialect() == expected {
        Ok(())
    } else {
        Err(ProjectionError::WrongDialect {
            expected,
            found: p.dialect(),
        })
    }
}

/// Relative counterpart of the absolute jump `##l` sitting at position `j`
/// of a `k`-instruction program.
///
/// A target in `[j..=k]` becomes a short forward hop; an earlier target
/// wraps around the end of the repeated block, crossing the two appended
/// `!` instructions; the targets `0` and `> k` mean termination and become
/// `!` outright.
fn relative_jump(j: usize, l: usize, k: usize) -> PrimitiveInstruction {
    if l == 0 || l > k {
        PrimitiveInstruction::Halt
    } else if l >= j {
        PrimitiveInstruction::FwdJump(l - j)
    } else {
        PrimitiveInstruction::FwdJump(k + 2 - (j - l))
    }
}

/// Translate a PGLD program into PGA: rewrite each absolute jump relative to
/// its own position, append `!;!`, and repeat the block forever.
pub fn pgld_to_pga(p: &SourceProgram) -> Result<PgaTerm, ProjectionError> {
    require_dialect(p, Dialect::Pgld)?;
    let k = p.len();
    let mut out = Vec::with_capacity(k + 2);
    for (i, u) in p.instructions().iter().enumerate() {
        out.push(match u {
            PrimitiveInstruction::AbsJump(l) => relative_jump(i + 1, *l, k),
            other => other.clone(),
        });
    }
    out.push(PrimitiveInstruction::Halt);
    out.push(PrimitiveInstruction::Halt);
    Ok(PgaTerm::seq(&out).rep())
}

/// Behaviour of a PGLD program: the thread of its PGA translation.
pub fn pgld_behaviour(p: &SourceProgram) -> Result<Thread, ProjectionError> {
    Ok(extract_thread(&canonicalize(&pgld_to_pga(p)?)))
}

/// Turn rendered core text back into a method expression.  The inputs here
/// are always renderings of valid cores, so this cannot fail.
fn reparse_method(text: &str) -> MethodExpr {
    parse_method(text).expect("rendered core text is a valid method")
}

/// Service route, program side: rewrite each proto-instruction `f.m` as the
/// method `f.m` of the dynamic-instantiation register file under focus
/// `rfdt`, keeping its polarity.  Everything else passes through unchanged.
pub fn pglddii_to_pgld(p: &SourceProgram) -> Result<SourceProgram, ProjectionError> {
    require_dialect(p, Dialect::Pglddii)?;
    let instructions = p
        .instructions()
        .iter()
        .map(|u| match u.core() {
            Some(core) if core.is_proto_instruction() => u.with_core(BasicCore {
                focus: "rfdt".to_string(),
                method: reparse_method(&core.render()),
            }),
            _ => u.clone(),
        })
        .collect();
    SourceProgram::new(Dialect::Pgld, instructions).map_err(ProjectionError::Internal)
}

/// Behaviour of a PGLDdii program through the service route: wrap the
/// protos, take the PGLD behaviour, run it against the dynamic-instantiation
/// register file, and hide the internal steps.
pub fn pglddii_behaviour(
    p: &SourceProgram,
    cfg: &ProjectionConfig,
) -> Result<Thread, ProjectionError> {
    let pgld = pglddii_to_pgld(p)?;
    let thread = pgld_behaviour(&pgld)?;
    let svc = RfdtConfig::new(cfg.maxr, cfg.maxn)?;
    let composed = apply_use(
        &thread,
        "rfdt",
        &svc,
        &svc.initial_state(),
        cfg.product_limit,
    )?;
    Ok(composed.abstract_tau())
}

/// Number of instructions in the dispatch tree that replaces one
/// proto-instruction: a complete `(maxn+1)`-ary tree with one level per
/// register, `2*maxn + 1` instructions per internal node (`maxn` test/jump
/// pairs plus a fall-through jump) and three per leaf (instantiated
/// instruction plus two continuation jumps), except that the last leaf falls
/// through and needs no jumps.
///
/// The summed count is checked against the closed form
/// `(5*maxn + 1) * ((maxn+1)^maxr - 1) / maxn + 1`.
pub fn expansion_size(maxr: u32, maxn: u32) -> Result<u64, ConfigError> {
    // The bounds check also caps (maxn+1)^maxr, so the arithmetic below
    // stays far from u64 overflow.
    RfdtConfig::new(maxr, maxn)?;
    let b = u64::from(maxn) + 1;
    let mut internal = 0u64;
    let mut pow = 1u64;
    for _ in 0..maxr {
        internal += pow;
        pow *= b;
    }
    let leaves = pow;
    let size = (2 * u64::from(maxn) + 1) * internal + 3 * leaves - 2;
    let closed = (5 * u64::from(maxn) + 1) * ((leaves - 1) / u64::from(maxn)) + 1;
    assert_eq!(size, closed, "tree size disagrees with its closed form");
    Ok(size)
}

/// Position bookkeeping for the expansion route.
///
/// Source instruction `j` lands at `j + (E - 1) * n_j` in the image, where
/// `E` is the size of one dispatch tree and `n_j` counts the
/// proto-instructions strictly before position `j`.  Positions past the end
/// of the program keep the full proto count, so off-end jump targets stay
/// off the end.
#[derive(Debug, Clone)]
pub struct OffsetTable {
    expansion: usize,
    /// `preceding[j - 1]` = proto-instructions strictly before position `j`,
    /// for `j` in `[1..=k+1]`.
    preceding: Vec<usize>,
}

impl OffsetTable {
    pub fn build(p: &SourceProgram, expansion: usize) -> OffsetTable {
        let mut preceding = Vec::with_capacity(p.len() + 1);
        let mut count = 0;
        for u in p.instructions() {
            preceding.push(count);
            if u.is_proto_instruction() {
                count += 1;
            }
        }
        preceding.push(count);
        OffsetTable {
            expansion,
            preceding,
        }
    }

    /// Proto-instructions strictly before source position `j` (1-based).
    pub fn preceding_protos(&self, j: usize) -> usize {
        assert!(j >= 1, "positions are 1-based");
        self.preceding[j.min(self.preceding.len()) - 1]
    }

    /// Image of source position `j` under the expansion route.
    pub fn translated_position(&self, j: usize) -> usize {
        j + (self.expansion - 1) * self.preceding_protos(j)
    }
}

/// Emits the dispatch tree that replaces one proto-instruction.
///
/// Internal nodes form a complete `branching`-ary tree laid out in
/// breadth-first order; the node with heap index `b` occupies `2*maxn + 1`
/// positions starting at `base + b * (2*maxn + 1)` and tests the register
/// for its tree level against each value in turn.  The leaves follow, three
/// positions each: heap child `c = b * branching + h + 1`, and leaf `t`
/// (registers read most-significant-first, so `t`'s base-`branching` digits
/// are the register contents) starts at `base + internal * (2*maxn + 1) +
/// 3*t`.
struct TreeEmitter<'a> {
    table: &'a OffsetTable,
    maxr: u32,
    branching: usize,
    internal: usize,
    per_node: usize,
}

impl<'a> TreeEmitter<'a> {
    fn new(table: &'a OffsetTable, cfg: &ProjectionConfig) -> Self {
        let branching = cfg.maxn as usize + 1;
        let mut internal = 0;
        let mut width = 1;
        for _ in 0..cfg.maxr {
            internal += width;
            width *= branching;
        }
        TreeEmitter {
            table,
            maxr: cfg.maxr,
            branching,
            internal,
            per_node: 2 * cfg.maxn as usize + 1,
        }
    }

    fn node_position(&self, base: usize, b: usize) -> usize {
        base + b * self.per_node
    }

    fn leaf_position(&self, base: usize, t: usize) -> usize {
        base + self.internal * self.per_node + 3 * t
    }

    fn child_position(&self, base: usize, c: usize) -> usize {
        if c < self.internal {
            self.node_position(base, c)
        } else {
            self.leaf_position(base, c - self.internal)
        }
    }

    /// Register tested at internal node `b`: its 1-based tree level.
    fn node_register(&self, b: usize) -> u32 {
        let mut level = 1;
        let mut width = 1;
        let mut first_after = 1;
        while b >= first_after {
            level += 1;
            width *= self.branching;
            first_after += width;
        }
        level
    }

    /// Register contents selected by leaf `t`: its base-`branching` digits,
    /// most significant digit first.
    fn leaf_assignment(&self, t: usize) -> RegisterMap {
        let mut values = vec![0u32; self.maxr as usize];
        let mut rest = t;
        for slot in values.iter_mut().rev() {
            *slot = (rest % self.branching) as u32;
            rest /= self.branching;
        }
        RegisterMap::from_values(values)
    }

    fn emit(
        &self,
        u: &PrimitiveInstruction,
        j: usize,
        out: &mut Vec<PrimitiveInstruction>,
    ) -> Result<(), ProjectionError> {
        let core = u.core().expect("proto-instruction has a core");
        let dotted = match reparse_method(&core.render()) {
            MethodExpr::Proto(p) => p,
            MethodExpr::Plain(_) => unreachable!("a proto-instruction has an active segment"),
        };
        let base = self.table.translated_position(j);
        for b in 0..self.internal {
            debug_assert_eq!(out.len() + 1, self.node_position(base, b));
            let register = self.node_register(b);
            for h in 0..self.branching - 1 {
                out.push(PrimitiveInstruction::PosTest(BasicCore::plain(
                    "rf",
                    &format!("eq:{register}:{h}"),
                )));
                let child = b * self.branching + h + 1;
                out.push(PrimitiveInstruction::AbsJump(
                    self.child_position(base, child),
                ));
            }
            let last_child = b * self.branching + self.branching;
            out.push(PrimitiveInstruction::AbsJump(
                self.child_position(base, last_child),
            ));
        }
        let leaves = self.branching.pow(self.maxr);
        for t in 0..leaves {
            debug_assert_eq!(out.len() + 1, self.leaf_position(base, t));
            out.push(u.with_core(self.instantiate(&dotted, t, j)?));
            if t + 1 < leaves {
                out.push(PrimitiveInstruction::AbsJump(
                    self.table.translated_position(j + 1),
                ));
                out.push(PrimitiveInstruction::AbsJump(
                    self.table.translated_position(j + 2),
                ));
            }
        }
        Ok(())
    }

    fn instantiate(
        &self,
        dotted: &ProtoMethod,
        t: usize,
        j: usize,
    ) -> Result<BasicCore, ProjectionError> {
        instantiate_proto(dotted, &self.leaf_assignment(t), decimal_enc)
            .map_err(|source| ProjectionError::Instantiation { index: j, source })
    }
}

/// Expansion route, program side: replace every proto-instruction by a
/// dispatch tree over all register contents whose leaves hold the
/// correspondingly instantiated instructions, rename focus `rfdt` to the
/// plain register-file focus `rf`, and move every jump target to the image
/// of the position it named.  The target `0` keeps its meaning and stays
/// put.
///
/// Proto-instructions whose actives name a register outside `[1..=maxr]`
/// cannot be expanded and are reported as errors; the service route instead
/// lets the register file refuse them at run time.
pub fn pglddii_to_pgld_alt(
    p: &SourceProgram,
    cfg: &ProjectionConfig,
) -> Result<SourceProgram, ProjectionError> {
    require_dialect(p, Dialect::Pglddii)?;
    let expansion = expansion_size(cfg.maxr, cfg.maxn)? as usize;
    let table = OffsetTable::build(p, expansion);
    let emitter = TreeEmitter::new(&table, cfg);
    let mut out = Vec::new();
    for (i, u) in p.instructions().iter().enumerate() {
        let j = i + 1;
        debug_assert_eq!(out.len() + 1, table.translated_position(j));
        if u.is_proto_instruction() {
            emitter.emit(u, j, &mut out)?;
            continue;
        }
        out.push(match u {
            PrimitiveInstruction::AbsJump(0) => PrimitiveInstruction::AbsJump(0),
            PrimitiveInstruction::AbsJump(l) => {
                PrimitiveInstruction::AbsJump(table.translated_position(*l))
            }
            other => match other.core() {
                Some(core) if core.focus == "rfdt" => other.with_core(BasicCore {
                    focus: "rf".to_string(),
                    method: core.method.clone(),
                }),
                _ => other.clone(),
            },
        });
    }
    SourceProgram::new(Dialect::Pgld, out).map_err(ProjectionError::Internal)
}

/// Positions `j` where instruction `j` is a test and instruction `j + 1`
/// is a proto-instruction.
///
/// At such positions the expansion route is not faithful: the image of the
/// test still skips exactly one instruction, so its skipping branch enters
/// the middle of the dispatch block that replaced the proto instead of the
/// image of position `j + 2`.  The two semantics routes are only guaranteed
/// to agree on programs without such positions, and the generated test
/// corpus stays inside that domain.
pub fn expansion_skip_hazards(p: &SourceProgram) -> Vec<usize> {
    let instrs = p.instructions();
    (1..instrs.len())
        .filter(|&j| {
            let test = matches!(
                instrs[j - 1],
                PrimitiveInstruction::PosTest(_) | PrimitiveInstruction::NegTest(_)
            );
            test && instrs[j].is_proto_instruction()
        })
        .collect()
}

/// Behaviour of a PGLDdii program through the expansion route: expand the
/// protos, take the PGLD behaviour, run it against the plain register file,
/// and hide the internal steps.
///
/// Faithful to the service route on programs without
/// [`expansion_skip_hazards`].
pub fn pglddii_behaviour_alt(
    p: &SourceProgram,
    cfg: &ProjectionConfig,
) -> Result<Thread, ProjectionError> {
    let pgld = pglddii_to_pgld_alt(p, cfg)?;
    let thread = pgld_behaviour(&pgld)?;
    let svc = RfConfig::new(cfg.maxr, cfg.maxn)?;
    let composed = apply_use(&thread, "rf", &svc, &svc.initial_state(), cfg.product_limit)?;
    Ok(composed.abstract_tau())
}

/// One end-to-end way of giving a PGLDdii program meaning: a projection to
/// PGLD plus the service the projected program is run against.
pub trait SemanticsRoute {
    fn name(&self) -> &'static str;
    /// PGLD image of the program under this route.
    fn project(
        &self,
        p: &SourceProgram,
        cfg: &ProjectionConfig,
    ) -> Result<SourceProgram, ProjectionError>;
    /// Abstracted behaviour of the program under this route.
    fn behaviour(
        &self,
        p: &SourceProgram,
        cfg: &ProjectionConfig,
    ) -> Result<Thread, ProjectionError>;
}

/// Service route: protos become `rfdt` methods, instantiated at run time.
pub struct ServiceRoute;

/// Expansion route: protos are compiled into dispatch trees ahead of time,
/// and only a plain register file is consulted at run time.
pub struct ExpansionRoute;

impl SemanticsRoute for ServiceRoute {
    fn name(&self) -> &'static str {
        "standard"
    }

    fn project(
        &self,
        p: &SourceProgram,
        _cfg: &ProjectionConfig,
    ) -> Result<SourceProgram, ProjectionError> {
        pglddii_to_pgld(p)
    }

    fn behaviour(
        &self,
        p: &SourceProgram,
        cfg: &ProjectionConfig,
    ) -> Result<Thread, ProjectionError> {
        pglddii_behaviour(p, cfg)
    }
}

impl SemanticsRoute for ExpansionRoute {
    fn name(&self) -> &'static str {
        "alt"
    }

    fn project(
        &self,
        p: &SourceProgram,
        cfg: &ProjectionConfig,
    ) -> Result<SourceProgram, ProjectionError> {
        pglddii_to_pgld_alt(p, cfg)
    }

    fn behaviour(
        &self,
        p: &SourceProgram,
        cfg: &ProjectionConfig,
    ) -> Result<Thread, ProjectionError> {
        pglddii_behaviour_alt(p, cfg)
    }
}

/// All registered semantics routes.
pub fn semantics_routes() -> Vec<Box<dyn SemanticsRoute>> {
    vec![Box::new(ServiceRoute), Box::new(ExpansionRoute)]
}

/// Look a route up by its registered name (`standard` or `alt`).
pub fn lookup_route(name: &str) -> Option<Box<dyn SemanticsRoute>> {
    semantics_routes().into_iter().find(|r| r.name() == name)
}

/// The password-checker example over `n` one-bit registers, in both
/// dialects.
///
/// The PGLDdii version reads `n` bits from `stdin` into the register file
/// and ends with a single proto-instruction check; the PGLD version reads
/// the bits through a complete binary decision tree whose `2^n` leaves each
/// hold one concrete check.  Both are cut off right after the check, so
/// their lengths are exactly `5n + 1` and `6(2^n - 1) + 1`.
pub fn password_examples(n: u32) -> (SourceProgram, SourceProgram) {
    assert!(
        (1..=16).contains(&n),
        "password examples are defined for n in [1..=16]"
    );
    let getb = || PrimitiveInstruction::PosTest(BasicCore::plain("stdin", "getb"));

    let mut dii = Vec::new();
    for i in 1..=n as usize {
        // On a 1-bit the test succeeds and the jump skips to `set:i:1`;
        // on a 0-bit the test fails, `set:i:0` runs, and the second jump
        // skips past `set:i:1`.
        dii.push(getb());
        dii.push(PrimitiveInstruction::AbsJump(5 * i));
        dii.push(PrimitiveInstruction::Plain(BasicCore::plain(
            "rfdt",
            &format!("set:{i}:0"),
        )));
        dii.push(PrimitiveInstruction::AbsJump(5 * i + 1));
        dii.push(PrimitiveInstruction::Plain(BasicCore::plain(
            "rfdt",
            &format!("set:{i}:1"),
        )));
    }
    let actives: Vec<String> = (1..=n).map(|i| format!("*{i}")).collect();
    let check = format!("+passw.chk:{}", actives.join(":"));
    dii.push(parse_instruction(&check, Dialect::Pglddii).expect("check instruction is valid"));
    let dii = SourceProgram::new(Dialect::Pglddii, dii).expect("fixture is valid PGLDdii");

    // Binary decision tree over the input bits: internal node `b` sits at
    // position `3b + 1`; a 1-bit goes to heap child `2b + 2`, a 0-bit to
    // `2b + 1`.  Leaf `t` (bits most-significant-first) sits at
    // `3*internal + 1 + 3t` and checks the concrete password `t` spells.
    let internal = (1usize << n) - 1;
    let leaves = 1usize << n;
    let total = 3 * internal + 3 * leaves - 2;
    let pos = |c: usize| {
        if c < internal {
            3 * c + 1
        } else {
            3 * internal + 1 + 3 * (c - internal)
        }
    };
    let mut tree = Vec::new();
    for b in 0..internal {
        tree.push(getb());
        tree.push(PrimitiveInstruction::AbsJump(pos(2 * b + 2)));
        tree.push(PrimitiveInstruction::AbsJump(pos(2 * b + 1)));
    }
    for t in 0..leaves {
        let bits: Vec<String> = (0..n)
            .rev()
            .map(|shift| ((t >> shift) & 1).to_string())
            .collect();
        tree.push(PrimitiveInstruction::PosTest(BasicCore::plain(
            "passw",
            &format!("chk:{}", bits.join(":")),
        )));
        if t + 1 < leaves {
            tree.push(PrimitiveInstruction::AbsJump(total + 1));
            tree.push(PrimitiveInstruction::AbsJump(total + 2));
        }
    }
    let tree = SourceProgram::new(Dialect::Pgld, tree).expect("fixture is valid PGLD");

    (dii, tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_program, render_instruction};
    use crate::threads::bisim_equal;

    fn pgld(text: &str) -> SourceProgram {
        parse_program(text, Dialect::Pgld).expect("test program parses")
    }

    fn pglddii(text: &str) -> SourceProgram {
        parse_program(text, Dialect::Pglddii).expect("test program parses")
    }

    fn rendered(p: &SourceProgram) -> Vec<String> {
        p.instructions().iter().map(render_instruction).collect()
    }

    fn cfg(maxr: u32, maxn: u32) -> ProjectionConfig {
        ProjectionConfig::new(maxr, maxn).expect("bounds are valid")
    }

    #[test]
    fn pgld_to_pga_rewrites_jumps_and_appends_halts() {
        let cases = [
            ("a.m; ##1", "a.m;#3;!;!"),
            ("+a.m; ##0", "+a.m;!;!;!"),
            ("##1", "#0;!;!"),
        ];
        for (source, expected) in cases {
            let term = pgld_to_pga(&pgld(source)).unwrap();
            let canon = canonicalize(&term);
            assert!(canon.prefix().is_empty(), "{source} projects to a repeat");
            let body: Vec<String> = canon.repeat().iter().map(render_instruction).collect();
            assert_eq!(body.join(";"), expected, "projection of {source}");
        }
    }

    #[test]
    fn pgld_behaviour_examples() {
        // ##0 means termination, a self-jump means inaction.
        assert!(bisim_equal(
            &pgld_behaviour(&pgld("##0")).unwrap(),
            &Thread::stop()
        ));
        assert!(bisim_equal(
            &pgld_behaviour(&pgld("##1")).unwrap(),
            &Thread::dead()
        ));
        // A loop through the whole program repeats its action forever.
        let looping = pgld_behaviour(&pgld("a.m; ##1")).unwrap().renumbered();
        assert_eq!(looping.len(), 1);
        // Falling off the end terminates; the test picks the branch.
        let branchy = pgld_behaviour(&pgld("+a.m; ##0; b.n")).unwrap();
        let expected = Thread::postcond(
            crate::threads::Action::basic("a", "m"),
            &Thread::stop(),
            &Thread::prefix(crate::threads::Action::basic("b", "n"), &Thread::stop()),
        );
        assert!(bisim_equal(&branchy, &expected));
    }

    #[test]
    fn service_route_wraps_protos_only() {
        let out = pglddii_to_pgld(&pglddii("f.m:*1; rfdt.set:1:1; ##1; +g.u:*2")).unwrap();
        assert_eq!(out.dialect(), Dialect::Pgld);
        assert_eq!(
            rendered(&out),
            ["rfdt.f.m:*1", "rfdt.set:1:1", "##1", "+rfdt.g.u:*2"]
        );
    }

    #[test]
    fn service_route_requires_pglddii() {
        let err = pglddii_to_pgld(&pgld("a.m")).unwrap_err();
        assert!(matches!(err, ProjectionError::WrongDialect { .. }));
    }

    #[test]
    fn expansion_of_single_proto_matches_hand_layout() {
        let out = pglddii_to_pgld_alt(&pglddii("f.m:*1"), &cfg(1, 1)).unwrap();
        assert_eq!(
            rendered(&out),
            ["+rf.eq:1:0", "##4", "##7", "f.m:0", "##8", "##9", "f.m:1"]
        );
    }

    #[test]
    fn expansion_renames_rfdt_and_preserves_zero_targets() {
        let out = pglddii_to_pgld_alt(&pglddii("rfdt.set:1:1; ##1"), &cfg(1, 1)).unwrap();
        assert_eq!(rendered(&out), ["rf.set:1:1", "##1"]);

        let out = pglddii_to_pgld_alt(&pglddii("f.m:*1; ##0"), &cfg(1, 1)).unwrap();
        assert_eq!(out.len(), 8);
        assert_eq!(render_instruction(&out.instructions()[7]), "##0");
    }

    #[test]
    fn expansion_of_two_protos_chains_their_blocks() {
        let out = pglddii_to_pgld_alt(&pglddii("f.x:*1; g.y:*1"), &cfg(1, 1)).unwrap();
        let lines = rendered(&out);
        assert_eq!(lines.len(), 14);
        // First block's non-final leaf continues at the image of source
        // positions 2 and 3: positions 8 and 15.
        assert_eq!(lines[3..6], ["f.x:0", "##8", "##15"]);
        assert_eq!(lines[6], "f.x:1");
        // Second block starts at 8 and its non-final leaf continues at the
        // images of source positions 3 and 4, both off the end.
        assert_eq!(lines[7..9], ["+rf.eq:1:0", "##11"]);
        assert_eq!(lines[10..13], ["g.y:0", "##15", "##16"]);
    }

    #[test]
    fn expansion_rejects_out_of_range_registers() {
        let err = pglddii_to_pgld_alt(&pglddii("f.m:*2"), &cfg(1, 1)).unwrap_err();
        assert!(matches!(
            err,
            ProjectionError::Instantiation { index: 1, .. }
        ));
    }

    #[test]
    fn expansion_size_examples() {
        assert_eq!(expansion_size(3, 1).unwrap(), 43);
        assert_eq!(expansion_size(1, 1).unwrap(), 7);
        for maxn in 1..=5 {
            assert_eq!(expansion_size(1, maxn).unwrap(), u64::from(5 * maxn + 2));
        }
        assert!(matches!(expansion_size(0, 1), Err(ConfigError::BadMaxr)));
        assert!(matches!(expansion_size(1, 0), Err(ConfigError::BadMaxn)));
    }

    #[test]
    fn expansion_length_law() {
        // |image| = |source| + (E - 1) * protos, for a mixed program.
        let p = pglddii("a.m; f.m:*1; ##2; g.v:*2; rfdt.set:2:1");
        let c = cfg(2, 1);
        let out = pglddii_to_pgld_alt(&p, &c).unwrap();
        let e = expansion_size(2, 1).unwrap() as usize;
        assert_eq!(out.len(), p.len() + (e - 1) * 2);
    }

    #[test]
    fn expansion_without_protos_is_a_focus_rename() {
        let p = pglddii("a.m; rfdt.set:1:0; ##2; +b.n");
        let out = pglddii_to_pgld_alt(&p, &cfg(1, 1)).unwrap();
        assert_eq!(rendered(&out), ["a.m", "rf.set:1:0", "##2", "+b.n"]);
    }

    #[test]
    fn service_route_behaviour_examples() {
        let c = cfg(1, 1);
        // A proto at the initial register contents instantiates to value 0,
        // and `##0` after it terminates either way.
        let b = pglddii_behaviour(&pglddii("f.m:*1; ##0"), &c).unwrap();
        let expected = Thread::prefix(crate::threads::Action::basic("f", "m:0"), &Thread::stop());
        assert!(bisim_equal(&b, &expected));

        // An unknown register-file method blocks, which is inaction.
        let b = pglddii_behaviour(&pglddii("rfdt.bogus; ##0"), &c).unwrap();
        assert!(bisim_equal(&b, &Thread::dead()));

        // A write changes what the proto instantiates to.
        let b = pglddii_behaviour(&pglddii("rfdt.set:1:1; f.m:*1"), &c).unwrap();
        let expected = Thread::prefix(crate::threads::Action::basic("f", "m:1"), &Thread::stop());
        assert!(bisim_equal(&b, &expected));
    }

    #[test]
    fn both_routes_agree_on_small_examples() {
        let c = cfg(1, 1);
        for text in [
            "f.m:*1; ##0",
            "rfdt.bogus; ##0",
            "rfdt.set:1:1; f.m:*1",
            "+g.v:*1; a.m; b.n",
            "h.w:*1:9; ##1",
        ] {
            let p = pglddii(text);
            let standard = pglddii_behaviour(&p, &c).unwrap();
            let alt = pglddii_behaviour_alt(&p, &c).unwrap();
            assert!(bisim_equal(&standard, &alt), "routes disagree on {text}");
        }
    }

    #[test]
    fn skip_hazard_marks_the_agreement_boundary() {
        // A test directly before a proto is exactly where the two routes
        // come apart: the service route's skipping branch terminates, while
        // the expansion route's lands inside the dispatch block and still
        // performs an instantiated action.
        let p = pglddii("+a.m; f.m:*1");
        assert_eq!(expansion_skip_hazards(&p), [1]);
        let c = cfg(1, 1);
        let standard = pglddii_behaviour(&p, &c).unwrap();
        let alt = pglddii_behaviour_alt(&p, &c).unwrap();
        assert!(!bisim_equal(&standard, &alt));

        // With a jump in between, the skip target stays aligned and the
        // routes agree again.
        let p = pglddii("+a.m; ##3; f.m:*1");
        assert!(expansion_skip_hazards(&p).is_empty());
        let standard = pglddii_behaviour(&p, &c).unwrap();
        let alt = pglddii_behaviour_alt(&p, &c).unwrap();
        assert!(bisim_equal(&standard, &alt));
    }

    #[test]
    fn route_registry_finds_both_routes() {
        let names: Vec<&str> = semantics_routes().iter().map(|r| r.name()).collect();
        assert_eq!(names, ["standard", "alt"]);
        assert!(lookup_route("unknown").is_none());

        let p = pglddii("f.m:*1");
        let c = cfg(1, 1);
        let standard = lookup_route("standard").unwrap();
        assert_eq!(standard.project(&p, &c).unwrap().len(), 1);
        let alt = lookup_route("alt").unwrap();
        assert_eq!(alt.project(&p, &c).unwrap().len(), 7);
        assert!(bisim_equal(
            &standard.behaviour(&p, &c).unwrap(),
            &alt.behaviour(&p, &c).unwrap()
        ));
    }

    #[test]
    fn password_fixture_lengths_follow_the_formulas() {
        for n in 1..=8u32 {
            let (dii, tree) = password_examples(n);
            assert_eq!(dii.len(), 5 * n as usize + 1);
            assert_eq!(tree.len(), 6 * ((1 << n) - 1) + 1);
        }
    }

    #[test]
    fn password_fixture_listings_for_three_bits() {
        let (dii, tree) = password_examples(3);
        let dii = rendered(&dii);
        assert_eq!(
            dii[0..5],
            ["+stdin.getb", "##5", "rfdt.set:1:0", "##6", "rfdt.set:1:1"]
        );
        assert_eq!(dii[5..7], ["+stdin.getb", "##10"]);
        assert_eq!(dii[15], "+passw.chk:*1:*2:*3");

        let tree = rendered(&tree);
        assert_eq!(tree[0..3], ["+stdin.getb", "##7", "##4"]);
        // Deepest-level node: children are the leaves at 22 and 25.
        assert_eq!(tree[9..12], ["+stdin.getb", "##25", "##22"]);
        assert_eq!(tree[21..24], ["+passw.chk:0:0:0", "##44", "##45"]);
        assert_eq!(tree[42], "+passw.chk:1:1:1");
    }

    #[test]
    fn password_pair_has_the_same_behaviour() {
        // The service-route behaviour of the PGLDdii fixture matches the
        // plain behaviour of its decision-tree counterpart.
        for n in 1..=2u32 {
            let (dii, tree) = password_examples(n);
            let b_dii = pglddii_behaviour(&dii, &cfg(n, 1)).unwrap();
            let b_tree = pgld_behaviour(&tree).unwrap();
            assert!(bisim_equal(&b_dii, &b_tree), "fixtures differ at n={n}");
        }
    }

    #[test]
    fn routes_agree_on_password_fixture() {
        for n in 1..=2u32 {
            let (dii, _) = password_examples(n);
            let c = cfg(n, 1);
            let standard = pglddii_behaviour(&dii, &c).unwrap();
            let alt = pglddii_behaviour_alt(&dii, &c).unwrap();
            assert!(bisim_equal(&standard, &alt), "routes differ at n={n}");
        }
    }

    #[test]
    fn product_limit_is_surfaced() {
        let (dii, _) = password_examples(2);
        let c = cfg(2, 1).with_product_limit(3);
        let err = pglddii_behaviour(&dii, &c).unwrap_err();
        assert!(matches!(
            err,
            ProjectionError::Use(UseError::StateSpaceExceeded { limit: 3 })
        ));
    }
}
