//! Concrete syntax for instruction-sequence programs.
//!
//! Three dialects share one instruction type: PGA (relative jumps `#l`,
//! termination `!`), PGLD (absolute jumps `##l`) and PGLDdii (PGLD plus
//! proto-instructions whose active segments `*i` are replaced by register
//! contents at run time). Program text is a `;`- or newline-separated list
//! of instructions, ASCII only.

use std::fmt;

use thiserror::Error;

/// Classification of a segment of a proto-instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    /// Empty, or letter/colon first and then letters, digits and colons.
    Neutral,
    /// `*` followed by one or more digits; replaced at instantiation time.
    Active,
    Invalid,
}

/// Classify a string as a neutral segment, an active segment, or neither.
pub fn classify_segment(text: &str) -> SegmentKind {
    if text.is_empty() {
        return SegmentKind::Neutral;
    }
    let mut chars = text.chars();
    let first = chars.next().unwrap();
    if first == '*' {
        let digits = &text[1..];
        if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
            return SegmentKind::Active;
        }
        return SegmentKind::Invalid;
    }
    if (first.is_ascii_alphabetic() || first == ':')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == ':')
    {
        return SegmentKind::Neutral;
    }
    SegmentKind::Invalid
}

/// One segment of a proto-instruction: a literal neutral part or an
/// active `*i` register reference (digits kept verbatim for round-trips).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Segment {
    Neutral(String),
    Active(String),
}

impl Segment {
    pub fn kind(&self) -> SegmentKind {
        match self {
            Segment::Neutral(_) => SegmentKind::Neutral,
            Segment::Active(_) => SegmentKind::Active,
        }
    }

    pub fn text(&self) -> String {
        match self {
            Segment::Neutral(s) => s.clone(),
            Segment::Active(d) => format!("*{d}"),
        }
    }

    /// Register named by an active segment. `None` for neutrals and for
    /// digit strings that are not a plain decimal numeral (leading zeros).
    pub fn register(&self) -> Option<u32> {
        match self {
            Segment::Neutral(_) => None,
            Segment::Active(d) => {
                if d.len() > 1 && d.starts_with('0') {
                    return None;
                }
                d.parse().ok()
            }
        }
    }
}

/// A method containing active segments, to be instantiated against register
/// contents. `head` holds the segments before the (optional) inner dot and
/// `tail` the segments after it; a *complete* proto-instruction `f'.m'` is
/// the dotted form, while the undotted form appears when a proto-instruction
/// is itself used as a program instruction and the focus has been split off.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProtoMethod {
    pub head: Vec<Segment>,
    pub tail: Option<Vec<Segment>>,
}

impl ProtoMethod {
    pub fn is_dotted(&self) -> bool {
        self.tail.is_some()
    }

    /// All registers referenced by well-formed active segments.
    pub fn registers(&self) -> Vec<u32> {
        self.segments().filter_map(Segment::register).collect()
    }

    /// True when every active segment is a plain decimal register reference.
    pub fn references_well_formed(&self) -> bool {
        self.segments()
            .all(|s| s.kind() != SegmentKind::Active || s.register().is_some())
    }

    fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.head.iter().chain(self.tail.iter().flatten())
    }

    pub fn render(&self) -> String {
        let mut out: String = self.head.iter().map(Segment::text).collect();
        if let Some(tail) = &self.tail {
            out.push('.');
            out.extend(tail.iter().map(|s| s.text()));
        }
        out
    }
}

impl fmt::Display for ProtoMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Method part of a basic instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum MethodExpr {
    /// Neutral string starting with a letter.
    Plain(String),
    Proto(ProtoMethod),
}

impl MethodExpr {
    pub fn is_proto(&self) -> bool {
        matches!(self, MethodExpr::Proto(_))
    }

    pub fn render(&self) -> String {
        match self {
            MethodExpr::Plain(s) => s.clone(),
            MethodExpr::Proto(p) => p.render(),
        }
    }
}

/// Focus plus method: the core of a plain or test instruction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasicCore {
    pub focus: String,
    pub method: MethodExpr,
}

impl BasicCore {
    pub fn plain(focus: &str, method: &str) -> Self {
        BasicCore {
            focus: focus.to_string(),
            method: MethodExpr::Plain(method.to_string()),
        }
    }

    /// Full `focus.method` text of the core.
    pub fn render(&self) -> String {
        format!("{}.{}", self.focus, self.method.render())
    }

    /// A core is a proto-instruction proper when the whole `focus.method`
    /// text is a single-dot alternation with at least one active segment,
    /// i.e. the method is an *undotted* proto method.
    pub fn is_proto_instruction(&self) -> bool {
        matches!(&self.method, MethodExpr::Proto(p) if !p.is_dotted())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PrimitiveInstruction {
    /// `f.m` — perform the action, discard the reply.
    Plain(BasicCore),
    /// `+f.m` — on a True reply continue, otherwise skip one instruction.
    PosTest(BasicCore),
    /// `-f.m` — mirror image of `+f.m`.
    NegTest(BasicCore),
    /// `#l` — relative jump over `l - 1` instructions (PGA).
    FwdJump(usize),
    /// `##l` — jump to absolute position `l` (PGLD family).
    AbsJump(usize),
    /// `!` — termination (PGA).
    Halt,
}

impl PrimitiveInstruction {
    pub fn core(&self) -> Option<&BasicCore> {
        match self {
            PrimitiveInstruction::Plain(c)
            | PrimitiveInstruction::PosTest(c)
            | PrimitiveInstruction::NegTest(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_proto_instruction(&self) -> bool {
        self.core().is_some_and(BasicCore::is_proto_instruction)
    }

    /// Rebuild the same polarity around a different core.
    pub fn with_core(&self, core: BasicCore) -> PrimitiveInstruction {
        match self {
            PrimitiveInstruction::Plain(_) => PrimitiveInstruction::Plain(core),
            PrimitiveInstruction::PosTest(_) => PrimitiveInstruction::PosTest(core),
            PrimitiveInstruction::NegTest(_) => PrimitiveInstruction::NegTest(core),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dialect {
    Pga,
    Pgld,
    Pglddii,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Pga => "pga",
            Dialect::Pgld => "pgld",
            Dialect::Pglddii => "pglddii",
        })
    }
}

impl Dialect {
    /// Instruction forms admitted by each dialect. PGLD admits dotted proto
    /// methods (they arise as projection images of proto-instructions);
    /// PGLDdii additionally admits undotted ones, i.e. proto-instructions
    /// proper appearing directly as program instructions.
    pub fn admits(&self, instr: &PrimitiveInstruction) -> bool {
        use PrimitiveInstruction::*;
        match instr {
            FwdJump(_) | Halt => *self == Dialect::Pga,
            AbsJump(_) => *self != Dialect::Pga,
            Plain(c) | PosTest(c) | NegTest(c) => match &c.method {
                MethodExpr::Plain(_) => true,
                MethodExpr::Proto(p) => match self {
                    Dialect::Pga => false,
                    Dialect::Pgld => p.is_dotted(),
                    Dialect::Pglddii => true,
                },
            },
        }
    }
}

/// A parsed program: a non-empty instruction list valid for its dialect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    dialect: Dialect,
    instructions: Vec<PrimitiveInstruction>,
}

impl SourceProgram {
    pub fn new(
        dialect: Dialect,
        instructions: Vec<PrimitiveInstruction>,
    ) -> Result<Self, ProgramError> {
        if instructions.is_empty() {
            return Err(ProgramError::Empty);
        }
        for (i, instr) in instructions.iter().enumerate() {
            if !dialect.admits(instr) {
                return Err(ProgramError::At {
                    index: i + 1,
                    source: InstrError::Dialect {
                        instruction: render_instruction(instr),
                        dialect,
                    },
                });
            }
        }
        Ok(SourceProgram {
            dialect,
            instructions,
        })
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn instructions(&self) -> &[PrimitiveInstruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrError {
    #[error("malformed instruction: {0}")]
    Malformed(String),
    #[error("instruction `{instruction}` is not admitted by dialect {dialect}")]
    Dialect {
        instruction: String,
        dialect: Dialect,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("empty program")]
    Empty,
    #[error("instruction {index}: {source}")]
    At {
        index: usize,
        #[source]
        source: InstrError,
    },
}

/// Parse one instruction in the given dialect.
pub fn parse_instruction(text: &str, dialect: Dialect) -> Result<PrimitiveInstruction, InstrError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(InstrError::Malformed("empty instruction".into()));
    }
    let instr = parse_instruction_any(text)?;
    if !dialect.admits(&instr) {
        return Err(InstrError::Dialect {
            instruction: text.to_string(),
            dialect,
        });
    }
    Ok(instr)
}

fn parse_instruction_any(text: &str) -> Result<PrimitiveInstruction, InstrError> {
    if text == "!" {
        return Ok(PrimitiveInstruction::Halt);
    }
    if let Some(rest) = text.strip_prefix("##") {
        return parse_counter(rest, text).map(PrimitiveInstruction::AbsJump);
    }
    if let Some(rest) = text.strip_prefix('#') {
        return parse_counter(rest, text).map(PrimitiveInstruction::FwdJump);
    }
    if let Some(rest) = text.strip_prefix('+') {
        return parse_core(rest).map(PrimitiveInstruction::PosTest);
    }
    if let Some(rest) = text.strip_prefix('-') {
        return parse_core(rest).map(PrimitiveInstruction::NegTest);
    }
    parse_core(text).map(PrimitiveInstruction::Plain)
}

fn parse_counter(digits: &str, whole: &str) -> Result<usize, InstrError> {
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(InstrError::Malformed(format!(
            "`{whole}`: jump counter must be a decimal number"
        )));
    }
    digits
        .parse()
        .map_err(|_| InstrError::Malformed(format!("`{whole}`: jump counter out of range")))
}

fn parse_core(text: &str) -> Result<BasicCore, InstrError> {
    let Some(dot) = text.find('.') else {
        return Err(InstrError::Malformed(format!(
            "`{text}`: expected `focus.method`"
        )));
    };
    let focus = &text[..dot];
    let rest = &text[dot + 1..];
    if classify_segment(focus) != SegmentKind::Neutral
        || !focus.starts_with(|c: char| c.is_ascii_alphabetic())
    {
        return Err(InstrError::Malformed(format!(
            "`{text}`: focus must be a neutral string starting with a letter"
        )));
    }
    let method = parse_method(rest)
        .map_err(|reason| InstrError::Malformed(format!("`{text}`: {reason}")))?;
    Ok(BasicCore {
        focus: focus.to_string(),
        method,
    })
}

/// Parse the method part of an instruction (after the focus dot).
pub fn parse_method(text: &str) -> Result<MethodExpr, String> {
    if text.is_empty() {
        return Err("method must not be empty".into());
    }
    let (head_text, tail_text) = match text.find('.') {
        None => (text, None),
        Some(dot) => {
            let tail = &text[dot + 1..];
            if tail.contains('.') {
                return Err("method contains more than one `.`".into());
            }
            (&text[..dot], Some(tail))
        }
    };
    let head = parse_segments(head_text)?;
    let tail = tail_text.map(parse_segments).transpose()?;
    let has_active = head
        .iter()
        .chain(tail.iter().flatten())
        .any(|s| s.kind() == SegmentKind::Active);
    if !has_active {
        if tail.is_some() {
            return Err("a method without active segments must not contain `.`".into());
        }
        return Ok(MethodExpr::Plain(head_text.to_string()));
    }
    Ok(MethodExpr::Proto(ProtoMethod { head, tail }))
}

/// Split a proto-instruction part into maximal neutral runs and `*digits`
/// actives. The part must open with a letter so that substitution always
/// yields a well-formed focus or method.
fn parse_segments(text: &str) -> Result<Vec<Segment>, String> {
    if !text.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return Err(format!("`{text}`: each part must start with a letter"));
    }
    let mut segments = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c == '*' {
            let mut digits = String::new();
            while let Some((_, d)) = chars.peek() {
                if d.is_ascii_digit() {
                    digits.push(*d);
                    chars.next();
                } else {
                    break;
                }
            }
            if digits.is_empty() {
                return Err(format!("`{text}`: `*` must be followed by digits"));
            }
            segments.push(Segment::Active(digits));
        } else if c.is_ascii_alphanumeric() || c == ':' {
            match segments.last_mut() {
                Some(Segment::Neutral(run)) => run.push(c),
                _ => segments.push(Segment::Neutral(c.to_string())),
            }
        } else {
            return Err(format!(
                "`{text}`: unexpected character `{c}` at offset {i}"
            ));
        }
    }
    Ok(segments)
}

/// Parse program text: instructions separated by `;` and/or newlines.
pub fn parse_program(text: &str, dialect: Dialect) -> Result<SourceProgram, ProgramError> {
    let mut instructions = Vec::new();
    let mut index = 0;
    for token in text.split([';', '\n']) {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        index += 1;
        let instr = parse_instruction(token, dialect)
            .map_err(|source| ProgramError::At { index, source })?;
        instructions.push(instr);
    }
    SourceProgram::new(dialect, instructions)
}

pub fn render_instruction(instr: &PrimitiveInstruction) -> String {
    match instr {
        PrimitiveInstruction::Plain(c) => c.render(),
        PrimitiveInstruction::PosTest(c) => format!("+{}", c.render()),
        PrimitiveInstruction::NegTest(c) => format!("-{}", c.render()),
        PrimitiveInstruction::FwdJump(l) => format!("#{l}"),
        PrimitiveInstruction::AbsJump(l) => format!("##{l}"),
        PrimitiveInstruction::Halt => "!".to_string(),
    }
}

/// Canonical program rendering: one instruction per line.
pub fn render_program(program: &SourceProgram) -> String {
    let mut out = String::new();
    for instr in program.instructions() {
        out.push_str(&render_instruction(instr));
        out.push('\n');
    }
    out
}

/// Contents of registers `1..=maxr`, each in `0..=maxn`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegisterMap {
    values: Vec<u32>,
}

impl RegisterMap {
    pub fn zeros(maxr: u32) -> Self {
        RegisterMap {
            values: vec![0; maxr as usize],
        }
    }

    pub fn from_values(values: Vec<u32>) -> Self {
        RegisterMap { values }
    }

    pub fn maxr(&self) -> u32 {
        self.values.len() as u32
    }

    pub fn get(&self, register: u32) -> Option<u32> {
        if register == 0 {
            return None;
        }
        self.values.get(register as usize - 1).copied()
    }

    /// Copy with one register updated; out-of-range registers are ignored
    /// (callers decide whether that is an error).
    pub fn with(&self, register: u32, value: u32) -> Self {
        let mut next = self.clone();
        if register >= 1 && register <= next.maxr() {
            next.values[register as usize - 1] = value;
        }
        next
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Parse a `1:0,2:1,3:1` literal covering each register exactly once.
    pub fn parse_literal(text: &str, maxr: u32, maxn: u32) -> Result<Self, String> {
        let mut values = vec![None; maxr as usize];
        for pair in text.split(',') {
            let pair = pair.trim();
            let (reg, val) = pair
                .split_once(':')
                .ok_or_else(|| format!("`{pair}`: expected `register:value`"))?;
            let reg: u32 = reg
                .trim()
                .parse()
                .map_err(|_| format!("bad register `{reg}`"))?;
            let val: u32 = val
                .trim()
                .parse()
                .map_err(|_| format!("bad value `{val}`"))?;
            if reg < 1 || reg > maxr {
                return Err(format!("register {reg} outside [1..{maxr}]"));
            }
            if val > maxn {
                return Err(format!("value {val} outside [0..{maxn}]"));
            }
            let slot = &mut values[reg as usize - 1];
            if slot.is_some() {
                return Err(format!("register {reg} assigned twice"));
            }
            *slot = Some(val);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| format!("register {} not assigned", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RegisterMap { values })
    }
}

impl fmt::Display for RegisterMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", i + 1, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiationError {
    #[error("active segment `*{reference}` names a register outside [1..{maxr}]")]
    RegisterOutOfRange { reference: String, maxr: u32 },
    #[error("substitution did not yield a concrete instruction: {0}")]
    MalformedResult(String),
}

/// Decimal encoding of register contents, the default for substitution.
pub fn decimal_enc(value: u32) -> String {
    value.to_string()
}

/// Replace every active segment of `m` by the encoded contents of the named
/// register and split the result at its dot into a plain `focus.method` core.
pub fn instantiate_proto(
    m: &ProtoMethod,
    regs: &RegisterMap,
    enc: impl Fn(u32) -> String,
) -> Result<BasicCore, InstantiationError> {
    let Some(tail) = &m.tail else {
        return Err(InstantiationError::MalformedResult(format!(
            "`{m}` has no `.`, so substitution cannot yield a focus and a method"
        )));
    };
    let substitute = |segments: &[Segment]| -> Result<String, InstantiationError> {
        let mut out = String::new();
        for seg in segments {
            match seg {
                Segment::Neutral(s) => out.push_str(s),
                Segment::Active(digits) => {
                    let register =
                        seg.register()
                            .ok_or(InstantiationError::RegisterOutOfRange {
                                reference: digits.clone(),
                                maxr: regs.maxr(),
                            })?;
                    let value =
                        regs.get(register)
                            .ok_or(InstantiationError::RegisterOutOfRange {
                                reference: digits.clone(),
                                maxr: regs.maxr(),
                            })?;
                    out.push_str(&enc(value));
                }
            }
        }
        Ok(out)
    };
    let focus = substitute(&m.head)?;
    let method = substitute(tail)?;
    let ok = |s: &str| {
        classify_segment(s) == SegmentKind::Neutral
            && s.starts_with(|c: char| c.is_ascii_alphabetic())
    };
    if !ok(&focus) || !ok(&method) {
        return Err(InstantiationError::MalformedResult(format!(
            "`{focus}.{method}` is not a `focus.plain-method` instruction"
        )));
    }
    Ok(BasicCore {
        focus,
        method: MethodExpr::Plain(method),
    })
}
