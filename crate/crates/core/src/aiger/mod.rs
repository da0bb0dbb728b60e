//! And-inverter graphs in the AIGER format.
//!
//! Both the ascii (`aag`) and the binary (`aig`) profiles are supported. The
//! synthesis extension marks controllable inputs by a symbol-name prefix, see
//! [`classify_inputs`].

mod ascii;
mod binary;
mod normalize;

use std::collections::BTreeMap;
use std::fmt;

pub use ascii::{parse_ascii, write_ascii};
pub use binary::{parse_binary, write_binary};
pub use normalize::{is_normalized, normalize};

/// Symbol-name prefix marking an input as controllable.
pub const CONTROLLABLE_PREFIX: &str = "controllable_";

/// An AIGER literal: `2 * variable + sign`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Literal(pub u32);

impl Literal {
    pub const FALSE: Literal = Literal(0);
    pub const TRUE: Literal = Literal(1);

    pub fn from_var(var: u32, negated: bool) -> Literal {
        Literal(var * 2 + negated as u32)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_constant(self) -> bool {
        self.0 < 2
    }

    /// The literal with the sign bit cleared.
    pub fn positive(self) -> Literal {
        Literal(self.0 & !1)
    }

    pub fn code(self) -> u32 {
        self.0
    }
}

impl std::ops::Not for Literal {
    type Output = Literal;

    fn not(self) -> Literal {
        Literal(self.0 ^ 1)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Latch {
    pub state: Literal,
    pub next: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AndGate {
    pub lhs: Literal,
    pub rhs0: Literal,
    pub rhs1: Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Input,
    Latch,
    Output,
}

impl SymbolKind {
    fn prefix(self) -> char {
        match self {
            SymbolKind::Input => 'i',
            SymbolKind::Latch => 'l',
            SymbolKind::Output => 'o',
        }
    }
}

/// An and-inverter graph with latches. Latches reset to zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AigerCircuit {
    pub max_var: u32,
    pub inputs: Vec<Literal>,
    pub latches: Vec<Latch>,
    pub outputs: Vec<Literal>,
    pub ands: Vec<AndGate>,
    pub symbols: BTreeMap<(SymbolKind, usize), String>,
    pub comments: Vec<String>,
}

impl AigerCircuit {
    pub fn symbol(&self, kind: SymbolKind, index: usize) -> Option<&str> {
        self.symbols.get(&(kind, index)).map(String::as_str)
    }

    /// Index of the output carrying the given symbol name.
    pub fn output_named(&self, name: &str) -> Option<usize> {
        self.symbols
            .iter()
            .find(|((kind, _), n)| *kind == SymbolKind::Output && n.as_str() == name)
            .map(|((_, idx), _)| *idx)
    }

    /// Checks the structural invariants shared by both profiles: literal
    /// ranges, unique definitions and that every referenced literal is defined.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let unwrap = |e: ParseError| match e.kind {
            ParseErrorKind::Invalid(v) => v,
            _ => unreachable!("checker only reports validation errors"),
        };
        let pos = Position::Line(0);
        let mut chk = Checker::new(self.max_var);
        for &i in &self.inputs {
            chk.define(i, pos, "input").map_err(unwrap)?;
        }
        for l in &self.latches {
            chk.define(l.state, pos, "latch").map_err(unwrap)?;
        }
        for a in &self.ands {
            chk.define(a.lhs, pos, "and gate").map_err(unwrap)?;
        }
        for l in &self.latches {
            chk.use_lit(l.next, pos).map_err(unwrap)?;
        }
        for &o in &self.outputs {
            chk.use_lit(o, pos).map_err(unwrap)?;
        }
        for a in &self.ands {
            chk.use_lit(a.rhs0, pos).map_err(unwrap)?;
            chk.use_lit(a.rhs1, pos).map_err(unwrap)?;
        }
        chk.finish().map_err(unwrap)
    }

    /// Position of each input variable in `inputs`.
    pub fn input_index_of(&self, var: u32) -> Option<usize> {
        self.inputs.iter().position(|l| l.var() == var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("literal {lit} exceeds maximum variable index {max_var}")]
    OutOfRange { lit: Literal, max_var: u32 },
    #[error("{what} literal {lit} must be positive and non-constant")]
    BadDefinition { what: &'static str, lit: Literal },
    #[error("variable of literal {lit} defined more than once")]
    Redefined { lit: Literal },
    #[error("literal {lit} is never defined")]
    Undefined { lit: Literal },
}

/// Where a parse error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Line(usize),
    Byte(usize),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Line(n) => write!(f, "line {n}"),
            Position::Byte(n) => write!(f, "byte {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("unexpected end of input in {0} section")]
    Truncated(&'static str),
    #[error("expected {expected}, found {found:?}")]
    Syntax { expected: &'static str, found: String },
    #[error("latch reset value {0} is not supported, only zero reset")]
    UnsupportedReset(String),
    #[error("AND gates are not in ascending order")]
    NonMonotoneAnd,
    #[error("AND delta underflows")]
    DeltaUnderflow,
    #[error("variable-length integer is truncated or too long")]
    BadVarint,
    #[error("malformed symbol entry {0:?}")]
    Symbol(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Position,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub(crate) fn line(line: usize, kind: ParseErrorKind) -> Self {
        ParseError { pos: Position::Line(line), kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WriteError {
    #[error("binary AIGER requires a normalized circuit")]
    NotNormalized,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error("combinational cycle through variable {0}")]
    Cycle(u32),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Parses either profile, dispatching on the magic header token.
pub fn parse(bytes: &[u8]) -> Result<AigerCircuit, ParseError> {
    if bytes.starts_with(b"aig ") {
        parse_binary(bytes)
    } else if bytes.starts_with(b"aag ") {
        let text = std::str::from_utf8(bytes).map_err(|_| {
            ParseError::line(1, ParseErrorKind::Header("ascii file is not valid UTF-8".into()))
        })?;
        parse_ascii(text)
    } else {
        Err(ParseError::line(1, ParseErrorKind::Header("expected `aag` or `aig`".into())))
    }
}

/// Definition/use bookkeeping shared by both parsers so that every error
/// carries the position of the offending entry.
pub(crate) struct Checker {
    max_var: u32,
    defined: rustc_hash::FxHashSet<u32>,
    uses: Vec<(Literal, Position)>,
}

impl Checker {
    pub(crate) fn new(max_var: u32) -> Self {
        Checker { max_var, defined: Default::default(), uses: Vec::new() }
    }

    fn in_range(&self, lit: Literal) -> bool {
        lit.0 as u64 <= 2 * self.max_var as u64 + 1
    }

    pub(crate) fn define(&mut self, lit: Literal, pos: Position, what: &'static str) -> Result<(), ParseError> {
        let err = |e| ParseError { pos, kind: ParseErrorKind::Invalid(e) };
        if lit.is_negated() || lit.is_constant() {
            return Err(err(ValidationError::BadDefinition { what, lit }));
        }
        if !self.in_range(lit) {
            return Err(err(ValidationError::OutOfRange { lit, max_var: self.max_var }));
        }
        if !self.defined.insert(lit.var()) {
            return Err(err(ValidationError::Redefined { lit }));
        }
        Ok(())
    }

    pub(crate) fn use_lit(&mut self, lit: Literal, pos: Position) -> Result<(), ParseError> {
        if !self.in_range(lit) {
            return Err(ParseError {
                pos,
                kind: ParseErrorKind::Invalid(ValidationError::OutOfRange { lit, max_var: self.max_var }),
            });
        }
        self.uses.push((lit, pos));
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<(), ParseError> {
        for (lit, pos) in self.uses {
            if !lit.is_constant() && !self.defined.contains(&lit.var()) {
                return Err(ParseError { pos, kind: ParseErrorKind::Invalid(ValidationError::Undefined { lit }) });
            }
        }
        Ok(())
    }
}

/// Split of input indices into the environment's and the controller's.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputPartition {
    pub uncontrollable: Vec<usize>,
    pub controllable: Vec<usize>,
}

/// Inputs whose symbol starts with [`CONTROLLABLE_PREFIX`] (case-sensitive)
/// are controllable; everything else, including unnamed inputs, belongs to
/// the environment.
pub fn classify_inputs(c: &AigerCircuit) -> InputPartition {
    let mut p = InputPartition::default();
    for idx in 0..c.inputs.len() {
        match c.symbol(SymbolKind::Input, idx) {
            Some(name) if name.starts_with(CONTROLLABLE_PREFIX) => p.controllable.push(idx),
            _ => p.uncontrollable.push(idx),
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_input_symbols(names: &[(usize, &str)], n: usize) -> AigerCircuit {
        let mut c = AigerCircuit {
            max_var: n as u32,
            inputs: (1..=n as u32).map(|v| Literal::from_var(v, false)).collect(),
            outputs: vec![Literal::FALSE],
            ..Default::default()
        };
        for (i, s) in names {
            c.symbols.insert((SymbolKind::Input, *i), s.to_string());
        }
        c
    }

    #[test]
    fn literal_negation_flips_lsb() {
        assert_eq!(!Literal(6), Literal(7));
        assert_eq!(!Literal::FALSE, Literal::TRUE);
        assert_eq!(Literal(7).var(), 3);
    }

    #[test]
    fn prefix_rule() {
        let c = with_input_symbols(&[(0, "controllable_grant"), (1, "request")], 2);
        let p = classify_inputs(&c);
        assert_eq!(p.controllable, vec![0]);
        assert_eq!(p.uncontrollable, vec![1]);
    }

    #[test]
    fn unnamed_inputs_are_uncontrollable() {
        let p = classify_inputs(&with_input_symbols(&[], 3));
        assert_eq!(p.uncontrollable, vec![0, 1, 2]);
        assert!(p.controllable.is_empty());
    }

    #[test]
    fn prefix_is_case_sensitive() {
        let p = classify_inputs(&with_input_symbols(&[(0, "Controllable_x")], 1));
        assert_eq!(p.uncontrollable, vec![0]);
    }

    #[test]
    fn validate_rejects_undefined_reference() {
        let c = AigerCircuit { max_var: 2, inputs: vec![Literal(2)], outputs: vec![Literal(4)], ..Default::default() };
        assert_eq!(c.validate(), Err(ValidationError::Undefined { lit: Literal(4) }));
    }
}
