use std::fmt::Write as _;

use super::{
    AigerCircuit, AndGate, Checker, Latch, Literal, ParseError, ParseErrorKind, Position, SymbolKind,
};

/// Counts from an `aag`/`aig` header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Header {
    pub max_var: u32,
    pub inputs: usize,
    pub latches: usize,
    pub outputs: usize,
    pub ands: usize,
    pub bad: usize,
    pub constraints: usize,
    pub justice: usize,
    pub fairness: usize,
}

pub(crate) fn parse_header(line: &str, magic: &str) -> Result<Header, ParseError> {
    let err = |msg: String| ParseError::line(1, ParseErrorKind::Header(msg));
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next() != Some(magic) {
        return Err(err(format!("expected `{magic}`")));
    }
    let mut nums = Vec::with_capacity(9);
    for t in tokens {
        let n: u32 = t.parse().map_err(|_| err(format!("bad count {t:?}")))?;
        nums.push(n);
    }
    if nums.len() < 5 || nums.len() > 9 {
        return Err(err(format!("expected 5 to 9 counts, found {}", nums.len())));
    }
    nums.resize(9, 0);
    if nums[0] >= 1 << 30 {
        return Err(err(format!("maximum variable index {} too large", nums[0])));
    }
    let h = Header {
        max_var: nums[0],
        inputs: nums[1] as usize,
        latches: nums[2] as usize,
        outputs: nums[3] as usize,
        ands: nums[4] as usize,
        bad: nums[5] as usize,
        constraints: nums[6] as usize,
        justice: nums[7] as usize,
        fairness: nums[8] as usize,
    };
    if (h.inputs + h.latches + h.ands) as u64 > h.max_var as u64 {
        return Err(err("M is smaller than I + L + A".into()));
    }
    if h.bad + h.constraints + h.justice + h.fairness > 0 {
        log::warn!("ignoring bad, constraint, justice and fairness sections");
    }
    Ok(h)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Split<'a, char>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let body = text.strip_suffix('\n').unwrap_or(text);
        Lines { inner: body.split('\n').enumerate(), last: 0 }
    }

    fn next_line(&mut self, section: &'static str) -> Result<(usize, &'a str), ParseError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l.strip_suffix('\r').unwrap_or(l)))
            }
            None => Err(ParseError::line(self.last, ParseErrorKind::Truncated(section))),
        }
    }

    fn remaining(self) -> impl Iterator<Item = (usize, &'a str)> {
        self.inner.map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
    }
}

fn numbers<const N: usize>(
    line: &str,
    lineno: usize,
    min: usize,
    expected: &'static str,
) -> Result<([u32; N], usize), ParseError> {
    let bad = || ParseError::line(lineno, ParseErrorKind::Syntax { expected, found: line.to_string() });
    let mut out = [0u32; N];
    let mut n = 0;
    for t in line.split_ascii_whitespace() {
        if n == N {
            return Err(bad());
        }
        out[n] = t.parse().map_err(|_| bad())?;
        n += 1;
    }
    if n < min {
        return Err(bad());
    }
    Ok((out, n))
}

pub(crate) fn check_reset(state: Literal, reset: Option<u32>, lineno: usize) -> Result<(), ParseError> {
    match reset {
        None | Some(0) => Ok(()),
        Some(r) => {
            let what = if r == state.0 { "uninitialized".to_string() } else { r.to_string() };
            Err(ParseError::line(lineno, ParseErrorKind::UnsupportedReset(what)))
        }
    }
}

/// Skips the B, C, J and F sections after checking their syntax.
pub(crate) fn skip_property_sections<'a>(
    h: &Header,
    mut next: impl FnMut(&'static str) -> Result<(usize, &'a str), ParseError>,
) -> Result<(), ParseError> {
    for _ in 0..h.bad + h.constraints {
        let (n, l) = next("property")?;
        numbers::<1>(l, n, 1, "literal")?;
    }
    let mut justice_lits = 0usize;
    for _ in 0..h.justice {
        let (n, l) = next("justice")?;
        let ([size], _) = numbers::<1>(l, n, 1, "justice size")?;
        justice_lits = justice_lits.saturating_add(size as usize);
    }
    for _ in 0..justice_lits {
        let (n, l) = next("justice")?;
        numbers::<1>(l, n, 1, "literal")?;
    }
    for _ in 0..h.fairness {
        let (n, l) = next("fairness")?;
        numbers::<1>(l, n, 1, "literal")?;
    }
    Ok(())
}

/// Parses the trailing symbol table and comment section.
pub(crate) fn parse_trailer<'a>(
    c: &mut AigerCircuit,
    lines: impl Iterator<Item = (usize, &'a str)>,
) -> Result<(), ParseError> {
    let mut in_comments = false;
    for (n, line) in lines {
        if in_comments {
            c.comments.push(line.to_string());
            continue;
        }
        if line == "c" {
            in_comments = true;
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let bad = || ParseError::line(n, ParseErrorKind::Symbol(line.to_string()));
        let (head, name) = line.split_once(' ').ok_or_else(bad)?;
        let mut chars = head.chars();
        let kind = match chars.next() {
            Some('i') => Some(SymbolKind::Input),
            Some('l') => Some(SymbolKind::Latch),
            Some('o') => Some(SymbolKind::Output),
            Some('b' | 'c' | 'j' | 'f') => None,
            _ => return Err(bad()),
        };
        let idx: usize = chars.as_str().parse().map_err(|_| bad())?;
        let Some(kind) = kind else { continue };
        let count = match kind {
            SymbolKind::Input => c.inputs.len(),
            SymbolKind::Latch => c.latches.len(),
            SymbolKind::Output => c.outputs.len(),
        };
        if idx >= count || c.symbols.insert((kind, idx), name.to_string()).is_some() {
            return Err(bad());
        }
    }
    Ok(())
}

/// Parses an ascii AIGER (`aag`) document.
pub fn parse_ascii(text: &str) -> Result<AigerCircuit, ParseError> {
    let mut lines = Lines::new(text);
    let (_, header) = lines.next_line("header")?;
    let h = parse_header(header, "aag")?;
    let mut chk = Checker::new(h.max_var);
    let mut c = AigerCircuit { max_var: h.max_var, ..Default::default() };

    for _ in 0..h.inputs {
        let (n, l) = lines.next_line("input")?;
        let ([lit], _) = numbers::<1>(l, n, 1, "input literal")?;
        chk.define(Literal(lit), Position::Line(n), "input")?;
        c.inputs.push(Literal(lit));
    }
    for _ in 0..h.latches {
        let (n, l) = lines.next_line("latch")?;
        let ([state, next, reset], k) = numbers::<3>(l, n, 2, "latch definition")?;
        let state = Literal(state);
        chk.define(state, Position::Line(n), "latch")?;
        check_reset(state, (k == 3).then_some(reset), n)?;
        chk.use_lit(Literal(next), Position::Line(n))?;
        c.latches.push(Latch { state, next: Literal(next) });
    }
    for _ in 0..h.outputs {
        let (n, l) = lines.next_line("output")?;
        let ([lit], _) = numbers::<1>(l, n, 1, "output literal")?;
        chk.use_lit(Literal(lit), Position::Line(n))?;
        c.outputs.push(Literal(lit));
    }
    skip_property_sections(&h, |s| lines.next_line(s))?;
    for _ in 0..h.ands {
        let (n, l) = lines.next_line("and")?;
        let ([lhs, r0, r1], _) = numbers::<3>(l, n, 3, "and gate")?;
        let pos = Position::Line(n);
        chk.define(Literal(lhs), pos, "and gate")?;
        chk.use_lit(Literal(r0), pos)?;
        chk.use_lit(Literal(r1), pos)?;
        c.ands.push(AndGate { lhs: Literal(lhs), rhs0: Literal(r0), rhs1: Literal(r1) });
    }
    chk.finish()?;
    parse_trailer(&mut c, lines.remaining())?;
    Ok(c)
}

pub(crate) fn write_trailer(c: &AigerCircuit, out: &mut String) {
    for ((kind, idx), name) in &c.symbols {
        let _ = writeln!(out, "{}{} {}", kind.prefix(), idx, name);
    }
    if !c.comments.is_empty() {
        out.push_str("c\n");
        for line in &c.comments {
            out.push_str(line);
            out.push('\n');
        }
    }
}

/// Writes the ascii profile. Symbols are emitted inputs first, then latches,
/// then outputs, each in index order.
pub fn write_ascii(c: &AigerCircuit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "aag {} {} {} {} {}",
        c.max_var,
        c.inputs.len(),
        c.latches.len(),
        c.outputs.len(),
        c.ands.len()
    );
    for i in &c.inputs {
        let _ = writeln!(out, "{i}");
    }
    for l in &c.latches {
        let _ = writeln!(out, "{} {}", l.state, l.next);
    }
    for o in &c.outputs {
        let _ = writeln!(out, "{o}");
    }
    for a in &c.ands {
        let _ = writeln!(out, "{} {} {}", a.lhs, a.rhs0, a.rhs1);
    }
    write_trailer(c, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aiger::ValidationError;

    #[test]
    fn pass_through() {
        let c = parse_ascii("aag 1 1 0 1 0\n2\n2\ni0 x\n").unwrap();
        assert_eq!(c.inputs, vec![Literal(2)]);
        assert_eq!(c.outputs, vec![Literal(2)]);
        assert_eq!(c.symbol(SymbolKind::Input, 0), Some("x"));
    }

    #[test]
    fn constant_false_output() {
        let c = parse_ascii("aag 0 0 0 1 0\n0\n").unwrap();
        assert_eq!(c.outputs, vec![Literal::FALSE]);
        assert!(c.inputs.is_empty());
    }

    #[test]
    fn comments_and_symbols_survive() {
        let text = "aag 3 2 0 1 1\n2\n4\n6\n6 2 5\ni0 a\ni1 controllable_b\no0 err\nc\nhello\nworld\n";
        let c = parse_ascii(text).unwrap();
        assert_eq!(c.comments, vec!["hello", "world"]);
        assert_eq!(write_ascii(&c), text);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_ascii("aag 1 1 0 1 0\n2\n4\n").unwrap_err();
        assert_eq!(e.pos, Position::Line(3));
        assert!(matches!(e.kind, ParseErrorKind::Invalid(ValidationError::OutOfRange { .. })));

        let e = parse_ascii("aag 1 1 0 1 1\n2\n4\n4 2 2\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Header(_)), "{e}");

        let e = parse_ascii("aag 3 1 0 1 2\n2\n4\n4 2 2\n4 2 3\n").unwrap_err();
        assert_eq!(e.pos, Position::Line(5));
        assert!(matches!(e.kind, ParseErrorKind::Invalid(ValidationError::Redefined { .. })));

        let e = parse_ascii("aag 2 2 0 1 0\n2\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Truncated("input")), "{e}");

        let e = parse_ascii("aig 1 1 0 1 0\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Header(_)));

        let e = parse_ascii("aag 2 1 0 1 0\n2\n4\n").unwrap_err();
        assert_eq!(e.pos, Position::Line(3));
        assert!(matches!(e.kind, ParseErrorKind::Invalid(ValidationError::Undefined { .. })));
    }

    #[test]
    fn property_sections_are_skipped() {
        // one bad, one constraint, one justice of size 2, one fairness
        let text = "aag 2 1 1 1 0 1 1 1 1\n2\n4 2\n4\n4\n2\n2\n4\n5\n3\nb0 bad\n";
        let c = parse_ascii(text).unwrap();
        assert_eq!(c.outputs, vec![Literal(4)]);
        assert!(c.symbols.is_empty());
    }

    #[test]
    fn latch_reset_values() {
        assert!(parse_ascii("aag 1 0 1 1 0\n2 3 0\n2\n").is_ok());
        let e = parse_ascii("aag 1 0 1 1 0\n2 3 1\n2\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnsupportedReset(_)));
    }

    #[test]
    fn rejects_negated_input() {
        let e = parse_ascii("aag 1 1 0 0 0\n3\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Invalid(ValidationError::BadDefinition { .. })));
    }

    #[test]
    fn symbol_index_must_exist() {
        let e = parse_ascii("aag 1 1 0 1 0\n2\n2\ni1 x\n").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Symbol(_)));
    }
}
