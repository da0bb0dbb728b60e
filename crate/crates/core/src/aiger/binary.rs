use super::ascii::{check_reset, parse_header, parse_trailer, skip_property_sections, write_trailer};
use super::{
    is_normalized, AigerCircuit, AndGate, Checker, Latch, Literal, ParseError, ParseErrorKind, Position,
    WriteError,
};

const MAX_IMPLICIT_INPUTS: usize = 1 << 24;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn line(&mut self, section: &'static str) -> Result<(usize, &'a str), ParseError> {
        let rest = &self.bytes[self.pos..];
        let Some(end) = rest.iter().position(|&b| b == b'\n') else {
            return Err(ParseError::line(self.line, ParseErrorKind::Truncated(section)));
        };
        self.line += 1;
        self.pos += end + 1;
        let text = std::str::from_utf8(&rest[..end]).map_err(|_| {
            ParseError::line(self.line, ParseErrorKind::Syntax { expected: "text line", found: "<binary>".into() })
        })?;
        Ok((self.line, text))
    }

    fn varint(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        let mut value: u64 = 0;
        let mut shift = 0;
        loop {
            let Some(&b) = self.bytes.get(self.pos) else {
                return Err(ParseError { pos: Position::Byte(start), kind: ParseErrorKind::BadVarint });
            };
            self.pos += 1;
            value |= ((b & 0x7f) as u64) << shift;
            if value > u32::MAX as u64 || shift > 28 {
                return Err(ParseError { pos: Position::Byte(start), kind: ParseErrorKind::BadVarint });
            }
            if b & 0x80 == 0 {
                return Ok(value as u32);
            }
            shift += 7;
        }
    }
}

fn parse_u32s(line: &str, n: usize, expected: &'static str) -> Result<Vec<u32>, ParseError> {
    let bad = || ParseError::line(n, ParseErrorKind::Syntax { expected, found: line.to_string() });
    line.split_ascii_whitespace().map(|t| t.parse().map_err(|_| bad())).collect()
}

/// Parses a binary AIGER (`aig`) document. Inputs, latches and AND gates are
/// implicitly numbered in that order, so the result is always normalized.
pub fn parse_binary(bytes: &[u8]) -> Result<AigerCircuit, ParseError> {
    let mut cur = Cursor { bytes, pos: 0, line: 0 };
    let (_, header) = cur.line("header")?;
    let h = parse_header(header, "aig")?;
    if (h.inputs + h.latches + h.ands) as u64 != h.max_var as u64 {
        return Err(ParseError::line(1, ParseErrorKind::Header("binary profile requires M = I + L + A".into())));
    }
    // every latch, output and gate takes at least two bytes; inputs take none
    if h.latches + h.outputs + h.ands > bytes.len() {
        return Err(ParseError::line(1, ParseErrorKind::Truncated("body")));
    }
    if h.inputs > MAX_IMPLICIT_INPUTS {
        return Err(ParseError::line(1, ParseErrorKind::Header(format!("more than {MAX_IMPLICIT_INPUTS} inputs"))));
    }
    let mut chk = Checker::new(h.max_var);
    let mut c = AigerCircuit { max_var: h.max_var, ..Default::default() };
    let mut var = 0u32;
    for _ in 0..h.inputs {
        var += 1;
        chk.define(Literal::from_var(var, false), Position::Line(1), "input")?;
        c.inputs.push(Literal::from_var(var, false));
    }
    for _ in 0..h.latches {
        var += 1;
        let state = Literal::from_var(var, false);
        let (n, l) = cur.line("latch")?;
        chk.define(state, Position::Line(n), "latch")?;
        let nums = parse_u32s(l, n, "latch next literal")?;
        let (next, reset) = match nums.as_slice() {
            [next] => (*next, None),
            [next, reset] => (*next, Some(*reset)),
            _ => {
                return Err(ParseError::line(n, ParseErrorKind::Syntax { expected: "latch", found: l.into() }))
            }
        };
        check_reset(state, reset, n)?;
        chk.use_lit(Literal(next), Position::Line(n))?;
        c.latches.push(Latch { state, next: Literal(next) });
    }
    for _ in 0..h.outputs {
        let (n, l) = cur.line("output")?;
        match parse_u32s(l, n, "output literal")?.as_slice() {
            [lit] => {
                chk.use_lit(Literal(*lit), Position::Line(n))?;
                c.outputs.push(Literal(*lit));
            }
            _ => {
                return Err(ParseError::line(n, ParseErrorKind::Syntax { expected: "output literal", found: l.into() }))
            }
        }
    }
    skip_property_sections(&h, |s| cur.line(s))?;
    c.ands.reserve(h.ands.min(bytes.len()));
    for _ in 0..h.ands {
        var += 1;
        let at = cur.pos;
        let lhs = var * 2;
        chk.define(Literal(lhs), Position::Byte(at), "and gate")?;
        let d0 = cur.varint()?;
        let d1 = cur.varint()?;
        if d0 == 0 {
            return Err(ParseError { pos: Position::Byte(at), kind: ParseErrorKind::NonMonotoneAnd });
        }
        let rhs0 = lhs.checked_sub(d0);
        let rhs1 = rhs0.and_then(|r| r.checked_sub(d1));
        let (Some(rhs0), Some(rhs1)) = (rhs0, rhs1) else {
            return Err(ParseError { pos: Position::Byte(at), kind: ParseErrorKind::DeltaUnderflow });
        };
        c.ands.push(AndGate { lhs: Literal(lhs), rhs0: Literal(rhs0), rhs1: Literal(rhs1) });
    }
    chk.finish()?;

    let tail = &bytes[cur.pos..];
    let text = std::str::from_utf8(tail).map_err(|_| {
        ParseError { pos: Position::Byte(cur.pos), kind: ParseErrorKind::Symbol("<non-UTF-8 trailer>".into()) }
    })?;
    let body = text.strip_suffix('\n').unwrap_or(text);
    if !body.is_empty() {
        parse_trailer(&mut c, body.split('\n').enumerate().map(|(i, l)| (cur.line + 1 + i, l)))?;
    }
    Ok(c)
}

fn push_varint(out: &mut Vec<u8>, mut x: u32) {
    while x >= 0x80 {
        out.push((x as u8 & 0x7f) | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

/// Writes the binary profile. The circuit must be normalized.
pub fn write_binary(c: &AigerCircuit) -> Result<Vec<u8>, WriteError> {
    if !is_normalized(c) {
        return Err(WriteError::NotNormalized);
    }
    let mut text = format!(
        "aig {} {} {} {} {}\n",
        c.max_var,
        c.inputs.len(),
        c.latches.len(),
        c.outputs.len(),
        c.ands.len()
    );
    for l in &c.latches {
        text.push_str(&format!("{}\n", l.next));
    }
    for o in &c.outputs {
        text.push_str(&format!("{o}\n"));
    }
    let mut out = text.into_bytes();
    for a in &c.ands {
        push_varint(&mut out, a.lhs.0 - a.rhs0.0);
        push_varint(&mut out, a.rhs0.0 - a.rhs1.0);
    }
    let mut trailer = String::new();
    write_trailer(c, &mut trailer);
    out.extend_from_slice(trailer.as_bytes());
    Ok(out)
}
