use std::collections::BTreeMap;

use num::{pow::Pow, BigInt, One, Zero};

use super::ast::{Angle, Detector, Instruction, RotAxis, Sequence};
use crate::error::DslError;
use crate::phase::{Coeff, TimeExpr, TimeSymbol};

/// Pulse-sequence parser. Named scalar parameters (the magnetic-moment ratio
/// `r` in practice) may be bound before parsing so programs can write
/// durations like `wait T - (1-r)*t1`.
#[derive(Debug, Clone, Default)]
pub struct Parser {
    params: BTreeMap<String, Coeff>,
}

/// Parse with no scalar parameters bound and the default sequence name.
pub fn parse(text: &str) -> Result<Sequence, DslError> {
    Parser::new().parse(text)
}

impl Parser {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_param(mut self, name: impl Into<String>, value: Coeff) -> Self {
        self.params.insert(name.into(), value);
        self
    }

    pub fn parse(&self, text: &str) -> Result<Sequence, DslError> {
        self.parse_named(text, "user")
    }

    pub fn parse_named(&self, text: &str, name: &str) -> Result<Sequence, DslError> {
        let tokens = lex(text)?;
        let mut cursor = Cursor { tokens: &tokens, pos: 0, params: &self.params };
        let instructions = cursor.program(false)?;
        cursor.expect_eof()?;
        Sequence::new(name, instructions)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(Coeff),
    Det(Detector),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_) => "number".to_string(),
            Tok::Det(d) => format!("`{}`", d.as_str()),
            Tok::Plus => "`+`".to_string(),
            Tok::Minus => "`-`".to_string(),
            Tok::Star => "`*`".to_string(),
            Tok::Slash => "`/`".to_string(),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
            Tok::LBrace => "`{`".to_string(),
            Tok::RBrace => "`}`".to_string(),
            Tok::Semi => "`;`".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> DslError {
    DslError::Syntax { line, col, msg: msg.into() }
}

fn lex(text: &str) -> Result<Vec<Spanned>, DslError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '+' => {
                out.push(Spanned { tok: Tok::Plus, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '-' => {
                out.push(Spanned { tok: Tok::Minus, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '*' => {
                out.push(Spanned { tok: Tok::Star, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '/' => {
                out.push(Spanned { tok: Tok::Slash, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '(' => {
                out.push(Spanned { tok: Tok::LParen, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '{' => {
                out.push(Spanned { tok: Tok::LBrace, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            '}' => {
                out.push(Spanned { tok: Tok::RBrace, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            ';' => {
                out.push(Spanned { tok: Tok::Semi, line: tline, col: tcol });
                advance(1, &mut i, &mut col);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                let value = decimal_to_rational(&text)
                    .ok_or_else(|| syntax(tline, tcol, format!("malformed number `{text}`")))?;
                out.push(Spanned { tok: Tok::Number(value), line: tline, col: tcol });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += i - start;
                // Detector names fuse the sign into the token.
                if word == "D" && i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    let det = if chars[i] == '+' { Detector::Plus } else { Detector::Minus };
                    i += 1;
                    col += 1;
                    out.push(Spanned { tok: Tok::Det(det), line: tline, col: tcol });
                } else {
                    out.push(Spanned { tok: Tok::Ident(word), line: tline, col: tcol });
                }
            }
            other => {
                return Err(syntax(tline, tcol, format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(out)
}

/// Exact rational value of a decimal literal like `2`, `0.25` or `2.5e-6`.
fn decimal_to_rational(s: &str) -> Option<Coeff> {
    let (mantissa, exp10) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if mantissa.matches('.').count() > 1 {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let shift = exp10 - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Some(if shift >= 0 {
        Coeff::from_integer(n * ten.pow(shift as u32))
    } else {
        Coeff::new(n, ten.pow((-shift) as u32))
    })
}

struct Cursor<'a> {
    tokens: &'a [Spanned],
    pos: usize,
    params: &'a BTreeMap<String, Coeff>,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&'a Spanned> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.tokens.get(self.pos) {
            Some(t) => (t.line, t.col),
            None => self
                .tokens
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    fn err_here(&self, msg: impl Into<String>) -> DslError {
        let (line, col) = self.here();
        syntax(line, col, msg)
    }

    fn expect(&mut self, want: Tok) -> Result<(), DslError> {
        match self.next() {
            Some(t) if t.tok == want => Ok(()),
            Some(t) => Err(syntax(
                t.line,
                t.col,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            )),
            None => {
                let (line, col) = self.here();
                Err(syntax(line, col, format!("expected {} at end of input", want.describe())))
            }
        }
    }

    fn expect_eof(&mut self) -> Result<(), DslError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(
                t.line,
                t.col,
                format!("unexpected {} after program end", t.tok.describe()),
            )),
        }
    }

    fn skip_semis(&mut self) {
        while matches!(self.peek().map(|t| &t.tok), Some(Tok::Semi)) {
            self.pos += 1;
        }
    }

    /// program := stmt (";" stmt)* — lenient about repeated and trailing
    /// semicolons. `in_block` stops at a closing brace.
    fn program(&mut self, in_block: bool) -> Result<Vec<Instruction>, DslError> {
        let mut out = Vec::new();
        loop {
            self.skip_semis();
            match self.peek().map(|t| &t.tok) {
                None => break,
                Some(Tok::RBrace) if in_block => break,
                _ => {}
            }
            out.push(self.statement()?);
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Semi) => self.skip_semis(),
                Some(Tok::RBrace) if in_block => {}
                None => {}
                Some(_) => return Err(self.err_here("expected `;` after statement")),
            }
        }
        Ok(out)
    }

    fn statement(&mut self) -> Result<Instruction, DslError> {
        let t = self.next().ok_or_else(|| self.err_here("expected a statement"))?;
        let Tok::Ident(word) = &t.tok else {
            return Err(syntax(t.line, t.col, format!("expected a statement keyword, found {}", t.tok.describe())));
        };
        match word.as_str() {
            "rg" => Ok(Instruction::Rot { axis: RotAxis::Ground, angle: self.angle()? }),
            "re" => Ok(Instruction::Rot { axis: RotAxis::Excited, angle: self.angle()? }),
            "ro" => Ok(Instruction::Rot { axis: RotAxis::Optical, angle: self.angle()? }),
            "wait" => Ok(Instruction::Wait(self.time_expr()?)),
            "emit" => {
                let t = self.next().ok_or_else(|| self.err_here("expected window label"))?;
                match &t.tok {
                    Tok::Ident(label) => Ok(Instruction::Emit { label: label.clone() }),
                    other => Err(syntax(t.line, t.col, format!("expected window label, found {}", other.describe()))),
                }
            }
            "detect" => {
                let t = self.next().ok_or_else(|| self.err_here("expected `D+` or `D-`"))?;
                let detector = match &t.tok {
                    Tok::Det(d) => *d,
                    other => {
                        return Err(syntax(t.line, t.col, format!("expected `D+` or `D-`, found {}", other.describe())))
                    }
                };
                let t = self.next().ok_or_else(|| self.err_here("expected detection time symbol"))?;
                let at = match &t.tok {
                    Tok::Ident(name) => name
                        .parse::<TimeSymbol>()
                        .map_err(|_| syntax(t.line, t.col, format!("unknown time symbol `{name}`")))?,
                    other => {
                        return Err(syntax(t.line, t.col, format!("expected time symbol, found {}", other.describe())))
                    }
                };
                Ok(Instruction::Detect { detector, at })
            }
            "branch_order" => {
                self.expect(Tok::LBrace)?;
                let second_later = self.program(true)?;
                self.expect(Tok::RBrace)?;
                self.expect(Tok::LBrace)?;
                let first_later = self.program(true)?;
                self.expect(Tok::RBrace)?;
                Ok(Instruction::BranchOnOrder { second_later, first_later })
            }
            other => Err(syntax(t.line, t.col, format!("unknown instruction `{other}`"))),
        }
    }

    fn angle(&mut self) -> Result<Angle, DslError> {
        let t = self.next().ok_or_else(|| self.err_here("expected an angle"))?;
        match &t.tok {
            Tok::Ident(w) if w == "alpha" => Ok(Angle::Alpha),
            Tok::Ident(w) if w == "pi" => {
                if matches!(self.peek().map(|t| &t.tok), Some(Tok::Slash)) {
                    self.pos += 1;
                    let t2 = self.next().ok_or_else(|| self.err_here("expected `2`"))?;
                    match &t2.tok {
                        Tok::Number(n) if *n == Coeff::from_integer(2.into()) => Ok(Angle::HalfPi),
                        other => Err(syntax(
                            t2.line,
                            t2.col,
                            format!("only pi/2 is supported, found pi/{}", other.describe()),
                        )),
                    }
                } else {
                    Ok(Angle::Pi)
                }
            }
            other => Err(syntax(
                t.line,
                t.col,
                format!("expected `pi`, `pi/2` or `alpha`, found {}", other.describe()),
            )),
        }
    }

    /// timeexpr := ["-"] tterm (("+"|"-") tterm)*
    fn time_expr(&mut self) -> Result<TimeExpr, DslError> {
        let mut out = TimeExpr::zero();
        let mut sign = Coeff::one();
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus)) {
            self.pos += 1;
            sign = -sign;
        }
        loop {
            let (scalar, sym) = self.time_term()?;
            let coeff = scalar * &sign;
            out.add_term(sym.unwrap_or(TimeSymbol::One), coeff);
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    sign = Coeff::one();
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    sign = -Coeff::one();
                }
                _ => break,
            }
        }
        Ok(out)
    }

    /// tterm := atom (("*"|"/") atom)* with at most one time-symbol atom and
    /// division restricted to scalars.
    fn time_term(&mut self) -> Result<(Coeff, Option<TimeSymbol>), DslError> {
        let mut scalar = Coeff::one();
        let mut sym: Option<TimeSymbol> = None;
        let mut dividing = false;
        loop {
            let (line, col) = self.here();
            match self.time_atom()? {
                TimeAtom::Scalar(v) => {
                    if dividing {
                        if v.is_zero() {
                            return Err(syntax(line, col, "division by zero"));
                        }
                        scalar /= v;
                    } else {
                        scalar *= v;
                    }
                }
                TimeAtom::Symbol(s) => {
                    if dividing {
                        return Err(syntax(line, col, "cannot divide by a time symbol"));
                    }
                    if sym.replace(s).is_some() {
                        return Err(syntax(
                            line,
                            col,
                            "a duration term may contain at most one time symbol",
                        ));
                    }
                }
            }
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => {
                    self.pos += 1;
                    dividing = false;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    dividing = true;
                }
                _ => break,
            }
        }
        Ok((scalar, sym))
    }

    fn time_atom(&mut self) -> Result<TimeAtom, DslError> {
        let t = self.next().ok_or_else(|| self.err_here("expected a duration"))?;
        match &t.tok {
            Tok::Number(v) => Ok(TimeAtom::Scalar(v.clone())),
            Tok::LParen => {
                let v = self.scalar_expr()?;
                self.expect(Tok::RParen)?;
                Ok(TimeAtom::Scalar(v))
            }
            Tok::Ident(name) => {
                if let Ok(sym) = name.parse::<TimeSymbol>() {
                    Ok(TimeAtom::Symbol(sym))
                } else if let Some(v) = self.params.get(name) {
                    Ok(TimeAtom::Scalar(v.clone()))
                } else {
                    Err(syntax(t.line, t.col, format!("unknown symbol `{name}`")))
                }
            }
            other => Err(syntax(t.line, t.col, format!("expected duration term, found {}", other.describe()))),
        }
    }

    /// scalar_expr := ["-"] sterm (("+"|"-") sterm)*
    fn scalar_expr(&mut self) -> Result<Coeff, DslError> {
        let mut sign = Coeff::one();
        if matches!(self.peek().map(|t| &t.tok), Some(Tok::Minus)) {
            self.pos += 1;
            sign = -sign;
        }
        let mut acc = self.scalar_term()? * &sign;
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc += self.scalar_term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc -= self.scalar_term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn scalar_term(&mut self) -> Result<Coeff, DslError> {
        let mut acc = self.scalar_atom()?;
        loop {
            match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc *= self.scalar_atom()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let (line, col) = self.here();
                    let d = self.scalar_atom()?;
                    if d.is_zero() {
                        return Err(syntax(line, col, "division by zero"));
                    }
                    acc /= d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn scalar_atom(&mut self) -> Result<Coeff, DslError> {
        let t = self.next().ok_or_else(|| self.err_here("expected a scalar"))?;
        match &t.tok {
            Tok::Number(v) => Ok(v.clone()),
            Tok::LParen => {
                let v = self.scalar_expr()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Ident(name) => self
                .params
                .get(name)
                .cloned()
                .ok_or_else(|| syntax(t.line, t.col, format!("unknown symbol `{name}`"))),
            other => Err(syntax(t.line, t.col, format!("expected scalar, found {}", other.describe()))),
        }
    }
}

enum TimeAtom {
    Scalar(Coeff),
    Symbol(TimeSymbol),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::ratio;

    #[test]
    fn four_instruction_program() {
        let seq = parse("rg pi/2; ro pi; emit w1; detect D+ tau;").unwrap();
        assert_eq!(seq.instructions.len(), 4);
        assert_eq!(
            seq.instructions[0],
            Instruction::Rot { axis: RotAxis::Ground, angle: Angle::HalfPi }
        );
        assert_eq!(
            seq.instructions[3],
            Instruction::Detect { detector: Detector::Plus, at: TimeSymbol::Tau }
        );
    }

    #[test]
    fn empty_program_is_an_error() {
        assert_eq!(parse("").unwrap_err(), DslError::EmptySequence);
        assert_eq!(parse("  # comment only\n").unwrap_err(), DslError::EmptySequence);
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse("rg pi;\nro trouble;").unwrap_err();
        match err {
            DslError::Syntax { line, col, .. } => {
                assert_eq!(line, 2);
                assert_eq!(col, 4);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn detect_without_emit_is_rejected() {
        assert!(matches!(
            parse("rg pi; detect D+ tau;"),
            Err(DslError::UnmatchedDetect(_))
        ));
    }

    #[test]
    fn wait_parses_linear_combinations() {
        let seq = parse("emit w1; detect D- tau; wait T - 1/2*t1 + 2.5e-6;").unwrap();
        let Instruction::Wait(d) = &seq.instructions[2] else { panic!() };
        assert_eq!(d.coeff(TimeSymbol::WaitT), ratio(1, 1));
        assert_eq!(d.coeff(TimeSymbol::ShelfT1), ratio(-1, 2));
        assert_eq!(d.coeff(TimeSymbol::One), ratio(1, 400000));
    }

    #[test]
    fn parenthesised_scalar_with_bound_param() {
        let p = Parser::new().with_param("r", ratio(2, 5));
        let seq = p.parse("emit w1; detect D+ tau; wait T - (1-r)*t1;").unwrap();
        let Instruction::Wait(d) = &seq.instructions[2] else { panic!() };
        assert_eq!(d.coeff(TimeSymbol::ShelfT1), ratio(-3, 5));
    }

    #[test]
    fn unbound_param_is_unknown_symbol() {
        let err = parse("wait (1-r)*t1;").unwrap_err();
        match err {
            DslError::Syntax { msg, .. } => assert!(msg.contains("unknown symbol `r`")),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn branch_order_blocks() {
        let text = "emit w1; detect D+ tau1; emit w2; detect D+ tau2;\nbranch_order { rg pi; wait tau2 - tau1; } { wait tau1 - tau2; };";
        let seq = parse(text).unwrap();
        let Instruction::BranchOnOrder { second_later, first_later } =
            &seq.instructions[4]
        else {
            panic!()
        };
        assert_eq!(second_later.len(), 2);
        assert_eq!(first_later.len(), 1);
    }

    #[test]
    fn decimal_literals_are_exact() {
        assert_eq!(decimal_to_rational("2").unwrap(), ratio(2, 1));
        assert_eq!(decimal_to_rational("0.25").unwrap(), ratio(1, 4));
        assert_eq!(decimal_to_rational("2.5e-6").unwrap(), ratio(1, 400000));
        assert_eq!(decimal_to_rational("1e3").unwrap(), ratio(1000, 1));
        assert!(decimal_to_rational("1.2.3").is_none());
    }
}
