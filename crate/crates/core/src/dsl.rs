//! Line-oriented text format for optical circuits (`.qc` files).
//!
//! ```text
//! paths m0, m1
//! param gamma = 22.5deg
//! encode |0> = m1:H
//! encode |1> = m1:V
//! bd m1 -> m0
//! hwp $gamma on m0
//! detect m0:H as (0,0)
//! ```
//!
//! The normative grammar lives in `docs/grammar.ebnf`. Parsing stops at the
//! first error and reports it as a single [`Diagnostic`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optics::{Detector, Mode, ModeSpace, OpticalCircuit, OpticalElement, OpticsError, Polarization};
use crate::schemes::OutcomeLabel;

/// 1-based line and inclusive column range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column_start: usize,
    pub column_end: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column_start: usize, column_end: usize) -> Self {
        Self { line, column_start, column_end: column_end.max(column_start) }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}-{}", self.line, self.column_start, self.column_end)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {}, columns {}-{}: {message}{}", span.line, span.column_start, span.column_end,
        hint.as_ref().map(|h| format!(" (expected {h})")).unwrap_or_default())]
pub struct Diagnostic {
    pub message: String,
    pub span: SourceSpan,
    pub hint: Option<String>,
}

impl Diagnostic {
    fn new(message: impl Into<String>, span: SourceSpan) -> Self {
        Self { message: message.into(), span, hint: None }
    }

    fn expected(message: impl Into<String>, span: SourceSpan, hint: impl Into<String>) -> Self {
        Self { message: message.into(), span, hint: Some(hint.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keyword {
    Paths,
    Param,
    Hwp,
    On,
    Bd,
    Detect,
    As,
    Encode,
    Relabel,
}

impl Keyword {
    fn from_word(w: &str) -> Option<Self> {
        Some(match w {
            "paths" => Keyword::Paths,
            "param" => Keyword::Param,
            "hwp" => Keyword::Hwp,
            "on" => Keyword::On,
            "bd" => Keyword::Bd,
            "detect" => Keyword::Detect,
            "as" => Keyword::As,
            "encode" => Keyword::Encode,
            "relabel" => Keyword::Relabel,
            _ => return None,
        })
    }

    fn text(self) -> &'static str {
        match self {
            Keyword::Paths => "paths",
            Keyword::Param => "param",
            Keyword::Hwp => "hwp",
            Keyword::On => "on",
            Keyword::Bd => "bd",
            Keyword::Detect => "detect",
            Keyword::As => "as",
            Keyword::Encode => "encode",
            Keyword::Relabel => "relabel",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    /// Decimal literal; `unit` holds an attached suffix such as `deg`.
    Number { value: f64, text: String, unit: Option<String> },
    /// `$name`
    ParamRef(String),
    /// `|01>`
    Ket(String),
    Comma,
    Arrow,
    Equals,
    Colon,
    LParen,
    RParen,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "keyword `{}`", k.text()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number { text, unit, .. } => write!(f, "number `{text}{}`", unit.as_deref().unwrap_or("")),
            TokenKind::ParamRef(s) => write!(f, "parameter `${s}`"),
            TokenKind::Ket(s) => write!(f, "basis vector `|{s}>`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Arrow => f.write_str("`->`"),
            TokenKind::Equals => f.write_str("`=`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut tokens = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let span = |a: usize, b: usize| SourceSpan::new(line_no, a + 1, b);
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            let kind = match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                    continue;
                }
                ',' => {
                    i += 1;
                    TokenKind::Comma
                }
                '=' => {
                    i += 1;
                    TokenKind::Equals
                }
                ':' => {
                    i += 1;
                    TokenKind::Colon
                }
                '(' => {
                    i += 1;
                    TokenKind::LParen
                }
                ')' => {
                    i += 1;
                    TokenKind::RParen
                }
                '-' if chars.get(i + 1) == Some(&'>') => {
                    i += 2;
                    TokenKind::Arrow
                }
                '-' | '0'..='9' | '.' => {
                    if c == '-' {
                        i += 1;
                    }
                    let digits_start = i;
                    while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                        i += 1;
                    }
                    let num: String = chars[start..i].iter().collect();
                    let body: String = chars[digits_start..i].iter().collect();
                    let well_formed = !body.is_empty()
                        && body.matches('.').count() <= 1
                        && !body.starts_with('.')
                        && !body.ends_with('.');
                    let value = num.parse::<f64>().ok().filter(|_| well_formed);
                    let Some(value) = value else {
                        return Err(Diagnostic::expected(
                            format!("malformed number `{num}`"),
                            span(start, i),
                            "digits with an optional fractional part",
                        ));
                    };
                    let unit_start = i;
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    let unit: String = chars[unit_start..i].iter().collect();
                    TokenKind::Number { value, text: num, unit: (!unit.is_empty()).then_some(unit) }
                }
                '$' => {
                    i += 1;
                    let name_start = i;
                    if i < chars.len() && is_ident_start(chars[i]) {
                        while i < chars.len() && is_ident_char(chars[i]) {
                            i += 1;
                        }
                    }
                    if name_start == i {
                        return Err(Diagnostic::expected("`$` without a parameter name", span(start, i), "`$name`"));
                    }
                    TokenKind::ParamRef(chars[name_start..i].iter().collect())
                }
                '|' => {
                    i += 1;
                    let bits_start = i;
                    while i < chars.len() && (chars[i] == '0' || chars[i] == '1') {
                        i += 1;
                    }
                    if i == bits_start || chars.get(i) != Some(&'>') {
                        let end = (i + 1).min(chars.len());
                        return Err(Diagnostic::expected("malformed basis vector", span(start, end), "`|` bits `>`, e.g. `|01>`"));
                    }
                    let bits: String = chars[bits_start..i].iter().collect();
                    i += 1;
                    TokenKind::Ket(bits)
                }
                c if is_ident_start(c) => {
                    while i < chars.len() && is_ident_char(chars[i]) {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    Keyword::from_word(&word).map_or(TokenKind::Ident(word), TokenKind::Keyword)
                }
                other => {
                    return Err(Diagnostic::new(format!("illegal character `{other}`"), span(start, start + 1)));
                }
            };
            tokens.push(Token { kind, span: span(start, i) });
        }
    }
    Ok(tokens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Angle {
    Degrees(f64),
    Param(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Statement {
    Paths(Vec<String>),
    Param { name: String, degrees: f64 },
    Hwp { angle: Angle, paths: Vec<String> },
    Bd(Vec<(String, String)>),
    Relabel(Vec<(String, String)>),
    Detect { mode: Mode, label: OutcomeLabel },
    Encode { bits: String, mode: Mode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpannedStatement {
    pub statement: Statement,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CircuitAst {
    pub statements: Vec<SpannedStatement>,
}

impl CircuitAst {
    /// Declared parameters and their default values, in declaration order.
    pub fn params(&self) -> Vec<(String, f64)> {
        self.statements
            .iter()
            .filter_map(|s| match &s.statement {
                Statement::Param { name, degrees } => Some((name.clone(), *degrees)),
                _ => None,
            })
            .collect()
    }

    pub fn count(&self, pred: impl Fn(&Statement) -> bool) -> usize {
        self.statements.iter().filter(|s| pred(&s.statement)).count()
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    paths: BTreeSet<String>,
    params: BTreeSet<String>,
    detectors: BTreeSet<(Mode, OutcomeLabel)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    /// Span just past the last token, for errors at end of input.
    fn eof_span(&self) -> SourceSpan {
        self.tokens.last().map_or(SourceSpan::new(1, 1, 1), |t| {
            SourceSpan::new(t.span.line, t.span.column_end + 1, t.span.column_end + 1)
        })
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::expected(format!("unexpected {}", t.kind), t.span, what),
            None => Diagnostic::expected("unexpected end of input", self.eof_span(), what),
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&'a Token, Diagnostic> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.unexpected(&kind.to_string())),
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, SourceSpan), Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(s), span }) => {
                self.pos += 1;
                Ok((s.clone(), *span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn known_path(&mut self, what: &str) -> Result<(String, SourceSpan), Diagnostic> {
        let (name, span) = self.ident(what)?;
        if !self.paths.contains(&name) {
            return Err(Diagnostic::new(format!("undefined path `{name}`"), span));
        }
        Ok((name, span))
    }

    fn pol(&mut self) -> Result<Polarization, Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(s), .. }) if s == "H" || s == "V" => {
                self.pos += 1;
                Ok(if s == "H" { Polarization::H } else { Polarization::V })
            }
            _ => Err(self.unexpected("polarization `H` or `V`")),
        }
    }

    fn mode(&mut self) -> Result<Mode, Diagnostic> {
        let (path, _) = self.known_path("path name")?;
        self.expect(TokenKind::Colon)?;
        Ok(Mode::new(path, self.pol()?))
    }

    fn degrees(&mut self) -> Result<f64, Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Number { value, unit, .. }, span }) => {
                self.pos += 1;
                match unit.as_deref() {
                    Some("deg") => Ok(*value),
                    Some(u) => Err(Diagnostic::expected(format!("unsupported angle unit `{u}`"), *span, "`deg`")),
                    None => Err(Diagnostic::expected("angle without unit", *span, "`deg` suffix, e.g. `22.5deg`")),
                }
            }
            _ => Err(self.unexpected("angle")),
        }
    }

    fn angle(&mut self) -> Result<Angle, Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Number { .. }, .. }) => Ok(Angle::Degrees(self.degrees()?)),
            Some(Token { kind: TokenKind::ParamRef(name), span }) => {
                self.pos += 1;
                if !self.params.contains(name) {
                    return Err(Diagnostic::new(format!("undefined param `${name}`"), *span));
                }
                Ok(Angle::Param(name.clone()))
            }
            Some(t) => Err(Diagnostic::expected("missing angle", t.span, "number with `deg` suffix or `$param`")),
            None => Err(Diagnostic::expected("missing angle", self.eof_span(), "number with `deg` suffix or `$param`")),
        }
    }

    fn index(&mut self) -> Result<usize, Diagnostic> {
        match self.peek() {
            Some(Token { kind: TokenKind::Number { value, unit: None, text }, span })
                if value.fract() == 0.0 && *value >= 0.0 && !text.contains('.') =>
            {
                self.pos += 1;
                Ok(*value as usize)
            }
            _ => Err(self.unexpected("non-negative integer")),
        }
    }

    fn mappings(&mut self, kw: &str) -> Result<Vec<(String, String)>, Diagnostic> {
        let mut map = Vec::new();
        let mut froms = BTreeSet::new();
        let mut tos = BTreeSet::new();
        loop {
            let (from, from_span) = self.known_path("source path")?;
            self.expect(TokenKind::Arrow)?;
            let (to, to_span) = self.ident("target path")?;
            let whole = SourceSpan::new(from_span.line, from_span.column_start, to_span.column_end);
            if kw == "bd" && from == to {
                return Err(Diagnostic::new(format!("displacement must change path (`{from}` -> `{to}`)"), whole));
            }
            if !froms.insert(from.clone()) {
                return Err(Diagnostic::new(format!("{kw} maps `{from}` twice"), from_span));
            }
            if !tos.insert(to.clone()) {
                return Err(Diagnostic::new(format!("{kw} sends two paths to `{to}`"), to_span));
            }
            map.push((from, to));
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        Ok(map)
    }

    fn statement(&mut self) -> Result<SpannedStatement, Diagnostic> {
        let start = self.peek().expect("caller checks for input");
        let kw = match &start.kind {
            TokenKind::Keyword(k) => *k,
            _ => return Err(self.unexpected("statement keyword (paths, param, hwp, bd, relabel, detect, encode)")),
        };
        self.pos += 1;
        let statement = match kw {
            Keyword::Paths => {
                let mut names = Vec::new();
                loop {
                    let (name, span) = self.ident("path name")?;
                    if !self.paths.insert(name.clone()) {
                        return Err(Diagnostic::new(format!("path `{name}` declared twice"), span));
                    }
                    names.push(name);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                if names.len() < 2 {
                    return Err(self.unexpected("`,` and a second path name"));
                }
                Statement::Paths(names)
            }
            Keyword::Param => {
                let (name, span) = self.ident("parameter name")?;
                if self.params.contains(&name) {
                    return Err(Diagnostic::new(format!("param `{name}` defined twice"), span));
                }
                self.expect(TokenKind::Equals)?;
                let degrees = self.degrees()?;
                self.params.insert(name.clone());
                Statement::Param { name, degrees }
            }
            Keyword::Hwp => {
                let angle = self.angle()?;
                self.expect(TokenKind::Keyword(Keyword::On))?;
                let mut paths = Vec::new();
                loop {
                    let (p, span) = self.known_path("path name")?;
                    if paths.contains(&p) {
                        return Err(Diagnostic::new(format!("path `{p}` listed twice"), span));
                    }
                    paths.push(p);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                Statement::Hwp { angle, paths }
            }
            Keyword::Bd => {
                let map = self.mappings("bd")?;
                self.paths.extend(map.iter().map(|(_, t)| t.clone()));
                Statement::Bd(map)
            }
            Keyword::Relabel => {
                let map = self.mappings("relabel")?;
                for (from, _) in &map {
                    self.paths.remove(from);
                }
                self.paths.extend(map.iter().map(|(_, t)| t.clone()));
                Statement::Relabel(map)
            }
            Keyword::Detect => {
                let mode = self.mode()?;
                self.expect(TokenKind::Keyword(Keyword::As))?;
                self.expect(TokenKind::LParen)?;
                let i = self.index()?;
                self.expect(TokenKind::Comma)?;
                let jp = self.index()?;
                let rparen = self.expect(TokenKind::RParen)?.span;
                let label = OutcomeLabel::new(i, jp);
                if !self.detectors.insert((mode.clone(), label)) {
                    let span = SourceSpan::new(start.span.line, start.span.column_start, rparen.column_end);
                    return Err(Diagnostic::new(format!("duplicate detector on {mode} as {label}"), span));
                }
                Statement::Detect { mode, label }
            }
            Keyword::Encode => {
                let bits = match self.peek() {
                    Some(Token { kind: TokenKind::Ket(b), .. }) => {
                        self.pos += 1;
                        b.clone()
                    }
                    _ => return Err(self.unexpected("basis vector such as `|0>`")),
                };
                self.expect(TokenKind::Equals)?;
                Statement::Encode { bits, mode: self.mode()? }
            }
            Keyword::On | Keyword::As => {
                return Err(Diagnostic::expected(
                    format!("`{}` outside a statement", kw.text()),
                    start.span,
                    "statement keyword",
                ))
            }
        };
        let end = self.tokens[self.pos - 1].span;
        let span = if end.line == start.span.line {
            SourceSpan::new(start.span.line, start.span.column_start, end.column_end)
        } else {
            start.span
        };
        Ok(SpannedStatement { statement, span })
    }
}

pub fn parse(tokens: &[Token]) -> Result<CircuitAst, Diagnostic> {
    let mut p = Parser {
        tokens,
        pos: 0,
        paths: BTreeSet::new(),
        params: BTreeSet::new(),
        detectors: BTreeSet::new(),
    };
    let mut statements = Vec::new();
    while p.peek().is_some() {
        statements.push(p.statement()?);
    }
    Ok(CircuitAst { statements })
}

pub fn parse_str(text: &str) -> Result<CircuitAst, Diagnostic> {
    parse(&tokenize(text)?)
}

/// [`lower_with`] using the declared parameter values.
pub fn lower(ast: &CircuitAst) -> Result<OpticalCircuit, Diagnostic> {
    lower_with(ast, &BTreeMap::new())
}

/// Builds the circuit, substituting `overrides` for declared parameters.
pub fn lower_with(ast: &CircuitAst, overrides: &BTreeMap<String, f64>) -> Result<OpticalCircuit, Diagnostic> {
    let first_span = ast.statements.first().map_or(SourceSpan::new(1, 1, 1), |s| s.span);
    let mut params: BTreeMap<String, f64> = BTreeMap::new();
    let mut declared = Vec::new();
    let mut encodes: Vec<(&str, &Mode, SourceSpan)> = Vec::new();
    let mut elements = Vec::new();
    let mut element_spans = Vec::new();
    let mut detectors: Vec<Detector> = Vec::new();
    let mut detector_spans = Vec::new();
    for s in &ast.statements {
        match &s.statement {
            Statement::Paths(names) => declared.extend(names.iter().cloned()),
            Statement::Param { name, degrees } => {
                params.insert(name.clone(), overrides.get(name).copied().unwrap_or(*degrees));
            }
            Statement::Hwp { angle, paths } => {
                let angle_deg = match angle {
                    Angle::Degrees(d) => *d,
                    Angle::Param(name) => *params
                        .get(name)
                        .ok_or_else(|| Diagnostic::new(format!("undefined param `${name}`"), s.span))?,
                };
                elements.push(OpticalElement::Hwp { angle_deg, paths: paths.clone() });
                element_spans.push(s.span);
            }
            Statement::Bd(map) => {
                elements.push(OpticalElement::Bd { map: map.clone() });
                element_spans.push(s.span);
            }
            Statement::Relabel(map) => {
                elements.push(OpticalElement::Relabel { map: map.clone() });
                element_spans.push(s.span);
            }
            Statement::Detect { mode, label } => {
                if let Some(other) = detectors.iter().find(|d| &d.mode == mode) {
                    return Err(Diagnostic::new(
                        format!("label collision: mode {mode} assigned both {} and {label}", other.label),
                        s.span,
                    ));
                }
                detectors.push(Detector { mode: mode.clone(), label: *label });
                detector_spans.push(s.span);
            }
            Statement::Encode { bits, mode } => encodes.push((bits.as_str(), mode, s.span)),
        }
    }
    if let Some(name) = overrides.keys().find(|k| !params.contains_key(*k)) {
        return Err(Diagnostic::new(format!("undefined param `${name}` given as an override"), first_span));
    }
    let Some(&(first_bits, _, first_encode)) = encodes.first() else {
        return Err(Diagnostic::expected("circuit has no encoding", first_span, "`encode |0> = path:H` statements"));
    };
    let width = first_bits.len();
    let n = 1usize.checked_shl(width as u32).filter(|_| width < 16).ok_or_else(|| {
        Diagnostic::new(format!("basis vector `|{first_bits}>` is too wide"), first_encode)
    })?;
    let mut encoding: Vec<Option<Mode>> = vec![None; n];
    for &(bits, mode, span) in &encodes {
        if bits.len() != width {
            return Err(Diagnostic::new(format!("basis vector `|{bits}>` has {} bits, expected {width}", bits.len()), span));
        }
        let k = usize::from_str_radix(bits, 2).expect("tokenizer only admits 0 and 1");
        if encoding[k].is_some() {
            return Err(Diagnostic::new(format!("basis vector `|{bits}>` encoded twice"), span));
        }
        if encoding.iter().flatten().any(|m| m == mode) {
            return Err(Diagnostic::new(format!("mode {mode} encodes two basis vectors"), span));
        }
        encoding[k] = Some(mode.clone());
    }
    if let Some(k) = encoding.iter().position(Option::is_none) {
        return Err(Diagnostic::new(
            format!("encoding misses basis vector `|{k:0width$b}>`"),
            encodes.last().expect("nonempty").2,
        ));
    }
    let encoding: Vec<Mode> = encoding.into_iter().flatten().collect();
    let space = ModeSpace::new(declared).map_err(|e| Diagnostic::new(e.to_string(), first_span))?;
    OpticalCircuit::new(space, encoding, elements.clone(), detectors.clone()).map_err(|e| {
        let span = match &e {
            OpticsError::Collision(path) => elements
                .iter()
                .zip(&element_spans)
                .find(|(el, _)| matches!(el, OpticalElement::Bd { map } if map.iter().any(|(_, t)| t == path)))
                .map(|(_, sp)| *sp),
            OpticsError::DetectorOffSpace(mode) | OpticsError::DuplicateDetector(mode) => detectors
                .iter()
                .zip(&detector_spans)
                .find(|(d, _)| &d.mode == mode)
                .map(|(_, sp)| *sp),
            _ => None,
        };
        let fallback = element_spans.last().or(detector_spans.last()).copied().unwrap_or(first_span);
        let message = match &e {
            OpticsError::Undetected(modes) => format!(
                "uncovered terminal mode{}: {}",
                if modes.len() > 1 { "s" } else { "" },
                modes.iter().map(Mode::to_string).collect::<Vec<_>>().join(", ")
            ),
            other => other.to_string(),
        };
        Diagnostic::new(message, span.unwrap_or(fallback))
    })
}

/// Parses and lowers in one step.
pub fn compile_source(text: &str, overrides: &BTreeMap<String, f64>) -> Result<OpticalCircuit, Diagnostic> {
    lower_with(&parse_str(text)?, overrides)
}

fn join_map(map: &[(String, String)]) -> String {
    map.iter().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>().join(", ")
}

/// Canonical text form; angles print with the shortest round-tripping decimal.
pub fn serialize(circuit: &OpticalCircuit) -> String {
    let mut out = String::new();
    out.push_str(&format!("paths {}\n", circuit.space().paths().join(", ")));
    let n = circuit.encoding().len();
    let width = (usize::BITS - (n.max(2) - 1).leading_zeros()) as usize;
    for (k, m) in circuit.encoding().iter().enumerate() {
        out.push_str(&format!("encode |{k:0width$b}> = {m}\n"));
    }
    for el in circuit.elements() {
        let line = match el {
            OpticalElement::Hwp { angle_deg, paths } => format!("hwp {angle_deg}deg on {}", paths.join(", ")),
            OpticalElement::Bd { map } => format!("bd {}", join_map(map)),
            OpticalElement::Relabel { map } => format!("relabel {}", join_map(map)),
        };
        out.push_str(&line);
        out.push('\n');
    }
    for d in circuit.detectors() {
        out.push_str(&format!("detect {} as ({},{})\n", d.mode, d.label.i, d.label.j_prime));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{build_module_a, build_module_b, build_module_c, BetaConvention};

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn err(text: &str) -> Diagnostic {
        compile_source(text, &BTreeMap::new()).unwrap_err()
    }

    #[test]
    fn tokenizer_examples() {
        assert_eq!(
            kinds("hwp 22.5deg on p0"),
            vec![
                TokenKind::Keyword(Keyword::Hwp),
                TokenKind::Number { value: 22.5, text: "22.5".into(), unit: Some("deg".into()) },
                TokenKind::Keyword(Keyword::On),
                TokenKind::Ident("p0".into()),
            ]
        );
        assert!(kinds("").is_empty());
        assert!(kinds("  # only a comment").is_empty());
        assert_eq!(kinds("hwp $beta on p1")[1], TokenKind::ParamRef("beta".into()));
        assert_eq!(kinds("encode |01> = p0:H")[1], TokenKind::Ket("01".into()));
        assert_eq!(kinds("bd a->b")[2], TokenKind::Arrow);
        let t = tokenize("paths a, b\nhwp 1deg on a ?").unwrap_err();
        assert_eq!(t.span, SourceSpan::new(2, 15, 15));
        assert!(t.message.contains("illegal character"));
    }

    #[test]
    fn parser_examples() {
        let e = parse_str("hwp on p0").unwrap_err();
        assert!(e.message.contains("missing angle"));
        assert_eq!(e.span.line, 1);
        let e = parse_str("paths p0, p1\nbd p0 -> p0").unwrap_err();
        assert!(e.message.contains("displacement must change path"));
        assert_eq!(e.span, SourceSpan::new(2, 4, 11));
        let e = parse_str("paths p0, p1\nhwp 10deg on q").unwrap_err();
        assert!(e.message.contains("undefined path `q`"));
        let e = parse_str("paths p0, p1\nhwp $g on p0").unwrap_err();
        assert!(e.message.contains("undefined param"));
        let e = parse_str("paths p0, p1\ndetect p0:H as (0,0)\ndetect p0:H as (0,0)").unwrap_err();
        assert!(e.message.contains("duplicate detector"));
        assert_eq!(e.span.line, 3);
        let e = parse_str("paths p0, p1\nhwp 10 on p0").unwrap_err();
        assert!(e.hint.as_deref().unwrap().contains("deg"));
        let e = parse_str("paths p0, p1\nhwp 0.3rad on p0").unwrap_err();
        assert!(e.message.contains("unsupported angle unit"));
    }

    #[test]
    fn lowering_errors() {
        let e = err("paths a, b\nencode |0> = a:H\nencode |1> = a:V\ndetect a:H as (0,0)");
        assert!(e.message.contains("a:V"), "{e}");
        let e = err("paths a, b\nencode |0> = a:H\nencode |1> = a:V\ndetect a:H as (0,0)\ndetect a:H as (0,1)");
        assert!(e.message.contains("label collision"));
        assert_eq!(e.span.line, 5);
        let e = err("paths a, b\nencode |0> = a:H\nencode |1> = b:H\nbd a -> b\ndetect b:H as (0,0)");
        assert!(e.message.contains("occupied"));
        assert_eq!(e.span.line, 4);
    }

    #[test]
    fn shipped_style_module_c() {
        let text = serialize(&build_module_c(22.5));
        let ast = parse_str(&text).unwrap();
        assert_eq!(ast.count(|s| matches!(s, Statement::Hwp { .. })), 2);
        assert_eq!(ast.count(|s| matches!(s, Statement::Detect { .. })), 4);
    }

    #[test]
    fn params_and_overrides() {
        let text = "paths m0, m1\nparam g = 10deg\nencode |0> = m1:H\nencode |1> = m1:V\n\
                    bd m1 -> m0\nhwp $g on m0\nhwp $g on m1\nbd m0 -> m0h, m1 -> m1h\n\
                    detect m0h:H as (0,0)\ndetect m0:V as (0,1)\ndetect m1h:H as (1,0)\ndetect m1:V as (1,1)\n";
        assert_eq!(compile_source(text, &BTreeMap::new()).unwrap(), build_module_c(10.0));
        let over = BTreeMap::from([("g".to_string(), 22.5)]);
        assert_eq!(compile_source(text, &over).unwrap(), build_module_c(22.5));
        let bad = BTreeMap::from([("h".to_string(), 1.0)]);
        assert!(compile_source(text, &bad).unwrap_err().message.contains("undefined param"));
    }

    #[test]
    fn builders_round_trip() {
        let circuits = [
            build_module_a(15.0),
            build_module_b(21.0, BetaConvention::Table),
            build_module_b(0.1 + 0.2, BetaConvention::Text),
            build_module_c(std::f64::consts::PI),
        ];
        for c in circuits {
            let text = serialize(&c);
            let back = lower(&parse_str(&text).unwrap()).unwrap();
            assert_eq!(back, c);
            assert_eq!(serialize(&back), text);
        }
    }

    #[test]
    fn parse_is_deterministic() {
        let text = serialize(&build_module_b(30.0, BetaConvention::Table));
        let a = serde_json::to_string(&parse_str(&text).unwrap()).unwrap();
        let b = serde_json::to_string(&parse_str(&text).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
