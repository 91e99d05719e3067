//! Tokenizer and untyped syntax tree for run configuration files.
//!
//! ```text
//! # comment
//! model = bose_hubbard { J = 1.0, U = 100.0, n_max = 3 }
//! state = [ seg(n = 0, l = 8), seg(n = 2, l = 4, defect = momentum(pi/2, hole)) ]
//! engine = tebd
//! ```
//!
//! Numbers are arithmetic expressions over literals, `pi` and `inf` with
//! `+ - * /` and parentheses. Commas between fields are optional.

use std::f64::consts::PI;

use crate::error::ValidationIssue;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
}

fn issue(line: usize, message: impl Into<String>) -> ValidationIssue {
    ValidationIssue { line, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ValidationIssue> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() {
                    let ch = chars[i];
                    let dash_word = ch == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic());
                    if ch.is_ascii_alphanumeric() || ch == '_' || dash_word {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line });
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())) {
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
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<f64>().map_err(|_| issue(line, format!("malformed number '{s}'")))?;
                out.push(Token { tok: Tok::Num(v), line });
                continue;
            }
            if c == '"' {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i] != '"' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(issue(line, "unterminated string"));
                }
                out.push(Token { tok: Tok::Str(chars[start..i].iter().collect()), line });
                i += 1;
                continue;
            }
            if "={}[](),+-*/".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line });
                i += 1;
                continue;
            }
            return Err(issue(line, format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub(crate) enum NodeKind {
    Num(f64),
    Str(String),
    Ident(String),
    Call(String, Vec<Arg>),
    Block(Option<String>, Vec<Field>),
    List(Vec<Node>),
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub line: usize,
    pub kind: NodeKind,
}

#[derive(Clone, Debug)]
pub(crate) struct Field {
    pub name: String,
    pub value: Node,
    pub line: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Arg {
    pub name: Option<String>,
    pub value: Node,
}

impl Node {
    pub fn describe(&self) -> &'static str {
        match self.kind {
            NodeKind::Num(_) => "a number",
            NodeKind::Str(_) => "a string",
            NodeKind::Ident(_) => "a name",
            NodeKind::Call(..) => "a call",
            NodeKind::Block(..) => "a block",
            NodeKind::List(_) => "a list",
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    last_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.line).unwrap_or(self.last_line)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ValidationIssue> {
        if self.is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(issue(self.line(), format!("expected '{c}'{}", self.found())))
        }
    }

    fn found(&self) -> String {
        match self.peek() {
            None => " at end of input".into(),
            Some(Tok::Ident(s)) => format!(", found '{s}'"),
            Some(Tok::Num(v)) => format!(", found {v}"),
            Some(Tok::Str(s)) => format!(", found \"{s}\""),
            Some(Tok::Sym(c)) => format!(", found '{c}'"),
        }
    }

    fn ident(&mut self) -> Result<(String, usize), ValidationIssue> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                let line = self.line();
                self.pos += 1;
                Ok((s, line))
            }
            _ => Err(issue(self.line(), format!("expected a name{}", self.found()))),
        }
    }

    fn value(&mut self) -> Result<Node, ValidationIssue> {
        let line = self.line();
        match self.peek().cloned() {
            Some(Tok::Sym('[')) => {
                self.pos += 1;
                let mut items = Vec::new();
                while !self.is_sym(']') {
                    if self.peek().is_none() {
                        return Err(issue(line, "unterminated list"));
                    }
                    items.push(self.value()?);
                    if self.is_sym(',') {
                        self.pos += 1;
                    } else if !self.is_sym(']') {
                        return Err(issue(self.line(), format!("expected ',' or ']'{}", self.found())));
                    }
                }
                self.pos += 1;
                Ok(Node { line, kind: NodeKind::List(items) })
            }
            Some(Tok::Sym('{')) => {
                let fields = self.block_body()?;
                Ok(Node { line, kind: NodeKind::Block(None, fields) })
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Node { line, kind: NodeKind::Str(s) })
            }
            Some(Tok::Ident(name)) if name != "pi" && name != "inf" => {
                self.pos += 1;
                if self.is_sym('{') {
                    let fields = self.block_body()?;
                    Ok(Node { line, kind: NodeKind::Block(Some(name), fields) })
                } else if self.is_sym('(') {
                    let args = self.call_args()?;
                    Ok(Node { line, kind: NodeKind::Call(name, args) })
                } else {
                    Ok(Node { line, kind: NodeKind::Ident(name) })
                }
            }
            _ => {
                let v = self.expr()?;
                Ok(Node { line, kind: NodeKind::Num(v) })
            }
        }
    }

    fn block_body(&mut self) -> Result<Vec<Field>, ValidationIssue> {
        let open = self.line();
        self.expect_sym('{')?;
        let mut fields = Vec::new();
        loop {
            if self.is_sym('}') {
                self.pos += 1;
                return Ok(fields);
            }
            if self.peek().is_none() {
                return Err(issue(open, "unterminated block"));
            }
            let (name, line) = self.ident()?;
            self.expect_sym('=')?;
            let value = self.value()?;
            fields.push(Field { name, value, line });
            if self.is_sym(',') {
                self.pos += 1;
            }
        }
    }

    fn call_args(&mut self) -> Result<Vec<Arg>, ValidationIssue> {
        self.expect_sym('(')?;
        let mut args = Vec::new();
        while !self.is_sym(')') {
            if self.peek().is_none() {
                return Err(issue(self.last_line, "unterminated argument list"));
            }
            let named = matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::Sym('='));
            let name = if named {
                let (n, _) = self.ident()?;
                self.pos += 1;
                Some(n)
            } else {
                None
            };
            args.push(Arg { name, value: self.value()? });
            if self.is_sym(',') {
                self.pos += 1;
            } else if !self.is_sym(')') {
                return Err(issue(self.line(), format!("expected ',' or ')'{}", self.found())));
            }
        }
        self.pos += 1;
        Ok(args)
    }

    fn expr(&mut self) -> Result<f64, ValidationIssue> {
        let mut v = self.term()?;
        loop {
            if self.is_sym('+') {
                self.pos += 1;
                v += self.term()?;
            } else if self.is_sym('-') {
                self.pos += 1;
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, ValidationIssue> {
        let mut v = self.unary()?;
        loop {
            if self.is_sym('*') {
                self.pos += 1;
                v *= self.unary()?;
            } else if self.is_sym('/') {
                self.pos += 1;
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ValidationIssue> {
        if self.is_sym('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.is_sym('+') {
            self.pos += 1;
            return self.unary();
        }
        let line = self.line();
        match self.next().map(|t| t.tok) {
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Ident(s)) if s == "pi" => Ok(PI),
            Some(Tok::Ident(s)) if s == "inf" => Ok(f64::INFINITY),
            Some(Tok::Sym('(')) => {
                let v = self.expr()?;
                self.expect_sym(')')?;
                Ok(v)
            }
            _ => {
                self.pos -= 1;
                Err(issue(line, format!("expected a value{}", self.found())))
            }
        }
    }

    /// Skip to the next `name =` that starts a line.
    fn recover(&mut self, from_line: usize) {
        while let Some(t) = self.toks.get(self.pos) {
            if t.line > from_line
                && matches!(t.tok, Tok::Ident(_))
                && self.peek_at(1) == Some(&Tok::Sym('='))
                && self.toks[self.pos - 1].line < t.line
            {
                return;
            }
            self.pos += 1;
        }
    }
}

/// Parse the top-level `name = value` statements. Syntax errors are collected
/// per statement; parsing resumes at the next statement.
pub(crate) fn parse_statements(text: &str) -> Result<Vec<Field>, Vec<ValidationIssue>> {
    let toks = tokenize(text).map_err(|e| vec![e])?;
    let last_line = toks.last().map(|t| t.line).unwrap_or(1);
    let mut p = Parser { toks, pos: 0, last_line };
    let mut out = Vec::new();
    let mut issues = Vec::new();
    while p.peek().is_some() {
        let start = p.line();
        let stmt = (|| {
            let (name, line) = p.ident()?;
            p.expect_sym('=')?;
            let value = p.value()?;
            Ok(Field { name, value, line })
        })();
        match stmt {
            Ok(f) => out.push(f),
            Err(e) => {
                issues.push(e);
                p.recover(start);
            }
        }
    }
    if issues.is_empty() {
        Ok(out)
    } else {
        Err(issues)
    }
}

/// Evaluate a standalone arithmetic expression such as `13*pi/16`.
pub fn parse_number(text: &str) -> crate::error::Result<f64> {
    let bad = |m: String| crate::error::Error::Domain(format!("cannot read '{text}' as a number: {m}"));
    let toks = tokenize(text).map_err(|e| bad(e.message))?;
    let mut p = Parser { toks, pos: 0, last_line: 1 };
    let v = p.expr().map_err(|e| bad(e.message))?;
    if p.peek().is_some() {
        return Err(bad("trailing input".into()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(text: &str) -> Node {
        let mut s = parse_statements(text).unwrap();
        assert_eq!(s.len(), 1);
        s.remove(0).value
    }

    #[test]
    fn standalone_numbers() {
        assert!((parse_number("-9*pi/16").unwrap() + 9.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(parse_number("2.5e-1").unwrap(), 0.25);
        assert!(parse_number("1 2").is_err());
        assert!(parse_number("pie").is_err());
    }

    #[test]
    fn arithmetic() {
        let NodeKind::Num(v) = single("x = -13*pi/16 + (1 - 2) * 0").kind else { panic!() };
        assert!((v + 13.0 * PI / 16.0).abs() < 1e-15);
        let NodeKind::Num(v) = single("x = 1e-10").kind else { panic!() };
        assert_eq!(v, 1e-10);
        let NodeKind::Num(v) = single("x = inf").kind else { panic!() };
        assert!(v.is_infinite());
    }

    #[test]
    fn nested_values() {
        let n = single("state = [seg(n = 2, l = 8, defect = localized(4, hole)), seg(n=0,l=3),]");
        let NodeKind::List(items) = n.kind else { panic!() };
        assert_eq!(items.len(), 2);
        let NodeKind::Call(name, args) = &items[0].kind else { panic!() };
        assert_eq!(name, "seg");
        assert_eq!(args[2].name.as_deref(), Some("defect"));
    }

    #[test]
    fn dashed_names_and_blocks() {
        let s = parse_statements("engine = two-body-ed\nmodel = wall {\n  alpha = [0.5]\n  points = 8\n}\n").unwrap();
        assert!(matches!(&s[0].value.kind, NodeKind::Ident(n) if n == "two-body-ed"));
        let NodeKind::Block(Some(name), fields) = &s[1].value.kind else { panic!() };
        assert_eq!(name, "wall");
        assert_eq!(fields[1].line, 4);
    }

    #[test]
    fn syntax_errors_carry_lines_and_recover() {
        let e = parse_statements("a = 1\nb = (2\nc = ]\nd = 4\n").unwrap_err();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].line, 3);
        assert_eq!(e[1].line, 3);
        let e = parse_statements("a = $").unwrap_err();
        assert_eq!(e[0].line, 1);
    }
}
