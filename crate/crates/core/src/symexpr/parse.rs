//! Recursive-descent parser for the nonlinearity grammar.
//!
//! ```text
//! expr := sum
//! sum  := prod (('+'|'-') prod)*
//! prod := unary (('*'|'/') unary)*
//! unary:= '-' unary | pow
//! pow  := atom ('^' unary)?
//! atom := number | 'i' | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::expr::{Expr, Func};
use super::num::Num;
use crate::error::{Error, Result};

/// Identifiers that are reserved and may not be used as parameters.
const RESERVED: &[&str] = &[
    "psi", "cpsi", "t", "i", "rho", "phi", "abs", "exp", "ln", "re", "im", "conj", "sin", "cos",
    "sqrt",
];

/// Function symbols available by default.
pub const DEFAULT_FUNCTION_SYMBOLS: &[&str] = &["f", "theta", "eta0"];

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub n: usize,
    /// Names bound to fixed expressions (e.g. `n`).
    pub constants: BTreeMap<String, Expr>,
    pub function_symbols: BTreeSet<String>,
}

impl ParseOptions {
    pub fn new(n: usize) -> Self {
        let mut constants = BTreeMap::new();
        constants.insert("n".to_string(), Expr::int(n as i64));
        ParseOptions {
            n,
            constants,
            function_symbols: DEFAULT_FUNCTION_SYMBOLS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn with_constant(mut self, name: &str, value: Expr) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }
}

pub fn parse(text: &str, n: usize) -> Result<Expr> {
    parse_with(text, &ParseOptions::new(n))
}

pub fn parse_with(text: &str, opts: &ParseOptions) -> Result<Expr> {
    if opts.n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, opts, len: text.len() };
    let e = p.sum()?;
    if let Some(tok) = p.peek() {
        return Err(Error::Syntax { offset: tok.offset, message: format!("unexpected `{}`", tok.kind) });
    }
    Ok(e)
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Number(String),
    Ident(String),
    Op(char),
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kind::Number(s) | Kind::Ident(s) => write!(f, "{s}"),
            Kind::Op(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k] as char;
        if c.is_ascii_whitespace() {
            k += 1;
        } else if c.is_ascii_digit() || (c == '.' && k + 1 < bytes.len() && (bytes[k + 1] as char).is_ascii_digit()) {
            let start = k;
            while k < bytes.len() && ((bytes[k] as char).is_ascii_digit() || bytes[k] == b'.') {
                k += 1;
            }
            // exponent part, e.g. 1e-3
            if k < bytes.len() && (bytes[k] == b'e' || bytes[k] == b'E') {
                let mut j = k + 1;
                if j < bytes.len() && (bytes[j] == b'-' || bytes[j] == b'+') {
                    j += 1;
                }
                if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    k = j;
                    while k < bytes.len() && (bytes[k] as char).is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            out.push(Token { kind: Kind::Number(text[start..k].to_string()), offset: start });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = k;
            while k < bytes.len() && ((bytes[k] as char).is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            out.push(Token { kind: Kind::Ident(text[start..k].to_string()), offset: start });
        } else if "+-*/^(),".contains(c) {
            out.push(Token { kind: Kind::Op(c), offset: k });
            k += 1;
        } else {
            return Err(Error::Syntax { offset: k, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    opts: &'a ParseOptions,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { kind: Kind::Op(o), .. }) if *o == c)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.len)
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.peek_op(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Syntax { offset: self.offset(), message: format!("expected `{c}`") })
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut terms = vec![self.prod()?];
        loop {
            if self.peek_op('+') {
                self.pos += 1;
                terms.push(self.prod()?);
            } else if self.peek_op('-') {
                self.pos += 1;
                terms.push(-self.prod()?);
            } else {
                break;
            }
        }
        Ok(Expr::sum(terms))
    }

    fn prod(&mut self) -> Result<Expr> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.peek_op('*') {
                self.pos += 1;
                factors.push(self.unary()?);
            } else if self.peek_op('/') {
                self.pos += 1;
                let d = self.unary()?;
                factors.push(match d.as_num().and_then(|n| n.recip()) {
                    Some(inv) => Expr::num(inv),
                    None => d.recip(),
                });
            } else {
                break;
            }
        }
        Ok(Expr::product(factors))
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek_op('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.peek_op('+') {
            self.pos += 1;
            return self.unary();
        }
        self.pow()
    }

    fn pow(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn args(&mut self) -> Result<Vec<Expr>> {
        self.expect_op('(')?;
        let mut args = vec![self.sum()?];
        while self.peek_op(',') {
            self.pos += 1;
            args.push(self.sum()?);
        }
        self.expect_op(')')?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => {
                return Err(Error::Syntax { offset: self.len, message: "unexpected end of input".into() })
            }
        };
        self.pos += 1;
        match tok.kind {
            Kind::Number(s) => Num::parse_decimal(&s)
                .map(Expr::num)
                .ok_or(Error::Syntax { offset: tok.offset, message: format!("bad number `{s}`") }),
            Kind::Op('(') => {
                let e = self.sum()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Kind::Op(c) => Err(Error::Syntax { offset: tok.offset, message: format!("unexpected `{c}`") }),
            Kind::Ident(name) => self.ident(&name, tok.offset),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr> {
        let is_call = self.peek_op('(');
        if is_call {
            let builtin = match name {
                "abs" => Some(Func::Abs),
                "exp" => Some(Func::Exp),
                "ln" => Some(Func::Ln),
                "re" => Some(Func::Re),
                "im" => Some(Func::Im),
                "conj" => Some(Func::Conj),
                "sin" => Some(Func::Sin),
                "cos" => Some(Func::Cos),
                _ => None,
            };
            if let Some(func) = builtin {
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(Error::Arity { name: name.into(), expected: 1, found: args.len() });
                }
                let arg = args.into_iter().next().unwrap();
                return Ok(if func == Func::Conj { super::conjugate(&arg) } else { Expr::call(func, arg) });
            }
            if name == "sqrt" {
                let args = self.args()?;
                if args.len() != 1 {
                    return Err(Error::Arity { name: name.into(), expected: 1, found: args.len() });
                }
                return Ok(args.into_iter().next().unwrap().sqrt());
            }
            if self.opts.function_symbols.contains(name) {
                let args = self.args()?;
                return Ok(Expr::apply(name, args));
            }
            return Err(Error::UnknownSymbol { name: name.into(), offset });
        }
        match name {
            "psi" => return Ok(Expr::psi()),
            "cpsi" => return Ok(Expr::cpsi()),
            "t" => return Ok(Expr::t()),
            "i" => return Ok(Expr::i()),
            "rho" => return Ok(Expr::rho()),
            "phi" => return Ok(Expr::phi()),
            _ => {}
        }
        if let Some(v) = self.opts.constants.get(name) {
            return Ok(v.clone());
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()) {
                let index: usize = rest.parse().map_err(|_| Error::UnknownSymbol { name: name.into(), offset })?;
                if index == 0 || index > self.opts.n {
                    return Err(Error::IndexOutOfRange { index, n: self.opts.n });
                }
                return Ok(Expr::x(index));
            }
        }
        if RESERVED.contains(&name) || self.opts.function_symbols.contains(name) {
            return Err(Error::UnknownSymbol { name: name.into(), offset });
        }
        Ok(Expr::param(name))
    }
}
