//! Expressions over one observation `x = (x1, .., xd)`:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | xJ | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Functions: `pow(a, b)`, `exp(a)`, `log(a)` and the indicator
//! `le(a, c)`, which is 1 when `a <= c` and 0 otherwise.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 0-based coordinate.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(j) => x[*j],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => {
                let (base, e) = (a.eval(x), b.eval(x));
                if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
                    base.powi(e as i32)
                } else {
                    base.powf(e)
                }
            }
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
            Expr::Le(a, c) => {
                if a.eval(x) <= c.eval(x) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Number of coordinates the expression needs (largest `j` in `xj`).
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(j) => j + 1,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) => a.arity(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b)
            | Expr::Le(a, b) => a.arity().max(b.arity()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(j) => write!(f, "x{}", j + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
            Expr::Le(a, b) => write!(f, "le({a}, {b})"),
        }
    }
}

impl FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < s.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!("{msg} at column {} in '{}'", self.pos + 1, self.src))
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
                    self.pos += 1;
                }
                // exponent part, e.g. 1e-3
                if self.peek().is_some_and(|c| c == 'e' || c == 'E') {
                    let save = self.pos;
                    self.pos += 1;
                    if self.peek().is_some_and(|c| c == '+' || c == '-') {
                        self.pos += 1;
                    }
                    if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                            self.pos += 1;
                        }
                    } else {
                        self.pos = save;
                    }
                }
                let text = &self.src[start..self.pos];
                text.parse::<f64>().map(Expr::Num).map_err(|_| {
                    self.pos = start;
                    self.error(&format!("bad number '{text}'"))
                })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if let Some(idx) = name
                    .strip_prefix('x')
                    .filter(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
                {
                    let j: usize = idx.parse().map_err(|_| self.error("bad variable index"))?;
                    if j == 0 {
                        self.pos = start;
                        return Err(self.error("variables are numbered from x1"));
                    }
                    return Ok(Expr::Var(j - 1));
                }
                let args = self.call_args(name)?;
                let mut it = args.into_iter().map(Box::new);
                let mut next = || it.next().expect("argument count checked");
                Ok(match name {
                    "exp" => Expr::Exp(next()),
                    "log" => Expr::Log(next()),
                    "pow" => Expr::Pow(next(), next()),
                    "le" => Expr::Le(next(), next()),
                    _ => unreachable!("call_args rejects unknown names"),
                })
            }
            Some(c) => Err(self.error(&format!("unexpected character '{c}'"))),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn call_args(&mut self, name: &str) -> Result<Vec<Expr>> {
        let want = match name {
            "exp" | "log" => 1,
            "pow" | "le" => 2,
            _ => return Err(self.error(&format!("unknown function '{name}'"))),
        };
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        self.expect(')')?;
        if args.len() != want {
            return Err(self.error(&format!("{name} takes {want} argument(s), got {}", args.len())));
        }
        Ok(args)
    }
}
