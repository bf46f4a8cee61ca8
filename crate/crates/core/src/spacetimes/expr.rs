//! Arithmetic expressions used for metric components and domain constraints.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" unary)?
//! primary := number | ident | func "(" expr ")" | "(" expr ")"
//! func    := sin | cos | tan | exp | log | sqrt | sinh | cosh
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so `-r^2` is
//! `-(r^2)` and `a^b^c` is `a^(b^c)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Position, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => ATOM_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    /// Free identifiers, in first-occurrence order.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Num(_) => {}
                Expr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                Expr::Neg(a) | Expr::Call(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Evaluates with identifier values supplied by `env`.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name) => {
                env(name).ok_or_else(|| Error::Eval(format!("unbound identifier `{name}`")))?
            }
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Binary(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(env)?),
        })
    }

    /// Replaces identifiers by coordinate slots or parameter constants.
    pub fn resolve(
        &self,
        coordinates: &[String; 4],
        params: &BTreeMap<String, f64>,
    ) -> Result<Resolved> {
        Ok(match self {
            Expr::Num(v) => Resolved::Const(*v),
            Expr::Var(name) => {
                if let Some(i) = coordinates.iter().position(|c| c == name) {
                    Resolved::Coord(i)
                } else if let Some(v) = params.get(name) {
                    Resolved::Const(*v)
                } else {
                    return Err(Error::Eval(format!("unknown identifier `{name}`")));
                }
            }
            Expr::Neg(a) => Resolved::Neg(Box::new(a.resolve(coordinates, params)?)),
            Expr::Binary(op, a, b) => Resolved::Binary(
                *op,
                Box::new(a.resolve(coordinates, params)?),
                Box::new(b.resolve(coordinates, params)?),
            ),
            Expr::Call(f, a) => Resolved::Call(*f, Box::new(a.resolve(coordinates, params)?)),
        })
    }
}

/// An expression bound to a chart: identifiers are coordinate slots.
#[derive(Debug, Clone, PartialEq)]
pub enum Resolved {
    Const(f64),
    Coord(usize),
    Neg(Box<Resolved>),
    Binary(BinOp, Box<Resolved>, Box<Resolved>),
    Call(Func, Box<Resolved>),
}

impl Resolved {
    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        match self {
            Resolved::Const(v) => *v,
            Resolved::Coord(i) => x[*i],
            Resolved::Neg(a) => -a.eval(x),
            Resolved::Binary(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Resolved::Call(f, a) => f.apply(a.eval(x)),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => write!(f, "({v})"),
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < NEG_PRECEDENCE)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    write_child(f, a, a.precedence() <= p)?;
                    f.write_str("^")?;
                    write_child(f, b, b.precedence() < NEG_PRECEDENCE)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    write!(f, " {} ", op.symbol())?;
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexed {
    tok: Tok,
    /// Column of the first character (1-based, relative to the line).
    column: usize,
}

fn lex(src: &str, line: usize, column0: usize) -> Result<Vec<Lexed>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = column0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let v = text.parse::<f64>().map_err(|_| Error::Parse {
                position: Position { line, column },
                expected: vec!["number".to_string()],
            })?;
            out.push(Lexed {
                tok: Tok::Num(v),
                column,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Lexed {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Lexed {
                tok: Tok::Sym(c),
                column,
            });
            i += 1;
        } else {
            return Err(Error::Parse {
                position: Position { line, column },
                expected: vec!["operator, number, identifier or parenthesis".to_string()],
            });
        }
    }
    out.push(Lexed {
        tok: Tok::End,
        column: column0 + chars.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    line: usize,
}

const OPERAND: [&str; 4] = ["number", "identifier", "`(`", "`-`"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error(&self, expected: &[&str]) -> Error {
        Error::Parse {
            position: Position {
                line: self.line,
                column: self.toks[self.pos].column,
            },
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            let want = format!("`{c}`");
            Err(self.error(&[want.as_str()]))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if *self.peek() == Tok::Sym('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match Func::from_name(&name) {
                    Some(func) => {
                        self.expect_sym('(')?;
                        let arg = self.expr()?;
                        self.expect_sym(')')?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Ok(Expr::Var(name)),
                }
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            _ => Err(self.error(&OPERAND)),
        }
    }
}

/// Parses `src`, reporting positions as if it started at (`line`, `column`).
pub fn parse_at(src: &str, line: usize, column: usize) -> Result<Expr> {
    let toks = lex(src, line, column)?;
    let mut p = Parser { toks, pos: 0, line };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    parse_at(src, 1, 1)
}
