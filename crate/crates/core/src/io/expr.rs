//! Arithmetic expressions in `x, y, z, t` with `+ − * / ^`, `sin`, `cos`,
//! `exp`, `log` and the constant `pi`, plus symbolic differentiation so that
//! expression fields carry exact gradients.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Mat3, Vec3, VectorField};
use crate::mesh::Point;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// 0..=3 for `x, y, z, t`.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

const VARS: [&str; 4] = ["x", "y", "z", "t"];

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { src, tokens, pos: 0 };
        let e = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(p.error(tok.col, "unexpected trailing input"));
        }
        Ok(e)
    }

    /// Value at `v = [x, y, z, t]`.
    pub fn eval(&self, v: &[f64; 4]) -> f64 {
        use Expr::*;
        match self {
            Num(c) => *c,
            Var(i) => v[*i],
            Neg(a) => -a.eval(v),
            Add(a, b) => a.eval(v) + b.eval(v),
            Sub(a, b) => a.eval(v) - b.eval(v),
            Mul(a, b) => a.eval(v) * b.eval(v),
            Div(a, b) => a.eval(v) / b.eval(v),
            Pow(a, b) => pow(a.eval(v), b.eval(v)),
            Sin(a) => a.eval(v).sin(),
            Cos(a) => a.eval(v).cos(),
            Exp(a) => a.eval(v).exp(),
            Log(a) => a.eval(v).ln(),
        }
    }

    fn depends_on(&self, var: usize) -> bool {
        use Expr::*;
        match self {
            Num(_) => false,
            Var(i) => *i == var,
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Log(a) => a.depends_on(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on(var) || b.depends_on(var),
        }
    }

    /// `∂/∂var`, lightly simplified.
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        if !self.depends_on(var) {
            return Num(0.0);
        }
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.derivative(var)),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
            Div(a, b) => div(
                sub(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
                mul((**b).clone(), (**b).clone()),
            ),
            Pow(a, b) if !b.depends_on(var) => mul(
                mul((**b).clone(), pow_e((**a).clone(), sub((**b).clone(), Num(1.0)))),
                a.derivative(var),
            ),
            // a^b (b′ log a + b a′ / a)
            Pow(a, b) => mul(
                self.clone(),
                add(
                    mul(b.derivative(var), Log(a.clone())),
                    div(mul((**b).clone(), a.derivative(var)), (**a).clone()),
                ),
            ),
            Sin(a) => mul(Cos(a.clone()), a.derivative(var)),
            Cos(a) => neg(mul(Sin(a.clone()), a.derivative(var))),
            Exp(a) => mul(self.clone(), a.derivative(var)),
            Log(a) => div(a.derivative(var), (**a).clone()),
        }
    }
}

// Integer exponents use powi so that (−x)^2 stays defined.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn is_num(e: &Expr, c: f64) -> bool {
    matches!(e, Expr::Num(v) if *v == c)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        _ if is_num(&a, 0.0) => b,
        _ if is_num(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        _ if is_num(&b, 0.0) => a,
        _ if is_num(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        _ if is_num(&a, 0.0) || is_num(&b, 0.0) => Expr::Num(0.0),
        _ if is_num(&a, 1.0) => b,
        _ if is_num(&b, 1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_num(&a, 0.0) {
        return Expr::Num(0.0);
    }
    if is_num(&b, 1.0) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow_e(a: Expr, b: Expr) -> Expr {
    if is_num(&b, 1.0) {
        return a;
    }
    if is_num(&b, 0.0) {
        return Expr::Num(1.0);
    }
    Expr::Pow(Box::new(a), Box::new(b))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Num(c) => write!(f, "{c}"),
            Var(i) => write!(f, "{}", VARS[*i]),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Log(a) => write!(f, "log({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
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
            let s: String = chars[start..i].iter().collect();
            let v = s
                .parse()
                .map_err(|_| Error::Config(format!("expression `{src}`: bad number `{s}` at column {col}")))?;
            out.push(Token { tok: Tok::Num(v), col });
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Op(c), col });
            i += 1;
        } else {
            return Err(Error::Config(format!("expression `{src}`: unexpected `{c}` at column {col}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, col: usize, msg: &str) -> Error {
        Error::Config(format!("expression `{}`: {msg} at column {col}", self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            let col = self.tokens.get(self.pos).map_or(self.src.chars().count() + 1, |t| t.col);
            Err(self.error(col, &format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error(self.src.chars().count() + 1, "unexpected end of input"));
        };
        self.pos += 1;
        match tok.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(i) = VARS.iter().position(|v| *v == name) {
                    return Ok(Expr::Var(i));
                }
                if name == "pi" {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                let f: fn(Box<Expr>) -> Expr = match name.as_str() {
                    "sin" => Expr::Sin,
                    "cos" => Expr::Cos,
                    "exp" => Expr::Exp,
                    "log" => Expr::Log,
                    _ => return Err(self.error(tok.col, &format!("unknown name `{name}`"))),
                };
                self.expect('(')?;
                let arg = self.expr()?;
                self.expect(')')?;
                Ok(f(Box::new(arg)))
            }
            Tok::Op(c) => Err(self.error(tok.col, &format!("unexpected `{c}`"))),
        }
    }
}

/// Vector field given by one expression per component, with symbolic
/// spatial gradient.
#[derive(Debug, Clone)]
pub struct ExprField {
    components: Vec<Expr>,
    gradient: Vec<Vec<Expr>>,
}

impl ExprField {
    /// One expression per spatial component (2 or 3).
    pub fn parse(components: &[impl AsRef<str>]) -> Result<Self> {
        if !(2..=3).contains(&components.len()) {
            return Err(Error::Config(format!(
                "vector field needs 2 or 3 components, got {}",
                components.len()
            )));
        }
        let components: Vec<Expr> = components.iter().map(|s| Expr::parse(s.as_ref())).collect::<Result<_>>()?;
        let dim = components.len();
        let gradient = components
            .iter()
            .map(|c| (0..dim).map(|i| c.derivative(i)).collect())
            .collect();
        Ok(Self { components, gradient })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn into_shared(self) -> Arc<dyn VectorField> {
        Arc::new(self)
    }
}

impl VectorField for ExprField {
    fn value(&self, x: &Point, t: f64) -> Vec3 {
        let v = [x[0], x[1], x[2], t];
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(&v);
        }
        out
    }

    fn gradient(&self, x: &Point, t: f64) -> Option<Mat3> {
        let v = [x[0], x[1], x[2], t];
        let mut g = [[0.0; 3]; 3];
        for (row, exprs) in g.iter_mut().zip(&self.gradient) {
            for (gi, e) in row.iter_mut().zip(exprs) {
                *gi = e.eval(&v);
            }
        }
        Some(g)
    }
}
