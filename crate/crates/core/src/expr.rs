//! A small expression language for scalar functions of one variable.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := number | 'x' | func '(' args ')' | '(' expr ')'
//! func    := abs | exp | log | sqrt | sin | cos | pow
//! ```
//!
//! `-x^2` parses as `-(x^2)` and `2^-1` as `2^(-1)`. There is no implicit
//! multiplication. Kernels use the same grammar with `x` standing for `t`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default relative step for [`numeric_derivative`].
pub const DEFAULT_DERIVATIVE_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var => f.write_str("x"),
            Node::Neg(inner) => write!(f, "(-{inner})"),
            Node::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A parsed scalar function of `x`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self> {
        parse(source)
    }

    pub fn constant(c: f64) -> Self {
        Expression {
            root: Node::Const(c),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        eval_node(&self.root, x)
    }

    /// True when the tree contains no reference to `x`.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Const(_) => true,
                Node::Var => false,
                Node::Neg(a) => walk(a),
                Node::Binary(_, l, r) => walk(l) && walk(r),
                Node::Call(_, args) => args.iter().all(walk),
            }
        }
        walk(&self.root)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

pub fn parse(source: &str) -> Result<Expression> {
    let tokens = tokenize(source)?;
    if tokens.is_empty() {
        return Err(Error::Syntax {
            pos: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: source.len(),
    };
    let root = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(Error::Syntax {
            pos: tok.pos,
            message: format!("unexpected {}", tok.kind.describe()),
        });
    }
    Ok(Expression { root })
}

pub fn evaluate(e: &Expression, x: f64) -> Result<f64> {
    e.eval(x)
}

/// Central difference `(e(x+h) - e(x-h)) / 2h` with `h = scale * max(1, |x|)`.
pub fn numeric_derivative(e: &Expression, x: f64, scale: f64) -> Result<f64> {
    let h = scale * x.abs().max(1.0);
    let hi = e.eval(x + h)?;
    let lo = e.eval(x - h)?;
    Ok((hi - lo) / (2.0 * h))
}

fn domain(node: &Node, x: f64) -> Error {
    Error::Domain {
        expr: node.to_string(),
        x,
    }
}

fn checked_pow(base: f64, exp: f64) -> Option<f64> {
    if base < 0.0 && exp.fract() != 0.0 {
        return None;
    }
    if base == 0.0 && exp < 0.0 {
        return None;
    }
    Some(base.powf(exp))
}

fn eval_node(node: &Node, x: f64) -> Result<f64> {
    let value = match node {
        Node::Const(c) => *c,
        Node::Var => x,
        Node::Neg(inner) => -eval_node(inner, x)?,
        Node::Binary(op, l, r) => {
            let lv = eval_node(l, x)?;
            let rv = eval_node(r, x)?;
            match op {
                BinOp::Add => lv + rv,
                BinOp::Sub => lv - rv,
                BinOp::Mul => lv * rv,
                BinOp::Div => {
                    if rv == 0.0 {
                        return Err(domain(node, x));
                    }
                    lv / rv
                }
                BinOp::Pow => checked_pow(lv, rv).ok_or_else(|| domain(node, x))?,
            }
        }
        Node::Call(func, args) => {
            let a = eval_node(&args[0], x)?;
            match func {
                Func::Abs => a.abs(),
                Func::Exp => a.exp(),
                Func::Log => {
                    if a <= 0.0 {
                        return Err(domain(node, x));
                    }
                    a.ln()
                }
                Func::Sqrt => {
                    if a < 0.0 {
                        return Err(domain(node, x));
                    }
                    a.sqrt()
                }
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Pow => {
                    let b = eval_node(&args[1], x)?;
                    checked_pow(a, b).ok_or_else(|| domain(node, x))?
                }
            }
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(domain(node, x))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Op(c) => format!("operator `{c}`"),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    pos: start,
                    message: format!("malformed number `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(Error::Syntax {
                        pos: start,
                        message: format!("number `{text}` out of range"),
                    });
                }
                out.push(Token {
                    kind: TokenKind::Number(value),
                    pos: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push(Token {
                    kind: TokenKind::Op(c as char),
                    pos: i,
                });
                i += 1;
            }
            b'(' | b')' | b',' => {
                let kind = match c {
                    b'(' => TokenKind::LParen,
                    b')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                out.push(Token { kind, pos: i });
                i += 1;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn eof_error(&self, expected: &str) -> Error {
        Error::Syntax {
            pos: self.end,
            message: format!("unexpected end of input, expected {expected}"),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<()> {
        match self.next() {
            Some(tok) if tok.kind == kind => Ok(()),
            Some(tok) => Err(Error::Syntax {
                pos: tok.pos,
                message: format!("expected {expected}, found {}", tok.kind.describe()),
            }),
            None => Err(self.eof_error(expected)),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Node::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let tok = self.next().ok_or_else(|| self.eof_error("an operand"))?;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Const(v)),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if name == "x" {
                    return Ok(Node::Var);
                }
                let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier {
                    name: name.clone(),
                    pos: tok.pos,
                })?;
                self.expect(TokenKind::LParen, &format!("`(` after `{name}`"))?;
                let mut args = vec![self.expr()?];
                while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                let close_pos = self.peek().map_or(self.end, |t| t.pos);
                self.expect(TokenKind::RParen, "`)`")?;
                if args.len() != func.arity() {
                    return Err(Error::Syntax {
                        pos: close_pos,
                        message: format!(
                            "`{name}` takes {} argument(s), got {}",
                            func.arity(),
                            args.len()
                        ),
                    });
                }
                Ok(Node::Call(func, args))
            }
            other => Err(Error::Syntax {
                pos: tok.pos,
                message: format!("expected an operand, found {}", other.describe()),
            }),
        }
    }
}
