//! Coefficient expressions in the single variable `t`.
//!
//! The grammar, from loosest to tightest binding:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          (right associative)
//! primary := number | 't' | func '(' sum ')' | '(' sum ')'
//! func    := sin | cos | tan | exp | ln | sqrt | sinh | cosh | tanh | abs
//! ```
//!
//! so `-2^2` is `-(2^2)` and `2^3^2` is `2^(3^2)`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::fmt;

/// Location of a token inside the expression text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SourcePos {
    /// Byte offset.
    pub offset: usize,
    /// One-based character column.
    pub column: usize,
}

impl SourcePos {
    fn at(src: &str, offset: usize) -> Self {
        let offset = offset.min(src.len());
        let column = src[..offset].chars().count() + 1;
        SourcePos { offset, column }
    }
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}", self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Sinh,
    Cosh,
    Tanh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => libm::sin(x),
            Func::Cos => libm::cos(x),
            Func::Tan => libm::tan(x),
            Func::Exp => libm::exp(x),
            Func::Ln => libm::log(x),
            Func::Sqrt => libm::sqrt(x),
            Func::Sinh => libm::sinh(x),
            Func::Cosh => libm::cosh(x),
            Func::Tanh => libm::tanh(x),
            Func::Abs => libm::fabs(x),
        }
    }
}

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

#[derive(Debug, Clone)]
pub enum Node {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// A parsed coefficient expression.
///
/// Equality is structural: constants compare bit for bit and source
/// positions are ignored.
#[derive(Debug, Clone)]
pub struct Expr {
    node: Node,
    pos: SourcePos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.node, &other.node) {
            (Node::Const(x), Node::Const(y)) => x.to_bits() == y.to_bits(),
            (Node::Var, Node::Var) => true,
            (Node::Neg(x), Node::Neg(y)) => x == y,
            (Node::Binary(o1, l1, r1), Node::Binary(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (Node::Call(f1, x1), Node::Call(f2, x2)) => f1 == f2 && x1 == x2,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    InvalidNumber,
    UnknownIdentifier(String),
    /// A token other than the one the grammar requires; carries a short
    /// description of what was expected.
    Expected(&'static str),
    UnbalancedParen,
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at {pos}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub pos: SourcePos,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Empty => f.write_str("empty expression"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::InvalidNumber => f.write_str("invalid number"),
            ParseErrorKind::UnknownIdentifier(name) => write!(f, "unknown identifier `{name}`"),
            ParseErrorKind::Expected(what) => write!(f, "expected {what}"),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parenthesis"),
            ParseErrorKind::TrailingInput => f.write_str("unexpected trailing input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    /// Any other operation that produced an infinity or NaN.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("{} at {pos} (t = {t})", kind_text(*kind))]
pub struct DomainError {
    pub kind: DomainErrorKind,
    pub pos: SourcePos,
    pub t: f64,
}

fn kind_text(kind: DomainErrorKind) -> &'static str {
    match kind {
        DomainErrorKind::DivisionByZero => "division by zero",
        DomainErrorKind::LogOfNonPositive => "logarithm of a non-positive number",
        DomainErrorKind::SqrtOfNegative => "square root of a negative number",
        DomainErrorKind::NonFinite => "non-finite value",
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn pos(&self) -> SourcePos {
        self.pos
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            node: Node::Const(value),
            pos: SourcePos::default(),
        }
    }

    /// True when the tree does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match &self.node {
            Node::Const(_) => true,
            Node::Var => false,
            Node::Neg(x) | Node::Call(_, x) => x.is_constant(),
            Node::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, DomainError> {
        let fail = |kind| DomainError {
            kind,
            pos: self.pos,
            t,
        };
        let value = match &self.node {
            Node::Const(c) => *c,
            Node::Var => t,
            Node::Neg(x) => -x.eval(t)?,
            Node::Binary(op, l, r) => {
                let l = l.eval(t)?;
                let r = r.eval(t)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(fail(DomainErrorKind::DivisionByZero));
                        }
                        l / r
                    }
                    BinOp::Pow => libm::pow(l, r),
                }
            }
            Node::Call(func, x) => {
                let x = x.eval(t)?;
                match func {
                    Func::Ln if x <= 0.0 => return Err(fail(DomainErrorKind::LogOfNonPositive)),
                    Func::Sqrt if x < 0.0 => return Err(fail(DomainErrorKind::SqrtOfNegative)),
                    _ => func.apply(x),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(fail(DomainErrorKind::NonFinite))
        }
    }
}

/// Prints a fully parenthesised form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            // Debug gives the shortest representation that round-trips.
            Node::Const(c) => write!(f, "{c:?}"),
            Node::Var => f.write_str("t"),
            Node::Neg(x) => write!(f, "(-{x})"),
            Node::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Node::Call(func, x) => write!(f, "{}({x})", func.name()),
        }
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
}

impl<'a> Lexer<'a> {
    fn error(&self, kind: ParseErrorKind, offset: usize) -> ParseError {
        ParseError {
            kind,
            pos: SourcePos::at(self.src, offset),
        }
    }

    fn next_token(&mut self) -> Result<(Tok<'a>, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.offset < bytes.len() && bytes[self.offset].is_ascii_whitespace() {
            self.offset += 1;
        }
        let start = self.offset;
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            self.offset += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut exp = end + 1;
                if exp < bytes.len() && (bytes[exp] == b'+' || bytes[exp] == b'-') {
                    exp += 1;
                }
                if exp < bytes.len() && bytes[exp].is_ascii_digit() {
                    while exp < bytes.len() && bytes[exp].is_ascii_digit() {
                        exp += 1;
                    }
                    end = exp;
                }
            }
            let text = &self.src[start..end];
            self.offset = end;
            return match text.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok((Tok::Num(v), start)),
                _ => Err(self.error(ParseErrorKind::InvalidNumber, start)),
            };
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.offset = end;
            return Ok((Tok::Ident(&self.src[start..end]), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(self.error(ParseErrorKind::UnexpectedChar(ch), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok<'a>,
    tok_at: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, at) = self.lexer.next_token()?;
        self.tok = tok;
        self.tok_at = at;
        Ok(())
    }

    fn pos(&self) -> SourcePos {
        SourcePos::at(self.lexer.src, self.tok_at)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            pos: self.pos(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let pos = self.pos();
            self.bump()?;
            let rhs = self.product()?;
            lhs = Expr {
                node: Node::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let pos = self.pos();
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr {
                node: Node::Binary(op, Box::new(lhs), Box::new(rhs)),
                pos,
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            let pos = self.pos();
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                pos,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok != Tok::Caret {
            return Ok(base);
        }
        let pos = self.pos();
        self.bump()?;
        let exponent = self.unary()?;
        Ok(Expr {
            node: Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
            pos,
        })
    }

    fn parenthesised(&mut self) -> Result<Expr, ParseError> {
        let open = self.pos();
        self.depth += 1;
        if self.depth > 256 {
            return Err(self.error(ParseErrorKind::Expected("shallower nesting")));
        }
        self.bump()?;
        if self.tok == Tok::End {
            return Err(ParseError {
                kind: ParseErrorKind::UnbalancedParen,
                pos: open,
            });
        }
        let inner = self.sum()?;
        match self.tok {
            Tok::RParen => {
                self.depth -= 1;
                self.bump()?;
                Ok(inner)
            }
            Tok::End => Err(ParseError {
                kind: ParseErrorKind::UnbalancedParen,
                pos: open,
            }),
            _ => Err(self.error(ParseErrorKind::Expected("`)`"))),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr {
                    node: Node::Const(v),
                    pos,
                })
            }
            Tok::Ident("t") => {
                self.bump()?;
                Ok(Expr {
                    node: Node::Var,
                    pos,
                })
            }
            Tok::Ident(name) => {
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                        pos,
                    });
                };
                self.bump()?;
                if self.tok != Tok::LParen {
                    return Err(self.error(ParseErrorKind::Expected("`(` after function name")));
                }
                let arg = self.parenthesised()?;
                Ok(Expr {
                    node: Node::Call(func, Box::new(arg)),
                    pos,
                })
            }
            Tok::LParen => self.parenthesised(),
            Tok::RParen => Err(self.error(ParseErrorKind::UnbalancedParen)),
            _ => Err(self.error(ParseErrorKind::Expected("a number, `t`, a function or `(`"))),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError {
            kind: ParseErrorKind::Empty,
            pos: SourcePos::at(src, 0),
        });
    }
    let mut parser = Parser {
        lexer: Lexer { src, offset: 0 },
        tok: Tok::End,
        tok_at: 0,
        depth: 0,
    };
    parser.bump()?;
    let expr = parser.sum()?;
    match parser.tok {
        Tok::End => Ok(expr),
        Tok::RParen => Err(parser.error(ParseErrorKind::UnbalancedParen)),
        _ => Err(parser.error(ParseErrorKind::TrailingInput)),
    }
}
