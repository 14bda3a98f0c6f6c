//! Coordinate expressions for boundary data and source terms.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'y' | 'z' | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```
//!
//! `^` is right associative (`2^3^2 = 512`) and binds tighter than unary minus
//! (`-x^2 = -(x^2)`).

use std::fmt;
use std::ops;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot differentiate a power whose exponent depends on {0}")]
    VariableExponent(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Var {
        match i {
            0 => Var::X,
            1 => Var::Y,
            _ => Var::Z,
        }
    }

    fn name(self) -> char {
        match self {
            Var::X => 'x',
            Var::Y => 'y',
            Var::Z => 'z',
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

/// Abstract syntax tree of a scalar expression in `x`, `y`, `z`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Num(f64),
    Var(Var),
    Neg(Box<Expression>),
    Bin(BinOp, Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression, ExprError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            len: text.len(),
        };
        if parser.tokens.is_empty() {
            return Err(ExprError::Syntax {
                offset: 0,
                message: "expected expression, found end of input".into(),
            });
        }
        let expr = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(ExprError::Syntax {
                offset: tok.offset,
                message: format!("expected operator or end of input, found {}", tok.kind),
            });
        }
        Ok(expr)
    }

    pub fn num(v: f64) -> Expression {
        Expression::Num(v)
    }

    pub fn var(v: Var) -> Expression {
        Expression::Var(v)
    }

    /// Evaluates at `p = (x, y, z)` with IEEE semantics (division by zero yields an infinity or NaN).
    pub fn eval(&self, p: &[f64; 3]) -> f64 {
        match self {
            Expression::Num(v) => *v,
            Expression::Var(v) => p[v.index()],
            Expression::Neg(a) => -a.eval(p),
            Expression::Bin(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => pow(a, b),
                }
            }
            Expression::Call(f, a) => {
                let a = a.eval(p);
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                }
            }
        }
    }

    /// Like [`Expression::eval`] but reports division by zero.
    pub fn checked_eval(&self, p: &[f64; 3]) -> Result<f64, ExprError> {
        Ok(match self {
            Expression::Num(v) => *v,
            Expression::Var(v) => p[v.index()],
            Expression::Neg(a) => -a.checked_eval(p)?,
            Expression::Bin(op, a, b) => {
                let (a, b) = (a.checked_eval(p)?, b.checked_eval(p)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        pow(a, b)
                    }
                }
            }
            Expression::Call(f, a) => {
                let a = a.checked_eval(p)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                }
            }
        })
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expression::Num(_) => false,
            Expression::Var(w) => *w == v,
            Expression::Neg(a) | Expression::Call(_, a) => a.depends_on(v),
            Expression::Bin(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        ![Var::X, Var::Y, Var::Z].iter().any(|&v| self.depends_on(v))
    }

    /// Symbolic partial derivative with light simplification.
    pub fn derivative(&self, v: Var) -> Result<Expression, ExprError> {
        use Expression as E;
        Ok(match self {
            E::Num(_) => E::Num(0.0),
            E::Var(w) => E::Num(if *w == v { 1.0 } else { 0.0 }),
            E::Neg(a) => neg(a.derivative(v)?),
            E::Bin(op, a, b) => {
                let (a, b) = (a.as_ref(), b.as_ref());
                match op {
                    BinOp::Add => add(a.derivative(v)?, b.derivative(v)?),
                    BinOp::Sub => sub(a.derivative(v)?, b.derivative(v)?),
                    BinOp::Mul => add(
                        mul(a.derivative(v)?, b.clone()),
                        mul(a.clone(), b.derivative(v)?),
                    ),
                    BinOp::Div => div(
                        sub(
                            mul(a.derivative(v)?, b.clone()),
                            mul(a.clone(), b.derivative(v)?),
                        ),
                        powi(b.clone(), 2.0),
                    ),
                    BinOp::Pow => {
                        if b.depends_on(v) {
                            return Err(ExprError::VariableExponent(v.name()));
                        }
                        // d(a^b) = b a^(b-1) a'
                        mul(
                            mul(b.clone(), power(a.clone(), sub(b.clone(), E::Num(1.0)))),
                            a.derivative(v)?,
                        )
                    }
                }
            }
            E::Call(f, a) => {
                let inner = a.derivative(v)?;
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                };
                mul(outer, inner)
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Num(v) if v.is_sign_negative() => 3,
            Expression::Num(_) | Expression::Var(_) | Expression::Call(..) => 5,
            Expression::Neg(_) => 3,
            Expression::Bin(op, ..) => match op {
                BinOp::Add | BinOp::Sub => 1,
                BinOp::Mul | BinOp::Div => 2,
                BinOp::Pow => 4,
            },
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == b.trunc() && b.abs() <= i32::MAX as f64 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

fn add(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => Expression::Num(x + y),
        (Expression::Num(x), _) if *x == 0.0 => b,
        (_, Expression::Num(y)) if *y == 0.0 => a,
        _ => Expression::Bin(BinOp::Add, Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => Expression::Num(x - y),
        (Expression::Num(x), _) if *x == 0.0 => neg(b),
        (_, Expression::Num(y)) if *y == 0.0 => a,
        _ => Expression::Bin(BinOp::Sub, Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => Expression::Num(x * y),
        (Expression::Num(x), _) | (_, Expression::Num(x)) if *x == 0.0 => Expression::Num(0.0),
        (Expression::Num(x), _) if *x == 1.0 => b,
        (_, Expression::Num(y)) if *y == 1.0 => a,
        _ => Expression::Bin(BinOp::Mul, Box::new(a), Box::new(b)),
    }
}

fn div(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) if *y != 0.0 => Expression::Num(x / y),
        (Expression::Num(x), _) if *x == 0.0 => Expression::Num(0.0),
        (_, Expression::Num(y)) if *y == 1.0 => a,
        _ => Expression::Bin(BinOp::Div, Box::new(a), Box::new(b)),
    }
}

fn power(a: Expression, b: Expression) -> Expression {
    match (&a, &b) {
        (Expression::Num(x), Expression::Num(y)) => Expression::Num(pow(*x, *y)),
        (_, Expression::Num(y)) if *y == 1.0 => a,
        (_, Expression::Num(y)) if *y == 0.0 => Expression::Num(1.0),
        _ => Expression::Bin(BinOp::Pow, Box::new(a), Box::new(b)),
    }
}

fn powi(a: Expression, k: f64) -> Expression {
    power(a, Expression::Num(k))
}

fn neg(a: Expression) -> Expression {
    match a {
        Expression::Num(x) => Expression::Num(-x),
        Expression::Neg(inner) => *inner,
        other => Expression::Neg(Box::new(other)),
    }
}

fn call(f: Func, a: Expression) -> Expression {
    match a {
        Expression::Num(x) => Expression::Num(match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
        }),
        other => Expression::Call(f, Box::new(other)),
    }
}

impl ops::Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        add(self, rhs)
    }
}

impl ops::Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        sub(self, rhs)
    }
}

impl ops::Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        mul(self, rhs)
    }
}

impl ops::Mul<Expression> for f64 {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        mul(Expression::Num(self), rhs)
    }
}

impl ops::Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        neg(self)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Num(v) => write!(f, "{v:?}"),
            Expression::Var(v) => write!(f, "{}", v.name()),
            Expression::Neg(a) => {
                if a.precedence() < 3 {
                    write!(f, "-({a})")
                } else {
                    write!(f, "-{a}")
                }
            }
            Expression::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expression::Bin(op, a, b) => {
                let p = self.precedence();
                let (left_parens, right_parens) = match op {
                    BinOp::Pow => (a.precedence() < 5, b.precedence() < 3),
                    _ => (a.precedence() < p, b.precedence() <= p),
                };
                let sym = match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                if left_parens {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                f.write_str(sym)?;
                if right_parens {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

impl std::str::FromStr for Expression {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Num(v) => write!(f, "number {v}"),
            TokenKind::Ident(s) => write!(f, "identifier '{s}'"),
            TokenKind::Op(c) => write!(f, "'{c}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
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
            let lexeme = &text[start..i];
            let value = lexeme.parse::<f64>().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{lexeme}'"),
            })?;
            tokens.push(Token {
                kind: TokenKind::Num(value),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident(text[start..i].to_string()),
                offset: start,
            });
        } else if b"+-*/^()".contains(&c) {
            tokens.push(Token {
                kind: TokenKind::Op(c as char),
                offset: i,
            });
            i += 1;
        } else {
            let ch = text[i..].chars().next().unwrap_or('?');
            return Err(ExprError::Syntax {
                offset: i,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
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

    fn offset(&self) -> usize {
        self.peek().map_or(self.len, |t| t.offset)
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self
                .peek()
                .map_or_else(|| "end of input".to_string(), |t| t.kind.to_string());
            Err(ExprError::Syntax {
                offset: self.offset(),
                message: format!("expected '{op}', found {found}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expression::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Expression::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expression, ExprError> {
        let base = self.primary()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expression::Bin(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expression, ExprError> {
        let offset = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return Err(ExprError::Syntax {
                offset,
                message: "expected expression, found end of input".into(),
            });
        };
        self.pos += 1;
        match tok.kind {
            TokenKind::Num(v) => Ok(Expression::Num(v)),
            TokenKind::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            TokenKind::Ident(name) => match name.as_str() {
                "x" => Ok(Expression::Var(Var::X)),
                "y" => Ok(Expression::Var(Var::Y)),
                "z" => Ok(Expression::Var(Var::Z)),
                "pi" => Ok(Expression::Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    let func = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => Func::Exp,
                    };
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    Ok(Expression::Call(func, Box::new(arg)))
                }
                _ => Err(ExprError::Syntax {
                    offset,
                    message: format!(
                        "expected number, variable (x, y, z), pi or function (sin, cos, exp), found identifier '{name}'"
                    ),
                }),
            },
            other => Err(ExprError::Syntax {
                offset,
                message: format!("expected expression, found {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(text: &str, x: f64, y: f64, z: f64) -> f64 {
        Expression::parse(text).unwrap().eval(&[x, y, z])
    }

    #[test]
    fn parabolic_inflow_profile() {
        assert_eq!(at("y*(1-y)", 0.0, 0.5, 0.0), 0.25);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(at("2+3*4", 0.0, 0.0, 0.0), 14.0);
        assert_eq!(at("2^3^2", 0.0, 0.0, 0.0), 512.0);
        assert_eq!(at("-x^2", 2.0, 0.0, 0.0), -4.0);
        assert_eq!(at("8/4/2", 0.0, 0.0, 0.0), 1.0);
        assert_eq!(at("1-2-3", 0.0, 0.0, 0.0), -4.0);
        assert_eq!(at("2^-1", 0.0, 0.0, 0.0), 0.5);
        assert_eq!(at("(-2)^2", 0.0, 0.0, 0.0), 4.0);
        assert_eq!(at("--3", 0.0, 0.0, 0.0), 3.0);
    }

    #[test]
    fn functions_and_constants() {
        assert!((at("sin(pi/2) + cos(0) + exp(0)", 0.0, 0.0, 0.0) - 3.0).abs() < 1e-15);
        assert_eq!(at("1.5e2 + .5 + 2E-1", 0.0, 0.0, 0.0), 150.7);
        assert_eq!(at("x*y*z", 2.0, 3.0, 4.0), 24.0);
    }

    #[test]
    fn syntax_errors_report_offsets() {
        let err = Expression::parse("1 + (2*x").unwrap_err();
        assert_eq!(
            err,
            ExprError::Syntax {
                offset: 8,
                message: "expected ')', found end of input".into()
            }
        );
        match Expression::parse("2 + * 3").unwrap_err() {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 4),
            e => panic!("{e}"),
        }
        match Expression::parse("foo(x)").unwrap_err() {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 0),
            e => panic!("{e}"),
        }
        match Expression::parse("x $ y").unwrap_err() {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 2),
            e => panic!("{e}"),
        }
        assert!(Expression::parse("").is_err());
        assert!(Expression::parse("x y").is_err());
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = Expression::parse("1/(x-1)").unwrap();
        assert_eq!(e.checked_eval(&[1.0, 0.0, 0.0]), Err(ExprError::DivisionByZero));
        assert!(e.eval(&[1.0, 0.0, 0.0]).is_infinite());
        assert_eq!(e.checked_eval(&[2.0, 0.0, 0.0]), Ok(1.0));
    }

    #[test]
    fn print_parse_round_trip() {
        for text in [
            "y*(1-y)",
            "2^3^2",
            "(2^3)^2",
            "-x^2",
            "(-x)^2",
            "a",
            "1-(2-3)",
            "1-2-3",
            "x/(y/z)",
            "sin(x*pi)*cos(-y) + exp(2^-z)",
            "--x",
            "-(x+y)*z",
            "x*-y",
            "1e-300 + 1.7976931348623157e308",
        ] {
            let Ok(tree) = Expression::parse(text) else {
                continue;
            };
            let printed = tree.to_string();
            assert_eq!(Expression::parse(&printed).unwrap(), tree, "{text} -> {printed}");
        }
    }

    #[test]
    fn derivative_matches_hand_derived() {
        let e = Expression::parse("x^3*sin(y) + exp(2*x*z) - 1/(1+y^2)").unwrap();
        let p = [0.3, -0.7, 1.1];
        let (x, y, z) = (p[0], p[1], p[2]);
        let dx = e.derivative(Var::X).unwrap().eval(&p);
        let dy = e.derivative(Var::Y).unwrap().eval(&p);
        let dz = e.derivative(Var::Z).unwrap().eval(&p);
        let ex = 3.0 * x * x * y.sin() + 2.0 * z * (2.0 * x * z).exp();
        let ey = x.powi(3) * y.cos() + 2.0 * y / (1.0 + y * y).powi(2);
        let ez = 2.0 * x * (2.0 * x * z).exp();
        assert!((dx - ex).abs() < 1e-13);
        assert!((dy - ey).abs() < 1e-13);
        assert!((dz - ez).abs() < 1e-13);
        assert_eq!(
            Expression::parse("2^x").unwrap().derivative(Var::X),
            Err(ExprError::VariableExponent('x'))
        );
    }

    #[test]
    fn simplification_folds_constants() {
        let d = Expression::parse("3*x + 5").unwrap().derivative(Var::X).unwrap();
        assert_eq!(d, Expression::Num(3.0));
        let d = Expression::parse("y^2").unwrap().derivative(Var::X).unwrap();
        assert_eq!(d, Expression::Num(0.0));
    }
}
