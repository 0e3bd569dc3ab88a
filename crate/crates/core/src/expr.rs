//! Mini expression language over the variables `x`, `v`, `p`.
//!
//! Grammar (public contract, documented in the CLI help):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | atom ('^' factor)?
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and unary minus binds looser than `^`
//! (`-2^2 == -4`). No implicit multiplication. Functions: `abs`, `min`,
//! `max`, `exp`, `log`, `sqrt`, `cos`, `sin`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    V,
    P,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::V => "v",
            Var::P => "p",
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
    Abs,
    Min,
    Max,
    Exp,
    Log,
    Sqrt,
    Cos,
    Sin,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cos => "cos",
            Func::Sin => "sin",
        }
    }

    fn by_name(name: &str) -> Option<Func> {
        Some(match name {
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cos" => Func::Cos,
            "sin" => Func::Sin,
            _ => return None,
        })
    }
}

/// Parsed abstract syntax tree. Immutable and freely shareable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    Syntax(String),
    UnknownIdentifier(String),
    Arity { name: String, expected: usize, got: usize },
}

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error at offset {}: {}", self.offset, msg),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier `{}` at offset {}", name, self.offset)
            }
            ParseErrorKind::Arity { name, expected, got } => write!(
                f,
                "function `{}` takes {} argument(s), got {} (offset {})",
                name, expected, got, self.offset
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    UnboundVariable(Var),
    Domain(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnboundVariable(v) => write!(f, "unbound variable `{}`", v.name()),
            EvalError::Domain(msg) => write!(f, "domain error: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EvalError {}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub x: Option<f64>,
    pub v: Option<f64>,
    pub p: Option<f64>,
}

impl Bindings {
    pub fn x(x: f64) -> Self {
        Bindings { x: Some(x), ..Default::default() }
    }

    pub fn xv(x: f64, v: f64) -> Self {
        Bindings { x: Some(x), v: Some(v), p: None }
    }

    pub fn vp(v: f64, p: f64) -> Self {
        Bindings { x: None, v: Some(v), p: Some(p) }
    }

    fn get(&self, var: Var) -> Result<f64, EvalError> {
        match var {
            Var::X => self.x,
            Var::V => self.v,
            Var::P => self.p,
        }
        .ok_or(EvalError::UnboundVariable(var))
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        Parser::new(text).parse()
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        match self {
            Expr::Num(c) => Ok(*c),
            Expr::Var(v) => b.get(*v),
            Expr::Neg(e) => Ok(-e.eval(b)?),
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(b)?, r.eval(b)?);
                match op {
                    BinOp::Add => Ok(l + r),
                    BinOp::Sub => Ok(l - r),
                    BinOp::Mul => Ok(l * r),
                    BinOp::Div => {
                        if r == 0.0 {
                            Err(EvalError::Domain("division by zero".to_string()))
                        } else {
                            Ok(l / r)
                        }
                    }
                    BinOp::Pow => eval_pow(l, r),
                }
            }
            Expr::Call(f, args) => {
                let mut vals = [0.0f64; 2];
                for (i, a) in args.iter().enumerate() {
                    vals[i] = a.eval(b)?;
                }
                match f {
                    Func::Abs => Ok(math::abs(vals[0])),
                    Func::Min => Ok(math::min(vals[0], vals[1])),
                    Func::Max => Ok(math::max(vals[0], vals[1])),
                    Func::Exp => Ok(math::exp(vals[0])),
                    Func::Log => {
                        if vals[0] <= 0.0 {
                            Err(EvalError::Domain("log of nonpositive argument".to_string()))
                        } else {
                            Ok(math::log(vals[0]))
                        }
                    }
                    Func::Sqrt => {
                        if vals[0] < 0.0 {
                            Err(EvalError::Domain("sqrt of negative argument".to_string()))
                        } else {
                            Ok(math::sqrt(vals[0]))
                        }
                    }
                    Func::Cos => Ok(math::cos(vals[0])),
                    Func::Sin => Ok(math::sin(vals[0])),
                }
            }
        }
    }

    /// Variables occurring in the tree.
    pub fn variables(&self) -> (bool, bool, bool) {
        match self {
            Expr::Num(_) => (false, false, false),
            Expr::Var(Var::X) => (true, false, false),
            Expr::Var(Var::V) => (false, true, false),
            Expr::Var(Var::P) => (false, false, true),
            Expr::Neg(e) => e.variables(),
            Expr::Bin(_, l, r) => {
                let (ax, av, ap) = l.variables();
                let (bx, bv, bp) = r.variables();
                (ax || bx, av || bv, ap || bp)
            }
            Expr::Call(_, args) => args.iter().fold((false, false, false), |acc, a| {
                let (x, v, p) = a.variables();
                (acc.0 || x, acc.1 || v, acc.2 || p)
            }),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 4,
            Expr::Bin(BinOp::Pow, ..) => 3,
            Expr::Neg(_) => 2,
            Expr::Bin(BinOp::Mul, ..) | Expr::Bin(BinOp::Div, ..) => 1,
            Expr::Bin(BinOp::Add, ..) | Expr::Bin(BinOp::Sub, ..) => 0,
        }
    }
}

fn eval_pow(base: f64, exp: f64) -> Result<f64, EvalError> {
    if base < 0.0 && math::floor(exp) != exp {
        return Err(EvalError::Domain("negative base with non-integer exponent".to_string()));
    }
    if base == 0.0 && exp < 0.0 {
        return Err(EvalError::Domain("zero base with negative exponent".to_string()));
    }
    Ok(math::pow(base, exp))
}

impl fmt::Display for Expr {
    /// Canonical printing; `parse(print(e)) == e`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(c) => {
                if *c == math::floor(*c) && math::abs(*c) < 1e15 {
                    write!(f, "{}", *c as i64)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(e) => {
                write!(f, "-")?;
                child(f, e, 2)
            }
            Expr::Bin(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 0),
                    BinOp::Sub => ("-", 0),
                    BinOp::Mul => ("*", 1),
                    BinOp::Div => ("/", 1),
                    BinOp::Pow => ("^", 3),
                };
                match op {
                    // left-assoc: right child needs strictly higher precedence
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                        child(f, l, prec)?;
                        write!(f, " {sym} ")?;
                        child(f, r, prec + 1)
                    }
                    // right-assoc; base must be an atom
                    BinOp::Pow => {
                        child(f, l, 4)?;
                        write!(f, "{sym}")?;
                        child(f, r, 2)
                    }
                }
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { bytes: text.as_bytes(), pos: 0 }
    }

    fn parse(mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.pos >= self.bytes.len() {
            return Err(self.syntax("empty expression"));
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.syntax("unexpected trailing input"));
        }
        Ok(e)
    }

    fn syntax(&self, msg: &str) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax(msg.to_string()), offset: self.pos }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("expected number, identifier or `(`")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        // optional exponent part, e.g. 1e-3
        if self.bytes.get(self.pos).is_some_and(|c| *c == b'e' || *c == b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.bytes.get(self.pos).is_some_and(|c| *c == b'+' || *c == b'-') {
                self.pos += 1;
            }
            if self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.bytes.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = core::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Expr::Num(v)),
            Err(_) => Err(ParseError {
                kind: ParseErrorKind::Syntax("malformed number".to_string()),
                offset: start,
            }),
        }
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        if self.peek() == Some(b'(') {
            let func = Func::by_name(name).ok_or(ParseError {
                kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                offset: start,
            })?;
            self.pos += 1;
            let mut args = alloc::vec![self.expr()?];
            while self.peek() == Some(b',') {
                self.pos += 1;
                args.push(self.expr()?);
            }
            if self.peek() != Some(b')') {
                return Err(self.syntax("expected `)` or `,` in argument list"));
            }
            self.pos += 1;
            if args.len() != func.arity() {
                return Err(ParseError {
                    kind: ParseErrorKind::Arity {
                        name: name.to_string(),
                        expected: func.arity(),
                        got: args.len(),
                    },
                    offset: start,
                });
            }
            Ok(Expr::Call(func, args))
        } else {
            match name {
                "x" => Ok(Expr::Var(Var::X)),
                "v" => Ok(Expr::Var(Var::V)),
                "p" => Ok(Expr::Var(Var::P)),
                _ => Err(ParseError {
                    kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                    offset: start,
                }),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn b(x: f64, v: f64, p: f64) -> Bindings {
        Bindings { x: Some(x), v: Some(v), p: Some(p) }
    }

    #[test]
    fn parses_one_minus_abs() {
        let e = Expr::parse("1 - abs(x)").unwrap();
        assert_eq!(
            e,
            Expr::Bin(
                BinOp::Sub,
                Box::new(Expr::Num(1.0)),
                Box::new(Expr::Call(Func::Abs, alloc::vec![Expr::Var(Var::X)])),
            )
        );
        assert_eq!(e.eval(&Bindings::x(0.25)).unwrap(), 0.75);
    }

    #[test]
    fn parses_quadratic_integrand() {
        let e = Expr::parse("p + 0.005*p^2").unwrap();
        assert_eq!(
            e,
            Expr::Bin(
                BinOp::Add,
                Box::new(Expr::Var(Var::P)),
                Box::new(Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::Num(0.005)),
                    Box::new(Expr::Bin(
                        BinOp::Pow,
                        Box::new(Expr::Var(Var::P)),
                        Box::new(Expr::Num(2.0)),
                    )),
                )),
            )
        );
    }

    #[test]
    fn rejects_double_caret() {
        let err = Expr::parse("x^^2").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn rejects_implicit_multiplication() {
        assert!(Expr::parse("2x").is_err());
    }

    #[test]
    fn unknown_identifier_and_arity() {
        let err = Expr::parse("foo(x)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
        let err = Expr::parse("min(1)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { .. }));
        let err = Expr::parse("y + 1").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
    }

    #[test]
    fn power_evaluation() {
        let e = Expr::parse("p^1.15").unwrap();
        assert!((e.eval(&b(0.0, 0.0, 2.0)).unwrap() - 2.2190).abs() < 1e-3);
    }

    #[test]
    fn clamp_rho() {
        let e = Expr::parse("min(1, max(0, v))").unwrap();
        assert_eq!(e.eval(&b(0.0, -3.0, 0.0)).unwrap(), 0.0);
        assert_eq!(e.eval(&b(0.0, 0.5, 0.0)).unwrap(), 0.5);
        assert_eq!(e.eval(&b(0.0, 7.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_pow() {
        let e = Expr::parse("-2^2").unwrap();
        assert_eq!(e.eval(&Bindings::default()).unwrap(), -4.0);
        let e = Expr::parse("(-2)^2").unwrap();
        assert_eq!(e.eval(&Bindings::default()).unwrap(), 4.0);
    }

    #[test]
    fn pow_right_associative() {
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval(&Bindings::default()).unwrap(), 512.0);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(
            Expr::parse("log(x)").unwrap().eval(&Bindings::x(-1.0)),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("x^0.5").unwrap().eval(&Bindings::x(-1.0)),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("1/x").unwrap().eval(&Bindings::x(0.0)),
            Err(EvalError::Domain(_))
        ));
        assert!(matches!(
            Expr::parse("x + v").unwrap().eval(&Bindings::x(0.0)),
            Err(EvalError::UnboundVariable(Var::V))
        ));
    }

    #[test]
    fn negative_base_integer_exponent_ok() {
        let e = Expr::parse("x^3").unwrap();
        assert_eq!(e.eval(&Bindings::x(-2.0)).unwrap(), -8.0);
    }

    #[test]
    fn print_parse_fixpoint() {
        for src in [
            "1 - abs(x)",
            "p + 0.005*p^2",
            "-x^2 + min(v, 3)/(1 + p)",
            "2^3^2",
            "-(x + v)*p",
            "sqrt(abs(x)) - exp(-v)",
        ] {
            let e = Expr::parse(src).unwrap();
            let printed = format!("{e}");
            let e2 = Expr::parse(&printed).unwrap();
            assert_eq!(e, e2, "src `{src}` printed `{printed}`");
        }
    }
}
