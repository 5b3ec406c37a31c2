//! Expression language for prescribed functions `f(X, ν)`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | ident | func '(' expr ')' | '(' expr ')'
//! ident   := x1..x{n+1} | nu1..nu{n+1} | rho
//! func    := exp | log | sin | cos | sqrt | abs
//! ```
//!
//! `-2^2` parses as `-(2^2)` and `2^-1` is accepted.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    /// Component `i` (0-based) of the position `X`.
    X(usize),
    /// Component `i` (0-based) of the normal `ν`.
    Nu(usize),
    /// `|X|`.
    Rho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
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

#[derive(Debug, Clone, PartialEq)]
pub enum FExpr {
    Num(f64),
    Var(Var),
    Neg(Box<FExpr>),
    Call(Func, Box<FExpr>),
    Bin(BinOp, Box<FExpr>, Box<FExpr>),
}

impl fmt::Display for FExpr {
    /// Fully parenthesized, so printing and re-parsing preserves the tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FExpr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v:?})")
                } else {
                    write!(f, "{v:?}")
                }
            }
            FExpr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            FExpr::Var(Var::Nu(i)) => write!(f, "nu{}", i + 1),
            FExpr::Var(Var::Rho) => write!(f, "rho"),
            FExpr::Neg(e) => write!(f, "(-{e})"),
            FExpr::Call(func, e) => write!(f, "{}({e})", func.name()),
            FExpr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

/// Parses `source` for a hypersurface in `R^{ambient_dim}`.
pub fn parse_f(source: &str, ambient_dim: usize) -> Result<FExpr> {
    let mut p = Parser { src: source.as_bytes(), pos: 0, dim: ambient_dim };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(Error::Parse { pos: 0, msg: "empty expression".into() });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Parse { pos: p.pos, msg: format!("unexpected `{}`", p.src[p.pos] as char) });
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse { pos: self.pos, msg: format!("expected `{}`", c as char) })
        }
    }

    fn expr(&mut self) -> Result<FExpr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = FExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FExpr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
            lhs = FExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FExpr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(FExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<FExpr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(FExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<FExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(c) => Err(Error::Parse { pos: self.pos, msg: format!("unexpected `{}`", c as char) }),
            None => Err(Error::Parse { pos: self.pos, msg: "unexpected end of input".into() }),
        }
    }

    fn number(&mut self) -> Result<FExpr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(FExpr::Num)
            .map_err(|_| Error::Parse { pos: start, msg: format!("bad number `{text}`") })
    }

    fn identifier(&mut self) -> Result<FExpr> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            self.expect(b')')?;
            return Ok(FExpr::Call(func, Box::new(arg)));
        }
        if name == "rho" {
            return Ok(FExpr::Var(Var::Rho));
        }
        let indexed = |prefix: &str| -> Option<usize> {
            let digits = name.strip_prefix(prefix)?;
            if digits.starts_with('0') {
                return None;
            }
            digits.parse::<usize>().ok().filter(|&i| i >= 1 && i <= self.dim)
        };
        if let Some(i) = indexed("nu") {
            return Ok(FExpr::Var(Var::Nu(i - 1)));
        }
        if let Some(i) = indexed("x") {
            return Ok(FExpr::Var(Var::X(i - 1)));
        }
        Err(Error::UnknownIdentifier { name: name.to_string(), pos: start })
    }
}

fn eval_error(e: &FExpr, msg: &str) -> Error {
    Error::Eval { expr: e.to_string(), msg: msg.to_string() }
}

impl FExpr {
    /// Evaluates at position `x` and unit normal `nu` (both in `R^{n+1}`).
    pub fn eval(&self, x: &[f64], nu: &[f64]) -> Result<f64> {
        let rho = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.eval_with(x, nu, rho)
    }

    fn eval_with(&self, x: &[f64], nu: &[f64], rho: f64) -> Result<f64> {
        let out = match self {
            FExpr::Num(v) => *v,
            FExpr::Var(Var::X(i)) => *x.get(*i).ok_or_else(|| eval_error(self, "position index out of range"))?,
            FExpr::Var(Var::Nu(i)) => *nu.get(*i).ok_or_else(|| eval_error(self, "normal index out of range"))?,
            FExpr::Var(Var::Rho) => rho,
            FExpr::Neg(e) => -e.eval_with(x, nu, rho)?,
            FExpr::Call(func, e) => {
                let a = e.eval_with(x, nu, rho)?;
                match func {
                    Func::Exp => a.exp(),
                    Func::Log if a <= 0.0 => return Err(eval_error(self, "log of nonpositive value")),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sqrt if a < 0.0 => return Err(eval_error(self, "sqrt of negative value")),
                    Func::Sqrt => a.sqrt(),
                    Func::Abs => a.abs(),
                }
            }
            FExpr::Bin(op, a, b) => {
                let a = a.eval_with(x, nu, rho)?;
                let b = b.eval_with(x, nu, rho)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(eval_error(self, "division by zero")),
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
        };
        if !out.is_finite() {
            return Err(eval_error(self, "non-finite result"));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn num(v: f64) -> Box<FExpr> {
        Box::new(FExpr::Num(v))
    }

    #[test]
    fn parse_examples() {
        assert_eq!(parse_f("6", 4).unwrap(), FExpr::Num(6.0));
        assert_eq!(
            parse_f("6 * rho^(-2)", 4).unwrap(),
            FExpr::Bin(
                BinOp::Mul,
                num(6.0),
                Box::new(FExpr::Bin(BinOp::Pow, Box::new(FExpr::Var(Var::Rho)), Box::new(FExpr::Neg(num(2.0)))))
            )
        );
        match parse_f("2*sigma", 4) {
            Err(Error::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "sigma");
                assert_eq!(pos, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let x = [0.0, 0.0, 1.0];
        let nu = [0.0, 0.0, 1.0];
        let ev = |s: &str| parse_f(s, 3).unwrap().eval(&x, &nu).unwrap();
        assert_eq!(ev("-2^2"), -4.0);
        assert_eq!(ev("2^3^2"), 512.0);
        assert_eq!(ev("2^-1"), 0.5);
        assert_eq!(ev("1 + 2 * 3 - 4 / 2"), 5.0);
        assert_eq!(ev("(1+2)*3"), 9.0);
        assert_eq!(ev("  sqrt( 4 )+abs(-1)"), 3.0);
        assert_eq!(ev("1.5e1"), 15.0);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_f("", 3), Err(Error::Parse { pos: 0, .. })));
        assert!(matches!(parse_f("1 +", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse_f("(1", 3), Err(Error::Parse { .. })));
        assert!(matches!(parse_f("1 2", 3), Err(Error::Parse { pos: 2, .. })));
        assert!(matches!(parse_f("x4", 3), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse_f("nu0", 3), Err(Error::UnknownIdentifier { .. })));
        assert!(parse_f("x3 + nu3", 3).is_ok());
    }

    #[test]
    fn eval_examples() {
        let e = parse_f("rho", 3).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 2.0], &[1.0, 0.0, 0.0]).unwrap(), 2.0);
        let e = parse_f("nu1", 3).unwrap();
        assert_eq!(e.eval(&[0.3, -2.0, 1.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        let e = parse_f("6*rho^(-2)", 3).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((e.eval(&[s, s, s], &[0.0, 1.0, 0.0]).unwrap() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn eval_errors_name_subexpression() {
        let e = parse_f("1 + log(x1)", 3).unwrap();
        match e.eval(&[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]) {
            Err(Error::Eval { expr, .. }) => assert_eq!(expr, "log(x1)"),
            other => panic!("{other:?}"),
        }
        let e = parse_f("1/(rho-1)", 3).unwrap();
        assert!(matches!(e.eval(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]), Err(Error::Eval { .. })));
    }

    fn arb_expr() -> impl Strategy<Value = FExpr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(FExpr::Num),
            (0usize..4).prop_map(|i| FExpr::Var(Var::X(i))),
            (0usize..4).prop_map(|i| FExpr::Var(Var::Nu(i))),
            Just(FExpr::Var(Var::Rho)),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            let ops = prop_oneof![
                Just(BinOp::Add),
                Just(BinOp::Sub),
                Just(BinOp::Mul),
                Just(BinOp::Div),
                Just(BinOp::Pow)
            ];
            let funcs = prop_oneof![
                Just(Func::Exp),
                Just(Func::Log),
                Just(Func::Sin),
                Just(Func::Cos),
                Just(Func::Sqrt),
                Just(Func::Abs)
            ];
            prop_oneof![
                inner.clone().prop_map(|e| FExpr::Neg(Box::new(e))),
                (funcs, inner.clone()).prop_map(|(f, e)| FExpr::Call(f, Box::new(e))),
                (ops, inner.clone(), inner).prop_map(|(op, a, b)| FExpr::Bin(op, Box::new(a), Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse_f(&printed, 4).unwrap(), e);
        }
    }
}
