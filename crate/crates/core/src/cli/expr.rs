//! One-variable map expressions for the real-line spaces.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | 'x' | '(' expr ')' | 'abs' '(' expr ')'
//!          | ('min' | 'max' | 'pow') '(' expr ',' expr ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func2 {
    Min,
    Max,
    Pow,
}

impl Func2 {
    fn name(self) -> &'static str {
        match self {
            Func2::Min => "min",
            Func2::Max => "max",
            Func2::Pow => "pow",
        }
    }
}

/// Parsed expression tree. Literals are finite and nonnegative; negation
/// is always an explicit [`Expr::Neg`] node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Abs(Box<Expr>),
    Call(Func2, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::X => x,
            Expr::Neg(e) => -e.eval(x)?,
            Expr::Abs(e) => e.eval(x)?.abs(),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div if b == 0.0 => return Err(Error::DivisionByZero),
                    BinOp::Div => a / b,
                }
            }
            Expr::Call(f, a, b) => {
                let (a, b) = (a.eval(x)?, b.eval(x)?);
                match f {
                    Func2::Min => a.min(b),
                    Func2::Max => a.max(b),
                    Func2::Pow => a.powf(b),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("expression is not finite at x = {x}")))
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::X => 1,
            Expr::Neg(e) | Expr::Abs(e) => 1 + e.depth(),
            Expr::Bin(_, a, b) | Expr::Call(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

/// Fully parenthesized; reparsing the output yields the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug is the shortest round-trip form
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::X => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Call(func, a, b) => write!(f, "{}({a}, {b})", func.name()),
        }
    }
}

const OPERAND: [&str; 5] = ["number", "x", "(", "-", "function"];

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn fail<T>(&self, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax {
            offset: self.pos,
            expected: expected.iter().map(|s| (*s).to_owned()).collect(),
        })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(&[&(c as char).to_string()])
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            _ => self.fail(&OPERAND),
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut mantissa = self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            mantissa += self.digits();
        }
        if mantissa == 0 {
            return self.fail(&["digit"]);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return self.fail(&["digit"]);
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let v: f64 = text.parse().expect("validated numeric literal");
        if !v.is_finite() {
            self.pos = start;
            return self.fail(&["finite number"]);
        }
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let func = match name {
            "x" => return Ok(Expr::X),
            "abs" => None,
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            "pow" => Some(Func2::Pow),
            _ => {
                return Err(Error::UnknownIdentifier {
                    name: name.to_owned(),
                    offset: start,
                })
            }
        };
        self.expect(b'(')?;
        let a = self.expr()?;
        let e = match func {
            None => Expr::Abs(Box::new(a)),
            Some(f) => {
                self.expect(b',')?;
                let b = self.expr()?;
                Expr::Call(f, Box::new(a), Box::new(b))
            }
        };
        self.expect(b')')?;
        Ok(e)
    }
}

/// Parses a map expression; errors carry the byte offset of the failure.
pub fn parse_map(src: &str) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    if p.peek().is_none() {
        return p.fail(&OPERAND);
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.fail(&["operator", "end of input"]);
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(parse_map("0.5*x+1").unwrap().eval(2.0).unwrap(), 2.0);
        assert_eq!(parse_map("min(x,3)").unwrap().eval(5.0).unwrap(), 3.0);
        match parse_map("x++1") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let e = parse_map("-x*2 + 3/4 - 1").unwrap();
        assert_eq!(e.eval(1.0).unwrap(), -2.0 + 0.75 - 1.0);
        assert_eq!(parse_map("1-2-3").unwrap().eval(0.0).unwrap(), -4.0);
        assert_eq!(parse_map("8/2/2").unwrap().eval(0.0).unwrap(), 2.0);
        assert_eq!(parse_map("--x").unwrap().eval(3.0).unwrap(), 3.0);
        assert_eq!(parse_map("pow(2, 10)").unwrap().eval(0.0).unwrap(), 1024.0);
        assert_eq!(parse_map("abs(-x)").unwrap().eval(3.0).unwrap(), 3.0);
        assert_eq!(parse_map("1.5e2").unwrap().eval(0.0).unwrap(), 150.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_map(""), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(parse_map("x +"), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse_map("(x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_map("x x"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_map("1e"), Err(Error::Syntax { offset: 2, .. })));
        assert!(matches!(parse_map("1e999"), Err(Error::Syntax { offset: 0, .. })));
        assert!(matches!(
            parse_map("2*sin(x)"),
            Err(Error::UnknownIdentifier { offset: 2, .. })
        ));
        assert!(matches!(parse_map("min(x)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_map("1/x").unwrap().eval(0.0), Err(Error::DivisionByZero)));
        assert!(matches!(parse_map("pow(x, 0.5)").unwrap().eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn render_reparses() {
        for src in ["0.5*x+1", "-(x - 3) * abs(x)", "max(min(x, 1e-7), pow(x, 2))", "--x"] {
            let e = parse_map(src).unwrap();
            assert_eq!(parse_map(&e.to_string()).unwrap(), e, "{e}");
        }
    }
}
