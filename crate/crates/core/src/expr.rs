//! A small arithmetic expression language evaluated over complex dual
//! numbers, so every expression yields its value and both partial
//! derivatives in `x` and `y`.
//!
//! Grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number ['i'] | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers: `x`, `y`, `z` (= `x + i y`), `t` (alias of `x`), `i`, `pi`,
//! `e`, and the component-tagged forms `x1 y1 z1 x2 y2 z2`. Functions:
//! `exp ln log sqrt sin cos tan sinh cosh conj re im abs`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A complex value with its partial derivatives in `x` and `y`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub v: Complex64,
    pub dx: Complex64,
    pub dy: Complex64,
}

impl Jet {
    pub const fn new(v: Complex64, dx: Complex64, dy: Complex64) -> Self {
        Self { v, dx, dy }
    }

    pub const fn constant(v: Complex64) -> Self {
        Self { v, dx: ZERO, dy: ZERO }
    }

    /// Chain rule for a holomorphic outer map with derivative `d`.
    fn chain(self, value: Complex64, d: Complex64) -> Self {
        Self { v: value, dx: d * self.dx, dy: d * self.dy }
    }

    fn is_constant(&self) -> bool {
        self.dx == ZERO && self.dy == ZERO
    }

    fn conj(self) -> Self {
        Self { v: self.v.conj(), dx: self.dx.conj(), dy: self.dy.conj() }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet::new(self.v + o.v, self.dx + o.dx, self.dy + o.dy)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet::new(self.v - o.v, self.dx - o.dx, self.dy - o.dy)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet::new(self.v * o.v, self.dx * o.v + self.v * o.dx, self.dy * o.v + self.v * o.dy)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.v.inv();
        let q = self.v * inv;
        Jet::new(q, (self.dx - q * o.dx) * inv, (self.dy - q * o.dy) * inv)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(-self.v, -self.dx, -self.dy)
    }
}

fn pow(a: Jet, b: Jet) -> Jet {
    if b.is_constant() {
        let p = b.v;
        if p.im == 0.0 && p.re.fract() == 0.0 && p.re.abs() <= 64.0 {
            let n = p.re as i32;
            if n == 0 {
                return Jet::constant(Complex64::new(1.0, 0.0));
            }
            let value = a.v.powi(n);
            let d = a.v.powi(n - 1) * p.re;
            return a.chain(value, d);
        }
        if a.v == ZERO {
            return Jet::constant(ZERO);
        }
        let value = a.v.powc(p);
        return a.chain(value, p * value / a.v);
    }
    // a^b = exp(b ln a)
    let ln_a = a.chain(a.v.ln(), a.v.inv());
    let e = b * ln_a;
    let value = e.v.exp();
    e.chain(value, value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Conj,
    Re,
    Im,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "conj" => Func::Conj,
            "re" => Func::Re,
            "im" => Func::Im,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, a: Jet) -> Jet {
        let v = a.v;
        match self {
            Func::Exp => {
                let e = v.exp();
                a.chain(e, e)
            }
            Func::Ln => a.chain(v.ln(), v.inv()),
            Func::Sqrt => {
                let s = v.sqrt();
                a.chain(s, (s * 2.0).inv())
            }
            Func::Sin => a.chain(v.sin(), v.cos()),
            Func::Cos => a.chain(v.cos(), -v.sin()),
            Func::Tan => {
                let c = v.cos();
                a.chain(v.tan(), (c * c).inv())
            }
            Func::Sinh => a.chain(v.sinh(), v.cosh()),
            Func::Cosh => a.chain(v.cosh(), v.sinh()),
            Func::Conj => a.conj(),
            Func::Re => Jet::new(
                Complex64::new(v.re, 0.0),
                Complex64::new(a.dx.re, 0.0),
                Complex64::new(a.dy.re, 0.0),
            ),
            Func::Im => Jet::new(
                Complex64::new(v.im, 0.0),
                Complex64::new(a.dx.im, 0.0),
                Complex64::new(a.dy.im, 0.0),
            ),
            Func::Abs => {
                let r = v.norm();
                let d = |dv: Complex64| {
                    if r == 0.0 {
                        ZERO
                    } else {
                        Complex64::new((v.conj() * dv).re / r, 0.0)
                    }
                };
                Jet::new(Complex64::new(r, 0.0), d(a.dx), d(a.dy))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(Complex64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64) -> Jet {
        match self {
            Node::Num(c) => Jet::constant(*c),
            Node::Var(Var::X) => Jet::new(Complex64::new(x, 0.0), Complex64::new(1.0, 0.0), ZERO),
            Node::Var(Var::Y) => Jet::new(Complex64::new(y, 0.0), ZERO, Complex64::new(1.0, 0.0)),
            Node::Var(Var::Z) => Jet::new(Complex64::new(x, y), Complex64::new(1.0, 0.0), I),
            Node::Neg(a) => -a.eval(x, y),
            Node::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Node::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Node::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Node::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Node::Pow(a, b) => pow(a.eval(x, y), b.eval(x, y)),
            Node::Call(f, a) => f.apply(a.eval(x, y)),
        }
    }
}

/// Which component tags the variables of an expression may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Untagged `x`, `y`, `z`, `t` only.
    Plane,
    /// Untagged names plus those tagged with this idempotent component (1 or 2).
    Component(u8),
}

/// A parsed expression.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        Self::parse_scoped(source, Scope::Plane)
    }

    pub fn parse_scoped(source: &str, scope: Scope) -> Result<Self> {
        let mut p = Parser { src: source.as_bytes(), pos: 0, scope };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64, y: f64) -> Jet {
        self.root.eval(x, y)
    }

    pub fn value(&self, x: f64, y: f64) -> Complex64 {
        self.eval(x, y).v
    }

    /// The value if the expression does not depend on any variable.
    pub fn as_constant(&self) -> Option<Complex64> {
        fn has_var(n: &Node) -> bool {
            match n {
                Node::Num(_) => false,
                Node::Var(_) => true,
                Node::Neg(a) | Node::Call(_, a) => has_var(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                    has_var(a) || has_var(b)
                }
            }
        }
        if has_var(&self.root) {
            None
        } else {
            Some(self.root.eval(0.0, 0.0).v)
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    scope: Scope,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Expr { offset: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap();
        let value: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        self.pos = i;
        // `2i`: an imaginary literal, unless `i` starts a longer identifier.
        if self.pos < s.len() && s[self.pos] == b'i' {
            let next = s.get(self.pos + 1).copied();
            if !next.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += 1;
                return Ok(Node::Num(Complex64::new(0.0, value)));
            }
        }
        Ok(Node::Num(Complex64::new(value, 0.0)))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(f) = Func::from_name(name) {
            if !self.eat(b'(') {
                self.pos = start;
                return Err(self.error(&format!("function `{name}` needs an argument in parentheses")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(Node::Call(f, Box::new(arg)));
        }
        let var = |v| Ok(Node::Var(v));
        match name {
            "i" => return Ok(Node::Num(I)),
            "pi" => return Ok(Node::Num(Complex64::new(std::f64::consts::PI, 0.0))),
            "e" => return Ok(Node::Num(Complex64::new(std::f64::consts::E, 0.0))),
            "x" | "t" => return var(Var::X),
            "y" => return var(Var::Y),
            "z" => return var(Var::Z),
            _ => {}
        }
        let bytes = name.as_bytes();
        if bytes.len() == 2 && matches!(bytes[1], b'1' | b'2') {
            let tag = bytes[1] - b'0';
            let allowed = matches!(self.scope, Scope::Component(c) if c == tag);
            let v = match bytes[0] {
                b'x' => Some(Var::X),
                b'y' => Some(Var::Y),
                b'z' => Some(Var::Z),
                _ => None,
            };
            if let Some(v) = v {
                if allowed {
                    return var(v);
                }
                self.pos = start;
                return Err(self.error(&format!("variable `{name}` is not available in this expression")));
            }
        }
        self.pos = start;
        Err(self.error(&format!("unknown identifier `{name}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn arithmetic_and_precedence() {
        let e = Expr::parse("1 + 2*3^2 - 4/2").unwrap();
        assert_eq!(e.value(0.0, 0.0), c(17.0, 0.0));
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.value(3.0, 0.0), c(-9.0, 0.0));
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.value(0.0, 0.0), c(512.0, 0.0));
        assert_eq!(Expr::parse("1+2i").unwrap().as_constant(), Some(c(1.0, 2.0)));
        assert_eq!(Expr::parse("3.5e-1").unwrap().as_constant(), Some(c(0.35, 0.0)));
    }

    #[test]
    fn derivatives_of_z_and_conj() {
        let e = Expr::parse("z^2").unwrap();
        let j = e.eval(1.0, 2.0);
        let z = c(1.0, 2.0);
        assert_eq!(j.v, z * z);
        assert_eq!(j.dx, z * 2.0);
        assert_eq!(j.dy, z * 2.0 * I);
        let j = Expr::parse("conj(z)").unwrap().eval(0.3, -0.7);
        assert_eq!(j.v, c(0.3, 0.7));
        assert_eq!(j.dx, c(1.0, 0.0));
        assert_eq!(j.dy, c(0.0, -1.0));
    }

    #[test]
    fn derivatives_match_differences() {
        let exprs = [
            "exp(x*y) + sin(z) * cos(y)",
            "x^0.5 + y^0.3",
            "sqrt(1 + x^2) / (2 + y)",
            "re(z^3) - im(z)*abs(z)",
            "x^y",
            "ln(1+x) + tan(y/3) + sinh(x) - cosh(y)",
        ];
        for src in exprs {
            let e = Expr::parse(src).unwrap();
            let (x, y, h) = (0.7, 0.4, 1e-6);
            let j = e.eval(x, y);
            let fx = (e.value(x + h, y) - e.value(x - h, y)) / (2.0 * h);
            let fy = (e.value(x, y + h) - e.value(x, y - h)) / (2.0 * h);
            assert!((j.dx - fx).norm() < 1e-7, "{src}: dx {} vs {}", j.dx, fx);
            assert!((j.dy - fy).norm() < 1e-7, "{src}: dy {} vs {}", j.dy, fy);
        }
    }

    #[test]
    fn scoped_variables() {
        assert!(Expr::parse("x1 + y1").is_err());
        let e = Expr::parse_scoped("x1^2 + y1", Scope::Component(1)).unwrap();
        assert_relative_eq!(e.value(2.0, 1.0).re, 5.0);
        let err = Expr::parse_scoped("x2", Scope::Component(1)).unwrap_err();
        assert!(matches!(err, Error::Expr { offset: 0, .. }));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        match Expr::parse("1 + * 2") {
            Err(Error::Expr { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
