//! Small arithmetic grammar for kernels given as text.
//!
//! ```text
//! expr    := sum (('<' | '<=' | '>' | '>=') sum)?
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names: `x`, `y` (first coordinates), `x1 x2 y1 y2`, `z = y − x` with
//! `z1 z2`, `r = |x − y|`, and the constants `pi`, `e`. Comparisons give 1 or
//! 0. Functions: `abs exp log sqrt sin cos tanh sign step gamma` (one
//! argument), `min max pow` (two), `if(c, a, b)` (a where c ≠ 0).

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::special::gamma;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    X1,
    X2,
    Y1,
    Y2,
    Z1,
    Z2,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Abs,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Sign,
    Step,
    Gamma,
    Min,
    Max,
    Pow,
    If,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "abs" => (Func::Abs, 1),
            "exp" => (Func::Exp, 1),
            "log" => (Func::Log, 1),
            "sqrt" => (Func::Sqrt, 1),
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tanh" => (Func::Tanh, 1),
            "sign" => (Func::Sign, 1),
            "step" => (Func::Step, 1),
            "gamma" => (Func::Gamma, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "pow" => (Func::Pow, 2),
            "if" => (Func::If, 3),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// Parsed expression in the variables x, y.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    source: String,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser { src, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { root, source: src.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, dim: usize, x: &Point, y: &Point) -> f64 {
        let z = [y[0] - x[0], y[1] - x[1]];
        let r = if dim == 1 { z[0].abs() } else { z[0].hypot(z[1]) };
        let env = Env { x, y, z, r };
        eval(&self.root, &env)
    }
}

struct Env<'a> {
    x: &'a Point,
    y: &'a Point,
    z: Point,
    r: f64,
}

fn eval(n: &Node, env: &Env<'_>) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(v) => match v {
            Var::X1 => env.x[0],
            Var::X2 => env.x[1],
            Var::Y1 => env.y[0],
            Var::Y2 => env.y[1],
            Var::Z1 => env.z[0],
            Var::Z2 => env.z[1],
            Var::R => env.r,
        },
        Node::Neg(a) => -eval(a, env),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, env), eval(b, env));
            let truth = |c: bool| if c { 1.0 } else { 0.0 };
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
                BinOp::Lt => truth(a < b),
                BinOp::Le => truth(a <= b),
                BinOp::Gt => truth(a > b),
                BinOp::Ge => truth(a >= b),
            }
        }
        Node::Call(f, args) => {
            if *f == Func::If {
                return if eval(&args[0], env) != 0.0 { eval(&args[1], env) } else { eval(&args[2], env) };
            }
            let a = eval(&args[0], env);
            match f {
                Func::Abs => a.abs(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tanh => a.tanh(),
                Func::Sign => {
                    if a > 0.0 {
                        1.0
                    } else if a < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
                Func::Step => {
                    if a > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Func::Gamma => gamma(a),
                Func::Min => a.min(eval(&args[1], env)),
                Func::Max => a.max(eval(&args[1], env)),
                Func::Pow => a.powf(eval(&args[1], env)),
                Func::If => unreachable!(),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let lhs = self.sum()?;
        let op = if self.eat("<=") {
            BinOp::Le
        } else if self.eat(">=") {
            BinOp::Ge
        } else if self.eat("<") {
            BinOp::Lt
        } else if self.eat(">") {
            BinOp::Gt
        } else {
            return Ok(lhs);
        };
        let rhs = self.sum()?;
        Ok(Node::Bin(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat("-") {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat("^") {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(")") {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.name(),
            Some(c) => Err(self.error(&format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let v: f64 = text.parse().map_err(|_| self.error(&format!("malformed number '{text}'")))?;
        self.pos = end;
        Ok(Node::Num(v))
    }

    fn name(&mut self) -> Result<Node> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        if let Some((f, arity)) = Func::lookup(name) {
            if !self.eat("(") {
                self.pos = start;
                return Err(self.error(&format!("function '{name}' needs arguments")));
            }
            let mut args = vec![self.expr()?];
            while self.eat(",") {
                args.push(self.expr()?);
            }
            if !self.eat(")") {
                return Err(self.error("expected ')' after arguments"));
            }
            if args.len() != arity {
                self.pos = start;
                return Err(self.error(&format!("'{name}' takes {arity} argument(s), got {}", args.len())));
            }
            return Ok(Node::Call(f, args));
        }
        let node = match name {
            "x" | "x1" => Node::Var(Var::X1),
            "x2" => Node::Var(Var::X2),
            "y" | "y1" => Node::Var(Var::Y1),
            "y2" => Node::Var(Var::Y2),
            "z" | "z1" => Node::Var(Var::Z1),
            "z2" => Node::Var(Var::Z2),
            "r" => Node::Var(Var::R),
            "pi" => Node::Num(std::f64::consts::PI),
            "e" => Node::Num(std::f64::consts::E),
            _ => {
                self.pos = start;
                return Err(self.error(&format!("unknown name '{name}'")));
            }
        };
        Ok(node)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64, y: f64) -> f64 {
        Expr::parse(src).unwrap().eval(1, &[x, 0.0], &[y, 0.0])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("(1 + 2) * 3", 0.0, 0.0), 9.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1.5e1 - 5", 0.0, 0.0), 10.0);
    }

    #[test]
    fn variables() {
        assert_eq!(ev("r", 1.0, -2.0), 3.0);
        assert_eq!(ev("z", 1.0, -2.0), -3.0);
        assert_eq!(ev("x * y", 2.0, 5.0), 10.0);
        let e = Expr::parse("r").unwrap();
        assert_eq!(e.eval(2, &[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn functions_and_comparisons() {
        assert_eq!(ev("step(z) * 3 + step(-z)", 0.0, 2.0), 3.0);
        assert_eq!(ev("step(z) * 3 + step(-z)", 0.0, -2.0), 1.0);
        assert_eq!(ev("if(r > 1, 2, 0)", 0.0, 1.5), 2.0);
        assert_eq!(ev("(r >= 1) * (r <= 2)", 0.0, 2.0), 1.0);
        assert_eq!(ev("max(x, y) + min(x, y)", 1.0, 4.0), 5.0);
        assert!((ev("gamma(0.5)^2", 0.0, 0.0) - std::f64::consts::PI).abs() < 1e-12);
        assert!((ev("r^(-2)/pi", 0.0, 2.0) - 0.25 / std::f64::consts::PI).abs() < 1e-16);
    }

    #[test]
    fn parse_errors_report_offsets() {
        match Expr::parse("1 + foo") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("min(1)").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("").is_err());
    }
}
