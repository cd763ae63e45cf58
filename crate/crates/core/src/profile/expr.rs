//! Recursive-descent parser and evaluator for profile expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | 'x' | 'y' | '(' expr ')' | func '(' args ')'
//! func   := sqrt | exp | log | abs | min | max | pow
//! ```
//!
//! Positions in errors are 1-based character offsets.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Abs,
    Min,
    Max,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max | Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Expr::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Expr::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Expr::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Expr::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Expr::Call(f, args) => {
                let a = args[0].eval(x, y);
                match f {
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Abs => a.abs(),
                    Func::Min => a.min(args[1].eval(x, y)),
                    Func::Max => a.max(args[1].eval(x, y)),
                    Func::Pow => a.powf(args[1].eval(x, y)),
                }
            }
        }
    }

    pub fn uses_variables(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X | Expr::Y => true,
            Expr::Neg(a) => a.uses_variables(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_variables() || b.uses_variables()
            }
            Expr::Call(_, args) => args.iter().any(Expr::uses_variables),
        }
    }

    /// Replaces `x` and `y` by the given expressions.
    pub fn substitute(&self, sx: &Expr, sy: &Expr) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(sx, sy));
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::X => sx.clone(),
            Expr::Y => sy.clone(),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Pow(a, b) => Expr::Pow(s(a), s(b)),
            Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| a.substitute(sx, sy)).collect()),
        }
    }
}

// Fully parenthesized, so the output parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "(-{})", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::X => write!(f, "x"),
            Expr::Y => write!(f, "y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a}+{b})"),
            Expr::Sub(a, b) => write!(f, "({a}-{b})"),
            Expr::Mul(a, b) => write!(f, "({a}*{b})"),
            Expr::Div(a, b) => write!(f, "({a}/{b})"),
            Expr::Pow(a, b) => write!(f, "({a}^{b})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Which variables an expression may mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variables {
    /// `x` only (radial functions).
    X,
    /// `x` and `y` (profiles and spectral densities).
    XY,
}

pub fn parse(text: &str, vars: Variables) -> Result<Expr> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.syntax("an operator or end of input"));
    }
    Ok(e)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    vars: Variables,
}

impl Parser {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn syntax(&self, expected: &str) -> Error {
        let found = match self.chars.get(self.pos) {
            Some(c) => format!("'{c}'"),
            None => "end of input".to_string(),
        };
        Error::Syntax {
            position: self.pos + 1,
            expected: expected.to_string(),
            found,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("'{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some('-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some('/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary minus binds looser than '^', so -x^2 is -(x^2)
    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        const EXPECTED: &str = "a number, 'x', 'y', '(' or a function name";
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            _ => Err(self.syntax(EXPECTED)),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut end = self.pos;
        let digits = |chars: &[char], mut i: usize| {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        end = digits(&self.chars, end);
        if end < self.chars.len() && self.chars[end] == '.' {
            end = digits(&self.chars, end + 1);
        }
        if end < self.chars.len() && (self.chars[end] == 'e' || self.chars[end] == 'E') {
            let mut k = end + 1;
            if k < self.chars.len() && (self.chars[k] == '+' || self.chars[k] == '-') {
                k += 1;
            }
            let after = digits(&self.chars, k);
            if after > k {
                end = after;
            }
        }
        let text: String = self.chars[start..end].iter().collect();
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(Expr::Num(v))
            }
            Err(_) => Err(self.syntax("a decimal literal")),
        }
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        match name.as_str() {
            "x" => return Ok(Expr::X),
            "y" if self.vars == Variables::XY => return Ok(Expr::Y),
            _ => {}
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(Error::UnknownIdentifier {
                name,
                position: start + 1,
            });
        };
        self.expect('(')?;
        let mut args = vec![self.expr()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        if args.len() != func.arity() {
            return Err(Error::Syntax {
                position: self.pos + 1,
                expected: format!("{} argument(s) to {}", func.arity(), func.name()),
                found: format!("{} argument(s)", args.len()),
            });
        }
        self.expect(')')?;
        Ok(Expr::Call(func, args))
    }
}
