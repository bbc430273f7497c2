//! Expression trees over a single variable `x`.
//!
//! The grammar is deliberately small: literal reals, the variable `x`, the
//! binary operators `+ - * / ^`, unary `-`, and the functions `exp` and `ln`.
//! Precedence, tightest first: `^`, unary `-`, `* /`, `+ -`; `^` is
//! right-associative, so `x^2^3` means `x^(2^3)`.
//!
//! Trees round-trip through text: `parse(&e.to_string())` is structurally
//! equal to `e` for every tree the parser can produce. The parser folds a
//! unary minus applied to a literal into a negative literal so that printed
//! negative numbers re-parse to the same tree.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Literal(f64),
    /// The variable `x`.
    Var,
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    /// `Pow(base, exponent)`, right-associative in the grammar.
    Pow(Box<Expression>, Box<Expression>),
    Exp(Box<Expression>),
    Ln(Box<Expression>),
}

impl Expression {
    /// Evaluates the tree at `x` with IEEE semantics; out-of-domain
    /// operations (`ln` of a negative, division by zero) yield non-finite
    /// values which callers are expected to reject.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expression::Literal(v) => *v,
            Expression::Var => x,
            Expression::Neg(e) => -e.eval(x),
            Expression::Add(a, b) => a.eval(x) + b.eval(x),
            Expression::Sub(a, b) => a.eval(x) - b.eval(x),
            Expression::Mul(a, b) => a.eval(x) * b.eval(x),
            Expression::Div(a, b) => a.eval(x) / b.eval(x),
            Expression::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expression::Exp(e) => e.eval(x).exp(),
            Expression::Ln(e) => e.eval(x).ln(),
        }
    }

    /// The symbolic first derivative with respect to `x`.
    pub fn derivative(&self) -> Expression {
        match self {
            Expression::Literal(_) => Expression::Literal(0.0),
            Expression::Var => Expression::Literal(1.0),
            Expression::Neg(e) => neg(e.derivative()),
            Expression::Add(a, b) => add(a.derivative(), b.derivative()),
            Expression::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expression::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expression::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                mul((**b).clone(), (**b).clone()),
            ),
            Expression::Pow(base, expo) => match **expo {
                // Power rule for constant exponents keeps trees small and
                // avoids ln(base) outside its domain.
                Expression::Literal(k) => mul(
                    mul(
                        Expression::Literal(k),
                        pow((**base).clone(), Expression::Literal(k - 1.0)),
                    ),
                    base.derivative(),
                ),
                // General case: d(u^v) = u^v * (v' ln u + v u' / u).
                _ => mul(
                    pow((**base).clone(), (**expo).clone()),
                    add(
                        mul(expo.derivative(), ln((**base).clone())),
                        div(mul((**expo).clone(), base.derivative()), (**base).clone()),
                    ),
                ),
            },
            Expression::Exp(e) => mul(exp((**e).clone()), e.derivative()),
            Expression::Ln(e) => div(e.derivative(), (**e).clone()),
        }
    }

    /// Precedence level used by the printer; higher binds tighter.
    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(_) => 3,
            Expression::Literal(v) if *v < 0.0 => 3,
            Expression::Pow(..) => 4,
            _ => 5,
        }
    }
}

/// Computes the `order`-th symbolic derivative (`order` must be 1 or 2).
pub fn differentiate(expr: &Expression, order: u32) -> Result<Expression> {
    match order {
        1 => Ok(expr.derivative()),
        2 => Ok(expr.derivative().derivative()),
        _ => Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        ))),
    }
}

// Simplifying constructors. These fold identities and finite constant
// subtrees so second derivatives stay readable and cheap to evaluate.

fn lit(v: f64) -> Expression {
    Expression::Literal(v)
}

fn is_lit(e: &Expression, v: f64) -> bool {
    matches!(e, Expression::Literal(l) if *l == v)
}

fn neg(e: Expression) -> Expression {
    match e {
        Expression::Literal(v) => lit(-v),
        Expression::Neg(inner) => *inner,
        other => Expression::Neg(Box::new(other)),
    }
}

fn add(a: Expression, b: Expression) -> Expression {
    if is_lit(&a, 0.0) {
        return b;
    }
    if is_lit(&b, 0.0) {
        return a;
    }
    if let (Expression::Literal(x), Expression::Literal(y)) = (&a, &b) {
        let v = x + y;
        if v.is_finite() {
            return lit(v);
        }
    }
    Expression::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expression, b: Expression) -> Expression {
    if is_lit(&b, 0.0) {
        return a;
    }
    if is_lit(&a, 0.0) {
        return neg(b);
    }
    if let (Expression::Literal(x), Expression::Literal(y)) = (&a, &b) {
        let v = x - y;
        if v.is_finite() {
            return lit(v);
        }
    }
    Expression::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expression, b: Expression) -> Expression {
    if is_lit(&a, 0.0) || is_lit(&b, 0.0) {
        return lit(0.0);
    }
    if is_lit(&a, 1.0) {
        return b;
    }
    if is_lit(&b, 1.0) {
        return a;
    }
    if let (Expression::Literal(x), Expression::Literal(y)) = (&a, &b) {
        let v = x * y;
        if v.is_finite() {
            return lit(v);
        }
    }
    Expression::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expression, b: Expression) -> Expression {
    if is_lit(&b, 1.0) {
        return a;
    }
    if is_lit(&a, 0.0) && !is_lit(&b, 0.0) {
        return lit(0.0);
    }
    Expression::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expression, b: Expression) -> Expression {
    if is_lit(&b, 1.0) {
        return a;
    }
    if is_lit(&b, 0.0) {
        return lit(1.0);
    }
    Expression::Pow(Box::new(a), Box::new(b))
}

fn exp(e: Expression) -> Expression {
    Expression::Exp(Box::new(e))
}

fn ln(e: Expression) -> Expression {
    Expression::Ln(Box::new(e))
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // `child` parenthesizes when the child binds no tighter than `min`.
        fn child(f: &mut fmt::Formatter<'_>, e: &Expression, min: u8) -> fmt::Result {
            if e.precedence() < min {
                write!(f, "(")?;
                fmt::Display::fmt(e, f)?;
                write!(f, ")")
            } else {
                fmt::Display::fmt(e, f)
            }
        }
        match self {
            Expression::Literal(v) => write!(f, "{v}"),
            Expression::Var => write!(f, "x"),
            Expression::Neg(e) => {
                write!(f, "-")?;
                child(f, e, 3)
            }
            Expression::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Expression::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Expression::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, " * ")?;
                child(f, b, 3)
            }
            Expression::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, " / ")?;
                child(f, b, 3)
            }
            Expression::Pow(a, b) => {
                child(f, a, 5)?;
                write!(f, "^")?;
                // Right-associative: a bare `^` chain on the right re-parses
                // to the same tree; anything looser gets parentheses.
                child(f, b, 4)
            }
            Expression::Exp(e) => write!(f, "exp({e})"),
            Expression::Ln(e) => write!(f, "ln({e})"),
        }
    }
}

/// Parses expression source text into a tree.
///
/// Errors carry the byte offset of the offending token.
pub fn parse_expression(src: &str) -> Result<Expression> {
    if src.trim().is_empty() {
        return Err(Error::Syntax {
            offset: 0,
            message: "empty expression".into(),
        });
    }
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let expr = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(Error::Syntax {
            offset: parser.pos,
            message: format!("unexpected `{}`", parser.rest_head()),
        });
    }
    Ok(expr)
}

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

    fn rest_head(&self) -> String {
        let rest = &self.src[self.pos..];
        let take = rest.len().min(8);
        String::from_utf8_lossy(&rest[..take]).into_owned()
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == b'+' {
                Expression::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expression::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == b'*' {
                Expression::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expression::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Expression> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.unary()?;
            // Fold so that printed negative literals round-trip structurally.
            return Ok(match inner {
                Expression::Literal(v) => Expression::Literal(-v),
                other => Expression::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    // power := atom ('^' unary)?   -- right-associative, exponent may be signed
    fn power(&mut self) -> Result<Expression> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let expo = self.unary()?;
            return Ok(Expression::Pow(Box::new(base), Box::new(expo)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expression> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(Error::Syntax {
                offset: self.pos,
                message: format!("unexpected `{}`", self.rest_head()),
            }),
            None => Err(Error::Syntax {
                offset: self.pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    // number := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
    fn number(&mut self) -> Result<Expression> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                // Not an exponent after all (e.g. `2e` would be malformed);
                // report at the `e` rather than consuming it silently.
                self.pos = mark;
                return Err(Error::Syntax {
                    offset: mark,
                    message: "expected exponent digits".into(),
                });
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expression::Literal)
            .map_err(|_| Error::Syntax {
                offset: start,
                message: format!("invalid number `{text}`"),
            })
    }

    fn identifier(&mut self) -> Result<Expression> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .to_owned();
        match name.as_str() {
            "x" => Ok(Expression::Var),
            "exp" | "ln" => {
                if self.peek() != Some(b'(') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: format!("expected `(` after `{name}`"),
                    });
                }
                self.pos += 1;
                let arg = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Syntax {
                        offset: self.pos,
                        message: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(if name == "exp" {
                    Expression::Exp(Box::new(arg))
                } else {
                    Expression::Ln(Box::new(arg))
                })
            }
            _ => Err(Error::UnknownIdentifier {
                name,
                offset: start,
            }),
        }
    }
}
