//! A small expression language in one variable `x`.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'e' | 'pi' | ('exp' | 'log') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)` and `2^-x` is `2^(-x)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0, end: text.len() };
        let expr = parser.expr()?;
        match parser.peek() {
            None => Ok(expr),
            Some((tok, pos)) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected {}", tok.describe()),
            }),
        }
    }

    /// The form `parse` produces: a negated non-negative literal becomes a
    /// negative literal. Evaluation is unchanged bit for bit.
    pub fn normalized(&self) -> Expr {
        let un = |a: &Expr| Box::new(a.normalized());
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::X => Expr::X,
            Expr::Neg(a) => negate(a.normalized()),
            Expr::Add(a, b) => Expr::Add(un(a), un(b)),
            Expr::Sub(a, b) => Expr::Sub(un(a), un(b)),
            Expr::Mul(a, b) => Expr::Mul(un(a), un(b)),
            Expr::Div(a, b) => Expr::Div(un(a), un(b)),
            Expr::Pow(a, b) => Expr::Pow(un(a), un(b)),
            Expr::Exp(a) => Expr::Exp(un(a)),
            Expr::Log(a) => Expr::Log(un(a)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Log(a) => a.eval(x).ln(),
        }
    }

    /// Every denominator subtree, in evaluation order.
    pub fn denominators(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        self.collect_denominators(&mut out);
        out
    }

    fn collect_denominators<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Num(_) | Expr::X => {}
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) => a.collect_denominators(out),
            Expr::Div(a, b) => {
                a.collect_denominators(out);
                out.push(b);
                b.collect_denominators(out);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Pow(a, b) => {
                a.collect_denominators(out);
                b.collect_denominators(out);
            }
        }
    }

    pub fn depends_on_x(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X => true,
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) => a.depends_on_x(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on_x() || b.depends_on_x(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(v) if v.is_sign_negative() => 3,
            _ => 5,
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Num(v) if !v.is_sign_negative() => Expr::Num(-v),
        other => Expr::Neg(Box::new(other)),
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimal parentheses that reproduce the same tree on
/// re-parsing. Literals use the shortest representation that round-trips.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{:?}", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            Expr::X => write!(f, "x"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, a.precedence() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                write_operand(f, a, a.precedence() < 1)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                write_operand(f, b, b.precedence() <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                write_operand(f, a, a.precedence() < 2)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                write_operand(f, b, b.precedence() <= 2)
            }
            Expr::Pow(a, b) => {
                write_operand(f, a, a.precedence() <= 4)?;
                write!(f, "^")?;
                write_operand(f, b, b.precedence() < 3)
            }
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Log(a) => write!(f, "log({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Num(v) => format!("number {v}"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "`+`".into(),
            Token::Minus => "`-`".into(),
            Token::Star => "`*`".into(),
            Token::Slash => "`/`".into(),
            Token::Caret => "`^`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Token::Plus,
            b'-' => Token::Minus,
            b'*' => Token::Star,
            b'/' => Token::Slash,
            b'^' => Token::Caret,
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent only when followed by a digit (optionally signed),
                // so that `2e` stays a literal followed by the constant e
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
                let lit = &text[start..i];
                let v: f64 = lit.parse().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number `{lit}`"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: format!("number `{lit}` is not finite"),
                    });
                }
                out.push((Token::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Token::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<(Token, usize)> {
        self.tokens.get(self.pos).cloned()
    }

    fn next(&mut self) -> Option<(Token, usize)> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.1)
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some((tok, _)) if tok == want => Ok(()),
            Some((tok, pos)) => Err(Error::Syntax {
                pos,
                msg: format!("expected {}, found {}", want.describe(), tok.describe()),
            }),
            None => Err(Error::Syntax {
                pos: self.end,
                msg: format!("expected {}, found end of input", want.describe()),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((Token::Plus, _)) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some((Token::Minus, _)) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some((Token::Star, _)) => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some((Token::Slash, _)) => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some((Token::Minus, _)) = self.peek() {
            self.pos += 1;
            return Ok(negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some((Token::Caret, _)) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.here();
        match self.next() {
            Some((Token::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some((Token::Ident(name), pos)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "exp" | "log" => {
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(if name == "exp" {
                        Expr::Exp(Box::new(arg))
                    } else {
                        Expr::Log(Box::new(arg))
                    })
                }
                _ => Err(Error::UnknownIdentifier { name, pos }),
            },
            Some((tok, pos)) => Err(Error::Syntax {
                pos,
                msg: format!("unexpected {}", tok.describe()),
            }),
            None => Err(Error::Syntax {
                pos: at,
                msg: "unexpected end of input".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_examples() {
        assert_eq!(Expr::parse("x+1").unwrap().eval(2.0), 3.0);
        let e = Expr::parse("exp(2*x)").unwrap();
        assert_eq!(e.eval(0.0), 1.0);
        assert!((e.eval(1.0) - 7.389_056_098_930_65).abs() < 1e-12);
        assert_eq!(Expr::parse("1/(x+1)").unwrap().eval(1.0), 0.5);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(Expr::parse("-x^2").unwrap().eval(3.0), -9.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0), 512.0);
        assert_eq!(Expr::parse("2^-1").unwrap().eval(0.0), 0.5);
        assert_eq!(Expr::parse("8/4/2").unwrap().eval(0.0), 1.0);
        assert_eq!(Expr::parse("1-2-3").unwrap().eval(0.0), -4.0);
        assert_eq!(Expr::parse("2*e").unwrap().eval(0.0), 2.0 * std::f64::consts::E);
        assert_eq!(Expr::parse("1.5e2").unwrap().eval(0.0), 150.0);
        assert!((Expr::parse("log(exp(x))").unwrap().eval(0.25) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        match Expr::parse("x + * 2") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match Expr::parse("sin(x)") {
            Err(Error::UnknownIdentifier { name, pos }) => {
                assert_eq!(name, "sin");
                assert_eq!(pos, 0);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Expr::parse("(x+1"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(Expr::parse("x $"), Err(Error::Syntax { pos: 2, .. })));
        assert!(matches!(Expr::parse(""), Err(Error::Syntax { pos: 0, .. })));
        assert!(matches!(Expr::parse("1e999"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn denominators_are_collected() {
        let e = Expr::parse("1/(x+1) + x/(2*x+3)").unwrap();
        let d = e.denominators();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].eval(1.0), 2.0);
        assert_eq!(d[1].eval(1.0), 5.0);
    }

    #[test]
    fn printing_examples() {
        for src in ["x+1", "1/(x+1)", "exp(2*x)", "-x^2", "(-x)^2", "x-(1-x)", "2^-x", "(x^2)^3"] {
            let e = Expr::parse(src).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
        assert_eq!(Expr::parse("x-(1-x)").unwrap().to_string(), "x-(1.0-x)");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::X),
            (-1e3f64..1e3).prop_map(Expr::Num),
            Just(Expr::Num(-0.0)),
            (0u32..20).prop_map(|v| Expr::Num(v as f64 / 4.0)),
        ];
        leaf.prop_recursive(5, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Pow(Box::new(a), Box::new(b))),
                inner.clone().prop_map(|a| Expr::Exp(Box::new(a))),
                inner.prop_map(|a| Expr::Log(Box::new(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip_is_bit_exact(e in arb_expr(), xs in prop::collection::vec(0.0f64..100.0, 1000)) {
            let back = Expr::parse(&e.to_string()).unwrap();
            prop_assert_eq!(&back, &e.normalized());
            for x in xs {
                prop_assert_eq!(back.eval(x).to_bits(), e.eval(x).to_bits());
            }
        }
    }
}
