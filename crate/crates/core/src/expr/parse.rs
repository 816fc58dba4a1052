//! Recursive descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor ('*' factor)*
//! factor   := '-' factor | atom ('^' exponent)?
//! exponent := '-'? integer | '(' '-'? integer ')'
//! atom     := number | 'x' | 'y' | '(' expr ')' | func '(' expr ')'
//! func     := 'sin' | 'cos' | 'exp'
//! number   := integer | integer '/' integer | decimal
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)`.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{simplify, Expr, ExprError, Rational, Var};

/// Largest exponent magnitude accepted after `^`.
const MAX_EXPONENT: i64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Int(BigInt),
    Decimal(Rational),
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
            Token::Int(n) => format!("integer {n}"),
            Token::Decimal(_) => "decimal".to_string(),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Plus => "'+'".to_string(),
            Token::Minus => "'-'".to_string(),
            Token::Star => "'*'".to_string(),
            Token::Slash => "'/'".to_string(),
            Token::Caret => "'^'".to_string(),
            Token::LParen => "'('".to_string(),
            Token::RParen => "')'".to_string(),
        }
    }
}

fn syntax(position: usize, expected: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        position,
        expected: expected.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Token::Plus, start)),
            b'-' => out.push((Token::Minus, start)),
            b'*' => out.push((Token::Star, start)),
            b'/' => out.push((Token::Slash, start)),
            b'^' => out.push((Token::Caret, start)),
            b'(' => out.push((Token::LParen, start)),
            b')' => out.push((Token::RParen, start)),
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let int_part = &text[start..i];
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let frac = &text[frac_start..i];
                    if int_part.is_empty() && frac.is_empty() {
                        return Err(syntax(start, "a number"));
                    }
                    let digits = format!("{int_part}{frac}");
                    let numer: BigInt = digits.parse().expect("ascii digits");
                    let denom = num_traits::pow(BigInt::from(10), frac.len());
                    out.push((Token::Decimal(Rational::new(numer, denom)), start));
                } else {
                    out.push((Token::Int(int_part.parse().expect("ascii digits")), start));
                }
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
                let ch = text[start..].chars().next().unwrap();
                return Err(syntax(
                    start,
                    format!("an operator, number or name, found `{ch}`"),
                ));
            }
        }
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
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&want.describe())),
        }
    }

    fn unexpected(&self, expected: &str) -> ExprError {
        match self.peek() {
            Some(t) => syntax(self.offset(), format!("{expected}, found {}", t.describe())),
            None => syntax(self.end, format!("{expected}, found end of input")),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    terms.push(Expr::neg_raw(self.term()?));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.factor()?];
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().unwrap()
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expr::neg_raw(self.factor()?));
        }
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            let n = self.exponent()?;
            return Ok(Expr::Power(Box::new(base), n));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i64, ExprError> {
        let parenthesized = matches!(self.peek(), Some(Token::LParen));
        if parenthesized {
            self.pos += 1;
        }
        let negative = matches!(self.peek(), Some(Token::Minus));
        if negative {
            self.pos += 1;
        }
        let at = self.offset();
        let value = match self.peek() {
            Some(Token::Int(n)) => {
                let n = n.clone();
                self.pos += 1;
                n
            }
            _ => return Err(self.unexpected("an integer exponent")),
        };
        let value = if negative { -value } else { value };
        let n = i64::try_from(&value)
            .ok()
            .filter(|n| n.abs() <= MAX_EXPONENT)
            .ok_or_else(|| {
                syntax(
                    at,
                    format!("an exponent of magnitude at most {MAX_EXPONENT}"),
                )
            })?;
        if parenthesized {
            self.expect(Token::RParen)?;
        }
        Ok(n)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.bump() {
            Some(Token::Int(numer)) => {
                if let Some(Token::Slash) = self.peek() {
                    self.pos += 1;
                    let denom_at = self.offset();
                    match self.bump() {
                        Some(Token::Int(denom)) if !denom.is_zero() => {
                            Ok(Expr::Constant(Rational::new(numer, denom)))
                        }
                        Some(Token::Int(_)) => Err(syntax(denom_at, "a nonzero denominator")),
                        _ => {
                            self.pos -= 1;
                            Err(self.unexpected("an integer denominator"))
                        }
                    }
                } else {
                    Ok(Expr::Constant(Rational::from_integer(numer)))
                }
            }
            Some(Token::Decimal(r)) => Ok(Expr::Constant(r)),
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::Variable(Var::X)),
                "y" => Ok(Expr::Variable(Var::Y)),
                "sin" | "cos" | "exp" => {
                    self.expect(Token::LParen)?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        _ => Expr::ExpFn(arg),
                    })
                }
                _ => Err(ExprError::UnknownIdentifier { name, position: at }),
            },
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(_) => {
                self.pos -= 1;
                Err(self.unexpected("a number, variable, function or '('"))
            }
            None => Err(syntax(
                self.end,
                "a number, variable, function or '(', found end of input",
            )),
        }
    }
}

/// Parses `text` and returns its canonical form.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let raw = parse_raw(text)?;
    Ok(simplify(&raw))
}

/// Parses without canonicalizing.
pub(crate) fn parse_raw(text: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    if parser.tokens.is_empty() {
        return Err(syntax(0, "an expression, found end of input"));
    }
    let e = parser.expr()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.unexpected("an operator or end of input"));
    }
    Ok(e)
}
