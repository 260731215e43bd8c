//! Text form of periodic expressions.
//!
//! ```text
//! expr   := sign? term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | 'pi' | 'e' | 'exp' '(' sign? number ')' | wave '(' integer ')'
//! wave   := sin | cos | sin2 | cos2 | abssin | abscos
//! ```
//!
//! `sin2(k)` is `sin(k pi t)^2`, `abscos(k)` is `|cos(k pi t)|`, and so on.
//! A term holds at most one wave, which may not appear in a divisor.

use std::f64::consts::{E, PI};

use periodyn::model::{PeriodicExpr, Term, Wave};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("column {column}: {message}")]
pub struct ExprError {
    /// 1-based character column inside the expression.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        column,
        message: message.into(),
    })
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            match text.parse::<f64>() {
                Ok(v) => out.push((col, Tok::Num(v))),
                Err(_) => return err(col, format!("malformed number '{text}'")),
            }
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().collect())));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' => Tok::Op(c),
                '(' => Tok::Open,
                ')' => Tok::Close,
                _ => return err(col, format!("unexpected character '{c}'")),
            };
            out.push((col, tok));
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(c, _)| *c)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        let col = self.column();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => err(col, format!("expected {what}")),
        }
    }

    fn signed_number(&mut self) -> Result<f64, ExprError> {
        let mut sign = 1.0;
        if let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            if *c == '-' {
                sign = -1.0;
            }
            self.pos += 1;
        }
        let col = self.column();
        match self.next() {
            Some(Tok::Num(v)) => Ok(sign * v),
            _ => err(col, "expected a number"),
        }
    }

    /// Returns the factor's value, or the wave it names.
    fn factor(&mut self) -> Result<(f64, Option<(Wave, u32)>), ExprError> {
        let col = self.column();
        match self.next() {
            Some(Tok::Num(v)) => Ok((v, None)),
            Some(Tok::Ident(name)) => match name.as_str() {
                "pi" => Ok((PI, None)),
                "e" => Ok((E, None)),
                "exp" => {
                    self.expect(Tok::Open, "'(' after exp")?;
                    let v = self.signed_number()?;
                    self.expect(Tok::Close, "')'")?;
                    Ok((v.exp(), None))
                }
                _ => {
                    let Some(wave) = Wave::from_name(&name) else {
                        return err(col, format!("unknown name '{name}'"));
                    };
                    self.expect(Tok::Open, &format!("'(' after {name}"))?;
                    let kcol = self.column();
                    let k = match self.next() {
                        Some(Tok::Num(v)) if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => v as u32,
                        _ => return err(kcol, "wave frequency must be a positive integer"),
                    };
                    self.expect(Tok::Close, "')'")?;
                    Ok((1.0, Some((wave, k))))
                }
            },
            _ => err(col, "expected a number, constant or wave"),
        }
    }

    fn term(&mut self) -> Result<Term, ExprError> {
        let (mut coef, mut wave) = self.factor()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let col = self.column();
            let (v, w) = self.factor()?;
            if let Some(w) = w {
                if op == '/' {
                    return err(col, "a wave cannot be a divisor");
                }
                if wave.is_some() {
                    return err(col, "at most one wave per term");
                }
                wave = Some(w);
            } else if op == '*' {
                coef *= v;
            } else {
                coef /= v;
            }
        }
        Ok(match wave {
            None => Term::Const(coef),
            Some((wave, k)) => Term::Wave { amp: coef, wave, k },
        })
    }
}

fn negate(term: Term) -> Term {
    match term {
        Term::Const(c) => Term::Const(-c),
        Term::Wave { amp, wave, k } => Term::Wave { amp: -amp, wave, k },
    }
}

pub fn parse_expr(src: &str) -> Result<PeriodicExpr, ExprError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return err(1, "empty expression");
    }
    let mut p = Parser {
        toks,
        pos: 0,
        end: src.chars().count() + 1,
    };
    let mut terms = Vec::new();
    let mut negative = false;
    if let Some(Tok::Op(c @ ('+' | '-'))) = p.peek() {
        negative = *c == '-';
        p.pos += 1;
    }
    loop {
        let term = p.term()?;
        terms.push(if negative { negate(term) } else { term });
        match p.peek() {
            None => break,
            Some(Tok::Op(c @ ('+' | '-'))) => {
                negative = *c == '-';
                p.pos += 1;
            }
            Some(_) => return err(p.column(), "expected '+', '-' or end of expression"),
        }
    }
    // "0" is how the empty sum prints
    if src.trim() == "0" {
        return Ok(PeriodicExpr::zero());
    }
    Ok(PeriodicExpr::from_terms(terms))
}
