//! Recursive-descent parser for the functional grammar. Every
//! subexpression evaluates to a finite power sum in `x`.

use crate::error::{Error, Result};
use crate::scalar::{Alpha, Scalar};

/// Power sum `sum c x^{-zeta}` before canonicalization.
#[derive(Debug, Clone)]
pub(crate) struct Poly<T>(pub Vec<(T, T)>);

impl<T: Scalar> Poly<T> {
    fn constant(c: T) -> Self {
        Poly(vec![(c, T::zero())])
    }

    fn as_constant(&self) -> Option<T> {
        let merged = collapse(self.clone());
        match merged.0.as_slice() {
            [] => Some(T::zero()),
            [(c, z)] if *z == T::zero() => Some(*c),
            _ => None,
        }
    }

    fn neg(mut self) -> Self {
        self.0.iter_mut().for_each(|t| t.0 = -t.0);
        self
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.0.len() * other.0.len());
        for &(c1, z1) in &self.0 {
            for &(c2, z2) in &other.0 {
                out.push((c1 * c2, z1 + z2));
            }
        }
        Poly(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
}

fn lex(src: &str) -> Result<Lexer> {
    let chars: Vec<(usize, char)> = src.chars().enumerate().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (col, c) = chars[i];
        let pos = col + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => { toks.push((Tok::Plus, pos)); i += 1 }
            '-' | '\u{2212}' => { toks.push((Tok::Minus, pos)); i += 1 }
            '*' => { toks.push((Tok::Star, pos)); i += 1 }
            '/' => { toks.push((Tok::Slash, pos)); i += 1 }
            '^' => { toks.push((Tok::Caret, pos)); i += 1 }
            '(' => { toks.push((Tok::LParen, pos)); i += 1 }
            ')' => { toks.push((Tok::RParen, pos)); i += 1 }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|p| p.1).collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Parse { pos, msg: format!("malformed number '{text}'") })?;
                toks.push((Tok::Num(v), pos));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                toks.push((Tok::Ident(start, i), pos));
            }
            other => return Err(Error::Parse { pos, msg: format!("unexpected character '{other}'") }),
        }
    }
    Ok(Lexer { toks })
}

pub(crate) struct Parser<T: Scalar> {
    chars: Vec<char>,
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    alpha: Alpha<T>,
}

impl<T: Scalar> Parser<T> {
    pub(crate) fn new(src: &str, alpha: Alpha<T>) -> Result<Self> {
        let lexer = lex(src)?;
        Ok(Self {
            chars: src.chars().collect(),
            toks: lexer.toks,
            at: 0,
            end: src.chars().count() + 1,
            alpha,
        })
    }

    pub(crate) fn parse(mut self) -> Result<Poly<T>> {
        if self.toks.is_empty() {
            return Err(Error::Parse { pos: 1, msg: "empty expression".into() });
        }
        let value = self.expr()?;
        if let Some(&(_, pos)) = self.toks.get(self.at) {
            return Err(Error::Parse { pos, msg: "unexpected trailing input".into() });
        }
        Ok(value)
    }

    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.at).map(|t| t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.1)
    }

    fn bump(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.at).copied();
        self.at += 1;
        t
    }

    fn expr(&mut self) -> Result<Poly<T>> {
        let mut acc = self.term()?;
        while let Some(op @ (Tok::Plus | Tok::Minus)) = self.peek() {
            self.bump();
            let rhs = self.term()?;
            let rhs = if op == Tok::Minus { rhs.neg() } else { rhs };
            acc.0.extend(rhs.0);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly<T>> {
        let mut acc = self.unary()?;
        while let Some(op @ (Tok::Star | Tok::Slash)) = self.peek() {
            let pos = self.pos();
            self.bump();
            let rhs = self.unary()?;
            acc = if op == Tok::Star { acc.mul(&rhs) } else { acc.mul(&reciprocal(rhs, pos)?) };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly<T>> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Some(Tok::Plus) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly<T>> {
        let base = self.primary()?;
        if self.peek() != Some(Tok::Caret) {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exponent = self.unary()?;
        let e = exponent
            .as_constant()
            .ok_or(Error::Parse { pos, msg: "exponent must not depend on x".into() })?;
        raise(base, e, pos)
    }

    fn primary(&mut self) -> Result<Poly<T>> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::Num(v), _)) => Ok(Poly::constant(T::lit(v))),
            Some((Tok::LParen, _)) => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some((Tok::Ident(a, b), _)) => {
                let name: String = self.chars[a..b].iter().collect();
                match name.as_str() {
                    "x" => Ok(Poly(vec![(T::one(), -T::one())])),
                    "alpha" => Ok(Poly::constant(self.alpha.value())),
                    "pi" => Ok(Poly::constant(T::PI())),
                    "gammafn" | "sqrt" | "exp" | "ln" => {
                        if self.peek() != Some(Tok::LParen) {
                            return Err(Error::Parse { pos: self.pos(), msg: format!("expected '(' after {name}") });
                        }
                        self.bump();
                        let arg_pos = self.pos();
                        let arg = self.expr()?;
                        self.expect_rparen()?;
                        let v = arg.as_constant().ok_or(Error::Parse {
                            pos: arg_pos,
                            msg: format!("argument of {name} must not depend on x"),
                        })?;
                        let out = match name.as_str() {
                            "gammafn" => v.gamma(),
                            "sqrt" => v.sqrt(),
                            "exp" => v.exp(),
                            _ => v.ln(),
                        };
                        if !out.is_finite() {
                            return Err(Error::Parse { pos, msg: format!("{name}({v}) is not finite") });
                        }
                        Ok(Poly::constant(out))
                    }
                    _ => Err(Error::Parse { pos, msg: format!("unknown identifier '{name}'") }),
                }
            }
            Some((_, p)) => Err(Error::Parse { pos: p, msg: "expected a number, x, a constant or '('".into() }),
            None => Err(Error::Parse { pos, msg: "unexpected end of input".into() }),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some((Tok::RParen, _)) => Ok(()),
            _ => Err(Error::Parse { pos, msg: "expected ')'".into() }),
        }
    }
}

fn collapse<T: Scalar>(p: Poly<T>) -> Poly<T> {
    let mut terms = p.0;
    terms.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<(T, T)> = Vec::with_capacity(terms.len());
    for (c, z) in terms {
        match out.last_mut() {
            Some(last) if same_exponent(last.1, z) => last.0 = last.0 + c,
            _ => out.push((c, z)),
        }
    }
    out.retain(|t| t.0 != T::zero());
    Poly(out)
}

pub(crate) fn same_exponent<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(8.0) * T::epsilon() * T::one().max(a.abs()).max(b.abs())
}

fn reciprocal<T: Scalar>(p: Poly<T>, pos: usize) -> Result<Poly<T>> {
    let p = collapse(p);
    match p.0.as_slice() {
        [(c, z)] => Ok(Poly(vec![(c.recip(), -*z)])),
        [] => Err(Error::Parse { pos, msg: "division by zero".into() }),
        _ => Err(Error::Parse { pos, msg: "divisor must be a single power of x".into() }),
    }
}

fn raise<T: Scalar>(base: Poly<T>, e: T, pos: usize) -> Result<Poly<T>> {
    let base = collapse(base);
    if let [(c, z)] = base.0.as_slice() {
        let c = *c;
        let is_int = e == e.round();
        if c < T::zero() && !is_int {
            return Err(Error::Parse { pos, msg: "negative base with a fractional exponent".into() });
        }
        let v = if c < T::zero() {
            let mag = (-c).powf(e);
            if (e / T::lit(2.0)).fract() == T::zero() { mag } else { -mag }
        } else {
            c.powf(e)
        };
        return Ok(Poly(vec![(v, *z * e)]));
    }
    if base.0.is_empty() {
        return if e > T::zero() {
            Ok(Poly(Vec::new()))
        } else {
            Err(Error::Parse { pos, msg: "zero raised to a non-positive power".into() })
        };
    }
    if e >= T::zero() && e == e.round() && e <= T::lit(16.0) {
        let k = e.as_f64() as usize;
        let mut acc = Poly::constant(T::one());
        for _ in 0..k {
            acc = collapse(acc.mul(&base));
        }
        return Ok(acc);
    }
    Err(Error::Parse {
        pos,
        msg: "a sum of powers can only be raised to a non-negative integer exponent up to 16".into(),
    })
}

pub(crate) fn canonical<T: Scalar>(p: Poly<T>) -> Vec<(T, T)> {
    collapse(p).0
}
