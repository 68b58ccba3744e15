//! Polynomial expressions for config values: `0.3`, `0.1*u - 0.2i`,
//! `x0^2 + (0.5+0.1i)*u*x1*x2`.
//!
//! Variables are `u`, `v` (base coordinates; `t` is an alias of `u`) and
//! `x0, x1, …` (homogeneous coordinates). Division is by constants only.

use std::collections::BTreeMap;
use std::fmt;

use henon_skew_core::{CoeffMap, HomogPoly};
use num_complex::Complex64;

/// Exponent vector `[u, v, x0, x1, …]` with trailing zeros trimmed.
type Key = Vec<u32>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    terms: BTreeMap<Key, Complex64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprError {
    pub input: String,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "in `{}`: {}", self.input, self.message)
    }
}

impl std::error::Error for ExprError {}

fn trim(mut k: Key) -> Key {
    while k.last() == Some(&0) {
        k.pop();
    }
    k
}

impl Poly {
    pub fn constant(c: Complex64) -> Self {
        let mut terms = BTreeMap::new();
        if c != Complex64::new(0.0, 0.0) {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }

    fn var(index: usize) -> Self {
        let mut k = vec![0; index + 1];
        k[index] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(k, Complex64::new(1.0, 0.0));
        Poly { terms }
    }

    fn add(mut self, o: &Poly, sign: f64) -> Poly {
        for (k, c) in &o.terms {
            let e = self.terms.entry(k.clone()).or_insert(Complex64::new(0.0, 0.0));
            *e += c * sign;
        }
        self.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        self
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                let n = ka.len().max(kb.len());
                let k: Key = (0..n)
                    .map(|i| ka.get(i).copied().unwrap_or(0) + kb.get(i).copied().unwrap_or(0))
                    .collect();
                let e = out.terms.entry(trim(k)).or_insert(Complex64::new(0.0, 0.0));
                *e += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }

    fn as_constant(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    /// Largest homogeneous-variable index used, if any.
    pub fn max_x_index(&self) -> Option<usize> {
        self.terms.keys().filter(|k| k.len() > 2).map(|k| k.len() - 3).max()
    }

    /// As a base-dependent coefficient; fails if any `x_i` occurs.
    pub fn to_coeff_map(&self) -> Result<CoeffMap, String> {
        if self.max_x_index().is_some() {
            return Err("homogeneous variables are not allowed here".into());
        }
        let mut m = CoeffMap::zero();
        for (k, c) in &self.terms {
            let e1 = k.first().copied().unwrap_or(0);
            let e2 = k.get(1).copied().unwrap_or(0);
            m = m + CoeffMap::monomial(*c, e1, e2);
        }
        Ok(m)
    }

    /// As a polynomial in `x_0..x_k` with base-dependent coefficients.
    pub fn to_homog(&self, k: usize) -> Result<HomogPoly, String> {
        if let Some(i) = self.max_x_index() {
            if i > k {
                return Err(format!("x{i} exceeds k = {k}"));
            }
        }
        let mut grouped: BTreeMap<Vec<u32>, CoeffMap> = BTreeMap::new();
        for (key, c) in &self.terms {
            let xs: Vec<u32> = (0..=k).map(|i| key.get(i + 2).copied().unwrap_or(0)).collect();
            let e1 = key.first().copied().unwrap_or(0);
            let e2 = key.get(1).copied().unwrap_or(0);
            let entry = grouped.entry(xs).or_insert_with(CoeffMap::zero);
            *entry = entry.clone() + CoeffMap::monomial(*c, e1, e2);
        }
        Ok(HomogPoly::new(grouped.into_iter().collect()))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
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
            let v: f64 = text.parse().map_err(|_| format!("bad number `{text}`"))?;
            if i < chars.len() && chars[i] == 'i' && !chars.get(i + 1).is_some_and(|c| c.is_alphanumeric()) {
                out.push(Tok::Imag(v));
                i += 1;
            } else {
                out.push(Tok::Num(v));
            }
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.toks.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Poly, String> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = acc.add(&rhs, if op == '+' { 1.0 } else { -1.0 });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly, String> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' {
                acc.mul(&rhs)
            } else {
                let c = rhs.as_constant().ok_or("division by a non-constant")?;
                if c == Complex64::new(0.0, 0.0) {
                    return Err("division by zero".into());
                }
                acc.mul(&Poly::constant(1.0 / c))
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Poly, String> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Poly::default().add(&self.unary()?, -1.0))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, String> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = match self.toks.get(self.pos) {
                Some(Tok::Num(v)) if *v >= 0.0 && v.fract() == 0.0 && *v <= 64.0 => *v as u32,
                _ => return Err("exponent must be a non-negative integer ≤ 64".into()),
            };
            self.pos += 1;
            let mut out = Poly::constant(Complex64::new(1.0, 0.0));
            for _ in 0..e {
                out = out.mul(&base);
            }
            return Ok(out);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, String> {
        let tok = self.toks.get(self.pos).cloned().ok_or("unexpected end of expression")?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Poly::constant(Complex64::new(v, 0.0))),
            Tok::Imag(v) => Ok(Poly::constant(Complex64::new(0.0, v))),
            Tok::Op('(') => {
                let inner = self.expr()?;
                if self.peek_op() != Some(')') {
                    return Err("missing `)`".into());
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Poly::constant(Complex64::new(0.0, 1.0))),
                "u" | "t" => Ok(Poly::var(0)),
                "v" => Ok(Poly::var(1)),
                _ => {
                    let idx = name
                        .strip_prefix('x')
                        .and_then(|d| d.parse::<usize>().ok())
                        .ok_or_else(|| format!("unknown variable `{name}`"))?;
                    Ok(Poly::var(idx + 2))
                }
            },
            Tok::Op(c) => Err(format!("unexpected `{c}`")),
        }
    }
}

pub fn parse(input: &str) -> Result<Poly, ExprError> {
    let err = |message: String| ExprError {
        input: input.to_string(),
        message,
    };
    let toks = lex(input).map_err(err)?;
    if toks.is_empty() {
        return Err(err("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0 };
    let out = p.expr().map_err(err)?;
    if p.pos != p.toks.len() {
        return Err(err("trailing input".into()));
    }
    Ok(out)
}

/// A constant complex value, e.g. `0.5`, `-0.3+0.1i`, `2i`.
pub fn parse_complex(input: &str) -> Result<Complex64, ExprError> {
    parse(input)?.as_constant().ok_or_else(|| ExprError {
        input: input.to_string(),
        message: "expected a constant".into(),
    })
}
