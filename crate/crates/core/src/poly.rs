//! Sparse multivariate polynomials over `f64`.
//!
//! Terms live in a `BTreeMap` keyed by [`Monomial`], whose ordering is graded:
//! total degree first, then larger exponents of earlier variables first. For
//! two variables this lists `1, x1, x2, x1^2, x1*x2, x2^2, ...`. Every sum over
//! terms (evaluation, norms, printing) walks that order, so results are
//! reproducible bit for bit.
//!
//! The coefficient norm is
//!
//! ```text
//! ||f|| = max_a |f_a| / multinomial(|a|; a_1, ..., a_n)
//! ```
//!
//! which is the size measure used by the degree and gap bounds in
//! [`crate::bounds`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{argument, Error, Result};

/// Coefficients at or below this magnitude are dropped after `add`, `sub` and `mul`.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-14;

/// Exponent vector `a` of the monomial `x^a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn one(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// The variable `x_{i+1}` (zero-based index).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self::new(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    /// Total degree `|a|`.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.dimension(), other.dimension());
        Monomial::new(
            self.exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .fold(1.0, |acc, (&e, &xi)| acc * xi.powi(e as i32))
    }

    /// `|a|! / (a_1! ... a_n!)`, exact in integers while it fits in `u128`.
    pub fn multinomial(&self) -> f64 {
        multinomial(&self.exponents)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Multinomial coefficient of an exponent vector. Computed as a product of
/// binomials in `u128`; falls back to floating point on overflow.
pub fn multinomial(exponents: &[u32]) -> f64 {
    let mut total: u128 = 0;
    let mut exact: Option<u128> = Some(1);
    for &e in exponents {
        let e = e as u128;
        total += e;
        exact = exact.and_then(|acc| binomial_u128(total, e).and_then(|b| acc.checked_mul(b)));
    }
    if let Some(v) = exact {
        return v as f64;
    }
    let mut running = 0u64;
    exponents.iter().fold(1.0, |acc, &e| {
        running += e as u64;
        acc * binomial_f64(running, e as u64)
    })
}

/// A real polynomial in `n >= 1` variables with finitely many nonzero terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_terms(n, [(Monomial::one(n), c)]).expect("constant has matching dimension")
    }

    /// The variable `x_{i+1}` (zero-based index).
    pub fn variable(n: usize, i: usize) -> Self {
        Self::from_terms(n, [(Monomial::variable(n, i), 1.0)]).expect("variable in range")
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs. Repeated
    /// monomials are summed; exact zeros are dropped.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (m, c) in terms {
            if m.dimension() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.dimension(),
                });
            }
            *map.entry(m).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        Ok(Self { n, terms: map })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Maximum total degree over stored terms; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Monomial::degree)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one(self.n))
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(Monomial::degree);
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|e| e == d),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.evaluate(x)).sum()
    }

    /// `max |a_alpha| / multinomial(alpha)`, zero for the zero polynomial.
    pub fn weighted_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.abs() / m.multinomial())
            .fold(0.0, f64::max)
    }

    /// `2 d n^d ||f||`, an upper bound for `|f|` on `[-1, 1]^n`.
    pub fn sup_bound(&self) -> Result<f64> {
        let d = self.degree();
        if d == 0 {
            return argument("sup bound needs a polynomial of degree at least 1");
        }
        Ok(2.0 * d as f64 * (self.n as f64).powi(d as i32) * self.weighted_norm())
    }

    /// `d^2 n^(d-1) sqrt(n) ||f||`, a Lipschitz constant for `f` on `[-1, 1]^n`
    /// with respect to the Euclidean norm.
    pub fn lipschitz_bound(&self) -> Result<f64> {
        if self.is_zero() {
            return argument("Lipschitz bound needs a nonzero polynomial");
        }
        let d = self.degree() as i32;
        let n = self.n as f64;
        Ok((d * d) as f64 * n.powi(d - 1) * n.sqrt() * self.weighted_norm())
    }

    /// `f(r x)`: each coefficient `a_alpha` becomes `a_alpha r^|alpha|`.
    pub fn rescale(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return argument(format!("rescale factor must be positive, got {r}"));
        }
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), c * r.powi(m.degree() as i32)));
        Self::from_terms(self.n, terms)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    fn pruned(mut self, tol: f64) -> Self {
        self.terms.retain(|_, c| c.abs() > tol);
        self
    }

    /// Drops all terms with `|coefficient| <= tol`.
    pub fn prune(self, tol: f64) -> Self {
        self.pruned(tol)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            *out.terms.entry(m.clone()).or_insert(0.0) += c;
        }
        Ok(out.pruned(DEFAULT_PRUNE_TOL))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut terms: BTreeMap<Monomial, f64> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                *terms.entry(ma.mul(mb)).or_insert(0.0) += ca * cb;
            }
        }
        Ok(Self { n: self.n, terms }.pruned(DEFAULT_PRUNE_TOL))
    }

    pub fn scale(&self, lambda: f64) -> Self {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), c * lambda));
        Self::from_terms(self.n, terms).expect("same dimension")
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.add(&Self::constant(self.n, c)).expect("same dimension")
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::constant(self.n, 1.0);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).expect("same dimension");
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).expect("same dimension");
            }
        }
        acc
    }

    /// Splits `f` into homogeneous components, keyed by degree.
    pub fn homogeneous_parts(&self) -> BTreeMap<u32, Polynomial> {
        let mut parts: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, &c) in &self.terms {
            parts
                .entry(m.degree())
                .or_insert_with(|| Polynomial::zero(self.n))
                .terms
                .insert(m.clone(), c);
        }
        parts
    }

    /// Parses the text grammar with the number of variables inferred from the
    /// largest index that occurs (at least 1).
    pub fn parse(s: &str) -> Result<Self> {
        Parser::new(s).parse(None)
    }

    /// Parses with a declared number of variables.
    pub fn parse_with_dimension(s: &str, n: usize) -> Result<Self> {
        Parser::new(s).parse(Some(n))
    }

    /// Largest variable index (1-based) that occurs in the text, or 0.
    pub fn max_variable_index(s: &str) -> Result<usize> {
        let p = Parser::new(s).parse_terms()?;
        Ok(p.iter()
            .flat_map(|(vars, _)| vars.iter().map(|(i, _)| *i))
            .max()
            .unwrap_or(0))
    }
}

/// `prod_i (1 + deg p_i) * prod_i ||p_i||`, an upper bound on `||p_1 ... p_s||`.
pub fn product_norm_bound(ps: &[Polynomial]) -> Result<f64> {
    let mut bound = 1.0;
    for p in ps {
        if p.is_zero() {
            return argument("product norm bound needs nonzero factors");
        }
        bound *= (1.0 + p.degree() as f64) * p.weighted_norm();
    }
    Ok(bound)
}

pub(crate) fn format_coefficient(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        // highest degree first; within a degree, basis order (x1-heavy first)
        let mut ordered: Vec<(&Monomial, &f64)> = self.terms.iter().collect();
        ordered.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(a.0.cmp(b.0)));
        for (idx, (m, &c)) in ordered.into_iter().enumerate() {
            let negative = c < 0.0;
            match (idx, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            let vars: Vec<String> = m
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                f.write_str(&format_coefficient(a))?;
            } else {
                if a != 1.0 {
                    write!(f, "{}*", format_coefficient(a))?;
                }
                f.write_str(&vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl FromStr for Polynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Polynomial::parse(s)
    }
}

type RawTerm = (Vec<(usize, u32)>, f64);

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            src: s.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.pos + 1,
            message: message.into(),
        })
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

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.digits();
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits().is_empty() {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("invalid number '{text}'"))
            }
        }
    }

    fn unsigned(&mut self, what: &str) -> Result<u64> {
        let d = self.digits();
        if d.is_empty() {
            return self.err(format!("expected {what}"));
        }
        std::str::from_utf8(d)
            .expect("ascii")
            .parse::<u64>()
            .or_else(|_| self.err(format!("{what} out of range")))
    }

    fn factor(&mut self, vars: &mut Vec<(usize, u32)>, coef: &mut f64) -> Result<()> {
        match self.peek() {
            Some(b'x' | b'X') => {
                self.pos += 1;
                let idx = self.unsigned("variable index")? as usize;
                if idx == 0 {
                    return self.err("variables are numbered from x1");
                }
                let mut exp = 1u32;
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.skip_ws();
                    exp = u32::try_from(self.unsigned("exponent")?)
                        .or_else(|_| self.err("exponent out of range"))?;
                }
                vars.push((idx, exp));
                Ok(())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                *coef *= self.number()?;
                Ok(())
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }

    fn parse_terms(mut self) -> Result<Vec<RawTerm>> {
        let mut out = Vec::new();
        let mut first = true;
        loop {
            let mut sign = 1.0;
            match self.peek() {
                Some(b'+') if !first => self.pos += 1,
                Some(b'-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(b'+') => self.pos += 1,
                None if first => return self.err("empty polynomial"),
                _ if !first => return self.err("expected '+' or '-'"),
                _ => {}
            }
            let mut vars = Vec::new();
            let mut coef = sign;
            self.factor(&mut vars, &mut coef)?;
            while self.peek() == Some(b'*') {
                self.pos += 1;
                self.factor(&mut vars, &mut coef)?;
            }
            out.push((vars, coef));
            first = false;
            if self.peek().is_none() {
                return Ok(out);
            }
        }
    }

    fn parse(self, declared: Option<usize>) -> Result<Polynomial> {
        let raw = self.parse_terms()?;
        let max_idx = raw
            .iter()
            .flat_map(|(v, _)| v.iter().map(|(i, _)| *i))
            .max()
            .unwrap_or(0);
        let n = match declared {
            Some(n) if n < max_idx => {
                return argument(format!("variable x{max_idx} exceeds declared dimension {n}"))
            }
            Some(0) => return argument("dimension must be at least 1"),
            Some(n) => n,
            None => max_idx.max(1),
        };
        let terms = raw.into_iter().map(|(vars, c)| {
            let mut e = vec![0u32; n];
            for (i, p) in vars {
                e[i - 1] += p;
            }
            (Monomial::new(e), c)
        });
        Polynomial::from_terms(n, terms)
    }
}
