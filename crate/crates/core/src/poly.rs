//! Exact multivariate polynomials over the rationals, boxes, and polynomial constraints.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("invalid interval [{lower}, {upper}] in dimension {dim}")]
    InvalidInterval { dim: usize, lower: String, upper: String },
    #[error("invalid rational literal `{0}`")]
    BadLiteral(String),
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `3`, `-3`, `3.25`, `7/2` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, PolyError> {
    let bad = || PolyError::BadLiteral(text.to_string());
    let t = text.trim();
    if let Some((num, den)) = t.split_once('/') {
        let n = parse_rational(num)?;
        let d = parse_rational(den)?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(n / d);
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit() || c == '.') {
        return Err(bad());
    }
    let value = match body.split_once('.') {
        Some((int, frac)) => {
            if frac.contains('.') || (int.is_empty() && frac.is_empty()) {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            let n: BigInt = digits.parse().map_err(|_| bad())?;
            let d = num_traits::pow(BigInt::from(10), frac.len());
            Rational::new(n, d)
        }
        None => Rational::from_integer(body.parse::<BigInt>().map_err(|_| bad())?),
    };
    Ok(if neg { -value } else { value })
}

/// Exact text form: `n` or `n/d`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering. Exact when the denominator has only factors 2 and 5,
/// otherwise truncated to `max_digits` fractional digits with a trailing `...`.
pub fn format_decimal(r: &Rational, max_digits: usize) -> String {
    let neg = r.is_negative();
    let abs = r.abs();
    let (int, mut rem) = abs.numer().div_rem(abs.denom());
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&int.to_string());
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    let ten = BigInt::from(10);
    let mut digits = 0;
    while !rem.is_zero() && digits < max_digits {
        rem *= &ten;
        let (d, r2) = rem.div_rem(abs.denom());
        out.push_str(&d.to_string());
        rem = r2;
        digits += 1;
    }
    if !rem.is_zero() {
        out.push_str("...");
    }
    out
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A polynomial in `arity` variables with exact rational coefficients.
///
/// Terms are keyed by exponent vectors; zero coefficients are never stored,
/// so structural equality coincides with polynomial equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    arity: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Polynomial {
    pub fn zero(arity: usize) -> Self {
        Self { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: Rational) -> Self {
        let mut p = Self::zero(arity);
        p.add_term(vec![0; arity], c);
        p
    }

    pub fn var(arity: usize, index: usize) -> Self {
        assert!(index < arity, "variable index {index} out of range for arity {arity}");
        let mut exps = vec![0; arity];
        exps[index] = 1;
        let mut p = Self::zero(arity);
        p.add_term(exps, Rational::one());
        p
    }

    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut p = Self::zero(arity);
        for (exps, c) in terms {
            if exps.len() != arity {
                return Err(PolyError::ArityMismatch { expected: arity, found: exps.len() });
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        self.terms.get(exps).cloned().unwrap_or_else(Rational::zero)
    }

    /// Per-variable maximum exponent.
    pub fn degree_vector(&self) -> Vec<u32> {
        let mut deg = vec![0; self.arity];
        for exps in self.terms.keys() {
            for (d, e) in deg.iter_mut().zip(exps) {
                *d = (*d).max(*e);
            }
        }
        deg
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Indices of the variables that occur with a positive exponent.
    pub fn used_vars(&self) -> Vec<usize> {
        let deg = self.degree_vector();
        (0..self.arity).filter(|&i| deg[i] > 0).collect()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.arity);
        }
        Self {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.arity, Rational::one());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn evaluate(&self, point: &[Rational]) -> Result<Rational, PolyError> {
        if point.len() != self.arity {
            return Err(PolyError::ArityMismatch { expected: self.arity, found: point.len() });
        }
        let mut sum = Rational::zero();
        for (exps, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(exps) {
                if e > 0 {
                    term *= num_traits::pow(x.clone(), e as usize);
                }
            }
            sum += term;
        }
        Ok(sum)
    }

    /// Substitutes `x_i := offset_i + scale_i * t_i` for every variable.
    pub fn affine_substitute(&self, offset: &[Rational], scale: &[Rational]) -> Self {
        assert_eq!(offset.len(), self.arity);
        assert_eq!(scale.len(), self.arity);
        // (o + s t)^e expanded per variable, cached by (var, exponent)
        let mut cache: BTreeMap<(usize, u32), Vec<Rational>> = BTreeMap::new();
        let mut out = Self::zero(self.arity);
        for (exps, c) in &self.terms {
            // product over variables of univariate expansions
            let mut partial: Vec<(Vec<u32>, Rational)> = vec![(vec![0; self.arity], c.clone())];
            for (i, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let coeffs = cache
                    .entry((i, e))
                    .or_insert_with(|| binomial_expansion(&offset[i], &scale[i], e))
                    .clone();
                let mut next = Vec::with_capacity(partial.len() * coeffs.len());
                for (pe, pc) in &partial {
                    for (k, ck) in coeffs.iter().enumerate() {
                        if ck.is_zero() {
                            continue;
                        }
                        let mut ne = pe.clone();
                        ne[i] = k as u32;
                        next.push((ne, pc * ck));
                    }
                }
                partial = next;
            }
            for (e, v) in partial {
                out.add_term(e, v);
            }
        }
        out
    }

    /// Re-expresses the polynomial over a subset of its variables.
    /// `keep[j]` is the old index of new variable `j`; every used variable must be kept.
    pub fn project(&self, keep: &[usize]) -> Self {
        let mut out = Self::zero(keep.len());
        for (exps, c) in &self.terms {
            let ne: Vec<u32> = keep.iter().map(|&k| exps[k]).collect();
            debug_assert_eq!(
                ne.iter().sum::<u32>(),
                exps.iter().sum::<u32>(),
                "projection drops a used variable"
            );
            out.add_term(ne, c.clone());
        }
        out
    }

    /// Embeds into a larger variable space: old variable `i` becomes `map[i]`.
    pub fn embed(&self, arity: usize, map: &[usize]) -> Self {
        let mut out = Self::zero(arity);
        for (exps, c) in &self.terms {
            let mut ne = vec![0; arity];
            for (i, &e) in exps.iter().enumerate() {
                ne[map[i]] += e;
            }
            out.add_term(ne, c.clone());
        }
        out
    }

    /// Renders with the given variable names, e.g. `x^2 + y^2 - 7/2`.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> PolyDisplay<'a> {
        PolyDisplay { poly: self, names }
    }
}

/// Coefficients of `(o + s t)^e` in ascending powers of `t`.
fn binomial_expansion(o: &Rational, s: &Rational, e: u32) -> Vec<Rational> {
    (0..=e)
        .map(|k| {
            let binom = Rational::from_integer(binomial(e, k));
            binom
                * num_traits::pow(s.clone(), k as usize)
                * num_traits::pow(o.clone(), (e - k) as usize)
        })
        .collect()
}

pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity, "arity mismatch in addition");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.arity, rhs.arity, "arity mismatch in multiplication");
        let mut out = Polynomial::zero(self.arity);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1 * c2);
            }
        }
        out
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

pub struct PolyDisplay<'a> {
    poly: &'a Polynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // highest total degree first, reads the conventional way
        let mut terms: Vec<_> = self.poly.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (idx, (exps, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mag = c.abs();
            let mut factors = Vec::new();
            for (i, &e) in exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(self.names[i].clone()),
                    _ => factors.push(format!("{}^{}", self.names[i], e)),
                }
            }
            if factors.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join(" * "))?;
            } else {
                write!(f, "{} * {}", format_rational(&mag), factors.join(" * "))?;
            }
        }
        Ok(())
    }
}

/// Comparison of a polynomial against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Relation {
    pub fn negate(self) -> Self {
        match self {
            Relation::Lt => Relation::Ge,
            Relation::Le => Relation::Gt,
            Relation::Gt => Relation::Le,
            Relation::Ge => Relation::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    pub fn holds(self, value: &Rational) -> bool {
        match self {
            Relation::Lt => value.is_negative(),
            Relation::Le => !value.is_positive(),
            Relation::Gt => value.is_positive(),
            Relation::Ge => !value.is_negative(),
        }
    }
}

/// `poly ▷ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyConstraint {
    pub poly: Polynomial,
    pub relation: Relation,
}

impl PolyConstraint {
    pub fn new(poly: Polynomial, relation: Relation) -> Self {
        Self { poly, relation }
    }

    /// Builds `lhs ▷ rhs` by folding the right-hand side into the polynomial.
    pub fn compare(lhs: &Polynomial, relation: Relation, rhs: &Polynomial) -> Self {
        Self { poly: lhs - rhs, relation }
    }

    pub fn negate(&self) -> Self {
        Self { poly: self.poly.clone(), relation: self.relation.negate() }
    }

    pub fn arity(&self) -> usize {
        self.poly.arity()
    }

    pub fn holds_at(&self, point: &[Rational]) -> Result<bool, PolyError> {
        Ok(self.relation.holds(&self.poly.evaluate(point)?))
    }

    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        struct D<'a>(&'a PolyConstraint, &'a [String]);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {} 0", self.0.poly.display_with(self.1), self.0.relation.symbol())
            }
        }
        D(self, names)
    }
}

/// Cartesian product of closed rational intervals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RealBox {
    intervals: Vec<(Rational, Rational)>,
}

impl RealBox {
    pub fn new(intervals: Vec<(Rational, Rational)>) -> Result<Self, PolyError> {
        for (dim, (lo, hi)) in intervals.iter().enumerate() {
            if lo > hi {
                return Err(PolyError::InvalidInterval {
                    dim,
                    lower: format_rational(lo),
                    upper: format_rational(hi),
                });
            }
        }
        Ok(Self { intervals })
    }

    /// `[lo, hi]^dims`.
    pub fn uniform(dims: usize, lo: Rational, hi: Rational) -> Result<Self, PolyError> {
        Self::new(vec![(lo, hi); dims])
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn lower(&self) -> Vec<Rational> {
        self.intervals.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn upper(&self) -> Vec<Rational> {
        self.intervals.iter().map(|(_, u)| u.clone()).collect()
    }

    pub fn widths(&self) -> Vec<Rational> {
        self.intervals.iter().map(|(l, u)| u - l).collect()
    }

    /// Widest dimension, lowest index on ties.
    pub fn widest_dim(&self) -> usize {
        let widths = self.widths();
        let mut best = 0;
        for (i, w) in widths.iter().enumerate() {
            if *w > widths[best] {
                best = i;
            }
        }
        best
    }

    pub fn bisect(&self, dim: usize) -> (RealBox, RealBox) {
        let (lo, hi) = &self.intervals[dim];
        let mid = (lo + hi) / rat(2);
        let mut left = self.clone();
        let mut right = self.clone();
        left.intervals[dim].1 = mid.clone();
        right.intervals[dim].0 = mid;
        (left, right)
    }

    pub fn center(&self) -> Vec<Rational> {
        self.intervals.iter().map(|(l, u)| (l + u) / rat(2)).collect()
    }

    /// All 2^n corners, ordered by the binary counting of upper-bound choices.
    pub fn vertices(&self) -> Vec<Vec<Rational>> {
        let n = self.dims();
        (0..(1usize << n))
            .map(|mask| {
                (0..n)
                    .map(|i| {
                        let (l, u) = &self.intervals[i];
                        if mask >> i & 1 == 1 { u.clone() } else { l.clone() }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        point.len() == self.dims()
            && point.iter().zip(&self.intervals).all(|(x, (l, u))| l <= x && x <= u)
    }

    pub fn project(&self, keep: &[usize]) -> RealBox {
        RealBox { intervals: keep.iter().map(|&k| self.intervals[k].clone()).collect() }
    }
}
