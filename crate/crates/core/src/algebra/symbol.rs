//! Basis symbols of `T` and `T⁺`.
//!
//! Symbols are plain structural values: equality, hashing and ordering are derived
//! from the tree shape, and products are kept as sorted multisets so that two
//! spellings of the same monomial compare equal.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::error::{ReconError, Result};

/// Exact coefficient field of the symbolic layer.
pub type Q = Ratio<i128>;

pub fn q(n: i128) -> Q {
    Q::from_integer(n)
}

/// Exact rational from "p/q", an integer, or a finite decimal such as "-0.625".
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        return parse_decimal(s, int, frac);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: i128 = num.parse().map_err(|_| ReconError::Parse(format!("bad rational '{s}'")))?;
    let d: i128 = den.parse().map_err(|_| ReconError::Parse(format!("bad rational '{s}'")))?;
    if d == 0 {
        return Err(ReconError::Parse(format!("zero denominator in '{s}'")));
    }
    Ok(Q::new(n, d))
}

fn parse_decimal(s: &str, int: &str, frac: &str) -> Result<Q> {
    let bad = || ReconError::Parse(format!("bad rational '{s}'"));
    if frac.is_empty() || frac.len() > 30 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let digits = int.trim_start_matches(['-', '+']);
    if !digits.is_empty() && !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let whole: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| bad())? };
    let part: i128 = frac.parse().map_err(|_| bad())?;
    let n = whole.checked_mul(den).and_then(|w| w.checked_add(part)).ok_or_else(bad)?;
    Ok(Q::new(if negative { -n } else { n }, den))
}

pub fn fmt_q(x: &Q) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Multi-index for dimension at most 2; unused slots stay zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Multi(pub [u8; 2]);

impl Multi {
    pub const ZERO: Multi = Multi([0, 0]);

    pub fn unit(axis: usize) -> Multi {
        let mut k = [0u8; 2];
        k[axis] = 1;
        Multi(k)
    }

    pub fn order(&self) -> u32 {
        self.0[0] as u32 + self.0[1] as u32
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0]
    }

    pub fn add(&self, o: &Multi) -> Multi {
        Multi([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }

    pub fn sub(&self, o: &Multi) -> Option<Multi> {
        if o.0[0] > self.0[0] || o.0[1] > self.0[1] {
            None
        } else {
            Some(Multi([self.0[0] - o.0[0], self.0[1] - o.0[1]]))
        }
    }

    pub fn factorial(&self) -> i128 {
        factorial(self.0[0] as u32) * factorial(self.0[1] as u32)
    }

    /// Product of binomial coefficients C(self, sub).
    pub fn binom(&self, sub: &Multi) -> i128 {
        binom(self.0[0] as u32, sub.0[0] as u32) * binom(self.0[1] as u32, sub.0[1] as u32)
    }

    /// All multi-indices ℓ ≤ self componentwise.
    pub fn below(&self, d: usize) -> Vec<Multi> {
        let mut out = Vec::new();
        let m1 = if d > 1 { self.0[1] } else { 0 };
        for a in 0..=self.0[0] {
            for b in 0..=m1 {
                out.push(Multi([a, b]));
            }
        }
        out
    }

    /// All multi-indices in dimension d with |ℓ| ≤ n, sorted by order then lexicographically.
    pub fn all_up_to(d: usize, n: u32) -> Vec<Multi> {
        let mut out = Vec::new();
        for a in 0..=n {
            if d == 1 {
                out.push(Multi([a as u8, 0]));
            } else {
                for b in 0..=(n - a) {
                    out.push(Multi([a as u8, b as u8]));
                }
            }
        }
        out.sort_by_key(|m| (m.order(), m.0));
        out
    }

    pub fn display(&self, d: usize) -> String {
        if d == 1 {
            format!("{}", self.0[0])
        } else {
            format!("{},{}", self.0[0], self.0[1])
        }
    }
}

pub fn factorial(n: u32) -> i128 {
    (1..=n as i128).product::<i128>().max(1)
}

pub fn binom(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let mut r: i128 = 1;
    for i in 0..k as i128 {
        r = r * (n as i128 - i) / (i + 1);
    }
    r
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Space {
    T,
    Plus,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Integ {
    pub inner: Symbol,
    pub k: Multi,
    pub chart: Option<u16>,
    pub plus: bool,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Symbol {
    Unit,
    Coord { chart: u16, axis: u8 },
    Poly { chart: u16, k: Multi },
    Noise(Arc<str>),
    Integ(Arc<Integ>),
    Product(Arc<[Symbol]>),
}

impl Symbol {
    pub fn noise(name: &str) -> Symbol {
        Symbol::Noise(Arc::from(name))
    }

    /// ℐτ in T.
    pub fn integ(inner: Symbol) -> Symbol {
        Symbol::Integ(Arc::new(Integ { inner, k: Multi::ZERO, chart: None, plus: false }))
    }

    /// ℐ_k^{e+}τ in T⁺.
    pub fn iplus(chart: u16, k: Multi, inner: Symbol) -> Symbol {
        Symbol::Integ(Arc::new(Integ { inner, k, chart: Some(chart), plus: true }))
    }

    pub fn poly(chart: u16, k: Multi) -> Symbol {
        Symbol::Poly { chart, k }
    }

    pub fn coord(chart: u16, axis: u8) -> Symbol {
        Symbol::Coord { chart, axis }
    }

    pub fn space(&self) -> Space {
        match self {
            Symbol::Unit | Symbol::Coord { .. } => Space::Plus,
            Symbol::Poly { .. } | Symbol::Noise(_) => Space::T,
            Symbol::Integ(i) => {
                if i.plus {
                    Space::Plus
                } else {
                    Space::T
                }
            }
            Symbol::Product(f) => {
                if f.iter().any(|s| s.space() == Space::T) {
                    Space::T
                } else {
                    Space::Plus
                }
            }
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Symbol::Unit)
    }

    pub fn is_poly(&self) -> bool {
        matches!(self, Symbol::Poly { .. })
    }

    /// Generators of the free monoid 𝓑⁺: coordinates X_e^i and ℐ_k^{e+}τ.
    pub fn is_generator(&self) -> bool {
        match self {
            Symbol::Coord { .. } => true,
            Symbol::Integ(i) => i.plus,
            _ => false,
        }
    }

    pub fn as_integ(&self) -> Option<&Integ> {
        match self {
            Symbol::Integ(i) => Some(i),
            _ => None,
        }
    }

    /// Factors of a T⁺ monomial (empty for the unit).
    pub fn factors(&self) -> Vec<Symbol> {
        match self {
            Symbol::Unit => vec![],
            Symbol::Product(f) => f.to_vec(),
            s => vec![s.clone()],
        }
    }

    /// Canonical monomial from a list of factors.
    pub fn from_factors(mut f: Vec<Symbol>) -> Symbol {
        f.retain(|s| !s.is_unit());
        f.sort();
        match f.len() {
            0 => Symbol::Unit,
            1 => f.pop().unwrap(),
            _ => Symbol::Product(Arc::from(f)),
        }
    }

    pub fn name(&self, d: usize) -> String {
        match self {
            Symbol::Unit => "1".to_string(),
            Symbol::Coord { chart, axis } => {
                if d == 1 {
                    format!("X+[{chart}]")
                } else {
                    format!("X+[{chart}].{}", axis + 1)
                }
            }
            Symbol::Poly { chart, k } => format!("X[{chart}]^{}", k.display(d)),
            Symbol::Noise(n) => n.to_string(),
            Symbol::Integ(i) => {
                if i.plus {
                    format!("I+[{}]_{}({})", i.chart.unwrap_or(0), i.k.display(d), i.inner.name(d))
                } else {
                    format!("I({})", i.inner.name(d))
                }
            }
            Symbol::Product(f) => f.iter().map(|s| s.name(d)).collect::<Vec<_>>().join("*"),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name(2))
    }
}

/// Monomial X_e^ℓ = Π_i (X_e^i)^{ℓ_i} in T⁺.
pub fn xmono(chart: u16, l: &Multi) -> Symbol {
    let mut f = Vec::new();
    for axis in 0..2u8 {
        for _ in 0..l.0[axis as usize] {
            f.push(Symbol::coord(chart, axis));
        }
    }
    Symbol::from_factors(f)
}

/// Product in T⁺ (free commutative monoid).
pub fn mul_plus(a: &Symbol, b: &Symbol) -> Symbol {
    let mut f = a.factors();
    f.extend(b.factors());
    Symbol::from_factors(f)
}

fn split_t(s: &Symbol, t: &mut Vec<Symbol>, coords: &mut Vec<Symbol>) {
    match s {
        Symbol::Poly { chart, k } => {
            for axis in 0..2u8 {
                for _ in 0..k.0[axis as usize] {
                    coords.push(Symbol::coord(*chart, axis));
                }
            }
        }
        Symbol::Coord { .. } => coords.push(s.clone()),
        Symbol::Product(f) => {
            for x in f.iter() {
                split_t(x, t, coords);
            }
        }
        Symbol::Unit => {}
        other => t.push(other.clone()),
    }
}

/// Product of T symbols. Chart units 𝐗_e^0 act as the identity on symbols that
/// carry a non-polynomial factor; purely polynomial products must land on a single
/// chart power 𝐗_e^k with k ≠ 0.
pub fn mul_t(a: &Symbol, b: &Symbol) -> Result<Symbol> {
    mul_t_many(&[a.clone(), b.clone()])
}

pub fn mul_t_many(items: &[Symbol]) -> Result<Symbol> {
    let mut t = Vec::new();
    let mut coords = Vec::new();
    for s in items {
        split_t(s, &mut t, &mut coords);
    }
    if t.is_empty() {
        if coords.is_empty() {
            return Err(ReconError::Unsupported(
                "product of chart units has no chart-independent representative in T".into(),
            ));
        }
        let chart = match &coords[0] {
            Symbol::Coord { chart, .. } => *chart,
            _ => unreachable!(),
        };
        let mut k = [0u8; 2];
        for c in &coords {
            match c {
                Symbol::Coord { chart: c2, axis } if *c2 == chart => k[*axis as usize] += 1,
                _ => {
                    return Err(ReconError::Unsupported(
                        "purely polynomial product mixing charts is not a basis symbol of T".into(),
                    ))
                }
            }
        }
        return Ok(Symbol::poly(chart, Multi(k)));
    }
    if coords.is_empty() && t.len() == 1 {
        return Ok(t.pop().unwrap());
    }
    t.extend(coords);
    t.sort();
    Ok(Symbol::Product(Arc::from(t)))
}

/// Homogeneity data shared by a structure: dimension, θ, and noise homogeneities.
#[derive(Clone, Debug, PartialEq)]
pub struct Grading {
    pub d: usize,
    pub theta: Q,
    pub noises: BTreeMap<String, Q>,
}

impl Grading {
    pub fn hom(&self, s: &Symbol) -> Q {
        match s {
            Symbol::Unit => Q::zero(),
            Symbol::Coord { .. } => Q::one(),
            Symbol::Poly { k, .. } => q(k.order() as i128),
            Symbol::Noise(n) => self.noises.get(n.as_ref()).cloned().unwrap_or_else(Q::zero),
            Symbol::Integ(i) => self.hom(&i.inner) + self.theta - q(i.k.order() as i128),
            Symbol::Product(f) => f.iter().map(|x| self.hom(x)).fold(Q::zero(), |a, b| a + b),
        }
    }

    /// ℐ_k^{e+}σ, or None when it is null (|σ| + θ − |k| ≤ 0).
    pub fn iplus_or_null(&self, chart: u16, k: Multi, inner: &Symbol) -> Option<Symbol> {
        let h = self.hom(inner) + self.theta - q(k.order() as i128);
        if h.is_positive() {
            Some(Symbol::iplus(chart, k, inner.clone()))
        } else {
            None
        }
    }

    pub fn name(&self, s: &Symbol) -> String {
        s.name(self.d)
    }

    /// Parse a symbol written in the naming scheme produced by [`Symbol::name`].
    pub fn parse_symbol(&self, text: &str) -> Result<Symbol> {
        let mut p = Parser { s: text.as_bytes(), pos: 0, g: self };
        let sym = p.expr()?;
        p.skip_ws();
        if p.pos != p.s.len() {
            return Err(ReconError::Parse(format!("trailing input in symbol '{text}'")));
        }
        Ok(sym)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    g: &'a Grading,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, t: &str) -> bool {
        self.skip_ws();
        if self.s[self.pos..].starts_with(t.as_bytes()) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &str) -> Result<()> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(ReconError::Parse(format!(
                "expected '{t}' at offset {} in '{}'",
                self.pos,
                String::from_utf8_lossy(self.s)
            )))
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| ReconError::Parse(format!("expected number at offset {start}")))
    }

    fn multi(&mut self) -> Result<Multi> {
        let a = self.number()?;
        let b = if self.eat(",") { self.number()? } else { 0 };
        Ok(Multi([a as u8, b as u8]))
    }

    fn expr(&mut self) -> Result<Symbol> {
        let mut items = vec![self.factor()?];
        while self.eat("*") {
            items.push(self.factor()?);
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        if items.iter().any(|s| s.space() == Space::T) {
            mul_t_many(&items)
        } else {
            Ok(items.iter().fold(Symbol::Unit, |a, b| mul_plus(&a, b)))
        }
    }

    fn factor(&mut self) -> Result<Symbol> {
        self.skip_ws();
        if self.eat("I+[") {
            let chart = self.number()? as u16;
            self.expect("]_")?;
            let k = self.multi()?;
            self.expect("(")?;
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(Symbol::iplus(chart, k, inner));
        }
        if self.eat("I(") {
            let inner = self.expr()?;
            self.expect(")")?;
            return Ok(Symbol::integ(inner));
        }
        if self.eat("X+[") {
            let chart = self.number()? as u16;
            self.expect("]")?;
            let axis = if self.eat(".") { self.number()? as u8 - 1 } else { 0 };
            return Ok(Symbol::coord(chart, axis));
        }
        if self.eat("X[") {
            let chart = self.number()? as u16;
            self.expect("]^")?;
            let k = self.multi()?;
            return Ok(Symbol::poly(chart, k));
        }
        if self.eat("1") {
            return Ok(Symbol::Unit);
        }
        let start = self.pos;
        while self.pos < self.s.len()
            && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        if name.is_empty() {
            return Err(ReconError::Parse(format!(
                "unexpected character at offset {start} in '{}'",
                String::from_utf8_lossy(self.s)
            )));
        }
        if !self.g.noises.contains_key(name) {
            return Err(ReconError::Parse(format!("unknown noise symbol '{name}'")));
        }
        Ok(Symbol::noise(name))
    }
}
