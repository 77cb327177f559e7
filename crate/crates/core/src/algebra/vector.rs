use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg};

use num_traits::Zero;

use super::symbol::{mul_plus, Grading, Space, Symbol, Q};

/// Coefficients usable in sparse combinations: exact rationals or doubles.
pub trait Coeff: Clone + PartialEq + Zero + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {}
impl<T> Coeff for T where T: Clone + PartialEq + Zero + Add<Output = T> + Mul<Output = T> + Neg<Output = T> {}

/// Sparse linear combination of basis symbols. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinComb<C> {
    terms: BTreeMap<Symbol, C>,
}

pub type Vector = LinComb<Q>;

impl<C: Coeff> Default for LinComb<C> {
    fn default() -> Self {
        LinComb { terms: BTreeMap::new() }
    }
}

impl<C: Coeff> LinComb<C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(s: Symbol, one: C) -> Self {
        let mut v = Self::zero();
        v.add_term(s, one);
        v
    }

    pub fn add_term(&mut self, s: Symbol, c: C) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(s.clone()).or_insert_with(C::zero);
        *slot = slot.clone() + c;
        if slot.is_zero() {
            self.terms.remove(&s);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &C) {
        for (s, x) in &other.terms {
            self.add_term(s.clone(), x.clone() * c.clone());
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = Self::zero();
        out.add_scaled(self, c);
        out
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

    pub fn coeff(&self, s: &Symbol) -> C {
        self.terms.get(s).cloned().unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &C)> {
        self.terms.iter()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.terms.keys()
    }

    /// Common space of all symbols, or None for the zero vector or a mixed vector.
    pub fn space(&self) -> Option<Space> {
        let mut it = self.terms.keys().map(|s| s.space());
        let first = it.next()?;
        if it.all(|s| s == first) {
            Some(first)
        } else {
            None
        }
    }

    /// Product in T⁺, bilinear extension of the monoid product.
    pub fn mul_plus(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                out.add_term(mul_plus(a, b), x.clone() * y.clone());
            }
        }
        out
    }

    /// |h|: largest homogeneity carried by a non-zero component.
    pub fn homogeneity(&self, g: &Grading) -> Option<Q> {
        self.terms.keys().map(|s| g.hom(s)).max()
    }

    pub fn map_coeff<D: Coeff>(&self, f: impl Fn(&C) -> D) -> LinComb<D> {
        let mut out = LinComb::zero();
        for (s, c) in &self.terms {
            out.add_term(s.clone(), f(c));
        }
        out
    }
}

impl<C: Coeff> FromIterator<(Symbol, C)> for LinComb<C> {
    fn from_iter<I: IntoIterator<Item = (Symbol, C)>>(iter: I) -> Self {
        let mut v = Self::zero();
        for (s, c) in iter {
            v.add_term(s, c);
        }
        v
    }
}

/// Sparse element of a tensor product of two graded spaces.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Tensor {
    terms: BTreeMap<(Symbol, Symbol), Q>,
}

impl Tensor {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, a: Symbol, b: Symbol, c: Q) {
        if c.is_zero() {
            return;
        }
        let key = (a, b);
        let slot = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Symbol, Symbol), &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, a: &Symbol, b: &Symbol) -> Q {
        self.terms.get(&(a.clone(), b.clone())).cloned().unwrap_or_else(Q::zero)
    }

    pub fn from_rows(rows: &[(Symbol, Symbol, Q)]) -> Self {
        let mut t = Self::zero();
        for (a, b, c) in rows {
            t.add_term(a.clone(), b.clone(), *c);
        }
        t
    }

    pub fn to_rows(&self) -> Vec<(Symbol, Symbol, Q)> {
        self.terms.iter().map(|((a, b), c)| (a.clone(), b.clone(), *c)).collect()
    }

    /// Componentwise product in T⁺ ⊗ T⁺.
    pub fn mul_plus(&self, other: &Tensor) -> Tensor {
        let mut out = Tensor::zero();
        for ((a1, b1), x) in &self.terms {
            for ((a2, b2), y) in &other.terms {
                out.add_term(mul_plus(a1, a2), mul_plus(b1, b2), x * y);
            }
        }
        out
    }

    /// Symmetric difference used in reports: terms whose coefficients disagree.
    pub fn diff(&self, other: &Tensor) -> Vec<(Symbol, Symbol, Q)> {
        let mut d = self.clone();
        for ((a, b), c) in &other.terms {
            d.add_term(a.clone(), b.clone(), -*c);
        }
        d.to_rows()
    }
}

/// Sparse element of a triple tensor product, used by coassociativity checks.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Tensor3 {
    terms: BTreeMap<(Symbol, Symbol, Symbol), Q>,
}

impl Tensor3 {
    pub fn add_term(&mut self, a: Symbol, b: Symbol, c: Symbol, x: Q) {
        if x.is_zero() {
            return;
        }
        let key = (a, b, c);
        let slot = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *slot += x;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn first_difference(&self, other: &Tensor3) -> Option<(Symbol, Symbol, Symbol, Q)> {
        let mut d = self.clone();
        for ((a, b, c), x) in &other.terms {
            d.add_term(a.clone(), b.clone(), c.clone(), -*x);
        }
        d.terms.into_iter().next().map(|((a, b, c), x)| (a, b, c, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::symbol::q;

    #[test]
    fn zero_terms_are_dropped() {
        let x = Symbol::noise("Xi");
        let mut v = Vector::basis(x.clone(), q(2));
        v.add_term(x.clone(), q(-2));
        assert!(v.is_zero());
        assert_eq!(v.len(), 0);
    }

    #[test]
    fn plus_product_is_commutative() {
        let a = Vector::basis(Symbol::coord(0, 0), q(1));
        let mut b = Vector::basis(Symbol::coord(1, 0), q(3));
        b.add_term(Symbol::Unit, q(1));
        assert_eq!(a.mul_plus(&b), b.mul_plus(&a));
        assert_eq!(a.mul_plus(&b).len(), 2);
    }
}
