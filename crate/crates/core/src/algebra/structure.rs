use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};

use super::symbol::{mul_plus, q_to_f64, Grading, Space, Symbol, Q};
use super::vector::{Coeff, LinComb, Tensor, Vector};
use crate::error::{ReconError, Result};

pub type Row = Vec<(Symbol, Symbol, Q)>;

/// Scalars a character can take values in.
pub trait Scalar: Coeff + One {
    fn from_q(x: &Q) -> Self;
}

impl Scalar for Q {
    fn from_q(x: &Q) -> Self {
        *x
    }
}

impl Scalar for f64 {
    fn from_q(x: &Q) -> Self {
        q_to_f64(x)
    }
}

/// Exact character given by its values on generators of 𝓑⁺.
pub type Character = BTreeMap<Symbol, Q>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradeMode {
    Greater,
    Less,
    Equal,
    LessEq,
}

/// How a structure was produced; carried into serialization.
#[derive(Clone, Debug, PartialEq)]
pub enum Origin {
    Polynomial { r: Q },
    Tree { cutoff: Q, poly_degree: u32 },
    Loaded,
}

/// A concrete regularity structure truncated to finite bases, with stored coproduct rows.
pub struct ConcreteStructure {
    pub grading: Grading,
    pub n_charts: u16,
    pub origin: Origin,
    basis_t: Vec<Symbol>,
    basis_plus: Vec<Symbol>,
    delta: BTreeMap<Symbol, Row>,
    delta_plus: BTreeMap<Symbol, Row>,
    dplus_cache: Mutex<HashMap<Symbol, Arc<Row>>>,
    antipode_cache: Mutex<HashMap<Symbol, Arc<Vector>>>,
}

impl Clone for ConcreteStructure {
    fn clone(&self) -> Self {
        ConcreteStructure::new(
            self.grading.clone(),
            self.n_charts,
            self.origin.clone(),
            self.delta.clone(),
            self.delta_plus.clone(),
        )
    }
}

impl std::fmt::Debug for ConcreteStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConcreteStructure")
            .field("d", &self.grading.d)
            .field("theta", &self.grading.theta)
            .field("t", &self.basis_t.len())
            .field("plus", &self.basis_plus.len())
            .finish()
    }
}

impl PartialEq for ConcreteStructure {
    fn eq(&self, o: &Self) -> bool {
        self.grading == o.grading
            && self.n_charts == o.n_charts
            && self.delta == o.delta
            && self.delta_plus == o.delta_plus
    }
}

fn sort_row(row: &mut Row) {
    let t = Tensor::from_rows(row);
    *row = t.to_rows();
}

impl ConcreteStructure {
    /// Assemble a structure from its tables. The bases are the key sets of the two tables.
    pub fn new(
        grading: Grading,
        n_charts: u16,
        origin: Origin,
        mut delta: BTreeMap<Symbol, Row>,
        mut delta_plus: BTreeMap<Symbol, Row>,
    ) -> Self {
        for r in delta.values_mut() {
            sort_row(r);
        }
        for r in delta_plus.values_mut() {
            sort_row(r);
        }
        let mut basis_t: Vec<Symbol> = delta.keys().cloned().collect();
        let mut basis_plus: Vec<Symbol> = delta_plus.keys().cloned().collect();
        basis_t.sort_by(|a, b| (grading.hom(a), a).cmp(&(grading.hom(b), b)));
        basis_plus.sort_by(|a, b| (grading.hom(a), a).cmp(&(grading.hom(b), b)));
        ConcreteStructure {
            grading,
            n_charts,
            origin,
            basis_t,
            basis_plus,
            delta,
            delta_plus,
            dplus_cache: Mutex::new(HashMap::new()),
            antipode_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn d(&self) -> usize {
        self.grading.d
    }

    pub fn theta(&self) -> Q {
        self.grading.theta
    }

    pub fn hom(&self, s: &Symbol) -> Q {
        self.grading.hom(s)
    }

    pub fn name(&self, s: &Symbol) -> String {
        self.grading.name(s)
    }

    pub fn parse(&self, text: &str) -> Result<Symbol> {
        self.grading.parse_symbol(text)
    }

    /// Basis of T or T⁺, sorted by homogeneity then structurally.
    pub fn basis(&self, space: Space) -> &[Symbol] {
        match space {
            Space::T => &self.basis_t,
            Space::Plus => &self.basis_plus,
        }
    }

    pub fn contains(&self, s: &Symbol, space: Space) -> bool {
        match space {
            Space::T => self.delta.contains_key(s),
            Space::Plus => self.delta_plus.contains_key(s),
        }
    }

    pub fn charts(&self) -> impl Iterator<Item = u16> {
        0..self.n_charts
    }

    pub fn has_integration(&self) -> bool {
        self.basis_t.iter().any(|s| matches!(s, Symbol::Integ(_)))
    }

    /// Generators of 𝓑⁺ that occur in the basis, directly or as factors.
    pub fn generators(&self) -> Vec<Symbol> {
        let mut g = BTreeSet::new();
        for s in &self.basis_plus {
            for f in s.factors() {
                g.insert(f);
            }
        }
        let mut out: Vec<Symbol> = g.into_iter().collect();
        out.sort_by(|a, b| (self.hom(a), a).cmp(&(self.hom(b), b)));
        out
    }

    /// Stored row of Δτ (plus = false) or Δ⁺τ (plus = true).
    pub fn coproduct(&self, tau: &Symbol, plus: bool) -> Result<&Row> {
        let table = if plus { &self.delta_plus } else { &self.delta };
        table
            .get(tau)
            .ok_or_else(|| ReconError::NotInBasis(self.name(tau)))
    }

    pub fn rows(&self, plus: bool) -> &BTreeMap<Symbol, Row> {
        if plus {
            &self.delta_plus
        } else {
            &self.delta
        }
    }

    /// Overwrite one stored row. Intended for fault injection and for loading.
    pub fn set_row(&mut self, tau: Symbol, plus: bool, mut row: Row) {
        sort_row(&mut row);
        if plus {
            self.delta_plus.insert(tau, row);
        } else {
            self.delta.insert(tau, row);
        }
        self.dplus_cache.lock().unwrap().clear();
        self.antipode_cache.lock().unwrap().clear();
    }

    /// Δ⁺ of an arbitrary monomial of T⁺: stored row when available, otherwise the
    /// product of the rows of its factors.
    pub fn delta_plus_any(&self, tau: &Symbol) -> Result<Arc<Row>> {
        if let Some(r) = self.dplus_cache.lock().unwrap().get(tau) {
            return Ok(r.clone());
        }
        let row = if let Some(r) = self.delta_plus.get(tau) {
            r.clone()
        } else if tau.is_unit() {
            vec![(Symbol::Unit, Symbol::Unit, Q::one())]
        } else {
            let factors = tau.factors();
            if factors.len() == 1 {
                return Err(ReconError::NotInBasis(self.name(tau)));
            }
            let mut acc = Tensor::from_rows(&[(Symbol::Unit, Symbol::Unit, Q::one())]);
            for f in &factors {
                let fr = self.delta_plus_any(f)?;
                acc = acc.mul_plus(&Tensor::from_rows(&fr));
            }
            acc.to_rows()
        };
        let row = Arc::new(row);
        self.dplus_cache.lock().unwrap().insert(tau.clone(), row.clone());
        Ok(row)
    }

    pub fn delta_plus_vec(&self, v: &Vector) -> Result<Tensor> {
        let mut out = Tensor::zero();
        for (s, c) in v.iter() {
            for (a, b, x) in self.delta_plus_any(s)?.iter() {
                out.add_term(a.clone(), b.clone(), x * c);
            }
        }
        Ok(out)
    }

    pub fn delta_vec(&self, v: &Vector) -> Result<Tensor> {
        let mut out = Tensor::zero();
        for (s, c) in v.iter() {
            for (a, b, x) in self.coproduct(s, false)? {
                out.add_term(a.clone(), b.clone(), x * c);
            }
        }
        Ok(out)
    }

    /// τ/σ: contraction of the row of τ at left leg σ.
    pub fn quotient(&self, tau: &Symbol, sigma: &Symbol, plus: bool) -> Result<Vector> {
        let row: Arc<Row> = if plus {
            self.delta_plus_any(tau)?
        } else {
            Arc::new(self.coproduct(tau, false)?.clone())
        };
        if !plus && !self.contains(sigma, Space::T) {
            return Err(ReconError::NotInBasis(self.name(sigma)));
        }
        Ok(row
            .iter()
            .filter(|(a, _, _)| a == sigma)
            .map(|(_, b, c)| (b.clone(), *c))
            .collect())
    }

    /// Linear extension of the quotient in the first slot.
    pub fn quotient_vec(&self, v: &Vector, sigma: &Symbol, plus: bool) -> Result<Vector> {
        let mut out = Vector::zero();
        for (s, c) in v.iter() {
            out.add_scaled(&self.quotient(s, sigma, plus)?, c);
        }
        Ok(out)
    }

    /// Left legs σ ≠ τ of Δτ, each once.
    pub fn lower_legs(&self, tau: &Symbol) -> Result<Vec<Symbol>> {
        let mut s: BTreeSet<Symbol> = BTreeSet::new();
        for (a, _, _) in self.coproduct(tau, false)? {
            if a != tau {
                s.insert(a.clone());
            }
        }
        let mut v: Vec<Symbol> = s.into_iter().collect();
        v.sort_by(|a, b| (self.hom(a), a).cmp(&(self.hom(b), b)));
        Ok(v)
    }

    /// Antipode, computed from the reduced coproduct and memoized.
    pub fn antipode(&self, tau: &Symbol) -> Result<Arc<Vector>> {
        if let Some(v) = self.antipode_cache.lock().unwrap().get(tau) {
            return Ok(v.clone());
        }
        let v = if tau.is_unit() {
            Vector::basis(Symbol::Unit, Q::one())
        } else {
            let row = self.delta_plus_any(tau)?;
            let mut v = Vector::basis(tau.clone(), -Q::one());
            for (a, b, c) in row.iter() {
                if (a == tau && b.is_unit()) || (a.is_unit() && b == tau) {
                    continue;
                }
                let sa = self.antipode(a)?;
                let term = sa.mul_plus(&Vector::basis(b.clone(), Q::one()));
                v.add_scaled(&term, &(-*c));
            }
            v
        };
        let v = Arc::new(v);
        self.antipode_cache.lock().unwrap().insert(tau.clone(), v.clone());
        Ok(v)
    }

    pub fn antipode_vec(&self, v: &Vector) -> Result<Vector> {
        let mut out = Vector::zero();
        for (s, c) in v.iter() {
            out.add_scaled(&*self.antipode(s)?, c);
        }
        Ok(out)
    }

    /// Multiplicative evaluation of a character on a monomial of T⁺.
    pub fn eval_monomial<C: Scalar>(
        &self,
        gen: &dyn Fn(&Symbol) -> Option<C>,
        tau: &Symbol,
    ) -> Result<C> {
        let mut acc = C::one();
        for f in tau.factors() {
            let v = gen(&f).ok_or_else(|| ReconError::UndefinedCharacter(self.name(&f)))?;
            acc = acc * v;
        }
        Ok(acc)
    }

    pub fn eval_vector<C: Scalar>(&self, gen: &dyn Fn(&Symbol) -> Option<C>, v: &Vector) -> Result<C> {
        let mut acc = C::zero();
        for (s, c) in v.iter() {
            acc = acc + C::from_q(c) * self.eval_monomial(gen, s)?;
        }
        Ok(acc)
    }

    /// g⁻¹(v) = g(𝒜v).
    pub fn eval_inverse<C: Scalar>(&self, gen: &dyn Fn(&Symbol) -> Option<C>, v: &Vector) -> Result<C> {
        self.eval_vector(gen, &self.antipode_vec(v)?)
    }

    /// (g1 ∗ g2)(v) = (g1 ⊗ g2)Δ⁺v.
    pub fn convolve<C: Scalar>(
        &self,
        g1: &dyn Fn(&Symbol) -> Option<C>,
        g2: &dyn Fn(&Symbol) -> Option<C>,
        v: &Vector,
    ) -> Result<C> {
        let mut acc = C::zero();
        for ((a, b), c) in self.delta_plus_vec(v)?.iter() {
            acc = acc + C::from_q(c) * self.eval_monomial(g1, a)? * self.eval_monomial(g2, b)?;
        }
        Ok(acc)
    }

    /// Values of g1 ∗ g2 on the generators of this structure, as an exact character.
    pub fn convolve_character(&self, g1: &Character, g2: &Character) -> Result<Character> {
        let f1 = |s: &Symbol| g1.get(s).cloned();
        let f2 = |s: &Symbol| g2.get(s).cloned();
        let mut out = Character::new();
        for gsym in self.generators() {
            let v = self.convolve::<Q>(&f1, &f2, &Vector::basis(gsym.clone(), Q::one()))?;
            out.insert(gsym, v);
        }
        Ok(out)
    }

    /// ĝ = (Id ⊗ g)Δ on T (plus = false) or (Id ⊗ g)Δ⁺ on T⁺.
    pub fn g_hat<C: Scalar>(
        &self,
        g: &dyn Fn(&Symbol) -> Option<C>,
        v: &LinComb<C>,
        plus: bool,
    ) -> Result<LinComb<C>> {
        let mut out = LinComb::<C>::zero();
        for (s, c) in v.iter() {
            let row: Arc<Row> = if plus {
                self.delta_plus_any(s)?
            } else {
                Arc::new(self.coproduct(s, false)?.clone())
            };
            for (a, b, x) in row.iter() {
                let val = self.eval_monomial(g, b)?;
                out.add_term(a.clone(), c.clone() * C::from_q(x) * val);
            }
        }
        Ok(out)
    }

    pub fn grade_project<C: Coeff>(&self, v: &LinComb<C>, alpha: &Q, mode: GradeMode) -> LinComb<C> {
        v.iter()
            .filter(|(s, _)| {
                let h = self.hom(s);
                match mode {
                    GradeMode::Greater => h > *alpha,
                    GradeMode::Less => h < *alpha,
                    GradeMode::Equal => h == *alpha,
                    GradeMode::LessEq => h <= *alpha,
                }
            })
            .map(|(s, c)| (s.clone(), c.clone()))
            .collect()
    }

    /// 𝐃_e^kτ = k!·(τ/𝐗_e^k).
    pub fn d_extract(&self, tau: &Symbol, chart: u16, k: super::symbol::Multi) -> Result<Vector> {
        if tau.is_poly() {
            return Err(ReconError::InvalidArgument(format!(
                "D_extract is not defined on the polynomial symbol {}",
                self.name(tau)
            )));
        }
        let x = Symbol::poly(chart, k);
        let row = self.coproduct(tau, false)?;
        let f = Q::from_integer(k.factorial());
        Ok(row
            .iter()
            .filter(|(a, _, _)| *a == x)
            .map(|(_, b, c)| (b.clone(), c * f))
            .collect())
    }

    /// Monomial multiplication in T⁺ exposed for convenience.
    pub fn mul_plus(&self, a: &Symbol, b: &Symbol) -> Symbol {
        mul_plus(a, b)
    }

    pub fn min_hom(&self) -> Q {
        self.basis_t.iter().map(|s| self.hom(s)).min().unwrap_or_else(Q::zero)
    }

    pub fn max_hom(&self) -> Q {
        self.basis_t.iter().map(|s| self.hom(s)).max().unwrap_or_else(Q::zero)
    }
}
