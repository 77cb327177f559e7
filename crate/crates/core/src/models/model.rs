use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::One;

use crate::algebra::symbol::{q_to_f64, Space, Symbol, Q};
use crate::algebra::{ConcreteStructure, Row, Vector};
use crate::error::{ReconError, Result};
use crate::harmonic::{Field, TwoVarFunction};

/// Values of a character on the generators of 𝓑⁺, one field per generator.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CharacterField {
    pub values: BTreeMap<Symbol, Field>,
}

impl CharacterField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, s: Symbol, f: Field) {
        self.values.insert(s, f);
    }

    pub fn get(&self, s: &Symbol) -> Option<&Field> {
        self.values.get(s)
    }
}

/// Which basis plays the role of T: the structure's T, or T⁺ with Π^g τ = g(τ).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    T,
    Plus,
}

impl Sector {
    pub fn space(self) -> Space {
        match self {
            Sector::T => Space::T,
            Sector::Plus => Space::Plus,
        }
    }
}

/// A model (Π, g) on a grid, stored globally; Π_x and g_yx are derived from it.
#[derive(Clone, Debug)]
pub struct Model {
    pub structure: Arc<ConcreteStructure>,
    pub sector: Sector,
    pub d: usize,
    pub l: u32,
    pub g: CharacterField,
    pub pi: BTreeMap<Symbol, Field>,
    pub provenance: String,
}

fn product_into(out: &mut [f64], f: &Field) {
    for (o, v) in out.iter_mut().zip(&f.values) {
        *o *= v;
    }
}

impl Model {
    /// Assemble and check completeness: every generator carries g, every basis symbol of T carries Π.
    pub fn new(
        structure: Arc<ConcreteStructure>,
        sector: Sector,
        d: usize,
        l: u32,
        g: CharacterField,
        pi: BTreeMap<Symbol, Field>,
        provenance: &str,
    ) -> Result<Model> {
        if structure.d() != d {
            return Err(ReconError::GridMismatch(format!("structure has d = {}, grid has d = {d}", structure.d())));
        }
        for gsym in structure.generators() {
            match g.get(&gsym) {
                None => return Err(ReconError::UndefinedCharacter(structure.name(&gsym))),
                Some(f) if f.d != d || f.l != l => {
                    return Err(ReconError::GridMismatch(format!("g({}) lives on another grid", structure.name(&gsym))))
                }
                _ => {}
            }
        }
        if sector == Sector::T {
            for s in structure.basis(Space::T) {
                match pi.get(s) {
                    None => return Err(ReconError::UndefinedCharacter(format!("Π({})", structure.name(s)))),
                    Some(f) if f.d != d || f.l != l => {
                        return Err(ReconError::GridMismatch(format!("Π({}) lives on another grid", structure.name(s))))
                    }
                    _ => {}
                }
            }
        }
        Ok(Model { structure, sector, d, l, g, pi, provenance: provenance.to_string() })
    }

    pub fn n(&self) -> usize {
        1usize << self.l
    }

    pub fn len(&self) -> usize {
        self.n().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn plus(&self) -> bool {
        self.sector == Sector::Plus
    }

    pub fn basis(&self) -> &[Symbol] {
        self.structure.basis(self.sector.space())
    }

    pub fn hom(&self, s: &Symbol) -> f64 {
        q_to_f64(&self.structure.hom(s))
    }

    /// Δτ (T sector) or Δ⁺τ (T⁺ sector).
    pub fn row(&self, tau: &Symbol) -> Result<Arc<Row>> {
        match self.sector {
            Sector::T => Ok(Arc::new(self.structure.coproduct(tau, false)?.clone())),
            Sector::Plus => self.structure.delta_plus_any(tau),
        }
    }

    /// τ/σ in T⁺, taken in this model's sector.
    pub fn quotient(&self, tau: &Symbol, sigma: &Symbol) -> Result<Vector> {
        self.structure.quotient(tau, sigma, self.plus())
    }

    /// g on a monomial of T⁺, as a field.
    pub fn g_mono(&self, tau: &Symbol) -> Result<Field> {
        let mut out = vec![1.0; self.len()];
        for f in tau.factors() {
            let gf = self.g.get(&f).ok_or_else(|| ReconError::UndefinedCharacter(self.structure.name(&f)))?;
            product_into(&mut out, gf);
        }
        Field::new(self.d, self.l, out)
    }

    pub fn g_vec(&self, v: &Vector) -> Result<Field> {
        let mut out = Field::zeros(self.d, self.l);
        for (s, c) in v.iter() {
            out.axpy(q_to_f64(c), &self.g_mono(s)?)?;
        }
        Ok(out)
    }

    pub fn g_inv_vec(&self, v: &Vector) -> Result<Field> {
        self.g_vec(&self.structure.antipode_vec(v)?)
    }

    /// g_x on a vector at the flat index x.
    pub fn g_at(&self, v: &Vector, x: usize) -> Result<f64> {
        let gen = |s: &Symbol| self.g.get(s).map(|f| f.values[x]);
        self.structure.eval_vector(&gen, v)
    }

    pub fn g_inv_at(&self, v: &Vector, x: usize) -> Result<f64> {
        let gen = |s: &Symbol| self.g.get(s).map(|f| f.values[x]);
        self.structure.eval_inverse(&gen, v)
    }

    /// g_yx(v) = (g_y ⊗ g_x⁻¹)Δ⁺v.
    pub fn g_yx(&self, y: usize, x: usize, v: &Vector) -> Result<f64> {
        let gy = |s: &Symbol| self.g.get(s).map(|f| f.values[y]);
        let gx = |s: &Symbol| self.g.get(s).map(|f| f.values[x]);
        let mut acc = 0.0;
        for ((a, b), c) in self.structure.delta_plus_vec(v)?.iter() {
            let va = self.structure.eval_monomial(&gy, a)?;
            if va == 0.0 {
                continue;
            }
            acc += q_to_f64(c) * va * self.structure.eval_inverse(&gx, &Vector::basis(b.clone(), Q::one()))?;
        }
        Ok(acc)
    }

    /// Πτ for a basis symbol of the sector.
    pub fn pi(&self, tau: &Symbol) -> Result<Field> {
        match self.sector {
            Sector::T => self
                .pi
                .get(tau)
                .cloned()
                .ok_or_else(|| ReconError::NotInBasis(self.structure.name(tau))),
            Sector::Plus => self.g_mono(tau),
        }
    }

    pub fn pi_vec(&self, v: &Vector) -> Result<Field> {
        let mut out = Field::zeros(self.d, self.l);
        for (s, c) in v.iter() {
            out.axpy(q_to_f64(c), &self.pi(s)?)?;
        }
        Ok(out)
    }

    /// Π_x v = (Π ⊗ g_x⁻¹)Δv.
    pub fn pi_x(&self, x: usize, v: &Vector) -> Result<Field> {
        let mut out = Field::zeros(self.d, self.l);
        for (s, c) in v.iter() {
            for (a, b, q) in self.row(s)?.iter() {
                let w = self.g_inv_at(&Vector::basis(b.clone(), Q::one()), x)?;
                if w != 0.0 {
                    out.axpy(q_to_f64(c) * q_to_f64(q) * w, &self.pi(a)?)?;
                }
            }
        }
        Ok(out)
    }

    /// Coefficient fields c_σ(x) = g_x⁻¹(τ/σ) over the left legs σ of τ, obtained
    /// from c_τ = 1 and c_σ = −Σ_{σ<η≤τ} c_η·g(η/σ).
    pub fn expansion_coefficients(&self, tau: &Symbol) -> Result<Vec<(Symbol, Field)>> {
        let mut legs: Vec<Symbol> = self.row(tau)?.iter().map(|(a, _, _)| a.clone()).collect();
        legs.sort_by(|a, b| (self.structure.hom(b), b).cmp(&(self.structure.hom(a), a)));
        legs.dedup();
        let mut out: Vec<(Symbol, Field)> = Vec::with_capacity(legs.len());
        for s in legs {
            if s == *tau {
                out.push((s, Field::constant(self.d, self.l, 1.0)));
                continue;
            }
            let mut c = Field::zeros(self.d, self.l);
            for (eta, ce) in &out {
                let q = self.quotient(eta, &s)?;
                if q.is_zero() {
                    continue;
                }
                let gq = self.g_vec(&q)?;
                for ((o, a), b) in c.values.iter_mut().zip(&ce.values).zip(&gq.values) {
                    *o -= a * b;
                }
            }
            out.push((s, c));
        }
        Ok(out)
    }

    /// Π_x τ(y) = Σ_σ c_σ(x) Πσ(y) as a rank-form two-variable function.
    pub fn pi_x_expansion(&self, tau: &Symbol) -> Result<TwoVarFunction> {
        let mut t = TwoVarFunction::default();
        for (s, c) in self.expansion_coefficients(tau)? {
            t.push(c, self.pi(&s)?);
        }
        Ok(t)
    }

    /// g_yx(τ/σ) = Σ_η c_η(x)·(g_y(η/σ) − g_x(η/σ)) for σ < τ, as a rank form in (x, y).
    pub fn g_yx_expansion(&self, tau: &Symbol, sigma: &Symbol) -> Result<TwoVarFunction> {
        let mut t = TwoVarFunction::default();
        let mut diag = Field::zeros(self.d, self.l);
        for (eta, c) in self.expansion_coefficients(tau)? {
            let q = self.quotient(&eta, sigma)?;
            if q.is_zero() {
                continue;
            }
            let gq = self.g_vec(&q)?;
            diag = &diag + &(&c * &gq);
            t.push(c, gq);
        }
        if sigma != tau {
            t.push(diag.scale(-1.0), Field::constant(self.d, self.l, 1.0));
        }
        Ok(t)
    }

    /// ĝ_yx τ = Σ_σ g_yx(τ/σ) σ.
    pub fn g_hat_yx(&self, y: usize, x: usize, tau: &Symbol) -> Result<BTreeMap<Symbol, f64>> {
        let mut out = BTreeMap::new();
        let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
        for (a, b, c) in self.row(tau)?.iter() {
            by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
        }
        for (a, v) in by_leg {
            out.insert(a, self.g_yx(y, x, &v)?);
        }
        Ok(out)
    }
}

/// Polynomial model: Π𝐗_e^k = x_e^k and g(X_e^i) = x_e^i.
pub fn canonical_polynomial_model(
    structure: Arc<ConcreteStructure>,
    partition: &crate::structures::PartitionOfUnity,
) -> Result<Model> {
    let (d, l) = (partition.d, partition.l);
    if structure.n_charts != partition.n_charts() {
        return Err(ReconError::GridMismatch("structure and partition disagree on charts".into()));
    }
    let mut g = CharacterField::new();
    for s in structure.generators() {
        match &s {
            Symbol::Coord { chart, axis } => {
                g.insert(s.clone(), partition.x[*chart as usize][*axis as usize].clone());
            }
            other => {
                return Err(ReconError::InvalidArgument(format!(
                    "{} is not a polynomial generator",
                    structure.name(other)
                )))
            }
        }
    }
    let mut pi = BTreeMap::new();
    for s in structure.basis(Space::T) {
        match s {
            Symbol::Poly { chart, k } => {
                pi.insert(s.clone(), partition.monomial(*chart, *k));
            }
            other => {
                return Err(ReconError::InvalidArgument(format!(
                    "{} is not a polynomial symbol",
                    structure.name(other)
                )))
            }
        }
    }
    Model::new(structure, Sector::T, d, l, g, pi, "canonical polynomial model")
}

/// The model on T⁺ with Π^g τ = g(τ), built from a character.
pub fn canonical_plus_model(structure: Arc<ConcreteStructure>, g: CharacterField) -> Result<Model> {
    let f0 = g
        .values
        .values()
        .next()
        .ok_or_else(|| ReconError::InvalidArgument("empty character".into()))?;
    let (d, l) = (f0.d, f0.l);
    Model::new(structure, Sector::Plus, d, l, g, BTreeMap::new(), "plus model")
}
