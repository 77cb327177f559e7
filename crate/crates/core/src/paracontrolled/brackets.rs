use std::collections::BTreeMap;

use crate::algebra::symbol::{q_to_f64, Space, Symbol};
use crate::algebra::Vector;
use crate::error::{ReconError, Result};
use crate::harmonic::{para, Field};
use crate::models::{Model, Sector};
use crate::report::Report;

/// Brackets ⟦·⟧ᵍ on 𝓑⁺ and ⟦·⟧ᴹ on 𝓑.
#[derive(Clone, Debug, Default)]
pub struct BracketSet {
    pub g: BTreeMap<Symbol, Field>,
    pub m: BTreeMap<Symbol, Field>,
    pub provenance: String,
}

fn group_by_leg(row: &[(Symbol, Symbol, crate::algebra::Q)]) -> BTreeMap<Symbol, Vector> {
    let mut out: BTreeMap<Symbol, Vector> = BTreeMap::new();
    for (a, b, c) in row {
        out.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
    }
    out
}

/// ⟦v⟧ᵍ by linearity, with ⟦1⟧ᵍ = 1.
pub fn bracket_of_vector(brackets: &BTreeMap<Symbol, Field>, v: &Vector, d: usize, l: u32) -> Result<Field> {
    let mut out = Field::zeros(d, l);
    for (s, c) in v.iter() {
        if s.is_unit() {
            out = out.map(|x| x + q_to_f64(c));
            continue;
        }
        let b = brackets.get(s).ok_or_else(|| ReconError::NotInBasis(format!("no bracket for {s:?}")))?;
        out.axpy(q_to_f64(c), b)?;
    }
    Ok(out)
}

/// ⟦τ⟧ᵍ := g(τ) − Σ_{1<ν<τ} P_{g(τ/⁺ν)}⟦ν⟧ᵍ, in increasing homogeneity.
pub fn compute_g_brackets(model: &Model) -> Result<BTreeMap<Symbol, Field>> {
    let st = &model.structure;
    let mut out: BTreeMap<Symbol, Field> = BTreeMap::new();
    out.insert(Symbol::Unit, Field::constant(model.d, model.l, 1.0));
    let mut order: Vec<Symbol> = st.basis(Space::Plus).to_vec();
    // left legs of Δ⁺ may be generators outside the stored basis
    for s in st.basis(Space::Plus) {
        for (a, _, _) in st.delta_plus_any(s)?.iter() {
            if !order.contains(a) {
                order.push(a.clone());
            }
        }
    }
    order.sort_by(|a, b| (st.hom(a), a).cmp(&(st.hom(b), b)));
    for tau in order {
        if tau.is_unit() {
            continue;
        }
        let mut br = model.g_mono(&tau)?;
        for (nu, q) in group_by_leg(&st.delta_plus_any(&tau)?) {
            if nu.is_unit() || nu == tau {
                continue;
            }
            let coef = model.g_vec(&q)?;
            let bn = out.get(&nu).ok_or_else(|| ReconError::NotInBasis(st.name(&nu)))?;
            br = &br - &para(&coef, bn)?;
        }
        out.insert(tau, br);
    }
    Ok(out)
}

/// ⟦σ⟧ᴹ := Πσ − Σ_{μ<σ} P_{g(σ/μ)}⟦μ⟧ᴹ, in increasing homogeneity.
pub fn compute_m_brackets(model: &Model) -> Result<BTreeMap<Symbol, Field>> {
    let mut out: BTreeMap<Symbol, Field> = BTreeMap::new();
    for sigma in model.basis() {
        let br = m_bracket_step(model, sigma, &model.pi(sigma)?, &out)?;
        out.insert(sigma.clone(), br);
    }
    Ok(out)
}

/// One step of the ⟦·⟧ᴹ recursion given Πσ and the lower brackets.
pub fn m_bracket_step(model: &Model, sigma: &Symbol, pi: &Field, lower: &BTreeMap<Symbol, Field>) -> Result<Field> {
    let mut br = pi.clone();
    for (mu, q) in group_by_leg(&model.row(sigma)?) {
        if mu == *sigma {
            continue;
        }
        let coef = model.g_vec(&q)?;
        let bm = lower.get(&mu).ok_or_else(|| ReconError::NotInBasis(model.structure.name(&mu)))?;
        br = &br - &para(&coef, bm)?;
    }
    Ok(br)
}

/// Πσ = Σ_{μ<σ} P_{g(σ/μ)}⟦μ⟧ᴹ + ⟦σ⟧ᴹ, the inverse of one recursion step.
pub fn pi_from_bracket(model: &Model, sigma: &Symbol, bracket: &Field, lower: &BTreeMap<Symbol, Field>) -> Result<Field> {
    let mut pi = bracket.clone();
    for (mu, q) in group_by_leg(&model.row(sigma)?) {
        if mu == *sigma {
            continue;
        }
        let coef = model.g_vec(&q)?;
        let bm = lower.get(&mu).ok_or_else(|| ReconError::NotInBasis(model.structure.name(&mu)))?;
        pi = &pi + &para(&coef, bm)?;
    }
    Ok(pi)
}

pub fn compute_brackets(model: &Model) -> Result<BracketSet> {
    let g = compute_g_brackets(model)?;
    let m = match model.sector {
        Sector::T => compute_m_brackets(model)?,
        Sector::Plus => g.clone(),
    };
    Ok(BracketSet { g, m, provenance: model.provenance.clone() })
}

/// g(τ/σ) = Σ_{σ<η<τ} P_{g(τ/η)}⟦η/σ⟧ᵍ + ⟦τ/σ⟧ᵍ for all σ < τ in 𝓑.
pub fn quotient_bracket_check(model: &Model, gbrackets: &BTreeMap<Symbol, Field>, tol: f64) -> Result<Report> {
    let st = &model.structure;
    let plus = model.plus();
    let mut witnesses = Vec::new();
    let mut worst = 0.0f64;
    for tau in model.basis() {
        let legs = group_by_leg(&model.row(tau)?);
        for (sigma, tq) in &legs {
            if sigma == tau {
                continue;
            }
            let lhs = model.g_vec(tq)?;
            let mut rhs = bracket_of_vector(gbrackets, tq, model.d, model.l)?;
            for (eta, teta) in &legs {
                if eta == tau || eta == sigma {
                    continue;
                }
                let es = st.quotient(eta, sigma, plus)?;
                if es.is_zero() {
                    continue;
                }
                let coef = model.g_vec(teta)?;
                rhs = &rhs + &para(&coef, &bracket_of_vector(gbrackets, &es, model.d, model.l)?)?;
            }
            let err = lhs.distance(&rhs, false)? / lhs.sup_norm().max(1.0);
            worst = worst.max(err);
            if err > tol {
                witnesses.push(format!("{} / {}: {err:.3e}", st.name(tau), st.name(sigma)));
            }
        }
    }
    let mut r = Report::new("quotient brackets");
    witnesses.truncate(20);
    r.witnesses("quotient_identity", witnesses);
    if let Some(i) = r.items.last_mut() {
        i.value = Some(worst);
        i.threshold = Some(tol);
    }
    Ok(r)
}
