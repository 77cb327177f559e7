//! Coproduct formulas shared by the builders and by the assumption validator.

use std::collections::BTreeMap;

use num_traits::{One, Signed};

use crate::algebra::symbol::{mul_t_many, xmono, Grading, Multi, Symbol, Q};
use crate::algebra::{Row, Tensor};
use crate::error::{ReconError, Result};

/// Δ𝐗_e^k = Σ_{ℓ≤k} C(k,ℓ) 𝐗_e^ℓ ⊗ X_e^{k−ℓ}.
pub fn poly_row(d: usize, chart: u16, k: Multi) -> Row {
    k.below(d)
        .into_iter()
        .map(|l| {
            let rest = k.sub(&l).unwrap();
            (Symbol::poly(chart, l), xmono(chart, &rest), Q::from_integer(k.binom(&l)))
        })
        .collect()
}

/// Δ⁺X_e^i = X_e^i ⊗ 1 + 1 ⊗ X_e^i.
pub fn coord_row(s: &Symbol) -> Row {
    vec![(s.clone(), Symbol::Unit, Q::one()), (Symbol::Unit, s.clone(), Q::one())]
}

/// Multi-indices ℓ with |ℓ| < bound (bound rational).
pub fn multis_below(d: usize, bound: &Q) -> Vec<Multi> {
    if !bound.is_positive() {
        return vec![];
    }
    let top = bound.ceil().to_integer() as u32;
    Multi::all_up_to(d, top).into_iter().filter(|m| Q::from_integer(m.order() as i128) < *bound).collect()
}

/// Δ(ℐτ) = (ℐ ⊗ Id)Δτ + Σ_{e, |ℓ|<|τ|+θ} 𝐗_e^ℓ/ℓ! ⊗ ℐ_ℓ^{e+}τ.
pub fn integ_row(g: &Grading, n_charts: u16, tau: &Symbol, tau_row: &Row) -> Row {
    let mut t = Tensor::zero();
    for (a, b, c) in tau_row {
        t.add_term(Symbol::integ(a.clone()), b.clone(), *c);
    }
    let bound = g.hom(tau) + g.theta;
    for e in 0..n_charts {
        for l in multis_below(g.d, &bound) {
            let right = Symbol::iplus(e, l, tau.clone());
            t.add_term(Symbol::poly(e, l), right, Q::new(1, l.factorial()));
        }
    }
    t.to_rows()
}

/// Δ⁺ℐ_k^{e+}τ = (ℐ_k^{e+} ⊗ Id)Δτ + Σ_{|k+ℓ|<|τ|+θ} X_e^ℓ/ℓ! ⊗ ℐ_{k+ℓ}^{e+}τ,
/// with ℐ_k^{e+}σ = 0 whenever |σ| + θ − |k| ≤ 0.
pub fn iplus_row(g: &Grading, chart: u16, k: Multi, tau: &Symbol, tau_row: &Row) -> Row {
    let mut t = Tensor::zero();
    for (a, b, c) in tau_row {
        if let Some(ia) = g.iplus_or_null(chart, k, a) {
            t.add_term(ia, b.clone(), *c);
        }
    }
    let bound = g.hom(tau) + g.theta;
    for l in Multi::all_up_to(g.d, bound.ceil().to_integer().max(0) as u32) {
        let kl = k.add(&l);
        if Q::from_integer(kl.order() as i128) >= bound {
            continue;
        }
        t.add_term(xmono(chart, &l), Symbol::iplus(chart, kl, tau.clone()), Q::new(1, l.factorial()));
    }
    t.to_rows()
}

/// Δ of a T symbol by the construction rules, with the rows of sub-symbols memoized.
pub fn delta_formula(g: &Grading, n_charts: u16, tau: &Symbol, memo: &mut BTreeMap<Symbol, Row>) -> Result<Row> {
    if let Some(r) = memo.get(tau) {
        return Ok(r.clone());
    }
    let row = match tau {
        Symbol::Poly { chart, k } => poly_row(g.d, *chart, *k),
        Symbol::Noise(_) => vec![(tau.clone(), Symbol::Unit, Q::one())],
        Symbol::Integ(i) if !i.plus => {
            let inner = delta_formula(g, n_charts, &i.inner, memo)?;
            integ_row(g, n_charts, &i.inner, &inner)
        }
        Symbol::Product(factors) => {
            let mut acc: Vec<(Vec<Symbol>, Symbol, Q)> = vec![(vec![], Symbol::Unit, Q::one())];
            for f in factors.iter() {
                let fr = match f {
                    Symbol::Coord { chart, axis } => poly_row(g.d, *chart, Multi::unit(*axis as usize)),
                    other => delta_formula(g, n_charts, other, memo)?,
                };
                let mut next = Vec::with_capacity(acc.len() * fr.len());
                for (left, right, c) in &acc {
                    for (a, b, x) in &fr {
                        let mut l2 = left.clone();
                        l2.push(a.clone());
                        next.push((l2, crate::algebra::mul_plus(right, b), c * x));
                    }
                }
                acc = next;
            }
            let mut t = Tensor::zero();
            for (left, right, c) in acc {
                let l = mul_t_many(&left).map_err(|e| {
                    ReconError::Unsupported(format!("coproduct of {}: {e}", g.name(tau)))
                })?;
                t.add_term(l, right, c);
            }
            t.to_rows()
        }
        other => {
            return Err(ReconError::InvalidArgument(format!("{} is not a symbol of T", g.name(other))));
        }
    };
    memo.insert(tau.clone(), row.clone());
    Ok(row)
}

/// Δ⁺ of a generator of T⁺ by the construction rules, given the Δ table of T.
pub fn delta_plus_generator(g: &Grading, s: &Symbol, t_rows: &BTreeMap<Symbol, Row>) -> Result<Row> {
    match s {
        Symbol::Coord { .. } => Ok(coord_row(s)),
        Symbol::Integ(i) if i.plus => {
            let tau_row = t_rows
                .get(&i.inner)
                .ok_or_else(|| ReconError::NotInBasis(g.name(&i.inner)))?;
            Ok(iplus_row(g, i.chart.unwrap_or(0), i.k, &i.inner, tau_row))
        }
        other => Err(ReconError::InvalidArgument(format!("{} is not a generator of T⁺", g.name(other)))),
    }
}

/// Δ⁺ of a monomial by multiplicativity over generator rows.
pub fn delta_plus_monomial(g: &Grading, s: &Symbol, gen_rows: &mut BTreeMap<Symbol, Row>, t_rows: &BTreeMap<Symbol, Row>) -> Result<Row> {
    let mut acc = Tensor::from_rows(&[(Symbol::Unit, Symbol::Unit, Q::one())]);
    for f in s.factors() {
        if !gen_rows.contains_key(&f) {
            let r = delta_plus_generator(g, &f, t_rows)?;
            gen_rows.insert(f.clone(), r);
        }
        acc = acc.mul_plus(&Tensor::from_rows(&gen_rows[&f]));
    }
    Ok(acc.to_rows())
}
