use std::collections::BTreeMap;

use rayon::prelude::*;

use super::brackets::bracket_of_vector;
use crate::algebra::symbol::Symbol;
use crate::error::{ReconError, Result};
use crate::harmonic::{para, para2, Field, TwoVarFunction};
use crate::models::md::local_expansion;
use crate::models::norms::{mollifier_scales, Mollifier};
use crate::models::sampling::{base_points, dyadic_exponent};
use crate::models::{canonical_plus_model, md_quotient, Model, ModelledDistribution};
use crate::report::Report;

/// Reconstruction through the paraproduct **P**(Λ) of Λ_x = Π_x f(x).
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub rf: Field,
    /// f_Λ = **P**(Λ) − Λ_x(x), present when γ > 0.
    pub f_lambda: Option<Field>,
}

pub fn gip_reconstruct(model: &Model, f: &ModelledDistribution) -> Result<Reconstruction> {
    if f.gamma == 0.0 {
        return Err(ReconError::Unsupported("reconstruction at γ = 0 is not unique".into()));
    }
    let terms = local_expansion(model, f)?;
    if terms.is_empty() {
        let z = Field::zeros(model.d, model.l);
        return Ok(Reconstruction { rf: z.clone(), f_lambda: (f.gamma > 0.0).then_some(z) });
    }
    let lambda = TwoVarFunction::rank(terms.into_iter().map(|(_, a, b)| (a, b)).collect());
    let p = para2(&lambda)?;
    if f.gamma < 0.0 {
        return Ok(Reconstruction { rf: p, f_lambda: None });
    }
    let diag = lambda.diagonal().expect("non-empty rank form");
    let f_lambda = &p - &diag;
    Ok(Reconstruction { rf: &p - &f_lambda, f_lambda: Some(f_lambda) })
}

/// Rf together with ⟦f⟧ᴹ = Rf − Σ_τ P_{f^τ}⟦τ⟧ᴹ.
pub fn paracontrolled_reconstruct(
    model: &Model,
    f: &ModelledDistribution,
    mbrackets: &BTreeMap<Symbol, Field>,
) -> Result<(Field, Field)> {
    let rf = gip_reconstruct(model, f)?.rf;
    let mut rest = rf.clone();
    for (tau, ft) in &f.coeffs {
        if model.hom(tau) >= f.gamma {
            continue;
        }
        let b = mbrackets.get(tau).ok_or_else(|| ReconError::NotInBasis(model.structure.name(tau)))?;
        rest = &rest - &para(ft, b)?;
    }
    Ok((rf, rest))
}

/// ⟦f^τ⟧ᵍ = R(𝒇/τ) − Σ_μ P_{f^μ}⟦μ/τ⟧ᵍ, with R(𝒇/τ) obtained from the T⁺ model Π^g = g.
pub fn coefficient_representation(
    model: &Model,
    f: &ModelledDistribution,
    tau: &Symbol,
    gbrackets: &BTreeMap<Symbol, Field>,
) -> Result<Field> {
    if !f.coeffs.contains_key(tau) {
        return Ok(Field::zeros(model.d, model.l));
    }
    let plus = canonical_plus_model(model.structure.clone(), model.g.clone())?;
    let fq = md_quotient(model, f, tau)?;
    let r = gip_reconstruct(&plus, &fq)?.rf;
    let mut rest = r;
    for (mu, fm) in &f.coeffs {
        if mu == tau || model.hom(mu) >= f.gamma {
            continue;
        }
        let q = model.structure.quotient(mu, tau, model.plus())?;
        if q.is_zero() {
            continue;
        }
        rest = &rest - &para(fm, &bracket_of_vector(gbrackets, &q, model.d, model.l)?)?;
    }
    Ok(rest)
}

#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    pub base_points: usize,
    pub seed: u64,
    pub tol: f64,
    pub floor: f64,
    pub scales: Option<(i32, i32)>,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { base_points: 64, seed: 0, tol: 0.2, floor: 1e-12, scales: None }
    }
}

/// sup_x |⟨Rf − Π_x f(x), φ_x^λ⟩| per dyadic λ, and the fitted exponent.
pub fn reconstruction_pairings(
    model: &Model,
    f: &ModelledDistribution,
    rf: &Field,
    params: &BoundParams,
) -> Result<(Vec<(i32, f64)>, Option<f64>)> {
    let terms = local_expansion(model, f)?;
    let pts = base_points(model.d, model.l, params.base_points, params.seed);
    let (lo, hi) = params.scales.unwrap_or_else(|| mollifier_scales(model.l));
    let mut sups = Vec::new();
    for j in lo..=hi {
        let moll = Mollifier::new(model.d, model.l, j);
        let s = pts
            .par_iter()
            .map(|&x| {
                let mut acc = moll.pair(rf, x);
                for (_, a, pi) in &terms {
                    let ax = a.values[x];
                    if ax == 0.0 {
                        continue;
                    }
                    for (o, p) in acc.iter_mut().zip(moll.pair(pi, x)) {
                        *o -= ax * p;
                    }
                }
                acc.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .reduce(|| 0.0, f64::max);
        sups.push((j, s));
    }
    let e = dyadic_exponent(&sups, params.floor);
    Ok((sups, e))
}

pub fn reconstruction_bound_test(
    model: &Model,
    f: &ModelledDistribution,
    rf: &Field,
    params: &BoundParams,
) -> Result<Report> {
    let (sups, e) = reconstruction_pairings(model, f, rf, params)?;
    let mut r = Report::new("reconstruction bound");
    let need = f.gamma - params.tol;
    let passed = e.is_none_or(|s| s >= need);
    r.flag(
        "pairing_exponent",
        passed,
        Some(format!(
            "slope {e:?}, required {need:.4}, sups {}",
            sups.iter().map(|(j, s)| format!("{j}:{s:.2e}")).collect::<Vec<_>>().join(" ")
        )),
    );
    if let Some(i) = r.items.last_mut() {
        i.value = e;
        i.threshold = Some(need);
    }
    Ok(r)
}
