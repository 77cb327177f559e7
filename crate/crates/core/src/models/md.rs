use std::collections::BTreeMap;

use rayon::prelude::*;

use super::model::{Model, Sector};
use super::sampling::{base_points, dyadic_pairs, fine_exponent, random_pairs, torus_distance};
use crate::algebra::symbol::{q_to_f64, Symbol};
use crate::algebra::Vector;
use crate::error::{ReconError, Result};
use crate::harmonic::Field;
use crate::report::Report;

/// A modelled distribution f: x ↦ Σ_τ f^τ(x) τ, truncated below γ.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelledDistribution {
    pub gamma: f64,
    pub sector: Sector,
    pub coeffs: BTreeMap<Symbol, Field>,
}

impl ModelledDistribution {
    pub fn new(gamma: f64, sector: Sector) -> Self {
        ModelledDistribution { gamma, sector, coeffs: BTreeMap::new() }
    }

    pub fn coeff(&self, s: &Symbol) -> Option<&Field> {
        self.coeffs.get(s)
    }

    /// f(x) as a vector with floating coefficients.
    pub fn at(&self, x: usize) -> BTreeMap<Symbol, f64> {
        self.coeffs.iter().map(|(s, f)| (s.clone(), f.values[x])).collect()
    }

    fn check_model(&self, model: &Model) -> Result<()> {
        if model.sector != self.sector {
            return Err(ReconError::InvalidArgument("modelled distribution and model live in different sectors".into()));
        }
        for (s, f) in &self.coeffs {
            if !model.structure.contains(s, model.sector.space()) {
                return Err(ReconError::NotInBasis(model.structure.name(s)));
            }
            if f.d != model.d || f.l != model.l {
                return Err(ReconError::GridMismatch(format!("coefficient of {}", model.structure.name(s))));
            }
        }
        Ok(())
    }
}

/// 𝒉_τ(x) = Σ_{σ<τ} g_x(τ/σ) σ, of order γ = |τ|.
pub fn h_tau(model: &Model, tau: &Symbol) -> Result<ModelledDistribution> {
    let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
    for (a, b, c) in model.row(tau)?.iter() {
        if a != tau {
            by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
        }
    }
    let mut md = ModelledDistribution::new(model.hom(tau), model.sector);
    for (a, v) in by_leg {
        md.coeffs.insert(a, model.g_vec(&v)?);
    }
    Ok(md)
}

/// (𝒇/τ)(x) = Σ_σ f^σ(x)(σ/τ), a modelled distribution of order γ − |τ| on T⁺.
pub fn md_quotient(model: &Model, f: &ModelledDistribution, tau: &Symbol) -> Result<ModelledDistribution> {
    f.check_model(model)?;
    let st = &model.structure;
    let mut out = ModelledDistribution::new(f.gamma - model.hom(tau), Sector::Plus);
    for (s, fs) in &f.coeffs {
        let q = st.quotient(s, tau, model.plus())?;
        for (m, c) in q.iter() {
            let slot = out.coeffs.entry(m.clone()).or_insert_with(|| Field::zeros(model.d, model.l));
            slot.axpy(q_to_f64(c), fs)?;
        }
    }
    Ok(out)
}

/// Per-grade result of the 𝒟^γ check.
#[derive(Clone, Debug)]
pub struct GradeNorm {
    pub grade: f64,
    pub exponent: Option<f64>,
    pub ratio: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct DGammaReport {
    pub grades: Vec<GradeNorm>,
    pub norm: f64,
    pub report: Report,
}

/// Sampling parameters for two-point checks.
#[derive(Clone, Copy, Debug)]
pub struct PairSampler {
    pub base_points: usize,
    pub random_pairs: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for PairSampler {
    fn default() -> Self {
        PairSampler { base_points: 64, random_pairs: 64, seed: 0, tol: 0.2 }
    }
}

struct Increments<'a> {
    model: &'a Model,
    f: &'a ModelledDistribution,
    /// (σ₀, [(τ, τ/σ₀)]) for every σ₀ of grade below γ.
    targets: Vec<(Symbol, f64, Vec<(Symbol, Vector)>)>,
}

impl<'a> Increments<'a> {
    fn new(model: &'a Model, f: &'a ModelledDistribution) -> Result<Self> {
        let mut targets: BTreeMap<Symbol, Vec<(Symbol, Vector)>> = BTreeMap::new();
        for s in model.basis() {
            if model.hom(s) < f.gamma {
                targets.entry(s.clone()).or_default();
            }
        }
        for tau in f.coeffs.keys() {
            let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
            for (a, b, c) in model.row(tau)?.iter() {
                by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
            }
            for (a, v) in by_leg {
                if let Some(list) = targets.get_mut(&a) {
                    list.push((tau.clone(), v));
                }
            }
        }
        let targets = targets.into_iter().map(|(s, v)| (s.clone(), model.hom(&s), v)).collect();
        Ok(Increments { model, f, targets })
    }

    /// (grade, |f(y) − ĝ_yx f(x)|) per target symbol.
    fn at(&self, y: usize, x: usize) -> Result<Vec<(f64, f64)>> {
        let mut out = Vec::with_capacity(self.targets.len());
        for (s, h, list) in &self.targets {
            let mut v = self.f.coeff(s).map(|c| c.values[y]).unwrap_or(0.0);
            for (tau, q) in list {
                let fx = self.f.coeffs[tau].values[x];
                if fx != 0.0 {
                    v -= fx * self.model.g_yx(y, x, q)?;
                }
            }
            out.push((*h, v.abs()));
        }
        Ok(out)
    }
}

/// Sampled 𝒟^γ seminorm: per-grade exponents over dyadic separations and the overall ratio bound.
pub fn d_gamma_norms(f: &ModelledDistribution, model: &Model, sampler: &PairSampler) -> Result<DGammaReport> {
    f.check_model(model)?;
    let inc = Increments::new(model, f)?;
    let (d, l) = (model.d, model.l);
    let pts = base_points(d, l, sampler.base_points, sampler.seed);
    let groups = dyadic_pairs(d, l, &pts, 2, l as i32 - 3);
    let mut grades: Vec<f64> = inc.targets.iter().map(|t| t.1).collect();
    grades.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grades.dedup();
    let gi = |h: f64| grades.iter().position(|g| *g == h).unwrap();
    let scale = f.coeffs.values().map(|c| c.sup_norm()).fold(1.0, f64::max);

    let mut sups = vec![Vec::new(); grades.len()];
    let mut ratio = vec![0.0f64; grades.len()];
    for (j, pairs) in &groups {
        let vals: Vec<Vec<(f64, f64)>> = pairs.par_iter().map(|(y, x)| inc.at(*y, *x)).collect::<Result<_>>()?;
        let mut s = vec![0.0f64; grades.len()];
        for row in &vals {
            for (h, v) in row {
                let k = gi(*h);
                s[k] = s[k].max(*v);
            }
        }
        let dist = 2f64.powi(-j);
        for k in 0..grades.len() {
            sups[k].push((*j, s[k]));
            ratio[k] = ratio[k].max(s[k] / dist.powf(f.gamma - grades[k]));
        }
    }
    let extra = random_pairs(d, l, sampler.random_pairs, sampler.seed);
    let vals: Vec<(f64, Vec<(f64, f64)>)> = extra
        .par_iter()
        .map(|(y, x)| Ok((torus_distance(d, l, *y, *x), inc.at(*y, *x)?)))
        .collect::<Result<_>>()?;
    for (dist, row) in vals {
        for (h, v) in row {
            let k = gi(h);
            ratio[k] = ratio[k].max(v / dist.powf(f.gamma - grades[k]));
        }
    }

    let mut report = Report::new("D^gamma norms");
    let mut out = Vec::new();
    for (k, g) in grades.iter().enumerate() {
        let exponent = fine_exponent(&sups[k], l, 1e-12 * scale);
        let target = f.gamma - g;
        let passed = exponent.is_none_or(|e| e >= target - sampler.tol);
        report.flag(
            &format!("grade {g:.4}"),
            passed,
            Some(format!("exponent {exponent:?}, required {:.4}", target - sampler.tol)),
        );
        out.push(GradeNorm { grade: *g, exponent, ratio: ratio[k], passed });
    }
    let norm = ratio.iter().cloned().fold(0.0, f64::max);
    Ok(DGammaReport { grades: out, norm, report })
}

/// Λ_x(y) = Π_x f(x)(y) = Σ_σ a_σ(x) Πσ(y) with a_σ(x) = Σ_τ f^τ(x) g_x⁻¹(τ/σ).
pub fn local_expansion(model: &Model, f: &ModelledDistribution) -> Result<Vec<(Symbol, Field, Field)>> {
    f.check_model(model)?;
    let mut acc: BTreeMap<Symbol, Field> = BTreeMap::new();
    for (tau, ft) in &f.coeffs {
        for (s, c) in model.expansion_coefficients(tau)? {
            let term = ft * &c;
            match acc.get_mut(&s) {
                Some(a) => a.axpy(1.0, &term)?,
                None => {
                    acc.insert(s, term);
                }
            }
        }
    }
    acc.into_iter().map(|(s, a)| Ok((s.clone(), a, model.pi(&s)?))).collect()
}

/// Value of the vector f(x) paired with a single basis vector; convenience for tests.
pub fn component(f: &ModelledDistribution, s: &Symbol, x: usize) -> f64 {
    f.coeff(s).map(|c| c.values[x]).unwrap_or(0.0)
}

