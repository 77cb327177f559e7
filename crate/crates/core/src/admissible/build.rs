use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::kernel::{conv_full, integrate_k, GridKernel};
use crate::algebra::symbol::{fmt_q, q_to_f64, Space, Symbol, Q};
use crate::algebra::{ConcreteStructure, Multi, Vector};
use crate::error::{ReconError, Result};
use crate::harmonic::{default_window, estimate_regularity, Field, TwoVarFunction};
use crate::models::{h_tau, CharacterField, Model, Sector};
use crate::paracontrolled::brackets::{m_bracket_step, pi_from_bracket};
use crate::paracontrolled::gip_reconstruct;
use crate::structures::PartitionOfUnity;

fn legs(model: &Model, tau: &Symbol) -> Result<BTreeMap<Symbol, Vector>> {
    let mut out: BTreeMap<Symbol, Vector> = BTreeMap::new();
    for (a, b, c) in model.row(tau)?.iter() {
        out.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
    }
    Ok(out)
}

/// Admissible family x ↦ Σ_{σ≤τ, |k|<|σ|+θ} g_x(τ/σ) Π_xσ in rank form, and the smallest |σ| used.
pub fn admissible_family(model: &Model, tau: &Symbol, k: Multi) -> Result<Option<(TwoVarFunction, f64)>> {
    let theta = q_to_f64(&model.structure.theta());
    let mut acc: BTreeMap<Symbol, Field> = BTreeMap::new();
    let mut alpha = f64::INFINITY;
    for (sigma, q) in legs(model, tau)? {
        let hs = model.hom(&sigma);
        if k.order() as f64 >= hs + theta {
            continue;
        }
        alpha = alpha.min(hs);
        let gq = model.g_vec(&q)?;
        for (rho, c) in model.expansion_coefficients(&sigma)? {
            let term = &gq * &c;
            match acc.get_mut(&rho) {
                Some(a) => a.axpy(1.0, &term)?,
                None => {
                    acc.insert(rho, term);
                }
            }
        }
    }
    if acc.is_empty() {
        return Ok(None);
    }
    let terms = acc.into_iter().map(|(rho, a)| Ok((a, model.pi(&rho)?))).collect::<Result<Vec<_>>>()?;
    Ok(Some((TwoVarFunction::rank(terms), alpha)))
}

/// g_x(ℐ_k^{e+}τ) = Σ_{σ≤τ, |k|<|σ|+θ} g_x(τ/σ) 𝐈_k^e(Π_xσ)(x).
pub fn admissible_g_values(
    model: &Model,
    tau: &Symbol,
    k: Multi,
    e: u16,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
) -> Result<Field> {
    match admissible_family(model, tau, k)? {
        None => Ok(Field::zeros(model.d, model.l)),
        Some((fam, alpha)) => integrate_k(kernel, &fam, k, Some(&partition.phi[e as usize]), alpha),
    }
}

fn empty_model(structure: Arc<ConcreteStructure>, partition: &PartitionOfUnity, provenance: &str) -> Result<Model> {
    if structure.d() != partition.d {
        return Err(ReconError::GridMismatch("structure and partition disagree on the dimension".into()));
    }
    if structure.n_charts != partition.n_charts() {
        return Err(ReconError::GridMismatch("structure and partition disagree on charts".into()));
    }
    let mut g = CharacterField::new();
    for s in structure.generators() {
        if let Symbol::Coord { chart, axis } = &s {
            g.insert(s.clone(), partition.x[*chart as usize][*axis as usize].clone());
        }
    }
    Ok(Model {
        structure,
        sector: Sector::T,
        d: partition.d,
        l: partition.l,
        g,
        pi: BTreeMap::new(),
        provenance: provenance.to_string(),
    })
}

fn plus_generators_by_inner(st: &ConcreteStructure) -> BTreeMap<Symbol, Vec<(u16, Multi, Symbol)>> {
    let mut out: BTreeMap<Symbol, Vec<(u16, Multi, Symbol)>> = BTreeMap::new();
    for s in st.generators() {
        if let Symbol::Integ(i) = &s {
            if i.plus {
                out.entry(i.inner.clone()).or_default().push((i.chart.unwrap_or(0), i.k, s.clone()));
            }
        }
    }
    out
}

fn fill_generators(
    model: &mut Model,
    inner: &Symbol,
    gens: &BTreeMap<Symbol, Vec<(u16, Multi, Symbol)>>,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
) -> Result<Vec<String>> {
    let mut log = Vec::new();
    if let Some(list) = gens.get(inner) {
        for (e, k, s) in list {
            let v = admissible_g_values(model, inner, *k, *e, kernel, partition)?;
            log.push(model.structure.name(s));
            model.g.insert(s.clone(), v);
        }
    }
    Ok(log)
}

fn canonical_pi(
    tau: &Symbol,
    noises: &BTreeMap<String, Field>,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
    memo: &mut BTreeMap<Symbol, Field>,
) -> Result<Field> {
    if let Some(f) = memo.get(tau) {
        return Ok(f.clone());
    }
    let f = match tau {
        Symbol::Poly { chart, k } => partition.monomial(*chart, *k),
        Symbol::Coord { chart, axis } => partition.x[*chart as usize][*axis as usize].clone(),
        Symbol::Noise(name) => noises
            .get(&**name)
            .cloned()
            .ok_or_else(|| ReconError::InvalidArgument(format!("no realization supplied for noise {name}")))?,
        Symbol::Integ(i) if !i.plus => conv_full(kernel, &canonical_pi(&i.inner, noises, kernel, partition, memo)?)?,
        Symbol::Product(fs) => {
            let mut acc = Field::constant(partition.d, partition.l, 1.0);
            for f in fs.iter() {
                acc = &acc * &canonical_pi(f, noises, kernel, partition, memo)?;
            }
            acc
        }
        other => return Err(ReconError::InvalidArgument(format!("{other:?} has no canonical realization"))),
    };
    if f.d != partition.d || f.l != partition.l {
        return Err(ReconError::GridMismatch("noise realization lives on another grid".into()));
    }
    memo.insert(tau.clone(), f.clone());
    Ok(f)
}

/// Smooth canonical model: ΠΞ = ζ, Π multiplicative, Π(ℐτ) = K⋆Πτ, Π𝐗_e^k = x_e^k,
/// and g fixed by the admissibility formula.
pub fn canonical_smooth_model(
    structure: Arc<ConcreteStructure>,
    noises: &BTreeMap<String, Field>,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
) -> Result<Model> {
    if !structure.has_integration() {
        return Err(ReconError::InvalidArgument("structure has no integration map".into()));
    }
    let mut model = empty_model(structure.clone(), partition, "canonical smooth model")?;
    let mut memo = BTreeMap::new();
    for tau in structure.basis(Space::T) {
        let f = canonical_pi(tau, noises, kernel, partition, &mut memo)?;
        model.pi.insert(tau.clone(), f);
    }
    let gens = plus_generators_by_inner(&structure);
    let mut inners: Vec<Symbol> = gens.keys().cloned().collect();
    inners.sort_by(|a, b| (structure.hom(a), a).cmp(&(structure.hom(b), b)));
    for inner in inners {
        fill_generators(&mut model, &inner, &gens, kernel, partition)?;
    }
    Model::new(model.structure, Sector::T, model.d, model.l, model.g, model.pi, &model.provenance)
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub hom: String,
    pub symbols: Vec<String>,
    pub from_bracket: Vec<String>,
    pub reconstructed: Vec<String>,
    pub generators: Vec<String>,
    pub bracket_exponents: Vec<(String, Option<f64>)>,
}

#[derive(Clone, Debug, Serialize, Default)]
pub struct AdmissibleBuildReport {
    pub levels: Vec<LevelReport>,
}

/// Shortfall of a bracket's exponent beyond which the build stops.
pub const HARD_SHORTFALL: f64 = 0.5;

/// The admissible model determined by brackets ⟦τ⟧ for |τ| ≤ 0, built level by level.
pub fn build_admissible(
    structure: Arc<ConcreteStructure>,
    brackets: &BTreeMap<Symbol, Field>,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
) -> Result<(Model, AdmissibleBuildReport)> {
    let mut model = empty_model(structure.clone(), partition, "built from brackets")?;
    let mut mb: BTreeMap<Symbol, Field> = BTreeMap::new();
    let gens = plus_generators_by_inner(&structure);
    let mut levels: BTreeMap<Q, Vec<Symbol>> = BTreeMap::new();
    for s in structure.basis(Space::T) {
        levels.entry(structure.hom(s)).or_default().push(s.clone());
    }
    for s in brackets.keys() {
        if !structure.contains(s, Space::T) {
            return Err(ReconError::NotInBasis(structure.name(s)));
        }
    }
    let window = default_window(partition.l);
    let mut report = AdmissibleBuildReport::default();
    for (h, syms) in levels {
        let mut lr = LevelReport {
            hom: fmt_q(&h),
            symbols: syms.iter().map(|s| structure.name(s)).collect(),
            from_bracket: vec![],
            reconstructed: vec![],
            generators: vec![],
            bracket_exponents: vec![],
        };
        let hf = q_to_f64(&h);
        for tau in &syms {
            let name = structure.name(tau);
            let (pi, br) = if let Symbol::Poly { chart, k } = tau {
                let pi = partition.monomial(*chart, *k);
                let br = m_bracket_step(&model, tau, &pi, &mb)?;
                (pi, br)
            } else if hf <= 0.0 {
                let br = brackets
                    .get(tau)
                    .ok_or_else(|| ReconError::InvalidArgument(format!("missing bracket for {name}")))?;
                if br.d != partition.d || br.l != partition.l {
                    return Err(ReconError::GridMismatch(format!("bracket of {name}")));
                }
                let exponent = estimate_regularity(br, window).ok().map(|f| f.slope);
                if let Some(e) = exponent {
                    if e < hf - HARD_SHORTFALL {
                        return Err(ReconError::BuildAborted(format!(
                            "level {}: bracket of {name} has exponent {e:.3}, declared {hf:.3}",
                            fmt_q(&h)
                        )));
                    }
                }
                lr.bracket_exponents.push((name.clone(), exponent));
                lr.from_bracket.push(name.clone());
                (pi_from_bracket(&model, tau, br, &mb)?, br.clone())
            } else {
                let f = h_tau(&model, tau)?;
                let pi = gip_reconstruct(&model, &f)?.rf;
                let br = m_bracket_step(&model, tau, &pi, &mb)?;
                lr.reconstructed.push(name.clone());
                (pi, br)
            };
            model.pi.insert(tau.clone(), pi);
            mb.insert(tau.clone(), br);
        }
        for tau in &syms {
            lr.generators.extend(fill_generators(&mut model, tau, &gens, kernel, partition)?);
        }
        report.levels.push(lr);
    }
    let model = Model::new(model.structure, Sector::T, model.d, model.l, model.g, model.pi, &model.provenance)?;
    Ok((model, report))
}
