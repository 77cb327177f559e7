use std::collections::BTreeMap;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::build::admissible_g_values;
use super::kernel::{conv_full, GridKernel};
use crate::algebra::symbol::{q_to_f64, xmono, Space, Symbol, Q};
use crate::algebra::{Multi, Vector};
use crate::error::{ReconError, Result};
use crate::harmonic::Field;
use crate::models::{canonical_plus_model, d_gamma_norms, h_tau, Model, ModelledDistribution, PairSampler, Sector};
use crate::report::Report;
use crate::structures::formulas::multis_below;
use crate::structures::PartitionOfUnity;

fn sample_points(total: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(0..total)).collect()
}

fn record(r: &mut Report, name: &str, mut w: Vec<String>, worst: f64, tol: f64) {
    w.truncate(20);
    r.witnesses(name, w);
    if let Some(i) = r.items.last_mut() {
        i.value = Some(worst);
        i.threshold = Some(tol);
    }
}

/// ∂^k(φ·F) at every point, by the Leibniz rule over spectral derivatives of the factors.
pub fn leibniz_derivative(phi: &Field, f: &Field, k: Multi) -> Field {
    let d = phi.d;
    let mut out = Field::zeros(d, phi.l);
    for a in k.below(d) {
        let c = k.binom(&a) as f64;
        let rest = k.sub(&a).unwrap();
        let t = &phi.derivative(a.0) * &f.derivative(rest.0);
        out.axpy(c, &t).unwrap();
    }
    out
}

/// 𝐈_k^e(ζ)(x) for a single field ζ at one point.
fn i_k_at(kernel: &GridKernel, zeta: &Field, k: Multi, phi: &Field, x: usize) -> Result<f64> {
    let mut v = 0.0;
    for a in k.below(zeta.d) {
        let c = k.binom(&a) as f64;
        let rest = k.sub(&a).unwrap();
        let kz = kernel.conv_deriv(zeta, rest)?;
        v += c * phi.derivative(a.0).values[x] * kz.values[x];
    }
    Ok(v)
}

#[derive(Clone, Copy, Debug)]
pub struct AdmissibleTolerances {
    pub commutation: f64,
    pub g_formula: f64,
    pub identities: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for AdmissibleTolerances {
    fn default() -> Self {
        AdmissibleTolerances { commutation: 1e-9, g_formula: 1e-8, identities: 1e-8, points: 6, seed: 0 }
    }
}

/// Admissibility: polynomial part, Π(ℐτ) = K⋆Πτ, the formula for g on ℐ_k^{e+}τ,
/// and the pointwise identities for Π_x(ℐτ) and g_x(ℐ_k^{e+}τ).
pub fn check_admissible(
    model: &Model,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
    tol: &AdmissibleTolerances,
) -> Result<Report> {
    if model.sector != Sector::T {
        return Err(ReconError::InvalidArgument("admissibility concerns models on T".into()));
    }
    let st = &model.structure;
    let theta = q_to_f64(&st.theta());
    let mut r = Report::new("admissibility");

    let mut w = Vec::new();
    let mut worst = 0.0f64;
    for s in st.generators() {
        if let Symbol::Coord { chart, axis } = &s {
            let e = model.g.get(&s).unwrap().distance(&partition.x[*chart as usize][*axis as usize], false)?;
            worst = worst.max(e);
            if e > 1e-12 {
                w.push(format!("{}: {e:.3e}", st.name(&s)));
            }
        }
    }
    for s in st.basis(Space::T) {
        if let Symbol::Poly { chart, k } = s {
            let e = model.pi(s)?.distance(&partition.monomial(*chart, *k), false)?;
            worst = worst.max(e);
            if e > 1e-12 {
                w.push(format!("{}: {e:.3e}", st.name(s)));
            }
        }
    }
    record(&mut r, "polynomial_part", w, worst, 1e-12);

    let mut w = Vec::new();
    let mut worst = 0.0f64;
    for s in st.basis(Space::T) {
        if let Symbol::Integ(i) = s {
            let pi_inner = model.pi(&i.inner)?;
            let want = conv_full(kernel, &pi_inner)?;
            let e = model.pi(s)?.distance(&want, false)? / want.sup_norm().max(1.0);
            worst = worst.max(e);
            if e > tol.commutation {
                w.push(format!("{}: {e:.3e}", st.name(s)));
            }
        }
    }
    record(&mut r, "commutation", w, worst, tol.commutation);

    let mut w = Vec::new();
    let mut worst = 0.0f64;
    let gens: Vec<Symbol> = st.generators().into_iter().filter(|s| matches!(s, Symbol::Integ(_))).collect();
    for s in &gens {
        let i = s.as_integ().unwrap();
        let want = admissible_g_values(model, &i.inner, i.k, i.chart.unwrap_or(0), kernel, partition)?;
        let e = model.g.get(s).unwrap().distance(&want, false)? / want.sup_norm().max(1.0);
        worst = worst.max(e);
        if e > tol.g_formula {
            w.push(format!("{}: {e:.3e}", st.name(s)));
        }
    }
    record(&mut r, "g_formula", w, worst, tol.g_formula);

    // pointwise identities at sampled x
    let pts = sample_points(model.len(), tol.points, tol.seed);
    let mut w_pi = Vec::new();
    let mut w_g = Vec::new();
    let (mut worst_pi, mut worst_g) = (0.0f64, 0.0f64);
    for s in st.basis(Space::T) {
        let Symbol::Integ(i) = s else { continue };
        let tau = &i.inner;
        let bound = st.hom(tau) + st.theta();
        for &x in &pts {
            let pix_tau = model.pi_x(x, &Vector::basis(tau.clone(), Q::one()))?;
            let lhs = model.pi_x(x, &Vector::basis(s.clone(), Q::one()))?;
            let mut rhs = conv_full(kernel, &pix_tau)?;
            for e in st.charts() {
                for k in multis_below(st.d(), &bound) {
                    let ik = i_k_at(kernel, &pix_tau, k, &partition.phi[e as usize], x)?;
                    let pk = model.pi_x(x, &Vector::basis(Symbol::poly(e, k), Q::one()))?;
                    rhs.axpy(-ik / k.factorial() as f64, &pk)?;
                }
            }
            let err = lhs.distance(&rhs, false)? / rhs.sup_norm().max(1.0);
            worst_pi = worst_pi.max(err);
            if err > tol.identities {
                w_pi.push(format!("Pi_x({}) at x={x}: {err:.3e}", st.name(s)));
            }
        }
    }
    for s in &gens {
        let i = s.as_integ().unwrap();
        let (tau, k, e) = (&i.inner, i.k, i.chart.unwrap_or(0));
        let phi = &partition.phi[e as usize];
        let full = leibniz_derivative(phi, &conv_full(kernel, &model.pi(tau)?)?, k);
        let g = model.g.get(s).unwrap();
        let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
        for (a, b, c) in model.row(tau)?.iter() {
            by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
        }
        for &x in &pts {
            let mut lhs = g.values[x];
            for (sigma, q) in &by_leg {
                if (k.order() as f64) < model.hom(sigma) + theta {
                    continue;
                }
                let pix = model.pi_x(x, &Vector::basis(sigma.clone(), Q::one()))?;
                lhs += model.g_at(q, x)? * i_k_at(kernel, &pix, k, phi, x)?;
            }
            let err = (lhs - full.values[x]).abs() / full.sup_norm().max(1.0);
            worst_g = worst_g.max(err);
            if err > tol.identities {
                w_g.push(format!("{} at x={x}: {err:.3e}", st.name(s)));
            }
        }
    }
    record(&mut r, "identity_pi_integrated", w_pi, worst_pi, tol.identities);
    record(&mut r, "identity_g_integrated", w_g, worst_g, tol.identities);
    Ok(r)
}

/// Usualness: g_x(𝐃_e^kτ) against ∂_y^k{φ_e(Π̊_x P_{>|k|} ⊗ g_x)Δτ}(y) at y = x.
pub fn check_usual(model: &Model, partition: &PartitionOfUnity, tol: f64) -> Result<Report> {
    let st = &model.structure;
    let mut r = Report::new("usual model");
    let mut w = Vec::new();
    let mut worst = 0.0f64;
    let polys: Vec<(u16, Multi)> = st
        .basis(Space::T)
        .iter()
        .filter_map(|s| match s {
            Symbol::Poly { chart, k } => Some((*chart, *k)),
            _ => None,
        })
        .collect();
    for tau in st.basis(Space::T) {
        if tau.is_poly() {
            continue;
        }
        let row = model.row(tau)?;
        for &(e, k) in &polys {
            let lhs = model.g_vec(&st.d_extract(tau, e, k)?)?;
            // Σ over non-polynomial legs a with |a| > |k| of g_x(τ/a)·Π̊_x a
            let mut coeffs: BTreeMap<Symbol, Field> = BTreeMap::new();
            let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
            for (a, b, c) in row.iter() {
                if a.is_poly() || model.hom(a) <= k.order() as f64 {
                    continue;
                }
                by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
            }
            for (a, q) in &by_leg {
                let ga = model.g_vec(q)?;
                for (rho, c) in model.expansion_coefficients(a)? {
                    if rho.is_poly() {
                        continue;
                    }
                    let t = &ga * &c;
                    match coeffs.get_mut(&rho) {
                        Some(f) => f.axpy(1.0, &t)?,
                        None => {
                            coeffs.insert(rho, t);
                        }
                    }
                }
            }
            let mut rhs = Field::zeros(model.d, model.l);
            for (rho, a) in &coeffs {
                let dk = leibniz_derivative(&partition.phi[e as usize], &model.pi(rho)?, k);
                rhs = &rhs + &(a * &dk);
            }
            let scale = lhs.sup_norm().max(rhs.sup_norm()).max(1.0);
            let err = lhs.distance(&rhs, false)? / scale;
            worst = worst.max(err);
            if err > tol {
                w.push(format!("{} at X[{e}]^{}: {err:.3e}", st.name(tau), k.display(st.d())));
            }
        }
    }
    record(&mut r, "usual", w, worst, tol);
    Ok(r)
}

/// Υ_α^e𝒉_τ(x) = ℐ_0^{e+}𝒉_τ(x) + Σ_k g_x(ℐ_k^{e+}τ) X_e^k/k!, as a T⁺ modelled distribution.
pub fn upsilon_distribution(model: &Model, tau: &Symbol, e: u16) -> Result<ModelledDistribution> {
    let st = &model.structure;
    let g = &st.grading;
    let h = h_tau(model, tau)?;
    let mut md = ModelledDistribution::new(model.hom(tau) + q_to_f64(&st.theta()), Sector::Plus);
    for (sigma, c) in &h.coeffs {
        if let Some(s) = g.iplus_or_null(e, Multi::ZERO, sigma) {
            md.coeffs.insert(s, c.clone());
        }
    }
    let bound = st.hom(tau) + st.theta();
    for k in multis_below(st.d(), &bound) {
        let gen = Symbol::iplus(e, k, tau.clone());
        let Some(v) = model.g.get(&gen) else { continue };
        let slot = md.coeffs.entry(xmono(e, &k)).or_insert_with(|| Field::zeros(model.d, model.l));
        slot.axpy(1.0 / k.factorial() as f64, v)?;
    }
    Ok(md)
}

/// Υ𝒉_τ ∈ 𝒟^{|τ|+θ} and the intertwining identity
/// g_yx(ℐ_m^{e+}τ) + Σ_ℓ (y_e−x_e)^ℓ/ℓ! 𝐈_{m+ℓ}(Π_xτ)(x) = Σ_σ g_yx(τ/σ) 𝐈_m(Π_yσ)(y).
pub fn upsilon_check(
    model: &Model,
    tau: &Symbol,
    e: u16,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
    sampler: &PairSampler,
    pairs: usize,
    tol: f64,
) -> Result<Report> {
    let st = &model.structure;
    if tau.is_poly() {
        return Err(ReconError::InvalidArgument(format!("{} is polynomial", st.name(tau))));
    }
    let mut r = Report::new("upsilon");
    let md = upsilon_distribution(model, tau, e)?;
    let plus = canonical_plus_model(st.clone(), model.g.clone())?;
    let dg = d_gamma_norms(&md, &plus, sampler)?;
    r.extend("D", dg.report);

    let theta = q_to_f64(&st.theta());
    let bound = st.hom(tau) + st.theta();
    let ms = multis_below(st.d(), &bound);
    let phi = &partition.phi[e as usize];
    let mut by_leg: BTreeMap<Symbol, Vector> = BTreeMap::new();
    for (a, b, c) in model.row(tau)?.iter() {
        by_leg.entry(a.clone()).or_insert_with(Vector::zero).add_term(b.clone(), *c);
    }
    let pts = sample_points(model.len(), 2 * pairs, sampler.seed ^ 0x5151);
    let mut w = Vec::new();
    let mut worst = 0.0f64;
    for p in pts.chunks(2) {
        let (y, x) = (p[0], p[1]);
        let pix = model.pi_x(x, &Vector::basis(tau.clone(), Q::one()))?;
        let ik_x: BTreeMap<Multi, f64> =
            ms.iter().map(|k| Ok((*k, i_k_at(kernel, &pix, *k, phi, x)?))).collect::<Result<_>>()?;
        let dx: Vec<f64> = (0..model.d)
            .map(|i| partition.x[e as usize][i].values[y] - partition.x[e as usize][i].values[x])
            .collect();
        for m in &ms {
            let gen = Symbol::iplus(e, *m, tau.clone());
            if !st.contains(&gen, Space::Plus) && model.g.get(&gen).is_none() {
                continue;
            }
            let mut lhs = model.g_yx(y, x, &Vector::basis(gen.clone(), Q::one()))?;
            for (k, v) in &ik_x {
                let Some(l) = k.sub(m) else { continue };
                let mut mono = 1.0;
                for (i, di) in dx.iter().enumerate() {
                    mono *= di.powi(l.0[i] as i32);
                }
                lhs += mono / l.factorial() as f64 * v;
            }
            let mut rhs = 0.0;
            for (sigma, q) in &by_leg {
                if (m.order() as f64) >= model.hom(sigma) + theta {
                    continue;
                }
                let piy = model.pi_x(y, &Vector::basis(sigma.clone(), Q::one()))?;
                rhs += model.g_yx(y, x, q)? * i_k_at(kernel, &piy, *m, phi, y)?;
            }
            let err = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
            worst = worst.max(err);
            if err > tol {
                w.push(format!("{} at (y={y}, x={x}): {err:.3e}", st.name(&gen)));
            }
        }
    }
    record(&mut r, "intertwining", w, worst, tol);
    Ok(r)
}
