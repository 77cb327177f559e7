//! Exact verification of the Hopf algebra and comodule identities on stored tables.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use super::structure::ConcreteStructure;
use super::symbol::{Space, Symbol, Q};
use super::vector::{Tensor, Tensor3, Vector};
use crate::report::Report;

const MAX_WITNESSES: usize = 20;

fn collect<F>(symbols: &[Symbol], f: F) -> Vec<String>
where
    F: Fn(&Symbol) -> Option<String> + Sync,
{
    let mut w: Vec<String> = symbols.par_iter().filter_map(|s| f(s)).collect();
    w.truncate(MAX_WITNESSES);
    w
}

fn grading_witness(st: &ConcreteStructure, tau: &Symbol, plus: bool) -> Option<String> {
    let name = st.name(tau);
    let row = match st.coproduct(tau, plus) {
        Ok(r) => r,
        Err(e) => return Some(format!("{name}: {e}")),
    };
    let h = st.hom(tau);
    let t = Tensor::from_rows(row);
    if t.coeff(tau, &Symbol::Unit) != Q::one() {
        return Some(format!("{name}: identity term τ⊗1 missing or scaled"));
    }
    if plus {
        if h.is_negative() || (h.is_zero() && !tau.is_unit()) {
            return Some(format!("{name}: T⁺ basis element of homogeneity {h}"));
        }
        if !tau.is_unit() && t.coeff(&Symbol::Unit, tau) != Q::one() {
            return Some(format!("{name}: identity term 1⊗τ missing or scaled"));
        }
        if tau.is_unit() && row.len() != 1 {
            return Some("1: Δ⁺1 is not 1⊗1".into());
        }
    }
    for (a, b, _) in row {
        if st.hom(a) + st.hom(b) != h {
            return Some(format!("{name}: term {}⊗{} breaks the grading", st.name(a), st.name(b)));
        }
        let identity = (a == tau && b.is_unit()) || (plus && a.is_unit() && b == tau);
        if identity {
            continue;
        }
        let ha = st.hom(a);
        if ha >= h || (plus && !ha.is_positive()) {
            return Some(format!("{name}: term {}⊗{} is not strictly triangular", st.name(a), st.name(b)));
        }
        if !plus && !st.contains(a, Space::T) {
            return Some(format!("{name}: left leg {} not in the basis of T", st.name(a)));
        }
        if b.space() != Space::Plus {
            return Some(format!("{name}: right leg {} not in T⁺", st.name(b)));
        }
    }
    None
}

fn coassoc_witness(st: &ConcreteStructure, tau: &Symbol) -> Option<String> {
    let run = || -> crate::error::Result<Option<String>> {
        let row = st.delta_plus_any(tau)?;
        let mut lhs = Tensor3::default();
        let mut rhs = Tensor3::default();
        for (a, b, c) in row.iter() {
            for (b1, b2, x) in st.delta_plus_any(b)?.iter() {
                lhs.add_term(a.clone(), b1.clone(), b2.clone(), c * x);
            }
            for (a1, a2, x) in st.delta_plus_any(a)?.iter() {
                rhs.add_term(a1.clone(), a2.clone(), b.clone(), c * x);
            }
        }
        Ok(lhs.first_difference(&rhs).map(|(a, b, c, x)| {
            format!(
                "{}: coefficient mismatch {} on {}⊗{}⊗{}",
                st.name(tau),
                x,
                st.name(&a),
                st.name(&b),
                st.name(&c)
            )
        }))
    };
    run().unwrap_or_else(|e| Some(format!("{}: {e}", st.name(tau))))
}

fn comodule_witness(st: &ConcreteStructure, tau: &Symbol) -> Option<String> {
    let run = || -> crate::error::Result<Option<String>> {
        let row = st.coproduct(tau, false)?;
        let mut lhs = Tensor3::default();
        let mut rhs = Tensor3::default();
        for (a, b, c) in row.iter() {
            for (a1, a2, x) in st.coproduct(a, false)?.iter() {
                lhs.add_term(a1.clone(), a2.clone(), b.clone(), c * x);
            }
            for (b1, b2, x) in st.delta_plus_any(b)?.iter() {
                rhs.add_term(a.clone(), b1.clone(), b2.clone(), c * x);
            }
        }
        Ok(lhs.first_difference(&rhs).map(|(a, b, c, x)| {
            format!(
                "{}: coefficient mismatch {} on {}⊗{}⊗{}",
                st.name(tau),
                x,
                st.name(&a),
                st.name(&b),
                st.name(&c)
            )
        }))
    };
    run().unwrap_or_else(|e| Some(format!("{}: {e}", st.name(tau))))
}

/// Coefficientwise comodule identity: for every index triple (σ, μ₁, μ₂),
/// Σ_η (Δτ)^{ημ₂}(Δη)^{σμ₁} = Σ_μ (Δτ)^{σμ}(Δ⁺μ)^{μ₁μ₂}.
fn component_witness(st: &ConcreteStructure, tau: &Symbol) -> Option<String> {
    let run = || -> crate::error::Result<Option<String>> {
        let row = st.coproduct(tau, false)?;
        let mut triples: BTreeSet<(Symbol, Symbol, Symbol)> = BTreeSet::new();
        for (eta, mu2, _) in row {
            for (sigma, mu1, _) in st.coproduct(eta, false)? {
                triples.insert((sigma.clone(), mu1.clone(), mu2.clone()));
            }
        }
        for (sigma, mu, _) in row {
            for (m1, m2, _) in st.delta_plus_any(mu)?.iter() {
                triples.insert((sigma.clone(), m1.clone(), m2.clone()));
            }
        }
        for (sigma, mu1, mu2) in &triples {
            let mut left = Q::zero();
            for (eta, m2, c) in row {
                if m2 != mu2 {
                    continue;
                }
                for (s, m1, x) in st.coproduct(eta, false)? {
                    if s == sigma && m1 == mu1 {
                        left += c * x;
                    }
                }
            }
            let mut right = Q::zero();
            for (s, mu, c) in row {
                if s != sigma {
                    continue;
                }
                for (m1, m2, x) in st.delta_plus_any(mu)?.iter() {
                    if m1 == mu1 && m2 == mu2 {
                        right += c * x;
                    }
                }
            }
            if left != right {
                return Ok(Some(format!(
                    "{}: component ({}, {}, {}) gives {} vs {}",
                    st.name(tau),
                    st.name(sigma),
                    st.name(mu1),
                    st.name(mu2),
                    left,
                    right
                )));
            }
        }
        Ok(None)
    };
    run().unwrap_or_else(|e| Some(format!("{}: {e}", st.name(tau))))
}

fn left_legs(row: &[(Symbol, Symbol, Q)]) -> BTreeSet<Symbol> {
    row.iter().map(|(a, _, _)| a.clone()).collect()
}

/// Δ⁺(τ/σ) = Σ_η (η/σ) ⊗ (τ/η), for σ ranging over left legs of τ.
fn quotient_witness(st: &ConcreteStructure, tau: &Symbol, plus: bool) -> Option<String> {
    let run = || -> crate::error::Result<Option<String>> {
        let row: Vec<(Symbol, Symbol, Q)> = if plus {
            st.delta_plus_any(tau)?.to_vec()
        } else {
            st.coproduct(tau, false)?.clone()
        };
        let legs = left_legs(&row);
        for sigma in &legs {
            let ts = st.quotient(tau, sigma, plus)?;
            let lhs = st.delta_plus_vec(&ts)?;
            let mut rhs = Tensor::zero();
            for eta in &legs {
                let es = st.quotient(eta, sigma, plus)?;
                if es.is_zero() {
                    continue;
                }
                let te = st.quotient(tau, eta, plus)?;
                for (a, x) in es.iter() {
                    for (b, y) in te.iter() {
                        rhs.add_term(a.clone(), b.clone(), x * y);
                    }
                }
            }
            let d = lhs.diff(&rhs);
            if let Some((a, b, c)) = d.first() {
                return Ok(Some(format!(
                    "{} / {}: mismatch {} on {}⊗{}",
                    st.name(tau),
                    st.name(sigma),
                    c,
                    st.name(a),
                    st.name(b)
                )));
            }
        }
        Ok(None)
    };
    run().unwrap_or_else(|e| Some(format!("{}: {e}", st.name(tau))))
}

fn antipode_witness(st: &ConcreteStructure, tau: &Symbol) -> Option<String> {
    let run = || -> crate::error::Result<Option<String>> {
        let row = st.delta_plus_any(tau)?;
        let mut left = Vector::zero();
        let mut right = Vector::zero();
        for (a, b, c) in row.iter() {
            let sa = st.antipode(a)?;
            left.add_scaled(&sa.mul_plus(&Vector::basis(b.clone(), Q::one())), c);
            let sb = st.antipode(b)?;
            right.add_scaled(&Vector::basis(a.clone(), Q::one()).mul_plus(&sb), c);
        }
        let expect = if tau.is_unit() { Vector::basis(Symbol::Unit, Q::one()) } else { Vector::zero() };
        if left != expect {
            return Ok(Some(format!("{}: m(𝒜⊗Id)Δ⁺ differs from the counit", st.name(tau))));
        }
        if right != expect {
            return Ok(Some(format!("{}: m(Id⊗𝒜)Δ⁺ differs from the counit", st.name(tau))));
        }
        Ok(None)
    };
    run().unwrap_or_else(|e| Some(format!("{}: {e}", st.name(tau))))
}

/// Exact check of every structural identity. Never aborts.
pub fn check_axioms(st: &ConcreteStructure) -> Report {
    let t = st.basis(Space::T).to_vec();
    let p = st.basis(Space::Plus).to_vec();
    let mut r = Report::new("algebra axioms");
    let mut w = collect(&t, |s| grading_witness(st, s, false));
    w.extend(collect(&p, |s| grading_witness(st, s, true)));
    if !st.contains(&Symbol::Unit, Space::Plus) {
        w.push("1 is missing from the basis of T⁺".into());
    }
    r.witnesses("grading_triangularity", w);
    r.witnesses("coassociativity", collect(&p, |s| coassoc_witness(st, s)));
    r.witnesses("comodule", collect(&t, |s| comodule_witness(st, s)));
    r.witnesses("comodule_components", collect(&t, |s| component_witness(st, s)));
    r.witnesses("quotient_coproduct_plus", collect(&p, |s| quotient_witness(st, s, true)));
    r.witnesses("quotient_coproduct", collect(&t, |s| quotient_witness(st, s, false)));
    r.witnesses("antipode_inverse", collect(&p, |s| antipode_witness(st, s)));
    r
}
