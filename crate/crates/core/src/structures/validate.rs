use std::collections::{BTreeMap, BTreeSet};

use super::formulas::{coord_row, integ_row, iplus_row, poly_row};
use crate::algebra::symbol::{Multi, Space, Symbol};
use crate::algebra::{ConcreteStructure, Row, Tensor};
use crate::report::Report;

fn rows_equal(a: &Row, b: &Row) -> bool {
    Tensor::from_rows(a) == Tensor::from_rows(b)
}

/// Polynomial sub-structures: every chart carries the same downward closed set of 𝐗_e^k,
/// with binomial rows, and the coordinates X_e^i are primitive.
fn assumption_a(st: &ConcreteStructure) -> Vec<String> {
    let d = st.d();
    let mut w = Vec::new();
    let mut per_chart: BTreeMap<u16, BTreeSet<Multi>> = BTreeMap::new();
    for s in st.basis(Space::T) {
        if let Symbol::Poly { chart, k } = s {
            per_chart.entry(*chart).or_default().insert(*k);
            match st.coproduct(s, false) {
                Ok(row) if rows_equal(row, &poly_row(d, *chart, *k)) => {}
                _ => w.push(format!("{}: row differs from the binomial rule", st.name(s))),
            }
        }
    }
    let reference = per_chart.get(&0).cloned().unwrap_or_default();
    if !reference.contains(&Multi::ZERO) {
        w.push("chart 0 has no unit polynomial".into());
    }
    for e in st.charts() {
        let ks = per_chart.get(&e).cloned().unwrap_or_default();
        if ks != reference {
            w.push(format!("chart {e} carries a different polynomial set"));
        }
        for k in &ks {
            for l in k.below(d) {
                if !ks.contains(&l) {
                    w.push(format!("X[{e}]^{} present without X[{e}]^{}", k.display(d), l.display(d)));
                }
            }
        }
    }
    let needs_coords = reference.iter().any(|k| k.order() > 0);
    for e in st.charts() {
        for i in 0..d as u8 {
            let c = Symbol::coord(e, i);
            if st.contains(&c, Space::Plus) {
                if !rows_equal(st.coproduct(&c, true).unwrap(), &coord_row(&c)) {
                    w.push(format!("{}: not primitive", st.name(&c)));
                }
            } else if needs_coords {
                w.push(format!("{} missing from T⁺", st.name(&c)));
            }
        }
    }
    w
}

/// Intertwining rules for ℐ and ℐ_k^{e+}, recomputed from the stored rows.
fn assumption_b(st: &ConcreteStructure) -> Vec<String> {
    let g = &st.grading;
    let mut w = Vec::new();
    for s in st.basis(Space::T) {
        if let Symbol::Integ(i) = s {
            let Ok(inner) = st.coproduct(&i.inner, false) else {
                w.push(format!("{}: inner symbol not in the basis", st.name(s)));
                continue;
            };
            let expect = integ_row(g, st.n_charts, &i.inner, inner);
            if !rows_equal(st.coproduct(s, false).unwrap(), &expect) {
                w.push(format!("{}: row differs from (ℐ⊗Id)Δτ + Σ 𝐗^ℓ/ℓ!⊗ℐ_ℓ^+τ", st.name(s)));
            }
        }
    }
    for s in st.generators() {
        if let Symbol::Integ(i) = &s {
            let Ok(inner) = st.coproduct(&i.inner, false) else {
                w.push(format!("{}: inner symbol not in the basis of T", st.name(&s)));
                continue;
            };
            let expect = iplus_row(g, i.chart.unwrap_or(0), i.k, &i.inner, inner);
            let stored = match st.coproduct(&s, true) {
                Ok(r) => r.clone(),
                Err(_) => st.delta_plus_any(&s).map(|r| r.to_vec()).unwrap_or_default(),
            };
            if !rows_equal(&stored, &expect) {
                w.push(format!("{}: row differs from the intertwining rule", st.name(&s)));
            }
            if st.hom(&s) <= num_traits::Zero::zero() {
                w.push(format!("{}: non-positive homogeneity", st.name(&s)));
            }
        }
    }
    w
}

/// Free generation of 𝓑⁺ and lower-triangular quotients.
fn assumption_c(st: &ConcreteStructure) -> Vec<String> {
    let mut w = Vec::new();
    let gens: BTreeSet<Symbol> = st.generators().into_iter().collect();
    for s in st.basis(Space::Plus) {
        for f in s.factors() {
            if !f.is_generator() {
                w.push(format!("{}: factor {} is not a generator", st.name(s), st.name(&f)));
            }
        }
        let factors = s.factors();
        if factors.len() > 1 {
            let mut acc = Tensor::from_rows(&[(Symbol::Unit, Symbol::Unit, num_traits::One::one())]);
            let mut ok = true;
            for f in &factors {
                match st.coproduct(f, true) {
                    Ok(r) => acc = acc.mul_plus(&Tensor::from_rows(r)),
                    Err(_) => {
                        ok = false;
                        w.push(format!("{}: generator {} has no stored row", st.name(s), st.name(f)));
                    }
                }
            }
            if ok && acc != Tensor::from_rows(st.coproduct(s, true).unwrap()) {
                w.push(format!("{}: Δ⁺ is not multiplicative here", st.name(s)));
            }
        }
    }
    for tau in st.basis(Space::T) {
        let h = st.hom(tau);
        for (a, b, _) in st.coproduct(tau, false).unwrap() {
            if a == tau {
                continue;
            }
            for f in b.factors() {
                let ok = match &f {
                    Symbol::Coord { .. } => true,
                    Symbol::Integ(i) if i.plus => st.hom(&i.inner) < h && gens.contains(&f),
                    _ => false,
                };
                if !ok {
                    w.push(format!(
                        "{} / {}: factor {} is not generated by lower symbols",
                        st.name(tau),
                        st.name(a),
                        st.name(&f)
                    ));
                }
            }
        }
    }
    w.truncate(20);
    w
}

/// Checks Assumptions A, B and C on the stored tables; one report item per assumption.
pub fn validate_assumptions(st: &ConcreteStructure) -> Report {
    let mut r = Report::new("structure assumptions");
    r.witnesses("A_polynomials", assumption_a(st));
    r.witnesses("B_intertwining", assumption_b(st));
    r.witnesses("C_free_generation", assumption_c(st));
    r
}
