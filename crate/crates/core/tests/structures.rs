use std::sync::Arc;
use std::time::Instant;

use reconkit::algebra::symbol::{parse_q, Space};
use reconkit::algebra::check_axioms;
use reconkit::structures::*;

fn poly(d: usize, r: &str) -> ConcreteStructureAlias {
    build_polynomial_structure(&PolynomialStructureParams { d, r: parse_q(r).unwrap() }).unwrap()
}

type ConcreteStructureAlias = reconkit::algebra::ConcreteStructure;

#[test]
fn polynomial_structure_passes_axioms() {
    for (d, r) in [(1, "4"), (2, "5/2"), (1, "1/2")] {
        let st = poly(d, r);
        let rep = check_axioms(&st);
        assert!(rep.passed(), "{}", rep.summary());
        assert!(validate_assumptions(&st).passed());
    }
}

#[test]
fn polynomial_basis_size() {
    // 4 charts, degrees 0..3 in one dimension
    let st = poly(1, "4");
    assert_eq!(st.basis(Space::T).len(), 16);
    // degrees 0..2 in two dimensions: 6 multi-indices on 16 charts
    let st = poly(2, "5/2");
    assert_eq!(st.basis(Space::T).len(), 96);
}

#[test]
fn tree_structure_passes_axioms() {
    let t0 = Instant::now();
    let st = build_tree_structure(&TreeStructureSpec::phi4_like(1)).unwrap();
    let rep = check_axioms(&st);
    assert!(rep.passed(), "{}", rep.summary());
    let v = validate_assumptions(&st);
    assert!(v.passed(), "{}", v.summary());
    assert!(t0.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn tree_symbols_have_expected_homogeneities() {
    let st = build_tree_structure(&TreeStructureSpec::phi4_like(1)).unwrap();
    for (name, h) in [("Xi", "-5/8"), ("Xi*I(Xi)", "-1/4"), ("I(Xi)", "3/8"), ("Xi*I(Xi)*I(Xi)", "1/8")] {
        let s = st.parse(name).unwrap();
        assert!(st.contains(&s, Space::T), "{name}");
        assert_eq!(st.hom(&s), parse_q(h).unwrap(), "{name}");
    }
}

#[test]
fn partition_and_lift() {
    let p = partition_of_unity(1, 8).unwrap();
    let st = Arc::new(poly(1, "3"));
    let f = reconkit::harmonic::random_trig(1, 8, 4, 7);
    let md = polynomial_lift(&st, &f, 3.0, &p).unwrap();
    assert_eq!(md.coeffs.len(), 12);
    let mut s = reconkit::harmonic::Field::zeros(1, 8);
    for (sym, c) in &md.coeffs {
        if let reconkit::algebra::Symbol::Poly { k, .. } = sym {
            if k.is_zero() {
                s.axpy(1.0, c).unwrap();
            }
        }
    }
    assert!(s.distance(&f, false).unwrap() < 1e-12);
}
