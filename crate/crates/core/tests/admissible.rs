mod common;

use std::collections::BTreeMap;

use reconkit::admissible::*;
use reconkit::algebra::{Space, Symbol};
use reconkit::harmonic::{default_window, regularity_at_least, synthetic_field, Field};
use reconkit::models::{check_transition, Model, PairSampler};
use reconkit::paracontrolled::{compute_brackets, compute_m_brackets};
use reconkit::ReconError;

use common::{smooth_model, tree, Smooth};

fn harvest(model: &Model) -> BTreeMap<Symbol, Field> {
    compute_brackets(model)
        .unwrap()
        .m
        .into_iter()
        .filter(|(s, _)| !s.is_poly() && model.hom(s) <= 0.0)
        .collect()
}

fn round_trip(s: &Smooth) -> Model {
    let input = harvest(&s.model);
    let (rebuilt, report) = build_admissible(s.st.clone(), &input, &s.kernel, &s.partition).unwrap();
    assert!(!report.levels.is_empty());
    rebuilt
}

#[test]
fn round_trip_reproduces_brackets_and_model() {
    let l = 10;
    let s = smooth_model(tree(), l, 12);
    let input = harvest(&s.model);
    let rebuilt = round_trip(&s);
    let again = compute_m_brackets(&rebuilt).unwrap();
    for (tau, b) in &input {
        let name = s.st.name(tau);
        assert!(again[tau].distance(b, false).unwrap() <= 1e-10 * b.sup_norm().max(1.0), "bracket {name}");
    }
    for tau in s.st.basis(Space::T) {
        let name = s.st.name(tau);
        let a = s.model.pi(tau).unwrap();
        let b = rebuilt.pi(tau).unwrap();
        if s.model.hom(tau) <= 0.0 {
            assert!(a.distance(&b, false).unwrap() <= 1e-9 * a.sup_norm().max(1.0), "pi {name}");
        } else {
            let diff = &a - &b;
            if diff.sup_norm() > 1e-9 * a.sup_norm().max(1.0) {
                let (ok, e) = regularity_at_least(&diff, s.model.hom(tau), 0.2, default_window(l)).unwrap();
                assert!(ok, "pi {name}: {e:?}");
            }
        }
    }
}

#[test]
fn source_and_rebuilt_models_are_admissible_and_usual() {
    let s = smooth_model(tree(), 10, 13);
    let rebuilt = round_trip(&s);
    for m in [&s.model, &rebuilt] {
        let a = check_admissible(m, &s.kernel, &s.partition, &AdmissibleTolerances::default()).unwrap();
        assert!(a.passed(), "{}", a.summary());
        let u = check_usual(m, &s.partition, 1e-6).unwrap();
        assert!(u.passed(), "{}", u.summary());
        let t = check_transition(m, 10, 1, 1e-9).unwrap();
        assert!(t.passed(), "{}", t.summary());
    }
}

#[test]
fn integration_commutes_with_the_structure_group() {
    let s = smooth_model(tree(), 10, 14);
    let xi = s.st.parse("Xi").unwrap();
    for e in 0..s.partition.n_charts() {
        let r = upsilon_check(&s.model, &xi, e, &s.kernel, &s.partition, &PairSampler::default(), 10, 1e-8).unwrap();
        assert!(r.passed(), "chart {e}: {}", r.summary());
    }
}

#[test]
fn missing_bracket_is_reported() {
    let s = smooth_model(tree(), 9, 1);
    let mut input = harvest(&s.model);
    input.remove(&s.st.parse("Xi*I(Xi)").unwrap());
    match build_admissible(s.st.clone(), &input, &s.kernel, &s.partition) {
        Err(ReconError::InvalidArgument(m)) => assert!(m.contains("Xi*I(Xi)"), "{m}"),
        other => panic!("expected a missing-bracket error, got {:?}", other.err()),
    }
}

#[test]
fn rough_bracket_aborts_the_build() {
    let s = smooth_model(tree(), 10, 1);
    let mut input = harvest(&s.model);
    // declared −1/4, supplied at −1.5
    input.insert(s.st.parse("Xi*I(Xi)").unwrap(), synthetic_field(1, 10, -1.5, 3));
    match build_admissible(s.st.clone(), &input, &s.kernel, &s.partition) {
        Err(ReconError::BuildAborted(_)) => {}
        other => panic!("expected an aborted build, got {:?}", other.err()),
    }
}

#[test]
fn bracket_outside_the_basis_is_rejected() {
    let s = smooth_model(tree(), 9, 1);
    let mut input = harvest(&s.model);
    input.insert(Symbol::noise("Eta"), Field::zeros(1, 9));
    assert!(build_admissible(s.st.clone(), &input, &s.kernel, &s.partition).is_err());
}

#[test]
fn kernel_gains_theta_derivatives() {
    let l = 12;
    let k = KernelFamily::default().on_grid(1, l);
    let slopes: Vec<f64> = (0..9)
        .map(|seed| {
            let z = synthetic_field(1, l, -0.625, seed);
            reconkit::harmonic::estimate_regularity(&conv_full(&k, &z).unwrap(), default_window(l)).unwrap().slope
        })
        .collect();
    let m = common::median(slopes);
    // ε = 0.1 is lost against θ = 1
    assert!((m - 0.275).abs() <= 0.2, "median {m}");
}

#[test]
fn kernel_spec_round_trips() {
    let k = KernelFamily::from_json(r#"{"theta":"1","eps":"1/10","n_max":null}"#).unwrap();
    assert_eq!(k, KernelFamily::default());
    assert_eq!(KernelFamily::from_json(&k.to_json()).unwrap(), k);
    assert!(KernelFamily::new(0.0, 0.1, None).is_err());
    assert!(KernelFamily::new(1.0, -0.1, None).is_err());
}

#[test]
fn kernel_levels_obey_their_scaling() {
    let k = KernelFamily::default().on_grid(1, 12);
    for (n, a, bound) in kernel_bound_audit(&k, 2) {
        assert!(bound.is_finite() && bound > 0.0, "level {n} order {a:?}");
    }
    assert!(chi_k(0.0) == 1.0 && chi_k(1.0) == 0.0);
}

#[test]
fn model_needs_a_realization_for_every_noise() {
    let st = tree();
    let p = reconkit::structures::partition_of_unity(1, 8).unwrap();
    let k = KernelFamily::default().on_grid(1, 8);
    assert!(canonical_smooth_model(st, &BTreeMap::new(), &k, &p).is_err());
}
