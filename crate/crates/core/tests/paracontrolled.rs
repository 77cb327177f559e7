mod common;

use std::collections::BTreeMap;

use reconkit::admissible::conv_full;
use reconkit::algebra::Space;
use reconkit::harmonic::*;
use reconkit::models::*;
use reconkit::paracontrolled::*;
use reconkit::structures::{partition_of_unity, polynomial_lift};
use reconkit::ReconError;

use common::{poly, smooth_model, tree};

#[test]
fn brackets_of_the_first_trees_match_their_expansion() {
    let s = smooth_model(tree(), 10, 3);
    let br = compute_brackets(&s.model).unwrap();
    let zeta = &s.zeta;
    let z = conv_full(&s.kernel, zeta).unwrap();
    let one = &para(zeta, &z).unwrap() + &resonant(&z, zeta).unwrap();
    let t1 = s.st.parse("Xi*I(Xi)").unwrap();
    assert!(br.m[&t1].distance(&one, false).unwrap() <= 1e-10);
    let z2 = &z * &z;
    let two = &(&(&z2 * zeta) - &para(&z2, zeta).unwrap()) - &para(&z, &one).unwrap().scale(2.0);
    let t2 = s.st.parse("Xi*I(Xi)*I(Xi)").unwrap();
    assert!(br.m[&t2].distance(&two, false).unwrap() <= 1e-10);
    let xi = s.st.parse("Xi").unwrap();
    assert!(br.m[&xi].distance(zeta, false).unwrap() == 0.0);
}

#[test]
fn model_is_recovered_from_its_brackets() {
    // Πτ = Σ_σ P_{g(τ/σ)}⟦σ⟧ᴹ + ⟦τ⟧ᴹ, summed through the recursion
    let s = smooth_model(tree(), 10, 8);
    let br = compute_brackets(&s.model).unwrap();
    let q = quotient_bracket_check(&s.model, &br.g, 1e-9).unwrap();
    assert!(q.passed(), "{}", q.summary());
    for tau in s.st.basis(Space::T) {
        let name = s.st.name(tau);
        let rebuilt = brackets::pi_from_bracket(&s.model, tau, &br.m[tau], &br.m).unwrap();
        let pi = s.model.pi(tau).unwrap();
        assert!(rebuilt.distance(&pi, false).unwrap() <= 1e-9 * pi.sup_norm().max(1.0), "{name}");
    }
}

#[test]
fn polynomial_brackets_are_smooth() {
    let st = poly(1, "4");
    let p = partition_of_unity(1, 10).unwrap();
    let m = canonical_polynomial_model(st, &p).unwrap();
    let br = compute_brackets(&m).unwrap();
    for (s, f) in br.m.iter().chain(br.g.iter()) {
        let (ok, e) = regularity_at_least(f, m.hom(s), 0.2, default_window(10)).unwrap();
        assert!(ok, "{s} {e:?}");
    }
}

#[test]
fn function_like_reconstruction_is_exact() {
    let l = 12;
    let st = poly(1, "3");
    let p = partition_of_unity(1, l).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let mb = compute_m_brackets(&m).unwrap();
    for seed in 0..3 {
        let f = random_trig(1, l, 8, seed);
        let md = polynomial_lift(&st, &f, 3.0, &p).unwrap();
        let (rf, rest) = paracontrolled_reconstruct(&m, &md, &mb).unwrap();
        assert!(rf.distance(&f, false).unwrap() <= 1e-6, "seed {seed}");
        let (ok, e) = regularity_at_least(&rest, 3.0, 0.2, default_window(l)).unwrap();
        assert!(ok, "seed {seed}: {e:?}");
    }
}

#[test]
fn lift_satisfies_the_reconstruction_bound() {
    let l = 12;
    let st = poly(1, "5/2");
    let p = partition_of_unity(1, l).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let f = random_trig(1, l, 8, 4);
    let md = polynomial_lift(&st, &f, 2.5, &p).unwrap();
    let rf = gip_reconstruct(&m, &md).unwrap().rf;
    let r = reconstruction_bound_test(&m, &md, &rf, &BoundParams::default()).unwrap();
    assert!(r.passed(), "{}", r.summary());
}

#[test]
fn h_tau_reconstructs_to_the_model() {
    let s = smooth_model(tree(), 10, 5);
    let mb = compute_m_brackets(&s.model).unwrap();
    for name in ["I(Xi)", "Xi*I(Xi)*I(Xi)"] {
        let tau = s.st.parse(name).unwrap();
        let f = h_tau(&s.model, &tau).unwrap();
        let (rf, _) = paracontrolled_reconstruct(&s.model, &f, &mb).unwrap();
        let pi = s.model.pi(&tau).unwrap();
        let (ok, e) = regularity_at_least(&(&rf - &pi), f.gamma, 0.2, default_window(10)).unwrap();
        assert!(ok, "{name}: {e:?}");
    }
}

#[test]
fn reconstruction_at_gamma_zero_is_refused() {
    let st = poly(1, "1");
    let p = partition_of_unity(1, 8).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let md = ModelledDistribution::new(0.0, Sector::T);
    match gip_reconstruct(&m, &md) {
        Err(ReconError::Unsupported(_)) => {}
        other => panic!("expected unsupported, got {other:?}"),
    }
}

#[test]
fn coefficient_brackets_are_linear_in_the_coefficients() {
    let s = smooth_model(tree(), 9, 2);
    let br = compute_brackets(&s.model).unwrap();
    let tau = s.st.parse("Xi*I(Xi)*I(Xi)").unwrap();
    let f = h_tau(&s.model, &tau).unwrap();
    let mut g = f.clone();
    for c in g.coeffs.values_mut() {
        *c = c.scale(-2.5);
    }
    for sigma in f.coeffs.keys() {
        let a = coefficient_representation(&s.model, &f, sigma, &br.g).unwrap();
        let b = coefficient_representation(&s.model, &g, sigma, &br.g).unwrap();
        assert!(b.distance(&a.scale(-2.5), false).unwrap() <= 1e-9 * a.sup_norm().max(1.0));
    }
}

#[test]
fn bracket_of_a_vector_is_linear() {
    let s = smooth_model(tree(), 8, 1);
    let br = compute_brackets(&s.model).unwrap();
    let mut v = reconkit::algebra::Vector::zero();
    let mut want = Field::zeros(1, 8);
    for (i, (sym, f)) in br.g.iter().enumerate().take(4) {
        let c = reconkit::algebra::Q::new(i as i128 + 1, 3);
        v.add_term(sym.clone(), c);
        want.axpy((i as f64 + 1.0) / 3.0, f).unwrap();
    }
    let got = bracket_of_vector(&br.g, &v, 1, 8).unwrap();
    assert!(got.distance(&want, false).unwrap() < 1e-14);
    let empty: BTreeMap<_, Field> = BTreeMap::new();
    assert!(bracket_of_vector(&empty, &v, 1, 8).is_err());
}
