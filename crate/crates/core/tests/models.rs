mod common;

use std::f64::consts::PI;

use num_traits::One;
use proptest::prelude::*;

use reconkit::algebra::{Space, Symbol, Vector};
use reconkit::harmonic::{random_trig, Field};
use reconkit::models::*;
use reconkit::structures::{partition_of_unity, polynomial_lift};

use common::{poly, smooth_model, tree};

#[test]
fn polynomial_model_is_consistent() {
    let st = poly(1, "4");
    let p = partition_of_unity(1, 10).unwrap();
    let m = canonical_polynomial_model(st, &p).unwrap();
    let r = check_transition(&m, 20, 3, 1e-9).unwrap();
    assert!(r.passed(), "{}", r.summary());
    let n = model_norms(&m, &NormParams::default()).unwrap();
    assert!(n.report.passed(), "{}", n.report.summary());
}

#[test]
fn smooth_tree_model_is_consistent() {
    let s = smooth_model(tree(), 10, 4);
    let r = check_transition(&s.model, 20, 5, 1e-9).unwrap();
    assert!(r.passed(), "{}", r.summary());
    let xi = s.st.parse("Xi").unwrap();
    assert_eq!(s.model.pi(&xi).unwrap(), s.zeta);
}

#[test]
fn canonical_model_is_multiplicative() {
    let s = smooth_model(tree(), 10, 9);
    let xi = s.model.pi(&s.st.parse("Xi").unwrap()).unwrap();
    let z = s.model.pi(&s.st.parse("I(Xi)").unwrap()).unwrap();
    let prod = s.model.pi(&s.st.parse("Xi*I(Xi)*I(Xi)").unwrap()).unwrap();
    assert!(prod.distance(&(&(&xi * &z) * &z), true).unwrap() < 1e-14);
}

#[test]
fn expansion_at_a_point_is_the_recentred_model() {
    // Π_x τ = Σ_σ g_x⁻¹(τ/σ) Πσ
    let s = smooth_model(tree(), 9, 2);
    let tau = s.st.parse("Xi*I(Xi)").unwrap();
    let v = Vector::basis(tau.clone(), One::one());
    for x in [0usize, 17, 300] {
        let direct = s.model.pi_x(x, &v).unwrap();
        let mut sum = Field::zeros(1, 9);
        for (sigma, c) in s.model.expansion_coefficients(&tau).unwrap() {
            sum.axpy(c.values[x], &s.model.pi(&sigma).unwrap()).unwrap();
        }
        assert!(direct.distance(&sum, true).unwrap() < 1e-12);
    }
}

#[test]
fn h_tau_lives_strictly_below_tau() {
    let s = smooth_model(tree(), 9, 1);
    for name in ["I(Xi)", "Xi*I(Xi)", "Xi*I(Xi)*I(Xi)"] {
        let tau = s.st.parse(name).unwrap();
        let f = h_tau(&s.model, &tau).unwrap();
        assert!(f.coeff(&tau).is_none(), "{name}");
        assert_eq!(f.gamma, s.model.hom(&tau));
        for sym in f.coeffs.keys() {
            assert!(s.model.hom(sym) < s.model.hom(&tau), "{name}");
        }
    }
    // Xi has nothing below it
    let xi = s.st.parse("Xi").unwrap();
    assert!(h_tau(&s.model, &xi).unwrap().coeffs.is_empty());
}

#[test]
fn lift_lies_in_d_gamma() {
    let st = poly(1, "3");
    let p = partition_of_unity(1, 14).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let f = random_trig(1, 14, 4, 2);
    let md = polynomial_lift(&st, &f, 3.0, &p).unwrap();
    let r = d_gamma_norms(&md, &m, &PairSampler::default()).unwrap();
    assert!(r.report.passed(), "{}", r.report.summary());
    assert!(r.norm.is_finite());
}

#[test]
fn patched_taylor_remainder_of_a_sine() {
    let st = poly(1, "3");
    let p = partition_of_unity(1, 14).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let f = Field::from_fn(1, 14, |x| (2.0 * PI * x[0]).sin());
    let md = polynomial_lift(&st, &f, 3.0, &p).unwrap();
    let r = d_gamma_norms(&md, &m, &PairSampler { tol: 0.15, ..PairSampler::default() }).unwrap();
    let top = r.grades.iter().find(|g| g.grade == 0.0).unwrap();
    assert!(top.exponent.unwrap() >= 3.0 - 0.15, "{top:?}");
}

#[test]
fn zero_distribution_has_zero_norm() {
    let st = poly(1, "3");
    let p = partition_of_unity(1, 9).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let md = polynomial_lift(&st, &Field::zeros(1, 9), 3.0, &p).unwrap();
    assert_eq!(d_gamma_norms(&md, &m, &PairSampler::default()).unwrap().norm, 0.0);
}

#[test]
fn h_tau_lies_in_d_gamma() {
    let s = smooth_model(tree(), 10, 6);
    let tau = s.st.parse("I(Xi)").unwrap();
    let f = h_tau(&s.model, &tau).unwrap();
    let r = d_gamma_norms(&f, &s.model, &PairSampler::default()).unwrap();
    assert!(r.report.passed(), "{}", r.report.summary());
}

#[test]
fn model_rejects_foreign_grids() {
    let st = poly(1, "4");
    let p = partition_of_unity(1, 8).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let f = random_trig(1, 9, 3, 1);
    let q = partition_of_unity(1, 9).unwrap();
    let md = polynomial_lift(&st, &f, 3.0, &q).unwrap();
    assert!(d_gamma_norms(&md, &m, &PairSampler::default()).is_err());
}

#[test]
fn unit_of_t_plus_evaluates_to_one() {
    let s = smooth_model(tree(), 8, 0);
    let g = s.model.g_vec(&Vector::basis(Symbol::Unit, One::one())).unwrap();
    assert!(g.values.iter().all(|v| *v == 1.0));
    assert!(s.st.basis(Space::Plus).contains(&Symbol::Unit));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn structure_group_composes_pointwise(x in 0usize..256, y in 0usize..256, z in 0usize..256) {
        // Γ_xy Γ_yz = Γ_xz on every basis vector, with Γ_yx = ĝ_y ∘ ĝ_x⁻¹
        let s = smooth_model(tree(), 8, 7);
        for tau in s.st.basis(Space::T) {
            let a = s.model.g_hat_yx(x, y, tau).unwrap();
            let mut two = std::collections::BTreeMap::<Symbol, f64>::new();
            for (sigma, c) in s.model.g_hat_yx(y, z, tau).unwrap() {
                for (rho, e) in s.model.g_hat_yx(x, y, &sigma).unwrap() {
                    *two.entry(rho).or_default() += c * e;
                }
            }
            let one = s.model.g_hat_yx(x, z, tau).unwrap();
            let scale = 1.0 + a.values().chain(one.values()).fold(0.0f64, |m, v| m.max(v.abs()));
            for (rho, v) in &one {
                let w = two.get(rho).copied().unwrap_or(0.0);
                prop_assert!((v - w).abs() <= 1e-9 * scale, "{} -> {}", s.st.name(tau), s.st.name(rho));
            }
        }
    }
}
