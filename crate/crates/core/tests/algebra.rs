use std::sync::OnceLock;

use num_traits::One;
use proptest::prelude::*;

use reconkit::algebra::serial::{from_json, structure_hash, to_json};
use reconkit::algebra::{check_axioms, fmt_q, parse_q, Character, ConcreteStructure, Space, Symbol, Vector, Q};
use reconkit::structures::{build_polynomial_structure, build_tree_structure, PolynomialStructureParams, TreeStructureSpec};

fn tree() -> &'static ConcreteStructure {
    static ST: OnceLock<ConcreteStructure> = OnceLock::new();
    ST.get_or_init(|| build_tree_structure(&TreeStructureSpec::phi4_like(1)).unwrap())
}

fn poly() -> &'static ConcreteStructure {
    static ST: OnceLock<ConcreteStructure> = OnceLock::new();
    ST.get_or_init(|| build_polynomial_structure(&PolynomialStructureParams { d: 1, r: parse_q("4").unwrap() }).unwrap())
}

fn rational() -> impl Strategy<Value = Q> {
    (-6i128..=6, 1i128..=4).prop_map(|(n, d)| Q::new(n, d))
}

fn terms() -> impl Strategy<Value = Vec<(usize, Q)>> {
    prop::collection::vec((any::<usize>(), rational()), 1..5)
}

fn vector_in(st: &ConcreteStructure, space: Space, terms: &[(usize, Q)]) -> Vector {
    let basis = st.basis(space);
    let mut v = Vector::zero();
    for (i, c) in terms {
        v.add_term(basis[i % basis.len()].clone(), *c);
    }
    v
}

fn character(st: &ConcreteStructure, values: &[Q]) -> Character {
    st.generators().into_iter().zip(values.iter().cycle()).map(|(s, c)| (s, *c)).collect()
}

fn values() -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec(rational(), 1..12)
}

fn counit(v: &Vector) -> Q {
    v.coeff(&Symbol::Unit)
}

fn convolve(st: &ConcreteStructure, g1: &Character, g2: &Character, v: &Vector) -> Q {
    st.convolve::<Q>(&|s| g1.get(s).cloned(), &|s| g2.get(s).cloned(), v).unwrap()
}

fn evaluate(st: &ConcreteStructure, g: &Character, v: &Vector) -> Q {
    st.eval_vector::<Q>(&|s| g.get(s).cloned(), v).unwrap()
}

fn inverse(st: &ConcreteStructure, g: &Character) -> Character {
    st.generators()
        .into_iter()
        .map(|s| {
            let x = st.eval_inverse::<Q>(&|t| g.get(t).cloned(), &Vector::basis(s.clone(), Q::one())).unwrap();
            (s, x)
        })
        .collect()
}

fn gamma(st: &ConcreteStructure, g: &Character, v: &Vector) -> Vector {
    st.g_hat::<Q>(&|s| g.get(s).cloned(), v, false).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn antipode_is_a_convolution_inverse(t in terms()) {
        for st in [tree(), poly()] {
            let v = vector_in(st, Space::Plus, &t);
            let mut left = Vector::zero();
            let mut right = Vector::zero();
            for ((a, b), c) in st.delta_plus_vec(&v).unwrap().iter() {
                let sa = st.antipode(a).unwrap();
                let sb = st.antipode(b).unwrap();
                left.add_scaled(&sa.mul_plus(&Vector::basis(b.clone(), Q::one())), c);
                right.add_scaled(&Vector::basis(a.clone(), Q::one()).mul_plus(&sb), c);
            }
            let unit = Vector::basis(Symbol::Unit, counit(&v));
            prop_assert_eq!(&left, &unit);
            prop_assert_eq!(&right, &unit);
        }
    }

    #[test]
    fn convolution_is_associative(t in terms(), a in values(), b in values(), c in values()) {
        let st = tree();
        let (g1, g2, g3) = (character(st, &a), character(st, &b), character(st, &c));
        let v = vector_in(st, Space::Plus, &t);
        let left = st.convolve_character(&st.convolve_character(&g1, &g2).unwrap(), &g3).unwrap();
        let right = st.convolve_character(&g1, &st.convolve_character(&g2, &g3).unwrap()).unwrap();
        prop_assert_eq!(evaluate(st, &left, &v), evaluate(st, &right, &v));
    }

    #[test]
    fn character_times_inverse_is_the_counit(t in terms(), a in values()) {
        let st = tree();
        let g = character(st, &a);
        let gi = inverse(st, &g);
        let v = vector_in(st, Space::Plus, &t);
        prop_assert_eq!(convolve(st, &g, &gi, &v), counit(&v));
        prop_assert_eq!(convolve(st, &gi, &g, &v), counit(&v));
    }

    #[test]
    fn structure_group_acts_on_the_left(t in terms(), a in values(), b in values()) {
        // Γ_{g1} Γ_{g2} = Γ_{g1 ∗ g2} with Γ_g = (Id ⊗ g)Δ
        for st in [tree(), poly()] {
            let (g1, g2) = (character(st, &a), character(st, &b));
            let v = vector_in(st, Space::T, &t);
            let twice = gamma(st, &g1, &gamma(st, &g2, &v));
            let once = gamma(st, &st.convolve_character(&g1, &g2).unwrap(), &v);
            prop_assert_eq!(twice, once);
        }
    }

    #[test]
    fn structure_group_is_triangular(t in terms(), a in values()) {
        let st = tree();
        let g = character(st, &a);
        for (s, _) in vector_in(st, Space::T, &t).iter() {
            let out = gamma(st, &g, &Vector::basis(s.clone(), Q::one()));
            prop_assert_eq!(out.coeff(s), Q::one());
            for (r, _) in out.iter() {
                prop_assert!(r == s || st.hom(r) < st.hom(s));
            }
        }
    }

    #[test]
    fn rationals_round_trip(n in -10_000i128..10_000, d in 1i128..500) {
        let x = Q::new(n, d);
        prop_assert_eq!(parse_q(&fmt_q(&x)).unwrap(), x);
    }
}

#[test]
fn symbol_names_round_trip() {
    for st in [tree(), poly()] {
        for space in [Space::T, Space::Plus] {
            for s in st.basis(space) {
                let name = st.name(s);
                assert_eq!(&st.parse(&name).unwrap(), s, "{name}");
            }
        }
    }
}

#[test]
fn serialization_round_trips() {
    for st in [tree(), poly()] {
        let text = to_json(st);
        let back = from_json(&text).unwrap();
        assert_eq!(to_json(&back), text);
        assert_eq!(structure_hash(&back), structure_hash(st));
        assert!(check_axioms(&back).passed());
    }
}

#[test]
fn unit_and_counit_are_exact() {
    let st = tree();
    let one = Vector::basis(Symbol::Unit, Q::one());
    let d = st.delta_plus_vec(&one).unwrap();
    assert_eq!(d.coeff(&Symbol::Unit, &Symbol::Unit), Q::one());
    assert_eq!(d.iter().count(), 1);
    assert_eq!(*st.antipode(&Symbol::Unit).unwrap(), one);
}

#[test]
fn coordinate_antipode_is_negation() {
    let st = poly();
    let x = st.parse("X+[0]").unwrap();
    assert_eq!(*st.antipode(&x).unwrap(), Vector::basis(x.clone(), -Q::one()));
}

#[test]
fn corrupted_table_is_detected() {
    let mut st = from_json(&to_json(tree())).unwrap();
    let tau = st.parse("Xi*I(Xi)").unwrap();
    let mut row = st.coproduct(&tau, false).unwrap().clone();
    let i = row.iter().position(|(a, b, _)| !(a == &tau && b.is_unit())).unwrap();
    row[i].2 += Q::one();
    st.set_row(tau, false, row);
    let rep = check_axioms(&st);
    assert!(!rep.passed());
    assert!(rep.failures().count() >= 1);
}

#[test]
fn zero_vector_has_zero_coproduct() {
    let st = tree();
    assert!(st.delta_vec(&Vector::zero()).unwrap().is_zero());
}
