use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed};
use serde_json::Value;

use super::formulas::{delta_formula, delta_plus_monomial, poly_row};
use crate::algebra::symbol::{mul_t_many, parse_q, Grading, Multi, Space, Symbol, Q};
use crate::algebra::{mul_plus, ConcreteStructure, Origin, Row};
use crate::error::{ReconError, Result};

/// Number of charts of the lattice (¼ℤ)^d reduced mod 1.
pub fn n_charts(d: usize) -> u16 {
    4u16.pow(d as u32)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialStructureParams {
    pub d: usize,
    pub r: Q,
}

/// All monomials in the given variables of total degree < bound, unit included.
fn monomials_below(vars: &[Symbol], bound: &Q) -> Vec<Symbol> {
    let mut out = vec![Symbol::Unit];
    let mut frontier = vec![(Symbol::Unit, 0usize, 0i128)];
    while let Some((m, start, deg)) = frontier.pop() {
        if Q::from_integer(deg + 1) >= *bound {
            continue;
        }
        for (i, v) in vars.iter().enumerate().skip(start) {
            let next = mul_plus(&m, v);
            out.push(next.clone());
            frontier.push((next, i, deg + 1));
        }
    }
    out
}

/// T(X) spanned by 𝐗_e^k with |k| < r; T⁺(X) the monomials in X_e^i of degree < r.
pub fn build_polynomial_structure(p: &PolynomialStructureParams) -> Result<ConcreteStructure> {
    if !p.r.is_positive() {
        return Err(ReconError::InvalidParameter(format!("polynomial order r = {} must be positive", p.r)));
    }
    if !(1..=2).contains(&p.d) {
        return Err(ReconError::InvalidParameter(format!("dimension {} not supported", p.d)));
    }
    let nc = n_charts(p.d);
    let grading = Grading { d: p.d, theta: Q::one(), noises: BTreeMap::new() };
    let mut delta = BTreeMap::new();
    let top = p.r.ceil().to_integer() as u32;
    for e in 0..nc {
        for k in Multi::all_up_to(p.d, top) {
            if Q::from_integer(k.order() as i128) < p.r {
                delta.insert(Symbol::poly(e, k), poly_row(p.d, e, k));
            }
        }
    }
    let vars: Vec<Symbol> =
        (0..nc).flat_map(|e| (0..p.d as u8).map(move |i| Symbol::coord(e, i))).collect();
    let mut gen_rows = BTreeMap::new();
    let mut delta_plus = BTreeMap::new();
    for m in monomials_below(&vars, &p.r) {
        let row = delta_plus_monomial(&grading, &m, &mut gen_rows, &delta)?;
        delta_plus.insert(m, row);
    }
    Ok(ConcreteStructure::new(grading, nc, Origin::Polynomial { r: p.r }, delta, delta_plus))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeStructureSpec {
    pub d: usize,
    pub noises: Vec<(String, Q)>,
    pub theta: Q,
    pub cutoff: Q,
    pub products: Vec<Vec<String>>,
    pub poly_degree: u32,
}

impl TreeStructureSpec {
    /// The Φ⁴-like example: one noise of homogeneity −5/8, θ = 1, cutoff 2.
    pub fn phi4_like(d: usize) -> Self {
        TreeStructureSpec {
            d,
            noises: vec![("Xi".into(), Q::new(-5, 8))],
            theta: Q::one(),
            cutoff: Q::from_integer(2),
            products: vec![
                vec!["Xi".into(), "I(Xi)".into()],
                vec!["Xi".into(), "I(Xi)".into(), "I(Xi)".into()],
            ],
            poly_degree: 2,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        let qfield = |key: &str| -> Result<Q> {
            match v.get(key) {
                Some(Value::String(s)) => parse_q(s),
                Some(Value::Number(n)) if n.is_i64() => Ok(Q::from_integer(n.as_i64().unwrap() as i128)),
                _ => Err(ReconError::Parse(format!("missing or malformed '{key}'"))),
            }
        };
        let noises = v
            .get("noises")
            .and_then(|n| n.as_array())
            .ok_or_else(|| ReconError::Parse("missing 'noises'".into()))?
            .iter()
            .map(|n| {
                let name = n.get("name").and_then(|x| x.as_str()).ok_or_else(|| ReconError::Parse("noise name".into()))?;
                let hom = n.get("hom").and_then(|x| x.as_str()).ok_or_else(|| ReconError::Parse("noise hom".into()))?;
                Ok((name.to_string(), parse_q(hom)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let products = match v.get("products") {
            None => vec![],
            Some(p) => p
                .as_array()
                .ok_or_else(|| ReconError::Parse("'products' must be an array".into()))?
                .iter()
                .map(|rule| {
                    rule.as_array()
                        .ok_or_else(|| ReconError::Parse("product rule must be an array".into()))?
                        .iter()
                        .map(|f| {
                            f.as_str()
                                .map(str::to_string)
                                .ok_or_else(|| ReconError::Parse("product factor must be a string".into()))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let d = v.get("d").and_then(|x| x.as_u64()).unwrap_or(1) as usize;
        let poly_degree = v.get("poly_degree").and_then(|x| x.as_u64()).unwrap_or(0) as u32;
        Ok(TreeStructureSpec { d, noises, theta: qfield("theta")?, cutoff: qfield("cutoff")?, products, poly_degree })
    }
}

fn valid_noise_name(n: &str) -> bool {
    let mut chars = n.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && n != "I"
        && n != "X"
}

/// Close the noises and polynomials under ℐ and the admitted products below the cutoff,
/// then build Δ on T and Δ⁺ on the generated part of T⁺.
pub fn build_tree_structure(spec: &TreeStructureSpec) -> Result<ConcreteStructure> {
    if !(1..=2).contains(&spec.d) {
        return Err(ReconError::InvalidParameter(format!("dimension {} not supported", spec.d)));
    }
    if !spec.theta.is_positive() {
        return Err(ReconError::InvalidParameter("θ must be positive".into()));
    }
    let mut noises = BTreeMap::new();
    for (n, h) in &spec.noises {
        if !valid_noise_name(n) {
            return Err(ReconError::InvalidParameter(format!("'{n}' is not a valid noise name")));
        }
        if *h <= -spec.theta {
            return Err(ReconError::Unsupported(format!(
                "noise {n} has homogeneity {h} ≤ −θ; integration would not improve it past zero"
            )));
        }
        noises.insert(n.clone(), *h);
    }
    let grading = Grading { d: spec.d, theta: spec.theta, noises };
    let nc = n_charts(spec.d);
    let cutoff = spec.cutoff;

    let mut set: BTreeSet<Symbol> = BTreeSet::new();
    for (n, h) in &spec.noises {
        if *h < cutoff {
            set.insert(Symbol::noise(n));
        }
    }
    for e in 0..nc {
        for k in Multi::all_up_to(spec.d, spec.poly_degree) {
            if Q::from_integer(k.order() as i128) < cutoff {
                set.insert(Symbol::poly(e, k));
            }
        }
    }
    let rules: Vec<Vec<Symbol>> = spec
        .products
        .iter()
        .map(|r| r.iter().map(|f| grading.parse_symbol(f)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut memo = BTreeMap::new();
    loop {
        let before = set.len();
        let current: Vec<Symbol> = set.iter().cloned().collect();
        for s in &current {
            if grading.hom(s) + spec.theta < cutoff {
                set.insert(Symbol::integ(s.clone()));
            }
        }
        for rule in &rules {
            if rule.iter().all(|f| set.contains(f)) {
                let p = mul_t_many(rule)?;
                if grading.hom(&p) < cutoff {
                    set.insert(p);
                }
            }
        }
        let current: Vec<Symbol> = set.iter().cloned().collect();
        for s in &current {
            let row = delta_formula(&grading, nc, s, &mut memo)?;
            for (a, _, _) in row {
                set.insert(a);
            }
        }
        if set.len() == before {
            break;
        }
    }
    if set.iter().all(|s| s.is_poly()) && !spec.noises.is_empty() {
        return Err(ReconError::InvalidParameter("cutoff leaves no non-polynomial symbol in T".into()));
    }
    if set.is_empty() {
        return Err(ReconError::InvalidParameter("cutoff produces an empty basis of T".into()));
    }
    if let Some(m) = set.iter().map(|s| grading.hom(s)).min() {
        if m <= -spec.theta {
            return Err(ReconError::Unsupported(format!("minimal homogeneity {m} is not above −θ")));
        }
    }

    let mut delta: BTreeMap<Symbol, Row> = BTreeMap::new();
    for s in &set {
        delta.insert(s.clone(), delta_formula(&grading, nc, s, &mut memo)?);
    }

    let mut work: Vec<Symbol> = vec![Symbol::Unit];
    for row in delta.values() {
        for (_, b, _) in row {
            work.push(b.clone());
        }
    }
    let mut gen_rows = BTreeMap::new();
    let mut delta_plus: BTreeMap<Symbol, Row> = BTreeMap::new();
    while let Some(m) = work.pop() {
        if delta_plus.contains_key(&m) {
            continue;
        }
        if m.space() != Space::Plus {
            return Err(ReconError::InvalidParameter(format!("{} appeared as a right leg", grading.name(&m))));
        }
        let row = delta_plus_monomial(&grading, &m, &mut gen_rows, &delta)?;
        for (a, b, _) in &row {
            if !delta_plus.contains_key(a) {
                work.push(a.clone());
            }
            if !delta_plus.contains_key(b) {
                work.push(b.clone());
            }
        }
        delta_plus.insert(m, row);
    }
    debug_assert!(delta_plus.keys().all(|s| !grading.hom(s).is_negative()));
    Ok(ConcreteStructure::new(
        grading,
        nc,
        Origin::Tree { cutoff, poly_degree: spec.poly_degree },
        delta,
        delta_plus,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_basis_enumeration() {
        let st = build_polynomial_structure(&PolynomialStructureParams { d: 1, r: Q::from_integer(2) }).unwrap();
        assert_eq!(st.basis(Space::T).len(), 8);
        for e in 0..4 {
            assert!(st.contains(&Symbol::poly(e, Multi([0, 0])), Space::T));
            assert!(st.contains(&Symbol::poly(e, Multi([1, 0])), Space::T));
        }
        assert!(build_polynomial_structure(&PolynomialStructureParams { d: 1, r: Q::from_integer(0) }).is_err());
    }

    #[test]
    fn tree_basis_small_cutoff() {
        let spec = TreeStructureSpec {
            d: 1,
            noises: vec![("Xi".into(), Q::new(-5, 8))],
            theta: Q::one(),
            cutoff: Q::one(),
            products: vec![vec!["Xi".into(), "I(Xi)".into()]],
            poly_degree: 0,
        };
        let st = build_tree_structure(&spec).unwrap();
        let xi = st.parse("Xi").unwrap();
        let ixi = st.parse("I(Xi)").unwrap();
        let prod = st.parse("Xi*I(Xi)").unwrap();
        for s in [&xi, &ixi, &prod] {
            assert!(st.contains(s, Space::T), "{}", st.name(s));
        }
        assert_eq!(st.hom(&ixi), Q::new(3, 8));
        assert_eq!(st.hom(&prod), Q::new(-1, 4));
    }

    #[test]
    fn noise_too_rough_is_unsupported() {
        let mut spec = TreeStructureSpec::phi4_like(1);
        spec.noises[0].1 = Q::from_integer(-1);
        assert!(matches!(build_tree_structure(&spec), Err(ReconError::Unsupported(_))));
    }

    #[test]
    fn spec_json_parses() {
        let text = r#"{"noises":[{"name":"Xi","hom":"-5/8"}], "theta":"1", "cutoff":"2", "products":[["Xi","I(Xi)"]], "poly_degree":2}"#;
        let spec = TreeStructureSpec::from_json(text).unwrap();
        assert_eq!(spec.noises[0].1, Q::new(-5, 8));
        assert_eq!(spec.products.len(), 1);
        assert_eq!(spec.d, 1);
    }
}
