//! Byte-stable JSON form of a concrete structure.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::structure::{ConcreteStructure, Origin, Row};
use super::symbol::{fmt_q, parse_q, Grading, Space, Symbol, Q};
use crate::error::{ReconError, Result};

pub const FORMAT: &str = "reconkit-structure";
pub const VERSION: u64 = 1;

fn collect_symbols(s: &Symbol, out: &mut BTreeSet<Symbol>) {
    if !out.insert(s.clone()) {
        return;
    }
    match s {
        Symbol::Integ(i) => collect_symbols(&i.inner, out),
        Symbol::Product(f) => {
            for x in f.iter() {
                collect_symbols(x, out);
            }
        }
        _ => {}
    }
}

/// Every symbol referenced by the structure, in canonical order.
pub fn symbol_table(st: &ConcreteStructure) -> Vec<Symbol> {
    let mut all = BTreeSet::new();
    for plus in [false, true] {
        for (tau, row) in st.rows(plus) {
            collect_symbols(tau, &mut all);
            for (a, b, _) in row {
                collect_symbols(a, &mut all);
                collect_symbols(b, &mut all);
            }
        }
    }
    let mut v: Vec<Symbol> = all.into_iter().collect();
    v.sort_by(|a, b| (a.space(), st.hom(a), a).cmp(&(b.space(), st.hom(b), b)));
    v
}

fn kind_fields(s: &Symbol, ids: &BTreeMap<Symbol, usize>, d: usize) -> Value {
    let k_arr = |k: &super::symbol::Multi| -> Value { json!(k.0[..d].to_vec()) };
    match s {
        Symbol::Unit => json!({"kind": "unit"}),
        Symbol::Coord { chart, axis } => json!({"kind": "coordinate", "chart": chart, "axis": axis}),
        Symbol::Poly { chart, k } => json!({"kind": "monomial", "chart": chart, "k": k_arr(k)}),
        Symbol::Noise(n) => json!({"kind": "noise", "noise": n.as_ref()}),
        Symbol::Integ(i) => {
            let mut v = json!({"kind": "integrated", "inner": ids[&i.inner], "plus": i.plus});
            if i.plus {
                v["chart"] = json!(i.chart.unwrap_or(0));
                v["k"] = k_arr(&i.k);
            }
            v
        }
        Symbol::Product(f) => {
            json!({"kind": "product", "factors": f.iter().map(|x| ids[x]).collect::<Vec<_>>()})
        }
    }
}

fn chart_offsets(st: &ConcreteStructure) -> Vec<Value> {
    st.charts()
        .map(|c| {
            let offs: Vec<String> = (0..st.d())
                .map(|i| fmt_q(&Q::new(((c as i128) >> (2 * i)) & 3, 4)))
                .collect();
            json!(offs)
        })
        .collect()
}

pub fn to_value(st: &ConcreteStructure) -> Value {
    let table = symbol_table(st);
    let ids: BTreeMap<Symbol, usize> = table.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    let d = st.d();
    let symbols: Vec<Value> = table
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut v = kind_fields(s, &ids, d);
            v["id"] = json!(i);
            v["name"] = json!(st.name(s));
            v["space"] = json!(if s.space() == Space::T { "T" } else { "T+" });
            v["hom"] = json!(fmt_q(&st.hom(s)));
            v["in_basis"] = json!(st.contains(s, s.space()));
            v
        })
        .collect();
    let rows = |plus: bool| -> Vec<Value> {
        st.basis(if plus { Space::Plus } else { Space::T })
            .iter()
            .map(|tau| {
                let row = st.coproduct(tau, plus).expect("basis symbol has a row");
                let r: Vec<Value> = row.iter().map(|(a, b, c)| json!([ids[a], ids[b], fmt_q(c)])).collect();
                json!({"tau": ids[tau], "row": r})
            })
            .collect()
    };
    let noises: BTreeMap<String, String> =
        st.grading.noises.iter().map(|(k, v)| (k.clone(), fmt_q(v))).collect();
    let origin = match &st.origin {
        Origin::Polynomial { r } => json!({"kind": "polynomial", "r": fmt_q(r)}),
        Origin::Tree { cutoff, poly_degree } => {
            json!({"kind": "tree", "cutoff": fmt_q(cutoff), "poly_degree": poly_degree})
        }
        Origin::Loaded => json!({"kind": "loaded"}),
    };
    json!({
        "format": FORMAT,
        "version": VERSION,
        "d": d,
        "theta": fmt_q(&st.theta()),
        "charts": chart_offsets(st),
        "noises": noises,
        "origin": origin,
        "symbols": symbols,
        "delta": rows(false),
        "delta_plus": rows(true),
    })
}

pub fn to_json(st: &ConcreteStructure) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(st)).expect("structure serializes");
    s.push('\n');
    s
}

/// SHA-256 of the canonical serialization, hex encoded.
pub fn structure_hash(st: &ConcreteStructure) -> String {
    let digest = Sha256::digest(to_json(st).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| ReconError::Parse(format!("missing field '{key}'")))
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    field(v, key)?
        .as_str()
        .ok_or_else(|| ReconError::Parse(format!("field '{key}' is not a string")))
}

fn as_u64(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?
        .as_u64()
        .ok_or_else(|| ReconError::Parse(format!("field '{key}' is not an unsigned integer")))
}

pub fn from_value(v: &Value) -> Result<ConcreteStructure> {
    if as_str(v, "format")? != FORMAT {
        return Err(ReconError::Parse("not a structure document".into()));
    }
    if as_u64(v, "version")? != VERSION {
        return Err(ReconError::Parse("unsupported structure version".into()));
    }
    let d = as_u64(v, "d")? as usize;
    if !(1..=2).contains(&d) {
        return Err(ReconError::Parse(format!("dimension {d} not supported")));
    }
    let theta = parse_q(as_str(v, "theta")?)?;
    let n_charts = field(v, "charts")?
        .as_array()
        .ok_or_else(|| ReconError::Parse("charts is not an array".into()))?
        .len() as u16;
    let mut noises = BTreeMap::new();
    for (k, h) in field(v, "noises")?
        .as_object()
        .ok_or_else(|| ReconError::Parse("noises is not an object".into()))?
    {
        let h = h.as_str().ok_or_else(|| ReconError::Parse("noise homogeneity".into()))?;
        noises.insert(k.clone(), parse_q(h)?);
    }
    let grading = Grading { d, theta, noises };
    let syms = field(v, "symbols")?
        .as_array()
        .ok_or_else(|| ReconError::Parse("symbols is not an array".into()))?;
    let mut by_id: BTreeMap<u64, Symbol> = BTreeMap::new();
    for s in syms {
        let id = as_u64(s, "id")?;
        let sym = grading.parse_symbol(as_str(s, "name")?)?;
        let declared = parse_q(as_str(s, "hom")?)?;
        if grading.hom(&sym) != declared {
            return Err(ReconError::Parse(format!(
                "symbol {} declares homogeneity {} but its shape gives {}",
                as_str(s, "name")?,
                fmt_q(&declared),
                fmt_q(&grading.hom(&sym))
            )));
        }
        by_id.insert(id, sym);
    }
    let lookup = |x: &Value| -> Result<Symbol> {
        let id = x.as_u64().ok_or_else(|| ReconError::Parse("symbol id".into()))?;
        by_id.get(&id).cloned().ok_or_else(|| ReconError::Parse(format!("unknown symbol id {id}")))
    };
    let read_rows = |key: &str| -> Result<BTreeMap<Symbol, Row>> {
        let mut out = BTreeMap::new();
        for entry in field(v, key)?
            .as_array()
            .ok_or_else(|| ReconError::Parse(format!("{key} is not an array")))?
        {
            let tau = lookup(field(entry, "tau")?)?;
            let mut row = Row::new();
            for t in field(entry, "row")?
                .as_array()
                .ok_or_else(|| ReconError::Parse("row is not an array".into()))?
            {
                let t = t.as_array().filter(|a| a.len() == 3).ok_or_else(|| {
                    ReconError::Parse("coproduct entries must be [sigma_id, mu_id, coeff]".into())
                })?;
                let c = parse_q(t[2].as_str().ok_or_else(|| ReconError::Parse("coefficient".into()))?)?;
                row.push((lookup(&t[0])?, lookup(&t[1])?, c));
            }
            out.insert(tau, row);
        }
        Ok(out)
    };
    let delta = read_rows("delta")?;
    let delta_plus = read_rows("delta_plus")?;
    let origin = match v.get("origin").and_then(|o| o.get("kind")).and_then(|k| k.as_str()) {
        Some("polynomial") => Origin::Polynomial { r: parse_q(as_str(&v["origin"], "r")?)? },
        Some("tree") => Origin::Tree {
            cutoff: parse_q(as_str(&v["origin"], "cutoff")?)?,
            poly_degree: as_u64(&v["origin"], "poly_degree")? as u32,
        },
        _ => Origin::Loaded,
    };
    Ok(ConcreteStructure::new(grading, n_charts, origin, delta, delta_plus))
}

pub fn from_json(text: &str) -> Result<ConcreteStructure> {
    let v: Value = serde_json::from_str(text)?;
    from_value(&v)
}
