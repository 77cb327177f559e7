use std::collections::BTreeMap;

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::model::Model;
use super::sampling::{base_points, dyadic_exponent, dyadic_pairs, fine_exponent, offset_index};
use crate::algebra::symbol::{q_to_f64, Space, Symbol, Q};
use crate::algebra::Vector;
use crate::error::Result;
use crate::harmonic::Field;
use crate::report::Report;

/// Test functions φ_x^λ(y) = λ^{−d}ψ((y−x)/λ) for ψ in {φ, ∂_iφ} at λ = 2^{−j}, as stencils.
#[derive(Clone, Debug)]
pub struct Mollifier {
    pub d: usize,
    pub l: u32,
    pub j: i32,
    pub members: Vec<Vec<([i64; 2], f64)>>,
}

impl Mollifier {
    pub fn new(d: usize, l: u32, j: i32) -> Mollifier {
        let n = 1i64 << l;
        let r = 1i64 << (l as i32 - j).max(0);
        let h = 1.0 / n as f64;
        let lam = 2f64.powi(-j);
        let mut base = Vec::new();
        let mut grads: Vec<Vec<([i64; 2], f64)>> = vec![Vec::new(); d];
        let range: Vec<i64> = (-r..=r).collect();
        let offsets: Vec<[i64; 2]> = if d == 1 {
            range.iter().map(|&a| [a, 0]).collect()
        } else {
            range.iter().flat_map(|&a| range.iter().map(move |&b| [a, b])).collect()
        };
        let mut total = 0.0;
        for off in offsets {
            let u: Vec<f64> = (0..d).map(|i| off[i] as f64 * h / lam).collect();
            let r2: f64 = u.iter().map(|v| v * v).sum();
            if r2 >= 1.0 {
                continue;
            }
            let b = (-1.0 / (1.0 - r2)).exp();
            total += b;
            base.push((off, b));
            for i in 0..d {
                grads[i].push((off, b * (-2.0 * u[i] / (1.0 - r2).powi(2))));
            }
        }
        // normalized so that the discrete integral of φ_x^λ is one
        let scale = 1.0 / total;
        let mut members = vec![base.into_iter().map(|(o, w)| (o, w * scale)).collect::<Vec<_>>()];
        for g in grads {
            members.push(g.into_iter().map(|(o, w)| (o, w * scale)).collect());
        }
        Mollifier { d, l, j, members }
    }

    /// ⟨f, φ_x^λ⟩ for each member of the family.
    pub fn pair(&self, f: &Field, x: usize) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| m.iter().map(|(o, w)| w * f.values[offset_index(self.d, self.l, x, *o)]).sum())
            .collect()
    }
}

/// Scales used by the mollifier tests: j ∈ [3, L − 4].
pub fn mollifier_scales(l: u32) -> (i32, i32) {
    (3, l as i32 - 4)
}

#[derive(Clone, Debug)]
pub struct NormEntry {
    pub symbol: String,
    pub declared: f64,
    pub exponent: Option<f64>,
    pub sups: Vec<(i32, f64)>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct NormReport {
    pub pi: Vec<NormEntry>,
    pub g: Vec<NormEntry>,
    pub report: Report,
}

#[derive(Clone, Copy, Debug)]
pub struct NormParams {
    pub base_points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for NormParams {
    fn default() -> Self {
        NormParams { base_points: 64, seed: 0, tol: 0.2 }
    }
}

fn entry(name: String, declared: f64, sups: Vec<(i32, f64)>, exponent: Option<f64>, tol: f64) -> NormEntry {
    let passed = exponent.is_none_or(|e| e >= declared - tol);
    NormEntry { symbol: name, declared, exponent, sups, passed }
}

/// sup_x |⟨Π_xτ, φ_x^λ⟩| over the family, for each τ and each λ = 2^{−j}.
pub fn pi_x_mollified(model: &Model, taus: &[Symbol], points: &[usize], scales: (i32, i32)) -> Result<Vec<Vec<(i32, f64)>>> {
    let legs: Vec<Symbol> = {
        let mut s: Vec<Symbol> = Vec::new();
        for t in taus {
            for (a, _, _) in model.row(t)?.iter() {
                s.push(a.clone());
            }
        }
        s.sort();
        s.dedup();
        s
    };
    let pis: BTreeMap<Symbol, Field> = legs.iter().map(|s| Ok((s.clone(), model.pi(s)?))).collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); taus.len()];
    for j in scales.0..=scales.1 {
        let moll = Mollifier::new(model.d, model.l, j);
        let per_point: Vec<Vec<f64>> = points
            .par_iter()
            .map(|&x| {
                let pairings: BTreeMap<&Symbol, Vec<f64>> = pis.iter().map(|(s, f)| (s, moll.pair(f, x))).collect();
                let mut vals = Vec::with_capacity(taus.len());
                for t in taus {
                    let mut acc = vec![0.0; moll.members.len()];
                    for (a, b, c) in model.row(t)?.iter() {
                        let w = q_to_f64(c) * model.g_inv_at(&Vector::basis(b.clone(), Q::one()), x)?;
                        for (o, p) in acc.iter_mut().zip(&pairings[a]) {
                            *o += w * p;
                        }
                    }
                    vals.push(acc.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                }
                Ok(vals)
            })
            .collect::<Result<_>>()?;
        for (k, o) in out.iter_mut().enumerate() {
            o.push((j, per_point.iter().map(|v| v[k]).fold(0.0, f64::max)));
        }
    }
    Ok(out)
}

/// Sampled model bounds: mollifier exponents of Π_x τ and Hölder exponents of g_yx τ.
pub fn model_norms(model: &Model, params: &NormParams) -> Result<NormReport> {
    let (d, l) = (model.d, model.l);
    let st = &model.structure;
    let points = base_points(d, l, params.base_points, params.seed);
    let mut report = Report::new("model norms");

    let taus: Vec<Symbol> = model.basis().to_vec();
    let sups = pi_x_mollified(model, &taus, &points, mollifier_scales(l))?;
    let mut pi_entries = Vec::new();
    for (t, s) in taus.iter().zip(sups) {
        let scale = model.pi(t)?.sup_norm().max(1.0);
        let exponent = dyadic_exponent(&s, 1e-12 * scale);
        let e = entry(st.name(t), model.hom(t), s, exponent, params.tol);
        report.flag(
            &format!("Pi {}", e.symbol),
            e.passed,
            Some(format!("exponent {:?}, declared {:.4}", e.exponent, e.declared)),
        );
        pi_entries.push(e);
    }

    let plus: Vec<Symbol> = st.basis(Space::Plus).iter().filter(|s| !s.is_unit()).cloned().collect();
    let groups = dyadic_pairs(d, l, &points, 2, l as i32 - 3);
    let mut g_sups = vec![Vec::new(); plus.len()];
    for (j, pairs) in &groups {
        let vals: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|(y, x)| {
                plus.iter()
                    .map(|t| Ok(model.g_yx(*y, *x, &Vector::basis(t.clone(), Q::one()))?.abs()))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        for (k, s) in g_sups.iter_mut().enumerate() {
            s.push((*j, vals.iter().map(|v| v[k]).fold(0.0, f64::max)));
        }
    }
    let mut g_entries = Vec::new();
    for (t, s) in plus.iter().zip(g_sups) {
        let scale = model.g_mono(t)?.sup_norm().max(1.0);
        let exponent = fine_exponent(&s, l, 1e-12 * scale);
        let e = entry(st.name(t), model.hom(t), s, exponent, params.tol);
        report.flag(
            &format!("g {}", e.symbol),
            e.passed,
            Some(format!("exponent {:?}, declared {:.4}", e.exponent, e.declared)),
        );
        g_entries.push(e);
    }
    Ok(NormReport { pi: pi_entries, g: g_entries, report })
}

/// Algebraic consistency of a model at sampled points:
/// Π_y = Π_x ĝ_xy, Π = Π_x ĝ_x, and Π_xτ(x) = 0 when |τ| > 0.
pub fn check_transition(model: &Model, pairs: usize, seed: u64, tol: f64) -> Result<Report> {
    let st = &model.structure;
    let total = model.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(usize, usize)> = (0..pairs).map(|_| (rng.random_range(0..total), rng.random_range(0..total))).collect();
    let taus: Vec<Symbol> = model.basis().to_vec();
    let mut w_trans = Vec::new();
    let mut w_recover = Vec::new();
    let mut w_base = Vec::new();
    let mut worst = [0.0f64; 3];
    for (x, y) in pts {
        let pix: BTreeMap<Symbol, Field> = taus
            .iter()
            .map(|t| Ok((t.clone(), model.pi_x(x, &Vector::basis(t.clone(), Q::one()))?)))
            .collect::<Result<_>>()?;
        for t in &taus {
            let pi = model.pi(t)?;
            let scale = pi.sup_norm().max(1.0);
            let tv = Vector::basis(t.clone(), Q::one());
            let piy = model.pi_x(y, &tv)?;
            let mut via_x = Field::zeros(model.d, model.l);
            let mut recovered = Field::zeros(model.d, model.l);
            for (s, gyx) in model.g_hat_yx(x, y, t)? {
                via_x.axpy(gyx, &pix[&s])?;
            }
            for (a, b, c) in model.row(t)?.iter() {
                let gx = model.g_at(&Vector::basis(b.clone(), Q::one()), x)?;
                recovered.axpy(q_to_f64(c) * gx, &pix[a])?;
            }
            let e1 = piy.distance(&via_x, false)? / scale;
            let e2 = pi.distance(&recovered, false)? / scale;
            worst[0] = worst[0].max(e1);
            worst[1] = worst[1].max(e2);
            if e1 > tol {
                w_trans.push(format!("{} at (x={x}, y={y}): {e1:.3e}", st.name(t)));
            }
            if e2 > tol {
                w_recover.push(format!("{} at x={x}: {e2:.3e}", st.name(t)));
            }
            if model.hom(t) > 0.0 {
                let v = pix[t].values[x].abs() / scale;
                worst[2] = worst[2].max(v);
                if v > tol {
                    w_base.push(format!("{} at x={x}: {v:.3e}", st.name(t)));
                }
            }
        }
    }
    let mut r = Report::new("model transition");
    for (name, mut w, v) in [
        ("transition", w_trans, worst[0]),
        ("recovery", w_recover, worst[1]),
        ("base_point_vanishing", w_base, worst[2]),
    ] {
        w.truncate(20);
        r.witnesses(name, w);
        if let Some(last) = r.items.last_mut() {
            last.value = Some(v);
            last.threshold = Some(tol);
        }
    }
    Ok(r)
}
