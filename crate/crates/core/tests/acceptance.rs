mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use reconkit::admissible::{build_admissible, check_admissible, check_usual, conv_full, AdmissibleTolerances};
use reconkit::algebra::{check_axioms, Space, Symbol};
use reconkit::cli::{compare_models, Tolerances};
use reconkit::harmonic::*;
use reconkit::models::{canonical_polynomial_model, h_tau, Model, ModelledDistribution};
use reconkit::paracontrolled::*;
use reconkit::structures::{partition_of_unity, polynomial_lift, validate_assumptions};

use common::{median, poly, smooth_model, tree};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> (bool, String) {
    (elapsed <= limit, format!("{:.1}s of {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut failed = Vec::new();
    for (name, st) in [("poly d=1 r=4", poly(1, "4")), ("phi4-like tree", tree())] {
        let axioms = check_axioms(&st);
        let assumptions = validate_assumptions(&st);
        if !axioms.passed() || !assumptions.passed() {
            failed.push(format!("{name}: {} {}", axioms.summary(), assumptions.summary()));
        }
    }
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(10));
    outcome(failed.is_empty() && fast, format!("exact suite on 2 structures, {time} {}", failed.join("; ")))
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let l = 12;
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let f = &synthetic_field(1, l, 0.5 + 0.03 * k as f64, 2 * k) + &random_trig(1, l, 12, 100 + k);
        let g = &synthetic_field(1, l, 1.5 - 0.02 * k as f64, 2 * k + 1) + &random_trig(1, l, 7, 200 + k);
        let sum = &(&para(&f, &g).unwrap() + &para(&g, &f).unwrap()) + &resonant(&f, &g).unwrap();
        worst = worst.max((&f * &g).distance(&sum, true).unwrap());
    }
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(30));
    outcome(worst <= 1e-11 && fast, format!("50 pairs, worst relative {worst:.2e} (<= 1e-11), {time}"))
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let s = smooth_model(tree(), 12, 0);
    let br = compute_m_brackets(&s.model).unwrap();
    let zeta = &s.zeta;
    let z = conv_full(&s.kernel, zeta).unwrap();
    let one = &para(zeta, &z).unwrap() + &resonant(&z, zeta).unwrap();
    let z2 = &z * &z;
    let two = &(&(&z2 * zeta) - &para(&z2, zeta).unwrap()) - &para(&z, &one).unwrap().scale(2.0);
    let e1 = br[&s.st.parse("Xi*I(Xi)").unwrap()].distance(&one, false).unwrap();
    let e2 = br[&s.st.parse("Xi*I(Xi)*I(Xi)").unwrap()].distance(&two, false).unwrap();
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(60));
    outcome(
        e1 <= 1e-10 && e2 <= 1e-10 && fast,
        format!("first tree {e1:.2e}, second tree {e2:.2e} (<= 1e-10), {time}"),
    )
}

fn bound_exponent(model: &Model, f: &ModelledDistribution, mb: &BTreeMap<Symbol, Field>) -> (bool, Option<f64>) {
    let (rf, _) = paracontrolled_reconstruct(model, f, mb).unwrap();
    let params = BoundParams { base_points: 64, tol: 0.2, ..BoundParams::default() };
    let (_, e) = reconstruction_pairings(model, f, &rf, &params).unwrap();
    (e.is_none_or(|e| e >= f.gamma - 0.2), e)
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let l = 14;
    let mut lines = Vec::new();
    let mut ok = true;

    let st = poly(1, "5/2");
    let p = partition_of_unity(1, l).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let mb = compute_m_brackets(&m).unwrap();
    let f = random_trig(1, l, 8, 0);
    let md = polynomial_lift(&st, &f, 2.5, &p).unwrap();
    let (pass, e) = bound_exponent(&m, &md, &mb);
    ok &= pass;
    lines.push(format!("lift {e:.3?}/2.5"));

    let s = smooth_model(tree(), l, 0);
    let mb = compute_m_brackets(&s.model).unwrap();
    for tau in s.st.basis(Space::T) {
        let hom = s.model.hom(tau);
        if tau.is_poly() || hom <= 0.0 {
            continue;
        }
        let f = h_tau(&s.model, tau).unwrap();
        let (pass, e) = bound_exponent(&s.model, &f, &mb);
        ok &= pass;
        lines.push(format!("h {} {e:.3?}/{hom}", s.st.name(tau)));
    }
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(300));
    outcome(ok && fast, format!("{}, {time}", lines.join(", ")))
}

fn criterion_5() -> Outcome {
    let l = 12;
    let st = poly(1, "3");
    let p = partition_of_unity(1, l).unwrap();
    let m = canonical_polynomial_model(st.clone(), &p).unwrap();
    let mb = compute_m_brackets(&m).unwrap();
    let mut worst = 0.0f64;
    for seed in 0..8 {
        let f = random_trig(1, l, 8, seed);
        let md = polynomial_lift(&st, &f, 3.0, &p).unwrap();
        let (rf, _) = paracontrolled_reconstruct(&m, &md, &mb).unwrap();
        worst = worst.max(rf.distance(&f, false).unwrap());
    }
    outcome(worst <= 1e-6, format!("8 trigonometric targets, worst sup error {worst:.2e} (<= 1e-6)"))
}

fn criterion_6() -> Outcome {
    let t0 = Instant::now();
    let l = 14;
    let window = default_window(l);
    let st = tree();
    let mut samples: BTreeMap<String, (f64, Vec<f64>)> = BTreeMap::new();
    for seed in 0..20 {
        let s = smooth_model(st.clone(), l, seed);
        let set = compute_brackets(&s.model).unwrap();
        let items = set.m.iter().map(|(t, f)| ("M", t, f)).chain(set.g.iter().filter(|(t, _)| !t.is_unit()).map(|(t, f)| ("g", t, f)));
        for (kind, tau, f) in items {
            let entry = samples.entry(format!("{kind} {}", st.name(tau))).or_insert((s.model.hom(tau), Vec::new()));
            if let Ok(fit) = estimate_regularity(f, window) {
                entry.1.push(fit.slope);
            }
        }
    }
    let mut failing = Vec::new();
    let mut margin = f64::INFINITY;
    for (name, (hom, v)) in samples {
        if v.is_empty() {
            continue;
        }
        let m = median(v);
        margin = margin.min(m - (hom - 0.2));
        if m < hom - 0.2 {
            failing.push(format!("{name}: {m:.3} < {:.3}", hom - 0.2));
        }
    }
    outcome(
        failing.is_empty(),
        format!(
            "median of 20 seeds, smallest margin {margin:.3}, {:.1}s {}",
            t0.elapsed().as_secs_f64(),
            failing.join("; ")
        ),
    )
}

fn criteria_7_and_8() -> (Outcome, Outcome) {
    let t0 = Instant::now();
    let l = 12;
    let s = smooth_model(tree(), l, 0);
    let set = compute_brackets(&s.model).unwrap();
    let input: BTreeMap<Symbol, Field> =
        set.m.iter().filter(|(t, _)| !t.is_poly() && s.model.hom(t) <= 0.0).map(|(t, f)| (t.clone(), f.clone())).collect();
    let (rebuilt, _) = build_admissible(s.st.clone(), &input, &s.kernel, &s.partition).unwrap();
    let cmp = compare_models(&s.model, &set.m, &rebuilt, &Tolerances::default()).unwrap();
    let (fast, time) = within(t0.elapsed(), Duration::from_secs(600));
    let seven = outcome(
        cmp.passed() && fast,
        format!("{} symbols fed back, {}, {time}", input.len(), cmp.summary().replace('\n', " ")),
    );

    let mut ok = true;
    let mut lines = Vec::new();
    for (name, m) in [("source", &s.model), ("rebuilt", &rebuilt)] {
        let a = check_admissible(m, &s.kernel, &s.partition, &AdmissibleTolerances::default()).unwrap();
        let u = check_usual(m, &s.partition, 1e-6).unwrap();
        ok &= a.passed() && u.passed();
        lines.push(format!("{name}: admissible {} usual {}", a.passed(), u.passed()));
        if !a.passed() {
            lines.push(a.summary());
        }
        if !u.passed() {
            lines.push(u.summary());
        }
    }
    (seven, outcome(ok, lines.join(", ")))
}

fn perturbed(f: &ModelledDistribution, delta: f64) -> ModelledDistribution {
    let mut g = f.clone();
    for (k, c) in g.coeffs.values_mut().enumerate() {
        let (d, l) = (c.d, c.l);
        c.axpy(delta, &random_trig(d, l, 5, 1000 + k as u64)).unwrap();
    }
    g
}

fn criterion_9() -> Outcome {
    let l = 12;
    let s = smooth_model(tree(), l, 0);
    let set = compute_brackets(&s.model).unwrap();
    let tau = s.st.parse("Xi*I(Xi)*I(Xi)").unwrap();
    let f = h_tau(&s.model, &tau).unwrap();
    let base_rest = paracontrolled_reconstruct(&s.model, &f, &set.m).unwrap().1;
    let base_coeff: BTreeMap<Symbol, Field> = f
        .coeffs
        .keys()
        .map(|sigma| (sigma.clone(), coefficient_representation(&s.model, &f, sigma, &set.g).unwrap()))
        .collect();

    let mut responses: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for delta in [1e-2, 1e-3, 1e-4] {
        let g = perturbed(&f, delta);
        let rest = paracontrolled_reconstruct(&s.model, &g, &set.m).unwrap().1;
        responses.entry("M".into()).or_default().push((&rest - &base_rest).sup_norm() / delta);
        for (sigma, b) in &base_coeff {
            let c = coefficient_representation(&s.model, &g, sigma, &set.g).unwrap();
            responses.entry(format!("g {}", s.st.name(sigma))).or_default().push((&c - b).sup_norm() / delta);
        }
    }
    let mut worst = 1.0f64;
    let mut dead = Vec::new();
    for (name, r) in &responses {
        let hi = r.iter().copied().fold(0.0, f64::max);
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        if lo <= 0.0 {
            dead.push(name.clone());
            continue;
        }
        worst = worst.max(hi / lo);
    }
    outcome(
        worst <= 2.0 && dead.is_empty(),
        format!("{} maps, worst response ratio {worst:.4} (<= 2) {}", responses.len(), dead.join(" ")),
    )
}

fn pipeline(out: &Path) -> i32 {
    reconkit::cli::run([
        "reconkit",
        "pipeline",
        "--structure",
        "phi4",
        "--grid",
        "1,12",
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ])
}

fn criterion_10() -> Outcome {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let codes = (pipeline(&a), pipeline(&b));
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut differ = Vec::new();
    for n in &names {
        if std::fs::read(a.join(n)).ok() != std::fs::read(b.join(n)).ok() {
            differ.push(n.to_string_lossy().into_owned());
        }
    }
    let other = std::fs::read_dir(&b).unwrap().count();
    outcome(
        codes.0 == codes.1 && differ.is_empty() && other == names.len(),
        format!(
            "{} files, exit codes {:?}, {:.1}s {}",
            names.len(),
            codes,
            t0.elapsed().as_secs_f64(),
            differ.join(" ")
        ),
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: u32, o: Outcome| {
        all &= o.passed;
        println!("criterion {n:>2}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    let (seven, eight) = criteria_7_and_8();
    report(7, seven);
    report(8, eight);
    report(9, criterion_9());
    report(10, criterion_10());
    if !all {
        std::process::exit(1);
    }
}
