//! Command-line front end. `run` parses arguments, executes one subcommand and returns the exit code.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::admissible::{
    build_admissible, canonical_smooth_model, check_admissible, check_usual, upsilon_check, AdmissibleTolerances,
    GridKernel, KernelFamily,
};
use crate::algebra::serial::{self, structure_hash};
use crate::algebra::{check_axioms, ConcreteStructure, Origin, Space, Symbol};
use crate::error::{ReconError, Result};
use crate::harmonic::{default_window, random_trig, spectral_profile, synthetic_field, Field};
use crate::io::{
    load_brackets, load_model, read_rkf, regularity_csv, regularity_rows, save_brackets, save_model, write_atomic,
    write_rkf, RegularityRow,
};
use crate::models::{
    canonical_polynomial_model, check_transition, h_tau, model_norms, Model, ModelledDistribution, NormParams,
    PairSampler,
};
use crate::paracontrolled::{
    compute_brackets, compute_m_brackets, paracontrolled_reconstruct, quotient_bracket_check,
    reconstruction_bound_test, BoundParams, BracketSet,
};
use crate::report::Report;
use crate::structures::{
    build_polynomial_structure, build_tree_structure, partition_of_unity, polynomial_lift, validate_assumptions,
    PartitionOfUnity, PolynomialStructureParams, TreeStructureSpec,
};

#[derive(Parser, Debug)]
#[command(name = "reconkit", version, about = "Regularity structures and paracontrolled reconstruction on the torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Verify the Hopf and comodule identities and the structural assumptions.
    AlgebraCheck(Common),
    /// Build a structure and write its canonical JSON form.
    BuildStructure(Common),
    /// Build the canonical model of a structure on a grid.
    BuildModel(Common),
    /// Compute the brackets of a saved model.
    Brackets(Common),
    /// Reconstruct modelled distributions over a saved model.
    Reconstruct(Common),
    /// Build the admissible model determined by a bracket file.
    FromBrackets(Common),
    /// Model to brackets to model, with comparisons.
    Roundtrip(Common),
    /// Estimate the regularity of fields.
    Regularity(Common),
    /// Run every stage and every verification.
    Pipeline(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Builtin name (phi4, poly:R) or a path to a spec or structure JSON.
    #[arg(long)]
    pub structure: Option<String>,
    /// Grid as d,L.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, u32)>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    /// Kernel JSON file.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Saved model header.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Saved bracket header.
    #[arg(long)]
    pub brackets: Option<PathBuf>,
    /// RKF1 file, model header or bracket header.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    /// Also write per-field spectral profiles.
    #[arg(long)]
    pub profile: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Tolerance override KEY=VAL, repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, u32), String> {
    let (d, l) = s.split_once(',').ok_or_else(|| format!("grid '{s}' is not of the form d,L"))?;
    let d: usize = d.trim().parse().map_err(|_| format!("bad dimension in '{s}'"))?;
    let l: u32 = l.trim().parse().map_err(|_| format!("bad level in '{s}'"))?;
    if !(1..=2).contains(&d) || !(6..=20).contains(&l) {
        return Err(format!("grid '{s}' out of range (d in 1..2, L in 6..20)"));
    }
    Ok((d, l))
}

fn parse_tol(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("tolerance '{s}' is not KEY=VAL"))?;
    let v: f64 = v.parse().map_err(|_| format!("bad tolerance value in '{s}'"))?;
    if !TOL_KEYS.contains(&k) {
        return Err(format!("unknown tolerance key '{k}' (known: {})", TOL_KEYS.join(", ")));
    }
    if !(v >= 0.0) {
        return Err(format!("tolerance '{s}' must be non-negative"));
    }
    Ok((k.to_string(), v))
}

const TOL_KEYS: [&str; 11] = [
    "exponent",
    "transition",
    "quotient",
    "bracket",
    "pi",
    "commutation",
    "g_formula",
    "identities",
    "usual",
    "upsilon",
    "lift",
];

/// All tolerances of a run, with their defaults.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Tolerances {
    pub exponent: f64,
    pub transition: f64,
    pub quotient: f64,
    pub bracket: f64,
    pub pi: f64,
    pub commutation: f64,
    pub g_formula: f64,
    pub identities: f64,
    pub usual: f64,
    pub upsilon: f64,
    pub lift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exponent: 0.2,
            transition: 1e-9,
            quotient: 1e-9,
            bracket: 1e-10,
            pi: 1e-9,
            commutation: 1e-9,
            g_formula: 1e-8,
            identities: 1e-8,
            usual: 1e-6,
            upsilon: 1e-8,
            lift: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn with_overrides(over: &[(String, f64)]) -> Self {
        let mut t = Tolerances::default();
        for (k, v) in over {
            let slot = match k.as_str() {
                "exponent" => &mut t.exponent,
                "transition" => &mut t.transition,
                "quotient" => &mut t.quotient,
                "bracket" => &mut t.bracket,
                "pi" => &mut t.pi,
                "commutation" => &mut t.commutation,
                "g_formula" => &mut t.g_formula,
                "identities" => &mut t.identities,
                "usual" => &mut t.usual,
                "upsilon" => &mut t.upsilon,
                "lift" => &mut t.lift,
                _ => continue,
            };
            *slot = *v;
        }
        t
    }

    fn admissible(&self, seed: u64) -> AdmissibleTolerances {
        AdmissibleTolerances {
            commutation: self.commutation,
            g_formula: self.g_formula,
            identities: self.identities,
            points: 6,
            seed,
        }
    }
}

/// Resolved configuration shared by the subcommands.
pub struct RunConfig {
    pub common: Common,
    pub tol: Tolerances,
}

pub const DEFAULT_L: u32 = 10;

impl RunConfig {
    pub fn new(common: Common) -> Self {
        let tol = Tolerances::with_overrides(&common.tol);
        RunConfig { common, tol }
    }

    fn seed(&self) -> Result<u64> {
        self.common.seed.ok_or_else(|| ReconError::InvalidParameter("--seed is required for this command".into()))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.common.out.join(name)
    }

    fn structure(&self) -> Result<ConcreteStructure> {
        let d = self.common.grid.map(|g| g.0).unwrap_or(1);
        match self.common.structure.as_deref() {
            None => Err(ReconError::InvalidParameter("--structure is required".into())),
            Some(s) => load_structure(s, d),
        }
    }

    fn grid(&self, st: &ConcreteStructure) -> Result<(usize, u32)> {
        match self.common.grid {
            Some((d, _)) if d != st.d() => Err(ReconError::InvalidParameter(format!(
                "grid dimension {d} differs from the structure dimension {}",
                st.d()
            ))),
            Some(g) => Ok(g),
            None => Ok((st.d(), DEFAULT_L)),
        }
    }

    fn kernel_family(&self, st: &ConcreteStructure) -> Result<KernelFamily> {
        let mut k = match &self.common.kernel {
            Some(p) => KernelFamily::from_json(&fs::read_to_string(p)?)?,
            None => KernelFamily::default(),
        };
        let theta = st.theta().to_f64().unwrap_or(f64::NAN);
        if self.common.kernel.is_none() {
            k.theta = theta;
        }
        if let Some(t) = &self.common.theta {
            k.theta = crate::algebra::symbol::q_to_f64(&crate::algebra::parse_q(t)?);
        }
        if let Some(e) = &self.common.eps {
            k.eps = crate::algebra::symbol::q_to_f64(&crate::algebra::parse_q(e)?);
        }
        if (k.theta - theta).abs() > 1e-12 {
            return Err(ReconError::InvalidParameter(format!(
                "kernel order θ = {} differs from the structure's θ = {theta}",
                k.theta
            )));
        }
        KernelFamily::new(k.theta, k.eps, k.n_max)
    }

    fn gamma(&self) -> Result<Option<f64>> {
        self.common
            .gamma
            .as_deref()
            .map(|g| Ok(crate::algebra::symbol::q_to_f64(&crate::algebra::parse_q(g)?)))
            .transpose()
    }

    fn write_report<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        write_atomic(&self.out(name), text.as_bytes())
    }
}

/// Builtin names, a structure document, a tree spec, or polynomial parameters {"d","r"}.
pub fn load_structure(arg: &str, d: usize) -> Result<ConcreteStructure> {
    if arg == "phi4" {
        return build_tree_structure(&TreeStructureSpec::phi4_like(d));
    }
    if let Some(r) = arg.strip_prefix("poly:") {
        return build_polynomial_structure(&PolynomialStructureParams { d, r: crate::algebra::parse_q(r)? });
    }
    let text = fs::read_to_string(arg).map_err(|e| ReconError::Io(format!("{arg}: {e}")))?;
    let v: Value = serde_json::from_str(&text)?;
    if v.get("format").and_then(|f| f.as_str()) == Some(serial::FORMAT) {
        serial::from_json(&text)
    } else if v.get("noises").is_some() {
        build_tree_structure(&TreeStructureSpec::from_json(&text)?)
    } else if let Some(r) = v.get("r") {
        let r = match r {
            Value::String(s) => crate::algebra::parse_q(s)?,
            Value::Number(n) if n.is_i64() => crate::algebra::Q::from_integer(n.as_i64().unwrap() as i128),
            _ => return Err(ReconError::Parse("'r' must be a rational string or an integer".into())),
        };
        let d = v.get("d").and_then(|x| x.as_u64()).unwrap_or(d as u64) as usize;
        build_polynomial_structure(&PolynomialStructureParams { d, r })
    } else {
        Err(ReconError::Parse(format!("{arg} is neither a structure, a tree spec nor polynomial parameters")))
    }
}

fn exit_code(e: &ReconError) -> i32 {
    match e {
        ReconError::Parse(_) | ReconError::Io(_) | ReconError::InvalidParameter(_) => 2,
        _ => 1,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("RECONKIT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parse `args` (program name first), run the command, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    let result = match cli.command {
        Command::AlgebraCheck(c) => cmd_algebra_check(&RunConfig::new(c)),
        Command::BuildStructure(c) => cmd_build_structure(&RunConfig::new(c)),
        Command::BuildModel(c) => cmd_build_model(&RunConfig::new(c)),
        Command::Brackets(c) => cmd_brackets(&RunConfig::new(c)),
        Command::Reconstruct(c) => cmd_reconstruct(&RunConfig::new(c)),
        Command::FromBrackets(c) => cmd_from_brackets(&RunConfig::new(c)),
        Command::Roundtrip(c) => cmd_roundtrip(&RunConfig::new(c)),
        Command::Regularity(c) => cmd_regularity(&RunConfig::new(c)),
        Command::Pipeline(c) => cmd_pipeline(&RunConfig::new(c)),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn report_csv(reports: &[&Report]) -> String {
    let mut s = String::from("report,check,passed,value,threshold\n");
    for r in reports {
        for i in &r.items {
            let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            s.push_str(&format!("{},{},{},{},{}\n", r.title, i.name.replace(',', ";"), i.passed, f(i.value), f(i.threshold)));
        }
    }
    s
}

fn emit(cfg: &RunConfig, stem: &str, value: &Value, reports: &[&Report]) -> Result<()> {
    match cfg.common.format {
        Format::Json => cfg.write_report(&format!("{stem}.json"), value),
        Format::Csv => write_atomic(&cfg.out(&format!("{stem}.csv")), report_csv(reports).as_bytes()),
    }
}

pub fn cmd_algebra_check(cfg: &RunConfig) -> Result<bool> {
    let st = cfg.structure()?;
    let axioms = check_axioms(&st);
    let assumptions = validate_assumptions(&st);
    let ok = axioms.passed() && assumptions.passed();
    let v = json!({
        "structure_hash": structure_hash(&st),
        "passed": ok,
        "axioms": axioms,
        "assumptions": assumptions,
    });
    emit(cfg, "algebra_check", &v, &[&axioms, &assumptions])?;
    Ok(ok)
}

pub fn cmd_build_structure(cfg: &RunConfig) -> Result<bool> {
    let st = cfg.structure()?;
    write_atomic(&cfg.out("structure.json"), serial::to_json(&st).as_bytes())?;
    Ok(true)
}

/// Gaussian noise of the declared regularity, one independent stream per noise symbol.
pub fn noise_fields(st: &ConcreteStructure, d: usize, l: u32, seed: u64) -> BTreeMap<String, Field> {
    st.grading
        .noises
        .iter()
        .enumerate()
        .map(|(i, (name, hom))| {
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
            (name.to_string(), synthetic_field(d, l, crate::algebra::symbol::q_to_f64(hom), s))
        })
        .collect()
}

struct Built {
    model: Model,
    partition: PartitionOfUnity,
    kernel: Option<GridKernel>,
}

fn canonical_model(cfg: &RunConfig, st: Arc<ConcreteStructure>) -> Result<Built> {
    let (d, l) = cfg.grid(&st)?;
    let partition = partition_of_unity(d, l)?;
    if st.has_integration() {
        let seed = cfg.seed()?;
        let fam = cfg.kernel_family(&st)?;
        let kernel = fam.on_grid(d, l);
        let noises = noise_fields(&st, d, l, seed);
        let mut model = canonical_smooth_model(st, &noises, &kernel, &partition)?;
        model.provenance = format!(
            "canonical smooth model; seed {seed}; theta {}; eps {}; grid {d},{l}",
            fam.theta, fam.eps
        );
        Ok(Built { model, partition, kernel: Some(kernel) })
    } else {
        let model = canonical_polynomial_model(st, &partition)?;
        Ok(Built { model, partition, kernel: None })
    }
}

fn model_checks(model: &Model, cfg: &RunConfig, seed: u64) -> Result<(Report, Report)> {
    let transition = check_transition(model, 10, seed, cfg.tol.transition)?;
    let norms = model_norms(model, &NormParams { base_points: 64, seed, tol: cfg.tol.exponent })?;
    Ok((transition, norms.report))
}

pub fn cmd_build_model(cfg: &RunConfig) -> Result<bool> {
    let st = Arc::new(cfg.structure()?);
    let built = canonical_model(cfg, st.clone())?;
    let seed = cfg.common.seed.unwrap_or(0);
    write_atomic(&cfg.out("structure.json"), serial::to_json(&st).as_bytes())?;
    save_model(&built.model, &cfg.out("model.json"))?;
    let (transition, norms) = model_checks(&built.model, cfg, seed)?;
    let ok = transition.passed();
    let v = json!({
        "structure_hash": structure_hash(&st),
        "provenance": built.model.provenance,
        "passed": ok,
        "transition": transition,
        "norms": norms,
    });
    emit(cfg, "model_report", &v, &[&transition, &norms])?;
    Ok(ok)
}

fn structure_for(cfg: &RunConfig, header: &Path) -> Result<Arc<ConcreteStructure>> {
    if cfg.common.structure.is_some() {
        return Ok(Arc::new(cfg.structure()?));
    }
    let sibling = header.parent().unwrap_or(Path::new(".")).join("structure.json");
    let text = fs::read_to_string(&sibling)
        .map_err(|e| ReconError::Io(format!("{} (pass --structure): {e}", sibling.display())))?;
    Ok(Arc::new(serial::from_json(&text)?))
}

fn require(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| ReconError::InvalidParameter(format!("{flag} is required for this command")))
}

fn bracket_rows(st: &ConcreteStructure, set: &BracketSet, window: (i32, i32), tol: f64) -> Vec<RegularityRow> {
    let mut rows = Vec::new();
    let hom = |s: &Symbol| st.hom(s).to_f64().unwrap_or(f64::NAN);
    let m: Vec<(String, f64, &Field)> = set.m.iter().map(|(s, f)| (format!("M {}", st.name(s)), hom(s), f)).collect();
    let g: Vec<(String, f64, &Field)> =
        set.g.iter().filter(|(s, _)| !s.is_unit()).map(|(s, f)| (format!("g {}", st.name(s)), hom(s), f)).collect();
    rows.extend(regularity_rows(&m, window, tol));
    rows.extend(regularity_rows(&g, window, tol));
    rows
}

fn run_brackets(cfg: &RunConfig, model: &Model) -> Result<(BracketSet, Report, Vec<RegularityRow>)> {
    let set = compute_brackets(model)?;
    let mut report = quotient_bracket_check(model, &set.g, cfg.tol.quotient)?;
    let rows = bracket_rows(&model.structure, &set, default_window(model.l), cfg.tol.exponent);
    let failing: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| r.symbol.clone()).collect();
    report.witnesses("bracket_regularity", failing);
    Ok((set, report, rows))
}

/// Noise draws behind the pipeline's bracket-regularity verdict.
pub const ENSEMBLE_DRAWS: u64 = 20;

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let h = v.len() / 2;
    Some(if v.len() % 2 == 0 { 0.5 * (v[h - 1] + v[h]) } else { v[h] })
}

/// Median bracket exponents over ENSEMBLE_DRAWS noise draws of the canonical model;
/// the first draw is the run itself, whose rows are passed in.
fn ensemble_rows(
    cfg: &RunConfig,
    model: &Model,
    kernel: &GridKernel,
    partition: &PartitionOfUnity,
    first: &[RegularityRow],
    seed: u64,
) -> Result<Vec<RegularityRow>> {
    let st = model.structure.clone();
    let window = default_window(model.l);
    let draws: Vec<Vec<RegularityRow>> = (1..ENSEMBLE_DRAWS)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k.wrapping_mul(0xD1B5_4A32_D192_ED03));
            let noises = noise_fields(&st, model.d, model.l, s);
            let m = canonical_smooth_model(st.clone(), &noises, kernel, partition)?;
            Ok(bracket_rows(&st, &compute_brackets(&m)?, window, cfg.tol.exponent))
        })
        .collect::<Result<_>>()?;
    let mut samples: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in first.iter().chain(draws.iter().flatten()) {
        if let Some(e) = row.estimated {
            samples.entry(row.symbol.as_str()).or_default().push(e);
        }
    }
    Ok(first
        .iter()
        .map(|row| {
            let estimated = samples.get_mut(row.symbol.as_str()).and_then(|v| median(v));
            let pass = estimated.is_none_or(|e| e >= row.declared - cfg.tol.exponent);
            RegularityRow { symbol: row.symbol.clone(), declared: row.declared, estimated, pass }
        })
        .collect())
}

pub fn cmd_brackets(cfg: &RunConfig) -> Result<bool> {
    let header = require(&cfg.common.model, "--model")?;
    let st = structure_for(cfg, &header)?;
    let model = load_model(&header, st.clone())?;
    let (set, report, rows) = run_brackets(cfg, &model)?;
    save_brackets(&st, &set, model.d, model.l, &cfg.out("brackets.json"))?;
    write_atomic(&cfg.out("regularity.csv"), regularity_csv(&rows).as_bytes())?;
    let ok = report.passed();
    emit(cfg, "brackets_report", &json!({ "passed": ok, "report": report }), &[&report])?;
    Ok(ok)
}

#[derive(Serialize)]
struct ReconstructionEntry {
    target: String,
    gamma: f64,
    bound: Report,
    residual_exponent: Option<f64>,
    residual_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_error: Option<f64>,
    exact_pass: bool,
}

fn reconstruct_all(
    cfg: &RunConfig,
    model: &Model,
    partition: &PartitionOfUnity,
    seed: u64,
) -> Result<(Vec<(String, Field)>, Vec<ReconstructionEntry>)> {
    let st = &model.structure;
    let params = BoundParams { seed, tol: cfg.tol.exponent, ..BoundParams::default() };
    let mbrackets = compute_m_brackets(model)?;
    let window = default_window(model.l);
    let mut targets: Vec<(String, ModelledDistribution, Option<Field>)> = Vec::new();
    if let Some(path) = &cfg.common.fields {
        let (_, _, fields) = read_rkf(path)?;
        let f = fields.first().ok_or_else(|| ReconError::Parse("empty field file".into()))?;
        let r = cfg.gamma()?.ok_or_else(|| ReconError::InvalidParameter("--gamma is required with --fields".into()))?;
        targets.push(("lift".into(), polynomial_lift(st, f, r, partition)?, Some(f.clone())));
    } else if !st.has_integration() {
        let r = cfg.gamma()?.unwrap_or(2.5);
        let f = random_trig(model.d, model.l, 8, seed);
        targets.push(("lift".into(), polynomial_lift(st, &f, r, partition)?, Some(f)));
    } else {
        for tau in st.basis(Space::T) {
            if tau.is_poly() || st.hom(tau) == crate::algebra::Q::from_integer(0) {
                continue;
            }
            targets.push((format!("h {}", st.name(tau)), h_tau(model, tau)?, Some(model.pi(tau)?)));
        }
    }
    let mut fields = Vec::new();
    let mut entries = Vec::new();
    for (name, f, expected) in targets {
        let (rf, rest) = paracontrolled_reconstruct(model, &f, &mbrackets)?;
        let bound = reconstruction_bound_test(model, &f, &rf, &params)?;
        let (residual_pass, residual_exponent) =
            crate::harmonic::regularity_at_least(&rest, f.gamma, cfg.tol.exponent, window)?;
        // a function-like target must be recovered exactly; 𝒉_τ only up to a 𝒞^{|τ|} term
        let (exact_error, exact_pass) = match &expected {
            Some(e) if name == "lift" => {
                let err = rf.distance(e, false)?;
                (Some(err), err <= cfg.tol.lift)
            }
            Some(e) => {
                let err = rf.distance(e, false)?;
                if err <= cfg.tol.pi * e.sup_norm().max(1.0) {
                    (Some(err), true)
                } else {
                    let (ok, _) = crate::harmonic::regularity_at_least(&(&rf - e), f.gamma, cfg.tol.exponent, window)?;
                    (Some(err), ok)
                }
            }
            None => (None, true),
        };
        entries.push(ReconstructionEntry {
            target: name.clone(),
            gamma: f.gamma,
            bound,
            residual_exponent,
            residual_pass,
            exact_error,
            exact_pass,
        });
        fields.push((name, rf));
    }
    Ok((fields, entries))
}

fn entries_pass(entries: &[ReconstructionEntry]) -> bool {
    entries.iter().all(|e| e.bound.passed() && e.residual_pass && e.exact_pass)
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<bool> {
    let header = require(&cfg.common.model, "--model")?;
    let st = structure_for(cfg, &header)?;
    let model = load_model(&header, st)?;
    let partition = partition_of_unity(model.d, model.l)?;
    let seed = cfg.common.seed.unwrap_or(0);
    let (fields, entries) = reconstruct_all(cfg, &model, &partition, seed)?;
    let rfs: Vec<Field> = fields.iter().map(|f| f.1.clone()).collect();
    write_rkf(&cfg.out("reconstruction.rkf"), &rfs, model.d, model.l)?;
    let ok = entries_pass(&entries);
    let names: Vec<&String> = fields.iter().map(|f| &f.0).collect();
    let reports: Vec<&Report> = entries.iter().map(|e| &e.bound).collect();
    emit(cfg, "reconstruction", &json!({ "passed": ok, "fields": names, "entries": entries }), &reports)?;
    Ok(ok)
}

fn harvested_brackets(model: &Model, set: &BracketSet) -> BTreeMap<Symbol, Field> {
    set.m
        .iter()
        .filter(|(s, _)| !s.is_poly() && model.hom(s) <= 0.0)
        .map(|(s, f)| (s.clone(), f.clone()))
        .collect()
}

struct AdmissibleOutcome {
    model: Model,
    build: crate::admissible::AdmissibleBuildReport,
    admissible: Report,
    usual: Report,
    transition: Report,
    upsilon: Report,
}

fn from_brackets_inner(
    cfg: &RunConfig,
    st: Arc<ConcreteStructure>,
    input: &BTreeMap<Symbol, Field>,
    d: usize,
    l: u32,
    seed: u64,
) -> Result<AdmissibleOutcome> {
    let partition = partition_of_unity(d, l)?;
    let fam = cfg.kernel_family(&st)?;
    let kernel = fam.on_grid(d, l);
    let (mut model, build) = build_admissible(st.clone(), input, &kernel, &partition)?;
    model.provenance = format!("built from brackets; theta {}; eps {}; grid {d},{l}", fam.theta, fam.eps);
    let admissible = check_admissible(&model, &kernel, &partition, &cfg.tol.admissible(seed))?;
    let usual = check_usual(&model, &partition, cfg.tol.usual)?;
    let transition = check_transition(&model, 10, seed, cfg.tol.transition)?;
    let mut upsilon = Report::new("upsilon");
    let sampler = PairSampler { seed, tol: cfg.tol.exponent, ..PairSampler::default() };
    for tau in st.basis(Space::T) {
        if tau.is_poly() || matches!(tau, Symbol::Integ(_)) {
            continue;
        }
        let r = upsilon_check(&model, tau, 0, &kernel, &partition, &sampler, 10, cfg.tol.upsilon)?;
        upsilon.extend(&st.name(tau), r);
    }
    Ok(AdmissibleOutcome { model, build, admissible, usual, transition, upsilon })
}

pub fn cmd_from_brackets(cfg: &RunConfig) -> Result<bool> {
    let header = require(&cfg.common.brackets, "--brackets")?;
    let st = structure_for(cfg, &header)?;
    let (set, d, l) = load_brackets(&header, &st)?;
    let input: BTreeMap<Symbol, Field> = set
        .m
        .into_iter()
        .filter(|(s, _)| !s.is_poly() && st.hom(s) <= crate::algebra::Q::from_integer(0))
        .collect();
    let seed = cfg.common.seed.unwrap_or(0);
    let o = from_brackets_inner(cfg, st.clone(), &input, d, l, seed)?;
    write_atomic(&cfg.out("structure.json"), serial::to_json(&st).as_bytes())?;
    save_model(&o.model, &cfg.out("model.json"))?;
    let ok = o.admissible.passed() && o.usual.passed() && o.transition.passed();
    let v = json!({
        "passed": ok,
        "build": o.build,
        "admissible": o.admissible,
        "usual": o.usual,
        "transition": o.transition,
        "upsilon": o.upsilon,
    });
    emit(cfg, "build_report", &v, &[&o.admissible, &o.usual, &o.transition, &o.upsilon])?;
    Ok(ok)
}

/// Compare a rebuilt model with its source: brackets and Π on |τ| ≤ 0, residual exponents on |τ| > 0.
pub fn compare_models(source: &Model, source_m: &BTreeMap<Symbol, Field>, rebuilt: &Model, tol: &Tolerances) -> Result<Report> {
    let st = &source.structure;
    let rebuilt_m = compute_m_brackets(rebuilt)?;
    let window = default_window(source.l);
    let mut w_br = Vec::new();
    let mut w_pi = Vec::new();
    let mut w_exp = Vec::new();
    let (mut worst_br, mut worst_pi) = (0.0f64, 0.0f64);
    for tau in st.basis(Space::T) {
        let a = source.pi(tau)?;
        let b = rebuilt.pi(tau)?;
        let name = st.name(tau);
        if source.hom(tau) <= 0.0 {
            let e = a.distance(&b, false)?;
            worst_pi = worst_pi.max(e);
            if e > tol.pi {
                w_pi.push(format!("{name}: {e:.3e}"));
            }
            if !tau.is_poly() {
                let eb = source_m[tau].distance(&rebuilt_m[tau], false)?;
                worst_br = worst_br.max(eb);
                if eb > tol.bracket {
                    w_br.push(format!("{name}: {eb:.3e}"));
                }
            }
        } else {
            let diff = &a - &b;
            let scale = a.sup_norm().max(1.0);
            if diff.sup_norm() <= tol.pi * scale {
                continue;
            }
            let (ok, e) = crate::harmonic::regularity_at_least(&diff, source.hom(tau), tol.exponent, window)?;
            if !ok {
                w_exp.push(format!("{name}: exponent {e:?}"));
            }
        }
    }
    let mut r = Report::new("round trip");
    r.witnesses("brackets", w_br);
    if let Some(i) = r.items.last_mut() {
        i.value = Some(worst_br);
        i.threshold = Some(tol.bracket);
    }
    r.witnesses("pi_nonpositive", w_pi);
    if let Some(i) = r.items.last_mut() {
        i.value = Some(worst_pi);
        i.threshold = Some(tol.pi);
    }
    r.witnesses("pi_positive_residual", w_exp);
    Ok(r)
}

pub fn cmd_roundtrip(cfg: &RunConfig) -> Result<bool> {
    let (source, seed) = match &cfg.common.model {
        Some(h) => {
            let st = structure_for(cfg, h)?;
            (load_model(h, st)?, cfg.common.seed.unwrap_or(0))
        }
        None => {
            let st = Arc::new(cfg.structure()?);
            (canonical_model(cfg, st)?.model, cfg.seed()?)
        }
    };
    let st = source.structure.clone();
    if !st.has_integration() {
        return Err(ReconError::InvalidParameter("round trip needs a structure with integration".into()));
    }
    let set = compute_brackets(&source)?;
    let input = harvested_brackets(&source, &set);
    let o = from_brackets_inner(cfg, st, &input, source.d, source.l, seed)?;
    let cmp = compare_models(&source, &set.m, &o.model, &cfg.tol)?;
    let ok = cmp.passed() && o.admissible.passed() && o.usual.passed() && o.transition.passed();
    let v = json!({
        "passed": ok,
        "comparison": cmp,
        "admissible": o.admissible,
        "usual": o.usual,
        "transition": o.transition,
        "build": o.build,
    });
    emit(cfg, "roundtrip", &v, &[&cmp, &o.admissible, &o.usual, &o.transition])?;
    Ok(ok)
}

fn profile_log_csv(f: &Field) -> String {
    let mut s = String::from("i,log2_m_i\n");
    for (i, m) in spectral_profile(f) {
        let v = if m > 0.0 { format!("{:.6}", m.log2()) } else { "-inf".into() };
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

pub fn cmd_regularity(cfg: &RunConfig) -> Result<bool> {
    let path = require(&cfg.common.fields, "--fields")?;
    if !path.exists() {
        return Err(ReconError::Io(format!("{}: no such file", path.display())));
    }
    let is_header = path.extension().is_some_and(|e| e == "json");
    let mut named: Vec<(String, f64, Field)> = Vec::new();
    let l;
    if is_header {
        let st = structure_for(cfg, &path)?;
        let text = fs::read_to_string(&path)?;
        let v: Value = serde_json::from_str(&text)?;
        let hom = |s: &Symbol| st.hom(s).to_f64().unwrap_or(f64::NAN);
        if v.get("format").and_then(|f| f.as_str()) == Some(crate::io::BRACKETS_FORMAT) {
            let (set, _, bl) = load_brackets(&path, &st)?;
            l = bl;
            for (s, f) in &set.m {
                named.push((format!("M {}", st.name(s)), hom(s), f.clone()));
            }
            for (s, f) in set.g.iter().filter(|(s, _)| !s.is_unit()) {
                named.push((format!("g {}", st.name(s)), hom(s), f.clone()));
            }
        } else {
            let model = load_model(&path, st.clone())?;
            l = model.l;
            for (s, f) in &model.pi {
                named.push((format!("Pi {}", st.name(s)), hom(s), f.clone()));
            }
        }
    } else {
        let (_, fl, fields) = read_rkf(&path)?;
        l = fl;
        let g = cfg.gamma()?.ok_or_else(|| ReconError::InvalidParameter("--gamma is required for raw field files".into()))?;
        for (i, f) in fields.into_iter().enumerate() {
            named.push((format!("field {i}"), g, f));
        }
    }
    if named.is_empty() {
        return Err(ReconError::Parse("no fields to analyse".into()));
    }
    let window = default_window(l);
    let items: Vec<(String, f64, &Field)> = named.iter().map(|(n, h, f)| (n.clone(), *h, f)).collect();
    let rows = regularity_rows(&items, window, cfg.tol.exponent);
    match cfg.common.format {
        Format::Csv => write_atomic(&cfg.out("regularity.csv"), regularity_csv(&rows).as_bytes())?,
        Format::Json => cfg.write_report("regularity.json", &rows)?,
    }
    if cfg.common.profile {
        for (i, (_, _, f)) in named.iter().enumerate() {
            write_atomic(&cfg.out(&format!("profile_{i:03}.csv")), profile_log_csv(f).as_bytes())?;
        }
    }
    Ok(rows.iter().all(|r| r.pass))
}

#[derive(Serialize)]
struct Stage {
    name: String,
    passed: bool,
}

pub fn cmd_pipeline(cfg: &RunConfig) -> Result<bool> {
    let st = Arc::new(cfg.structure()?);
    let seed = cfg.seed()?;
    let mut stages: Vec<Stage> = Vec::new();
    let mut push = |name: &str, passed: bool| stages.push(Stage { name: name.into(), passed });

    write_atomic(&cfg.out("structure.json"), serial::to_json(&st).as_bytes())?;
    let axioms = check_axioms(&st);
    let assumptions = validate_assumptions(&st);
    push("algebra", axioms.passed() && assumptions.passed());

    let built = canonical_model(cfg, st.clone())?;
    let model = &built.model;
    save_model(model, &cfg.out("model.json"))?;
    let (transition, norms) = model_checks(model, cfg, seed)?;
    push("transition", transition.passed());

    let (set, mut bracket_report, rows) = run_brackets(cfg, model)?;
    save_brackets(&st, &set, model.d, model.l, &cfg.out("brackets.json"))?;
    write_atomic(&cfg.out("regularity.csv"), regularity_csv(&rows).as_bytes())?;
    if let Some(kernel) = &built.kernel {
        // a single draw scatters around the declared exponent; the verdict uses the ensemble median
        let ens = ensemble_rows(cfg, model, kernel, &built.partition, &rows, seed)?;
        write_atomic(&cfg.out("regularity_ensemble.csv"), regularity_csv(&ens).as_bytes())?;
        bracket_report.items.retain(|i| i.name != "bracket_regularity");
        let failing: Vec<String> = ens.iter().filter(|r| !r.pass).map(|r| r.symbol.clone()).collect();
        bracket_report.witnesses("bracket_regularity_median", failing);
    }
    push("brackets", bracket_report.passed());

    let (fields, entries) = reconstruct_all(cfg, model, &built.partition, seed)?;
    let rfs: Vec<Field> = fields.iter().map(|f| f.1.clone()).collect();
    write_rkf(&cfg.out("reconstruction.rkf"), &rfs, model.d, model.l)?;
    push("reconstruction", entries_pass(&entries));

    let mut extra = serde_json::Map::new();
    if let Some(kernel) = &built.kernel {
        let adm = check_admissible(model, kernel, &built.partition, &cfg.tol.admissible(seed))?;
        let usual = check_usual(model, &built.partition, cfg.tol.usual)?;
        push("source_admissible", adm.passed() && usual.passed());
        let input = harvested_brackets(model, &set);
        let o = from_brackets_inner(cfg, st.clone(), &input, model.d, model.l, seed)?;
        save_model(&o.model, &cfg.out("rebuilt_model.json"))?;
        let cmp = compare_models(model, &set.m, &o.model, &cfg.tol)?;
        push("roundtrip", cmp.passed());
        push("rebuilt_admissible", o.admissible.passed() && o.usual.passed() && o.transition.passed());
        push("upsilon", o.upsilon.passed());
        extra.insert("source_admissible".into(), json!(adm));
        extra.insert("source_usual".into(), json!(usual));
        extra.insert("roundtrip".into(), json!(cmp));
        extra.insert("rebuilt_admissible".into(), json!(o.admissible));
        extra.insert("rebuilt_usual".into(), json!(o.usual));
        extra.insert("rebuilt_transition".into(), json!(o.transition));
        extra.insert("upsilon".into(), json!(o.upsilon));
        extra.insert("build".into(), json!(o.build));
    }

    let ok = stages.iter().all(|s| s.passed);
    let origin = match &st.origin {
        Origin::Polynomial { .. } => "polynomial",
        Origin::Tree { .. } => "tree",
        Origin::Loaded => "loaded",
    };
    let mut v = json!({
        "passed": ok,
        "seed": seed,
        "structure": origin,
        "structure_hash": structure_hash(&st),
        "provenance": model.provenance,
        "tolerances": cfg.tol,
        "stages": stages,
        "axioms": axioms,
        "assumptions": assumptions,
        "transition": transition,
        "norms": norms,
        "brackets": bracket_report,
        "reconstruction": entries,
    });
    v.as_object_mut().unwrap().extend(extra);
    cfg.write_report("pipeline.json", &v)?;
    Ok(ok)
}
