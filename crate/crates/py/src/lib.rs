use std::path::Path;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use reconkit::algebra::serial;
use reconkit::algebra::{check_axioms, ConcreteStructure};
use reconkit::harmonic::{self, default_window, Field};
use reconkit::structures::validate_assumptions;
use reconkit::ReconError;

fn to_py(e: ReconError) -> PyErr {
    match e {
        ReconError::Io(m) => PyIOError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn structure(spec: &str, d: usize) -> PyResult<ConcreteStructure> {
    reconkit::cli::load_structure(spec, d).map_err(to_py)
}

fn field(values: Vec<f64>, d: usize, l: u32) -> PyResult<Field> {
    Field::new(d, l, values).map_err(to_py)
}

/// Run a command line, e.g. `run(["pipeline", "--structure", "phi4"])`, and return its exit code.
#[pyfunction]
fn run(args: Vec<String>) -> i32 {
    reconkit::cli::run(std::iter::once("reconkit".to_string()).chain(args))
}

/// Canonical JSON document of a structure ("phi4", "poly:R" or a path).
#[pyfunction]
#[pyo3(signature = (spec, d=1))]
fn structure_json(spec: &str, d: usize) -> PyResult<String> {
    Ok(serial::to_json(&structure(spec, d)?))
}

#[pyfunction]
#[pyo3(signature = (spec, d=1))]
fn structure_hash(spec: &str, d: usize) -> PyResult<String> {
    Ok(serial::structure_hash(&structure(spec, d)?))
}

/// Exact axiom and assumption checks; returns (passed, report as JSON).
#[pyfunction]
#[pyo3(signature = (spec, d=1))]
fn algebra_check(spec: &str, d: usize) -> PyResult<(bool, String)> {
    let st = structure(spec, d)?;
    let axioms = check_axioms(&st);
    let assumptions = validate_assumptions(&st);
    let passed = axioms.passed() && assumptions.passed();
    let v = serde_json::json!({ "passed": passed, "axioms": axioms, "assumptions": assumptions });
    Ok((passed, v.to_string()))
}

#[pyfunction]
fn synthetic_field(d: usize, l: u32, alpha: f64, seed: u64) -> Vec<f64> {
    harmonic::synthetic_field(d, l, alpha, seed).values
}

#[pyfunction]
fn random_trig(d: usize, l: u32, degree: i64, seed: u64) -> Vec<f64> {
    harmonic::random_trig(d, l, degree, seed).values
}

/// Fitted Littlewood-Paley decay exponent over the default block window.
#[pyfunction]
fn estimate_regularity(values: Vec<f64>, d: usize, l: u32) -> PyResult<f64> {
    let f = field(values, d, l)?;
    Ok(harmonic::estimate_regularity(&f, default_window(l)).map_err(to_py)?.slope)
}

#[pyfunction]
fn para(f: Vec<f64>, g: Vec<f64>, d: usize, l: u32) -> PyResult<Vec<f64>> {
    Ok(harmonic::para(&field(f, d, l)?, &field(g, d, l)?).map_err(to_py)?.values)
}

#[pyfunction]
fn resonant(f: Vec<f64>, g: Vec<f64>, d: usize, l: u32) -> PyResult<Vec<f64>> {
    Ok(harmonic::resonant(&field(f, d, l)?, &field(g, d, l)?).map_err(to_py)?.values)
}

/// Fields of an .rkf file as (d, L, [values, ...]).
#[pyfunction]
fn read_rkf(path: &str) -> PyResult<(usize, u32, Vec<Vec<f64>>)> {
    let (d, l, fields) = reconkit::io::read_rkf(Path::new(path)).map_err(to_py)?;
    Ok((d, l, fields.into_iter().map(|f| f.values).collect()))
}

#[pyfunction]
fn write_rkf(path: &str, fields: Vec<Vec<f64>>, d: usize, l: u32) -> PyResult<()> {
    let fields = fields.into_iter().map(|v| field(v, d, l)).collect::<PyResult<Vec<_>>>()?;
    reconkit::io::write_rkf(Path::new(path), &fields, d, l).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "reconkit")]
fn reconkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(structure_json, m)?)?;
    m.add_function(wrap_pyfunction!(structure_hash, m)?)?;
    m.add_function(wrap_pyfunction!(algebra_check, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_field, m)?)?;
    m.add_function(wrap_pyfunction!(random_trig, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_regularity, m)?)?;
    m.add_function(wrap_pyfunction!(para, m)?)?;
    m.add_function(wrap_pyfunction!(resonant, m)?)?;
    m.add_function(wrap_pyfunction!(read_rkf, m)?)?;
    m.add_function(wrap_pyfunction!(write_rkf, m)?)?;
    Ok(())
}
