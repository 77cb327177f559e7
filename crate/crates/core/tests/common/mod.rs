#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use reconkit::admissible::{canonical_smooth_model, GridKernel, KernelFamily};
use reconkit::algebra::{parse_q, ConcreteStructure};
use reconkit::harmonic::{synthetic_field, Field};
use reconkit::models::Model;
use reconkit::structures::{
    build_polynomial_structure, build_tree_structure, partition_of_unity, PartitionOfUnity, PolynomialStructureParams,
    TreeStructureSpec,
};

pub const NOISE_REGULARITY: f64 = -0.625;

pub struct Smooth {
    pub st: Arc<ConcreteStructure>,
    pub model: Model,
    pub kernel: GridKernel,
    pub partition: PartitionOfUnity,
    pub zeta: Field,
}

pub fn tree() -> Arc<ConcreteStructure> {
    Arc::new(build_tree_structure(&TreeStructureSpec::phi4_like(1)).unwrap())
}

pub fn poly(d: usize, r: &str) -> Arc<ConcreteStructure> {
    Arc::new(build_polynomial_structure(&PolynomialStructureParams { d, r: parse_q(r).unwrap() }).unwrap())
}

pub fn smooth_model(st: Arc<ConcreteStructure>, l: u32, seed: u64) -> Smooth {
    let partition = partition_of_unity(1, l).unwrap();
    let kernel = KernelFamily::default().on_grid(1, l);
    let zeta = synthetic_field(1, l, NOISE_REGULARITY, seed);
    let mut noises = BTreeMap::new();
    noises.insert("Xi".to_string(), zeta.clone());
    let model = canonical_smooth_model(st.clone(), &noises, &kernel, &partition).unwrap();
    Smooth { st, model, kernel, partition, zeta }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
