use crate::algebra::symbol::{q_to_f64, Space, Symbol};
use crate::algebra::ConcreteStructure;
use crate::error::{ReconError, Result};
use crate::harmonic::Field;
use crate::models::{ModelledDistribution, Sector};

use super::PartitionOfUnity;

/// Patched Taylor lift: f^{𝐗_e^k} = ∂^k(φ_e f)/k! for every 𝐗_e^k of degree below r.
pub fn polynomial_lift(
    st: &ConcreteStructure,
    f: &Field,
    r: f64,
    partition: &PartitionOfUnity,
) -> Result<ModelledDistribution> {
    if f.d != partition.d || f.l != partition.l {
        return Err(ReconError::GridMismatch("field and partition live on different grids".into()));
    }
    let mut md = ModelledDistribution::new(r, Sector::T);
    for s in st.basis(Space::T) {
        let Symbol::Poly { chart, k } = s else { continue };
        if q_to_f64(&st.hom(s)) >= r {
            continue;
        }
        let local = &partition.phi[*chart as usize] * f;
        let c = local.derivative(k.0).scale(1.0 / k.factorial() as f64);
        md.coeffs.insert(s.clone(), c);
    }
    Ok(md)
}
