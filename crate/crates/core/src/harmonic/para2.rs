use rustfft::num_complex::Complex64;

use super::field::{fft_nd, freq, Field};
use super::lp::{j_max, lp_blocks, para_from_blocks, rho};
use crate::error::{ReconError, Result};

/// Two-variable function Λ(y,z). The rank form Σ a_n(y) b_n(z) is the working
/// representation; the dense matrix (d = 1 only) exists for cross-validation.
#[derive(Clone, Debug, Default)]
pub struct TwoVarFunction {
    pub terms: Vec<(Field, Field)>,
    pub dense: Option<Vec<f64>>,
}

/// Largest resolution at which the dense path runs without being forced.
pub const DENSE_MAX_L: u32 = 12;

impl TwoVarFunction {
    pub fn rank(terms: Vec<(Field, Field)>) -> Self {
        TwoVarFunction { terms, dense: None }
    }

    pub fn push(&mut self, a: Field, b: Field) {
        self.terms.push((a, b));
    }

    /// Λ_x(x) for every grid point x.
    pub fn diagonal(&self) -> Option<Field> {
        let (a0, _) = self.terms.first()?;
        let mut out = Field::zeros(a0.d, a0.l);
        for (a, b) in &self.terms {
            for ((o, x), y) in out.values.iter_mut().zip(&a.values).zip(&b.values) {
                *o += x * y;
            }
        }
        Some(out)
    }

    /// The field z ↦ Λ(x, z) for a fixed flat index x.
    pub fn slice(&self, x: usize) -> Option<Field> {
        let (a0, _) = self.terms.first()?;
        let mut out = Field::zeros(a0.d, a0.l);
        for (a, b) in &self.terms {
            out.axpy(a.values[x], b).unwrap();
        }
        Some(out)
    }

    /// Fill the dense N×N matrix from the rank form (row index y, column index z).
    pub fn densify(&mut self, force: bool) -> Result<()> {
        let (a0, _) = self
            .terms
            .first()
            .ok_or_else(|| ReconError::InvalidArgument("empty two-variable function".into()))?;
        check_dense(a0.d, a0.l, force)?;
        let n = a0.n();
        let mut m = vec![0.0; n * n];
        for (a, b) in &self.terms {
            for y in 0..n {
                let ay = a.values[y];
                if ay == 0.0 {
                    continue;
                }
                let row = &mut m[y * n..(y + 1) * n];
                for (r, bz) in row.iter_mut().zip(&b.values) {
                    *r += ay * bz;
                }
            }
        }
        self.dense = Some(m);
        Ok(())
    }
}

fn check_dense(d: usize, l: u32, force: bool) -> Result<()> {
    if force {
        if d != 1 {
            return Err(ReconError::Unsupported("dense two-variable form exists only for d = 1".into()));
        }
        return Ok(());
    }
    if d != 1 || l > DENSE_MAX_L {
        return Err(ReconError::ResourceLimit(format!(
            "dense two-variable form refused at d={d}, L={l} (limit d=1, L≤{DENSE_MAX_L})"
        )));
    }
    Ok(())
}

/// Two-parameter paraproduct **P**Λ = Σ_j diag((S_j ⊗ Δ_j)Λ), from the rank form.
pub fn para2(lambda: &TwoVarFunction) -> Result<Field> {
    let (a0, _) = lambda
        .terms
        .first()
        .ok_or_else(|| ReconError::InvalidArgument("empty two-variable function".into()))?;
    let mut out = Field::zeros(a0.d, a0.l);
    for (a, b) in &lambda.terms {
        a.same_grid(b)?;
        a.same_grid(&out)?;
        let p = para_from_blocks(&lp_blocks(a), &lp_blocks(b));
        out.axpy(1.0, &p)?;
    }
    Ok(out)
}

/// Dense evaluation of **P**Λ in d = 1: the joint multiplier Σ_j s_j(ξ)ρ_j(η) is applied to
/// the two-dimensional spectrum, which is then restricted to the diagonal.
pub fn para2_dense(lambda: &TwoVarFunction, l: u32, force: bool) -> Result<Field> {
    check_dense(1, l, force)?;
    let m = lambda
        .dense
        .as_ref()
        .ok_or_else(|| ReconError::InvalidArgument("no dense representation present".into()))?;
    let n = 1usize << l;
    if m.len() != n * n {
        return Err(ReconError::GridMismatch("dense matrix does not match the grid".into()));
    }
    let mut data: Vec<Complex64> = m.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_nd(&mut data, 2, n, false);
    let jm = j_max(l);
    let low = |j: i32, r: f64| -> f64 { (-1..=j - 2).map(|i| rho(i, jm, r)).sum() };
    let mut diag = vec![Complex64::new(0.0, 0.0); n];
    for a in 0..n {
        let xi = freq(a, n).unsigned_abs() as f64;
        let s: Vec<f64> = (1..=jm).map(|j| low(j, xi)).collect();
        for b in 0..n {
            let eta = freq(b, n).unsigned_abs() as f64;
            let mult: f64 = (1..=jm).map(|j| s[(j - 1) as usize] * rho(j, jm, eta)).sum();
            if mult != 0.0 {
                diag[(a + b) % n] += data[a * n + b] * mult;
            }
        }
    }
    fft_nd(&mut diag, 1, n, true);
    let norm = 1.0 / (n * n) as f64;
    Field::new(1, l, diag.iter().map(|c| c.re * norm).collect())
}
