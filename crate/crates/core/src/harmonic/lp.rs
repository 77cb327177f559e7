use rayon::prelude::*;

use super::field::{freq_norm, Field, Spectrum};
use crate::error::{ReconError, Result};

/// Smooth radial cutoff: 1 on [0,1], 0 on [4/3, ∞), C∞ in between.
pub fn chi(t: f64) -> f64 {
    let a = 4.0 / 3.0;
    if t <= 1.0 {
        return 1.0;
    }
    if t >= a {
        return 0.0;
    }
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let p = h(a - t);
    p / (p + h(t - 1.0))
}

/// Top block index for resolution L.
pub fn j_max(l: u32) -> i32 {
    l as i32 - 2
}

/// Multiplier ρ_i(ξ). The top block takes whatever the lower blocks leave, so the
/// partition sums to one on every frequency of the grid.
pub fn rho(i: i32, jmax: i32, xi: f64) -> f64 {
    if i == -1 {
        return chi(xi);
    }
    let low = chi(xi * 2f64.powi(-i));
    if i == jmax {
        return 1.0 - low;
    }
    chi(xi * 2f64.powi(-i - 1)) - low
}

fn check_block(f: &Field, i: i32) -> Result<i32> {
    let jm = j_max(f.l);
    if jm < 0 {
        return Err(ReconError::InvalidParameter(format!("resolution L={} is too coarse", f.l)));
    }
    if i < -1 || i > jm {
        return Err(ReconError::OutOfRange(format!("block {i} outside [-1, {jm}]")));
    }
    Ok(jm)
}

pub fn lp_block(f: &Field, i: i32) -> Result<Field> {
    let jm = check_block(f, i)?;
    Ok(f.spectrum().apply_real(|xi| rho(i, jm, freq_norm(xi))))
}

/// All blocks Δ_{−1}f, …, Δ_{jmax}f (vector index i + 1).
pub fn lp_blocks(f: &Field) -> Vec<Field> {
    let jm = j_max(f.l);
    let sp = f.spectrum();
    blocks_from_spectrum(&sp, jm)
}

fn blocks_from_spectrum(sp: &Spectrum, jm: i32) -> Vec<Field> {
    (-1..=jm).into_par_iter().map(|i| sp.apply_real(|xi| rho(i, jm, freq_norm(xi)))).collect()
}

/// S_j f = Σ_{i ≤ j−2} Δ_i f.
pub fn s_block(f: &Field, j: i32) -> Result<Field> {
    let jm = j_max(f.l);
    if j < 1 || j > jm {
        return Err(ReconError::OutOfRange(format!("S_{j} outside [1, {jm}]")));
    }
    Ok(f.spectrum().apply_real(|xi| (-1..=j - 2).map(|i| rho(i, jm, freq_norm(xi))).sum()))
}

/// Running low-pass sums S_1 f, …, S_{jmax} f built from the blocks.
fn low_passes(blocks: &[Field]) -> Vec<Field> {
    let jm = blocks.len() as i32 - 2;
    let mut out = Vec::with_capacity(jm.max(0) as usize);
    let mut acc = Field::zeros(blocks[0].d, blocks[0].l);
    for j in 1..=jm {
        acc.axpy(1.0, &blocks[(j - 2 + 1) as usize]).unwrap();
        out.push(acc.clone());
    }
    out
}

/// Bony paraproduct P_f g = Σ_{j≥1} S_j f · Δ_j g.
pub fn para(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    let bf = lp_blocks(f);
    let bg = lp_blocks(g);
    Ok(para_from_blocks(&bf, &bg))
}

pub(crate) fn para_from_blocks(bf: &[Field], bg: &[Field]) -> Field {
    let lows = low_passes(bf);
    let mut out = Field::zeros(bf[0].d, bf[0].l);
    for (j, s) in lows.iter().enumerate() {
        let dg = &bg[j + 2];
        for ((o, a), b) in out.values.iter_mut().zip(&s.values).zip(&dg.values) {
            *o += a * b;
        }
    }
    out
}

/// Resonant term ⊖(f,g) = Σ_{|i−j|≤1} Δ_i f · Δ_j g.
pub fn resonant(f: &Field, g: &Field) -> Result<Field> {
    f.same_grid(g)?;
    let bf = lp_blocks(f);
    let bg = lp_blocks(g);
    let nb = bf.len();
    let mut out = Field::zeros(f.d, f.l);
    for i in 0..nb {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(nb - 1);
        for j in lo..=hi {
            for ((o, a), b) in out.values.iter_mut().zip(&bf[i].values).zip(&bg[j].values) {
                *o += a * b;
            }
        }
    }
    Ok(out)
}

/// 𝒮f = f − P_1 f, which keeps the two lowest blocks.
pub fn smooth_part(f: &Field) -> Field {
    let jm = j_max(f.l);
    f.spectrum().apply_real(|xi| {
        let r = freq_norm(xi);
        rho(-1, jm, r) + if jm >= 0 { rho(0, jm, r) } else { 0.0 }
    })
}

/// 𝖱°(a,b,c) = P_a(P_b c) − P_{ab} c.
pub fn corrector(a: &Field, b: &Field, c: &Field) -> Result<Field> {
    let pbc = para(b, c)?;
    let first = para(a, &pbc)?;
    let ab = a.zip(b, |x, y| x * y)?;
    let second = para(&ab, c)?;
    Ok(&first - &second)
}

/// Sup norms m_i = ‖Δ_i f‖∞ for i = −1..jmax.
pub fn spectral_profile(f: &Field) -> Vec<(i32, f64)> {
    lp_blocks(f).iter().enumerate().map(|(k, b)| (k as i32 - 1, b.sup_norm())).collect()
}

/// ‖f‖_{𝒞^α} = max_i 2^{αi} m_i over the resolved blocks.
pub fn besov_norm(f: &Field, alpha: f64) -> f64 {
    spectral_profile(f)
        .into_iter()
        .map(|(i, m)| 2f64.powf(alpha * i as f64) * m)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegularityFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub blocks: Vec<i32>,
}

/// Default regression window [3, jmax − 2].
pub fn default_window(l: u32) -> (i32, i32) {
    (3, j_max(l) - 2)
}

/// Relative floor below which a block is considered empty.
pub const BLOCK_FLOOR: f64 = 1e-13;

/// Least-squares slope of −log₂ m_i against i over the window.
pub fn estimate_regularity(f: &Field, window: (i32, i32)) -> Result<RegularityFit> {
    let profile = spectral_profile(f);
    fit_profile(&profile, window, f.sup_norm(), j_max(f.l))
}

pub fn fit_profile(profile: &[(i32, f64)], window: (i32, i32), sup: f64, jm: i32) -> Result<RegularityFit> {
    let (lo, hi) = window;
    if lo < 2 || hi > jm - 1 || hi - lo + 1 < 4 {
        return Err(ReconError::InvalidArgument(format!(
            "window [{lo}, {hi}] must lie in [2, {}] and contain at least 4 blocks",
            jm - 1
        )));
    }
    let floor = BLOCK_FLOOR * sup.max(1.0);
    let pts: Vec<(f64, f64, i32)> = profile
        .iter()
        .filter(|(i, m)| *i >= lo && *i <= hi && *m >= floor)
        .map(|(i, m)| (*i as f64, -m.log2(), *i))
        .collect();
    if pts.len() < 2 {
        return Err(ReconError::InsufficientData(format!(
            "{} block(s) above the floor in window [{lo}, {hi}]",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(RegularityFit { slope, intercept, residual, blocks: pts.iter().map(|p| p.2).collect() })
}

/// Regularity check used throughout: a field that is smoother than the window can
/// resolve (every block below the floor) counts as passing.
pub fn regularity_at_least(f: &Field, target: f64, tol: f64, window: (i32, i32)) -> Result<(bool, Option<f64>)> {
    match estimate_regularity(f, window) {
        Ok(fit) => Ok((fit.slope >= target - tol, Some(fit.slope))),
        Err(ReconError::InsufficientData(_)) => Ok((true, None)),
        Err(e) => Err(e),
    }
}
