use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::algebra::symbol::{parse_q, q_to_f64, Multi};
use crate::error::{ReconError, Result};
use crate::harmonic::{Field, TwoVarFunction};

/// K = Σ_{n=0}^{n_max} K_n with K_n(x) = 2^{n(d−θ−ε)} χ_K(2^n|x|), periodized.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelFamily {
    pub theta: f64,
    pub eps: f64,
    pub n_max: Option<u32>,
}

#[derive(Serialize, Deserialize)]
struct KernelJson {
    theta: String,
    eps: String,
    n_max: Option<u32>,
}

impl Default for KernelFamily {
    fn default() -> Self {
        KernelFamily { theta: 1.0, eps: 0.1, n_max: None }
    }
}

impl KernelFamily {
    pub fn new(theta: f64, eps: f64, n_max: Option<u32>) -> Result<Self> {
        if theta <= 0.0 || !theta.is_finite() {
            return Err(ReconError::InvalidParameter(format!("θ = {theta} must be positive")));
        }
        if eps < 0.0 || !eps.is_finite() {
            return Err(ReconError::InvalidParameter(format!("ε = {eps} must be non-negative")));
        }
        Ok(KernelFamily { theta, eps, n_max })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let k: KernelJson = serde_json::from_str(text)?;
        Self::new(q_to_f64(&parse_q(&k.theta)?), q_to_f64(&parse_q(&k.eps)?), k.n_max)
    }

    pub fn to_json(&self) -> String {
        let k = KernelJson { theta: format!("{}", self.theta), eps: format!("{}", self.eps), n_max: self.n_max };
        serde_json::to_string(&k).expect("kernel serializes")
    }

    pub fn levels(&self, l: u32) -> u32 {
        self.n_max.unwrap_or(l)
    }

    pub fn on_grid(&self, d: usize, l: u32) -> GridKernel {
        GridKernel::new(self.clone(), d, l)
    }
}

/// Radial bump exp(1 − 1/(1−r²)) on the unit ball, equal to 1 at the origin.
pub fn chi_k(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// The kernel sampled on one grid, with its Fourier multiplier.
#[derive(Clone, Debug)]
pub struct GridKernel {
    pub family: KernelFamily,
    pub d: usize,
    pub l: u32,
    hat: Vec<f64>,
}

fn images(d: usize) -> Vec<[f64; 2]> {
    let r = [-1.0, 0.0, 1.0];
    if d == 1 {
        r.iter().map(|a| [*a, 0.0]).collect()
    } else {
        r.iter().flat_map(|a| r.iter().map(move |b| [*a, *b])).collect()
    }
}

fn multiplier_index(xi: [i64; 2], d: usize, n: usize) -> usize {
    let w = |t: i64| t.rem_euclid(n as i64) as usize;
    if d == 1 {
        w(xi[0])
    } else {
        w(xi[0]) * n + w(xi[1])
    }
}

fn deriv_factor(xi: [i64; 2], a: Multi, d: usize, n: usize) -> Complex64 {
    let mut m = Complex64::new(1.0, 0.0);
    for axis in 0..d {
        let order = a.0[axis] as i32;
        if order == 0 {
            continue;
        }
        if order % 2 == 1 && xi[axis] == -(n as i64) / 2 {
            return Complex64::new(0.0, 0.0);
        }
        m *= Complex64::new(0.0, 2.0 * PI * xi[axis] as f64).powi(order);
    }
    m
}

impl GridKernel {
    pub fn new(family: KernelFamily, d: usize, l: u32) -> GridKernel {
        let mut total = Field::zeros(d, l);
        for n in 0..=family.levels(l) {
            total.axpy(1.0, &level_field(&family, d, l, n)).unwrap();
        }
        let h = 1.0 / (1u64 << (l as usize * d)) as f64;
        let hat = total.spectrum().data.iter().map(|c| c.re * h).collect();
        GridKernel { family, d, l, hat }
    }

    pub fn n(&self) -> usize {
        1usize << self.l
    }

    /// ∫K, the zero mode of the multiplier.
    pub fn integral(&self) -> f64 {
        self.hat[0]
    }

    /// Fourier multiplier K̂(ξ) of the grid convolution.
    pub fn multiplier(&self, xi: [i64; 2]) -> f64 {
        self.hat[multiplier_index(xi, self.d, self.n())]
    }

    pub fn level(&self, n: u32) -> Field {
        level_field(&self.family, self.d, self.l, n)
    }

    /// (∂^a K) ⋆ b.
    pub fn conv_deriv(&self, b: &Field, a: Multi) -> Result<Field> {
        if b.d != self.d || b.l != self.l {
            return Err(ReconError::GridMismatch("kernel and field live on different grids".into()));
        }
        let n = self.n();
        Ok(b.spectrum().apply(|xi| self.multiplier(xi) * deriv_factor(xi, a, self.d, n)))
    }

    /// (∂^a K_n) ⋆ b for a single level.
    pub fn conv_level(&self, b: &Field, lvl: u32, a: Multi) -> Result<Field> {
        let kn = self.level(lvl);
        let h = 1.0 / kn.len() as f64;
        let hat: Vec<f64> = kn.spectrum().data.iter().map(|c| c.re * h).collect();
        let n = self.n();
        Ok(b.spectrum().apply(|xi| hat[multiplier_index(xi, self.d, n)] * deriv_factor(xi, a, self.d, n)))
    }
}

pub fn level_field(family: &KernelFamily, d: usize, l: u32, n: u32) -> Field {
    let amp = 2f64.powf(n as f64 * (d as f64 - family.theta - family.eps));
    let s = 2f64.powi(n as i32);
    let imgs = images(d);
    Field::from_fn(d, l, |p| {
        imgs.iter()
            .map(|m| {
                let r2: f64 = (0..d).map(|i| (p[i] - m[i]).powi(2)).sum();
                chi_k(s * r2.sqrt())
            })
            .sum::<f64>()
            * amp
    })
}

/// K ⋆ ζ.
pub fn conv_full(kernel: &GridKernel, zeta: &Field) -> Result<Field> {
    kernel.conv_deriv(zeta, Multi::ZERO)
}

/// x ↦ 𝐈_k^e(ζ_x)(x) = Σ_n ⟨ζ_x, ∂_x^k(φ_e(x)K_n(x,·))⟩ for ζ_x(y) = Σ a_t(x)b_t(y),
/// split by Leibniz into Σ_a C(k,a) ∂^aφ_e(x)·(∂^{k−a}K ⋆ b_t)(x). With φ = None the cut-off is 1.
pub fn integrate_k(
    kernel: &GridKernel,
    family: &TwoVarFunction,
    k: Multi,
    phi: Option<&Field>,
    alpha: f64,
) -> Result<Field> {
    let (d, l) = (kernel.d, kernel.l);
    if k.order() as f64 >= alpha + kernel.family.theta {
        return Err(ReconError::DivergentSum(format!(
            "|k| = {} is not below α + θ = {}",
            k.order(),
            alpha + kernel.family.theta
        )));
    }
    let splits: Vec<(Multi, f64, Option<Field>)> = k
        .below(d)
        .into_iter()
        .map(|a| {
            let c = k.binom(&a) as f64;
            let dphi = phi.map(|p| p.derivative(a.0));
            (a, c, dphi)
        })
        .filter(|(a, _, dphi)| dphi.is_some() || a.is_zero())
        .collect();
    let mut out = Field::zeros(d, l);
    for (a_t, b_t) in &family.terms {
        for (a, c, dphi) in &splits {
            let rest = k.sub(a).expect("a ≤ k");
            let kb = kernel.conv_deriv(b_t, rest)?;
            match dphi {
                Some(p) => {
                    for (((o, x), y), z) in out.values.iter_mut().zip(&a_t.values).zip(&p.values).zip(&kb.values) {
                        *o += c * x * y * z;
                    }
                }
                None => {
                    for ((o, x), z) in out.values.iter_mut().zip(&a_t.values).zip(&kb.values) {
                        *o += c * x * z;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// sup_x |Σ_t a_t(x)·(∂^kK_n ⋆ b_t)(x)| for each level n (cut-off taken as 1).
pub fn integrate_k_levels(kernel: &GridKernel, family: &TwoVarFunction, k: Multi) -> Result<Vec<(u32, f64)>> {
    let mut out = Vec::new();
    for n in 0..=kernel.family.levels(kernel.l) {
        let mut acc = Field::zeros(kernel.d, kernel.l);
        for (a_t, b_t) in &family.terms {
            let kb = kernel.conv_level(b_t, n, k)?;
            acc = &acc + &(a_t * &kb);
        }
        out.push((n, acc.sup_norm()));
    }
    Ok(out)
}

/// max-grid |∂^k K_n| against the envelope 2^{n(d−θ−ε+|k|)}, per level.
pub fn kernel_bound_audit(kernel: &GridKernel, max_order: u32) -> Vec<(u32, Multi, f64)> {
    let mut out = Vec::new();
    let d = kernel.d;
    for n in 0..=kernel.family.levels(kernel.l) {
        let kn = kernel.level(n);
        for k in Multi::all_up_to(d, max_order) {
            let env = 2f64.powf(n as f64 * (d as f64 - kernel.family.theta - kernel.family.eps + k.order() as f64));
            out.push((n, k, kn.derivative(k.0).sup_norm() / env));
        }
    }
    out
}
