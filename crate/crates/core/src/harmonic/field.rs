use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{ReconError, Result};

type PlanKey = (usize, bool);

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static REGISTRY: OnceLock<Mutex<(FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>)>> = OnceLock::new();
    let reg = REGISTRY.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = reg.lock().unwrap();
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, inverse))
        .or_insert_with(|| if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) })
        .clone()
}

/// Unnormalized in-place transform along every axis of a row-major N^d array.
pub(crate) fn fft_nd(data: &mut [Complex64], d: usize, n: usize, inverse: bool) {
    let p = plan(n, inverse);
    if d == 1 {
        p.process(data);
        return;
    }
    for row in data.chunks_mut(n) {
        p.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = data[i * n + j];
        }
        p.process(&mut col);
        for i in 0..n {
            data[i * n + j] = col[i];
        }
    }
}

/// Integer frequency of FFT index m on an N-point axis; the Nyquist index maps to −N/2.
pub fn freq(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Real function sampled on the uniform grid {j/N}^d of the unit torus, N = 2^L.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub d: usize,
    pub l: u32,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(d: usize, l: u32) -> Field {
        Field { d, l, values: vec![0.0; 1usize << (l as usize * d)] }
    }

    pub fn constant(d: usize, l: u32, c: f64) -> Field {
        Field { d, l, values: vec![c; 1usize << (l as usize * d)] }
    }

    pub fn new(d: usize, l: u32, values: Vec<f64>) -> Result<Field> {
        if !(1..=2).contains(&d) {
            return Err(ReconError::InvalidParameter(format!("dimension {d} not supported")));
        }
        if values.len() != 1usize << (l as usize * d) {
            return Err(ReconError::GridMismatch(format!(
                "expected {} values for d={d}, L={l}, got {}",
                1usize << (l as usize * d),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ReconError::InvalidArgument("field values must be finite".into()));
        }
        Ok(Field { d, l, values })
    }

    /// Sample a function of the point coordinates in [0,1)^d.
    pub fn from_fn(d: usize, l: u32, f: impl Fn(&[f64]) -> f64) -> Field {
        let n = 1usize << l;
        let h = 1.0 / n as f64;
        let mut values = Vec::with_capacity(n.pow(d as u32));
        if d == 1 {
            for i in 0..n {
                values.push(f(&[i as f64 * h]));
            }
        } else {
            for i in 0..n {
                for j in 0..n {
                    values.push(f(&[i as f64 * h, j as f64 * h]));
                }
            }
        }
        Field { d, l, values }
    }

    pub fn n(&self) -> usize {
        1usize << self.l
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, o: &Field) -> Result<()> {
        if self.d != o.d || self.l != o.l {
            return Err(ReconError::GridMismatch(format!(
                "(d={}, L={}) vs (d={}, L={})",
                self.d, self.l, o.d, o.l
            )));
        }
        Ok(())
    }

    /// Flat index of a grid point given by integer coordinates (wrapped).
    pub fn index(&self, p: &[i64]) -> usize {
        let n = self.n() as i64;
        let w = |v: i64| v.rem_euclid(n) as usize;
        if self.d == 1 {
            w(p[0])
        } else {
            w(p[0]) * self.n() + w(p[1])
        }
    }

    pub fn coords_of(&self, idx: usize) -> [i64; 2] {
        if self.d == 1 {
            [idx as i64, 0]
        } else {
            [(idx / self.n()) as i64, (idx % self.n()) as i64]
        }
    }

    pub fn at(&self, p: &[i64]) -> f64 {
        self.values[self.index(p)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { d: self.d, l: self.l, values: self.values.iter().map(|v| f(*v)).collect() }
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn zip(&self, o: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(o)?;
        Ok(Field {
            d: self.d,
            l: self.l,
            values: self.values.iter().zip(&o.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn axpy(&mut self, c: f64, o: &Field) -> Result<()> {
        self.same_grid(o)?;
        for (a, b) in self.values.iter_mut().zip(&o.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// Sup of the difference, relative to max(1, ‖self‖∞, ‖o‖∞) when `relative` is set.
    pub fn distance(&self, o: &Field, relative: bool) -> Result<f64> {
        let d = self.zip(o, |a, b| a - b)?.sup_norm();
        if relative {
            Ok(d / 1f64.max(self.sup_norm()).max(o.sup_norm()))
        } else {
            Ok(d)
        }
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut data: Vec<Complex64> = self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft_nd(&mut data, self.d, self.n(), false);
        Spectrum { d: self.d, l: self.l, data }
    }

    /// Translate so that the value at p is moved to the origin: out(y) = f(y + p).
    pub fn shifted(&self, p: &[i64]) -> Field {
        let mut out = self.clone();
        for idx in 0..self.len() {
            let c = self.coords_of(idx);
            out.values[idx] = self.at(&[c[0] + p[0], c[1] + p.get(1).copied().unwrap_or(0)]);
        }
        out
    }

    pub fn derivative(&self, k: [u8; 2]) -> Field {
        if k == [0, 0] {
            return self.clone();
        }
        let n = self.n();
        self.spectrum().apply(|xi| {
            let mut m = Complex64::new(1.0, 0.0);
            for axis in 0..self.d {
                let order = k[axis] as i32;
                if order == 0 {
                    continue;
                }
                if order % 2 == 1 && xi[axis] == -(n as i64) / 2 {
                    return Complex64::new(0.0, 0.0);
                }
                m *= Complex64::new(0.0, 2.0 * PI * xi[axis] as f64).powi(order);
            }
            m
        })
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, o: &Field) -> Field {
        self.zip(o, |a, b| a + b).expect("grid mismatch in field addition")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, o: &Field) -> Field {
        self.zip(o, |a, b| a - b).expect("grid mismatch in field subtraction")
    }
}

impl Mul for &Field {
    type Output = Field;
    fn mul(self, o: &Field) -> Field {
        self.zip(o, |a, b| a * b).expect("grid mismatch in field product")
    }
}

/// Unnormalized discrete Fourier coefficients of a field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub d: usize,
    pub l: u32,
    pub data: Vec<Complex64>,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        1usize << self.l
    }

    /// Integer frequency vector of each flat index.
    pub fn frequencies(&self) -> Vec<[i64; 2]> {
        let n = self.n();
        (0..self.data.len())
            .map(|idx| {
                if self.d == 1 {
                    [freq(idx, n), 0]
                } else {
                    [freq(idx / n, n), freq(idx % n, n)]
                }
            })
            .collect()
    }

    pub fn apply(&self, m: impl Fn([i64; 2]) -> Complex64) -> Field {
        let freqs = self.frequencies();
        let mut data: Vec<Complex64> = self.data.iter().zip(&freqs).map(|(c, xi)| c * m(*xi)).collect();
        self.to_field(&mut data)
    }

    pub fn apply_real(&self, m: impl Fn([i64; 2]) -> f64) -> Field {
        self.apply(|xi| Complex64::new(m(xi), 0.0))
    }

    fn to_field(&self, data: &mut [Complex64]) -> Field {
        let n = self.n();
        fft_nd(data, self.d, n, true);
        let norm = 1.0 / data.len() as f64;
        Field { d: self.d, l: self.l, values: data.iter().map(|c| c.re * norm).collect() }
    }
}

pub fn freq_norm(xi: [i64; 2]) -> f64 {
    ((xi[0] * xi[0] + xi[1] * xi[1]) as f64).sqrt()
}

/// Random-phase field with spectral amplitude (1+|ξ|)^{−α−d/2} times a lognormal factor,
/// whose Littlewood-Paley blocks decay like 2^{−αi}. The zero mode is removed.
pub fn synthetic_field(d: usize, l: u32, alpha: f64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << l;
    let total = n.pow(d as u32);
    let mut data = vec![Complex64::new(0.0, 0.0); total];
    for (idx, slot) in data.iter_mut().enumerate() {
        let xi = if d == 1 { [freq(idx, n), 0] } else { [freq(idx / n, n), freq(idx % n, n)] };
        let g: f64 = rng.sample(StandardNormal);
        let phase: f64 = rng.random::<f64>() * 2.0 * PI;
        if xi == [0, 0] {
            continue;
        }
        let amp = (1.0 + freq_norm(xi)).powf(-alpha - d as f64 / 2.0) * (0.5 * g).exp();
        *slot = Complex64::from_polar(amp, phase);
    }
    fft_nd(&mut data, d, n, true);
    Field { d, l, values: data.iter().map(|c| c.re).collect() }
}

/// Trigonometric polynomial Σ a_m cos(2π m·x) + b_m sin(2π m·x) with seeded coefficients
/// and frequencies |m_i| ≤ degree.
pub fn random_trig(d: usize, l: u32, degree: i64, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    let range2 = if d == 2 { -degree..=degree } else { 0..=0 };
    for m0 in 0..=degree {
        for m1 in range2.clone() {
            let a: f64 = rng.random::<f64>() * 2.0 - 1.0;
            let b: f64 = rng.random::<f64>() * 2.0 - 1.0;
            terms.push((m0 as f64, m1 as f64, a, b));
        }
    }
    Field::from_fn(d, l, |x| {
        let x1 = if d == 2 { x[1] } else { 0.0 };
        terms
            .iter()
            .map(|(m0, m1, a, b)| {
                let t = 2.0 * PI * (m0 * x[0] + m1 * x1);
                a * t.cos() + b * t.sin()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_round_trip() {
        let f = random_trig(2, 5, 3, 7);
        let g = f.spectrum().apply_real(|_| 1.0);
        assert!(f.distance(&g, false).unwrap() < 1e-12);
    }

    #[test]
    fn derivative_of_sine() {
        let f = Field::from_fn(1, 8, |x| (2.0 * PI * 3.0 * x[0]).sin());
        let df = f.derivative([1, 0]);
        let exact = Field::from_fn(1, 8, |x| 6.0 * PI * (2.0 * PI * 3.0 * x[0]).cos());
        assert!(df.distance(&exact, false).unwrap() < 1e-9);
    }

    #[test]
    fn shift_moves_point_to_origin() {
        let f = Field::from_fn(2, 3, |x| x[0] + 10.0 * x[1]);
        let s = f.shifted(&[2, 5]);
        assert_eq!(s.at(&[0, 0]), f.at(&[2, 5]));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = Field::zeros(1, 4);
        let b = Field::zeros(1, 5);
        assert!(matches!(a.zip(&b, |x, y| x + y), Err(ReconError::GridMismatch(_))));
    }
}
