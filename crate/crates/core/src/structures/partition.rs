use crate::algebra::symbol::Multi;
use crate::error::{ReconError, Result};
use crate::harmonic::Field;

/// Chart half-width: φ_e vanishes once some coordinate is 3/16 away from the chart centre.
pub const HALF_WIDTH: f64 = 3.0 / 16.0;
/// Coordinates x_e^i turn around smoothly between HALF_WIDTH and this radius.
pub const OUTER: f64 = 0.25;
const QUAD_STEPS: usize = 256;
const TINY: f64 = 1e-300;

/// Signed distance from t to c on the circle, in (−1/2, 1/2].
pub fn wrap(t: f64, c: f64) -> f64 {
    let mut s = (t - c).rem_euclid(1.0);
    if s > 0.5 {
        s -= 1.0;
    }
    s
}

/// Sharpness of the flat transition profile: slope stays below 1.6 on the unit interval.
const FLATNESS: f64 = 0.5;

/// Radius of the region where a single chart carries the whole partition.
const CORE: f64 = 1.0 / 16.0;

/// Share of chart 0 at signed offset s: 1 on |s| ≤ CORE, 0 from HALF_WIDTH on, with a
/// transition across the whole overlap [CORE, HALF_WIDTH] that vanishes to all orders at both ends.
fn axis_share(s: f64) -> f64 {
    let t = (s.abs() - CORE) / (HALF_WIDTH - CORE);
    let h = |v: f64| if v > 0.0 { (-FLATNESS / v).exp() } else { 0.0 };
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - t);
        let v = a / (a + h(t));
        if v < TINY {
            0.0
        } else {
            v
        }
    }
}

fn smooth_step(t: f64) -> f64 {
    // 1 for t ≤ 0, 0 for t ≥ 1
    let h = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = h(1.0 - t);
        a / (a + h(t))
    }
}

fn turn(t: f64) -> f64 {
    1.0 - smooth_step((t - HALF_WIDTH) / (OUTER - HALF_WIDTH))
}

/// Periodic coordinate on the circle: equal to s on |s| ≤ HALF_WIDTH, with derivative
/// 1 − S(s)/∫S where S rises from 0 to 1 between HALF_WIDTH and OUTER.
fn coordinate(s: f64) -> f64 {
    let t = s.abs();
    if t <= HALF_WIDTH {
        return s;
    }
    let mass = 1.0 - HALF_WIDTH - OUTER;
    let ramp = if t <= OUTER {
        // composite Simpson on [HALF_WIDTH, t]
        let h = (t - HALF_WIDTH) / QUAD_STEPS as f64;
        let mut acc = turn(HALF_WIDTH) + turn(t);
        for k in 1..QUAD_STEPS {
            acc += turn(HALF_WIDTH + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    } else {
        0.5 * (OUTER - HALF_WIDTH) + (t - OUTER)
    };
    s.signum() * (t - ramp / mass)
}

/// Charts e ∈ {0,1,2,3}^d /4, encoded as e = c₀ + 4c₁.
pub fn chart_center(e: u16, d: usize) -> [f64; 2] {
    let mut c = [0.0; 2];
    for (i, slot) in c.iter_mut().enumerate().take(d) {
        *slot = ((e >> (2 * i)) & 3) as f64 / 4.0;
    }
    c
}

/// Partition of unity subordinate to the charts, with local coordinate fields.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub d: usize,
    pub l: u32,
    pub phi: Vec<Field>,
    /// x[e][i] is the coordinate field x_e^i.
    pub x: Vec<Vec<Field>>,
}

impl PartitionOfUnity {
    pub fn n_charts(&self) -> u16 {
        self.phi.len() as u16
    }

    /// x_e^k = Π_i (x_e^i)^{k_i}.
    pub fn monomial(&self, e: u16, k: Multi) -> Field {
        let mut out = Field::constant(self.d, self.l, 1.0);
        for i in 0..self.d {
            for _ in 0..k.0[i] {
                out = &out * &self.x[e as usize][i];
            }
        }
        out
    }

    /// Whether the grid point (given by integer coordinates) lies in the closed chart core.
    pub fn in_chart(&self, e: u16, p: &[i64]) -> bool {
        let n = (1u64 << self.l) as f64;
        let c = chart_center(e, self.d);
        (0..self.d).all(|i| wrap(p[i] as f64 / n, c[i]).abs() < HALF_WIDTH)
    }
}

/// Build φ_e and x_e^i on the grid. Requires N ≥ 64 so the bumps are resolved.
pub fn partition_of_unity(d: usize, l: u32) -> Result<PartitionOfUnity> {
    if !(1..=2).contains(&d) {
        return Err(ReconError::InvalidParameter(format!("dimension {d} not supported")));
    }
    if l < 6 {
        return Err(ReconError::InvalidParameter(format!(
            "resolution N = {} is too coarse for the chart bumps (need N ≥ 64)",
            1u64 << l
        )));
    }
    let axis_phi = |c: usize, t: f64| -> f64 { axis_share(wrap(t, c as f64 / 4.0)) };
    let nc = 4u16.pow(d as u32);
    let mut phi = Vec::with_capacity(nc as usize);
    let mut x = Vec::with_capacity(nc as usize);
    for e in 0..nc {
        let c = chart_center(e, d);
        let idx: Vec<usize> = (0..d).map(|i| ((e >> (2 * i)) & 3) as usize).collect();
        phi.push(Field::from_fn(d, l, |p| (0..d).map(|i| axis_phi(idx[i], p[i])).product()));
        let n = 1usize << l;
        let tables: Vec<Vec<f64>> = (0..d).map(|i| (0..n).map(|k| coordinate(wrap(k as f64 / n as f64, c[i]))).collect()).collect();
        x.push(
            (0..d)
                .map(|i| Field::from_fn(d, l, |p| tables[i][((p[i] * n as f64).round() as usize) % n]))
                .collect(),
        );
    }
    Ok(PartitionOfUnity { d, l, phi, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sums_to_one() {
        for d in [1, 2] {
            let p = partition_of_unity(d, 6).unwrap();
            let mut s = Field::zeros(d, 6);
            for f in &p.phi {
                assert!(f.values.iter().all(|v| *v >= 0.0 && *v <= 1.0));
                s.axpy(1.0, f).unwrap();
            }
            assert!(s.values.iter().all(|v| (v - 1.0).abs() <= 1e-12));
        }
    }

    #[test]
    fn coordinates_are_affine_in_chart() {
        let p = partition_of_unity(1, 8).unwrap();
        let n = 256i64;
        for e in 0..4u16 {
            let c = (chart_center(e, 1)[0] * n as f64) as i64;
            for a in -40..40 {
                for b in -40..40 {
                    let (ya, yb) = (c + a, c + b);
                    if !p.in_chart(e, &[ya]) || !p.in_chart(e, &[yb]) {
                        continue;
                    }
                    let dx = p.x[e as usize][0].at(&[yb]) - p.x[e as usize][0].at(&[ya]);
                    assert!((dx - (b - a) as f64 / n as f64).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn coordinates_are_periodic_and_gentle() {
        let p = partition_of_unity(1, 10).unwrap();
        let n = 1024i64;
        for e in 0..4u16 {
            let f = &p.x[e as usize][0];
            let mut worst = 0.0f64;
            for i in 0..n {
                let slope = (f.at(&[(i + 1) % n]) - f.at(&[i])) * n as f64;
                worst = worst.max(slope.abs());
            }
            assert!(worst < 2.0, "chart {e}: slope {worst}");
            assert!(f.sup_norm() <= 0.25);
        }
        assert!(coordinate(0.5).abs() < 1e-12);
        assert!((coordinate(-0.3) + coordinate(0.3)).abs() < 1e-15);
    }

    #[test]
    fn vanishes_outside_chart() {
        let p = partition_of_unity(1, 8).unwrap();
        for e in 0..4u16 {
            for i in 0..256i64 {
                if !p.in_chart(e, &[i]) {
                    assert_eq!(p.phi[e as usize].at(&[i]), 0.0);
                }
            }
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(partition_of_unity(1, 5), Err(ReconError::InvalidParameter(_))));
    }
}
