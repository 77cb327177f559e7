use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stratified base points: one per cell of a 64-cell (d = 1) or 8×8 (d = 2) partition of the torus.
pub fn base_points(d: usize, l: u32, count: usize, seed: u64) -> Vec<usize> {
    let n = 1usize << l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match d {
        1 => {
            let cells = count.min(n);
            (0..cells)
                .map(|c| {
                    let lo = c * n / cells;
                    let hi = ((c + 1) * n / cells).max(lo + 1);
                    rng.random_range(lo..hi)
                })
                .collect()
        }
        _ => {
            let side = ((count as f64).sqrt().ceil() as usize).clamp(1, n);
            let mut out = Vec::with_capacity(side * side);
            for a in 0..side {
                for b in 0..side {
                    let i = rng.random_range(a * n / side..((a + 1) * n / side).max(a * n / side + 1));
                    let j = rng.random_range(b * n / side..((b + 1) * n / side).max(b * n / side + 1));
                    out.push(i * n + j);
                }
            }
            out
        }
    }
}

/// Flat index of x + offset on the periodic grid.
pub fn offset_index(d: usize, l: u32, x: usize, off: [i64; 2]) -> usize {
    let n = 1i64 << l;
    if d == 1 {
        return (x as i64 + off[0]).rem_euclid(n) as usize;
    }
    let (i, j) = ((x as i64) / n, (x as i64) % n);
    ((i + off[0]).rem_euclid(n) * n + (j + off[1]).rem_euclid(n)) as usize
}

/// Wrapped Euclidean distance between two grid points.
pub fn torus_distance(d: usize, l: u32, x: usize, y: usize) -> f64 {
    let n = 1i64 << l;
    let coords = |p: usize| -> [i64; 2] {
        if d == 1 {
            [p as i64, 0]
        } else {
            [p as i64 / n, p as i64 % n]
        }
    };
    let (a, b) = (coords(x), coords(y));
    let mut s = 0.0;
    for i in 0..d {
        let mut t = (a[i] - b[i]).rem_euclid(n);
        if t > n / 2 {
            t = n - t;
        }
        s += (t as f64 / n as f64).powi(2);
    }
    s.sqrt()
}

/// Pairs (y, x) with y = x ± 2^{−j} e_i, grouped by j, for j in [lo, hi].
pub fn dyadic_pairs(d: usize, l: u32, points: &[usize], lo: i32, hi: i32) -> Vec<(i32, Vec<(usize, usize)>)> {
    (lo..=hi)
        .map(|j| {
            let step = 1i64 << (l as i32 - j);
            let mut v = Vec::new();
            for &x in points {
                for axis in 0..d {
                    for sign in [-1i64, 1] {
                        let mut off = [0i64; 2];
                        off[axis] = sign * step;
                        v.push((offset_index(d, l, x, off), x));
                    }
                }
            }
            (j, v)
        })
        .collect()
}

/// Uniformly random distinct pairs.
pub fn random_pairs(d: usize, l: u32, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = 1usize << (l as usize * d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (y, x) = (rng.random_range(0..total), rng.random_range(0..total));
        if y != x {
            out.push((y, x));
        }
    }
    out
}

/// Least-squares slope of y against x.
pub fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Exponent of a dyadic sequence of sups: slope of −log₂ s_j against j, ignoring entries below `floor`.
pub fn dyadic_exponent(sups: &[(i32, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = sups
        .iter()
        .filter(|(_, s)| *s > floor)
        .map(|(j, s)| (*j as f64, -s.log2()))
        .collect();
    slope(&pts)
}

/// First separation scale used for Hölder-type fits on a grid of level `l`.
/// Coarse separations see the chart transitions before the Taylor regime, so the rate is fitted on the fine half.
pub fn fine_fit_start(l: u32) -> i32 {
    (l as i32 / 2 + 1).min(l as i32 - 6).max(2)
}

/// `dyadic_exponent` restricted to scales from `fine_fit_start(l)` on.
pub fn fine_exponent(sups: &[(i32, f64)], l: u32, floor: f64) -> Option<f64> {
    let lo = fine_fit_start(l);
    let fine: Vec<(i32, f64)> = sups.iter().copied().filter(|(j, _)| *j >= lo).collect();
    dyadic_exponent(&fine, floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stratified_points_are_spread() {
        let p = base_points(1, 10, 64, 3);
        assert_eq!(p.len(), 64);
        for (c, x) in p.iter().enumerate() {
            assert_eq!(x / 16, c);
        }
        assert_eq!(base_points(2, 6, 64, 1).len(), 64);
    }

    #[test]
    fn distance_wraps() {
        assert!((torus_distance(1, 4, 0, 15) - 1.0 / 16.0).abs() < 1e-15);
        assert!((torus_distance(2, 2, 0, 15) - (2.0f64 / 16.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exponent_of_power_law() {
        let s: Vec<(i32, f64)> = (2..8).map(|j| (j, 3.0 * 2f64.powf(-0.7 * j as f64))).collect();
        assert!((dyadic_exponent(&s, 0.0).unwrap() - 0.7).abs() < 1e-12);
    }
}
