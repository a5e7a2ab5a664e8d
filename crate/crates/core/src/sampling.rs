//! Sampled essential sup/inf of continuous functions on a window.

use serde::Serialize;

use crate::error::Result;

pub const DEFAULT_SAMPLES: usize = 10_000;
const REFINE_CANDIDATES: usize = 3;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Goal {
    Min,
    Max,
}

impl Goal {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Goal::Min => a < b,
            Goal::Max => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub arg: f64,
    /// The extremum sits on the right edge of the sampled window.
    pub at_window_edge: bool,
}

/// `n + 1` equispaced points from `lo` to `hi` inclusive.
pub fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
        .collect()
}

/// Points `k - j t` (j = 0..=n) and their immediate neighbours that fall in
/// `[0, x_max]`, so that sampling sees both sides of each kink of φ as it
/// is translated by multiples of t.
pub fn kink_points(kinks: &[f64], t: f64, n: usize, x_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for &k in kinks {
        for j in 0..=n {
            let c = k - j as f64 * t;
            for p in [c - 1e-9, c, c + 1e-9] {
                if (0.0..=x_max).contains(&p) {
                    out.push(p);
                }
            }
        }
    }
    out
}

/// Extremum of `f` over `[lo, hi]` from 10⁴ uniform samples plus `extra`
/// points, refined by golden-section search around the best few local
/// candidates. Refinement only ever improves on the sampled value.
pub fn extremum<F>(f: F, lo: f64, hi: f64, goal: Goal, extra: &[f64]) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    extremum_with(f, lo, hi, goal, extra, DEFAULT_SAMPLES)
}

pub fn extremum_with<F>(f: F, lo: f64, hi: f64, goal: Goal, extra: &[f64], samples: usize) -> Result<Extremum>
where
    F: Fn(f64) -> Result<f64>,
{
    let grid = uniform(lo, hi, samples);
    let values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;

    let mut best = (values[0], grid[0]);
    for (&x, &v) in grid.iter().zip(&values) {
        if goal.better(v, best.0) {
            best = (v, x);
        }
    }
    for &x in extra {
        if x >= lo && x <= hi {
            let v = f(x)?;
            if goal.better(v, best.0) {
                best = (v, x);
            }
        }
    }

    // interior local extrema, best first
    let mut candidates: Vec<usize> = (1..grid.len().saturating_sub(1))
        .filter(|&i| !goal.better(values[i - 1], values[i]) && !goal.better(values[i + 1], values[i]))
        .collect();
    candidates.sort_by(|&a, &b| {
        let (va, vb) = (values[a], values[b]);
        if goal.better(va, vb) {
            std::cmp::Ordering::Less
        } else if goal.better(vb, va) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    for &i in candidates.iter().take(REFINE_CANDIDATES) {
        let (x, v) = golden(&f, grid[i - 1], grid[i + 1], goal)?;
        if goal.better(v, best.0) {
            best = (v, x);
        }
    }

    let step = (hi - lo) / samples.max(1) as f64;
    Ok(Extremum {
        value: best.0,
        arg: best.1,
        at_window_edge: hi > lo && best.1 >= hi - 0.5 * step,
    })
}

/// Golden-section search for an extremum of a unimodal function on `[a, b]`.
pub fn golden<F>(f: &F, mut a: f64, mut b: f64, goal: Goal) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if goal.better(fc, fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if goal.better(fc, fd) { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_includes_endpoints_exactly() {
        let g = uniform(0.0, 10.0, 10_000);
        assert_eq!(g.len(), 10_001);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[5_000], 5.0);
        assert_eq!(g[10_000], 10.0);
    }

    #[test]
    fn refinement_finds_interior_peak_between_samples() {
        let peak = 3.000_123_4;
        let f = |x: f64| Ok(-(x - peak) * (x - peak));
        let e = extremum_with(f, 0.0, 10.0, Goal::Max, &[], 100).unwrap();
        assert!((e.arg - peak).abs() < 1e-7);
        assert!(!e.at_window_edge);
    }

    #[test]
    fn edge_extrema_are_flagged() {
        let e = extremum(|x| Ok(1.0 / (x + 1.0)), 0.0, 64.0, Goal::Min, &[]).unwrap();
        assert_eq!(e.arg, 64.0);
        assert!(e.at_window_edge);
        let e = extremum(|x| Ok(1.0 / (x + 1.0)), 0.0, 64.0, Goal::Max, &[]).unwrap();
        assert_eq!(e.arg, 0.0);
        assert!(!e.at_window_edge);
    }

    #[test]
    fn refinement_is_monotone() {
        let f = |x: f64| Ok((7.0 * x).sin() + 0.1 * x);
        let coarse = extremum_with(f, 0.0, 5.0, Goal::Max, &[], 50).unwrap();
        let raw = uniform(0.0, 5.0, 50).into_iter().map(|x| f(x).unwrap()).fold(f64::MIN, f64::max);
        assert!(coarse.value >= raw);
    }
}
