//! Piecewise-constant elements of L²(ℝ₊).
//!
//! A [`StepFunction`] carries explicit breakpoints `0 = b_0 < b_1 < ... < b_m`
//! and one complex value per cell `[b_i, b_{i+1})`; it vanishes beyond `b_m`.
//! Inner products, norms and restrictions are computed exactly on the merged
//! breakpoint lists, so no quadrature error enters for step data.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawStep", into = "RawStep")]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawStep {
    breakpoints: Vec<f64>,
    values: Vec<Complex64>,
}

impl TryFrom<RawStep> for StepFunction {
    type Error = Error;

    fn try_from(raw: RawStep) -> Result<Self> {
        StepFunction::new(raw.breakpoints, raw.values)
    }
}

impl From<StepFunction> for RawStep {
    fn from(f: StepFunction) -> Self {
        RawStep {
            breakpoints: f.breakpoints,
            values: f.values,
        }
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Complex64>) -> Result<StepFunction> {
        if breakpoints.first() != Some(&0.0) {
            return Err(Error::InvalidStepFunction("breakpoints must start at 0".into()));
        }
        if breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidStepFunction(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidStepFunction("values must be finite".into()));
        }
        Ok(StepFunction { breakpoints, values })
    }

    pub fn zero() -> StepFunction {
        StepFunction {
            breakpoints: vec![0.0],
            values: Vec::new(),
        }
    }

    /// χ_[a,b)
    pub fn indicator(a: f64, b: f64) -> StepFunction {
        StepFunction::constant_on(a, b, Complex64::new(1.0, 0.0))
    }

    /// `value` on `[a, b)`, zero elsewhere.
    pub fn constant_on(a: f64, b: f64, value: Complex64) -> StepFunction {
        assert!(0.0 <= a && a < b, "need 0 <= a < b, got [{a}, {b})");
        if a == 0.0 {
            StepFunction {
                breakpoints: vec![0.0, b],
                values: vec![value],
            }
        } else {
            StepFunction {
                breakpoints: vec![0.0, a, b],
                values: vec![ZERO, value],
            }
        }
    }

    /// Cells of width `h` starting at 0, one per value.
    pub fn from_cells(h: f64, values: Vec<Complex64>) -> Result<StepFunction> {
        if values.is_empty() {
            return Ok(StepFunction::zero());
        }
        let breakpoints = (0..=values.len()).map(|i| i as f64 * h).collect();
        StepFunction::new(breakpoints, values)
    }

    /// Random complex values, uniform in the unit square, on `cells` cells of
    /// width `h` starting at `start` (a multiple of `h`), normalised to unit
    /// L² norm.
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, start: f64, h: f64, cells: usize) -> StepFunction {
        let lead = (start / h).round() as usize;
        let mut values = vec![ZERO; lead];
        values.extend((0..cells).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        let f = StepFunction::from_cells(h, values).expect("finite random data");
        let n = f.norm();
        f.scale(Complex64::new(1.0 / n, 0.0))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Right end of the last cell.
    pub fn extent(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(a, b, value)` per cell.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        if x < 0.0 || x >= self.extent() {
            return ZERO;
        }
        let i = self.breakpoints.partition_point(|&b| b <= x) - 1;
        self.values[i]
    }

    /// Exactly zero everywhere.
    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == ZERO)
    }

    /// Smallest interval containing every non-zero cell.
    pub fn support(&self) -> Option<(f64, f64)> {
        let mut it = self.cells().filter(|c| c.2 != ZERO);
        let first = it.next()?;
        let last = it.last().unwrap_or(first);
        Some((first.0, last.1))
    }

    pub fn norm_sq(&self) -> f64 {
        // an empty float sum is -0.0
        self.cells().map(|(a, b, v)| v.norm_sqr() * (b - a)).fold(0.0, |acc, x| acc + x)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, c: Complex64) -> StepFunction {
        StepFunction {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise combination on the merged breakpoints.
    pub fn zip_with(&self, other: &StepFunction, op: impl Fn(Complex64, Complex64) -> Complex64) -> StepFunction {
        let bps = merge(&self.breakpoints, &other.breakpoints);
        let values = bps
            .windows(2)
            .map(|w| op(self.eval(w[0]), other.eval(w[0])))
            .collect();
        StepFunction { breakpoints: bps, values }
    }

    /// The same function with additional breakpoints inserted.
    pub fn refine(&self, points: &[f64]) -> StepFunction {
        let mut pts: Vec<f64> = points.iter().copied().filter(|&p| p > 0.0 && p < self.extent()).collect();
        pts.sort_by(f64::total_cmp);
        let bps = merge(&self.breakpoints, &pts);
        let values = bps.windows(2).map(|w| self.eval(w[0])).collect();
        StepFunction { breakpoints: bps, values }
    }

    /// Splits every cell into `parts` equal sub-cells.
    pub fn subdivide(&self, parts: usize) -> StepFunction {
        let mut bps = vec![0.0];
        let mut values = Vec::with_capacity(self.values.len() * parts);
        for (a, b, v) in self.cells() {
            for p in 1..=parts {
                bps.push(if p == parts { b } else { a + (b - a) * p as f64 / parts as f64 });
                values.push(v);
            }
        }
        StepFunction { breakpoints: bps, values }
    }

    /// f · χ_[a,b)
    pub fn restrict(&self, a: f64, b: f64) -> StepFunction {
        let b = b.min(self.extent());
        if !(a < b) {
            return StepFunction::zero();
        }
        let mut bps = vec![0.0];
        let mut values = Vec::new();
        if a > 0.0 {
            bps.push(a);
            values.push(ZERO);
        }
        for &p in &self.breakpoints {
            if p > a && p < b {
                values.push(self.eval(*bps.last().unwrap()));
                bps.push(p);
            }
        }
        values.push(self.eval(*bps.last().unwrap()));
        bps.push(b);
        StepFunction { breakpoints: bps, values }
    }

    /// g(x) = f(x − delta) with g = 0 on [0, delta) for `delta ≥ 0`;
    /// g(x) = f(x + |delta|) for `delta < 0`.
    pub fn translate(&self, delta: f64) -> StepFunction {
        if delta == 0.0 || self.is_empty() {
            return self.clone();
        }
        if delta > 0.0 {
            let mut bps = Vec::with_capacity(self.breakpoints.len() + 1);
            bps.push(0.0);
            bps.extend(self.breakpoints.iter().map(|b| b + delta));
            let mut values = Vec::with_capacity(self.values.len() + 1);
            values.push(ZERO);
            values.extend_from_slice(&self.values);
            return StepFunction { breakpoints: bps, values };
        }
        let shift = -delta;
        if shift >= self.extent() {
            return StepFunction::zero();
        }
        let mut bps = vec![0.0];
        let mut values = vec![self.eval(shift)];
        for (&p, &v) in self.breakpoints.iter().zip(&self.values) {
            if p > shift {
                bps.push(p - shift);
                values.push(v);
            }
        }
        bps.push(self.extent() - shift);
        StepFunction { breakpoints: bps, values }
    }

    /// Multiplies each cell by `weight(midpoint)`. Zero cells are left
    /// alone and `weight` is not evaluated there.
    pub fn weight_midpoints<F>(&self, mut weight: F) -> Result<StepFunction>
    where
        F: FnMut(f64) -> Result<Complex64>,
    {
        let values = self
            .cells()
            .map(|(a, b, v)| if v == ZERO { Ok(ZERO) } else { Ok(v * weight(0.5 * (a + b))?) })
            .collect::<Result<Vec<_>>>()?;
        Ok(StepFunction {
            breakpoints: self.breakpoints.clone(),
            values,
        })
    }

    /// Drops everything beyond `x_max`; the flag reports whether a non-zero
    /// cell was cut.
    pub fn truncate(&self, x_max: f64) -> (StepFunction, bool) {
        if self.extent() <= x_max {
            return (self.clone(), false);
        }
        let lost = self.restrict(x_max, f64::INFINITY).norm_sq() > 0.0;
        (self.restrict(0.0, x_max), lost)
    }

    /// Writes `breakpoint,re,im` rows with 17 significant digits; the last
    /// row is the final breakpoint with value zero.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("breakpoint,re,im\n");
        for (i, &b) in self.breakpoints.iter().enumerate() {
            let v = self.values.get(i).copied().unwrap_or(ZERO);
            let _ = writeln!(out, "{},{},{}", fmt17(b), fmt17(v.re), fmt17(v.im));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<StepFunction> {
        let mut bps = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("breakpoint") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Format(format!("line {}: expected 3 fields", lineno + 1)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number `{s}`", lineno + 1)))
            };
            bps.push(num(fields[0])?);
            values.push(Complex64::new(num(fields[1])?, num(fields[2])?));
        }
        if values.pop().is_none() {
            return Err(Error::Format("no rows".into()));
        }
        StepFunction::new(bps, values)
    }
}

/// Formats with 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn merge(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// ⟨f, g⟩ = ∫ f · conj(g), exact on the merged breakpoints.
pub fn inner(f: &StepFunction, g: &StepFunction) -> Complex64 {
    let end = f.extent().min(g.extent());
    let bps = merge(&f.breakpoints, &g.breakpoints);
    let (mut i, mut j) = (0usize, 0usize);
    let mut acc = ZERO;
    for w in bps.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a >= end {
            break;
        }
        while f.breakpoints[i + 1] <= a {
            i += 1;
        }
        while g.breakpoints[j + 1] <= a {
            j += 1;
        }
        acc += f.values[i] * g.values[j].conj() * (b - a);
    }
    acc
}

/// Orthogonal projection onto E = χ_[0,t) L².
pub fn restrict_to_e(f: &StepFunction, t: f64) -> StepFunction {
    f.restrict(0.0, t)
}

/// Haar index: scale `j`, shift `k`; support `[k 2^{-j}, (k+1) 2^{-j})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HaarIndex {
    pub j: i32,
    pub k: u64,
}

impl HaarIndex {
    pub fn new(j: i32, k: u64) -> HaarIndex {
        HaarIndex { j, k }
    }

    pub fn support(&self) -> (f64, f64) {
        let w = 2f64.powi(-self.j);
        (self.k as f64 * w, (self.k + 1) as f64 * w)
    }
}

/// ψ_{jk}(x) = 2^{j/2} ψ(2^j x − k) restricted to ℝ₊.
pub fn haar(idx: HaarIndex) -> StepFunction {
    let (a, b) = idx.support();
    let mid = 0.5 * (a + b);
    let amp = if idx.j % 2 == 0 {
        2f64.powi(idx.j / 2)
    } else {
        2f64.powi((idx.j - 1) / 2) * std::f64::consts::SQRT_2
    };
    let (p, m) = (Complex64::new(amp, 0.0), Complex64::new(-amp, 0.0));
    if a == 0.0 {
        StepFunction {
            breakpoints: vec![0.0, mid, b],
            values: vec![p, m],
        }
    } else {
        StepFunction {
            breakpoints: vec![0.0, a, mid, b],
            values: vec![ZERO, p, m],
        }
    }
}

/// All ψ_{jk} with `j` in `scales` whose support lies in `[0, end)`.
pub fn haar_family(scales: impl IntoIterator<Item = i32>, end: f64) -> Vec<HaarIndex> {
    let mut out = Vec::new();
    for j in scales {
        let mut k = 0;
        loop {
            let idx = HaarIndex::new(j, k);
            if idx.support().1 > end {
                break;
            }
            out.push(idx);
            k += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn indicator_inner_products() {
        let a = StepFunction::indicator(0.0, 1.0);
        let b = StepFunction::indicator(1.0, 2.0);
        assert_eq!(inner(&a, &a), c(1.0));
        assert_eq!(inner(&a, &b), c(0.0));
        let psi = haar(HaarIndex::new(0, 0));
        assert_eq!(inner(&psi, &psi), c(1.0));
    }

    #[test]
    fn haar_examples() {
        let h00 = haar(HaarIndex::new(0, 0));
        assert_eq!(h00.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(h00.values(), &[c(1.0), c(-1.0)]);

        let h10 = haar(HaarIndex::new(1, 0));
        assert_eq!(h10.breakpoints(), &[0.0, 0.25, 0.5]);
        assert!((h10.values()[0].re - 2f64.sqrt()).abs() < 1e-15);
        assert!((h10.norm_sq() - 1.0).abs() < 1e-15);

        let hm12 = haar(HaarIndex::new(-1, 2));
        assert_eq!(hm12.breakpoints(), &[0.0, 4.0, 5.0, 6.0]);
        assert!((hm12.values()[1].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(hm12.values()[2], -hm12.values()[1]);
        assert_eq!(inner(&hm12, &haar(HaarIndex::new(-1, 1))), c(0.0));
    }

    #[test]
    fn haar_family_is_orthonormal() {
        let fam = haar_family([-2, -1, 0, 1, 2, 3], 8.0);
        let fs: Vec<_> = fam.iter().map(|&i| haar(i)).collect();
        for (p, f) in fs.iter().enumerate() {
            for (q, g) in fs.iter().enumerate() {
                let ip = inner(f, g);
                if p == q {
                    assert!((ip.re - 1.0).abs() < 1e-15 && ip.im == 0.0);
                } else {
                    assert_eq!(ip, c(0.0), "{:?} {:?}", fam[p], fam[q]);
                }
            }
        }
    }

    #[test]
    fn parseval_on_dyadic_steps() {
        // cells of width 1/4 on [0, 8) are resolved by χ_[0,8)/√8 and ψ_{jk}, -3 <= j <= 1
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = StepFunction::random_unit(&mut rng, 0.0, 0.25, 32);
        let fam = haar_family([-3, -2, -1, 0, 1], 8.0);
        let mut energy: f64 = fam.iter().map(|&i| inner(&f, &haar(i)).norm_sqr()).sum();
        let mean = StepFunction::constant_on(0.0, 8.0, c(1.0 / 8f64.sqrt()));
        energy += inner(&f, &mean).norm_sqr();
        assert!((energy - f.norm_sq()).abs() < 1e-10);
    }

    #[test]
    fn restriction_examples() {
        assert_eq!(restrict_to_e(&StepFunction::indicator(0.0, 2.0), 1.0), StepFunction::indicator(0.0, 1.0));
        assert!(restrict_to_e(&StepFunction::indicator(1.0, 2.0), 1.0).is_zero());
        let r = restrict_to_e(&haar(HaarIndex::new(0, 0)), 0.5);
        assert_eq!(r, StepFunction::indicator(0.0, 0.5));
    }

    #[test]
    fn translation() {
        let f = StepFunction::indicator(0.0, 1.0);
        assert_eq!(f.translate(1.0), StepFunction::indicator(1.0, 2.0));
        assert_eq!(f.translate(1.0).translate(-1.0), f);
        assert!(f.translate(-1.0).is_zero());
        let g = StepFunction::indicator(0.5, 1.5).translate(-1.0);
        assert_eq!(g, StepFunction::indicator(0.0, 0.5));
    }

    #[test]
    fn truncation_flags_lost_mass() {
        let f = StepFunction::indicator(3.0, 5.0);
        let (g, lost) = f.truncate(4.0);
        assert!(lost);
        assert_eq!(g.extent(), 4.0);
        let (_, lost) = StepFunction::indicator(0.0, 1.0).refine(&[]).truncate(4.0);
        assert!(!lost);
        let padded = StepFunction::new(vec![0.0, 1.0, 6.0], vec![c(1.0), c(0.0)]).unwrap();
        assert!(!padded.truncate(4.0).1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StepFunction::new(vec![0.5, 1.0], vec![c(1.0)]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0, 1.0], vec![c(1.0), c(1.0)]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(StepFunction::new(vec![0.0, 1.0], vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(StepFunction::from_csv("breakpoint,re,im\n").is_err());
        assert!(StepFunction::from_csv("0,1\n").is_err());
    }

    fn arb_step() -> impl Strategy<Value = StepFunction> {
        prop::collection::vec((1e-3f64..3.0, -5.0f64..5.0, -5.0f64..5.0), 1..40).prop_map(|cells| {
            let mut bps = vec![0.0];
            let mut values = Vec::new();
            for (w, re, im) in cells {
                let next = bps.last().unwrap() + w;
                bps.push(next);
                values.push(Complex64::new(re, im));
            }
            StepFunction::new(bps, values).unwrap()
        })
    }

    proptest! {
        #[test]
        fn csv_and_json_round_trip_bit_exact(f in arb_step()) {
            let back = StepFunction::from_csv(&f.to_csv()).unwrap();
            prop_assert_eq!(&back, &f);
            let json = serde_json::to_string(&f).unwrap();
            let back: StepFunction = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(&back, &f);
        }

        #[test]
        fn inner_is_conjugate_symmetric_and_restriction_contracts(f in arb_step(), g in arb_step(), t in 0.01f64..20.0) {
            let fg = inner(&f, &g);
            let gf = inner(&g, &f);
            prop_assert!((fg - gf.conj()).norm() <= 1e-12 * (1.0 + f.norm() * g.norm()));
            prop_assert!((inner(&f, &f).re - f.norm_sq()).abs() <= 1e-12 * (1.0 + f.norm_sq()));

            let p = restrict_to_e(&f, t);
            prop_assert_eq!(&restrict_to_e(&p, t), &p);
            prop_assert!(p.norm_sq() <= f.norm_sq() * (1.0 + 1e-15));
            let inside = f.support().is_none_or(|(_, hi)| hi <= t);
            if inside {
                prop_assert_eq!(p.norm_sq(), f.norm_sq());
            } else {
                prop_assert!(p.norm_sq() < f.norm_sq());
            }
        }
    }
}
