//! The analytic model: U f = Σ (P L_t^n f) z^n, E-valued polynomials, the
//! diagonal kernel Σ φ(x)/φ(x+nt) (zλ̄)^n and the Haar polynomial basis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l2grid::{haar, inner, restrict_to_e, HaarIndex, StepFunction};
use crate::quadrature::gauss_legendre;
use crate::semigroup::{OperatorHandle, OperatorKind};
use crate::spectral;
use crate::symbol::{Builtin, Symbol};

pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_SERIES_TOL: f64 = 1e-12;
pub const SERIES_CAP: usize = 10_000;
/// Consecutive decreasing terms required before the tail estimate is trusted.
const TAIL_RUN: usize = 5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// How ∫ ρ(x) |c(x)|² dx is evaluated on a cell where c is constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// ρ at the cell midpoint, matching how the operators weight cells.
    Midpoint,
    /// Five-point Gauss-Legendre on the continuous ρ.
    GaussLegendre,
}

/// ∫ w(x) g(x) dx for a step function g.
pub fn weighted_integral<W>(g: &StepFunction, w: W, mode: Quadrature) -> Result<Complex64>
where
    W: Fn(f64) -> Result<f64>,
{
    let mut acc = ZERO;
    for (a, b, v) in g.cells() {
        if v == ZERO {
            continue;
        }
        let mass = match mode {
            Quadrature::Midpoint => w(0.5 * (a + b))? * (b - a),
            Quadrature::GaussLegendre => gauss_legendre(a, b, &w)?,
        };
        acc += v * mass;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EValuedPolynomial {
    pub t: f64,
    pub coeffs: Vec<StepFunction>,
    pub truncated: bool,
}

impl EValuedPolynomial {
    pub fn new(t: f64, coeffs: Vec<StepFunction>) -> Result<EValuedPolynomial> {
        for (n, c) in coeffs.iter().enumerate() {
            if let Some((_, hi)) = c.support() {
                if hi > t {
                    return Err(Error::InvalidArgument(format!("coefficient {n} is not supported in [0, {t})")));
                }
            }
        }
        Ok(EValuedPolynomial { t, coeffs, truncated: false })
    }

    /// Index of the last non-zero coefficient.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !c.is_zero())
    }

    /// p(λ) = Σ c_n λ^n, an element of E.
    pub fn eval_at(&self, lambda: Complex64) -> StepFunction {
        let mut acc = StepFunction::zero();
        let mut pow = ONE;
        for c in &self.coeffs {
            acc = acc.add(&c.scale(pow));
            pow *= lambda;
        }
        acc
    }

    /// ⟨p, q⟩_H = Σ_n ∫₀ᵗ (φ(x+nt)/φ(x)) c_n conj(d_n) dx.
    pub fn h_inner(&self, other: &EValuedPolynomial, s: &Symbol, mode: Quadrature) -> Result<Complex64> {
        let mut acc = ZERO;
        for (n, (c, d)) in self.coeffs.iter().zip(&other.coeffs).enumerate() {
            let shift = n as f64 * self.t;
            let prod = c.zip_with(d, |a, b| a * b.conj());
            acc += weighted_integral(&prod, |x| s.growth(x, shift), mode)?;
        }
        Ok(acc)
    }

    pub fn h_norm_sq(&self, s: &Symbol, mode: Quadrature) -> Result<f64> {
        Ok(self.h_inner(self, s, mode)?.re)
    }
}

/// Coefficients P L_t^n f for n = 0..=n_max.
pub fn model_map(s: &Symbol, t: f64, f: &StepFunction, n_max: usize, x_max: f64) -> Result<EValuedPolynomial> {
    if n_max as f64 * t > x_max {
        return Err(Error::InvalidArgument(format!("N·t = {} exceeds X_max = {x_max}", n_max as f64 * t)));
    }
    let l = OperatorHandle::new(s.clone(), t, OperatorKind::L, x_max)?;
    let marks: Vec<f64> = (1..=n_max + 1).map(|n| n as f64 * t).collect();
    let f = f.refine(&marks);
    let mut coeffs = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let block = f.restrict(n as f64 * t, (n + 1) as f64 * t);
        coeffs.push(restrict_to_e(&l.apply_power(n, &block)?, t));
    }
    let end = (n_max + 1) as f64 * t;
    let truncated = f.restrict(end, f64::INFINITY).norm_sq() > 0.0;
    Ok(EValuedPolynomial { t, coeffs, truncated })
}

/// f(x+nt) = sqrt(φ(x+nt)/φ(x)) c_n(x).
pub fn model_inverse(s: &Symbol, t: f64, p: &EValuedPolynomial) -> Result<StepFunction> {
    let mut f = StepFunction::zero();
    for (n, c) in p.coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let shift = n as f64 * t;
        let lifted = c.weight_midpoints(|y| Ok(Complex64::new(s.growth(y, shift)?.sqrt(), 0.0)))?;
        f = f.add(&lifted.translate(shift));
    }
    Ok(f)
}

/// |H-norm² of U f − ‖f‖²|.
pub fn parseval_defect(s: &Symbol, t: f64, f: &StepFunction, n_max: usize, mode: Quadrature, x_max: f64) -> Result<f64> {
    let p = model_map(s, t, f, n_max, x_max)?;
    Ok((p.h_norm_sq(s, mode)? - f.norm_sq()).abs())
}

/// max_n ‖U(S_t f)_n − (U f)_{n−1}‖ together with ‖U(S_t f)_0‖.
pub fn intertwining_defect(s: &Symbol, t: f64, f: &StepFunction, n_max: usize, x_max: f64) -> Result<f64> {
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max)?;
    let sf = op.apply(f)?;
    let left = model_map(s, t, &sf, n_max, x_max)?;
    let right = model_map(s, t, f, n_max, x_max)?;
    let mut worst = left.coeffs[0].norm();
    for n in 1..=n_max {
        worst = worst.max(left.coeffs[n].sub(&right.coeffs[n - 1]).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosedForm {
    Szego,
    TwoIsometry,
    Bergmanlike,
    PiecewiseCap,
    ScaledSzego,
}

impl ClosedForm {
    pub fn for_family(b: &Builtin) -> ClosedForm {
        match b {
            Builtin::Constant { .. } => ClosedForm::Szego,
            Builtin::Affine => ClosedForm::TwoIsometry,
            Builtin::Reciprocal => ClosedForm::Bergmanlike,
            Builtin::PiecewiseCap => ClosedForm::PiecewiseCap,
            Builtin::Exponential { .. } => ClosedForm::ScaledSzego,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalKernel {
    pub symbol: Symbol,
    pub t: f64,
    /// 1/r(L_t); the series converges for |zλ̄| < radius².
    pub radius: f64,
    pub closed_form: Option<ClosedForm>,
}

impl DiagonalKernel {
    /// Known families get their radius in closed form; anything else gets
    /// 1/r(L_t) from the fitted norm sequence on `[0, x_max]`.
    pub fn new(symbol: Symbol, t: f64, x_max: f64) -> Result<DiagonalKernel> {
        if let Some(b) = symbol.family() {
            let radius = match b {
                Builtin::Exponential { a } => a.powf(0.5 * t),
                _ => 1.0,
            };
            return Ok(DiagonalKernel { closed_form: Some(ClosedForm::for_family(&b)), symbol, t, radius });
        }
        let op = OperatorHandle::new(symbol.clone(), t, OperatorKind::L, x_max)?;
        let n_max = ((x_max / t).floor() as usize).clamp(2, spectral::DEFAULT_N_MAX);
        let r_l = spectral::spectral_radius(&op, n_max)?.estimate;
        Ok(DiagonalKernel { symbol, t, radius: 1.0 / r_l, closed_form: None })
    }

    pub fn with_radius(symbol: Symbol, t: f64, radius: f64, closed_form: Option<ClosedForm>) -> DiagonalKernel {
        DiagonalKernel { symbol, t, radius, closed_form }
    }

    /// φ(x)/φ(x+nt)
    pub fn coefficient(&self, n: usize, x: f64) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        Ok(1.0 / self.symbol.growth(x, n as f64 * self.t)?)
    }

    fn guard(&self, q: Complex64, margin: f64) -> Result<()> {
        let limit = self.radius * self.radius * (1.0 - margin);
        if q.norm() < limit {
            Ok(())
        } else {
            Err(Error::OutsideConvergenceDomain { modulus: q.norm(), limit })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub margin: f64,
    pub cap: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { tol: DEFAULT_SERIES_TOL, margin: DEFAULT_MARGIN, cap: SERIES_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    /// Number of terms summed.
    pub terms: usize,
    pub tail_bound: f64,
}

/// Stopping rule: the term ratio stays below 1 for five consecutive terms
/// and the geometric tail term·ρ/(1−ρ) drops below `tol`.
#[derive(Debug, Default)]
struct TailRule {
    run: usize,
    prev: Option<f64>,
}

impl TailRule {
    fn push(&mut self, mag: f64, tol: f64) -> Option<f64> {
        let prev = self.prev.replace(mag)?;
        let ratio = if prev == 0.0 {
            if mag == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            mag / prev
        };
        self.run = if ratio < 1.0 { self.run + 1 } else { 0 };
        if self.run < TAIL_RUN {
            return None;
        }
        let bound = if ratio == 0.0 { 0.0 } else { mag * ratio / (1.0 - ratio) };
        (bound < tol).then_some(bound)
    }
}

/// Σ_{n ≥ from} term(n) under the tail rule.
fn sum_series<F>(from: usize, cap: usize, tol: f64, mut term: F) -> Result<SeriesValue>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let mut rule = TailRule::default();
    let mut value = ZERO;
    for n in from..=cap {
        let x = term(n)?;
        value += x;
        if let Some(tail_bound) = rule.push(x.norm(), tol) {
            return Ok(SeriesValue { value, terms: n + 1 - from, tail_bound });
        }
    }
    Err(Error::TailBoundNotAchieved { n_max: cap })
}

fn check_in_e(x: f64, t: f64) -> Result<()> {
    if (0.0..t).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("x = {x} is outside [0, {t})")))
    }
}

/// Truncated series k(z, λ)(x) with its tail bound.
pub fn kernel_series(k: &DiagonalKernel, z: Complex64, lambda: Complex64, x: f64, opts: &SeriesOptions) -> Result<SeriesValue> {
    check_in_e(x, k.t)?;
    let q = z * lambda.conj();
    k.guard(q, opts.margin)?;
    let mut pow = ONE;
    sum_series(0, opts.cap, opts.tol, |n| {
        if n > 0 {
            pow *= q;
        }
        Ok(pow * k.coefficient(n, x)?)
    })
}

pub fn kernel_eval(k: &DiagonalKernel, z: Complex64, lambda: Complex64, x: f64, opts: &SeriesOptions) -> Result<Complex64> {
    Ok(kernel_series(k, z, lambda, x, opts)?.value)
}

/// |term_n| for n < count with no convergence guard; used to see where the
/// series stops decaying.
pub fn kernel_term_magnitudes(k: &DiagonalKernel, q: Complex64, x: f64, count: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut pow = 1.0;
    for n in 0..count {
        out.push(pow * k.coefficient(n, x)?);
        pow *= q.norm();
    }
    Ok(out)
}

/// Whether the terms at `q` are still shrinking after `count` terms.
pub fn kernel_terms_decay(k: &DiagonalKernel, q: Complex64, x: f64, count: usize) -> Result<bool> {
    let mags = kernel_term_magnitudes(k, q, x, count)?;
    let tail = &mags[count / 2..];
    Ok(tail.windows(2).all(|w| w[1] < w[0]) && tail[tail.len() - 1] < tail[0])
}

/// The family formulas; the residual series of the two-isometry case is
/// summed to `opts.tol`.
pub fn kernel_closed_form(k: &DiagonalKernel, z: Complex64, lambda: Complex64, x: f64, opts: &SeriesOptions) -> Result<Complex64> {
    let form = k.closed_form.ok_or(Error::NoClosedForm)?;
    check_in_e(x, k.t)?;
    let q = z * lambda.conj();
    k.guard(q, opts.margin)?;
    let t = k.t;
    let szego = ONE / (ONE - q);
    Ok(match form {
        ClosedForm::Szego => szego,
        ClosedForm::TwoIsometry => {
            let mut pow = ONE;
            let rest = sum_series(1, opts.cap, opts.tol, |n| {
                pow *= q;
                let nt = n as f64 * t;
                Ok(pow * (nt / (x + 1.0 + nt)))
            })?;
            szego - rest.value
        }
        ClosedForm::Bergmanlike => szego + q * (t / (x + 1.0)) / ((ONE - q) * (ONE - q)),
        ClosedForm::PiecewiseCap => {
            if x >= 1.0 {
                szego
            } else {
                let half = 0.5 * (x + 1.0);
                let mut acc = szego * half;
                let mut pow = ONE;
                let mut n = 0usize;
                while x + n as f64 * t <= 1.0 {
                    acc += pow * ((x + 1.0) / (x + n as f64 * t + 1.0) - half);
                    pow *= q;
                    n += 1;
                }
                acc
            }
        }
        ClosedForm::ScaledSzego => {
            let a = match k.symbol.family() {
                Some(Builtin::Exponential { a }) => a,
                _ => return Err(Error::NoClosedForm),
            };
            ONE / (ONE - q * (-a.ln() * t).exp())
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub value: StepFunction,
    pub terms: usize,
    pub tail_bound: f64,
}

/// Pre-image under U of k(·, λ)e: Σ conj(λ)^n (L_t*)^n e.
pub fn kernel_preimage(
    s: &Symbol,
    t: f64,
    lambda: Complex64,
    e: &StepFunction,
    opts: &SeriesOptions,
    x_max: f64,
) -> Result<Preimage> {
    check_e_element(e, t)?;
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::LAdjoint, x_max)?;
    let r_l = l_radius_of(s, t, x_max)?;
    let limit = (1.0 / r_l) * (1.0 - opts.margin);
    if lambda.norm() >= limit {
        return Err(Error::OutsideConvergenceDomain { modulus: lambda.norm(), limit });
    }
    let max_terms = ((x_max / t).floor() as usize).min(opts.cap);
    let mut rule = TailRule::default();
    let mut acc = StepFunction::zero();
    let mut pow = ONE;
    let cl = lambda.conj();
    for n in 0..max_terms {
        let term = op.apply_power(n, e)?.scale(pow);
        let mag = term.norm();
        acc = acc.add(&term);
        if let Some(tail_bound) = rule.push(mag, opts.tol) {
            return Ok(Preimage { value: acc, terms: n + 1, tail_bound });
        }
        pow *= cl;
    }
    Err(Error::TailBoundNotAchieved { n_max: max_terms })
}

fn l_radius_of(s: &Symbol, t: f64, x_max: f64) -> Result<f64> {
    let k = DiagonalKernel::new(s.clone(), t, x_max)?;
    Ok(1.0 / k.radius)
}

pub fn check_e_element(e: &StepFunction, t: f64) -> Result<()> {
    match e.support() {
        Some((_, hi)) if hi > t => Err(Error::InvalidArgument(format!("e must be supported in [0, {t})"))),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproducingCheck {
    /// Σ_n ⟨c_n, e⟩ λ^n
    pub lhs: Complex64,
    /// ⟨f, pre-image of k(·, λ)e⟩
    pub rhs: Complex64,
}

pub fn reproducing_check(
    s: &Symbol,
    t: f64,
    f: &StepFunction,
    lambda: Complex64,
    e: &StepFunction,
    n_max: usize,
    opts: &SeriesOptions,
    x_max: f64,
) -> Result<ReproducingCheck> {
    let p = model_map(s, t, f, n_max, x_max)?;
    let mut lhs = ZERO;
    let mut pow = ONE;
    for c in &p.coeffs {
        lhs += inner(c, e) * pow;
        pow *= lambda;
    }
    let pre = kernel_preimage(s, t, lambda, e, opts, x_max)?;
    Ok(ReproducingCheck { lhs, rhs: inner(f, &pre.value) })
}

/// f_n = f · χ_[nt,(n+1)t) for n = 0..=n_max.
pub fn block_decompose(f: &StepFunction, t: f64, n_max: usize) -> Vec<StepFunction> {
    (0..=n_max).map(|n| f.restrict(n as f64 * t, (n + 1) as f64 * t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HaarPolynomial {
    pub index: HaarIndex,
    pub polynomial: EValuedPolynomial,
    pub degree: Option<usize>,
    /// floor((k+1)/(2^j t))
    pub degree_bound: usize,
    /// floor((k+1)/2^j), the bound without t
    pub unscaled_bound: usize,
}

pub fn degree_bound(idx: HaarIndex, t: f64) -> usize {
    (idx.support().1 / t).floor() as usize
}

pub fn unscaled_degree_bound(idx: HaarIndex) -> usize {
    idx.support().1.floor() as usize
}

/// U ψ_{jk} for each index.
pub fn haar_polynomial_basis(s: &Symbol, t: f64, indices: &[HaarIndex], x_max: f64) -> Result<Vec<HaarPolynomial>> {
    indices
        .iter()
        .map(|&index| {
            let end = index.support().1;
            let n_max = (end / t).ceil() as usize;
            let polynomial = model_map(s, t, &haar(index), n_max, x_max.max(n_max as f64 * t))?;
            Ok(HaarPolynomial {
                index,
                degree: polynomial.degree(),
                degree_bound: degree_bound(index, t),
                unscaled_bound: unscaled_degree_bound(index),
                polynomial,
            })
        })
        .collect()
}

/// ⟨p_a, p_b⟩_H computed as ⟨U⁻¹p_a, U⁻¹p_b⟩ in L².
pub fn gram_matrix(s: &Symbol, t: f64, polys: &[EValuedPolynomial]) -> Result<Vec<Vec<Complex64>>> {
    let pulled = polys.iter().map(|p| model_inverse(s, t, p)).collect::<Result<Vec<_>>>()?;
    Ok(pulled.iter().map(|a| pulled.iter().map(|b| inner(a, b)).collect()).collect())
}

/// max |G − I| entrywise.
pub fn identity_defect(g: &[Vec<Complex64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}
