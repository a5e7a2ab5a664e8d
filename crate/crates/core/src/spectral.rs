//! Spectral radius r(S_t), lower bound r₁(S_t), r(L_t), the approximate
//! point spectrum annulus and the numerical checks on the spectrum.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::l2grid::{haar, haar_family, inner, StepFunction};
use crate::model::{kernel_preimage, SeriesOptions};
use crate::quadrature::gauss_legendre;
use crate::semigroup::{OperatorHandle, OperatorKind};
use crate::symbol::{Builtin, Symbol};

pub const DEFAULT_N_MAX: usize = 64;
/// RMS misfit of the log-linear fit above which a sequence is flagged.
pub const FIT_RESIDUAL_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceEstimate {
    pub estimate: f64,
    pub n_max: usize,
    /// ‖T^n‖ or m(T^n) for n = 1..=n_max.
    pub values: Vec<f64>,
    /// Where each value was attained.
    pub args: Vec<f64>,
    /// values[n]^{1/n}
    pub roots: Vec<f64>,
    pub last_root: f64,
    pub fit_slope: f64,
    pub fit_residual: f64,
    pub non_convergent: bool,
    pub window_limited: bool,
}

/// Least squares slope of log v against n over the tail half, with the RMS
/// misfit.
fn tail_fit(values: &[f64]) -> (f64, f64) {
    let n_max = values.len();
    let from = n_max / 2;
    let pts: Vec<(f64, f64)> = (from..n_max).map(|i| ((i + 1) as f64, values[i].ln())).collect();
    if pts.len() < 2 {
        return (pts.first().map_or(0.0, |p| p.1 / p.0), 0.0);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / k).sqrt();
    (slope, rms)
}

fn check_budget(op: &OperatorHandle, n_max: usize) -> Result<()> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("N_max must be positive".into()));
    }
    if n_max as f64 * op.t() > op.x_max() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "N_max·t = {} exceeds X_max = {}",
            n_max as f64 * op.t(),
            op.x_max()
        )));
    }
    Ok(())
}

fn estimate_from<F>(op: &OperatorHandle, n_max: usize, mut step: F) -> Result<SequenceEstimate>
where
    F: FnMut(usize) -> Result<crate::sampling::Extremum>,
{
    check_budget(op, n_max)?;
    let mut values = Vec::with_capacity(n_max);
    let mut args = Vec::with_capacity(n_max);
    let mut window_limited = false;
    for n in 1..=n_max {
        let e = step(n)?;
        window_limited |= e.at_window_edge;
        values.push(e.value);
        args.push(e.arg);
    }
    let roots: Vec<f64> = values.iter().enumerate().map(|(i, v)| v.powf(1.0 / (i + 1) as f64)).collect();
    let last_root = *roots.last().unwrap();
    if values.contains(&0.0) {
        return Ok(SequenceEstimate {
            estimate: 0.0,
            n_max,
            values,
            args,
            roots,
            last_root,
            fit_slope: f64::NEG_INFINITY,
            fit_residual: 0.0,
            non_convergent: false,
            window_limited,
        });
    }
    let (fit_slope, fit_residual) = tail_fit(&values);
    Ok(SequenceEstimate {
        estimate: fit_slope.exp(),
        n_max,
        values,
        args,
        roots,
        last_root,
        fit_slope,
        fit_residual,
        non_convergent: fit_residual > FIT_RESIDUAL_THRESHOLD,
        window_limited,
    })
}

/// r(T) = lim ‖T^n‖^{1/n}, extrapolated from n = 1..=n_max.
pub fn spectral_radius(op: &OperatorHandle, n_max: usize) -> Result<SequenceEstimate> {
    estimate_from(op, n_max, |n| op.operator_norm(n))
}

/// r₁(T) = lim m(T^n)^{1/n}.
pub fn lower_spectral_bound(op: &OperatorHandle, n_max: usize) -> Result<SequenceEstimate> {
    estimate_from(op, n_max, |n| op.lower_bound_m(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    pub fn is_circle(&self, tol: f64) -> bool {
        (self.outer - self.inner).abs() <= tol * self.outer.max(1.0)
    }
}

/// [r₁, r]; a fitted r₁ above r by rounding only is pulled down to r.
fn make_annulus(r1: f64, r: f64) -> Annulus {
    let inner = if r1 > r && r1 - r <= 1e-12 * r { r } else { r1 };
    Annulus { inner, outer: r }
}

pub fn annulus(op: &OperatorHandle, n_max: usize) -> Result<Annulus> {
    let r = spectral_radius(op, n_max)?.estimate;
    let r1 = lower_spectral_bound(op, n_max)?.estimate;
    Ok(make_annulus(r1, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDiagnostics {
    pub norms: SequenceEstimate,
    pub lower_bounds: SequenceEstimate,
    pub l_norms: SequenceEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub symbol: String,
    pub t: f64,
    pub x_max: f64,
    pub n_max: usize,
    pub r: f64,
    pub r1: f64,
    pub r_l: f64,
    pub disc_radius: f64,
    pub annulus: Annulus,
    pub model_disc_radius: f64,
    /// 1/r(L_t) in closed form for the built-in families.
    pub analytic_model_disc_radius: Option<f64>,
    /// Eigenvalues of S_t; there are none.
    pub point_spectrum: Vec<Complex64>,
    pub window_limited: bool,
    pub non_convergent: bool,
    pub notes: Vec<String>,
    pub sequence_diagnostics: SpectralDiagnostics,
}

/// The closed-form r(L_t) for the built-in families.
pub fn analytic_l_radius(s: &Symbol, t: f64) -> Option<f64> {
    s.family().map(|b| match b {
        Builtin::Exponential { a } => a.powf(-0.5 * t),
        _ => 1.0,
    })
}

pub fn summarize(s: &Symbol, t: f64, x_max: f64, n_max: usize) -> Result<SpectralSummary> {
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max)?;
    let norms = spectral_radius(&op, n_max)?;
    let lower_bounds = lower_spectral_bound(&op, n_max)?;
    let l_op = op.with_kind(OperatorKind::L)?;
    let l_norms = spectral_radius(&l_op, n_max)?;

    let annulus = make_annulus(lower_bounds.estimate, norms.estimate);
    let r_l = l_norms.estimate;
    let analytic = analytic_l_radius(s, t).map(|r| 1.0 / r);
    let mut notes = Vec::new();
    if let Some(Builtin::Exponential { a }) = s.family() {
        notes.push(format!(
            "‖L_t^n‖ = a^(-nt/2), so r(L_t) = a^(-t/2) = {:.10} and the model disc has radius a^(t/2) = {:.10}, not a^t = {:.10}",
            a.powf(-0.5 * t),
            a.powf(0.5 * t),
            a.powf(t)
        ));
    }
    if norms.window_limited || lower_bounds.window_limited || l_norms.window_limited {
        notes.push(format!("an extremum sits at the window edge x = {x_max}; estimates depend on X_max"));
    }
    Ok(SpectralSummary {
        symbol: s.to_string(),
        t,
        x_max,
        n_max,
        r: norms.estimate,
        r1: annulus.inner,
        r_l,
        disc_radius: norms.estimate,
        annulus,
        model_disc_radius: 1.0 / r_l,
        analytic_model_disc_radius: analytic,
        point_spectrum: Vec::new(),
        window_limited: norms.window_limited || lower_bounds.window_limited || l_norms.window_limited,
        non_convergent: norms.non_convergent || lower_bounds.non_convergent || l_norms.non_convergent,
        notes,
        sequence_diagnostics: SpectralDiagnostics { norms, lower_bounds, l_norms },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircularSymmetry {
    /// ‖M_θ* S_t M_θ f − e^{−iθt} S_t f‖ with phases taken at cell midpoints.
    pub strong: f64,
    /// |⟨M_θ* S_t M_θ f, g⟩ − ⟨e^{−iθt} S_t f, g⟩| with g the translate of f
    /// by t and the right side integrated with the continuous weight and
    /// phases.
    pub weak: f64,
}

fn phase(theta: f64, sign: f64) -> impl Fn(f64) -> Result<Complex64> {
    move |x| Ok(Complex64::from_polar(1.0, sign * theta * x))
}

pub fn verify_circular_symmetry(s: &Symbol, t: f64, theta: f64, f: &StepFunction, x_max: f64) -> Result<CircularSymmetry> {
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max)?;
    let rot = Complex64::from_polar(1.0, -theta * t);
    let conj = op
        .apply(&f.weight_midpoints(phase(theta, 1.0))?)?
        .weight_midpoints(phase(theta, -1.0))?;
    let plain = op.apply(f)?;
    let strong = conj.sub(&plain.scale(rot)).norm();

    let g = f.translate(t).truncate(x_max).0;
    let discrete = inner(&conj, &g);
    let mut exact = Complex64::new(0.0, 0.0);
    for (a, b, v) in g.cells() {
        if v == Complex64::new(0.0, 0.0) {
            continue;
        }
        // integrand e^{−iθx} φ_t(x) e^{iθ(x−t)}, with f(x−t) conj(g(x)) = |v|² on this cell
        let part = |x: f64, re: bool| -> Result<f64> {
            let w = s.growth(x - t, t)?.sqrt();
            let z = Complex64::from_polar(w, -theta * x) * Complex64::from_polar(1.0, theta * (x - t));
            Ok(if re { z.re } else { z.im })
        };
        let re = gauss_legendre(a, b, |x| part(x, true))?;
        let im = gauss_legendre(a, b, |x| part(x, false))?;
        exact += Complex64::new(re, im) * v.norm_sqr();
    }
    Ok(CircularSymmetry { strong, weak: (discrete - exact).norm() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenCheck {
    /// ‖S_t* v − w̄ v‖ / ‖v‖
    pub residual: f64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// v = Σ w̄^n (L_t*)^n e should satisfy S_t* v = w̄ v.
pub fn verify_adjoint_eigenvector(
    s: &Symbol,
    t: f64,
    w: Complex64,
    e: &StepFunction,
    opts: &SeriesOptions,
    x_max: f64,
) -> Result<EigenCheck> {
    let pre = kernel_preimage(s, t, w, e, opts, x_max)?;
    let v = pre.value;
    let adj = OperatorHandle::new(s.clone(), t, OperatorKind::SAdjoint, x_max)?;
    let lhs = adj.apply(&v)?;
    let norm = v.norm();
    let residual = if norm == 0.0 { 0.0 } else { lhs.sub(&v.scale(w.conj())).norm() / norm };
    Ok(EigenCheck { residual, terms: pre.terms, tail_bound: pre.tail_bound })
}

/// Distance from χ_[0,t) to the span of S_t applied to Haar functions on
/// `[0, end)`, relative to ‖χ_[0,t)‖. The range of S_t is orthogonal to E,
/// so this stays at 1.
pub fn range_gap(s: &Symbol, t: f64, end: f64, x_max: f64) -> Result<f64> {
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max)?;
    let target = StepFunction::indicator(0.0, t);
    let mut basis: Vec<StepFunction> = Vec::new();
    let mut images = vec![StepFunction::indicator(0.0, end).scale(Complex64::new(1.0 / end.sqrt(), 0.0))];
    images.extend(haar_family(-2..=2, end).into_iter().map(haar));
    for img in images {
        let mut u = op.apply(&img)?;
        for b in &basis {
            u = u.sub(&b.scale(inner(&u, b)));
        }
        let n = u.norm();
        if n > 1e-12 {
            basis.push(u.scale(Complex64::new(1.0 / n, 0.0)));
        }
    }
    let mut r = target.clone();
    for b in &basis {
        r = r.sub(&b.scale(inner(&r, b)));
    }
    Ok(r.norm() / target.norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSpectrumProbe {
    pub min_residual: f64,
    pub lambda: Complex64,
    pub trials: usize,
}

/// min ‖(S_t − λ)f‖ over λ on circles of radius 0, r/2, r and random unit
/// step functions f. A value near 0 would be an eigenvalue candidate.
pub fn point_spectrum_probe<R: Rng + ?Sized>(
    s: &Symbol,
    t: f64,
    r: f64,
    x_max: f64,
    h: f64,
    samples: usize,
    rng: &mut R,
) -> Result<PointSpectrumProbe> {
    let op = OperatorHandle::new(s.clone(), t, OperatorKind::S, x_max)?;
    let cells = ((4.0 * t / h).round() as usize).max(1);
    let mut best = PointSpectrumProbe { min_residual: f64::INFINITY, lambda: Complex64::new(0.0, 0.0), trials: 0 };
    let mut lambdas = vec![Complex64::new(0.0, 0.0)];
    for radius in [0.5 * r, r] {
        lambdas.extend((0..8).map(|k| Complex64::from_polar(radius, k as f64 * std::f64::consts::FRAC_PI_4)));
    }
    for _ in 0..samples {
        let f = StepFunction::random_unit(rng, 0.0, h, cells);
        let sf = op.apply(&f)?;
        for &lambda in &lambdas {
            let res = sf.sub(&f.scale(lambda)).norm();
            best.trials += 1;
            if res < best.min_residual {
                best.min_residual = res;
                best.lambda = lambda;
            }
        }
    }
    Ok(best)
}
