//! The invariant suites behind `wts verify`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{bracket_integral, bracket_quadratic_form};
use crate::config::RunConfig;
use crate::error::Result;
use crate::l2grid::{inner, StepFunction};
use crate::model::{
    block_decompose, intertwining_defect, kernel_closed_form, kernel_eval, model_inverse, model_map, parseval_defect,
    reproducing_check, DiagonalKernel, Quadrature, SeriesOptions,
};
use crate::semigroup::{OperatorHandle, OperatorKind};
use crate::spectral::{range_gap, verify_adjoint_eigenvector, verify_circular_symmetry};
use crate::symbol::Symbol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub symbol: String,
    pub t: f64,
    pub x_max: f64,
    pub h: f64,
    pub seed: u64,
    pub samples: usize,
    pub suites: Vec<SuiteResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| !s.pass)
    }
}

struct Ctx {
    s: Symbol,
    x_max: f64,
    h: f64,
    opts: SeriesOptions,
    /// Support of the random test functions is [0, span·t).
    span: usize,
}

impl Ctx {
    fn op(&self, kind: OperatorKind, t: f64) -> Result<OperatorHandle> {
        OperatorHandle::new(self.s.clone(), t, kind, self.x_max)
    }
}

fn suite(name: &str, residual: f64, tol: f64) -> SuiteResult {
    SuiteResult { name: name.into(), residual, tol, pass: residual <= tol }
}

/// Exact suites pass only at residual 0.
fn exact(name: &str, residual: f64) -> SuiteResult {
    SuiteResult { name: name.into(), residual, tol: 0.0, pass: residual == 0.0 }
}

pub fn run(cfg: &RunConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let s = cfg.symbol()?;
    let t = cfg.t;
    let ctx = Ctx {
        span: 16.min((cfg.x_max() / t).floor() as usize / 4).max(1),
        s,
        x_max: cfg.x_max(),
        h: cfg.h(),
        opts: SeriesOptions { tol: cfg.tol.series, margin: cfg.tol.margin, ..SeriesOptions::default() },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cells = ((ctx.span as f64 * t) / ctx.h).round() as usize;
    let fs: Vec<StepFunction> = (0..cfg.samples).map(|_| StepFunction::random_unit(&mut rng, 0.0, ctx.h, cells)).collect();
    let gs: Vec<StepFunction> = (0..cfg.samples).map(|_| StepFunction::random_unit(&mut rng, 0.0, ctx.h, cells)).collect();
    let grid = cfg.tol.grid;
    let worst = |v: &mut f64, x: f64| *v = v.max(x);

    let mut suites = Vec::new();

    let s_t = ctx.op(OperatorKind::S, t)?;
    let s_half = ctx.op(OperatorKind::S, 0.5 * t)?;
    let s_sum = ctx.op(OperatorKind::S, 1.5 * t)?;
    let adj = ctx.op(OperatorKind::SAdjoint, t)?;
    let l = ctx.op(OperatorKind::L, t)?;
    let l_adj = ctx.op(OperatorKind::LAdjoint, t)?;

    let (mut law, mut pairing, mut left_inv, mut diag) = (0.0, 0.0, 0.0, 0.0);
    let (mut support, mut kernel, mut blocks) = (0.0, 0.0, 0.0);
    for (f, g) in fs.iter().zip(&gs) {
        worst(&mut law, s_t.apply(&s_half.apply(f)?)?.sub(&s_sum.apply(f)?).norm());
        worst(&mut pairing, (inner(&s_t.apply(f)?, g) - inner(f, &adj.apply(g)?)).norm());
        worst(&mut left_inv, l.apply(&s_t.apply(f)?)?.sub(f).norm());
        let expect = f.weight_midpoints(|x| Ok(Complex64::new(ctx.s.ratio(x, x + t)?, 0.0)))?;
        worst(&mut diag, l.apply(&l_adj.apply(f)?)?.sub(&expect).norm());

        for k in 0..4 {
            if let Some((lo, _)) = s_t.apply_power(k, f)?.support() {
                worst(&mut support, (k as f64 * t - lo).max(0.0));
            }
        }
        worst(&mut kernel, adj.apply(&f.restrict(0.0, t))?.norm());
        if adj.apply(f)?.is_zero() {
            kernel = f64::INFINITY;
        }
        let parts = block_decompose(f, t, ctx.span);
        for (m, a) in parts.iter().enumerate() {
            for b in &parts[m + 1..] {
                worst(&mut blocks, inner(a, b).norm());
            }
        }
    }
    suites.push(suite("semigroup-law", law, grid));
    suites.push(suite("adjoint-pairing", pairing, grid));
    suites.push(suite("left-inverse", left_inv, grid));
    suites.push(suite("diagonal-identity", diag, grid));
    suites.push(exact("analytic-support", support));
    suites.push(exact("adjoint-kernel", kernel));
    suites.push(exact("block-orthogonality", blocks));

    let n = ctx.span;
    let (mut parseval, mut round_trip, mut intertwine, mut repro) = (0.0, 0.0, 0.0, 0.0);
    let kernel_k = DiagonalKernel::new(ctx.s.clone(), t, ctx.x_max)?;
    let lambda = Complex64::from_polar(0.5 * kernel_k.radius, 0.9);
    let e = fs[0].restrict(0.0, t);
    for f in &fs {
        worst(&mut parseval, parseval_defect(&ctx.s, t, f, n, Quadrature::GaussLegendre, ctx.x_max)?);
        let p = model_map(&ctx.s, t, f, n, ctx.x_max)?;
        worst(&mut round_trip, model_inverse(&ctx.s, t, &p)?.sub(f).norm());
        worst(&mut intertwine, intertwining_defect(&ctx.s, t, f, n, ctx.x_max)?);
        let r = reproducing_check(&ctx.s, t, f, lambda, &e, n, &ctx.opts, ctx.x_max)?;
        worst(&mut repro, (r.lhs - r.rhs).norm());
    }
    suites.push(suite("parseval", parseval, grid));
    suites.push(suite("model-round-trip", round_trip, grid));
    suites.push(suite("intertwining", intertwine, grid));
    suites.push(suite("reproducing-property", repro, grid));

    if kernel_k.closed_form.is_some() {
        let mut agree = 0.0;
        for k in 0..16 {
            let z = Complex64::from_polar(0.8 * kernel_k.radius, 0.4 * k as f64);
            let x = t * (k as f64 + 0.5) / 16.0;
            let a = kernel_eval(&kernel_k, z, lambda, x, &ctx.opts)?;
            let b = kernel_closed_form(&kernel_k, z, lambda, x, &ctx.opts)?;
            worst(&mut agree, (a - b).norm());
        }
        suites.push(suite("kernel-closed-form", agree, grid));
    }

    let (mut strong, mut weak) = (0.0, 0.0);
    for f in &fs {
        for theta in [0.7, std::f64::consts::PI, 5.3] {
            let c = verify_circular_symmetry(&ctx.s, t, theta, f, ctx.x_max)?;
            worst(&mut strong, c.strong);
            worst(&mut weak, c.weak);
        }
    }
    suites.push(suite("circular-symmetry", strong, grid));
    suites.push(suite("circular-symmetry-weak", weak, grid));

    let w = Complex64::from_polar(0.5 * kernel_k.radius, -1.1);
    let eig = verify_adjoint_eigenvector(&ctx.s, t, w, &StepFunction::indicator(0.0, t), &ctx.opts, ctx.x_max)?;
    suites.push(suite("adjoint-eigenvector", eig.residual, grid));

    let gap = range_gap(&ctx.s, t, (ctx.span as f64 * t).min(8.0 * t), ctx.x_max)?;
    suites.push(suite("range-gap", (1.0 - gap).max(0.0), 1e-9));

    let mut bracket = 0.0;
    for f in &fs {
        for order in 0..=6 {
            if order as f64 * t > ctx.x_max {
                break;
            }
            let a = bracket_quadratic_form(&ctx.s, t, order, f, ctx.x_max)?;
            let b = bracket_integral(&ctx.s, t, order, f)?;
            worst(&mut bracket, (a - b).abs());
        }
    }
    suites.push(suite("bracket-agreement", bracket, grid));

    let passed = suites.iter().all(|s| s.pass);
    Ok(VerifyReport {
        symbol: ctx.s.to_string(),
        t,
        x_max: ctx.x_max,
        h: ctx.h,
        seed: cfg.seed,
        samples: cfg.samples,
        suites,
        passed,
    })
}
