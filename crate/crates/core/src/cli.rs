//! `wts` command line: kernel, classify, spectrum and verify.
//!
//! Machine-readable output goes to `--out` when given, otherwise to stdout.
//! The human summary goes to stdout with `--out` and to stderr without it,
//! so piping stdout always yields clean JSON or CSV.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use crate::classify::classify;
use crate::config::{Format, RunConfig};
use crate::error::{Error, Result};
use crate::l2grid::fmt17;
use crate::model::{kernel_closed_form, kernel_series, DiagonalKernel, SeriesOptions};
use crate::spectral::summarize;
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "wts", version, about = "Weighted translation semigroups: kernels, spectra, classes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the diagonal kernel k(z, λ)(x) on a z grid.
    Kernel(KernelArgs),
    /// Classify the semigroup from the sign of δ_n.
    Classify(CommonArgs),
    /// Spectral radius, lower bound and annulus.
    Spectrum(CommonArgs),
    /// Run every invariant suite.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Symbol: const:<c>, affine, recip, cap, exp:a=<a>, exp2x or expr:<formula>.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub xmax: Option<f64>,
    /// Cell width of generated test functions.
    #[arg(long)]
    pub h: Option<f64>,
    /// Cap on powers (spectrum) and on the order (classify).
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Named tolerance, e.g. --tol class=1e-10; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["json", "csv"])]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// A single z, e.g. 0.5, 0.3-0.2i or 0.3,-0.2.
    #[arg(long, conflicts_with = "z_grid")]
    pub z: Option<String>,
    /// unit:<n>, circle:<r>:<n> or disc:<r>:<rings>:<rays>.
    #[arg(long)]
    pub z_grid: Option<String>,
    #[arg(long, default_value = "0")]
    pub lambda: String,
    /// Point of [0, t) at which the E-valued kernel is evaluated.
    #[arg(long, default_value_t = 0.0)]
    pub x: f64,
}

/// Builds the effective configuration: defaults, then the file, then flags.
pub fn resolve(args: &CommonArgs, command: &str) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &args.phi {
        cfg.phi = v.clone();
    }
    if let Some(v) = args.t {
        cfg.t = v;
    }
    if args.xmax.is_some() {
        cfg.x_max = args.xmax;
    }
    if args.h.is_some() {
        cfg.h = args.h;
    }
    if let Some(v) = args.nmax {
        if command == "classify" {
            cfg.order = v;
        } else {
            cfg.n_max = v;
        }
    }
    for a in &args.tol {
        cfg.tol.apply(a)?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse()?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::InvalidArgument(_)
        | Error::Format(_)
        | Error::OrderTooLarge { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` or `a,b`.
pub fn parse_complex(text: &str) -> Result<Complex64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidArgument(format!("cannot parse complex number `{text}`"));
    let num = |p: &str| p.parse::<f64>().map_err(|_| bad());
    if let Some((re, im)) = s.split_once(',') {
        return Ok(Complex64::new(num(re)?, num(im)?));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(&s)?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let imag = |p: &str| match p {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => num(p),
    };
    match split {
        Some(i) => Ok(Complex64::new(num(&body[..i])?, imag(&body[i..])?)),
        None => Ok(Complex64::new(0.0, imag(body)?)),
    }
}

/// Points of a z grid spec.
pub fn parse_grid(spec: &str) -> Result<Vec<Complex64>> {
    let bad = || Error::InvalidArgument(format!("bad z grid `{spec}` (unit:<n>, circle:<r>:<n>, disc:<r>:<rings>:<rays>)"));
    let parts: Vec<&str> = spec.split(':').collect();
    let count = |p: &str| p.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(bad);
    let real = |p: &str| p.parse::<f64>().ok().filter(|r| *r >= 0.0).ok_or_else(bad);
    let circle = |r: f64, n: usize| -> Vec<Complex64> {
        (0..n).map(|k| Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64)).collect()
    };
    match parts.as_slice() {
        ["unit", n] => Ok(circle(1.0, count(n)?)),
        ["circle", r, n] => Ok(circle(real(r)?, count(n)?)),
        ["disc", r, rings, rays] => {
            let (r, rings, rays) = (real(r)?, count(rings)?, count(rays)?);
            let mut pts = vec![Complex64::new(0.0, 0.0)];
            for i in 1..=rings {
                pts.extend(circle(r * i as f64 / rings as f64, rays));
            }
            Ok(pts)
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
struct KernelRow {
    z: Complex64,
    k: Complex64,
    closed_form: Option<Complex64>,
    terms: usize,
    tail_bound: f64,
}

#[derive(Debug, Serialize)]
struct KernelOutput {
    symbol: String,
    t: f64,
    x: f64,
    lambda: Complex64,
    radius: f64,
    closed_form: Option<crate::model::ClosedForm>,
    rows: Vec<KernelRow>,
}

/// Output of one command: the machine text plus the human summary.
pub struct Rendered {
    pub machine: String,
    pub summary: String,
    pub code: i32,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_kernel(args: &KernelArgs) -> Result<Rendered> {
    let cfg = resolve(&args.common, "kernel")?;
    let s = cfg.symbol()?;
    let k = DiagonalKernel::new(s.clone(), cfg.t, cfg.x_max())?;
    let lambda = parse_complex(&args.lambda)?;
    let zs = match (&args.z, &args.z_grid) {
        (Some(z), _) => vec![parse_complex(z)?],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => return Err(Error::InvalidArgument("give --z or --z-grid".into())),
    };
    let opts = SeriesOptions { tol: cfg.tol.series, margin: cfg.tol.margin, ..SeriesOptions::default() };
    let mut rows = Vec::with_capacity(zs.len());
    for z in zs {
        let v = kernel_series(&k, z, lambda, args.x, &opts)?;
        let closed = match k.closed_form {
            Some(_) => Some(kernel_closed_form(&k, z, lambda, args.x, &opts)?),
            None => None,
        };
        rows.push(KernelRow { z, k: v.value, closed_form: closed, terms: v.terms, tail_bound: v.tail_bound });
    }
    let machine = match cfg.format {
        Format::Json => to_json(&KernelOutput {
            symbol: s.to_string(),
            t: cfg.t,
            x: args.x,
            lambda,
            radius: k.radius,
            closed_form: k.closed_form,
            rows: rows.clone(),
        })?,
        Format::Csv => {
            let mut out = String::from("re_z,im_z,re_k,im_k\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", fmt17(r.z.re), fmt17(r.z.im), fmt17(r.k.re), fmt17(r.k.im));
            }
            out
        }
    };
    let mut summary = format!("kernel {s} t={} x={} lambda={lambda} radius={:.10}\n", cfg.t, args.x, k.radius);
    if let [r] = rows.as_slice() {
        let _ = writeln!(summary, "k = {:.10} ({} terms, tail ≤ {:.1e})", r.k, r.terms, r.tail_bound);
    } else {
        let _ = writeln!(summary, "{} grid points", rows.len());
    }
    Ok(Rendered { machine, summary, code: EXIT_OK })
}

pub fn cmd_classify(args: &CommonArgs) -> Result<Rendered> {
    let cfg = resolve(args, "classify")?;
    let s = cfg.symbol()?;
    let r = classify(&s, cfg.t, cfg.order, cfg.x_max(), cfg.tol.class)?;
    let machine = match cfg.format {
        Format::Json => to_json(&r)?,
        Format::Csv => {
            let mut out = String::from("label,holds,n,x,delta\n");
            for l in &r.labels {
                let _ = writeln!(out, "{l},true,,,");
            }
            for f in &r.failed {
                let w = f.witness;
                let _ = writeln!(out, "{},false,{},{},{}", f.label, w.n, fmt17(w.x), fmt17(w.delta));
            }
            out
        }
    };
    let mut summary = format!(
        "classify {s} t={} N={} tol={:e}\nheadline: {}\n",
        cfg.t,
        cfg.order,
        cfg.tol.class,
        r.headline.as_deref().unwrap_or("none")
    );
    let _ = writeln!(summary, "{:<48} {:>6} {:>4} {:>12} {:>14}", "label", "holds", "n", "x", "delta");
    for l in &r.labels {
        let _ = writeln!(summary, "{l:<48} {:>6}", "yes");
    }
    for f in &r.failed {
        let w = f.witness;
        let _ = writeln!(summary, "{:<48} {:>6} {:>4} {:>12.6} {:>14.6e}", f.label, "no", w.n, w.x, w.delta);
    }
    Ok(Rendered { machine, summary, code: EXIT_OK })
}

pub fn cmd_spectrum(args: &CommonArgs) -> Result<Rendered> {
    let cfg = resolve(args, "spectrum")?;
    let s = cfg.symbol()?;
    let n_max = cfg.n_max.min((cfg.x_max() / cfg.t).floor() as usize);
    let sum = summarize(&s, cfg.t, cfg.x_max(), n_max)?;
    let machine = match cfg.format {
        Format::Json => to_json(&sum)?,
        Format::Csv => {
            let mut out = String::from("curve,theta,re,im\n");
            let curves = [("outer", sum.annulus.outer), ("inner", sum.annulus.inner), ("model_disc", sum.model_disc_radius)];
            for (name, r) in curves {
                for k in 0..=256 {
                    let th = std::f64::consts::TAU * k as f64 / 256.0;
                    let z = Complex64::from_polar(r, th);
                    let _ = writeln!(out, "{name},{},{},{}", fmt17(th), fmt17(z.re), fmt17(z.im));
                }
            }
            out
        }
    };
    let mut summary = format!("spectrum {s} t={} X_max={} N_max={n_max}\n", cfg.t, cfg.x_max());
    let _ = writeln!(summary, "r = {:.10}  r1 = {:.10}  r(L) = {:.10}", sum.r, sum.r1, sum.r_l);
    let _ = writeln!(summary, "annulus [{:.10}, {:.10}]  model disc radius {:.10}", sum.annulus.inner, sum.annulus.outer, sum.model_disc_radius);
    let norms = &sum.sequence_diagnostics.norms;
    let _ = writeln!(summary, "arg-sup of the last norm: x = {}", norms.args.last().copied().unwrap_or(0.0));
    if sum.window_limited {
        let _ = writeln!(summary, "window_limited: an extremum sits at x = X_max");
    }
    if sum.non_convergent {
        let _ = writeln!(summary, "non_convergent: log-linear fit residual above threshold");
    }
    for n in &sum.notes {
        let _ = writeln!(summary, "note: {n}");
    }
    Ok(Rendered { machine, summary, code: EXIT_OK })
}

pub fn cmd_verify(args: &CommonArgs) -> Result<Rendered> {
    let cfg = resolve(args, "verify")?;
    let r = verify::run(&cfg)?;
    let machine = match cfg.format {
        Format::Json => to_json(&r)?,
        Format::Csv => {
            let mut out = String::from("suite,residual,tol,pass\n");
            for s in &r.suites {
                let _ = writeln!(out, "{},{},{},{}", s.name, fmt17(s.residual), fmt17(s.tol), s.pass);
            }
            out
        }
    };
    let mut summary = format!("verify {} t={} h={} seed={}\n", r.symbol, r.t, r.h, r.seed);
    for s in &r.suites {
        let _ = writeln!(
            summary,
            "{} {:<24} residual {:.3e} (tol {:.1e})",
            if s.pass { "PASS" } else { "FAIL" },
            s.name,
            s.residual,
            s.tol
        );
    }
    let code = match r.first_failure() {
        None => EXIT_OK,
        Some(f) => {
            let _ = writeln!(summary, "first failure: {} residual {:.3e} > {:.1e}", f.name, f.residual, f.tol);
            EXIT_VERIFY_FAILED
        }
    };
    Ok(Rendered { machine, summary, code })
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Kernel(k) => &k.common,
        Command::Classify(c) | Command::Spectrum(c) | Command::Verify(c) => c,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let rendered = match &cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Verify(a) => cmd_verify(a),
    };
    let r = match rendered {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let out = common(&cli.command).out.clone();
    let stdout = std::io::stdout();
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &r.machine) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            let _ = stdout.lock().write_all(r.summary.as_bytes());
        }
        None => {
            let _ = stdout.lock().write_all(r.machine.as_bytes());
            eprint!("{}", r.summary);
        }
    }
    r.code
}
