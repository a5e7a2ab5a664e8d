//! Symbols φ and the weight functions φ_t they generate.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sampling;

/// Built-in symbol families with known kernel closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Builtin {
    /// φ(x) = c
    Constant { c: f64 },
    /// φ(x) = x + 1
    Affine,
    /// φ(x) = 1 / (x + 1)
    Reciprocal,
    /// φ(x) = x + 1 on [0, 1], 2 afterwards
    PiecewiseCap,
    /// φ(x) = a^x
    Exponential { a: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolDef {
    Builtin(Builtin),
    Expr(Expr),
}

/// A positive continuous function on the half line.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    def: SymbolDef,
    /// Upper end of the interval on which positivity has been verified.
    domain_hint: f64,
}

/// Serialized as its spec string, e.g. `exp:a=2`.
impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

pub const DEFAULT_POSITIVITY_SAMPLES: usize = 10_000;

impl Symbol {
    pub fn builtin(b: Builtin) -> Result<Symbol> {
        match b {
            Builtin::Constant { c } if !(c > 0.0 && c.is_finite()) => {
                return Err(Error::NonPositiveSymbol { x: 0.0, value: c })
            }
            Builtin::Exponential { a } if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::InvalidArgument(format!("exponential base must be positive, got {a}")))
            }
            _ => {}
        }
        Ok(Symbol {
            def: SymbolDef::Builtin(b),
            domain_hint: f64::INFINITY,
        })
    }

    pub fn constant(c: f64) -> Symbol {
        Symbol::builtin(Builtin::Constant { c }).expect("positive constant")
    }

    pub fn affine() -> Symbol {
        Symbol::builtin(Builtin::Affine).unwrap()
    }

    pub fn reciprocal() -> Symbol {
        Symbol::builtin(Builtin::Reciprocal).unwrap()
    }

    pub fn piecewise_cap() -> Symbol {
        Symbol::builtin(Builtin::PiecewiseCap).unwrap()
    }

    pub fn exponential(a: f64) -> Symbol {
        Symbol::builtin(Builtin::Exponential { a }).expect("positive base")
    }

    /// An expression symbol whose positivity has been checked on `[0, x_max]`.
    pub fn from_expr(expr: Expr, x_max: f64) -> Result<Symbol> {
        let mut s = Symbol {
            def: SymbolDef::Expr(expr),
            domain_hint: 0.0,
        };
        s.validate(x_max, DEFAULT_POSITIVITY_SAMPLES)?;
        Ok(s)
    }

    pub fn parse_expr(text: &str, x_max: f64) -> Result<Symbol> {
        Symbol::from_expr(Expr::parse(text)?, x_max)
    }

    /// Parses a command-line symbol spec:
    ///
    /// `const:<c>`, `const:c=<c>`, `affine`, `reciprocal`, `cap`,
    /// `exp:a=<a>`, `exp2x`, or `expr:<expression in x>`.
    pub fn from_spec(spec: &str, x_max: f64) -> Result<Symbol> {
        let spec = spec.trim();
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h.trim(), Some(r.trim())),
            None => (spec, None),
        };
        let param = |name: &str, rest: Option<&str>| -> Result<f64> {
            let raw = rest.ok_or_else(|| Error::InvalidArgument(format!("`{head}` needs a parameter `{name}`")))?;
            let raw = raw
                .strip_prefix(name)
                .and_then(|r| r.trim_start().strip_prefix('='))
                .unwrap_or(raw)
                .trim();
            raw.parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad value `{raw}` for `{name}`")))
        };
        match head {
            "const" | "constant" => Symbol::builtin(Builtin::Constant { c: param("c", rest)? }),
            "affine" => Symbol::builtin(Builtin::Affine),
            "reciprocal" | "recip" => Symbol::builtin(Builtin::Reciprocal),
            "cap" | "piecewise-cap" => Symbol::builtin(Builtin::PiecewiseCap),
            "exp" => Symbol::builtin(Builtin::Exponential { a: param("a", rest)? }),
            "exp2x" => Symbol::builtin(Builtin::Exponential { a: 2f64.exp() }),
            "expr" => Symbol::parse_expr(rest.unwrap_or(""), x_max),
            _ => Err(Error::InvalidArgument(format!("unknown symbol spec `{spec}`"))),
        }
    }

    pub fn def(&self) -> &SymbolDef {
        &self.def
    }

    pub fn domain_hint(&self) -> f64 {
        self.domain_hint
    }

    /// The built-in family this symbol coincides with, recognising the
    /// expression forms `c`, `x+1`, `1/(x+1)`, `exp(k*x)` and `a^x`.
    pub fn family(&self) -> Option<Builtin> {
        match &self.def {
            SymbolDef::Builtin(b) => Some(*b),
            SymbolDef::Expr(e) => recognize(e),
        }
    }

    /// Breakpoints where the symbol is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self.def {
            SymbolDef::Builtin(Builtin::PiecewiseCap) => vec![1.0],
            _ => Vec::new(),
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.def {
            SymbolDef::Builtin(b) => match *b {
                Builtin::Constant { c } => c,
                Builtin::Affine => x + 1.0,
                Builtin::Reciprocal => 1.0 / (x + 1.0),
                Builtin::PiecewiseCap => {
                    if x <= 1.0 {
                        x + 1.0
                    } else {
                        2.0
                    }
                }
                Builtin::Exponential { a } => a.powf(x),
            },
            SymbolDef::Expr(e) => e.eval(x),
        }
    }

    /// φ(x), failing if the value is not a positive finite number.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.raw(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositiveSymbol { x, value: v })
        }
    }

    /// φ(num) / φ(den). Exact for constants and computed as a single power
    /// for exponentials, so that large arguments do not overflow.
    pub fn ratio(&self, num: f64, den: f64) -> Result<f64> {
        match self.def {
            SymbolDef::Builtin(Builtin::Constant { .. }) => Ok(1.0),
            SymbolDef::Builtin(Builtin::Exponential { a }) => Ok((a.ln() * (num - den)).exp()),
            _ => Ok(self.eval(num)? / self.eval(den)?),
        }
    }

    /// φ(x + shift) / φ(x), the squared `k`-step weight of S_t with `shift = k t`.
    pub fn growth(&self, x: f64, shift: f64) -> Result<f64> {
        match self.def {
            SymbolDef::Builtin(Builtin::Exponential { a }) => Ok((a.ln() * shift).exp()),
            _ => self.ratio(x + shift, x),
        }
    }

    /// Checks positivity at `samples + 1` equispaced points of `[0, x_max]`,
    /// refining near any value below 1e-6, and checks that no denominator
    /// vanishes. Records `x_max` as the verified domain on success.
    pub fn validate(&mut self, x_max: f64, samples: usize) -> Result<()> {
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("x_max must be positive, got {x_max}")));
        }
        let grid = sampling::uniform(0.0, x_max, samples);
        let step = x_max / samples as f64;
        for &x in &grid {
            self.check_point(x)?;
            if self.raw(x) < 1e-6 {
                let lo = (x - step).max(0.0);
                let hi = (x + step).min(x_max);
                let (y, v) = sampling::golden(&|y| Ok(self.raw(y)), lo, hi, sampling::Goal::Min)?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::NonPositiveSymbol { x: y, value: v });
                }
            }
        }
        if let SymbolDef::Expr(e) = &self.def {
            for d in e.denominators() {
                for &x in &grid {
                    let v = d.eval(x);
                    if v == 0.0 || !v.is_finite() {
                        return Err(Error::NonPositiveSymbol { x, value: self.raw(x) });
                    }
                }
            }
        }
        self.domain_hint = self.domain_hint.max(x_max);
        Ok(())
    }

    fn check_point(&self, x: f64) -> Result<()> {
        self.eval(x).map(|_| ())
    }
}

fn recognize(e: &Expr) -> Option<Builtin> {
    use Expr::*;
    let is_num = |e: &Expr, v: f64| matches!(e, Num(n) if *n == v);
    let is_x_plus_1 = |e: &Expr| match e {
        Add(a, b) => (matches!(**a, X) && is_num(b, 1.0)) || (is_num(a, 1.0) && matches!(**b, X)),
        _ => false,
    };
    match e {
        Num(c) if *c > 0.0 => Some(Builtin::Constant { c: *c }),
        e if is_x_plus_1(e) => Some(Builtin::Affine),
        Div(a, b) if is_num(a, 1.0) && is_x_plus_1(b) => Some(Builtin::Reciprocal),
        Exp(arg) => match &**arg {
            X => Some(Builtin::Exponential { a: std::f64::consts::E }),
            Mul(a, b) => match (&**a, &**b) {
                (Num(k), X) | (X, Num(k)) => Some(Builtin::Exponential { a: k.exp() }),
                _ => None,
            },
            _ => None,
        },
        Pow(a, b) => match (&**a, &**b) {
            (Num(base), X) if *base > 0.0 => Some(Builtin::Exponential { a: *base }),
            _ => None,
        },
        _ => None,
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.def {
            SymbolDef::Builtin(b) => match b {
                Builtin::Constant { c } => write!(f, "const:{c}"),
                Builtin::Affine => write!(f, "affine"),
                Builtin::Reciprocal => write!(f, "reciprocal"),
                Builtin::PiecewiseCap => write!(f, "cap"),
                Builtin::Exponential { a } => write!(f, "exp:a={a}"),
            },
            SymbolDef::Expr(e) => write!(f, "expr:{e}"),
        }
    }
}

/// φ_t: zero on [0, t), sqrt(φ(x)/φ(x−t)) afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    pub base: Symbol,
    pub t: f64,
}

impl WeightFunction {
    pub fn new(base: Symbol, t: f64) -> Result<WeightFunction> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        Ok(WeightFunction { base, t })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x < self.t {
            return Ok(0.0);
        }
        Ok(self.base.growth(x - self.t, self.t)?.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeftInvertibility {
    pub ok: bool,
    pub inf_estimate: f64,
    pub arg_inf: f64,
}

pub const DEFAULT_INVERTIBILITY_THRESHOLD: f64 = 1e-8;

/// Estimates inf over `[0, x_max]` of φ(x+t)/φ(x); left invertible iff it
/// exceeds `threshold`.
pub fn check_left_invertible(s: &Symbol, t: f64, x_max: f64, threshold: f64) -> Result<LeftInvertibility> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let ext = sampling::extremum(
        |x| s.growth(x, t),
        0.0,
        x_max,
        sampling::Goal::Min,
        &sampling::kink_points(&s.kinks(), t, 1, x_max),
    )?;
    Ok(LeftInvertibility {
        ok: ext.value > threshold,
        inf_estimate: ext.value,
        arg_inf: ext.arg,
    })
}

/// Sampled sup of φ_t on `[t, x_max]`, returned with its location.
pub fn weight_sup(w: &WeightFunction, x_max: f64) -> Result<sampling::Extremum> {
    let t = w.t;
    let ext = sampling::extremum(
        |y| w.base.growth(y, t).map(f64::sqrt),
        0.0,
        (x_max - t).max(0.0),
        sampling::Goal::Max,
        &sampling::kink_points(&w.base.kinks(), t, 1, x_max),
    )?;
    Ok(sampling::Extremum { arg: ext.arg + t, ..ext })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        assert_eq!(Symbol::constant(1.0).eval(7.3).unwrap(), 1.0);
        let cap = Symbol::piecewise_cap();
        assert_eq!(cap.eval(0.5).unwrap(), 1.5);
        assert_eq!(cap.eval(3.0).unwrap(), 2.0);
        assert_eq!(Symbol::exponential(2.0).eval(3.0).unwrap(), 8.0);
    }

    #[test]
    fn spec_strings() {
        let s = Symbol::from_spec("exp:a=2", 64.0).unwrap();
        assert_eq!(s.family(), Some(Builtin::Exponential { a: 2.0 }));
        assert_eq!(Symbol::from_spec("const:1", 64.0).unwrap().eval(3.0).unwrap(), 1.0);
        assert_eq!(Symbol::from_spec("const:c=2.5", 64.0).unwrap().eval(3.0).unwrap(), 2.5);
        let e2 = Symbol::from_spec("exp2x", 64.0).unwrap();
        assert!((e2.eval(1.0).unwrap() - 2f64.exp()).abs() < 1e-12);
        let x1 = Symbol::from_spec("expr:x+1", 64.0).unwrap();
        assert_eq!(x1.family(), Some(Builtin::Affine));
        assert_eq!(x1.eval(2.0).unwrap(), 3.0);
        assert_eq!(
            Symbol::from_spec("expr:1/(x+1)", 64.0).unwrap().family(),
            Some(Builtin::Reciprocal)
        );
        assert_eq!(
            Symbol::from_spec("expr:exp(2*x)", 64.0).unwrap().family(),
            Some(Builtin::Exponential { a: 2f64.exp() })
        );
        assert!(Symbol::from_spec("bogus", 64.0).is_err());
        assert!(Symbol::from_spec("const:-1", 64.0).is_err());
    }

    #[test]
    fn display_round_trips_through_spec() {
        for spec in ["const:2", "affine", "reciprocal", "cap", "exp:a=3", "expr:x^2+1"] {
            let s = Symbol::from_spec(spec, 16.0).unwrap();
            let back = Symbol::from_spec(&s.to_string(), 16.0).unwrap();
            assert_eq!(back.def(), s.def());
        }
    }

    #[test]
    fn non_positive_expressions_are_rejected() {
        match Symbol::parse_expr("x-1", 10.0) {
            Err(Error::NonPositiveSymbol { x, .. }) => assert_eq!(x, 0.0),
            other => panic!("{other:?}"),
        }
        // dips below zero only on a window much narrower than the grid
        assert!(Symbol::parse_expr("(x-5.00005)^2-0.000000000001", 10.0).is_err());
        assert!(Symbol::parse_expr("(x-5)^2", 10.0).is_err());
        assert!(Symbol::parse_expr("1/(x-2)^2", 10.0).is_err());
        let ok = Symbol::parse_expr("(x-5)^2+0.001", 10.0).unwrap();
        assert_eq!(ok.domain_hint(), 10.0);
        assert!(matches!(
            Symbol::constant(1.0).eval(f64::NAN),
            Ok(1.0)
        ));
        assert!(Symbol::parse_expr("log(x)", 1.0).is_err());
    }

    #[test]
    fn weight_examples() {
        let w = WeightFunction::new(Symbol::affine(), 1.0).unwrap();
        assert!((w.eval(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(w.eval(1.0).unwrap(), (Symbol::affine().eval(1.0).unwrap() / Symbol::affine().eval(0.0).unwrap()).sqrt());
        assert_eq!(w.eval(0.5).unwrap(), 0.0);
        for t in [0.25, 1.0, 3.0] {
            let w = WeightFunction::new(Symbol::exponential(2f64.exp()), t).unwrap();
            for x in [t, t + 0.3, 10.0, 200.0] {
                assert!((w.eval(x).unwrap() / t.exp() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn weight_is_exactly_zero_below_t() {
        let w = WeightFunction::new(Symbol::reciprocal(), 0.75).unwrap();
        for i in 0..75 {
            assert_eq!(w.eval(i as f64 * 0.01).unwrap().to_bits(), 0f64.to_bits());
        }
    }

    #[test]
    fn cocycle_identity() {
        let symbols = [
            Symbol::affine(),
            Symbol::reciprocal(),
            Symbol::piecewise_cap(),
            Symbol::exponential(3.0),
            Symbol::parse_expr("x^2+exp(-x)+1", 64.0).unwrap(),
        ];
        for s in &symbols {
            for (t, u) in [(0.5, 0.25), (1.0, 2.0), (0.3, 0.7)] {
                let wt = WeightFunction::new(s.clone(), t).unwrap();
                let wu = WeightFunction::new(s.clone(), u).unwrap();
                let wtu = WeightFunction::new(s.clone(), t + u).unwrap();
                for i in 0..400 {
                    let x = t + u + i as f64 * 0.037;
                    let lhs = wtu.eval(x).unwrap();
                    let rhs = wt.eval(x).unwrap() * wu.eval(x - t).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "{s} t={t} u={u} x={x}");
                }
            }
        }
    }

    #[test]
    fn left_invertibility_examples() {
        let c = check_left_invertible(&Symbol::constant(1.0), 1.0, 64.0, 1e-8).unwrap();
        assert!(c.ok);
        assert_eq!(c.inf_estimate, 1.0);
        let e = check_left_invertible(&Symbol::exponential(2f64.exp()), 1.0, 64.0, 1e-8).unwrap();
        assert!(e.ok);
        assert!((e.inf_estimate - 2f64.exp()).abs() < 1e-12);
        let r = check_left_invertible(&Symbol::reciprocal(), 1.0, 100.0, 1e-8).unwrap();
        assert!(r.ok);
        // (x+1)/(x+2) increases, so the infimum is at the left end
        assert!((r.inf_estimate - 0.5).abs() < 1e-12);
        assert_eq!(r.arg_inf, 0.0);
        let decaying = Symbol::parse_expr("exp(-x^2)", 10.0).unwrap();
        assert!(!check_left_invertible(&decaying, 1.0, 10.0, 1e-8).unwrap().ok);
    }

    #[test]
    fn weight_sup_of_affine() {
        let w = WeightFunction::new(Symbol::affine(), 1.0).unwrap();
        let sup = weight_sup(&w, 64.0).unwrap();
        assert!((sup.value - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(sup.arg, 1.0);
    }
}
