//! The operators S_t, S_t*, the Cauchy dual S_t′, L_t = S_t′* and L_t*
//! acting on step functions.
//!
//! Translation is exact breakpoint arithmetic. The multiplicative weight is
//! evaluated once per cell at the cell midpoint; for the right-shifting
//! operators the midpoint is taken on the source cell, for the left-shifting
//! ones on the output cell, so both are expressed through the base point `y`
//! of the growth ratio φ(y + nt)/φ(y). Powers use the closed-form n-step
//! weight rather than repeated application.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::l2grid::StepFunction;
use crate::sampling::{self, Extremum, Goal};
use crate::symbol::{check_left_invertible, Symbol, DEFAULT_INVERTIBILITY_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// S_t f(x) = sqrt(φ(x)/φ(x−t)) f(x−t)
    S,
    /// S_t* f(x) = sqrt(φ(x+t)/φ(x)) f(x+t)
    SAdjoint,
    /// S_t′ f(x) = sqrt(φ(x−t)/φ(x)) f(x−t); the same operator as L_t*
    SDual,
    /// L_t f(x) = sqrt(φ(x)/φ(x+t)) f(x+t)
    L,
    /// L_t* f(x) = sqrt(φ(x−t)/φ(x)) f(x−t)
    LAdjoint,
}

impl OperatorKind {
    pub fn shifts_right(self) -> bool {
        matches!(self, OperatorKind::S | OperatorKind::SDual | OperatorKind::LAdjoint)
    }

    /// Whether the weight is the growth ratio (true) or its reciprocal.
    fn grows(self) -> bool {
        matches!(self, OperatorKind::S | OperatorKind::SAdjoint)
    }

    fn needs_left_invertibility(self) -> bool {
        matches!(self, OperatorKind::SDual | OperatorKind::L | OperatorKind::LAdjoint)
    }

    fn injective(self) -> bool {
        self.shifts_right()
    }
}

/// Output of an application together with whether mass left the window.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub value: StepFunction,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorHandle {
    symbol: Symbol,
    t: f64,
    kind: OperatorKind,
    x_max: f64,
}

impl OperatorHandle {
    /// Builds a handle acting on `[0, x_max]`. Dual kinds require
    /// inf φ(x+t)/φ(x) > 1e-8 on that window.
    pub fn new(symbol: Symbol, t: f64, kind: OperatorKind, x_max: f64) -> Result<OperatorHandle> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        if !(x_max >= t && x_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("x_max must be at least t, got {x_max}")));
        }
        if kind.needs_left_invertibility() {
            let li = check_left_invertible(&symbol, t, x_max, DEFAULT_INVERTIBILITY_THRESHOLD)?;
            if !li.ok {
                return Err(Error::NotLeftInvertible {
                    inf: li.inf_estimate,
                    threshold: DEFAULT_INVERTIBILITY_THRESHOLD,
                });
            }
        }
        Ok(OperatorHandle { symbol, t, kind, x_max })
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn with_kind(&self, kind: OperatorKind) -> Result<OperatorHandle> {
        OperatorHandle::new(self.symbol.clone(), self.t, kind, self.x_max)
    }

    /// n-step weight at base point `y` (see module docs).
    fn weight(&self, n: usize, y: f64) -> Result<f64> {
        let g = self.symbol.growth(y, n as f64 * self.t)?;
        Ok(if self.kind.grows() { g.sqrt() } else { 1.0 / g.sqrt() })
    }

    pub fn apply(&self, f: &StepFunction) -> Result<StepFunction> {
        Ok(self.apply_power_tracked(1, f)?.value)
    }

    pub fn apply_tracked(&self, f: &StepFunction) -> Result<Applied> {
        self.apply_power_tracked(1, f)
    }

    pub fn apply_power(&self, n: usize, f: &StepFunction) -> Result<StepFunction> {
        Ok(self.apply_power_tracked(n, f)?.value)
    }

    pub fn apply_power_tracked(&self, n: usize, f: &StepFunction) -> Result<Applied> {
        let (input, cut_in) = f.truncate(self.x_max);
        if n == 0 {
            return Ok(Applied { value: input, truncated: cut_in });
        }
        let shift = n as f64 * self.t;
        let to_complex = |w: f64| Complex64::new(w, 0.0);
        if self.kind.shifts_right() {
            let weighted = input.weight_midpoints(|y| self.weight(n, y).map(to_complex))?;
            let (value, cut_out) = weighted.translate(shift).truncate(self.x_max);
            Ok(Applied { value, truncated: cut_in || cut_out })
        } else {
            let moved = input.translate(-shift);
            let value = moved.weight_midpoints(|y| self.weight(n, y).map(to_complex))?;
            Ok(Applied { value, truncated: cut_in })
        }
    }

    /// ‖T^n‖ as the sampled ess sup of the n-step weight over base points
    /// in `[0, x_max]`, with its location.
    pub fn operator_norm(&self, n: usize) -> Result<Extremum> {
        if n == 0 {
            return Err(Error::InvalidArgument("operator_norm needs n >= 1".into()));
        }
        let goal = if self.kind.grows() { Goal::Max } else { Goal::Min };
        self.weight_extremum(n, goal)
    }

    /// m(T^n) = inf ‖T^n f‖ over unit f: the sampled ess inf of the n-step
    /// weight for injective kinds, 0 for S_t* and L_t (their kernel is E).
    pub fn lower_bound_m(&self, n: usize) -> Result<Extremum> {
        if n == 0 {
            return Err(Error::InvalidArgument("lower_bound_m needs n >= 1".into()));
        }
        if !self.kind.injective() {
            return Ok(Extremum { value: 0.0, arg: 0.0, at_window_edge: false });
        }
        let goal = if self.kind.grows() { Goal::Min } else { Goal::Max };
        self.weight_extremum(n, goal)
    }

    /// Extremum of the growth ratio for `goal`, mapped through the weight.
    fn weight_extremum(&self, n: usize, goal: Goal) -> Result<Extremum> {
        let shift = n as f64 * self.t;
        let extra = sampling::kink_points(&self.symbol.kinks(), self.t, n, self.x_max);
        let g = sampling::extremum(|y| self.symbol.growth(y, shift), 0.0, self.x_max, goal, &extra)?;
        let value = if self.kind.grows() { g.value.sqrt() } else { 1.0 / g.value.sqrt() };
        Ok(Extremum { value, ..g })
    }
}
