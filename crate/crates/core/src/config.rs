//! Run configuration shared by every command: a TOML file, overridden by
//! flags.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}` (json|csv)"))),
        }
    }
}

/// Named tolerances; any of them can be set with `--tol name=value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Kernel and pre-image tail bound.
    pub series: f64,
    /// Class predicates.
    pub class: f64,
    /// Disc guard: evaluate only inside radius·(1 − margin).
    pub margin: f64,
    /// Suites whose error shrinks with the cell width.
    pub grid: f64,
    /// Suites that hold up to rounding.
    pub exact: f64,
    /// Inverse-weight threshold for the dual operators.
    pub invertibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            series: 1e-12,
            class: 1e-9,
            margin: 0.05,
            grid: 1e-6,
            exact: 1e-12,
            invertibility: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "series" => &mut self.series,
            "class" => &mut self.class,
            "margin" => &mut self.margin,
            "grid" => &mut self.grid,
            "exact" => &mut self.exact,
            "invertibility" => &mut self.invertibility,
            other => return Err(Error::InvalidArgument(format!("unknown tolerance `{other}`"))),
        };
        *slot = value;
        Ok(())
    }

    /// Parses `name=value`.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected name=value, got `{assignment}`")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad tolerance value `{value}`")))?;
        self.set(name.trim(), v)
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("class", self.class),
            ("exact", self.exact),
            ("grid", self.grid),
            ("invertibility", self.invertibility),
            ("margin", self.margin),
            ("series", self.series),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub phi: String,
    pub t: f64,
    /// Window end; 64·t when unset.
    pub x_max: Option<f64>,
    /// Cell width of generated test functions; t/256 when unset.
    pub h: Option<f64>,
    /// Cap on powers for the spectral sequences.
    pub n_max: usize,
    /// Highest order of δ_n examined by `classify`.
    pub order: usize,
    /// Require h to divide t exactly.
    pub exact_grid: bool,
    pub tol: Tolerances,
    pub seed: u64,
    /// Random test functions per verification suite.
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            phi: "const:1".into(),
            t: 1.0,
            x_max: None,
            h: None,
            n_max: crate::spectral::DEFAULT_N_MAX,
            order: crate::classify::DEFAULT_ORDER,
            exact_grid: false,
            tol: Tolerances::default(),
            seed: 0,
            samples: 5,
            out: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn x_max(&self) -> f64 {
        self.x_max.unwrap_or(64.0 * self.t)
    }

    pub fn h(&self) -> f64 {
        self.h.unwrap_or(self.t / 256.0)
    }

    pub fn symbol(&self) -> Result<Symbol> {
        Symbol::from_spec(&self.phi, self.x_max())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {}", self.t)));
        }
        if !(self.x_max() >= self.t && self.x_max().is_finite()) {
            return Err(Error::InvalidArgument(format!("X_max must be at least t, got {}", self.x_max())));
        }
        let h = self.h();
        if !(h > 0.0 && h <= self.t) {
            return Err(Error::InvalidArgument(format!("h must lie in (0, t], got {h}")));
        }
        if self.exact_grid && (self.t / h).fract() != 0.0 {
            return Err(Error::InvalidArgument(format!("h = {h} does not divide t = {}", self.t)));
        }
        for (name, v) in self.tol.as_map() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("tolerance `{name}` must be positive, got {v}")));
            }
        }
        if self.tol.margin >= 1.0 {
            return Err(Error::InvalidArgument("margin must be below 1".into()));
        }
        if self.n_max == 0 || self.order == 0 || self.samples == 0 {
            return Err(Error::InvalidArgument("n_max, order and samples must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.x_max(), 64.0);
        assert_eq!(c.h(), 1.0 / 256.0);
        c.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_and_partial_files() {
        let c = RunConfig::from_toml("phi = \"expr:x+1\"\nt = 0.5\n[tol]\ngrid = 1e-7\n").unwrap();
        assert_eq!(c.phi, "expr:x+1");
        assert_eq!(c.tol.grid, 1e-7);
        assert_eq!(c.tol.class, 1e-9);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn tolerance_assignments() {
        let mut t = Tolerances::default();
        t.apply("series=1e-10").unwrap();
        assert_eq!(t.series, 1e-10);
        assert!(t.apply("nope=1").is_err());
        assert!(t.apply("series").is_err());
        assert!(t.apply("series=abc").is_err());
    }

    #[test]
    fn validation() {
        let mut c = RunConfig { exact_grid: true, h: Some(0.3), ..RunConfig::default() };
        assert!(c.validate().is_err());
        c.h = Some(0.25);
        c.validate().unwrap();
        c.tol.grid = -1.0;
        assert!(c.validate().is_err());
    }
}
