//! Run configuration: defaults, `key = value` files with `[section]`
//! headers, and command-line overrides.

use std::fmt::Write as _;
use std::path::Path;

use ini::Ini;
use rgfp::params::ModelParams;
use rgfp::quadrature::QuadConfig;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(CliError::Config(format!("format must be csv or json, got {s:?}"))),
        }
    }
    fn name(&self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: u32,
    pub n: u32,
    pub eps: f64,
    pub gamma: f64,
    pub s: f64,
    pub tol: f64,
    pub max_panels: usize,
    pub grid_density: usize,
    pub h_min: i32,
    pub h_max: i32,
    pub x_min: f64,
    pub x_max: f64,
    pub fit_min: Option<f64>,
    pub fit_max: Option<f64>,
    pub format: Format,
    pub path: Option<String>,
    pub precision: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 1,
            n: 4,
            eps: 0.001,
            gamma: 2.0,
            s: 2.0,
            tol: 1e-10,
            max_panels: 20_000,
            grid_density: 8,
            h_min: -30,
            h_max: 8,
            x_min: 0.5,
            x_max: 50.0,
            fit_min: None,
            fit_max: None,
            format: Format::Csv,
            path: None,
            precision: None,
        }
    }
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub d: Option<u32>,
    pub n: Option<u32>,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub s: Option<f64>,
    pub tol: Option<f64>,
    pub max_panels: Option<usize>,
    pub grid_density: Option<usize>,
    pub h_min: Option<i32>,
    pub h_max: Option<i32>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub fit_min: Option<f64>,
    pub fit_max: Option<f64>,
    pub format: Option<String>,
    pub output: Option<String>,
    pub precision: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T, CliError> {
    v.trim().parse().map_err(|_| CliError::Config(format!("[{section}] {key} = {v:?} is not valid")))
}

fn optional<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<Option<T>, CliError> {
    if v.trim().is_empty() {
        Ok(None)
    } else {
        parse_value(section, key, v).map(Some)
    }
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        let mut c = Self::default();
        for (section, props) in &ini {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(CliError::Config(format!("key {k:?} outside any section")));
                }
                continue;
            };
            for (key, v) in props.iter() {
                match (section, key) {
                    ("model", "d") => c.d = parse_value(section, key, v)?,
                    ("model", "N") => c.n = parse_value(section, key, v)?,
                    ("model", "eps") => c.eps = parse_value(section, key, v)?,
                    ("model", "gamma") => c.gamma = parse_value(section, key, v)?,
                    ("model", "s") => c.s = parse_value(section, key, v)?,
                    ("quadrature", "tol") => c.tol = parse_value(section, key, v)?,
                    ("quadrature", "max_panels") => c.max_panels = parse_value(section, key, v)?,
                    ("quadrature", "grid_density") => c.grid_density = parse_value(section, key, v)?,
                    ("windows", "h_min") => c.h_min = parse_value(section, key, v)?,
                    ("windows", "h_max") => c.h_max = parse_value(section, key, v)?,
                    ("windows", "x_min") => c.x_min = parse_value(section, key, v)?,
                    ("windows", "x_max") => c.x_max = parse_value(section, key, v)?,
                    ("windows", "fit_min") => c.fit_min = optional(section, key, v)?,
                    ("windows", "fit_max") => c.fit_max = optional(section, key, v)?,
                    ("output", "format") => c.format = Format::parse(v.trim())?,
                    ("output", "path") => c.path = optional(section, key, v)?,
                    ("output", "precision") => c.precision = optional(section, key, v)?,
                    _ => return Err(CliError::Config(format!("unknown key [{section}] {key}"))),
                }
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = o.$f { self.$f = v; })* };
        }
        set!(d, n, eps, gamma, s, tol, max_panels, grid_density, h_min, h_max, x_min, x_max);
        if o.fit_min.is_some() {
            self.fit_min = o.fit_min;
        }
        if o.fit_max.is_some() {
            self.fit_max = o.fit_max;
        }
        if let Some(f) = &o.format {
            self.format = Format::parse(f)?;
        }
        if o.output.is_some() {
            self.path = o.output.clone();
        }
        if o.precision.is_some() {
            self.precision = o.precision;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<ModelParams, CliError> {
        let params = ModelParams::new(self.d, self.n, self.eps, self.gamma, self.s)?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(CliError::Config(format!("tol = {} must lie in (0, 1)", self.tol)));
        }
        if self.max_panels == 0 || self.grid_density == 0 {
            return Err(CliError::Config("max_panels and grid_density must be positive".into()));
        }
        if self.h_min >= self.h_max {
            return Err(CliError::Config(format!("h_min = {} must be below h_max = {}", self.h_min, self.h_max)));
        }
        if !(self.x_min > 0.0 && self.x_max > self.x_min) {
            return Err(CliError::Config(format!("need 0 < x_min < x_max, got {} and {}", self.x_min, self.x_max)));
        }
        if let (Some(a), Some(b)) = (self.fit_min, self.fit_max) {
            if !(a > 0.0 && b > a) {
                return Err(CliError::Config(format!("need 0 < fit_min < fit_max, got {a} and {b}")));
            }
        }
        if self.precision == Some(0) || self.precision.is_some_and(|p| p > 17) {
            return Err(CliError::Config("precision must lie in 1..=17".into()));
        }
        Ok(params)
    }

    pub fn precision(&self) -> usize {
        self.precision.unwrap_or(match self.format {
            Format::Json => 12,
            Format::Csv => 9,
        })
    }

    pub fn quad(&self) -> QuadConfig {
        QuadConfig { abs_tol: 0.0, rel_tol: self.tol, max_panels: self.max_panels }
    }

    /// Fit window, filling missing ends from `default`.
    pub fn fit_window(&self, default: (f64, f64)) -> (f64, f64) {
        (self.fit_min.unwrap_or(default.0), self.fit_max.unwrap_or(default.1))
    }

    /// Canonical text form, readable back by [`RunConfig::from_str`].
    pub fn dump(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut s = String::new();
        let _ = writeln!(s, "[model]\nd = {}\nN = {}\neps = {:?}\ngamma = {:?}\ns = {:?}\n", self.d, self.n, self.eps, self.gamma, self.s);
        let _ = writeln!(
            s,
            "[quadrature]\ntol = {:?}\nmax_panels = {}\ngrid_density = {}\n",
            self.tol, self.max_panels, self.grid_density
        );
        let _ = writeln!(
            s,
            "[windows]\nh_min = {}\nh_max = {}\nx_min = {:?}\nx_max = {:?}\nfit_min = {}\nfit_max = {}\n",
            self.h_min,
            self.h_max,
            self.x_min,
            self.x_max,
            opt(self.fit_min),
            opt(self.fit_max)
        );
        let _ = writeln!(
            s,
            "[output]\nformat = {}\npath = {}\nprecision = {}",
            self.format.name(),
            self.path.clone().unwrap_or_default(),
            self.precision.map(|p| p.to_string()).unwrap_or_default()
        );
        s
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::dump`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.dump().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
