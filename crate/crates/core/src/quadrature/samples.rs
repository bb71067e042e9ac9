use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleMeta {
    pub d: u32,
    pub eps: f64,
    pub gamma: f64,
    pub scale_tag: String,
    pub profile_id: String,
}

/// A radial function sampled on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialSamples {
    radii: Vec<f64>,
    values: Vec<f64>,
    meta: SampleMeta,
}

impl RadialSamples {
    pub fn new(radii: Vec<f64>, values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        if radii.len() != values.len() {
            return Err(Error::OutOfRange(format!("{} radii for {} values", radii.len(), values.len())));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::OutOfRange("radii must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("sample values must be finite".into()));
        }
        Ok(Self { radii, values, meta })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn meta(&self) -> &SampleMeta {
        &self.meta
    }

    /// CSV with `#` metadata lines, a `r,value` header and `digits`
    /// significant digits.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::new();
        let m = &self.meta;
        let _ = writeln!(out, "# d={}", m.d);
        let _ = writeln!(out, "# eps={}", m.eps);
        let _ = writeln!(out, "# gamma={}", m.gamma);
        let _ = writeln!(out, "# scale={}", m.scale_tag);
        let _ = writeln!(out, "# profile={}", m.profile_id);
        out.push_str("r,value\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", sci(*r, digits), sci(*v, digits));
        }
        out
    }
}

/// Scientific notation with `digits` significant digits.
pub(crate) fn sci(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    sci(x, digits).parse().unwrap_or(x)
}

/// Logarithmic grid from `r_min` to `r_max` inclusive with `per_decade`
/// points per decade.
pub fn log_grid(r_min: f64, r_max: f64, per_decade: usize) -> Vec<f64> {
    if !(r_min > 0.0 && r_max >= r_min) || per_decade == 0 {
        return Vec::new();
    }
    let decades = (r_max / r_min).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    (0..=n).map(|i| r_min * 10f64.powf(decades * i as f64 / n as f64)).collect()
}
