//! Gevrey-class radial cutoff.
//!
//! Built from the mollifier `m(t) = exp(-t^{-1/(s-1)})` as the smooth step
//! `χ(r) = m(1-u) / (m(1-u) + m(u))`, `u = 2r - 1`, which equals 1 for
//! `r ≤ 1/2` and 0 for `r ≥ 1`. Inside the band it is evaluated in the
//! form `1 / (1 + exp(g(u)))`, `g(u) = (1-u)^{-a} - u^{-a}`, `a = 1/(s-1)`,
//! which never forms the underflowing ratio of two tiny mollifier values.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffProfile {
    gevrey_s: f64,
    inner_radius: f64,
    outer_radius: f64,
    /// `m(1/2)`, the value of each mollifier branch at the midpoint of the step.
    bump_norm: f64,
}

impl CutoffProfile {
    pub fn gevrey_s(&self) -> f64 {
        self.gevrey_s
    }
    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }
    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }
    pub fn bump_norm(&self) -> f64 {
        self.bump_norm
    }

    fn power(&self) -> f64 {
        1.0 / (self.gevrey_s - 1.0)
    }

    /// Identifier recorded with every output that depends on the profile.
    pub fn id(&self) -> String {
        format!("gevrey-step-s{}", self.gevrey_s)
    }

    /// The mollifier `m(t)`.
    pub fn mollifier(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-t.powf(-self.power())).exp()
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.inner_radius {
            return 1.0;
        }
        if r >= self.outer_radius {
            return 0.0;
        }
        let u = 2.0 * r - 1.0;
        let a = self.power();
        let g = (1.0 - u).powf(-a) - u.powf(-a);
        1.0 / (1.0 + g.exp())
    }

    /// First and second radial derivatives `(χ', χ'')`.
    pub fn derivatives(&self, r: f64) -> (f64, f64) {
        if r <= self.inner_radius || r >= self.outer_radius {
            return (0.0, 0.0);
        }
        let u = 2.0 * r - 1.0;
        let a = self.power();
        let v = 1.0 - u;
        let g = v.powf(-a) - u.powf(-a);
        let g1 = a * (v.powf(-a - 1.0) + u.powf(-a - 1.0));
        let g2 = a * (a + 1.0) * (v.powf(-a - 2.0) - u.powf(-a - 2.0));
        // χ = σ(-g) with σ the logistic function; σ' = σ(1-σ).
        let chi = 1.0 / (1.0 + g.exp());
        let w = chi * (1.0 - chi);
        if !w.is_finite() || w == 0.0 {
            return (0.0, 0.0);
        }
        let d1 = -w * g1;
        let d2 = -w * g2 + w * (1.0 - 2.0 * chi) * g1 * g1;
        (2.0 * d1, 4.0 * d2)
    }

    /// `f_h(r) = χ(γ^{-h} r) - χ(γ^{-h+1} r)`.
    pub fn eval_band(&self, params: &ModelParams, h: i32, r: f64) -> f64 {
        let q = params.gamma().powi(-h) * r;
        self.eval(q) - self.eval(params.gamma() * q)
    }

    /// Closed support `[γ^{h-1}/2, γ^h]` of the band `f_h`.
    pub fn band_support(&self, params: &ModelParams, h: i32) -> (f64, f64) {
        let g = params.gamma();
        (self.inner_radius * g.powi(h - 1), self.outer_radius * g.powi(h))
    }
}

pub fn make_profile(s: f64) -> Result<CutoffProfile> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::InvalidOrder(s));
    }
    let mut profile = CutoffProfile { gevrey_s: s, inner_radius: 0.5, outer_radius: 1.0, bump_norm: 0.0 };
    profile.bump_norm = profile.mollifier(0.5);
    Ok(profile)
}
