//! Multi-scale fractional propagators.
//!
//! A band selects a cutoff combination `w(k)` and the position-space value
//! is the radial transform of `w(k)/|k|^α`. Bands that reach `k → ∞` (the
//! full propagator and `above(h)`) are obtained by subtraction from the
//! closed Riesz form; they are never integrated directly.
//!
//! Convention: `above(h)` has weight `1 - χ(γ^{-h+1}k)`, so that
//! `below(h-1) + above(h)` is the full propagator.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quadrature::{
    integrate_breakpoints, radial_fourier, radial_kernel, sphere_area, QuadConfig, RadialSamples, SampleMeta,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScaleBand {
    Single(i32),
    Below(i32),
    Above(i32),
    Range(i32, i32),
    Full,
}

impl ScaleBand {
    pub fn range(h1: i32, h2: i32) -> Result<Self> {
        if h1 >= h2 {
            return Err(Error::OutOfRange(format!("range({h1},{h2}) needs h1 < h2")));
        }
        Ok(Self::Range(h1, h2))
    }

    fn is_compact(&self) -> bool {
        matches!(self, Self::Single(_) | Self::Below(_) | Self::Range(..))
    }

    /// Scale of the band's highest momenta, `γ^h`.
    fn top_scale(&self) -> Option<i32> {
        match *self {
            Self::Single(h) | Self::Below(h) => Some(h),
            Self::Range(_, h2) => Some(h2),
            _ => None,
        }
    }
}

impl fmt::Display for ScaleBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Single(h) => write!(f, "single({h})"),
            Self::Below(h) => write!(f, "below({h})"),
            Self::Above(h) => write!(f, "above({h})"),
            Self::Range(a, b) => write!(f, "range({a},{b})"),
            Self::Full => write!(f, "full"),
        }
    }
}

/// `C₀(d, α) = 2^{-α} π^{-d/2} Γ((d-α)/2) / Γ(α/2)`, the coefficient of
/// `|x|^{α-d}` in the transform of `|k|^{-α}`.
pub fn riesz_constant(d: u32, alpha: f64) -> Result<f64> {
    let df = d as f64;
    if !(alpha > 0.0 && alpha < df) {
        return Err(Error::Domain(format!("Riesz constant needs 0 < alpha < d, got alpha={alpha}, d={d}")));
    }
    let value = 2f64.powf(-alpha) * PI.powf(-df / 2.0) * libm::tgamma((df - alpha) / 2.0) / libm::tgamma(alpha / 2.0);
    if !value.is_finite() {
        return Err(Error::Domain(format!("Gamma pole at alpha={alpha}")));
    }
    Ok(value)
}

/// Stretched-exponential envelope `C exp(-c (u/γ)^σ)` of a propagator,
/// with `u = γ^h x` the radius in units of the band's own scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    pub sigma_fit: f64,
    /// RMS deviation of `ln|𝔭|` from the fitted curve at the peaks.
    pub residual: f64,
    pub window: (f64, f64),
    pub gamma: f64,
}

impl DecayFit {
    pub fn bound(&self, u: f64) -> f64 {
        self.prefactor * (-self.rate * (u / self.gamma).powf(self.sigma_fit)).exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Propagator {
    params: ModelParams,
    profile: CutoffProfile,
    quad: QuadConfig,
}

impl Propagator {
    pub fn new(params: ModelParams, profile: CutoffProfile) -> Self {
        Self { params, profile, quad: QuadConfig { abs_tol: 1e-15, rel_tol: 1e-12, max_panels: 400_000 } }
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Self {
        self.quad = quad;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn profile(&self) -> &CutoffProfile {
        &self.profile
    }

    fn chi_scaled(&self, h: i32, k: f64) -> f64 {
        self.profile.eval(self.params.gamma().powi(-h) * k)
    }

    pub fn momentum_weight(&self, band: ScaleBand, k: f64) -> f64 {
        match band {
            ScaleBand::Single(h) => self.profile.eval_band(&self.params, h, k),
            ScaleBand::Below(h) => self.chi_scaled(h, k),
            ScaleBand::Above(h) => 1.0 - self.chi_scaled(h - 1, k),
            ScaleBand::Range(h1, h2) => self.chi_scaled(h2, k) - self.chi_scaled(h1, k),
            ScaleBand::Full => 1.0,
        }
    }

    pub fn eval(&self, band: ScaleBand, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::OutOfRange(format!("radius {x}")));
        }
        match band {
            ScaleBand::Full => self.full(x),
            ScaleBand::Above(h) => Ok(self.full(x)? - self.below(h - 1, x)?),
            ScaleBand::Below(h) => self.below(h, x),
            ScaleBand::Single(h) => {
                let g = self.params.gamma();
                let lo = 0.5 * g.powi(h - 1);
                self.compact(|k| self.momentum_weight(band, k), &[lo, g.powi(h - 1), 0.5 * g.powi(h), g.powi(h)], x)
            }
            ScaleBand::Range(h1, h2) => {
                if h1 >= h2 {
                    return Err(Error::OutOfRange(format!("range({h1},{h2}) needs h1 < h2")));
                }
                let g = self.params.gamma();
                let pts = [0.5 * g.powi(h1), g.powi(h1), 0.5 * g.powi(h2), g.powi(h2)];
                self.compact(|k| self.momentum_weight(band, k), &pts, x)
            }
        }
    }

    fn full(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Singular("full propagator at x=0".into()));
        }
        let (d, a) = (self.params.d(), self.params.alpha());
        Ok(riesz_constant(d, a)? * x.powf(a - self.params.df()))
    }

    fn compact<F: Fn(f64) -> f64>(&self, weight: F, pts: &[f64], x: f64) -> Result<f64> {
        let mut breaks: Vec<f64> = pts.to_vec();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let alpha = self.params.alpha();
        Ok(radial_fourier(self.params.d(), |k| weight(k) * k.powf(-alpha), &breaks, x, &self.quad)?.value)
    }

    /// `P_{≤h}`: the plateau `[0, γ^h/2]` is integrated after the
    /// substitution `k = k₁ t^q`, `q = 1/(d-α)`, which absorbs the
    /// `k^{d-1-α}` endpoint singularity.
    fn below(&self, h: i32, x: f64) -> Result<f64> {
        let g = self.params.gamma();
        let (d, alpha) = (self.params.d(), self.params.alpha());
        let k1 = 0.5 * g.powi(h);
        let k2 = g.powi(h);
        let q = 1.0 / (self.params.df() - alpha);
        let plateau = |t: f64| radial_kernel(d, k1 * t.powf(q) * x);
        let kb = crate::quadrature::radial::oscillation_panels(&[0.0, k1], x);
        let tb: Vec<f64> = kb.iter().map(|k| (k / k1).powf(1.0 / q).min(1.0)).collect();
        let head = integrate_breakpoints(plateau, &tb, &self.quad)?.value * q * k1.powf(1.0 / q);
        let tail = self.compact(|k| self.chi_scaled(h, k), &[k1, k2], x)?;
        Ok(head + tail)
    }

    /// Values on a radius grid, evaluated in parallel.
    pub fn sample(&self, band: ScaleBand, radii: &[f64]) -> Result<RadialSamples> {
        let values: Result<Vec<f64>> = radii.par_iter().map(|&r| self.eval(band, r)).collect();
        let meta = SampleMeta {
            d: self.params.d(),
            eps: self.params.eps(),
            gamma: self.params.gamma(),
            scale_tag: band.to_string(),
            profile_id: self.profile.id(),
        };
        RadialSamples::new(radii.to_vec(), values?, meta)
    }

    /// Sample radii used by [`Propagator::decay_fit`], in units of the
    /// band's scale: at least eight points per shortest oscillation period.
    pub fn fit_grid(&self, window: (f64, f64)) -> Vec<f64> {
        let step = PI / 8.0;
        let n = ((window.1 - window.0) / step).ceil() as usize;
        (0..=n).map(|i| window.0 + (window.1 - window.0) * i as f64 / n as f64).collect()
    }

    fn fit_samples(&self, band: ScaleBand, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
        let h = match band.top_scale() {
            Some(h) if band.is_compact() && !matches!(band, ScaleBand::Range(..)) => h,
            _ => return Err(Error::FitDegenerate(format!("decay fit needs a single or below band, got {band}"))),
        };
        if !(window.0 >= 0.0 && window.1 > window.0) {
            return Err(Error::FitDegenerate(format!("empty window {window:?}")));
        }
        let u = self.fit_grid(window);
        let scale = self.params.gamma().powi(-h);
        let vals: Result<Vec<f64>> = u.par_iter().map(|&ui| self.eval(band, scale * ui)).collect();
        Ok((u, vals?))
    }

    /// Fits `log|𝔭| ≈ log C - c (u/γ)^σ` over the envelope maxima of `|𝔭|` in
    /// the window, `u = γ^h x`. The prefactor is then raised so the envelope
    /// dominates every sample.
    pub fn decay_fit(&self, band: ScaleBand, window: (f64, f64)) -> Result<DecayFit> {
        let (u, v) = self.fit_samples(band, window)?;
        fit_envelope(&u, &v, self.params.gamma(), None, window)
    }

    /// As [`Propagator::decay_fit`] with the stretch exponent held at `sigma`.
    pub fn decay_fit_fixed(&self, band: ScaleBand, window: (f64, f64), sigma: f64) -> Result<DecayFit> {
        let (u, v) = self.fit_samples(band, window)?;
        fit_envelope(&u, &v, self.params.gamma(), Some(sigma), window)
    }

    /// `|∫ 𝔭_h(x) d^dx|` by radial quadrature in position space.
    ///
    /// The integrand carries the window `exp(-|x|²/L²)` with `L` chosen so that
    /// the window's transform is below `e^{-46}` on the band's support; the
    /// windowed integral therefore equals the plain one to that accuracy,
    /// while the integration range stays finite.
    pub fn verify_zero_mode(&self, h: i32) -> Result<f64> {
        let g = self.params.gamma();
        let k_lo = 0.5 * g.powi(h - 1);
        let k_hi = g.powi(h);
        let len = 2.0 * 46f64.sqrt() / k_lo;
        let r_max = len * 46f64.sqrt();
        let band = ScaleBand::Single(h);
        let d = self.params.d() as i32;
        let f = |r: f64| {
            let w = (-(r / len).powi(2)).exp();
            self.eval(band, r).map(|p| p * r.powi(d - 1) * w).unwrap_or(f64::NAN)
        };
        let n = ((r_max * k_hi / PI).ceil() as usize).max(1);
        let breaks: Vec<f64> = (0..=n).map(|i| r_max * i as f64 / n as f64).collect();
        let outer = QuadConfig { abs_tol: 1e-13, rel_tol: 0.0, max_panels: 100_000 };
        let value = integrate_breakpoints(f, &breaks, &outer)?.value;
        if !value.is_finite() {
            return Err(Error::Convergence { estimate: value, error: f64::INFINITY, panels: 0 });
        }
        Ok((sphere_area(self.params.d()) * value).abs())
    }
}

/// Local maxima of `|v|` that no later sample exceeds: the upper envelope,
/// free of the minor maxima produced where oscillations of different
/// frequencies interfere.
pub(crate) fn envelope_peaks(v: &[f64]) -> Vec<usize> {
    let mut later_max = vec![0.0f64; v.len() + 1];
    for i in (0..v.len()).rev() {
        later_max[i] = later_max[i + 1].max(v[i].abs());
    }
    (1..v.len().saturating_sub(1))
        .filter(|&i| {
            let a = v[i].abs();
            a > 0.0 && a >= v[i - 1].abs() && a > v[i + 1].abs() && a > later_max[i + 1]
        })
        .collect()
}

/// Default fit window in rescaled radius: the stretched exponential sets in
/// later for larger Gevrey order.
pub fn default_decay_window(s: f64) -> (f64, f64) {
    (5.0, (80.0 * 5f64.powf(s - 2.0)).clamp(40.0, 1000.0))
}

/// Envelope fit shared by the propagator and response decay certificates.
pub(crate) fn fit_envelope(
    u: &[f64],
    v: &[f64],
    gamma: f64,
    sigma: Option<f64>,
    window: (f64, f64),
) -> Result<DecayFit> {
    let peaks = envelope_peaks(v);
    let sign_changes = v.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    if peaks.len() < 3 || sign_changes < 2 {
        return Err(Error::FitDegenerate(format!(
            "{} peaks and {sign_changes} sign changes in the window",
            peaks.len()
        )));
    }
    let xs: Vec<f64> = peaks.iter().map(|&i| u[i] / gamma).collect();
    let ys: Vec<f64> = peaks.iter().map(|&i| v[i].abs().ln()).collect();

    // For fixed σ the model is linear in (log C, c).
    let solve = |s: f64| -> (f64, f64, f64) {
        let t: Vec<f64> = xs.iter().map(|x| x.powf(s)).collect();
        let n = t.len() as f64;
        let (st, sy) = (t.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let stt = t.iter().map(|a| a * a).sum::<f64>();
        let sty = t.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>();
        let det = n * stt - st * st;
        let slope = (n * sty - st * sy) / det;
        let icpt = (sy - slope * st) / n;
        let rss = t.iter().zip(&ys).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>();
        (icpt, -slope, rss)
    };

    let s_best = match sigma {
        Some(s) => s,
        None => {
            let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
            let mut best = grid[0];
            let mut best_rss = f64::INFINITY;
            for &s in &grid {
                let (_, c, rss) = solve(s);
                if c > 0.0 && rss < best_rss {
                    best = s;
                    best_rss = rss;
                }
            }
            // golden-section refinement on the bracketing cell
            let (mut a, mut b) = ((best - 0.01).max(1e-3), (best + 0.01).min(0.999));
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let m1 = b - phi * (b - a);
                let m2 = a + phi * (b - a);
                if solve(m1).2 < solve(m2).2 {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            0.5 * (a + b)
        }
    };
    let (_, rate, rss) = solve(s_best);
    if !(rate > 0.0) || !(s_best > 0.0 && s_best < 1.0) {
        return Err(Error::FitDegenerate(format!("fitted rate {rate}, sigma {s_best}")));
    }
    let prefactor = u
        .iter()
        .zip(v)
        .map(|(ui, vi)| vi.abs() * (rate * (ui / gamma).powf(s_best)).exp())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        prefactor,
        rate,
        sigma_fit: s_best,
        residual: (rss / xs.len() as f64).sqrt(),
        window,
        gamma,
    })
}
