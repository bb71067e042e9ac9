//! Response functions at the free point and their leading-order scale sums.
//!
//! Scale sums run over a finite window of scales. The window is widened
//! until the neglected mass on either side, estimated from the boundary
//! terms, is below `1e-10` of the sum: towards small scales the terms are
//! geometric with ratio `γ^{-2Δ}`, towards large scales they decay as a
//! stretched exponential.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::params::{Exponents, ModelParams};
use crate::propagator::{fit_envelope, riesz_constant, DecayFit, Propagator, ScaleBand};
use crate::quadrature::{compensated_sum, sci, NeumaierSum};

/// Relative boundary mass accepted by the scale sums.
pub const BOUNDARY_TOL: f64 = 1e-10;
const MAX_WINDOW: i32 = 400;

/// Inclusive window `h_min ..= h_max` of a truncated scale sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScaleSumSpec {
    pub h_min: i32,
    pub h_max: i32,
}

impl ScaleSumSpec {
    pub fn new(h_min: i32, h_max: i32) -> Result<Self> {
        if h_min >= h_max {
            return Err(Error::OutOfRange(format!("scale window [{h_min},{h_max}] needs h_min < h_max")));
        }
        Ok(Self { h_min, h_max })
    }

    /// The window with no scales; sums over it vanish.
    pub fn empty() -> Self {
        Self { h_min: 1, h_max: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.h_min > self.h_max
    }

    pub fn shifted(&self, k: i32) -> Self {
        Self { h_min: self.h_min + k, h_max: self.h_max + k }
    }

    pub fn len(&self) -> usize {
        (self.h_max - self.h_min + 1).max(0) as usize
    }

    fn scales(&self) -> impl Iterator<Item = i32> {
        self.h_min..=self.h_max
    }
}

/// Free-point and scale-sum evaluator for fixed parameters and profile.
#[derive(Debug, Clone, Copy)]
pub struct Response {
    prop: Propagator,
}

impl Response {
    pub fn new(params: ModelParams, profile: CutoffProfile) -> Self {
        Self { prop: Propagator::new(params, profile) }
    }

    pub fn propagator(&self) -> &Propagator {
        &self.prop
    }

    fn params(&self) -> &ModelParams {
        self.prop.params()
    }

    /// `P_{≤0}(x) + P_{≥1}(x)`.
    pub fn free_g(&self, x: f64) -> Result<f64> {
        Ok(self.prop.eval(ScaleBand::Below(0), x)? + self.prop.eval(ScaleBand::Above(1), x)?)
    }

    /// `-2N G(x)²`.
    pub fn free_f(&self, x: f64) -> Result<f64> {
        let g = self.free_g(x)?;
        Ok(-2.0 * self.params().n() as f64 * g * g)
    }

    /// `ℰ₀,₁ = P_{≥1}(x)`, by subtraction from the closed form.
    pub fn correction_e1(&self, x: f64) -> Result<f64> {
        self.prop.eval(ScaleBand::Above(1), x)
    }

    /// `ℰ₀,₂ = -2N [2 P_{≤0} P_{≥1} + P_{≥1}²]`.
    pub fn correction_e2(&self, x: f64) -> Result<f64> {
        let below = self.prop.eval(ScaleBand::Below(0), x)?;
        let above = self.correction_e1(x)?;
        Ok(-2.0 * self.params().n() as f64 * (2.0 * below * above + above * above))
    }

    /// `𝔭_h(x) = γ^{2hΔ} 𝔭₀(γ^h x)` for the exponent `delta`.
    fn term(&self, h: i32, delta: f64, x: f64) -> Result<f64> {
        let g = self.params().gamma();
        Ok(g.powf(2.0 * delta).powi(h) * self.prop.eval(ScaleBand::Single(0), g.powi(h) * x)?)
    }

    fn terms(&self, spec: &ScaleSumSpec, delta: f64, x: f64) -> Result<Vec<f64>> {
        let hs: Vec<i32> = spec.scales().collect();
        hs.par_iter().map(|&h| self.term(h, delta, x)).collect()
    }

    /// Window whose boundary mass for `Σ_h γ^{2hΔ₁} 𝔭₀(γ^h x)` is below
    /// [`BOUNDARY_TOL`]: the lower end is placed from the geometric ratio
    /// `γ^{-2Δ₁}`, the upper end is found by stepping until the last two terms
    /// are negligible.
    pub fn auto_window(&self, exps: &Exponents, x: f64) -> Result<ScaleSumSpec> {
        if !(x > 0.0) {
            return Err(Error::OutOfRange(format!("radius {x}")));
        }
        let g = self.params().gamma();
        let delta = exps.delta1;
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("scale sum needs Δ > 0, got {delta}")));
        }
        let scale = riesz_constant(self.params().d(), self.params().alpha())?.abs() * x.powf(-2.0 * delta);
        let p0 = self.prop.eval(ScaleBand::Single(0), 0.0)?.abs();
        let ratio = g.powf(-2.0 * delta);
        // |term(h)| ≤ γ^{2hΔ} |𝔭₀(0)| for γ^h x ≪ 1; the tail below h sums to term·r/(1-r)
        let need = (BOUNDARY_TOL * 0.1 * scale * (1.0 - ratio) / p0.max(f64::MIN_POSITIVE)).ln();
        let h_min = ((need / (2.0 * delta * g.ln())).floor() as i32).min(-(x.log(g).ceil() as i32) - 4);
        let mut h_max = x.log(g).ceil().max(0.0) as i32 + 2;
        loop {
            let last = self.term(h_max, delta, x)?.abs().max(self.term(h_max - 1, delta, x)?.abs());
            if last < 0.1 * BOUNDARY_TOL * scale {
                break;
            }
            h_max += 1;
            if h_max - h_min > MAX_WINDOW {
                return Err(Error::WindowTooNarrow { boundary: last, sum: scale });
            }
        }
        ScaleSumSpec::new(h_min, h_max)
    }

    fn boundary_mass(&self, terms: &[f64], delta: f64) -> f64 {
        let ratio = self.params().gamma().powf(-2.0 * delta);
        let n = terms.len();
        let lower = terms[0].abs() * ratio / (1.0 - ratio);
        let upper = terms[n - 1].abs().max(if n > 1 { terms[n - 2].abs() } else { 0.0 });
        lower + upper
    }

    /// Truncated `Σ_{h=h_min}^{h_max} γ^{2hΔ₁} 𝔭₀(γ^h x)` without the
    /// boundary check.
    pub fn scale_sum_g_raw(&self, exps: &Exponents, x: f64, spec: &ScaleSumSpec) -> Result<f64> {
        if spec.is_empty() {
            return Ok(0.0);
        }
        Ok(compensated_sum(self.terms(spec, exps.delta1, x)?))
    }

    /// Truncated scale sum for `𝒢*`; fails if the window's boundary mass
    /// exceeds [`BOUNDARY_TOL`] of the sum.
    pub fn scale_sum_g(&self, exps: &Exponents, x: f64, spec: &ScaleSumSpec) -> Result<f64> {
        if spec.is_empty() {
            return Ok(0.0);
        }
        let terms = self.terms(spec, exps.delta1, x)?;
        let sum = compensated_sum(terms.iter().copied());
        let boundary = self.boundary_mass(&terms, exps.delta1);
        if boundary > BOUNDARY_TOL * sum.abs() {
            return Err(Error::WindowTooNarrow { boundary, sum });
        }
        Ok(sum)
    }

    /// `-2N Σ_{h'} 𝔭_{h'}(y) [γ^{2h'η₂} 𝔭_{h'}(y) + 2 Σ_{h''>h'} γ^{2h''η₂} 𝔭_{h''}(y)]`
    /// without the boundary check.
    pub fn scale_sum_f_raw(&self, exps: &Exponents, y: f64, spec: &ScaleSumSpec) -> Result<f64> {
        if spec.is_empty() {
            return Ok(0.0);
        }
        Ok(self.f_from_terms(exps, &self.terms(spec, exps.delta1, y)?, spec))
    }

    fn f_from_terms(&self, exps: &Exponents, terms: &[f64], spec: &ScaleSumSpec) -> f64 {
        let w = self.params().gamma().powf(2.0 * exps.eta2);
        let weight = |i: usize| w.powi(spec.h_min + i as i32);
        let mut suffix = NeumaierSum::new();
        let mut total = NeumaierSum::new();
        for i in (0..terms.len()).rev() {
            let wi = weight(i) * terms[i];
            total.add(terms[i] * (wi + 2.0 * suffix.value()));
            suffix.add(wi);
        }
        -2.0 * self.params().n() as f64 * total.value()
    }

    /// Truncated double scale sum for `ℱ*`, with the boundary check of
    /// [`Response::scale_sum_g`] applied to the single-propagator terms.
    pub fn scale_sum_f(&self, exps: &Exponents, y: f64, spec: &ScaleSumSpec) -> Result<f64> {
        if spec.is_empty() {
            return Ok(0.0);
        }
        let terms = self.terms(spec, exps.delta1, y)?;
        let sum = compensated_sum(terms.iter().copied());
        let boundary = self.boundary_mass(&terms, exps.delta1 - exps.eta2.abs());
        if boundary > BOUNDARY_TOL * sum.abs() {
            return Err(Error::WindowTooNarrow { boundary, sum });
        }
        Ok(self.f_from_terms(exps, &terms, spec))
    }

    /// `|P_{≤h}(x)| |x|^{2Δ₁}` for each `h`: the deviation of the partial scale
    /// sum over `h' > h` from the full value, and the fitted slope of its
    /// logarithm against `h`.
    pub fn tail_profile(&self, exps: &Exponents, x: f64, h_list: &[i32]) -> Result<TailProfile> {
        let scale = x.powf(2.0 * exps.delta1);
        let residuals: Vec<f64> = h_list
            .par_iter()
            .map(|&h| self.prop.eval(ScaleBand::Below(h), x).map(|v| v.abs() * scale))
            .collect::<Result<_>>()?;
        let pts: Vec<(f64, f64)> =
            h_list.iter().zip(&residuals).filter(|(_, r)| **r > 0.0).map(|(&h, r)| (h as f64, r.ln())).collect();
        let slope = if pts.len() >= 2 { linear_fit(&pts).1 } else { f64::NAN };
        Ok(TailProfile { x, h: h_list.to_vec(), residuals, slope })
    }

    /// Stretched-exponential envelope of `|ℰ₀,₁|` on `window`, in the form
    /// `C exp(-c x^σ)`.
    pub fn e1_decay_fit(&self, window: (f64, f64)) -> Result<DecayFit> {
        let (xs, vs) = self.e1_samples(window)?;
        fit_envelope(&xs, &vs, 1.0, None, window)
    }

    /// As [`Response::e1_decay_fit`] with `σ` held fixed.
    pub fn e1_decay_fit_fixed(&self, window: (f64, f64), sigma: f64) -> Result<DecayFit> {
        let (xs, vs) = self.e1_samples(window)?;
        fit_envelope(&xs, &vs, 1.0, Some(sigma), window)
    }

    fn e1_samples(&self, window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(window.0 > 0.0 && window.1 > window.0) {
            return Err(Error::FitDegenerate(format!("empty window {window:?}")));
        }
        let xs = self.prop.fit_grid(window);
        let vs = xs.par_iter().map(|&x| self.correction_e1(x)).collect::<Result<Vec<f64>>>()?;
        Ok((xs, vs))
    }

    /// Response curve with a log-log power-law fit.
    pub fn curve(&self, kind: ResponseKind, exps: &Exponents, xs: &[f64]) -> Result<ResponseCurve> {
        let values = xs
            .par_iter()
            .map(|&x| match kind {
                ResponseKind::FreeG => self.free_g(x),
                ResponseKind::FreeF => self.free_f(x),
                ResponseKind::ScaleSumG => self.auto_window(exps, x).and_then(|w| self.scale_sum_g(exps, x, &w)),
                ResponseKind::ScaleSumF => self.auto_window(exps, x).and_then(|w| self.scale_sum_f(exps, x, &w)),
                ResponseKind::E1 => self.correction_e1(x),
                ResponseKind::E2 => self.correction_e2(x),
            })
            .collect::<Result<Vec<f64>>>()?;
        ResponseCurve::new(kind, xs.to_vec(), values)
    }
}

/// Least-squares line through `(x, y)`; returns `(intercept, slope)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[derive(Debug, Clone, Serialize)]
pub struct TailProfile {
    pub x: f64,
    pub h: Vec<i32>,
    pub residuals: Vec<f64>,
    /// Slope of `ln residual` against `h`.
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    FreeG,
    FreeF,
    ScaleSumG,
    ScaleSumF,
    E1,
    E2,
}

impl ResponseKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeG => "free_g",
            Self::FreeF => "free_f",
            Self::ScaleSumG => "scale_sum_g",
            Self::ScaleSumF => "scale_sum_f",
            Self::E1 => "e1",
            Self::E2 => "e2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::FreeG, Self::FreeF, Self::ScaleSumG, Self::ScaleSumF, Self::E1, Self::E2]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// Sampled response with the fit `value ≈ A x^{-b}` (sign of the data).
#[derive(Debug, Clone, Serialize)]
pub struct ResponseCurve {
    pub kind: ResponseKind,
    pub x: Vec<f64>,
    pub values: Vec<f64>,
    pub amplitude: f64,
    pub exponent: f64,
}

impl ResponseCurve {
    pub fn new(kind: ResponseKind, x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.len() != values.len() || x.is_empty() {
            return Err(Error::OutOfRange("response curve needs matching, nonempty samples".into()));
        }
        let pts: Vec<(f64, f64)> =
            x.iter().zip(&values).filter(|(_, v)| **v != 0.0).map(|(x, v)| (x.ln(), v.abs().ln())).collect();
        let (amplitude, exponent) = if pts.len() >= 2 {
            let (a, b) = linear_fit(&pts);
            let sign = if values.iter().filter(|v| **v < 0.0).count() * 2 > values.len() { -1.0 } else { 1.0 };
            (sign * a.exp(), -b)
        } else {
            (0.0, f64::NAN)
        };
        Ok(Self { kind, x, values, amplitude, exponent })
    }

    pub fn fit_value(&self, x: f64) -> f64 {
        self.amplitude * x.powf(-self.exponent)
    }

    /// Rows `x,value,fit_powerlaw,residual` with `digits` significant digits.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("x,value,fit_powerlaw,residual\n");
        for (&x, &v) in self.x.iter().zip(&self.values) {
            let f = self.fit_value(x);
            let _ = writeln!(out, "{},{},{},{}", sci(x, digits), sci(v, digits), sci(f, digits), sci(v - f, digits));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::make_profile;
    use crate::quadrature::log_grid;

    fn resp(d: u32, n: u32, eps: f64, s: f64) -> (Response, ModelParams) {
        let p = ModelParams::new(d, n, eps, 2.0, s).unwrap();
        (Response::new(p, make_profile(s).unwrap()), p)
    }

    #[test]
    fn free_values() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let g = r.free_g(1.0).unwrap();
        assert!((g - 0.398_942_280_401_432_7).abs() < 1e-10);
        let f = r.free_f(1.0).unwrap();
        assert!((f + 1.273_239_544_735_163).abs() < 1e-9);
        for x in [0.3, 1.7, 12.0] {
            let g = r.free_g(x).unwrap();
            assert_eq!(r.free_f(x).unwrap(), -8.0 * g * g);
            let ratio = r.free_g(2.0 * x).unwrap() / g;
            assert!((ratio - 2f64.powf(p.alpha() - p.df())).abs() < 1e-10);
            assert!(r.free_f(x).unwrap() < 0.0);
        }
    }

    #[test]
    fn scale_sum_matches_closed_form() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let c0 = riesz_constant(1, 0.5).unwrap();
        for x in [0.5, 3.0, 50.0] {
            let w = r.auto_window(&e, x).unwrap();
            let v = r.scale_sum_g(&e, x, &w).unwrap();
            let exact = c0 * x.powf(-0.5);
            assert!((v / exact - 1.0).abs() < 1e-4, "x={x}: {v} vs {exact}, window {w:?}");
        }
    }

    #[test]
    fn empty_and_narrow_windows() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        assert_eq!(r.scale_sum_g(&e, 1.0, &ScaleSumSpec::empty()).unwrap(), 0.0);
        let narrow = ScaleSumSpec::new(-2, 2).unwrap();
        assert!(matches!(r.scale_sum_g(&e, 1.0, &narrow), Err(Error::WindowTooNarrow { .. })));
        assert!(ScaleSumSpec::new(3, 3).is_err());
    }

    #[test]
    fn reindexing_identity() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let g = p.gamma();
        let spec = ScaleSumSpec::new(-30, 8).unwrap();
        for x in [0.7, 2.3] {
            let lhs = r.scale_sum_g_raw(&e, g * x, &spec).unwrap();
            let rhs = g.powf(-2.0 * e.delta1) * r.scale_sum_g_raw(&e, x, &spec.shifted(1)).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs(), "{lhs} {rhs}");
        }
    }

    #[test]
    fn window_widening_converges() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let w = r.auto_window(&e, 1.5).unwrap();
        let a = r.scale_sum_g(&e, 1.5, &w).unwrap();
        // the upper tail is stretched-exponentially small; widen mostly below
        let wide = ScaleSumSpec::new(2 * w.h_min, w.h_max + 3).unwrap();
        let b = r.scale_sum_g(&e, 1.5, &wide).unwrap();
        assert!((a - b).abs() < 1e-10 * b.abs());
    }

    #[test]
    fn telescoped_f_is_minus_2n_g_squared() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let c0 = riesz_constant(1, 0.5).unwrap();
        for y in [0.8, 5.0] {
            let w = r.auto_window(&e, y).unwrap();
            let f = r.scale_sum_f(&e, y, &w).unwrap();
            let exact = -8.0 * (c0 * y.powf(-0.5)).powi(2);
            assert!((f / exact - 1.0).abs() < 1e-3, "{f} vs {exact}");
            let (r6, _) = resp(1, 6, 0.0, 2.0);
            assert!((r6.scale_sum_f(&e, y, &w).unwrap() / f - 1.5).abs() < 1e-14);
        }
    }

    #[test]
    fn f_covariance_with_anomalous_weights() {
        let (r, p) = resp(1, 4, 0.001, 2.0);
        let e = Exponents::from_eta2(&p, -0.001, 0.0, 0.0);
        let g = p.gamma();
        let spec = ScaleSumSpec::new(-40, 10).unwrap();
        let lhs = r.scale_sum_f_raw(&e, g * 1.3, &spec).unwrap();
        let rhs = g.powf(-2.0 * e.delta2) * r.scale_sum_f_raw(&e, 1.3, &spec.shifted(1)).unwrap();
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs());
    }

    #[test]
    fn corrections_are_consistent() {
        let (r, _) = resp(1, 4, 0.0, 2.0);
        for x in [0.2, 1.0, 4.0] {
            let g = r.free_g(x).unwrap();
            let split = r.propagator().eval(ScaleBand::Below(0), x).unwrap() + r.correction_e1(x).unwrap();
            assert!((g - split).abs() < 1e-14 * g.abs().max(1.0));
        }
        // band sum oracle for P_{≥1}: Σ_{h≥1} 𝔭_h
        let x = 0.3;
        let bands: f64 = (1..16).map(|h| r.propagator().eval(ScaleBand::Single(h), x).unwrap()).sum();
        let e1 = r.correction_e1(x).unwrap();
        assert!((bands - e1).abs() < 1e-9, "{bands} vs {e1}");
        let below = r.propagator().eval(ScaleBand::Below(0), x).unwrap();
        let e2 = r.correction_e2(x).unwrap();
        assert!(e2 < 0.0);
        assert!((e2 + 8.0 * (2.0 * below * bands + bands * bands)).abs() < 1e-8);
    }

    #[test]
    fn e1_decay_certificate() {
        let (r, _) = resp(1, 4, 0.0, 2.0);
        let fit = r.e1_decay_fit((3.0, 60.0)).unwrap();
        assert!((fit.sigma_fit - 0.5).abs() < 0.2 * 0.5, "{fit:?}");
        for x in r.propagator().fit_grid((3.0, 60.0)) {
            assert!(r.correction_e1(x).unwrap().abs() <= fit.bound(x) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tail_slope() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let hs: Vec<i32> = (-14..=-4).collect();
        let t = r.tail_profile(&e, 1.0, &hs).unwrap();
        let target = 2.0 * p.psi_dim() * p.ln_gamma();
        assert!((t.slope - target).abs() < 0.1 * target, "{t:?}");
        assert!(t.residuals.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn curve_csv() {
        let (r, p) = resp(1, 4, 0.0, 2.0);
        let e = Exponents::gaussian(&p);
        let c = r.curve(ResponseKind::FreeG, &e, &log_grid(0.5, 5.0, 8)).unwrap();
        assert!((c.exponent - 0.5).abs() < 1e-10);
        let csv = c.to_csv(9);
        assert!(csv.starts_with("x,value,fit_powerlaw,residual\n"));
        assert_eq!(csv.lines().count(), 10);
        assert_eq!(ResponseKind::parse("scale_sum_f"), Some(ResponseKind::ScaleSumF));
    }
}
