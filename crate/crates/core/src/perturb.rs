//! First-order fixed-point couplings and the anomalous exponent `η₂`.
//!
//! The bubble integrals pair the band `f₀` with every band `f_j` whose
//! support meets it. For `γ ≥ 2` only `f₁` does, and the sums below reduce to
//! the familiar two-term form `f₀² + 2 f₀ f₁`; for `γ < 2` further bands
//! overlap `f₀` and are kept, so that `Σ_{j≥1} f_j = 1 - χ` telescopes and the
//! unshifted integral is exactly `S_d ln γ / (2π)^d`.

use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::params::{Exponents, ModelParams};
use crate::propagator::{Propagator, ScaleBand};
use crate::quadrature::{integrate_breakpoints, round_sig, sphere_area, QuadConfig};

const MAX_ITERATIONS: usize = 200;

fn quad() -> QuadConfig {
    QuadConfig { abs_tol: 1e-16, rel_tol: 1e-13, max_panels: 100_000 }
}

/// Bands `j ≥ 1` whose support overlaps that of `f₀`.
fn overlapping_bands(params: &ModelParams) -> Vec<i32> {
    // supp f_j = [γ^{j-1}/2, γ^j] meets supp f₀ = [1/(2γ), 1] iff γ^{j-1} < 2
    let lg = params.ln_gamma();
    (1..).take_while(|&j| ((j - 1) as f64) * lg < std::f64::consts::LN_2).collect()
}

/// `∫ d^dk/(2π)^d f₀(k) f_j(k) / |k|^{d+shift}`; `j = 0` gives `∫ f₀²/…`.
fn band_product(params: &ModelParams, profile: &CutoffProfile, j: i32, shift: f64) -> Result<f64> {
    let g = params.gamma();
    let (lo, hi) = (0.5 / g, 1.0);
    let mut breaks = vec![lo, hi];
    for h in [0, j] {
        for b in [0.5 * g.powi(h - 1), g.powi(h - 1), 0.5 * g.powi(h), g.powi(h)] {
            if b > lo && b < hi {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let f = |k: f64| profile.eval_band(params, 0, k) * profile.eval_band(params, j, k) * k.powf(-1.0 - shift);
    let pref = sphere_area(params.d()) / (2.0 * std::f64::consts::PI).powi(params.d() as i32);
    Ok(pref * integrate_breakpoints(f, &breaks, &quad())?.value)
}

/// `∫ d^dk/(2π)^d f₀(k) [f₀(k) + 2 Σ_{j≥1} f_j(k)] / |k|^{d+shift}`.
pub fn integral_j(params: &ModelParams, profile: &CutoffProfile, shift: f64) -> Result<f64> {
    let mut total = band_product(params, profile, 0, shift)?;
    for j in overlapping_bands(params) {
        total += 2.0 * band_product(params, profile, j, shift)?;
    }
    Ok(total)
}

/// `I₂ = -4(N-8) J(0)`.
pub fn bubble_i2(params: &ModelParams, profile: &CutoffProfile) -> Result<f64> {
    let n = params.n() as f64;
    if params.n() == 8 {
        return Err(Error::Domain("N=8 excluded: I₂ vanishes".into()));
    }
    Ok(-4.0 * (n - 8.0) * integral_j(params, profile, 0.0)?)
}

/// `λ* = -2ε ln γ / I₂`.
pub fn lambda_star_first_order(params: &ModelParams, profile: &CutoffProfile) -> Result<f64> {
    Ok(-2.0 * params.eps() * params.ln_gamma() / bubble_i2(params, profile)?)
}

/// The integrals entering `ζ₂`, independent of `η₂`.
#[derive(Debug, Clone)]
pub struct Zeta2Integrals {
    pub lambda_star: f64,
    /// `A₀ = ∫ f₀² / |k|^{d+2ε}`.
    pub a0: f64,
    /// `(j, A_j)` with `A_j = ∫ f₀ f_j / |k|^{d+2ε}`.
    pub chain: Vec<(i32, f64)>,
}

impl Zeta2Integrals {
    pub fn compute(params: &ModelParams, profile: &CutoffProfile) -> Result<Self> {
        let shift = 2.0 * params.eps();
        let lambda_star = lambda_star_first_order(params, profile)?;
        let a0 = band_product(params, profile, 0, shift)?;
        let chain = overlapping_bands(params)
            .into_iter()
            .map(|j| band_product(params, profile, j, shift).map(|a| (j, a)))
            .collect::<Result<_>>()?;
        Ok(Self { lambda_star, a0, chain })
    }

    /// `ζ₂ = -4(N-2) λ* [A₀ + 2 Σ_j γ^{j(2ε+η₂)} A_j]`.
    pub fn zeta2(&self, params: &ModelParams, eta2: f64) -> f64 {
        let n = params.n() as f64;
        let w = params.gamma().powf(2.0 * params.eps() + eta2);
        let chain: f64 = self.chain.iter().map(|&(j, a)| w.powi(j) * a).sum();
        -4.0 * (n - 2.0) * self.lambda_star * (self.a0 + 2.0 * chain)
    }
}

pub fn zeta2_first_order(params: &ModelParams, profile: &CutoffProfile, eta2_guess: f64) -> Result<f64> {
    Ok(Zeta2Integrals::compute(params, profile)?.zeta2(params, eta2_guess))
}

/// Solves `η₂ = -log_γ(1 + ζ₂(η₂))` by plain iteration.
pub fn solve_eta2(params: &ModelParams, profile: &CutoffProfile, tol: f64) -> Result<Exponents> {
    let ints = Zeta2Integrals::compute(params, profile)?;
    let map = |eta: f64| -> Result<f64> {
        let z = ints.zeta2(params, eta);
        if !(1.0 + z > 0.0) {
            return Err(Error::Domain(format!("1 + ζ₂ = {} is not positive", 1.0 + z)));
        }
        Ok(-(1.0 + z).ln() / params.ln_gamma())
    };
    let mut eta = 0.0;
    let mut step = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let next = map(eta)?;
        step = (next - eta).abs();
        eta = next;
        if step <= tol {
            let zeta2 = ints.zeta2(params, eta);
            return Ok(Exponents::from_eta2(params, eta, zeta2, ints.lambda_star));
        }
    }
    Err(Error::NoFixedPoint { iterations: MAX_ITERATIONS, step })
}

/// Fixed-point residual `|η₂ + log_γ(1 + ζ₂(η₂))|`.
pub fn eta2_residual(params: &ModelParams, profile: &CutoffProfile, eta2: f64) -> Result<f64> {
    let z = zeta2_first_order(params, profile, eta2)?;
    Ok((eta2 + (1.0 + z).ln() / params.ln_gamma()).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct Zeta1Check {
    /// `max_h |f_h(0)|`, the tadpole factor in momentum space.
    pub momentum_residual: f64,
    /// `max_h |∫ 𝔭_h(x) d^dx|` by position-space quadrature.
    pub position_residual: f64,
    pub per_scale: Vec<(i32, f64)>,
}

impl Zeta1Check {
    pub fn residual(&self) -> f64 {
        self.momentum_residual.max(self.position_residual)
    }
}

/// Vanishing of the first-order tadpole for `h = 0, …, 5`, hence `ζ₁ = 0`
/// and `Δ₁ = [ψ]`.
pub fn verify_zeta1(params: &ModelParams, profile: &CutoffProfile) -> Result<Zeta1Check> {
    let prop = Propagator::new(*params, *profile);
    let mut momentum_residual: f64 = 0.0;
    let mut per_scale = Vec::new();
    for h in 0..=5 {
        momentum_residual = momentum_residual.max(prop.momentum_weight(ScaleBand::Single(h), 0.0).abs());
        per_scale.push((h, prop.verify_zero_mode(h)?));
    }
    let position_residual = per_scale.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(Zeta1Check { momentum_residual, position_residual, per_scale })
}

/// Flat JSON record of a solved exponent set.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentsRecord {
    pub delta1: f64,
    pub delta2: f64,
    pub eta2: f64,
    pub zeta2: f64,
    pub lambda_star: f64,
    pub eps: f64,
    pub d: u32,
    #[serde(rename = "N")]
    pub n: u32,
    pub gamma: f64,
    pub s: f64,
    pub profile_id: String,
}

impl ExponentsRecord {
    pub fn new(exps: &Exponents, params: &ModelParams, profile: &CutoffProfile) -> Self {
        Self {
            delta1: exps.delta1,
            delta2: exps.delta2,
            eta2: exps.eta2,
            zeta2: exps.zeta2,
            lambda_star: exps.lambda_star,
            eps: params.eps(),
            d: params.d(),
            n: params.n(),
            gamma: params.gamma(),
            s: params.gevrey_s(),
            profile_id: profile.id(),
        }
    }

    /// Single-line JSON with reals rounded to `digits` significant digits.
    pub fn to_json(&self, digits: usize) -> String {
        let mut r = self.clone();
        for v in [&mut r.delta1, &mut r.delta2, &mut r.eta2, &mut r.zeta2, &mut r.lambda_star] {
            *v = round_sig(*v, digits);
        }
        serde_json::to_string(&r).expect("plain record")
    }
}
