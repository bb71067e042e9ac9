//! Model parameters, kernel labels and scaling-dimension arithmetic.
//!
//! A kernel label `(n, m, l, p)` counts φ legs, J legs and ψ legs, with `p`
//! flagging which ψ legs carry a derivative. Its scaling dimension is
//!
//! ```text
//! D_sc = d - n(d - Δ₁) - m(d - Δ₂) - l[ψ] - |p|₁
//! ```
//!
//! and the dilatation exponent is `δ_sc = D_sc + d(n + m + l - 1)`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_EPS_RADIUS: f64 = 0.05;
pub const MARGINAL_TOL: f64 = 1e-12;

/// `(d, N, ε, γ, s)` with the derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    d: u32,
    #[serde(rename = "N")]
    n: u32,
    eps: f64,
    gamma: f64,
    #[serde(rename = "s")]
    gevrey_s: f64,
    #[serde(skip)]
    eps_radius: f64,
}

impl ModelParams {
    pub fn new(d: u32, n: u32, eps: f64, gamma: f64, s: f64) -> Result<Self> {
        Self::with_eps_radius(d, n, eps, gamma, s, DEFAULT_EPS_RADIUS)
    }

    /// Same as [`ModelParams::new`] with an explicit bound on `|ε|`.
    pub fn with_eps_radius(d: u32, n: u32, eps: f64, gamma: f64, s: f64, radius: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::InvalidParams(format!("d={d} must be 1, 2 or 3")));
        }
        if n == 8 {
            return Err(Error::InvalidParams("N=8 excluded".into()));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::InvalidParams(format!("N={n} must be even and at least 4")));
        }
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::InvalidParams(format!("gamma={gamma} must exceed 1")));
        }
        if !(s.is_finite() && s > 1.0) {
            return Err(Error::InvalidParams(format!("s={s} must exceed 1")));
        }
        if !(eps.is_finite() && eps.abs() < radius) {
            return Err(Error::InvalidParams(format!("|eps|={} outside the radius {radius}", eps.abs())));
        }
        Ok(Self { d, n, eps, gamma, gevrey_s: s, eps_radius: radius })
    }

    pub fn d(&self) -> u32 {
        self.d
    }
    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn gevrey_s(&self) -> f64 {
        self.gevrey_s
    }
    pub fn sigma(&self) -> f64 {
        1.0 / self.gevrey_s
    }
    pub fn df(&self) -> f64 {
        self.d as f64
    }
    /// `[ψ] = d/4 - ε/2`.
    pub fn psi_dim(&self) -> f64 {
        self.df() / 4.0 - self.eps / 2.0
    }
    /// Momentum exponent `α = d/2 + ε` of the propagator `1/|k|^α`.
    pub fn alpha(&self) -> f64 {
        self.df() / 2.0 + self.eps
    }
    pub fn delta1(&self) -> f64 {
        self.psi_dim()
    }
    pub fn ln_gamma(&self) -> f64 {
        self.gamma.ln()
    }

    pub fn eps_radius(&self) -> f64 {
        self.eps_radius
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::with_eps_radius(self.d, self.n, eps, self.gamma, self.gevrey_s, self.eps_radius)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_eps_radius(self.d, self.n, self.eps, gamma, self.gevrey_s, self.eps_radius)
    }
}

pub fn field_dimension(params: &ModelParams) -> f64 {
    params.psi_dim()
}

/// Scaling exponents at the fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub delta1: f64,
    pub delta2: f64,
    pub eta2: f64,
    pub zeta2: f64,
    pub lambda_star: f64,
    pub nu_star: f64,
}

impl Exponents {
    /// The Gaussian point: `η₂ = 0`, `Δ₂ = 2[ψ]`.
    pub fn gaussian(params: &ModelParams) -> Self {
        Self::from_eta2(params, 0.0, 0.0, 0.0)
    }

    pub fn from_eta2(params: &ModelParams, eta2: f64, zeta2: f64, lambda_star: f64) -> Self {
        Self {
            delta1: params.psi_dim(),
            delta2: 2.0 * params.psi_dim() + eta2,
            eta2,
            zeta2,
            lambda_star,
            nu_star: 0.0,
        }
    }
}

/// Kernel label `(n, m, l, p)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KernelLabel {
    pub n: u32,
    pub m: u32,
    pub l: u32,
    pub p: Vec<u8>,
}

impl KernelLabel {
    pub fn new(n: u32, m: u32, l: u32, p: Vec<u8>) -> Result<Self> {
        let label = Self { n, m, l, p };
        label.validate()?;
        Ok(label)
    }

    /// Label with no derivatives.
    pub fn plain(n: u32, m: u32, l: u32) -> Result<Self> {
        Self::new(n, m, l, vec![0; l as usize])
    }

    /// Label with the first `k` ψ legs differentiated.
    pub fn with_derivatives(n: u32, m: u32, l: u32, k: u32) -> Result<Self> {
        if k > l {
            return Err(Error::InvalidLabel(format!("{k} derivatives on {l} legs")));
        }
        let p = (0..l).map(|i| u8::from(i < k)).collect();
        Self::new(n, m, l, p)
    }

    fn validate(&self) -> Result<()> {
        if self.p.len() != self.l as usize || self.p.iter().any(|&b| b > 1) {
            return Err(Error::InvalidLabel(format!("{self}: p must be a 0/1 sequence of length l")));
        }
        if (self.n + self.l) % 2 != 0 {
            return Err(Error::InvalidLabel(format!("{self}: n+l must be even")));
        }
        if self.n + self.m + self.l == 0 {
            return Err(Error::InvalidLabel("(0,0,0,∅) is not a kernel".into()));
        }
        Ok(())
    }

    pub fn derivative_order(&self) -> u32 {
        self.p.iter().map(|&b| b as u32).sum()
    }

    pub fn order(&self) -> u32 {
        self.n + self.m + self.l
    }

    pub fn is_plain(&self) -> bool {
        self.derivative_order() == 0
    }

    pub fn matches(&self, n: u32, m: u32, l: u32) -> bool {
        self.n == n && self.m == m && self.l == l
    }
}

impl fmt::Display for KernelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},", self.n, self.m, self.l)?;
        if self.p.is_empty() {
            write!(f, "∅)")
        } else if self.is_plain() {
            write!(f, "0)")
        } else {
            let s: Vec<String> = self.p.iter().map(|b| b.to_string()).collect();
            write!(f, "({}))", s.join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relevance {
    Relevant,
    Marginal,
    Irrelevant,
}

/// `D_sc(ℓ)`.
pub fn scaling_dimension(label: &KernelLabel, exps: &Exponents, params: &ModelParams) -> f64 {
    let d = params.df();
    d - label.n as f64 * (d - exps.delta1)
        - label.m as f64 * (d - exps.delta2)
        - label.l as f64 * params.psi_dim()
        - label.derivative_order() as f64
}

/// `δ_sc(ℓ) = D_sc(ℓ) + d(n + m + l - 1)`.
pub fn dilatation_dimension(label: &KernelLabel, exps: &Exponents, params: &ModelParams) -> f64 {
    scaling_dimension(label, exps, params) + params.df() * (label.order() as f64 - 1.0)
}

pub fn classify_label(label: &KernelLabel, exps: &Exponents, params: &ModelParams) -> Relevance {
    classify_label_with_tol(label, exps, params, MARGINAL_TOL)
}

pub fn classify_label_with_tol(
    label: &KernelLabel,
    exps: &Exponents,
    params: &ModelParams,
    tol: f64,
) -> Relevance {
    let dsc = scaling_dimension(label, exps, params);
    if dsc.abs() < tol {
        Relevance::Marginal
    } else if dsc > 0.0 {
        Relevance::Relevant
    } else {
        Relevance::Irrelevant
    }
}

/// Labels whose kernels are kept in local form by the trimming.
pub fn is_trimmed_local(label: &KernelLabel) -> bool {
    let plain = label.is_plain();
    (label.matches(0, 0, 2) && (plain || label.derivative_order() == 1))
        || (plain && (label.matches(0, 0, 4) || label.matches(1, 0, 1) || label.matches(0, 1, 2)))
}

/// `γ^{k δ_sc(ℓ)}`.
pub fn dilate_exponent(label: &KernelLabel, exps: &Exponents, params: &ModelParams, k: i32) -> Result<f64> {
    let delta = dilatation_dimension(label, exps, params);
    let expo = k as f64 * delta * params.ln_gamma();
    if expo.abs() > f64::MAX_EXP as f64 * std::f64::consts::LN_2 - 1.0 {
        return Err(Error::Overflow(expo.abs()));
    }
    // Integer powers of a single base keep γ^{k₁δ}γ^{k₂δ} = γ^{(k₁+k₂)δ} to a few ulps.
    Ok(params.gamma().powf(delta).powi(k))
}

/// All labels with `n + m + l ≤ max_order`, one representative per
/// derivative count (derivatives on the leading legs).
pub fn labels_up_to(max_order: u32) -> Vec<KernelLabel> {
    let mut out = Vec::new();
    for total in 1..=max_order {
        for n in 0..=total {
            for m in 0..=(total - n) {
                let l = total - n - m;
                if (n + l) % 2 != 0 {
                    continue;
                }
                for k in 0..=l {
                    out.push(KernelLabel::with_derivatives(n, m, l, k).expect("valid by construction"));
                }
            }
        }
    }
    out
}
