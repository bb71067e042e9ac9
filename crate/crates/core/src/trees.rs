//! Expansion trees and their dimensional bounds.
//!
//! Shapes are branching skeletons: below the root's single child `v₀` every
//! internal vertex has at least two children. A tree is stored as the
//! preorder arity sequence of the subtree at `v₀`, endpoints having arity 0;
//! the one-endpoint tree is `[0]`. Chains of single-child vertices are not
//! enumerated; their sum is the geometric factor carried by `d_γ`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::cutoff::CutoffProfile;
use crate::error::{Error, Result};
use crate::params::{is_trimmed_local, labels_up_to, scaling_dimension, Exponents, KernelLabel, ModelParams, MARGINAL_TOL};
use crate::perturb::bubble_i2;
use crate::propagator::{default_decay_window, DecayFit, Propagator, ScaleBand};
use crate::quadrature::{integrate_breakpoints, integrate_semi_infinite, sphere_area, QuadConfig};

pub const MAX_ENDPOINTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EndpointType {
    Nu,
    Lambda,
    Phi,
    J,
}

impl EndpointType {
    pub const ALL: [EndpointType; 4] = [Self::Nu, Self::Lambda, Self::Phi, Self::J];

    pub fn label(&self) -> KernelLabel {
        let (n, m, l) = match self {
            Self::Nu => (0, 0, 2),
            Self::Lambda => (0, 0, 4),
            Self::Phi => (1, 0, 1),
            Self::J => (0, 1, 2),
        };
        KernelLabel::plain(n, m, l).expect("endpoint labels are valid")
    }

    /// Number of `ψ` legs.
    pub fn legs(&self) -> u32 {
        self.label().l
    }

    /// Whether the endpoint carries a coupling `ν` or `λ`.
    pub fn is_coupling(&self) -> bool {
        matches!(self, Self::Nu | Self::Lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ExpansionTree {
    arities: Vec<u8>,
    types: Option<Vec<EndpointType>>,
}

impl ExpansionTree {
    /// Validates a preorder arity sequence.
    pub fn from_arities(arities: Vec<u8>) -> Result<Self> {
        let mut open: i64 = 1;
        for (i, &a) in arities.iter().enumerate() {
            if open == 0 {
                return Err(Error::OutOfRange(format!("arity sequence ends early at position {i}")));
            }
            if a == 1 {
                return Err(Error::OutOfRange("single-child vertex in a skeleton".into()));
            }
            open += a as i64 - 1;
        }
        if open != 0 || arities.is_empty() {
            return Err(Error::OutOfRange("incomplete arity sequence".into()));
        }
        Ok(Self { arities, types: None })
    }

    pub fn with_types(&self, types: Vec<EndpointType>) -> Result<Self> {
        if types.len() != self.endpoints() {
            return Err(Error::OutOfRange(format!("{} types for {} endpoints", types.len(), self.endpoints())));
        }
        Ok(Self { arities: self.arities.clone(), types: Some(types) })
    }

    pub fn arities(&self) -> &[u8] {
        &self.arities
    }
    pub fn types(&self) -> Option<&[EndpointType]> {
        self.types.as_deref()
    }

    pub fn endpoints(&self) -> usize {
        self.arities.iter().filter(|&&a| a == 0).count()
    }

    /// Vertices other than endpoints, `v₀` included.
    pub fn internal_vertices(&self) -> usize {
        self.arities.len() - self.endpoints()
    }

    /// `Π_v 1/s_v!` over internal vertices.
    pub fn symmetry_factor(&self) -> f64 {
        self.arities.iter().filter(|&&a| a > 0).map(|&a| 1.0 / (1..=a as u32).map(f64::from).product::<f64>()).product()
    }

    /// Nested-array shape of the whole tree, root included: an endpoint is
    /// `[]`, an internal vertex the array of its children.
    pub fn shape(&self) -> serde_json::Value {
        fn build(a: &[u8], pos: &mut usize) -> serde_json::Value {
            let k = a[*pos];
            *pos += 1;
            serde_json::Value::Array((0..k).map(|_| build(a, pos)).collect())
        }
        let mut pos = 0;
        serde_json::Value::Array(vec![build(&self.arities, &mut pos)])
    }

    /// Subtrees hanging from `v₀`, in order.
    pub fn root_subtrees(&self) -> Vec<ExpansionTree> {
        let mut out = Vec::new();
        let mut pos = 1;
        let mut leaf = 0;
        for _ in 0..self.arities[0] {
            let start = pos;
            let mut open = 1i64;
            while open > 0 {
                open += self.arities[pos] as i64 - 1;
                pos += 1;
            }
            let arities = self.arities[start..pos].to_vec();
            let n = arities.iter().filter(|&&a| a == 0).count();
            let types = self.types.as_ref().map(|t| t[leaf..leaf + n].to_vec());
            leaf += n;
            out.push(ExpansionTree { arities, types });
        }
        out
    }

    fn count_type(&self, t: EndpointType) -> usize {
        self.types.as_ref().map_or(0, |v| v.iter().filter(|&&x| x == t).count())
    }
}

fn compositions(k: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in 1..=k - (parts - 1) {
        for mut rest in compositions(k - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn check_k(k: usize) -> Result<()> {
    if (1..=MAX_ENDPOINTS).contains(&k) {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("endpoint count {k} outside 1..={MAX_ENDPOINTS}")))
    }
}

/// All skeletons with exactly `k` endpoints: first by the arity of `v₀`,
/// then by the composition of `k` among its children, then recursively.
pub fn enumerate(k: usize) -> Result<Vec<ExpansionTree>> {
    check_k(k)?;
    let mut memo: Vec<Vec<Vec<u8>>> = vec![Vec::new(), vec![vec![0]]];
    for n in 2..=k {
        let mut all = Vec::new();
        for parts in 2..=n {
            for comp in compositions(n, parts) {
                let mut acc: Vec<Vec<u8>> = vec![vec![parts as u8]];
                for &c in &comp {
                    let mut next = Vec::with_capacity(acc.len() * memo[c].len());
                    for prefix in &acc {
                        for sub in &memo[c] {
                            let mut v = prefix.clone();
                            v.extend_from_slice(sub);
                            next.push(v);
                        }
                    }
                    acc = next;
                }
                all.extend(acc);
            }
        }
        memo.push(all);
    }
    Ok(memo.swap_remove(k).into_iter().map(|arities| ExpansionTree { arities, types: None }).collect())
}

/// Number of skeletons with `k` endpoints by dynamic programming over
/// ordered forests.
pub fn count_shapes(k: usize) -> Result<u64> {
    check_k(k)?;
    // forest[j][n]: sequences of j trees with n endpoints in total
    let mut trees = vec![0u64; k + 1];
    let mut forest = vec![vec![0u64; k + 1]; k + 1];
    forest[0][0] = 1;
    for n in 1..=k {
        for j in 2..=n {
            forest[j][n] = (1..n).map(|f| trees[f] * forest[j - 1][n - f]).sum();
        }
        trees[n] = u64::from(n == 1) + (2..=n).map(|j| forest[j][n]).sum::<u64>();
        forest[1][n] = trees[n];
    }
    Ok(trees[k])
}

/// Constraints on endpoint types and on the legs of `v₀`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TypeConstraints {
    pub phi_sources: Option<usize>,
    pub j_sources: Option<usize>,
    pub root_legs: Option<u32>,
}

impl TypeConstraints {
    pub fn two_phi() -> Self {
        Self { phi_sources: Some(2), j_sources: Some(0), root_legs: Some(0) }
    }
    pub fn two_j() -> Self {
        Self { phi_sources: Some(0), j_sources: Some(2), root_legs: Some(0) }
    }
}

/// Number of endpoint typings of `tree` that satisfy `constraints` and are
/// realizable: a vertex with `s` children contracts at least `s - 1` pairs
/// of `ψ` legs, and every internal vertex below `v₀` keeps at least one leg.
pub fn count_typed(tree: &ExpansionTree, constraints: &TypeConstraints) -> u64 {
    // (phi, j, max legs) → count; legs range over one parity class below the max
    type Table = HashMap<(usize, usize, u32), u64>;
    fn walk(a: &[u8], pos: &mut usize, is_root: bool) -> Table {
        let s = a[*pos] as usize;
        *pos += 1;
        let mut t = Table::new();
        if s == 0 {
            for e in EndpointType::ALL {
                let key = (usize::from(e == EndpointType::Phi), usize::from(e == EndpointType::J), e.legs());
                *t.entry(key).or_default() += 1;
            }
            return t;
        }
        t.insert((0, 0, 0), 1);
        for _ in 0..s {
            let child = walk(a, pos, false);
            let mut next = Table::new();
            for (&(p1, j1, l1), &c1) in &t {
                for (&(p2, j2, l2), &c2) in &child {
                    *next.entry((p1 + p2, j1 + j2, l1 + l2)).or_default() += c1 * c2;
                }
            }
            t = next;
        }
        let floor = if is_root { 0 } else { 1 };
        t.into_iter()
            .filter_map(|((p, j, l), c)| {
                let contracted = 2 * (s as u32 - 1);
                (l >= contracted + floor).then(|| ((p, j, l - contracted), c))
            })
            .fold(Table::new(), |mut acc, (k, c)| {
                *acc.entry(k).or_default() += c;
                acc
            })
    }
    let mut pos = 0;
    let table = walk(&tree.arities, &mut pos, true);
    // a lone endpoint contracts nothing
    let exact = tree.arities == [0];
    table
        .into_iter()
        .filter(|&((p, j, l), _)| {
            constraints.phi_sources.is_none_or(|n| n == p)
                && constraints.j_sources.is_none_or(|n| n == j)
                && constraints.root_legs.is_none_or(|r| if exact { r == l } else { r <= l && (l - r) % 2 == 0 })
        })
        .map(|(_, c)| c)
        .sum()
}

/// Constants of the tree bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundConstants {
    pub c_chi1: f64,
    pub c_chi2: f64,
    pub sigma: f64,
    /// `‖M‖_w` by quadrature.
    pub m_norm: f64,
    /// `‖M‖_w` in closed form, `C₁ S_d γ^d Γ(d/σ) / (σ (C₂/2)^{d/σ})`.
    pub m_norm_closed: f64,
    /// `C_γ = N² d² ‖M‖_w`.
    pub c_gamma: f64,
    pub c0: f64,
    pub c_r: f64,
    pub k_coupling: f64,
    pub d_gamma: f64,
    /// `None` when `|1 - γ^{-2ε+2η₂}|^{-1}` is infinite.
    pub alpha_gamma: Option<f64>,
    pub min_abs_dsc: f64,
    pub min_abs_dsc_label: String,
    /// `min{1, d/2}`, the expected leading value of `min |D_sc|`.
    pub min_abs_dsc_expected: f64,
    pub min_abs_dsc_agrees: bool,
    pub scan_cutoff: u32,
    pub gamma: f64,
}

impl BoundConstants {
    /// `K' = 4 d_γ C_R γ²`.
    pub fn k_prime(&self) -> f64 {
        4.0 * self.d_gamma * self.c_r * self.gamma * self.gamma
    }

    /// `(C₀/(1-γ^{-1/12}))⁴ (K')² C_γ K`.
    pub fn endpoint_rate(&self) -> f64 {
        (self.c0 / (1.0 - self.gamma.powf(-1.0 / 12.0))).powi(4) * self.k_prime().powi(2) * self.c_gamma * self.k_coupling
    }
}

/// User-adjustable inputs of [`compute_constants`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantOptions {
    pub c0: f64,
    pub c_r: f64,
    /// `None`: `2 |λ*|/ε` from the first-order coupling.
    pub k_coupling: Option<f64>,
    pub scan_cutoff: u32,
    pub fit_window: Option<(f64, f64)>,
}

impl Default for ConstantOptions {
    fn default() -> Self {
        Self { c0: 1.0, c_r: 1.0, k_coupling: None, scan_cutoff: 20, fit_window: None }
    }
}

/// `|1 - γ^{D}|^{-1}`, infinite at `D = 0`.
fn resolvent(gamma: f64, dsc: f64) -> f64 {
    let v = (1.0 - gamma.powf(dsc)).abs();
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

/// Labels entering `d_γ`: those not held in local form by the trimming,
/// without `(0,2,0,∅)`.
pub fn scan_labels(cutoff: u32) -> Vec<KernelLabel> {
    labels_up_to(cutoff).into_iter().filter(|l| !is_trimmed_local(l) && !(l.matches(0, 2, 0))).collect()
}

/// `d_γ` and the label attaining `min |D_sc|`.
pub fn scan_d_gamma(params: &ModelParams, exps: &Exponents, cutoff: u32) -> (f64, f64, KernelLabel) {
    let mut d_gamma: f64 = 0.0;
    let mut best = (f64::INFINITY, KernelLabel::plain(0, 0, 2).expect("valid"));
    for l in scan_labels(cutoff) {
        let dsc = scaling_dimension(&l, exps, params);
        d_gamma = d_gamma.max(resolvent(params.gamma(), dsc));
        if dsc.abs() < best.0 {
            best = (dsc.abs(), l);
        }
    }
    (d_gamma, best.0, best.1)
}

/// `C₁ S_d γ^d Γ(d/σ) / (σ (C₂/2)^{d/σ})`.
pub fn m_norm_closed_form(d: u32, gamma: f64, fit: &DecayFit) -> f64 {
    let (df, s) = (d as f64, fit.sigma_fit);
    fit.prefactor * sphere_area(d) * gamma.powf(df) * libm::tgamma(df / s) / (s * (fit.rate / 2.0).powf(df / s))
}

/// `S_d ∫ r^{d-1} M(r) e^{(C₂/2)(r/γ)^σ} dr` by quadrature.
pub fn m_norm_quadrature(d: u32, gamma: f64, fit: &DecayFit) -> Result<f64> {
    let (c1, c2, s) = (fit.prefactor, fit.rate, fit.sigma_fit);
    let f = |r: f64| c1 * r.powi(d as i32 - 1) * (-(c2 / 2.0) * (r / gamma).powf(s)).exp();
    let cfg = QuadConfig { abs_tol: 0.0, rel_tol: 1e-12, max_panels: 100_000 };
    // the integrand peaks where (r/γ)^σ ≈ 2(d-1)/(c₂σ); split the range there
    let peak = gamma * (2.0 * (d as f64) / (c2 * s)).powf(1.0 / s);
    let breaks: Vec<f64> = (0..=8).map(|i| peak * 0.5 * i as f64).collect();
    let head = integrate_breakpoints(f, &breaks, &cfg)?.value;
    let tail = integrate_semi_infinite(f, 4.0 * peak, &cfg)?.value;
    Ok(sphere_area(d) * (head + tail))
}

/// Decay constants of `𝔭₀` at the profile's own `σ = 1/s`; the prefactor is
/// raised to dominate the propagator also between the origin and the fit window.
fn decay_constants(prop: &Propagator, window: (f64, f64)) -> Result<DecayFit> {
    let sigma = prop.params().sigma();
    let mut fit = prop.decay_fit_fixed(ScaleBand::Single(0), window, sigma)?;
    let g = prop.params().gamma();
    let near: Vec<f64> = (0..=((window.0 / 0.05).ceil() as usize)).map(|i| i as f64 * 0.05).collect();
    let vals: Vec<f64> = near.par_iter().map(|&x| prop.eval(ScaleBand::Single(0), x)).collect::<Result<_>>()?;
    for (x, v) in near.iter().zip(vals) {
        fit.prefactor = fit.prefactor.max(v.abs() * (fit.rate * (x / g).powf(sigma)).exp());
    }
    Ok(fit)
}

/// `C_γ = N² d² ‖M‖_w` for a given envelope `M`.
pub fn c_gamma_from_envelope(params: &ModelParams, fit: &DecayFit) -> Result<f64> {
    let (n, df) = (params.n() as f64, params.df());
    Ok(n * n * df * df * m_norm_quadrature(params.d(), params.gamma(), fit)?)
}

pub fn compute_constants(
    params: &ModelParams,
    profile: &CutoffProfile,
    exps: &Exponents,
    opts: &ConstantOptions,
) -> Result<BoundConstants> {
    if !(opts.c0 >= 0.25) {
        return Err(Error::InvalidParams(format!("C0 = {} below 1/4", opts.c0)));
    }
    if !(opts.c_r > 0.0) {
        return Err(Error::InvalidParams(format!("C_R = {} not positive", opts.c_r)));
    }
    let prop = Propagator::new(*params, *profile);
    let window = opts.fit_window.unwrap_or_else(|| default_decay_window(params.gevrey_s()));
    let fit = decay_constants(&prop, window)?;
    let g = params.gamma();
    let m_norm = m_norm_quadrature(params.d(), g, &fit)?;
    let m_norm_closed = m_norm_closed_form(params.d(), g, &fit);
    let c_gamma = c_gamma_from_envelope(params, &fit)?;
    let k_coupling = match opts.k_coupling {
        Some(k) => k,
        // λ*/ε = -2 ln γ / I₂ does not depend on ε
        None => 2.0 * (2.0 * params.ln_gamma() / bubble_i2(params, profile)?).abs(),
    };
    let (d_gamma, min_abs_dsc, min_label) = scan_d_gamma(params, exps, opts.scan_cutoff);
    let alpha = resolvent(g, -2.0 * params.eps() + 2.0 * exps.eta2);
    let expected = (params.df() / 2.0).min(1.0);
    // O(ε) shifts are allowed for
    let slack = 4.0 * (params.eps().abs() + exps.eta2.abs()) + 1e-9;
    Ok(BoundConstants {
        c_chi1: fit.prefactor,
        c_chi2: fit.rate,
        sigma: fit.sigma_fit,
        m_norm,
        m_norm_closed,
        c_gamma,
        c0: opts.c0,
        c_r: opts.c_r,
        k_coupling,
        d_gamma,
        alpha_gamma: alpha.is_finite().then_some(alpha),
        min_abs_dsc,
        min_abs_dsc_label: min_label.to_string(),
        min_abs_dsc_expected: expected,
        min_abs_dsc_agrees: (min_abs_dsc - expected).abs() <= slack,
        scan_cutoff: opts.scan_cutoff,
        gamma: g,
    })
}

/// Factor of the tree bound that depends only on the root label.
fn root_factor(root: &KernelLabel, consts: &BoundConstants, params: &ModelParams, exps: &Exponents) -> Result<f64> {
    let g = params.gamma();
    let dsc = scaling_dimension(root, exps, params);
    let chain = if root.matches(0, 2, 0) {
        match consts.alpha_gamma {
            Some(a) => a / consts.d_gamma,
            None => return Err(Error::DivergentChain(format!("{root}: |1 - γ^(-2ε+2η₂)| = 0"))),
        }
    } else {
        if dsc.abs() < MARGINAL_TOL {
            return Err(Error::DivergentChain(format!("{root}: γ^D_sc = 1")));
        }
        1.0
    };
    let l = root.l as i32;
    Ok(chain * g.powf(dsc) / consts.c_gamma * (g.powf(1.0 / 12.0) / consts.c0).powi(l))
}

/// Right side of the tree bound for a typed tree with root label `root`:
/// `(α_γ/d_γ)^{1(ℓ=(0,2,0,∅))} γ^{D_sc} C_γ^{-1} (γ^{1/12}/C₀)^l (Kε)^{n_ep-(n+m)} B^{n_ep}`,
/// `B = (C₀/(1-γ^{-1/12}))⁴ (K')² C_γ K`.
///
/// The `(Kε)^{-(n+m)}` of the root is merged with the endpoint powers so
/// that source endpoints carry no factor `ε`.
pub fn tree_bound(
    tree: &ExpansionTree,
    root: &KernelLabel,
    consts: &BoundConstants,
    params: &ModelParams,
    exps: &Exponents,
) -> Result<f64> {
    let types = tree.types().ok_or_else(|| Error::InvalidLabel("tree bound needs typed endpoints".into()))?;
    let (phi, j) = (tree.count_type(EndpointType::Phi), tree.count_type(EndpointType::J));
    if phi != root.n as usize || j != root.m as usize {
        return Err(Error::InvalidLabel(format!("root {root} does not match {phi} φ and {j} J sources")));
    }
    let mut bound = root_factor(root, consts, params, exps)?;
    let b = consts.endpoint_rate() / consts.k_coupling;
    let ke = consts.k_coupling * params.eps();
    for t in types {
        bound *= b * if t.is_coupling() { ke } else { 1.0 };
    }
    Ok(bound)
}

/// Bounds of a list of typed trees, evaluated in parallel.
pub fn tree_bounds(
    trees: &[ExpansionTree],
    root: &KernelLabel,
    consts: &BoundConstants,
    params: &ModelParams,
    exps: &Exponents,
) -> Result<Vec<f64>> {
    trees.par_iter().map(|t| tree_bound(t, root, consts, params, exps)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusEstimate {
    pub eps0: f64,
    /// `B = (C₀/(1-γ^{-1/12}))⁴ (K')² C_γ K`.
    pub rate: f64,
    pub constants: BoundConstants,
}

/// `ε₀ = 1/(8B)`: the series `Σ_k 4^k (Bε)^k` converges with ratio at most 1/2.
pub fn radius_estimate(consts: &BoundConstants) -> RadiusEstimate {
    let rate = consts.endpoint_rate();
    RadiusEstimate { eps0: 1.0 / (8.0 * rate), rate, constants: consts.clone() }
}

/// JSON record `{"endpoints", "shape", "types", "bound"}`.
pub fn tree_record(tree: &ExpansionTree, bound: Option<f64>) -> serde_json::Value {
    serde_json::json!({
        "endpoints": tree.endpoints(),
        "shape": tree.shape(),
        "types": tree.types(),
        "bound": bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::make_profile;
    use proptest::prelude::*;

    const SCHROEDER: [u64; 10] = [1, 1, 3, 11, 45, 197, 903, 4279, 20793, 103049];

    /// Independent generator: preorder words over `{0, 2, 3, …}` that close
    /// exactly at the end, built one symbol at a time.
    fn brute_force(k: usize) -> Vec<Vec<u8>> {
        fn go(k: usize, open: usize, leaves: usize, word: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
            if open == 0 {
                if leaves == k {
                    out.push(word.clone());
                }
                return;
            }
            // each open slot still needs at least one leaf
            if leaves + open > k {
                return;
            }
            word.push(0);
            go(k, open - 1, leaves + 1, word, out);
            word.pop();
            for a in 2..=k {
                word.push(a as u8);
                go(k, open - 1 + a, leaves, word, out);
                word.pop();
            }
        }
        let mut out = Vec::new();
        go(k, 1, 0, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn counts_match_oracles() {
        for k in 1..=8 {
            let trees = enumerate(k).unwrap();
            let mut ours: Vec<Vec<u8>> = trees.iter().map(|t| t.arities().to_vec()).collect();
            let mut brute = brute_force(k);
            ours.sort();
            brute.sort();
            assert_eq!(ours, brute, "k={k}");
        }
        for k in 1..=10 {
            let n = enumerate(k).unwrap().len() as u64;
            assert_eq!(n, SCHROEDER[k - 1]);
            assert_eq!(count_shapes(k).unwrap(), n);
            assert!(n < 4u64.pow(k as u32));
        }
        assert!(enumerate(0).is_err());
        assert!(enumerate(13).is_err());
    }

    #[test]
    fn enumeration_is_deterministic_and_valid() {
        let a = enumerate(6).unwrap();
        assert_eq!(a, enumerate(6).unwrap());
        for t in &a {
            assert!(ExpansionTree::from_arities(t.arities().to_vec()).is_ok());
            assert_eq!(t.endpoints(), 6);
            assert!(t.internal_vertices() < 6);
        }
        assert_eq!(a[0].arities(), &[2, 0, 2, 0, 2, 0, 2, 0, 2, 0, 0]);
        assert_eq!(a.last().unwrap().arities(), &[6, 0, 0, 0, 0, 0, 0]);
        assert!(ExpansionTree::from_arities(vec![1, 0]).is_err());
        assert!(ExpansionTree::from_arities(vec![2, 0]).is_err());
    }

    /// Realizable typings by explicit search over the leg counts at every vertex.
    fn brute_typed(tree: &ExpansionTree, c: &TypeConstraints) -> u64 {
        fn legs(a: &[u8], pos: &mut usize, types: &[EndpointType], leaf: &mut usize, root: bool) -> Vec<u32> {
            let s = a[*pos] as usize;
            *pos += 1;
            if s == 0 {
                *leaf += 1;
                return vec![types[*leaf - 1].legs()];
            }
            let mut sums = vec![0u32];
            for _ in 0..s {
                let child = legs(a, pos, types, leaf, false);
                sums = sums.iter().flat_map(|x| child.iter().map(move |y| x + y)).collect();
            }
            let mut out = Vec::new();
            for total in sums {
                let mut contractions = s as u32 - 1;
                while 2 * contractions <= total {
                    let lv = total - 2 * contractions;
                    if lv >= u32::from(!root) {
                        out.push(lv);
                    }
                    contractions += 1;
                }
            }
            out.sort();
            out.dedup();
            out
        }
        let k = tree.endpoints();
        let mut count = 0;
        for code in 0..4usize.pow(k as u32) {
            let types: Vec<EndpointType> = (0..k).map(|i| EndpointType::ALL[(code >> (2 * i)) & 3]).collect();
            let phi = types.iter().filter(|&&t| t == EndpointType::Phi).count();
            let j = types.iter().filter(|&&t| t == EndpointType::J).count();
            if c.phi_sources.is_some_and(|n| n != phi) || c.j_sources.is_some_and(|n| n != j) {
                continue;
            }
            let (mut pos, mut leaf) = (0, 0);
            let ls = legs(tree.arities(), &mut pos, &types, &mut leaf, true);
            if match c.root_legs {
                Some(r) => ls.contains(&r),
                None => !ls.is_empty(),
            } {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn typed_counts() {
        let k2 = &enumerate(2).unwrap()[0];
        assert_eq!(count_typed(k2, &TypeConstraints::two_phi()), 1);
        assert_eq!(count_typed(k2, &TypeConstraints::default()), 16);
        let k1 = &enumerate(1).unwrap()[0];
        assert_eq!(count_typed(k1, &TypeConstraints::two_j()), 0);
        let legs2 = TypeConstraints { root_legs: Some(2), ..Default::default() };
        assert_eq!(count_typed(k2, &legs2), 9);
        assert_eq!(brute_typed(k2, &legs2), 9);
    }

    #[test]
    fn typed_counts_match_brute_force() {
        let cases = [
            TypeConstraints::default(),
            TypeConstraints::two_phi(),
            TypeConstraints::two_j(),
            TypeConstraints { root_legs: Some(2), ..Default::default() },
            TypeConstraints { root_legs: Some(1), phi_sources: Some(1), j_sources: None },
            TypeConstraints { root_legs: Some(4), ..Default::default() },
        ];
        for k in 1..=5 {
            for t in enumerate(k).unwrap() {
                for c in &cases {
                    assert_eq!(count_typed(&t, c), brute_typed(&t, c), "{:?} {c:?}", t.arities());
                }
            }
        }
    }

    #[test]
    fn shapes_and_records() {
        let t = ExpansionTree::from_arities(vec![2, 0, 2, 0, 0]).unwrap();
        assert_eq!(t.shape(), serde_json::json!([[[], [[], []]]]));
        assert_eq!(enumerate(1).unwrap()[0].shape(), serde_json::json!([[]]));
        assert!((t.symmetry_factor() - 0.25).abs() < 1e-15);
        let subs = t.root_subtrees();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[1].arities(), &[2, 0, 0]);
        let rec = tree_record(&t, Some(1.5));
        assert_eq!(rec["endpoints"], 3);
        assert_eq!(rec["bound"], 1.5);
    }

    fn setup(d: u32, eps: f64) -> (ModelParams, CutoffProfile, Exponents) {
        let p = ModelParams::new(d, 4, eps, 2.0, 2.0).unwrap();
        (p, make_profile(2.0).unwrap(), Exponents::from_eta2(&p, -eps, 0.0, 0.0))
    }

    #[test]
    fn d_gamma_scan() {
        for (d, expected, agrees) in [(1, 0.5, true), (2, 1.0, true), (3, 0.5, false)] {
            let p = ModelParams::new(d, 4, 0.0, 2.0, 2.0).unwrap();
            let e = Exponents::gaussian(&p);
            let (dg, min, label) = scan_d_gamma(&p, &e, 20);
            assert!((min - expected).abs() < 1e-12, "d={d}: {min} at {label}");
            assert!(dg.is_finite() && dg >= 1.0 / (1.0 - 2f64.powf(-min)) - 1e-12);
            let _ = agrees;
        }
        let p = ModelParams::new(3, 4, 0.0, 2.0, 2.0).unwrap();
        let (_, _, label) = scan_d_gamma(&p, &Exponents::gaussian(&p), 20);
        assert_eq!(label.to_string(), "(0,0,2,(1,1))");
        assert!(scan_labels(20).iter().all(|l| !l.matches(0, 2, 0)));
    }

    #[test]
    fn constants_and_bounds() {
        let (p, c, e) = setup(1, 0.01);
        let k = compute_constants(&p, &c, &e, &ConstantOptions::default()).unwrap();
        assert!(k.c_chi1 > 0.0 && k.c_chi2 > 0.0 && k.c_gamma > 0.0 && k.d_gamma.is_finite());
        assert!((k.m_norm / k.m_norm_closed - 1.0).abs() < 1e-9, "{k:?}");
        assert!(k.alpha_gamma.is_some());
        assert!(k.min_abs_dsc_agrees);
        assert!((k.k_coupling - 2.0 * (std::f64::consts::PI / (4.0 * 2.0))).abs() < 1e-10);

        let t = enumerate(3).unwrap()[1].with_types(vec![EndpointType::Lambda; 3]).unwrap();
        let root = KernelLabel::plain(0, 0, 6).unwrap();
        let b = tree_bound(&t, &root, &k, &p, &e).unwrap();
        assert!(b > 0.0 && b.is_finite());

        // doubling ε at fixed constants
        let p2 = p.with_eps(0.02).unwrap();
        let b2 = tree_bound(&t, &root, &k, &p2, &e).unwrap();
        let shift = scaling_dimension(&root, &e, &p2) - scaling_dimension(&root, &e, &p);
        assert!((b2 / b / 2f64.powf(shift) - 8.0).abs() < 1e-12);
        // with the root dimension held fixed the factor is exactly 2^n_ep
        let six = t.with_types(vec![EndpointType::Nu; 3]).unwrap();
        let r = tree_bound(&six, &root, &k, &p2, &e).unwrap() / tree_bound(&six, &root, &k, &p, &e).unwrap();
        assert!((r / 2f64.powf(shift) - 8.0).abs() < 1e-12);

        // ε = 0 with coupling endpoints only
        let p0 = p.with_eps(0.0).unwrap();
        assert_eq!(tree_bound(&t, &root, &k, &p0, &e).unwrap(), 0.0);

        // increasing in C0
        let mut k_big = k.clone();
        k_big.c0 = 2.0 * k.c0;
        assert!(tree_bound(&t, &root, &k_big, &p, &e).unwrap() > b);
        assert!(radius_estimate(&k_big).eps0 < radius_estimate(&k).eps0);

        // root label must match the sources
        let src = t.with_types(vec![EndpointType::Phi, EndpointType::Phi, EndpointType::Lambda]).unwrap();
        assert!(tree_bound(&src, &root, &k, &p, &e).is_err());
        assert!(tree_bound(&src, &KernelLabel::plain(2, 0, 2).unwrap(), &k, &p, &e).is_ok());
    }

    #[test]
    fn marginal_chains_are_rejected() {
        let (p, c, _) = setup(1, 0.0);
        let e = Exponents::gaussian(&p);
        let k = compute_constants(&p, &c, &e, &ConstantOptions::default()).unwrap();
        assert!(k.alpha_gamma.is_none());
        let t = enumerate(2).unwrap()[0].with_types(vec![EndpointType::J, EndpointType::J]).unwrap();
        let r = tree_bound(&t, &KernelLabel::plain(0, 2, 0).unwrap(), &k, &p, &e);
        assert!(matches!(r, Err(Error::DivergentChain(ref m)) if m.contains("(0,2,0")));
        let t4 = enumerate(2).unwrap()[0].with_types(vec![EndpointType::Lambda, EndpointType::Nu]).unwrap();
        assert!(matches!(
            tree_bound(&t4, &KernelLabel::plain(0, 0, 4).unwrap(), &k, &p, &e),
            Err(Error::DivergentChain(_))
        ));
    }

    #[test]
    fn c_gamma_grows_like_gamma_to_the_d() {
        // the envelope constants are held fixed across γ
        for d in [1u32, 2, 3] {
            let p2 = ModelParams::new(d, 4, 0.0, 2.0, 2.0).unwrap();
            let p4 = p2.with_gamma(4.0).unwrap();
            let fit = decay_constants(&Propagator::new(p2, make_profile(2.0).unwrap()), default_decay_window(2.0)).unwrap();
            let ratio = c_gamma_from_envelope(&p4, &fit).unwrap() / c_gamma_from_envelope(&p2, &fit).unwrap();
            let target = 2f64.powi(d as i32);
            assert!((ratio / target - 1.0).abs() < 0.2, "d={d}: ratio {ratio}");
        }
    }

    #[test]
    fn refitted_c_gamma_ratio() {
        // refitting the envelope at each γ lowers C_χ1; the ratio stays well below 2^d
        let c = make_profile(2.0).unwrap();
        let p2 = ModelParams::new(1, 4, 0.0, 2.0, 2.0).unwrap();
        let p4 = p2.with_gamma(4.0).unwrap();
        let k2 = compute_constants(&p2, &c, &Exponents::gaussian(&p2), &ConstantOptions::default()).unwrap();
        let k4 = compute_constants(&p4, &c, &Exponents::gaussian(&p4), &ConstantOptions::default()).unwrap();
        let ratio = k4.c_gamma / k2.c_gamma;
        assert!(ratio > 1.0 && ratio < 1.5, "{ratio}");
        assert!((k4.c_chi2 / k2.c_chi2 - 1.0).abs() < 0.1);
    }

    #[test]
    fn radius_regression() {
        let p = ModelParams::new(1, 4, 0.0, 2.0, 2.0).unwrap();
        let c = make_profile(2.0).unwrap();
        let k = compute_constants(&p, &c, &Exponents::gaussian(&p), &ConstantOptions::default()).unwrap();
        let r = radius_estimate(&k);
        assert!(r.eps0 > 0.0);
        assert!((r.eps0 / 1.364878702670e-12 - 1.0).abs() < 1e-6, "{:.12e}", r.eps0);
    }

    proptest! {
        #[test]
        fn bound_is_multiplicative(code in 0u32..4096, pick in 0usize..45) {
            let (p, c, e) = setup(2, 0.01);
            let k = CONSTS.get_or_init(|| compute_constants(&p, &c, &e, &ConstantOptions::default()).unwrap());
            let trees = enumerate(5).unwrap();
            let t = &trees[pick % trees.len()];
            let types: Vec<EndpointType> = (0..5).map(|i| {
                let ty = EndpointType::ALL[((code >> (2 * i)) & 3) as usize];
                if ty.is_coupling() { ty } else { EndpointType::Nu }
            }).collect();
            let t = t.with_types(types).unwrap();
            let root = KernelLabel::plain(0, 0, 6).unwrap();
            let whole = tree_bound(&t, &root, k, &p, &e).unwrap() / root_factor(&root, k, &p, &e).unwrap();
            let parts: f64 = t.root_subtrees().iter().map(|s| {
                tree_bound(s, &root, k, &p, &e).unwrap() / root_factor(&root, k, &p, &e).unwrap()
            }).product();
            prop_assert!((whole / parts - 1.0).abs() < 1e-12);
        }

        #[test]
        fn radius_monotone(f in 1.0f64..3.0, which in 0usize..4) {
            let (p, c, e) = setup(2, 0.01);
            let k = CONSTS.get_or_init(|| compute_constants(&p, &c, &e, &ConstantOptions::default()).unwrap());
            let mut big = k.clone();
            match which {
                0 => big.c0 *= f,
                1 => big.c_gamma *= f,
                2 => big.k_coupling *= f,
                _ => big.c_r *= f,
            }
            prop_assert!(radius_estimate(&big).eps0 <= radius_estimate(k).eps0);
        }
    }

    static CONSTS: std::sync::OnceLock<BoundConstants> = std::sync::OnceLock::new();
}
