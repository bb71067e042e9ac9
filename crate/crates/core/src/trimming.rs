//! Localization and interpolation of scalar test kernels.
//!
//! Kernels are translation invariant and are given through their relative
//! coordinates: `G(x, z) = g(z - x)` and `F(y, z₁, z₂) = f(z₁ - y, z₂ - y)`.
//! Each kernel carries a truncation radius `R` beyond which it is treated as
//! zero; interpolated kernels inherit it.
//!
//! With `u = 1/s` and then `v = u|w|`, the interpolation integral becomes
//! `G^μ(w) = w_μ |w|^{-d} ∫_{|w|}^{R} v^{d-1} g(v ŵ) dv`, a finite integral for
//! every `w ≠ 0`. The two-leg case has `2d` in place of `d`.
//!
//! The norm and identity checks work in relative coordinates with `d = 1`;
//! the two-leg plane `(z₁, z₂)` is integrated in polar coordinates, which
//! absorb the `1/|z|` singularity of the interpolated kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{compensated_sum, gauss_legendre, integrate, integrate_breakpoints, QuadConfig};

type Kernel = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn quad() -> QuadConfig {
    QuadConfig { abs_tol: 1e-15, rel_tol: 1e-13, max_panels: 50_000 }
}

/// `G(x, z) = g(z - x)` on ℝ^d × ℝ^d.
#[derive(Clone)]
pub struct TestKernel101 {
    d: usize,
    radius: f64,
    g: Kernel,
}

impl std::fmt::Debug for TestKernel101 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestKernel101").field("d", &self.d).field("radius", &self.radius).finish()
    }
}

impl TestKernel101 {
    pub fn new<F>(d: usize, radius: f64, g: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dim(d)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange(format!("truncation radius {radius}")));
        }
        Ok(Self { d, radius, g: Arc::new(g) })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `g(w)`, zero outside the truncation radius.
    pub fn eval_rel(&self, w: &[f64]) -> f64 {
        if norm(w) > self.radius {
            0.0
        } else {
            (self.g)(w)
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        let w: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
        self.eval_rel(&w)
    }

    /// `a G + b H`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::OutOfRange("kernels of different dimension".into()));
        }
        let (g, h) = (self.clone(), other.clone());
        Self::new(self.d, self.radius.max(other.radius), move |w| a * g.eval_rel(w) + b * h.eval_rel(w))
    }
}

/// `F(y, z₁, z₂) = f(z₁ - y, z₂ - y)`.
#[derive(Clone)]
pub struct TestKernel012 {
    d: usize,
    radius: f64,
    f: Kernel,
}

impl std::fmt::Debug for TestKernel012 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestKernel012").field("d", &self.d).field("radius", &self.radius).finish()
    }
}

impl TestKernel012 {
    /// `f` receives `(a, b) = (z₁ - y, z₂ - y)` flattened to `2d` reals.
    pub fn new<F>(d: usize, radius: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_dim(d)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange(format!("truncation radius {radius}")));
        }
        Ok(Self { d, radius, f: Arc::new(f) })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval_rel(&self, ab: &[f64]) -> f64 {
        if norm(ab) > self.radius {
            0.0
        } else {
            (self.f)(ab)
        }
    }

    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::OutOfRange("kernels of different dimension".into()));
        }
        let (f, h) = (self.clone(), other.clone());
        Self::new(self.d, self.radius.max(other.radius), move |ab| a * f.eval_rel(ab) + b * h.eval_rel(ab))
    }
}

/// Which leg of a two-leg kernel carries the derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Leg {
    First,
    Second,
}

fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension {d} outside 1..=3")))
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `∫_{[-R,R]^n} h` by nested adaptive quadrature, split at 0 in every
/// coordinate.
fn cube_integral(h: &(dyn Fn(&[f64]) -> f64 + Sync), n: usize, radius: f64) -> Result<f64> {
    fn level(h: &(dyn Fn(&[f64]) -> f64 + Sync), pt: &mut Vec<f64>, n: usize, r: f64) -> Result<f64> {
        if pt.len() == n {
            return Ok(h(pt));
        }
        let cell = std::cell::RefCell::new((pt.clone(), None::<Error>));
        let inner = |t: f64| {
            let mut c = cell.borrow_mut();
            let mut p = c.0.clone();
            p.push(t);
            match level(h, &mut p, n, r) {
                Ok(v) => v,
                Err(e) => {
                    c.1.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        let v = integrate_breakpoints(inner, &[-r, 0.0, r], &quad());
        if let Some(e) = cell.into_inner().1 {
            return Err(e);
        }
        Ok(v?.value)
    }
    level(h, &mut Vec::with_capacity(n), n, radius)
}

/// `Ĝ(0) = ∫ G(0, z) dz`.
pub fn localize_101(g: &TestKernel101) -> Result<f64> {
    cube_integral(&|w| g.eval_rel(w), g.d, g.radius)
}

/// `G^μ(x, z) = ∫₀¹ ds s^{-d-1} G(x, x + (z-x)/s) (z-x)_μ`.
pub fn interpolate_101(g: &TestKernel101, mu: usize) -> Result<TestKernel101> {
    if mu >= g.d {
        return Err(Error::OutOfRange(format!("direction {mu} in d={}", g.d)));
    }
    let src = g.clone();
    let d = g.d;
    TestKernel101::new(d, g.radius, move |w| radial_tail(&|p| src.eval_rel(p), w, d, mu, src.radius))
}

/// `w_μ |w|^{-k} ∫_{|w|}^{R} v^{k-1} h(v ŵ) dv`, the interpolation integral
/// after `u = 1/s`, `v = u|w|`, with `k` the total dimension.
fn radial_tail(h: &dyn Fn(&[f64]) -> f64, w: &[f64], k: usize, mu: usize, radius: f64) -> f64 {
    let r = norm(w);
    if r == 0.0 || r >= radius {
        return 0.0;
    }
    let dir: Vec<f64> = w.iter().map(|a| a / r).collect();
    let f = |v: f64| {
        let p: Vec<f64> = dir.iter().map(|di| v * di).collect();
        v.powi(k as i32 - 1) * h(&p)
    };
    let inner = integrate(f, r, radius, &quad()).map(|e| e.value).unwrap_or(f64::NAN);
    w[mu] * r.powi(-(k as i32)) * inner
}

/// `∫∫ F(0, z₁, z₂) dz₁ dz₂`.
pub fn localize_012(f: &TestKernel012) -> Result<f64> {
    if f.d == 1 {
        // polar coordinates resolve narrow kernels concentrated at the origin
        let rf = |r: f64, th: f64| r * f.eval_rel(&[r * th.cos(), r * th.sin()]);
        return polar_integral(&rf, f.radius);
    }
    cube_integral(&|ab| f.eval_rel(ab), 2 * f.d, f.radius)
}

fn polar_integral(h: &(dyn Fn(f64, f64) -> f64 + Sync), radius: f64) -> Result<f64> {
    let thetas: Vec<f64> = (0..=8).map(|i| i as f64 * PI / 4.0).collect();
    let err = std::cell::RefCell::new(None::<Error>);
    let outer = |th: f64| match integrate(|r| h(r, th), 0.0, radius, &quad()) {
        Ok(e) => e.value,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let v = integrate_breakpoints(outer, &thetas, &quad());
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(v?.value)
}

/// `F^{(1,0)}` or `F^{(0,1)}`: `(z_i - y)_μ ∫₀¹ ds s^{-2d-1} F(y, y + (z-y)/s)`.
pub fn interpolate_012(f: &TestKernel012, which: Leg, mu: usize) -> Result<TestKernel012> {
    if mu >= f.d {
        return Err(Error::OutOfRange(format!("direction {mu} in d={}", f.d)));
    }
    let src = f.clone();
    let d = f.d;
    let index = match which {
        Leg::First => mu,
        Leg::Second => d + mu,
    };
    TestKernel012::new(d, f.radius, move |ab| radial_tail(&|p| src.eval_rel(p), ab, 2 * d, index, src.radius))
}

/// Gauss–Legendre rule on `[a, b]` split into `panels` equal panels.
fn panel_rule(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|p| {
            let c = a + (p as f64 + 0.5) * h;
            x.iter().zip(&w).map(move |(xi, wi)| (c + 0.5 * h * xi, 0.5 * h * wi)).collect::<Vec<_>>()
        })
        .collect()
}

/// Polar rule on the disc of radius `radius`: `(a, b, weight)` with the
/// Jacobian included.
fn polar_rule(radius: f64) -> Vec<(f64, f64, f64)> {
    let rs = panel_rule(0.0, radius, 16, 12);
    let ts = panel_rule(0.0, 2.0 * PI, 16, 12);
    let mut out = Vec::with_capacity(rs.len() * ts.len());
    for &(t, wt) in &ts {
        for &(r, wr) in &rs {
            out.push((r * t.cos(), r * t.sin(), r * wr * wt));
        }
    }
    out
}

fn line_rule(radius: f64) -> Vec<(f64, f64)> {
    let mut v = panel_rule(-radius, 0.0, 24, 16);
    v.extend(panel_rule(0.0, radius, 24, 16));
    v
}

fn need_d1(d: usize) -> Result<()> {
    if d == 1 {
        Ok(())
    } else {
        Err(Error::Domain(format!("norm and identity checks are implemented for d=1, got d={d}")))
    }
}

/// `∫ |G(0, z)| dz` and `∫ |G(0, z)| |z| dz` (d = 1).
pub fn moments_101(g: &TestKernel101) -> Result<(f64, f64)> {
    need_d1(g.d)?;
    let rule = line_rule(g.radius);
    let m0 = compensated_sum(rule.iter().map(|&(w, wt)| wt * g.eval_rel(&[w]).abs()));
    let m1 = compensated_sum(rule.iter().map(|&(w, wt)| wt * (g.eval_rel(&[w]) * w).abs()));
    Ok((m0, m1))
}

/// `∫ G(0, z) dz` and `∫ |G(0, z)| dz` of a kernel (d = 1).
fn zeroth_moments_101(g: &TestKernel101) -> Result<(f64, f64)> {
    need_d1(g.d)?;
    let rule = line_rule(g.radius);
    let vals: Vec<f64> = rule.par_iter().map(|&(w, _)| g.eval_rel(&[w])).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence { estimate: f64::NAN, error: f64::INFINITY, panels: 0 });
    }
    let signed = compensated_sum(rule.iter().zip(&vals).map(|(r, v)| r.1 * v));
    let abs = compensated_sum(rule.iter().zip(&vals).map(|(r, v)| r.1 * v.abs()));
    Ok((signed, abs))
}

/// `∫∫ |F(0, z)| dz`, `∫∫ |F(0, z)| |z₁| dz` and `∫∫ |F(0, z)| |z₂| dz` (d = 1).
pub fn moments_012(f: &TestKernel012) -> Result<(f64, f64, f64)> {
    need_d1(f.d)?;
    let rule = polar_rule(f.radius);
    let m = |k: usize| {
        compensated_sum(rule.iter().map(|&(a, b, wt)| {
            let v = f.eval_rel(&[a, b]).abs();
            wt * match k {
                0 => v,
                1 => v * a.abs(),
                _ => v * b.abs(),
            }
        }))
    };
    Ok((m(0), m(1), m(2)))
}

fn zeroth_moments_012(f: &TestKernel012) -> Result<(f64, f64)> {
    need_d1(f.d)?;
    let rule = polar_rule(f.radius);
    let vals: Vec<f64> = rule.par_iter().map(|&(a, b, _)| f.eval_rel(&[a, b])).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence { estimate: f64::NAN, error: f64::INFINITY, panels: 0 });
    }
    let signed = compensated_sum(rule.iter().zip(&vals).map(|(r, v)| r.2 * v));
    let abs = compensated_sum(rule.iter().zip(&vals).map(|(r, v)| r.2 * v.abs()));
    Ok((signed, abs))
}

/// `‖G^μ‖ = ∫ |G^μ(0, z)| dz` (d = 1, unweighted).
pub fn norm_101(g: &TestKernel101) -> Result<f64> {
    Ok(zeroth_moments_101(g)?.1)
}

/// Zeroth moment `∫ G(0, z) dz` on the check grid (d = 1).
pub fn zeroth_moment_101(g: &TestKernel101) -> Result<f64> {
    Ok(zeroth_moments_101(g)?.0)
}

pub fn norm_012(f: &TestKernel012) -> Result<f64> {
    Ok(zeroth_moments_012(f)?.1)
}

pub fn zeroth_moment_012(f: &TestKernel012) -> Result<f64> {
    Ok(zeroth_moments_012(f)?.0)
}

/// Smooth test field with value and derivative.
pub type TestField = fn(f64) -> (f64, f64);

/// Both sides of the two-leg trimming identity for `φ, ψ` (d = 1):
/// `∬ φ(x) G(x,z) ψ(z)` against `Ĝ(0) ∫ φψ + ∬ φ(x) G¹(x,z) ψ'(z)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    pub direct: f64,
    pub local: f64,
    pub remainder: f64,
    pub residual: f64,
}

/// Rule for the outer coordinate of the identity checks.
fn field_rule() -> Vec<(f64, f64)> {
    panel_rule(-9.7, 10.3, 10, 20)
}

pub fn identity_101(g: &TestKernel101, phi: TestField, psi: TestField) -> Result<IdentityCheck> {
    need_d1(g.d)?;
    let loc = localize_101(g)?;
    let gmu = interpolate_101(g, 0)?;
    let rule = line_rule(g.radius);
    let gv: Vec<f64> = rule.iter().map(|&(w, _)| g.eval_rel(&[w])).collect();
    let gm: Vec<f64> = rule.par_iter().map(|&(w, _)| gmu.eval_rel(&[w])).collect();
    if gm.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence { estimate: f64::NAN, error: f64::INFINITY, panels: 0 });
    }
    let xs = field_rule();
    let mut direct = Vec::new();
    let mut local = Vec::new();
    let mut rem = Vec::new();
    for &(x, wx) in &xs {
        let px = phi(x).0;
        local.push(wx * px * psi(x).0);
        for (k, &(w, ww)) in rule.iter().enumerate() {
            let (pv, pd) = psi(x + w);
            direct.push(wx * ww * px * gv[k] * pv);
            rem.push(wx * ww * px * gm[k] * pd);
        }
    }
    let direct = compensated_sum(direct);
    let local = loc * compensated_sum(local);
    let remainder = compensated_sum(rem);
    Ok(IdentityCheck { direct, local, remainder, residual: (direct - local - remainder).abs() })
}

/// Three-leg identity for `φ(y), ψ₁(z₁), ψ₂(z₂)` (d = 1): `∫ φ F ψ₁ψ₂`
/// against `F̂ ∫ φψ₁ψ₂ + ∫ φ F^{(1,0)} ψ₁'ψ₂ + ∫ φ F^{(0,1)} ψ₁ψ₂'`.
pub fn identity_012(f: &TestKernel012, phi: TestField, psi1: TestField, psi2: TestField) -> Result<IdentityCheck> {
    need_d1(f.d)?;
    let loc = localize_012(f)?;
    let f10 = interpolate_012(f, Leg::First, 0)?;
    let f01 = interpolate_012(f, Leg::Second, 0)?;
    let rule = polar_rule(f.radius);
    let fv: Vec<f64> = rule.iter().map(|&(a, b, _)| f.eval_rel(&[a, b])).collect();
    let i10: Vec<f64> = rule.par_iter().map(|&(a, b, _)| f10.eval_rel(&[a, b])).collect();
    let i01: Vec<f64> = rule.par_iter().map(|&(a, b, _)| f01.eval_rel(&[a, b])).collect();
    if i10.iter().chain(&i01).any(|v| !v.is_finite()) {
        return Err(Error::Convergence { estimate: f64::NAN, error: f64::INFINITY, panels: 0 });
    }
    let ys = field_rule();
    let parts: Vec<(f64, f64, f64)> = ys
        .par_iter()
        .map(|&(y, wy)| {
            let py = phi(y).0;
            let (mut dir, mut rem) = (Vec::new(), Vec::new());
            for (k, &(a, b, w)) in rule.iter().enumerate() {
                let (u1, d1) = psi1(y + a);
                let (u2, d2) = psi2(y + b);
                dir.push(w * fv[k] * u1 * u2);
                rem.push(w * (i10[k] * d1 * u2 + i01[k] * u1 * d2));
            }
            let l = py * psi1(y).0 * psi2(y).0;
            (wy * py * compensated_sum(dir), wy * l, wy * py * compensated_sum(rem))
        })
        .collect();
    let direct = compensated_sum(parts.iter().map(|p| p.0));
    let local = loc * compensated_sum(parts.iter().map(|p| p.1));
    let remainder = compensated_sum(parts.iter().map(|p| p.2));
    Ok(IdentityCheck { direct, local, remainder, residual: (direct - local - remainder).abs() })
}

/// Gaussian two-leg kernels of the check battery: `(name, kernel)`.
pub fn battery_101() -> Vec<(&'static str, TestKernel101)> {
    let mk = |f: fn(f64) -> f64, r: f64| TestKernel101::new(1, r, move |w: &[f64]| f(w[0])).expect("valid");
    vec![
        ("unit gaussian", mk(|w| (-w * w).exp(), 7.0)),
        ("narrow gaussian", mk(|w| (-(w / 0.4).powi(2)).exp() / 0.4, 3.0)),
        ("shifted gaussian", mk(|w| (-(w - 0.5).powi(2)).exp(), 8.0)),
        ("odd gaussian", mk(|w| w * (-w * w).exp(), 7.0)),
        ("modulated gaussian", mk(|w| (3.0 * w).cos() * (-w * w / 2.0).exp(), 10.0)),
    ]
}

/// Gaussian three-leg kernels of the check battery.
pub fn battery_012() -> Vec<(&'static str, TestKernel012)> {
    let mk = |f: fn(f64, f64) -> f64, r: f64| TestKernel012::new(1, r, move |ab: &[f64]| f(ab[0], ab[1])).expect("valid");
    vec![
        ("product gaussian", mk(|a, b| (-a * a - b * b).exp(), 7.0)),
        ("correlated gaussian", mk(|a, b| (-a * a - b * b + a * b).exp(), 9.0)),
        ("shifted gaussian", mk(|a, b| (-(a - 0.4).powi(2) - (b + 0.2).powi(2)).exp(), 8.0)),
        ("antisymmetric gaussian", mk(|a, b| (a - b) * (-a * a - b * b).exp(), 7.0)),
    ]
}

/// Test fields of the identity checks.
pub fn test_fields() -> Vec<(&'static str, TestField)> {
    vec![
        ("constant", |_| (1.0, 0.0)),
        ("linear", |z| (z, 1.0)),
        ("gaussian", |z| ((-(z - 0.3).powi(2) / 2.0).exp(), -(z - 0.3) * (-(z - 0.3).powi(2) / 2.0).exp())),
        ("sine", |z| (z.sin(), z.cos())),
    ]
}

/// Localizing test field `φ`.
pub fn test_weight(x: f64) -> (f64, f64) {
    let e = (-(x - 0.3).powi(2) / 2.0).exp();
    (e, -(x - 0.3) * e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> TestKernel101 {
        TestKernel101::new(1, 7.0, |w: &[f64]| (-w[0] * w[0]).exp()).unwrap()
    }

    #[test]
    fn localize_examples() {
        assert!((localize_101(&unit()).unwrap() - PI.sqrt()).abs() < 1e-12);
        let odd = TestKernel101::new(1, 7.0, |w: &[f64]| w[0] * (-w[0] * w[0]).exp()).unwrap();
        assert!(localize_101(&odd).unwrap().abs() < 1e-15);
        let g2 = TestKernel101::new(2, 7.0, |w: &[f64]| (-w[0] * w[0] - w[1] * w[1]).exp()).unwrap();
        assert!((localize_101(&g2).unwrap() - PI).abs() < 1e-11);
    }

    #[test]
    fn localize_band_propagator() {
        use crate::cutoff::make_profile;
        use crate::params::ModelParams;
        use crate::propagator::{Propagator, ScaleBand};
        let p = Propagator::new(ModelParams::new(1, 4, 0.0, 2.0, 2.0).unwrap(), make_profile(2.0).unwrap());
        let g = TestKernel101::new(1, 500.0, move |w: &[f64]| p.eval(ScaleBand::Single(0), w[0].abs()).unwrap()).unwrap();
        assert!(localize_101(&g).unwrap().abs() < 1e-6);
    }

    #[test]
    fn localize_012_examples() {
        let f = TestKernel012::new(1, 7.0, |ab: &[f64]| (-ab[0] * ab[0] - ab[1] * ab[1]).exp()).unwrap();
        assert!((localize_012(&f).unwrap() - PI).abs() < 1e-11);
        let anti = TestKernel012::new(1, 7.0, |ab: &[f64]| (ab[0] - ab[1]) * (-ab[0] * ab[0] - ab[1] * ab[1]).exp()).unwrap();
        assert!(localize_012(&anti).unwrap().abs() < 1e-13);
        let s = 0.01;
        let narrow = TestKernel012::new(1, 0.2, move |ab: &[f64]| {
            (-(ab[0] * ab[0] + ab[1] * ab[1]) / (s * s)).exp() / (PI * s * s)
        })
        .unwrap();
        assert!((localize_012(&narrow).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn interpolated_gaussian_closed_form() {
        // G¹(w) = sign(w) ∫_{|w|}^∞ e^{-v²} dv = sign(w) (√π/2) erfc|w|
        let gmu = interpolate_101(&unit(), 0).unwrap();
        for w in [-2.0, -0.3, 0.1, 1.5] {
            let exact = f64::signum(w) * PI.sqrt() / 2.0 * libm::erfc(f64::abs(w));
            assert!((gmu.eval_rel(&[w]) - exact).abs() < 1e-12, "w={w}");
        }
    }

    #[test]
    fn unit_gaussian_norm_bound() {
        let gmu = interpolate_101(&unit(), 0).unwrap();
        let (_, m1) = moments_101(&unit()).unwrap();
        assert!((m1 - 1.0).abs() < 1e-12);
        let n = norm_101(&gmu).unwrap();
        // ∫ erfc = 2/√π, so ‖G¹‖ = 1 and the bound is attained
        assert!((n - 1.0).abs() < 1e-10, "{n}");
        assert!(n <= m1 + 1e-10);
    }

    #[test]
    fn identity_linear_field() {
        let chk = identity_101(&unit(), test_weight, |z| (z, 1.0)).unwrap();
        assert!(chk.residual < 1e-8, "{chk:?}");
        let chk = identity_101(&unit(), test_weight, |_| (1.0, 0.0)).unwrap();
        assert_eq!(chk.remainder, 0.0);
        assert!(chk.residual < 1e-10, "{chk:?}");
    }

    #[test]
    fn identity_012_constant_fields() {
        let f = &battery_012()[0].1;
        let c: TestField = |_| (1.0, 0.0);
        let chk = identity_012(f, test_weight, c, c).unwrap();
        assert_eq!(chk.remainder, 0.0);
        assert!(chk.residual < 1e-10, "{chk:?}");
    }

    #[test]
    fn norm_012_bound_for_product_gaussian() {
        let f = &battery_012()[0].1;
        let f10 = interpolate_012(f, Leg::First, 0).unwrap();
        let (_, m1, _) = moments_012(f).unwrap();
        assert!((m1 - PI.sqrt()).abs() < 1e-10);
        assert!(norm_012(&f10).unwrap() <= m1);
    }

    #[test]
    fn interpolation_is_linear() {
        let b = battery_012();
        let (f, g) = (&b[0].1, &b[2].1);
        let lin = f.combine(2.0, g, -0.5).unwrap();
        let (lf, lg, ll) = (
            interpolate_012(f, Leg::First, 0).unwrap(),
            interpolate_012(g, Leg::First, 0).unwrap(),
            interpolate_012(&lin, Leg::First, 0).unwrap(),
        );
        for ab in [[0.3, -0.2], [1.1, 0.4], [-0.7, -1.3]] {
            let expect = 2.0 * lf.eval_rel(&ab) - 0.5 * lg.eval_rel(&ab);
            assert!((ll.eval_rel(&ab) - expect).abs() < 1e-12 * expect.abs().max(1e-3));
        }
    }

    #[test]
    fn even_kernels_leave_no_zeroth_moment() {
        for (name, g) in battery_101() {
            let gmu = interpolate_101(&g, 0).unwrap();
            let first = {
                let rule = line_rule(g.radius());
                compensated_sum(rule.iter().map(|&(w, wt)| wt * w * g.eval_rel(&[w])))
            };
            // ∫ G¹ = ∫ G(0,z) z dz
            assert!((zeroth_moment_101(&gmu).unwrap() - first).abs() < 1e-8, "{name}");
        }
        let gmu = interpolate_101(&unit(), 0).unwrap();
        assert!(zeroth_moment_101(&gmu).unwrap().abs() < 1e-8);
    }

    #[test]
    fn battery_identities_and_bounds() {
        for (name, g) in battery_101() {
            for (fname, psi) in test_fields() {
                let chk = identity_101(&g, test_weight, psi).unwrap();
                assert!(chk.residual < 1e-8, "{name}/{fname}: {chk:?}");
            }
            let (_, m1) = moments_101(&g).unwrap();
            // equality is attained for kernels of one sign on each half-line
            assert!(norm_101(&interpolate_101(&g, 0).unwrap()).unwrap() <= m1 * (1.0 + 1e-10), "{name}");
        }
        let fields = test_fields();
        for (name, f) in battery_012() {
            for (i, j) in [(1, 2), (2, 3), (3, 1)] {
                let chk = identity_012(&f, test_weight, fields[i].1, fields[j].1).unwrap();
                assert!(chk.residual < 1e-8, "{name}/{i}{j}: {chk:?}");
            }
            let (_, m1, m2) = moments_012(&f).unwrap();
            assert!(norm_012(&interpolate_012(&f, Leg::First, 0).unwrap()).unwrap() <= m1 * (1.0 + 1e-10), "{name}");
            assert!(norm_012(&interpolate_012(&f, Leg::Second, 0).unwrap()).unwrap() <= m2 * (1.0 + 1e-10), "{name}");
        }
    }

    #[test]
    fn wrong_direction_rejected() {
        assert!(interpolate_101(&unit(), 1).is_err());
        assert!(TestKernel101::new(4, 1.0, |_: &[f64]| 0.0).is_err());
    }
}
