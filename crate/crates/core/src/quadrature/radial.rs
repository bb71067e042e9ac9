use std::f64::consts::PI;

use super::adaptive::{integrate_breakpoints, integrate_semi_infinite, Estimate, QuadConfig};
use crate::error::{Error, Result};

/// Area of the unit sphere in ℝ^d.
pub fn sphere_area(d: u32) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Angular-averaged plane wave with the `(2π)^{-d} S_d` prefactor folded in:
/// `cos(t)/π`, `J₀(t)/(2π)`, `sinc(t)/(2π²)` for d = 1, 2, 3.
pub fn radial_kernel(d: u32, t: f64) -> f64 {
    match d {
        1 => t.cos() / PI,
        2 => libm::j0(t) / (2.0 * PI),
        3 => sinc(t) / (2.0 * PI * PI),
        _ => f64::NAN,
    }
}

fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// `∫ d^dk/(2π)^d f(|k|) e^{ik·x}` for a radial `f`.
///
/// `breaks` are the sorted points where `f` is not smooth, starting with
/// the lower end of its support. The last entry may be `+∞` only at `x = 0`:
/// oscillatory transforms of non-compact integrands are rejected. Each
/// segment is split into panels of about one oscillation period.
pub fn radial_fourier<F: Fn(f64) -> f64>(d: u32, f: F, breaks: &[f64], x: f64, cfg: &QuadConfig) -> Result<Estimate> {
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("radial transform needs d in 1..=3, got {d}")));
    }
    let integrand = |k: f64| f(k) * k.powi(d as i32 - 1) * radial_kernel(d, k * x);
    let (finite, tail_from) = match breaks.last() {
        Some(b) if b.is_infinite() => {
            if x != 0.0 {
                return Err(Error::Domain("oscillatory transform of a non-compact integrand".into()));
            }
            (&breaks[..breaks.len() - 1], breaks.get(breaks.len().wrapping_sub(2)).copied())
        }
        _ => (breaks, None),
    };
    let panels = oscillation_panels(finite, x);
    let mut est = integrate_breakpoints(integrand, &panels, cfg)?;
    if let Some(a) = tail_from {
        let tail = integrate_semi_infinite(integrand, a, cfg)?;
        est.value += tail.value;
        est.error += tail.error;
        est.panels += tail.panels;
    }
    Ok(est)
}

/// Refines `breaks` so that no panel spans more than one period of `cos(kx)`.
pub(crate) fn oscillation_panels(breaks: &[f64], x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        let n = ((x.abs() * (w[1] - w[0]) / (2.0 * PI)).ceil() as usize).max(1);
        for i in 0..n {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / n as f64);
        }
    }
    if let Some(&b) = breaks.last() {
        out.push(b);
    }
    out
}
