use rayon::prelude::*;
use serde::Serialize;

use super::adaptive::gauss_legendre;
use super::sum::compensated_sum;

/// Weight `w = exp(C̄ (St/γ)^σ)` of the kernel norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightSpec {
    pub cbar: f64,
    pub gamma: f64,
    pub sigma: f64,
}

impl WeightSpec {
    pub fn eval(&self, st: f64) -> f64 {
        if self.cbar == 0.0 {
            1.0
        } else {
            (self.cbar * (st / self.gamma).powf(self.sigma)).exp()
        }
    }
}

/// Total length of the Euclidean minimum spanning tree (Prim, O(n²)).
///
/// Edge lengths are summed in sorted order so the result does not depend
/// on the order of the input points.
pub fn tree_distance<P: AsRef<[f64]>>(points: &[P]) -> f64 {
    let n = points.len();
    if n < 2 {
        return 0.0;
    }
    let dist = |i: usize, j: usize| -> f64 {
        let (a, b) = (points[i].as_ref(), points[j].as_ref());
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut edges = Vec::with_capacity(n - 1);
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist(0, j);
    }
    for _ in 1..n {
        let (next, len) = (0..n)
            .filter(|&j| !in_tree[j])
            .map(|j| (j, best[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        in_tree[next] = true;
        edges.push(len);
        for j in 0..n {
            if !in_tree[j] {
                best[j] = best[j].min(dist(next, j));
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    compensated_sum(edges)
}

/// Tensor Gauss–Legendre grid on `[-half_width, half_width]` per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormGrid {
    pub half_width: f64,
    /// Panels per coordinate; rounded up to even so that 0 is a panel edge.
    pub panels: usize,
    pub order: usize,
    /// Geometric refinement levels of the two panels touching 0, where the
    /// weight `|x|^σ` has its cusp.
    pub grading: usize,
}

impl Default for NormGrid {
    fn default() -> Self {
        Self { half_width: 12.0, panels: 48, order: 10, grading: 14 }
    }
}

impl NormGrid {
    /// One-dimensional nodes, weights and outer-panel flags.
    fn nodes(&self) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        let panels = (self.panels + self.panels % 2).max(2);
        let (gx, gw) = gauss_legendre(self.order);
        let h = 2.0 * self.half_width / panels as f64;
        let mut edges = vec![];
        for p in 0..=panels {
            let e = -self.half_width + p as f64 * h;
            if p == panels / 2 {
                for j in (1..=self.grading).rev() {
                    edges.push(-h * 0.2f64.powi(j as i32));
                }
                edges.push(0.0);
                for j in 1..=self.grading {
                    edges.push(h * 0.2f64.powi(j as i32));
                }
            } else {
                edges.push(e);
            }
        }
        edges.sort_by(f64::total_cmp);
        let (mut nodes, mut weights, mut outer) = (vec![], vec![], vec![]);
        let last = edges.len() - 2;
        for (p, w) in edges.windows(2).enumerate() {
            let (c, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(c + half * x);
                weights.push(half * wt);
                outer.push(p == 0 || p == last);
            }
        }
        (nodes, weights, outer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormResult {
    pub value: f64,
    /// Largest weighted integrand on the outermost panels over the peak.
    pub boundary_ratio: f64,
    pub truncated: bool,
}

/// `∫ |K(0, x₂, …, x_n)| w(St(0, x₂, …, x_n)) dx₂ … dx_n` for a scalar
/// kernel of `n_points` points in ℝ^d, the first pinned at the origin.
///
/// `kernel` receives the flattened coordinates of all points. Kernels
/// carrying component indices are outside the scope of this routine.
pub fn weighted_l1_norm<K>(kernel: K, n_points: usize, d: usize, grid: &NormGrid, weight: &WeightSpec) -> NormResult
where
    K: Fn(&[f64]) -> f64 + Sync,
{
    let dims = (n_points.saturating_sub(1)) * d;
    if dims == 0 {
        let pts = vec![0.0; d];
        let v = kernel(&pts).abs();
        return NormResult { value: v, boundary_ratio: 0.0, truncated: false };
    }
    let (nodes, weights, outer) = grid.nodes();
    let m = nodes.len();
    let total = m.pow(dims as u32);
    let chunk = m;
    let parts: Vec<(f64, f64, f64)> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut coords = vec![0.0; n_points * d];
            let mut pts: Vec<&[f64]>;
            let mut vals = Vec::with_capacity(chunk);
            let mut peak: f64 = 0.0;
            let mut edge: f64 = 0.0;
            for flat in c * chunk..((c + 1) * chunk).min(total) {
                let mut rem = flat;
                let mut w = 1.0;
                let mut on_edge = false;
                for k in 0..dims {
                    let i = rem % m;
                    rem /= m;
                    coords[d + k] = nodes[i];
                    w *= weights[i];
                    on_edge |= outer[i];
                }
                pts = coords.chunks(d).collect();
                let st = tree_distance(&pts);
                let v = kernel(&coords).abs() * weight.eval(st);
                peak = peak.max(v);
                if on_edge {
                    edge = edge.max(v);
                }
                vals.push(w * v);
            }
            (compensated_sum(vals), peak, edge)
        })
        .collect();
    let value = compensated_sum(parts.iter().map(|p| p.0));
    let peak = parts.iter().map(|p| p.1).fold(0.0, f64::max);
    let edge = parts.iter().map(|p| p.2).fold(0.0, f64::max);
    let boundary_ratio = if peak > 0.0 { edge / peak } else { 0.0 };
    NormResult { value, boundary_ratio, truncated: boundary_ratio > 1e-10 }
}
