//! Subcommand bodies. Each returns the table to emit.

use rayon::prelude::*;
use rgfp::cutoff::{make_profile, CutoffProfile};
use rgfp::params::{Exponents, ModelParams};
use rgfp::perturb::{solve_eta2, verify_zeta1, ExponentsRecord};
use rgfp::propagator::{default_decay_window, Propagator, ScaleBand};
use rgfp::quadrature::log_grid;
use rgfp::response::{Response, ResponseKind, ScaleSumSpec};
use rgfp::trees::{compute_constants, count_typed, enumerate, radius_estimate, tree_record, ConstantOptions, TypeConstraints};
use rgfp::trimming::{
    battery_012, battery_101, identity_012, identity_101, interpolate_012, interpolate_101, moments_012, moments_101,
    norm_012, norm_101, test_fields, test_weight, Leg,
};
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::output::{sci, Table};

pub struct Context {
    pub config: RunConfig,
    pub params: ModelParams,
    pub profile: CutoffProfile,
}

impl Context {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let params = config.validate()?;
        let profile = make_profile(config.s)?;
        Ok(Self { config, params, profile })
    }

    fn json(&self) -> bool {
        self.config.format == Format::Json
    }

    fn digits(&self) -> usize {
        self.config.precision()
    }

    fn grid(&self) -> Vec<f64> {
        log_grid(self.config.x_min, self.config.x_max, self.config.grid_density)
    }

    fn exponents(&self) -> Result<Exponents, CliError> {
        Ok(solve_eta2(&self.params, &self.profile, self.config.tol)?)
    }

    /// One record as a single JSON object, or as a one-row CSV with one
    /// column per scalar field.
    fn single(&self, record: Value) -> Table {
        if self.json() {
            return Table::Json(vec![record]);
        }
        let obj = record.as_object().cloned().unwrap_or_default();
        let scalars: Vec<(String, Value)> = obj.into_iter().filter(|(_, v)| !v.is_array() && !v.is_object()).collect();
        let cols: Vec<&str> = scalars.iter().map(|(k, _)| k.as_str()).collect();
        let mut t = Table::csv(&cols);
        t.push_row(scalars.iter().map(|(_, v)| self.cell(v)).collect());
        t
    }

    fn cell(&self, v: &Value) -> String {
        match v {
            Value::Number(n) if n.is_f64() => sci(n.as_f64().expect("f64"), self.digits()),
            Value::String(s) => s.clone(),
            Value::Null => String::new(),
            other => other.to_string(),
        }
    }

    /// Rows of reals, as CSV or as JSON records keyed by column.
    fn numeric(&self, columns: &[&str], rows: Vec<Vec<f64>>) -> Table {
        if self.json() {
            let recs = rows
                .into_iter()
                .map(|r| Value::Object(columns.iter().map(|c| c.to_string()).zip(r.into_iter().map(|x| json!(x))).collect()))
                .collect();
            return Table::Json(recs);
        }
        let mut t = Table::csv(columns);
        for r in rows {
            t.push_row(r.iter().map(|&x| sci(x, self.digits())).collect());
        }
        t
    }
}

pub fn parse_band(s: &str) -> Result<ScaleBand, CliError> {
    let bad = || CliError::Config(format!("band {s:?}: expected full, single:H, below:H, above:H or range:A:B"));
    let parts: Vec<&str> = s.split(':').collect();
    let int = |i: usize| parts.get(i).and_then(|p| p.parse::<i32>().ok()).ok_or_else(bad);
    match (parts[0], parts.len()) {
        ("full", 1) => Ok(ScaleBand::Full),
        ("single", 2) => Ok(ScaleBand::Single(int(1)?)),
        ("below", 2) => Ok(ScaleBand::Below(int(1)?)),
        ("above", 2) => Ok(ScaleBand::Above(int(1)?)),
        ("range", 3) => Ok(ScaleBand::range(int(1)?, int(2)?)?),
        _ => Err(bad()),
    }
}

pub fn exponents(ctx: &Context) -> Result<Table, CliError> {
    let exps = ctx.exponents()?;
    let rec = ExponentsRecord::new(&exps, &ctx.params, &ctx.profile);
    Ok(ctx.single(serde_json::to_value(rec).expect("plain record")))
}

pub fn propagator(ctx: &Context, band: ScaleBand) -> Result<Table, CliError> {
    let prop = Propagator::new(ctx.params, ctx.profile).with_quad(ctx.config.quad());
    let s = prop.sample(band, &ctx.grid())?;
    let rows = s.radii().iter().zip(s.values()).map(|(&x, &v)| vec![x, v]).collect();
    Ok(ctx.numeric(&["x", "value"], rows))
}

pub fn response(ctx: &Context, kind: ResponseKind) -> Result<Table, CliError> {
    let exps = ctx.exponents()?;
    let curve = Response::new(ctx.params, ctx.profile).curve(kind, &exps, &ctx.grid())?;
    let rows = curve
        .x
        .iter()
        .zip(&curve.values)
        .map(|(&x, &v)| {
            let fit = curve.fit_value(x);
            vec![x, v, fit, v / fit - 1.0]
        })
        .collect();
    Ok(ctx.numeric(&["x", "value", "fit_powerlaw", "residual"], rows))
}

/// Re-indexing identity of the truncated scale sum and the power-law
/// covariance of the free two-point function, on the x grid.
pub fn scale_check(ctx: &Context) -> Result<Table, CliError> {
    let r = Response::new(ctx.params, ctx.profile);
    let e = Exponents::gaussian(&ctx.params);
    let g = ctx.params.gamma();
    let spec = ScaleSumSpec::new(ctx.config.h_min, ctx.config.h_max)?;
    let rows: Vec<Vec<f64>> = ctx
        .grid()
        .par_iter()
        .map(|&x| -> Result<Vec<f64>, rgfp::Error> {
            let lhs = r.scale_sum_g_raw(&e, g * x, &spec)?;
            let rhs = g.powf(-2.0 * e.delta1) * r.scale_sum_g_raw(&e, x, &spec.shifted(1))?;
            let free = r.free_g(g * x)? / (g.powf(-2.0 * e.delta1) * r.free_g(x)?) - 1.0;
            Ok(vec![x, lhs, rhs, ((lhs - rhs) / rhs).abs(), free.abs()])
        })
        .collect::<Result<_, _>>()?;
    Ok(ctx.numeric(&["x", "sum_at_gamma_x", "rescaled_shifted_sum", "reindex_residual", "free_covariance_residual"], rows))
}

pub fn trees(ctx: &Context, k: usize, constraint: TypeConstraints) -> Result<Table, CliError> {
    let shapes = enumerate(k)?;
    let counts: Vec<u64> = shapes.iter().map(|t| count_typed(t, &constraint)).collect();
    if !ctx.json() {
        let mut t = Table::csv(&["index", "arities", "symmetry_factor", "count_typed"]);
        for (i, (s, c)) in shapes.iter().zip(&counts).enumerate() {
            let ar: Vec<String> = s.arities().iter().map(|a| a.to_string()).collect();
            t.push_row(vec![i.to_string(), ar.join(" "), sci(s.symmetry_factor(), ctx.digits()), c.to_string()]);
        }
        return Ok(t);
    }
    let exps = ctx.exponents()?;
    let consts = compute_constants(&ctx.params, &ctx.profile, &exps, &ConstantOptions::default())?;
    let radius = radius_estimate(&consts);
    let mut recs: Vec<Value> = shapes
        .iter()
        .zip(&counts)
        .map(|(s, c)| {
            let mut r = tree_record(s, None);
            r["count_typed"] = json!(c);
            r
        })
        .collect();
    recs.push(json!({
        "summary": true,
        "endpoints": k,
        "shapes": shapes.len(),
        "eps0": radius.eps0,
        "rate": radius.rate,
        "constants": radius.constants,
    }));
    Ok(Table::Json(recs))
}

pub enum FitTarget {
    Propagator(ScaleBand),
    E1,
}

pub fn decay_fit(ctx: &Context, target: FitTarget, sigma: Option<f64>) -> Result<Table, CliError> {
    let window = ctx.config.fit_window(default_decay_window(ctx.params.gevrey_s()));
    let fit = match target {
        FitTarget::Propagator(band) => {
            let prop = Propagator::new(ctx.params, ctx.profile).with_quad(ctx.config.quad());
            match sigma {
                Some(s) => prop.decay_fit_fixed(band, window, s)?,
                None => prop.decay_fit(band, window)?,
            }
        }
        FitTarget::E1 => {
            let r = Response::new(ctx.params, ctx.profile);
            match sigma {
                Some(s) => r.e1_decay_fit_fixed(window, s)?,
                None => r.e1_decay_fit(window)?,
            }
        }
    };
    let mut rec = serde_json::to_value(fit).expect("plain record");
    rec["window_min"] = json!(window.0);
    rec["window_max"] = json!(window.1);
    rec["sigma_target"] = json!(ctx.params.sigma());
    Ok(ctx.single(rec))
}

pub fn trim_check(ctx: &Context) -> Result<Table, CliError> {
    let mut rows: Vec<(String, String, String, f64, f64, f64)> = Vec::new();
    let fields = test_fields();
    for (name, g) in battery_101() {
        for (fname, psi) in &fields {
            let c = identity_101(&g, test_weight, *psi)?;
            rows.push(("identity101".into(), name.into(), (*fname).into(), c.direct, c.local + c.remainder, c.residual));
        }
        let (_, m1) = moments_101(&g)?;
        let n = norm_101(&interpolate_101(&g, 0)?)?;
        rows.push(("norm101".into(), name.into(), "mu=0".into(), n, m1, (n - m1).max(0.0)));
    }
    for (name, f) in battery_012() {
        for (i, j) in [(1, 2), (2, 3), (3, 1)] {
            let c = identity_012(&f, test_weight, fields[i].1, fields[j].1)?;
            let detail = format!("{}+{}", fields[i].0, fields[j].0);
            rows.push(("identity012".into(), name.into(), detail, c.direct, c.local + c.remainder, c.residual));
        }
        let (_, m1, m2) = moments_012(&f)?;
        for (leg, m, tag) in [(Leg::First, m1, "leg1"), (Leg::Second, m2, "leg2")] {
            let n = norm_012(&interpolate_012(&f, leg, 0)?)?;
            rows.push(("norm012".into(), name.into(), tag.into(), n, m, (n - m).max(0.0)));
        }
    }
    let cols = ["check", "kernel", "detail", "lhs", "rhs", "residual"];
    if ctx.json() {
        let recs = rows
            .into_iter()
            .map(|(c, k, d, l, r, res)| json!({"check": c, "kernel": k, "detail": d, "lhs": l, "rhs": r, "residual": res}))
            .collect();
        return Ok(Table::Json(recs));
    }
    let mut t = Table::csv(&cols);
    let dg = ctx.digits();
    for (c, k, d, l, r, res) in rows {
        t.push_row(vec![c, k, d, sci(l, dg), sci(r, dg), sci(res, dg)]);
    }
    Ok(t)
}

pub fn zeta1_check(ctx: &Context) -> Result<Table, CliError> {
    let c = verify_zeta1(&ctx.params, &ctx.profile)?;
    if ctx.json() {
        return Ok(Table::Json(vec![serde_json::to_value(&c).expect("plain record")]));
    }
    let dg = ctx.digits();
    let mut t = Table::csv(&["check", "h", "residual"]);
    t.push_row(vec!["momentum".into(), String::new(), sci(c.momentum_residual, dg)]);
    for (h, r) in &c.per_scale {
        t.push_row(vec!["position".into(), h.to_string(), sci(*r, dg)]);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bands_parse() {
        assert_eq!(parse_band("full").unwrap(), ScaleBand::Full);
        assert_eq!(parse_band("single:-2").unwrap(), ScaleBand::Single(-2));
        assert_eq!(parse_band("range:1:4").unwrap(), ScaleBand::Range(1, 4));
        assert!(parse_band("range:4:1").is_err());
        assert!(parse_band("single").is_err());
        assert!(parse_band("middle:1").is_err());
    }
}
