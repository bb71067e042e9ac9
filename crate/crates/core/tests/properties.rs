//! Property checks across modules through the public API.

use proptest::prelude::*;
use rgfp::cutoff::make_profile;
use rgfp::params::{Exponents, ModelParams};
use rgfp::perturb::{eta2_residual, solve_eta2};
use rgfp::propagator::{Propagator, ScaleBand};
use rgfp::response::{Response, ScaleSumSpec};
use rgfp::trees::{count_shapes, count_typed, enumerate, TypeConstraints};
use rgfp::trimming::{interpolate_101, moments_101, TestKernel101};

fn prop(d: u32, s: f64) -> Propagator {
    Propagator::new(ModelParams::new(d, 4, 0.0, 2.0, s).unwrap(), make_profile(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_bands_are_self_similar(h in -3i32..=3, x in 0.1f64..20.0, d in 1u32..=3) {
        let p = prop(d, 2.0);
        let g = p.params().gamma();
        let lhs = p.eval(ScaleBand::Single(h), x).unwrap();
        let rhs = g.powf(2.0 * h as f64 * p.params().psi_dim()) * p.eval(ScaleBand::Single(0), g.powi(h) * x).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-8), "{lhs} {rhs}");
    }

    #[test]
    fn below_bands_nest(h in -2i32..=2, x in 0.1f64..10.0) {
        let p = prop(1, 2.0);
        let a = p.eval(ScaleBand::Below(h), x).unwrap() + p.eval(ScaleBand::Single(h + 1), x).unwrap();
        let b = p.eval(ScaleBand::Below(h + 1), x).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-8));
    }

    #[test]
    fn eta2_solution_is_a_fixed_point(eps in 1e-4f64..2e-3, n in prop::sample::select(vec![4u32, 6, 10])) {
        let p = ModelParams::new(1, n, eps, 2.0, 2.0).unwrap();
        let prof = make_profile(2.0).unwrap();
        let e = solve_eta2(&p, &prof, 1e-14).unwrap();
        prop_assert!(eta2_residual(&p, &prof, e.eta2).unwrap().abs() < 1e-12);
        prop_assert!((e.delta2 - 2.0 * p.psi_dim() - e.eta2).abs() < 1e-15);
    }

    #[test]
    fn scale_sums_reindex(x in 0.3f64..30.0, k in -3i32..=3) {
        let p = ModelParams::new(2, 4, 0.0, 2.0, 2.0).unwrap();
        let r = Response::new(p, make_profile(2.0).unwrap());
        let e = Exponents::gaussian(&p);
        let g = p.gamma();
        let spec = ScaleSumSpec::new(-20, 6).unwrap();
        let lhs = r.scale_sum_g_raw(&e, g.powi(k) * x, &spec).unwrap();
        let rhs = g.powf(-2.0 * k as f64 * e.delta1) * r.scale_sum_g_raw(&e, x, &spec.shifted(k)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }

    #[test]
    fn positive_kernels_attain_the_norm_bound(c in -2.0f64..2.0, w in 0.5f64..2.0) {
        let g = TestKernel101::new(1, 30.0, move |v: &[f64]| (-(v[0] - c).powi(2) / (w * w)).exp()).unwrap();
        let (_, m1) = moments_101(&g).unwrap();
        let (m0_interp, _) = moments_101(&interpolate_101(&g, 0).unwrap()).unwrap();
        prop_assert!((m0_interp - m1).abs() < 1e-8 * m1.abs().max(1.0), "{m0_interp} vs {m1}");
    }
}

#[test]
fn shape_counts_agree_with_enumeration() {
    for k in 1..=9 {
        assert_eq!(enumerate(k).unwrap().len() as u64, count_shapes(k).unwrap());
    }
}

#[test]
fn typed_counts_partition_by_sources() {
    // every typing has some number of φ and J sources
    for t in enumerate(4).unwrap() {
        let all = count_typed(&t, &TypeConstraints::default());
        let mut split = 0;
        for phi in 0..=4 {
            for j in 0..=4 - phi {
                split += count_typed(&t, &TypeConstraints { phi_sources: Some(phi), j_sources: Some(j), root_legs: None });
            }
        }
        assert_eq!(all, split);
    }
}
