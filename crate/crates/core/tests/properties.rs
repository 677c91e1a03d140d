use num_complex::Complex64;
use proptest::prelude::*;

use mlsm::inference::{fit_ig_mle_values, ks_test};
use mlsm::io::{params_from_json, params_to_json};
use mlsm::model::{BlmParams, IgParams, MlsmParams, Model, NigParams};
use mlsm::pwf::{implied_pwf, tk_pwf, uniform_grid};
use mlsm::reparam::{canonical, Param, ParamSpace};
use mlsm::simulator::{sample_ig, sample_model, RngSeed};
use mlsm::transform::{model_call_prices, model_distribution, put_from_parity, GridSpec, Measure, DEFAULT_DAMPING};

fn nig() -> impl Strategy<Value = NigParams> {
    (-0.01f64..0.01, 20.0f64..300.0, -0.8f64..0.8, 1e-3f64..0.05)
        .prop_map(|(m, a, b, d)| NigParams::new(m, a, a * b, d).unwrap())
}

fn mlsm_model() -> impl Strategy<Value = Model> {
    (-1e-3f64..1e-3, 1e-4f64..0.01, 0.3f64..3.0, nig(), 0.05f64..2.0, 0.2f64..5.0).prop_map(|(mu, rho, sigma, nig, h, l)| {
        Model::Mlsm(MlsmParams { mu, rho, sigma, nig, ig: IgParams::new(h, l).unwrap() })
    })
}

fn blm_model() -> impl Strategy<Value = Model> {
    (-1e-3f64..1e-3, 1e-4f64..0.01, 0.3f64..3.0, nig())
        .prop_map(|(mu, rho, sigma, nig)| Model::Blm(BlmParams { mu, rho, sigma, nig }))
}

fn any_model() -> impl Strategy<Value = Model> {
    prop_oneof![mlsm_model(), blm_model()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chf_is_a_characteristic_function(m in any_model(), v in -500.0f64..500.0, t in 0.5f64..30.0) {
        let one = m.chf(Complex64::new(0.0, 0.0), t).unwrap();
        prop_assert!((one - 1.0).norm() < 1e-14);
        let z = m.chf(Complex64::new(v, 0.0), t).unwrap();
        prop_assert!(z.norm() <= 1.0 + 1e-12);
        // Hermitian symmetry
        let w = m.chf(Complex64::new(-v, 0.0), t).unwrap();
        prop_assert!((z.conj() - w).norm() < 1e-12);
    }

    #[test]
    fn martingale_condition(m in any_model(), t in 1.0f64..60.0, r in 0.0f64..1e-4) {
        let s0 = 100.0;
        if m.cgf_real(1.0).is_err() {
            // E[S_t] is infinite: no equivalent martingale measure to test
            prop_assert!(m.chf_rn(Complex64::new(0.0, -1.0), r, s0, t).is_err());
            return Ok(());
        }
        let e = m.chf_rn(Complex64::new(0.0, -1.0), r, s0, t).unwrap();
        prop_assert!((e.re / (s0 * (r * t).exp()) - 1.0).abs() < 1e-9);
        prop_assert!(e.im.abs() < 1e-9 * s0);
    }

    #[test]
    fn reparam_roundtrip(m in any_model()) {
        let free = Param::of(m.kind());
        let space = ParamSpace::new(m, free, 0.01).unwrap();
        let back = space.decode(&space.encode(&m)).unwrap();
        let c = canonical(m);
        for p in free {
            let (a, b) = (mlsm::reparam::get(&back, *p), mlsm::reparam::get(&c, *p));
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{:?}: {} vs {}", p, a, b);
        }
    }

    #[test]
    fn params_document_roundtrip(m in any_model()) {
        let text = params_to_json(&m).unwrap();
        prop_assert_eq!(params_from_json("p", &text).unwrap(), m);
    }

    #[test]
    fn tk_is_monotone_with_fixed_endpoints(g in 0.28f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(tk_pwf(lo, g).unwrap() <= tk_pwf(hi, g).unwrap() + 1e-15);
        prop_assert_eq!(tk_pwf(0.0, g).unwrap(), 0.0);
        prop_assert_eq!(tk_pwf(1.0, g).unwrap(), 1.0);
    }

    #[test]
    fn ks_outputs_are_probabilities(xs in prop::collection::vec(-3.0f64..3.0, 1..200)) {
        let (d, p, pp) = ks_test(&xs, |x| 0.5 * (1.0 + (x / 2.0).tanh())).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(pp.len(), xs.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn call_prices_respect_static_bounds(m in any_model(), t in 1.0f64..60.0) {
        let (s0, r) = (100.0, 0.015 / 252.0);
        let ks: Vec<f64> = (0..=60).map(|i| 70.0 + i as f64).collect();
        let Ok(p) = model_call_prices(&m, r, s0, t, &ks, DEFAULT_DAMPING, &GridSpec::pricing_default()) else {
            // infeasible damping is a documented error, not a price
            return Ok(());
        };
        for (k, c) in ks.iter().zip(&p) {
            prop_assert!(*c >= (s0 - k * (-r * t).exp()).max(0.0) - 1e-9);
            prop_assert!(*c <= s0 + 1e-9);
            let put = put_from_parity(*c, s0, *k, r, t);
            prop_assert!(put >= -1e-6 * s0);
        }
        prop_assert!(p.windows(2).all(|w| w[1] <= w[0] + 1e-6 * s0));
        prop_assert!(p.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-6 * s0));
    }

    #[test]
    fn implied_pwf_is_a_distribution_map(a in blm_model(), b in blm_model()) {
        let fa = model_distribution(&a, 1.0, Measure::Physical, 1 << 12, 20.0).unwrap();
        let fb = model_distribution(&b, 1.0, Measure::Physical, 1 << 12, 20.0).unwrap();
        let c = implied_pwf(&fa, &fb, &uniform_grid(201)).unwrap();
        prop_assert_eq!(c.w[0], 0.0);
        prop_assert_eq!(*c.w.last().unwrap(), 1.0);
        prop_assert!(c.w.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(c.w.iter().all(|w| (0.0..=1.0).contains(w)));
        // the same affine change of variable on both laws leaves w unchanged
        let d = implied_pwf(&fa.affine(2.0, 0.1), &fb.affine(2.0, 0.1), &uniform_grid(201)).unwrap();
        prop_assert!(c.w.iter().zip(&d.w).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn ig_mle_is_scale_equivariant(h in 0.1f64..2.0, l in 0.2f64..5.0, c in 0.1f64..10.0, seed in 0u64..1000) {
        let x = sample_ig(h, l, 500, RngSeed(seed)).unwrap();
        let a = fit_ig_mle_values(&x).unwrap();
        let y: Vec<f64> = x.iter().map(|v| v * c).collect();
        let b = fit_ig_mle_values(&y).unwrap();
        prop_assert!((b.h / (c * a.h) - 1.0).abs() < 1e-10);
        prop_assert!((b.l / (c * a.l) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shorter_runs_are_prefixes(m in any_model(), n in 1usize..40_000, seed in 0u64..1000) {
        let long = sample_model(&m, 1.0, 40_000, RngSeed(seed)).unwrap().values;
        let short = sample_model(&m, 1.0, n, RngSeed(seed)).unwrap().values;
        prop_assert_eq!(&long[..n], &short[..]);
    }
}
