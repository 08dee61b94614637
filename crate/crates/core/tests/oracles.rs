//! Closed-form and independently computed reference values.

use std::f64::consts::PI;

use hsmax::convolve::{build_scale_stack, convolve, dilate, ScaleSet, ScaleStack};
use hsmax::gridfn::{
    make_grid, make_test_function, moments, Extension, GridFunction, KernelSpec, TestFunctionSpec,
};
use hsmax::maxops::{
    maximal_convolution, miyachi_np, nontangential_many, BallFamily, BallWeight, ConeParams,
};
use hsmax::norms::{gradient, hardy_quasinorm, local_hardy_quasinorm, HardyParams};
use hsmax::Error;

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    let h = (b - a) / m as f64;
    let inner: f64 = (1..m)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn poisson_peak_values() {
    let k = KernelSpec::poisson(1);
    assert!((k.eval_radial(0.0) - 1.0 / PI).abs() < 1e-15);
    assert!((k.eval_dilated(0.0, 2.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
    // The normalization is the reciprocal of the mass, computed here by quadrature
    // after the substitution x = tan(u).
    let mass = simpson(
        |u| k.eval_radial(u.tan().abs()) * (1.0 + u.tan().powi(2)),
        -PI / 2.0 + 1e-9,
        PI / 2.0 - 1e-9,
        2000,
    );
    assert!((mass - 1.0).abs() < 1e-8, "{mass}");
}

#[test]
fn gaussian_and_bump_have_unit_mass() {
    for k in [KernelSpec::gaussian(1), KernelSpec::bump(1)] {
        let mass = simpson(|x| k.eval_radial(x.abs()), -10.0, 10.0, 200_000);
        assert!((mass - 1.0).abs() < 1e-9, "{} {mass}", k.name());
    }
    let k = KernelSpec::gaussian(2);
    let mass = simpson(|r| 2.0 * PI * r * k.eval_radial(r), 0.0, 12.0, 20_000);
    assert!((mass - 1.0).abs() < 1e-9);
}

#[test]
fn gaussian_convolution_matches_closed_form() {
    // phi_t * exp(-x^2 / 2s^2) = s / sqrt(s^2 + t^2) exp(-x^2 / 2(s^2 + t^2)).
    let g = make_grid(1, 16.0, 2048, Extension::Zero).unwrap();
    let s = 1.0;
    let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0] / (2.0 * s * s)).exp()).unwrap();
    for t in [0.25, 1.0, 2.0] {
        let out = convolve(&f, &dilate(&KernelSpec::gaussian(1), t, &g).unwrap()).unwrap();
        let u = s * s + t * t;
        for (i, v) in out.values.iter().enumerate() {
            let x = g.coord(i);
            if x.abs() < 6.0 {
                let exact = s / u.sqrt() * (-x * x / (2.0 * u)).exp();
                assert!((v - exact).abs() < 1e-9, "t={t} x={x} {v} {exact}");
            }
        }
    }
}

#[test]
fn gaussian_maximal_of_gaussian() {
    // sup over u = s^2 + t^2 >= s^2 of s u^{-1/2} exp(-x^2 / 2u): g(x) for |x| <= s,
    // s e^{-1/2} / |x| beyond (attained at u = x^2).
    let g = make_grid(1, 32.0, 4096, Extension::Zero).unwrap();
    let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0] / 2.0).exp()).unwrap();
    let scales = ScaleSet::per_decade(g.h() / 2.0, 64.0, 200.0).unwrap();
    let stack = build_scale_stack(&f, &KernelSpec::gaussian(1), &scales, true).unwrap();
    let m = maximal_convolution(&stack).unwrap();
    for x in [0.0, 0.5, 2.0, 5.0, 10.0] {
        let i = g.nearest_axis_index(x).unwrap();
        let exact = if x <= 1.0 {
            (-x * x / 2.0).exp()
        } else {
            (-0.5f64).exp() / x
        };
        assert!(
            (m.values[i] - exact).abs() < 2e-4 * exact,
            "x={x} {} {exact}",
            m.values[i]
        );
    }
}

#[test]
fn hardy_dilation_covariance() {
    // ||f(2 .)||_{H^p} = 2^{-d/p} ||f||_{H^p} for grids matched so that f(2 .) on the
    // half-size box is a relabelling of f on the full box.
    let p = 1.0;
    let big = make_grid(1, 64.0, 4096, Extension::Zero).unwrap();
    let small = make_grid(1, 32.0, 4096, Extension::Zero).unwrap();
    let spec = TestFunctionSpec::bump(&[0.0], 2.0);
    let f = gradient(&make_test_function(&spec, &big).unwrap()).remove(0);
    let f2 = gradient(&make_test_function(&spec.clone().dilated(2.0), &small).unwrap()).remove(0);
    let params =
        |grid: &hsmax::Grid| HardyParams::poisson(p, 1, ScaleSet::default_for(grid, 32.0).unwrap());
    let a = hardy_quasinorm(&f, &params(&big)).unwrap().value;
    // d_x [f(2x)] = 2 f'(2x): divide out the derivative factor.
    let b = hardy_quasinorm(&f2, &params(&small)).unwrap().value / 2.0;
    assert!((b / a - 0.5).abs() < 0.02 * 0.5, "{a} {b}");
}

#[test]
fn local_hardy_is_dominated_by_global() {
    let g = make_grid(1, 16.0, 1024, Extension::Zero).unwrap();
    let f =
        gradient(&make_test_function(&TestFunctionSpec::bump(&[0.0], 1.0), &g).unwrap()).remove(0);
    let params = HardyParams::poisson(1.0, 1, ScaleSet::default_for(&g, 32.0).unwrap());
    let global = hardy_quasinorm(&f, &params).unwrap().value;
    let local = local_hardy_quasinorm(&f, &params).unwrap().value;
    let capped = hardy_quasinorm(&f, &params.local(params.scales.t_max()))
        .unwrap()
        .value;
    assert!(local <= global);
    assert_eq!(capped, global);
    // Scales above 1 still see most of a unit-width bump.
    assert!(local > 0.8 * global, "{local} {global}");
}

#[test]
fn nontangential_of_constant_is_constant() {
    let g = make_grid(2, 2.0, 32, Extension::Periodic).unwrap();
    let f = GridFunction::constant(&g, 3.0).with_extension(Extension::Periodic);
    let scales = ScaleSet::default_for(&g, 8.0).unwrap();
    let m = nontangential_many(
        &[&f],
        &KernelSpec::poisson(2),
        &scales,
        &ConeParams::new(2.0),
    )
    .unwrap();
    assert!(m[0].values.iter().all(|v| (v - 3.0).abs() < 1e-10));
}

#[test]
fn np_of_linear_function_with_inverse_volume() {
    // Each ball gives |B|^{-1} * r / 2 = 1/4 for f(x) = x.
    let g = make_grid(1, 4.0, 512, Extension::Zero).unwrap();
    let f = GridFunction::from_fn(&g, |x| x[0]).unwrap();
    let n = miyachi_np(
        &f,
        1.0,
        &BallFamily::default_for(&g, 1.0).unwrap(),
        BallWeight::InverseVolume,
    )
    .unwrap();
    let v = n.values[g.nearest_axis_index(0.0).unwrap()];
    assert!((v - 0.25).abs() < 0.01, "{v}");
}

#[test]
fn gradient_is_second_order() {
    let err = |n: usize| {
        let g = make_grid(1, 4.0, n, Extension::Zero).unwrap();
        let f = GridFunction::from_fn(&g, |x| (-x[0] * x[0]).exp()).unwrap();
        let d = gradient(&f).remove(0);
        d.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = g.coord(i);
                (v + 2.0 * x * (-x * x).exp()).abs()
            })
            .fold(0.0, f64::max)
    };
    let order = (err(128) / err(256)).log2();
    assert!((order - 2.0).abs() < 0.1, "{order}");
}

#[test]
fn vanishing_moments_hold() {
    for (d, n, w) in [(1, 512, 1.0), (2, 128, 1.5)] {
        let g = make_grid(d, 4.0, n, Extension::Zero).unwrap();
        let c = vec![0.3; d];
        let f = make_test_function(&TestFunctionSpec::vanishing_moment(&c, w), &g).unwrap();
        let scale = f.values.iter().map(|v| v.abs()).sum::<f64>() * g.cell();
        for m in moments(&f, &c) {
            assert!(m.abs() < 1e-8 * scale, "{m}");
        }
    }
}

#[test]
fn out_of_box_specs_are_rejected() {
    let g = make_grid(1, 2.0, 64, Extension::Zero).unwrap();
    let r = make_test_function(&TestFunctionSpec::bump(&[1.5], 1.0), &g);
    assert!(matches!(r, Err(Error::SpecOutOfBox(_))));
}

#[test]
fn stack_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = make_grid(1, 4.0, 64, Extension::Zero).unwrap();
    let f = make_test_function(&TestFunctionSpec::bump(&[0.0], 1.0), &g).unwrap();
    let s = build_scale_stack(
        &f,
        &KernelSpec::gaussian(1),
        &ScaleSet::default_for(&g, 8.0).unwrap(),
        true,
    )
    .unwrap();
    s.save(dir.path()).unwrap();
    let back = ScaleStack::load(dir.path()).unwrap();
    assert_eq!(back.layers, s.layers);
    assert_eq!(back.scales, s.scales);
    assert_eq!(back.kernel, s.kernel);
}
