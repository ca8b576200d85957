//! Property tests against independent oracles.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use nondini::conformal::{ConformalMap, PathSpec};
use nondini::halfplane::{extend_v, extend_w, extend_w_poisson, UpperHalfPoint};
use nondini::hilbert::{pv_quadrature_oracle, HilbertEvaluator, OracleSettings};
use nondini::measure::{appendix_product_integral, density_at, wos_exits, BoundaryGeometry, MCConfig};
use nondini::modulus::ModulusSpec;
use nondini::profile::{Mode, SmoothStep, TangentProfile};
use nondini::Smoothed;
use num_complex::Complex64;
use proptest::prelude::*;

const EQ: f64 = 1e-9;

fn step() -> SmoothStep {
    SmoothStep::new(Smoothed::new(ModulusSpec::log_inverse(), 0.5).unwrap()).unwrap()
}

fn profile(mode: Mode) -> TangentProfile {
    let s = (mode == Mode::C1).then(step);
    TangentProfile::dyadic(mode, PI / 4.0, s)
        .unwrap()
        .with_truncation(20, 1e-8)
        .unwrap()
}

fn c1_map() -> &'static ConformalMap {
    static MAP: OnceLock<ConformalMap> = OnceLock::new();
    MAP.get_or_init(|| ConformalMap::new(HilbertEvaluator::new(profile(Mode::C1))))
}

fn lip_map() -> &'static ConformalMap {
    static MAP: OnceLock<ConformalMap> = OnceLock::new();
    MAP.get_or_init(|| ConformalMap::new(HilbertEvaluator::new(profile(Mode::Lipschitz))))
}

fn near_jump(p: &TangentProfile, x: f64, d: f64) -> bool {
    x.abs() < d || (1..=p.value_terms()).any(|k| (x - p.jump(k)).abs() < d)
}

fn builtin() -> impl Strategy<Value = ModulusSpec<f64>> {
    prop_oneof![
        Just(ModulusSpec::log_inverse()),
        (0.05f64..1.0).prop_map(|g| ModulusSpec::power(g).unwrap()),
        (0.01f64..1.0).prop_map(|v| ModulusSpec::constant(v).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothed_modulus_sandwich(spec in builtin(), u in 0.0f64..1.0) {
        let sm = Smoothed::new(spec.clone(), 0.5);
        prop_assume!(sm.is_ok());
        let sm = sm.unwrap();
        let hi = (sm.x_star() / 4.0).min(sm.r_limit());
        let r = (1e-8f64.ln() + u * (hi.ln() - 1e-8f64.ln())).exp();
        let v = sm.eval(r).unwrap();
        prop_assert!(spec.eval(r).unwrap() - EQ <= v);
        prop_assert!(v <= spec.eval(4.0 * r).unwrap() + EQ);
    }

    #[test]
    fn smoothed_modulus_monotone_and_derivative(spec in builtin(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let sm = Smoothed::new(spec, 0.5);
        prop_assume!(sm.is_ok());
        let sm = sm.unwrap();
        let hi = (sm.x_star() / 4.0).min(sm.r_limit());
        let to_r = |u: f64| (1e-8f64.ln() + u * (hi.ln() - 1e-8f64.ln())).exp();
        let (r1, r2) = (to_r(u.min(v)), to_r(u.max(v)));
        prop_assert!(sm.eval(r1).unwrap() <= sm.eval(r2).unwrap() + EQ);
        let d = sm.derivative(r2).unwrap();
        prop_assert!(d >= 0.0 && d <= 1.0 / (r2 * LN_2) + EQ);
        if r2 * (1.0 + 1e-5) < hi {
            let h = 1e-5 * r2;
            let fd = (sm.eval(r2 + h).unwrap() - sm.eval(r2 - h).unwrap()) / (2.0 * h);
            prop_assert!((fd - d).abs() <= 1e-6 * d.abs().max(1.0 / r2) + EQ / h, "fd {} vs {}", fd, d);
        }
    }

    #[test]
    fn closed_form_matches_nested_quadrature(spec in builtin(), u in 0.0f64..1.0) {
        let sm = Smoothed::new(spec, 0.5);
        prop_assume!(sm.is_ok());
        let sm = sm.unwrap();
        let hi = (sm.x_star() / 4.0).min(sm.r_limit());
        let r = (1e-12f64.ln() + u * (hi.ln() - 1e-12f64.ln())).exp();
        let a = sm.eval(r).unwrap();
        let b = sm.eval_nested(r).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-3), "{} vs {}", a, b);
    }

    #[test]
    fn tabulated_modulus_sandwich(incs in prop::collection::vec(0.001f64..0.2, 4..10), u in 0.0f64..1.0) {
        let r: Vec<f64> = (0..incs.len()).map(|i| 2f64.powi(i as i32 - incs.len() as i32)).collect();
        let mut acc = 0.0;
        let theta: Vec<f64> = incs.iter().map(|d| { acc += d; acc }).collect();
        let spec = ModulusSpec::tabulated(r.clone(), theta).unwrap();
        let sm = Smoothed::new(spec.clone(), 0.5);
        prop_assume!(sm.is_ok());
        let sm = sm.unwrap();
        let (lo, hi) = (r[0], sm.r_limit());
        let x = lo + u * (hi - lo);
        let v = sm.eval(x).unwrap();
        prop_assert!(spec.eval(x).unwrap() - EQ <= v && v <= spec.eval(4.0 * x).unwrap() + EQ);
        prop_assert!((v - sm.eval_nested(x).unwrap()).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_monotone(mode in prop_oneof![Just(Mode::C1), Just(Mode::Lipschitz)], mut xs in prop::collection::vec(-0.5f64..2.5, 2..40)) {
        let p = profile(mode);
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in xs.windows(2) {
            prop_assert!(p.eval(w[0]) <= p.eval(w[1]) + 1e-15);
        }
    }

    #[test]
    fn profile_constant_outside_support(mode in prop_oneof![Just(Mode::C1), Just(Mode::Lipschitz)], a in -5.0f64..-1e-9, b in 2.0f64..50.0) {
        let p = profile(mode);
        prop_assert_eq!(p.eval(a), p.eval(-1.0));
        prop_assert_eq!(p.eval(b), p.eval(2.0));
    }

    #[test]
    fn c1_profile_continuous_at_jumps(k in 1usize..12, m in 12i32..40, sign in prop_oneof![Just(1.0), Just(-1.0)]) {
        let p = profile(Mode::C1);
        let s = step();
        let h = sign * 2f64.powi(-m);
        let xk = p.jump(k);
        let lip = p.c_prime() * (s.bridge().g_lip() + 2.0 / (p.delta(k) * LN_2));
        let own = if h > 0.0 { p.c() * p.amplitude(k) * s.smoothed().eval(h).unwrap() } else { 0.0 };
        let diff = (p.eval(xk + h) - p.eval(xk)).abs();
        prop_assert!(diff <= own + lip * h.abs() + 1e-12, "diff {} own {} lip {}", diff, own, lip);
    }

    #[test]
    fn profile_derivative_matches_differences(x in -0.2f64..1.8) {
        let p = profile(Mode::C1);
        prop_assume!(!near_jump(&p, x, 1e-3));
        let s = step();
        let mut kinks: Vec<f64> = Vec::new();
        for k in 1..=p.value_terms() {
            for b in s.breakpoints().into_iter().chain([s.x_star()]) {
                kinks.push(p.jump(k) + b);
            }
        }
        prop_assume!(kinks.iter().all(|b| (x - b).abs() > 1e-4));
        let h = 1e-7;
        let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
        prop_assert!((fd - p.deriv(x)).abs() <= 1e-4 * (1.0 + p.deriv(x).abs()), "fd {} vs {}", fd, p.deriv(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn hilbert_matches_principal_value_oracle(mode in prop_oneof![Just(Mode::C1), Just(Mode::Lipschitz)], x in -2.0f64..3.0) {
        let map = if mode == Mode::C1 { c1_map() } else { lip_map() };
        let p = map.evaluator().profile();
        prop_assume!(!near_jump(p, x, 1e-3));
        let k = map.evaluator().k_profile(x).value.finite().unwrap();
        let o = pv_quadrature_oracle(p, x, OracleSettings::default()).unwrap();
        prop_assert!((k - o.value).abs() <= 1e-6, "K {} oracle {}", k, o.value);
    }
}

#[test]
fn step_transform_grows_logarithmically_at_origin() {
    let ev = c1_map().evaluator();
    for sign in [1.0, -1.0] {
        for m in 5..=30 {
            let x = sign * 2f64.powi(-m);
            let k = ev.k_htilde(x).unwrap().finite().unwrap();
            let rate = k.abs() / (m as f64 * LN_2);
            assert!(rate <= 2.0, "x = {x}: |K| / log(1/|x|) = {rate}");
        }
    }
}

#[test]
fn step_transform_continuous_at_breakpoints() {
    let ev = c1_map().evaluator();
    let s = step();
    for b in [s.x0(), s.x_star()] {
        let l = ev.k_htilde(b * (1.0 - 1e-12)).unwrap().finite().unwrap();
        let r = ev.k_htilde(b * (1.0 + 1e-12)).unwrap().finite().unwrap();
        let at = ev.k_htilde(b).unwrap().finite().unwrap();
        assert!((l - at).abs() <= 1e-8 && (r - at).abs() <= 1e-8, "{l} {at} {r}");
    }
}

fn interior() -> impl Strategy<Value = (f64, f64)> {
    (-2.0f64..3.0, -8.0f64..0.7).prop_map(|(x, lt)| (x, lt.exp()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn poisson_extension_maximum_principle((x, t) in interior()) {
        let map = c1_map();
        let p = map.evaluator().profile();
        let z = UpperHalfPoint::new(x, t).unwrap();
        let v = extend_v(p, z).unwrap();
        prop_assert!(v >= -EQ && v <= p.c_prime() + EQ);
        let lg = map.evaluator().log_g(z.z());
        prop_assert!((lg.im - v).abs() <= 1e-8, "arg G {} vs V {}", lg.im, v);
        prop_assert!(lg.im.abs() <= p.c_prime() + 1e-12);
    }

    #[test]
    fn log_g_is_harmonic_and_analytic((x, t) in (-2.0f64..3.0, 0.2f64..2.0)) {
        let ev = c1_map().evaluator();
        let h = 1e-3;
        let z = Complex64::new(x, t);
        let f = |dx: f64, dy: f64| ev.log_g(z + Complex64::new(dx, dy));
        let lap = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - f(0.0, 0.0) * 4.0) / (h * h);
        prop_assert!(lap.norm() <= 50.0 * h * h / (t * t * t * t) + 1e-6, "laplacian {}", lap);
        // Cauchy-Riemann: d/dx and -i d/dy agree.
        let dx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let dy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h) * Complex64::new(0.0, -1.0);
        prop_assert!((dx - dy).norm() <= 20.0 * h * h / (t * t * t) + 1e-7, "{} vs {}", dx, dy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lipschitz_w_matches_poisson_quadrature((x, t) in interior()) {
        let ev = lip_map().evaluator();
        let z = UpperHalfPoint::new(x, t).unwrap();
        let a = extend_w(ev, z);
        let b = extend_w_poisson(ev, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn phi_is_path_independent((x, t) in (-2.0f64..3.0, 0.05f64..2.0), (ax, ay) in (-3.0f64..3.0, 0.1f64..3.0)) {
        let map = c1_map();
        let z = Complex64::new(x, t);
        let via = Complex64::new(ax, ay);
        prop_assume!((via - z).norm() > 1e-3 && (via - Complex64::new(0.0, 1.0)).norm() > 1e-3);
        let a = map.phi(z, None).unwrap();
        let path = PathSpec::polyline(vec![Complex64::new(0.0, 1.0), via, z]).unwrap();
        let b = map.phi(z, Some(&path)).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * (1.0 + a.norm()), "{} vs {}", a, b);
    }

    #[test]
    fn boundary_difference_quotient_matches_g(x in -2.0f64..3.0) {
        let map = c1_map();
        let p = map.evaluator().profile();
        prop_assume!(!near_jump(p, x, 1e-2));
        let h = 1e-5;
        let dq = map.boundary_integral(x - h, x + h).unwrap().g / (2.0 * h);
        let g = map.g(Complex64::new(x, 0.0)).value().unwrap();
        prop_assert!((dq - g).norm() <= 1e-6 * g.norm(), "{} vs {}", dq, g);
    }

    #[test]
    fn density_is_reciprocal_of_g(x in -2.0f64..3.0) {
        let map = c1_map();
        let p = map.evaluator().profile();
        prop_assume!(!p.is_singular(x));
        let d = density_at(map.evaluator(), x);
        if let Some(g) = map.g(Complex64::new(x, 0.0)).value() {
            prop_assert!((d.value * g.norm() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn appendix_slope_in_range(b in prop::collection::vec(0.01f64..0.12, 1..4)) {
        let eps: Vec<f64> = (2..=14).map(|m| 2f64.powi(-m)).collect();
        let r = appendix_product_integral(&b, &eps).unwrap();
        prop_assert!(r.left_bound_ok);
        prop_assert!(r.fitted_slope >= 1.0 - r.exponent_sum - 0.05 && r.fitted_slope <= 1.0 + 0.01, "slope {}", r.fitted_slope);
    }
}

#[test]
fn average_derivative_nondecreasing_at_first_jump() {
    let map = c1_map();
    let xk = map.evaluator().profile().jump(1);
    let mut prev = 0.0;
    let mut first = None;
    for m in 4..=24 {
        let a = 2f64.powi(-m);
        let avg = map.boundary_integral(xk - a, xk + a).unwrap().len / (2.0 * a);
        assert!(avg >= prev * (1.0 - 1e-9), "m = {m}: {avg} < {prev}");
        first.get_or_insert(avg);
        prev = avg;
    }
    assert!(prev > first.unwrap());
}

#[test]
fn surface_balls_are_ahlfors_regular_at_regular_points() {
    let map = c1_map();
    let tr = nondini::conformal::trace_boundary(map, -2.0, 4.0, 121).unwrap();
    for x in [-1.0, 0.75, 3.0] {
        for m in 6..=18 {
            let r = 2f64.powi(-m);
            let q = nondini::measure::measure_ratio(&tr, x, r).unwrap();
            let ratio = q.length / r;
            assert!((1.9..=2.2).contains(&ratio), "x = {x}, r = {r}: H1/r = {ratio}");
        }
    }
}

#[test]
fn walk_on_spheres_is_reproducible() {
    let flat = ConformalMap::new(HilbertEvaluator::new(TangentProfile::flat()));
    let tr = nondini::conformal::trace_boundary(&flat, -4.0, 4.0, 81).unwrap();
    let geom = BoundaryGeometry::new(&tr).unwrap();
    let mc = MCConfig {
        n_walkers: 300,
        seed: 5,
        ..MCConfig::default()
    };
    let x = Complex64::new(0.2, 0.0);
    let a = wos_exits(&geom, x, &mc).unwrap();
    let b = wos_exits(&geom, x, &mc).unwrap();
    assert_eq!(a, b);
    let c = wos_exits(&geom, x, &MCConfig { seed: 6, ..mc }).unwrap();
    assert_ne!(a, c);
}
