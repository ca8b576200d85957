use std::f64::consts::PI;

use anyhow::{Context, Result};
use clap::ValueEnum;
use nondini::conformal::{check_injectivity, growth_check, ConformalMap};
use nondini::halfplane::{extend_v, extend_w, extend_w_poisson, UpperHalfPoint};
use nondini::hilbert::{pv_quadrature_oracle, HilbertEvaluator, OracleSettings};
use nondini::measure::{appendix_product_integral, density_at, measure_ratio};
use nondini::profile::Mode;
use nondini::Smoothed;
use num_complex::Complex64;
use serde::Serialize;

use crate::commands::{trace, write_json};
use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Modulus,
    Hilbert,
    Halfplane,
    Conformal,
    Measure,
    Appendix,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub anchor: String,
    pub measured: f64,
    pub tolerance: f64,
    pub verdict: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    suite: Suite,
    verdict: bool,
    checks: Vec<Check>,
}

/// Record a check whose measured value must not exceed the tolerance.
fn at_most(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Check {
    Check {
        name: name.into(),
        anchor: anchor.into(),
        measured,
        tolerance,
        verdict: measured <= tolerance,
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn modulus(cfg: &RunConfig) -> Result<Vec<Check>> {
    let sm = Smoothed::with_tolerance(cfg.theta.spec()?, cfg.beta, cfg.tolerances.quad_tol)?;
    let base = sm.base();
    let hi = sm.r_limit() * (1.0 - 1e-9);
    let lo = (hi * 1e-12).max(base.r_min() * 1.000001);
    let grid = log_grid(lo, hi, 60);
    let (mut closed, mut sandwich, mut mono, mut deriv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut prev = f64::NEG_INFINITY;
    for &r in &grid {
        let v = sm.eval(r)?;
        let nested = sm.eval_nested(r)?;
        closed = closed.max((v - nested).abs() / v.abs().max(1e-300));
        sandwich = sandwich.max(base.eval(r)? - v).max(v - base.eval(4.0 * r)?);
        mono = mono.max(prev - v);
        prev = v;
        let h = 1e-5 * r;
        if r + h <= sm.r_limit() {
            let fd = (sm.eval(r + h)? - sm.eval(r - h)?) / (2.0 * h);
            deriv = deriv.max((fd - sm.derivative(r)?).abs() / sm.derivative(r)?.abs().max(1e-3 * v / r));
        }
    }
    Ok(vec![
        at_most(
            "closed_form_vs_nested",
            "smoothed modulus: closed form against nested quadrature (relative)",
            closed,
            1e-8,
        ),
        at_most("sandwich", "theta(r) <= smoothed(r) <= theta(4r)", sandwich, 1e-12),
        at_most("monotone", "smoothed modulus is nondecreasing", mono, 1e-14),
        at_most(
            "derivative",
            "derivative against central differences (relative)",
            deriv,
            1e-5,
        ),
    ])
}

fn hilbert(cfg: &RunConfig, ev: &HilbertEvaluator) -> Result<Vec<Check>> {
    let p = ev.profile();
    let xs = [-1.3, -0.2, 0.3, 0.7, 0.9, 1.7, 2.5];
    let mut diff = 0.0f64;
    for &x in &xs {
        let o = pv_quadrature_oracle(p, x, OracleSettings::default())?;
        let k = ev
            .k_profile(x)
            .value
            .finite()
            .context("K infinite at a regular point")?;
        diff = diff.max((k - o.value).abs());
    }
    let mut out = vec![at_most(
        "oracle",
        "K against direct principal-value quadrature",
        diff,
        1e-6,
    )];
    if cfg.mode == Mode::C1 {
        let step = p.step().context("C1 profile without a step")?;
        let (x0, xs) = (step.x0(), step.x_star());
        let mut jump = 0.0f64;
        for b in [x0, xs] {
            let h = 1e-9 * b;
            let l = ev.k_htilde(b - h)?.finite().unwrap_or(f64::NAN);
            let r = ev.k_htilde(b + h)?.finite().unwrap_or(f64::NAN);
            jump = jump.max((l - r).abs());
        }
        out.push(at_most(
            "step_continuity",
            "single-step transform is continuous at the step breakpoints",
            jump,
            1e-6,
        ));
        let mut worst = 0.0f64;
        let n = 200;
        for i in 0..n {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
            let x = if x > 0.0 && x < 2.0 * xs { x * x * x } else { x };
            let b = ev.region_bracket(x)?;
            let k = PI * ev.k_htilde(x)?.finite().unwrap_or(f64::NAN);
            worst = worst.max(b.lower - k).max(k - b.upper);
            if k.is_nan() {
                worst = f64::INFINITY;
            }
        }
        out.push(at_most(
            "region_bracket",
            "single-step transform lies inside its region brackets",
            worst,
            1e-9,
        ));
    }
    Ok(out)
}

fn halfplane(ev: &HilbertEvaluator) -> Result<Vec<Check>> {
    let p = ev.profile();
    let c_prime = p.c_prime();
    let pts: Vec<UpperHalfPoint> = [
        (-1.0, 0.5),
        (0.3, 0.01),
        (0.5, 0.2),
        (0.02, 1e-3),
        (2.0, 3.0),
        (-0.1, 0.05),
    ]
    .iter()
    .map(|&(x, t)| UpperHalfPoint::new(x, t))
    .collect::<Result<_, _>>()?;
    let (mut arg, mut range, mut w_gap) = (0.0f64, 0.0f64, 0.0f64);
    for &z in &pts {
        let lg = ev.log_g(z.z());
        arg = arg.max(lg.im.abs() - c_prime);
        let v = extend_v(p, z)?;
        range = range.max(-v).max(v - c_prime).max((v - lg.im).abs());
        w_gap = w_gap.max((extend_w(ev, z) - extend_w_poisson(ev, z)?).abs());
    }
    Ok(vec![
        at_most("argument_bound", "|arg G| <= c' in the upper half-plane", arg, 1e-9),
        at_most(
            "poisson_v",
            "Poisson extension of f agrees with arg G and stays in [0, c']",
            range,
            1e-8,
        ),
        at_most("poisson_w", "Poisson extension of Kf agrees with -log|G|", w_gap, 1e-6),
    ])
}

fn conformal(cfg: &RunConfig, map: &ConformalMap) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let z = Complex64::new(0.7, 0.3);
    let direct = map.phi(z, None)?;
    let around = map.phi(
        z,
        Some(&nondini::conformal::PathSpec::polyline(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(1.5, 1.5),
            z,
        ])?),
    )?;
    out.push(at_most(
        "path_independence",
        "Phi does not depend on the integration path",
        (direct - around).norm(),
        1e-8,
    ));
    let inj = check_injectivity(map, 24, cfg.mc.seed)?;
    out.push(at_most(
        "injectivity",
        "Re of the averaged G on random segments exceeds cos(c') min|G|",
        inj.failures as f64,
        0.0,
    ));
    let g = growth_check(map, &[16.0, 64.0, 256.0], 8)?;
    let expected = 1.0 - map.c_prime() / PI;
    out.push(at_most(
        "growth",
        "|Phi(z)| grows like |z|^(1 - c'/pi)",
        (g.exponent - expected).abs(),
        0.05,
    ));
    let tr = trace(cfg)?;
    let simple = tr.check_simplicity();
    out.push(at_most(
        "simplicity",
        "traced boundary polyline has no self-crossings",
        if simple.is_simple() { 0.0 } else { 1.0 },
        0.0,
    ));
    let p = map.evaluator().profile();
    let mut tangent = 0.0f64;
    for w in tr.samples().windows(2) {
        if w[0].singular || w[1].singular {
            continue;
        }
        let d = w[1].phi - w[0].phi;
        let a = d.arg();
        // Short chords far from the origin lose digits to cancellation.
        let slack = 8.0 * f64::EPSILON * w[1].phi.norm().max(1.0) / d.norm();
        tangent = tangent.max(p.eval(w[0].x) - a - slack).max(a - p.eval(w[1].x) - slack);
    }
    out.push(at_most(
        "tangent",
        "chord directions lie between the tangent angles at their ends",
        tangent,
        1e-9,
    ));
    Ok(out)
}

fn measure(cfg: &RunConfig, map: &ConformalMap) -> Result<Vec<Check>> {
    let ev = map.evaluator();
    let mut ident = 0.0f64;
    for i in 0..40 {
        let x = -1.9 + 4.7 * (i as f64 + 0.31) / 40.0;
        let d = density_at(ev, x);
        let g = map.g(Complex64::new(x, 0.0));
        if let Some(g) = g.value() {
            ident = ident.max((d.value * g.norm() - 1.0).abs());
        }
    }
    let mut out = vec![at_most(
        "density_reciprocal",
        "density times |G| equals one on the boundary",
        ident,
        1e-12,
    )];
    let tr = trace(cfg)?;
    let (mut conv, mut ahlfors) = (0.0f64, 0.0f64);
    for x in [-1.0, 2.5] {
        let d = density_at(ev, x).value;
        for m in [10, 14, 18] {
            let r = 2f64.powi(-m);
            let mr = measure_ratio(&tr, x, r)?;
            conv = conv.max((mr.ratio - d).abs() / d);
            ahlfors = ahlfors.max((mr.length / (2.0 * r) - 1.0).abs());
        }
    }
    out.push(at_most(
        "regular_ratio",
        "surface-ball ratio tends to the density at regular points (relative)",
        conv,
        1e-3,
    ));
    out.push(at_most(
        "ahlfors",
        "arclength of small surface balls is 2r (relative)",
        ahlfors,
        1e-3,
    ));
    Ok(out)
}

fn appendix() -> Result<Vec<Check>> {
    let eps: Vec<f64> = (2..=14).map(|m| 2f64.powi(-m)).collect();
    let r = appendix_product_integral(&[0.125, 0.125], &eps)?;
    Ok(vec![
        Check {
            name: "product_bound".into(),
            anchor: "product integral over [-eps, eps] bounded by C eps^(1 - sum b); measured is (1 - sum b) minus the fitted slope".into(),
            measured: 1.0 - r.exponent_sum - r.fitted_slope,
            tolerance: 0.0,
            verdict: r.bound_ok,
        },
        Check {
            name: "left_half".into(),
            anchor: "product integral over [-eps, 0] bounded by eps^(1 - sum b)/(1 - sum b)".into(),
            measured: r.left_integrals.last().copied().unwrap_or(f64::NAN),
            tolerance: eps.last().unwrap().powf(1.0 - r.exponent_sum) / (1.0 - r.exponent_sum),
            verdict: r.left_bound_ok,
        },
    ])
}

pub fn run(cfg: &RunConfig, suite: Suite) -> Result<bool> {
    let all = suite == Suite::All;
    let mut checks = Vec::new();
    if all || suite == Suite::Modulus {
        checks.extend(modulus(cfg)?);
    }
    if all || suite == Suite::Appendix {
        checks.extend(appendix()?);
    }
    let needs_map = all
        || matches!(
            suite,
            Suite::Hilbert | Suite::Halfplane | Suite::Conformal | Suite::Measure
        );
    if needs_map {
        let map = cfg.map()?;
        if all || suite == Suite::Hilbert {
            checks.extend(hilbert(cfg, map.evaluator())?);
        }
        if all || suite == Suite::Halfplane {
            checks.extend(halfplane(map.evaluator())?);
        }
        if all || suite == Suite::Conformal {
            checks.extend(conformal(cfg, &map)?);
        }
        if all || suite == Suite::Measure {
            checks.extend(measure(cfg, &map)?);
        }
    }
    let verdict = checks.iter().all(|c| c.verdict);
    for c in &checks {
        println!(
            "{:<22} {:>12.4e} (tol {:.1e}) {}",
            c.name,
            c.measured,
            c.tolerance,
            if c.verdict { "pass" } else { "FAIL" }
        );
    }
    write_json(&cfg.output, "report.json", &Report { suite, verdict, checks })?;
    Ok(verdict)
}
