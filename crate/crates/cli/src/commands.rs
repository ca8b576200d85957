use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nondini::conformal::{trace_boundary_with_depth, BoundaryTrace};
use nondini::measure::{appendix_product_integral, pullback_probability, singular_set_scan, wos_harmonic_measure};
use nondini::profile::{BridgeSpline, Mode, Sequence, TangentProfile};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::{RunConfig, ThetaConfig};

#[derive(Debug, Serialize)]
struct StepDump<'a> {
    theta: &'a ThetaConfig,
    beta: f64,
    x0: f64,
    x_star: f64,
    bridge: &'a BridgeSpline,
}

#[derive(Debug, Serialize)]
struct ProfileDump<'a> {
    mode: Mode,
    c: f64,
    c_prime: f64,
    amplitudes: &'a Sequence,
    jumps: &'a Sequence,
    terms: Option<usize>,
    k: usize,
    tail_tol: f64,
    step: Option<StepDump<'a>>,
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let path = dir.join(name);
    let mut f = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    use std::io::Write;
    writeln!(f)?;
    Ok(())
}

pub fn trace(cfg: &RunConfig) -> Result<BoundaryTrace> {
    let map = cfg.map()?;
    let t = &cfg.trace;
    Ok(trace_boundary_with_depth(&map, t.x_lo, t.x_hi, t.base_n, t.depth)?)
}

fn dump(cfg: &RunConfig, p: &TangentProfile) -> Result<()> {
    let step = p.step().map(|s| StepDump {
        theta: &cfg.theta,
        beta: cfg.beta,
        x0: s.x0(),
        x_star: s.x_star(),
        bridge: s.bridge(),
    });
    let d = ProfileDump {
        mode: p.mode(),
        c: p.c(),
        c_prime: p.c_prime(),
        amplitudes: p.amplitudes(),
        jumps: p.jumps(),
        terms: p.term_count(),
        k: p.k(),
        tail_tol: p.tail_tol(),
        step,
    };
    write_json(&cfg.output, "profile.json", &d)
}

pub fn construct(cfg: &RunConfig) -> Result<BoundaryTrace> {
    let tr = trace(cfg)?;
    dump(cfg, tr.map().evaluator().profile())?;
    std::fs::write(cfg.output.join("config.toml"), cfg.to_toml()?)?;
    let path = cfg.output.join("boundary.csv");
    tr.write_csv(BufWriter::new(File::create(&path)?))?;
    let simple = tr.check_simplicity();
    println!(
        "traced {} samples on [{}, {}]; polyline simple: {}",
        tr.samples().len(),
        cfg.trace.x_lo,
        cfg.trace.x_hi,
        simple.is_simple()
    );
    Ok(tr)
}

pub fn dyadic_radii(r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_min <= r_max) {
        bail!("need 0 < r_min <= r_max");
    }
    let mut r = Vec::new();
    let mut v = r_max;
    while v >= r_min * (1.0 - 1e-12) {
        r.push(v);
        v *= 0.5;
    }
    Ok(r)
}

pub fn density(cfg: &RunConfig, centers: Option<Vec<f64>>, r_min: f64, r_max: f64) -> Result<()> {
    let tr = trace(cfg)?;
    let p = tr.map().evaluator().profile();
    let centers = centers.unwrap_or_else(|| {
        let n = p.term_count().unwrap_or(8).min(8);
        let mut c: Vec<f64> = (1..=n).map(|k| p.jump(k)).collect();
        c.extend([-1.0, 3.0]);
        c
    });
    let radii = dyadic_radii(r_min, r_max)?;
    let rep = singular_set_scan(&tr, &centers, &radii)?;
    rep.write_csv(BufWriter::new(File::create(cfg.output.join("density.csv"))?))?;
    write_json(&cfg.output, "density_summary.json", &rep.summary())?;
    println!("flagged centers: {:?}", rep.flagged());
    Ok(())
}

#[derive(Debug, Serialize)]
struct McRow {
    a: f64,
    b: f64,
    frequency: f64,
    sigma: f64,
    exact: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct McDump {
    z0: [f64; 2],
    start: [f64; 2],
    walkers: usize,
    timeouts: usize,
    escapes: usize,
    rows: Vec<McRow>,
}

/// Absorption and polyline resolution allowance added to the 3σ band.
pub fn resolution_term(wos_epsilon: f64) -> f64 {
    10.0 * wos_epsilon
}

pub fn mc_oracle(cfg: &RunConfig, z0: &[f64], arcs: &[f64]) -> Result<bool> {
    if z0.len() != 2 || !(z0[1] > 0.0) {
        bail!("z0 must be x,t with t > 0");
    }
    if arcs.is_empty() || !arcs.len().is_multiple_of(2) {
        bail!("arcs need an even number of endpoints");
    }
    let tr = trace(cfg)?;
    let z0c = Complex64::new(z0[0], z0[1]);
    let x = tr.map().phi(z0c, None)?;
    let pairs: Vec<(f64, f64)> = arcs.chunks(2).map(|c| (c[0], c[1])).collect();
    let rep = wos_harmonic_measure(&tr, x, &pairs, &cfg.mc)?;
    let res = resolution_term(cfg.mc.wos_epsilon);
    let rows: Vec<McRow> = rep
        .arcs
        .iter()
        .map(|f| {
            let exact = pullback_probability(z0c, f.a, f.b);
            let tolerance = 3.0 * f.sigma + res;
            McRow {
                a: f.a,
                b: f.b,
                frequency: f.frequency,
                sigma: f.sigma,
                exact,
                tolerance,
                pass: (f.frequency - exact).abs() <= tolerance,
            }
        })
        .collect();
    let ok = rows.iter().all(|r| r.pass) && rep.timeouts_ok();
    for r in &rows {
        println!(
            "arc [{}, {}]: {:.5} ± {:.5} vs {:.5} {}",
            r.a,
            r.b,
            r.frequency,
            r.sigma,
            r.exact,
            if r.pass { "ok" } else { "MISMATCH" }
        );
    }
    let d = McDump {
        z0: [z0[0], z0[1]],
        start: [x.re, x.im],
        walkers: rep.walkers,
        timeouts: rep.timeouts,
        escapes: rep.escapes,
        rows,
    };
    write_json(&cfg.output, "mc.json", &d)?;
    Ok(ok)
}

pub fn appendix_check(cfg: &RunConfig, b: &[f64]) -> Result<bool> {
    let eps: Vec<f64> = (2..=14).map(|m| 2f64.powi(-m)).collect();
    let r = appendix_product_integral(b, &eps)?;
    println!(
        "sum b = {:.6}, fitted slope = {:.4}, bound holds: {}, left-half bound holds: {}",
        r.exponent_sum, r.fitted_slope, r.bound_ok, r.left_bound_ok
    );
    write_json(&cfg.output, "appendix.json", &r)?;
    Ok(r.bound_ok && r.left_bound_ok)
}
