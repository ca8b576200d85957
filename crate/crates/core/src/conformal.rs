//! The conformal map Φ(z) = ∫ G from the base point i, its boundary trace and the
//! geometric checks run on it.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfplane::{g_boundary, BoundaryG};
use crate::hilbert::HilbertEvaluator;
use crate::quadrature::{Integrator, QuadValue, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformalError {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Finest dyadic scale of the boundary refinement around singular points.
pub const REFINE_DEPTH: u32 = 28;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// (∫G, ∫|G|) integrated together along the real axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GArc {
    pub g: Complex64,
    pub len: f64,
}

impl Add for GArc {
    type Output = GArc;
    fn add(self, o: GArc) -> GArc {
        GArc {
            g: self.g + o.g,
            len: self.len + o.len,
        }
    }
}
impl Sub for GArc {
    type Output = GArc;
    fn sub(self, o: GArc) -> GArc {
        GArc {
            g: self.g - o.g,
            len: self.len - o.len,
        }
    }
}
impl Mul<f64> for GArc {
    type Output = GArc;
    fn mul(self, s: f64) -> GArc {
        GArc {
            g: self.g * s,
            len: self.len * s,
        }
    }
}
impl QuadValue<f64> for GArc {
    fn zero() -> Self {
        GArc {
            g: Complex64::new(0.0, 0.0),
            len: 0.0,
        }
    }
    fn magnitude(&self) -> f64 {
        self.g.re.abs().max(self.g.im.abs()).max(self.len.abs())
    }
}

/// A point of the real axis where the integrand needs care: a singularity of |G| with its
/// exponent, or a kink of f (exponent 0).
#[derive(Debug, Clone, Copy, PartialEq)]
struct Feature {
    x: f64,
    exponent: f64,
}

/// How to integrate one path segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SegmentRule {
    Regular,
    /// G blows up like |z − end|^(−p) at the segment's end.
    SingularEnd {
        p: f64,
    },
    SingularStart {
        p: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    waypoints: Vec<Complex64>,
    rules: Vec<SegmentRule>,
}

impl PathSpec {
    pub fn new(waypoints: Vec<Complex64>, rules: Vec<SegmentRule>) -> Result<Self, ConformalError> {
        if waypoints.len() < 2 {
            return Err(ConformalError::InvalidPath("need at least two waypoints".into()));
        }
        if rules.len() + 1 != waypoints.len() {
            return Err(ConformalError::InvalidPath(format!(
                "{} waypoints need {} rules, got {}",
                waypoints.len(),
                waypoints.len() - 1,
                rules.len()
            )));
        }
        for w in &waypoints {
            if !(w.im >= 0.0) || !w.re.is_finite() || !w.im.is_finite() {
                return Err(ConformalError::InvalidPath(format!(
                    "waypoint {w} outside the closed half-plane"
                )));
            }
        }
        for (w, r) in waypoints.windows(2).zip(&rules) {
            if w[0] == w[1] {
                return Err(ConformalError::InvalidPath(format!("repeated waypoint {}", w[0])));
            }
            match *r {
                SegmentRule::SingularEnd { p } | SegmentRule::SingularStart { p } if !(0.0..1.0).contains(&p) => {
                    return Err(ConformalError::InvalidPath(format!("exponent {p} not in [0, 1)")));
                }
                _ => {}
            }
        }
        Ok(Self { waypoints, rules })
    }

    /// Straight segments with regular rules.
    pub fn polyline(waypoints: Vec<Complex64>) -> Result<Self, ConformalError> {
        let n = waypoints.len().saturating_sub(1);
        Self::new(waypoints, vec![SegmentRule::Regular; n])
    }

    pub fn waypoints(&self) -> &[Complex64] {
        &self.waypoints
    }
    pub fn rules(&self) -> &[SegmentRule] {
        &self.rules
    }
}

/// Φ for one tangent profile. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    ev: Arc<HilbertEvaluator>,
    features: Arc<Vec<Feature>>,
    quad: Integrator<f64>,
}

impl ConformalMap {
    pub fn new(ev: HilbertEvaluator) -> Self {
        Self::from_arc(Arc::new(ev))
    }

    pub fn from_arc(ev: Arc<HilbertEvaluator>) -> Self {
        let features = Arc::new(collect_features(&ev));
        Self {
            ev,
            features,
            quad: Integrator::new(1e-14, 1e-11).with_max_intervals(4000),
        }
    }

    pub fn with_tolerance(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.quad.abs_tol = abs_tol;
        self.quad.rel_tol = rel_tol;
        self
    }

    pub fn evaluator(&self) -> &HilbertEvaluator {
        &self.ev
    }

    pub fn c_prime(&self) -> f64 {
        self.ev.profile().c_prime()
    }

    /// Exponent p of the blow-up |G| ~ |x − s|^(−p) if x is a resolved singular point.
    pub fn singular_exponent(&self, x: f64) -> Option<f64> {
        self.features
            .iter()
            .find(|f| f.x == x && f.exponent > 0.0)
            .map(|f| f.exponent)
    }

    /// Singular points in [a, b] with their exponents.
    pub fn singular_points_in(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        self.features
            .iter()
            .filter(|f| f.exponent > 0.0 && f.x >= a && f.x <= b)
            .map(|f| (f.x, f.exponent))
            .collect()
    }

    /// Kinks of f in [a, b].
    pub fn kinks_in(&self, a: f64, b: f64) -> Vec<f64> {
        self.features
            .iter()
            .filter(|f| f.exponent == 0.0 && f.x >= a && f.x <= b)
            .map(|f| f.x)
            .collect()
    }

    /// G at a point of the closed upper half-plane.
    pub fn g(&self, z: Complex64) -> BoundaryG {
        if z.im > 0.0 {
            BoundaryG::Finite(self.ev.log_g(z).exp())
        } else {
            g_boundary(&self.ev, z.re)
        }
    }

    fn g_real(&self, x: f64) -> GArc {
        match g_boundary(&self.ev, x) {
            BoundaryG::Finite(g) => GArc { g, len: g.norm() },
            // A single point carries no mass.
            BoundaryG::Infinite { .. } => GArc::zero(),
        }
    }

    /// (∫ₐᵇ G, ∫ₐᵇ |G|) along the real axis, a <= b.
    pub fn boundary_integral(&self, a: f64, b: f64) -> Result<GArc, ConformalError> {
        if a > b {
            return self.boundary_integral(b, a).map(|v| GArc { g: -v.g, len: v.len });
        }
        if a == b {
            return Ok(GArc::zero());
        }
        let lo = self.features.partition_point(|f| f.x <= a);
        let hi = self.features.partition_point(|f| f.x < b);
        let mut cuts = vec![Feature {
            x: a,
            exponent: self.singular_exponent(a).unwrap_or(0.0),
        }];
        cuts.extend_from_slice(&self.features[lo..hi]);
        cuts.push(Feature {
            x: b,
            exponent: self.singular_exponent(b).unwrap_or(0.0),
        });
        let mut total = GArc::zero();
        for w in cuts.windows(2) {
            total = total + self.piece(w[0], w[1])?;
        }
        Ok(total)
    }

    fn piece(&self, u: Feature, v: Feature) -> Result<GArc, ConformalError> {
        let f = |x: f64| self.g_real(x);
        let q = &self.quad;
        let r = match (u.exponent > 0.0, v.exponent > 0.0) {
            (false, false) => q.integrate(f, u.x, v.x)?.value,
            (true, false) => q.integrate_singular_start(f, u.x, v.x, u.exponent)?.value,
            (false, true) => q.integrate_singular_end(f, u.x, v.x, v.exponent)?.value,
            (true, true) => {
                let m = 0.5 * (u.x + v.x);
                q.integrate_singular_start(f, u.x, m, u.exponent)?.value
                    + q.integrate_singular_end(f, m, v.x, v.exponent)?.value
            }
        };
        Ok(r)
    }

    /// ∫ G along one straight segment.
    pub fn segment_integral(
        &self,
        w0: Complex64,
        w1: Complex64,
        rule: SegmentRule,
    ) -> Result<Complex64, ConformalError> {
        if w0.im == 0.0 && w1.im == 0.0 {
            return Ok(self.boundary_integral(w0.re, w1.re)?.g);
        }
        let d = w1 - w0;
        let f = |t: f64| -> Complex64 {
            let z = w0 + d * t;
            if z.im > 0.0 {
                self.ev.log_g(z).exp()
            } else {
                match g_boundary(&self.ev, z.re) {
                    BoundaryG::Finite(g) => g,
                    BoundaryG::Infinite { .. } => Complex64::new(0.0, 0.0),
                }
            }
        };
        let q = &self.quad;
        let v = match rule {
            SegmentRule::Regular => q.integrate(f, 0.0, 1.0)?.value,
            SegmentRule::SingularEnd { p } => q.integrate_singular_end(f, 0.0, 1.0, p)?.value,
            SegmentRule::SingularStart { p } => q.integrate_singular_start(f, 0.0, 1.0, p)?.value,
        };
        Ok(v * d)
    }

    /// The default path from i to z: a straight segment for interior z, and for a
    /// boundary point x the horizontal segment to x + i followed by the vertical drop to x.
    pub fn auto_path(&self, z: Complex64) -> Result<PathSpec, ConformalError> {
        if z.im > 0.0 {
            return PathSpec::polyline(vec![I, z]);
        }
        let end = match self.singular_exponent(z.re) {
            Some(p) => SegmentRule::SingularEnd { p },
            None => SegmentRule::Regular,
        };
        if z.re == 0.0 {
            return PathSpec::new(vec![I, z], vec![end]);
        }
        PathSpec::new(vec![I, z + I, z], vec![SegmentRule::Regular, end])
    }

    /// Φ(z) along the given path, or the automatic one. Φ(i) = 0.
    pub fn phi(&self, z: Complex64, path: Option<&PathSpec>) -> Result<Complex64, ConformalError> {
        if !(z.im >= 0.0) {
            return Err(ConformalError::Domain(format!("{z} is below the real axis")));
        }
        if z == I && path.is_none() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let owned;
        let path = match path {
            Some(p) => {
                if p.waypoints[0] != I || *p.waypoints.last().unwrap() != z {
                    return Err(ConformalError::InvalidPath("path must run from i to z".into()));
                }
                p
            }
            None => {
                owned = self.auto_path(z)?;
                &owned
            }
        };
        let mut s = Complex64::new(0.0, 0.0);
        for (w, r) in path.waypoints.windows(2).zip(&path.rules) {
            s += self.segment_integral(w[0], w[1], *r)?;
        }
        Ok(s)
    }

    /// Polar form of (Φ(x + ε) − Φ(x))/ε for each ε.
    pub fn secant_tangent(&self, x: f64, eps: &[f64]) -> Result<Vec<Secant>, ConformalError> {
        eps.par_iter()
            .map(|&e| {
                if e == 0.0 || !e.is_finite() {
                    return Err(ConformalError::Domain(format!("invalid increment {e}")));
                }
                let q = self.boundary_integral(x, x + e)?.g / e;
                Ok(Secant {
                    eps: e,
                    modulus: q.norm(),
                    angle: q.arg(),
                })
            })
            .collect()
    }
}

fn collect_features(ev: &HilbertEvaluator) -> Vec<Feature> {
    let p = ev.profile();
    let floor = 2f64.powi(-(REFINE_DEPTH as i32) - 32);
    let count = match p.term_count() {
        Some(n) => n,
        None => (1..=256).take_while(|&k| p.jump(k).abs() >= floor).count(),
    };
    let mut out = Vec::new();
    for k in 1..=count {
        let xk = p.jump(k);
        let e = p.c() * p.amplitude(k) / PI;
        if e > 0.0 {
            out.push(Feature {
                x: xk,
                exponent: e.min(0.999),
            });
        }
        // Kinks of far-in steps sit within rounding of other features.
        let kinks = xk.abs() >= 2f64.powi(-(REFINE_DEPTH as i32) - 4);
        if let (Some(s), true) = (p.step(), kinks) {
            for b in s.breakpoints().into_iter().chain([s.x_star()]) {
                if b > 0.0 {
                    out.push(Feature {
                        x: xk + b,
                        exponent: 0.0,
                    });
                }
            }
        }
    }
    if p.accumulates_at_origin() {
        out.push(Feature {
            x: 0.0,
            exponent: (p.c_prime() / PI).min(0.999),
        });
    }
    out.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap()
            .then(b.exponent.partial_cmp(&a.exponent).unwrap())
    });
    out.dedup_by(|a, b| a.x == b.x);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Secant {
    pub eps: f64,
    pub modulus: f64,
    pub angle: f64,
}

/// |Φ′(x)| at a trace sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbsDerivative {
    Finite(f64),
    Infinite,
}

impl AbsDerivative {
    pub fn finite(self) -> Option<f64> {
        match self {
            AbsDerivative::Finite(v) => Some(v),
            AbsDerivative::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub x: f64,
    pub phi: Complex64,
    pub abs_dphi: AbsDerivative,
    /// ∫ |Φ′| from the first sample.
    pub arclength: f64,
    /// Dyadic refinement level m of x = s ± 2⁻ᵐ around a singular point s; 0 on the base grid.
    pub level: u32,
    pub singular: bool,
}

/// Φ sampled along [x_lo, x_hi], refined geometrically toward every singular point.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    map: ConformalMap,
    samples: Vec<TraceSample>,
}

/// Φ and arclength at an arbitrary point of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub phi: Complex64,
    pub arclength: f64,
}

pub fn trace_boundary(
    map: &ConformalMap,
    x_lo: f64,
    x_hi: f64,
    base_n: usize,
) -> Result<BoundaryTrace, ConformalError> {
    trace_boundary_with_depth(map, x_lo, x_hi, base_n, REFINE_DEPTH)
}

pub fn trace_boundary_with_depth(
    map: &ConformalMap,
    x_lo: f64,
    x_hi: f64,
    base_n: usize,
    depth: u32,
) -> Result<BoundaryTrace, ConformalError> {
    if !(x_lo < 0.0 && 0.0 < x_hi) {
        return Err(ConformalError::Domain(format!(
            "window [{x_lo}, {x_hi}] must contain 0 in its interior"
        )));
    }
    if base_n < 2 {
        return Err(ConformalError::Domain("base_n must be at least 2".into()));
    }
    let mut grid: Vec<(f64, u32)> = (0..base_n)
        .map(|j| (x_lo + (x_hi - x_lo) * j as f64 / (base_n - 1) as f64, 0))
        .collect();
    grid[base_n - 1].0 = x_hi;
    let singular = map.singular_points_in(x_lo, x_hi);
    let xs: Vec<f64> = singular.iter().map(|s| s.0).collect();
    let finest = 2f64.powi(-(depth as i32));
    for (idx, &s) in xs.iter().enumerate() {
        if s != 0.0 && s.abs() < finest {
            continue;
        }
        // Distance to the neighbouring singular points, or to 0 for the smallest jump.
        let mut delta = f64::INFINITY;
        if idx > 0 {
            delta = delta.min(s - xs[idx - 1]);
        }
        if idx + 1 < xs.len() {
            delta = delta.min(xs[idx + 1] - s);
        }
        if s != 0.0 {
            delta = delta.min(s.abs());
        }
        delta = delta.min(1.0);
        grid.push((s, depth));
        for m in 1..=depth {
            let h = 2f64.powi(-(m as i32));
            if h > delta / 2.0 {
                continue;
            }
            for y in [s - h, s + h] {
                if y > x_lo && y < x_hi {
                    grid.push((y, m));
                }
            }
        }
    }
    for k in map.kinks_in(x_lo, x_hi) {
        if k.abs() >= finest {
            grid.push((k, 0));
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
    let is_sing = |x: f64| xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()).is_ok();
    let mut merged: Vec<(f64, u32)> = Vec::with_capacity(grid.len());
    for g in grid {
        match merged.last_mut() {
            Some(last) if g.0 - last.0 < finest / 16.0 => {
                if is_sing(g.0) && !is_sing(last.0) {
                    *last = g;
                }
            }
            _ => merged.push(g),
        }
    }
    if merged.last().map(|g| g.0) != Some(x_hi) {
        merged.pop();
        merged.push((x_hi, 0));
    }
    let grid = merged;
    let pieces: Vec<GArc> = grid
        .par_windows(2)
        .map(|w| map.boundary_integral(w[0].0, w[1].0))
        .collect::<Result<_, _>>()?;
    let anchor = map.phi(Complex64::new(x_lo, 0.0), None)?;
    let mut samples = Vec::with_capacity(grid.len());
    let mut phi = anchor;
    let mut len = 0.0;
    for (j, &(x, level)) in grid.iter().enumerate() {
        if j > 0 {
            phi += pieces[j - 1].g;
            len += pieces[j - 1].len;
        }
        let (abs_dphi, singular) = match map.g(Complex64::new(x, 0.0)) {
            BoundaryG::Finite(g) => (AbsDerivative::Finite(g.norm()), false),
            BoundaryG::Infinite { .. } => (AbsDerivative::Infinite, true),
        };
        samples.push(TraceSample {
            x,
            phi,
            abs_dphi,
            arclength: len,
            level,
            singular,
        });
    }
    Ok(BoundaryTrace {
        map: map.clone(),
        samples,
    })
}

/// Result of the polyline self-intersection sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplicityReport {
    pub segments: usize,
    /// First pair of crossing segments (by index), if any.
    pub crossing: Option<(usize, usize)>,
}

impl SimplicityReport {
    pub fn is_simple(&self) -> bool {
        self.crossing.is_none()
    }
}

impl BoundaryTrace {
    pub fn map(&self) -> &ConformalMap {
        &self.map
    }
    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }
    pub fn c_prime(&self) -> f64 {
        self.map.c_prime()
    }
    pub fn x_range(&self) -> (f64, f64) {
        (self.samples[0].x, self.samples.last().unwrap().x)
    }

    /// Index j with x_j <= x < x_{j+1} (the last sample maps to itself).
    fn bracket(&self, x: f64) -> Result<usize, ConformalError> {
        let (lo, hi) = self.x_range();
        if !(x >= lo && x <= hi) {
            return Err(ConformalError::Domain(format!("{x} outside the trace [{lo}, {hi}]")));
        }
        Ok(self.samples.partition_point(|s| s.x <= x) - 1)
    }

    /// Φ(x) and the arclength up to x, integrating from the nearest sample on the left.
    pub fn locate(&self, x: f64) -> Result<TracePoint, ConformalError> {
        let j = self.bracket(x)?;
        let s = &self.samples[j];
        if s.x == x {
            return Ok(TracePoint {
                phi: s.phi,
                arclength: s.arclength,
            });
        }
        let d = self.map.boundary_integral(s.x, x)?;
        Ok(TracePoint {
            phi: s.phi + d.g,
            arclength: s.arclength + d.len,
        })
    }

    pub fn phi_at(&self, x: f64) -> Result<Complex64, ConformalError> {
        Ok(self.locate(x)?.phi)
    }

    /// Directions of the chords Φ(x_{j+1}) − Φ(x_j), keyed by the chord midpoint in x.
    pub fn chord_angles(&self) -> Vec<(f64, f64)> {
        self.samples
            .windows(2)
            .map(|w| (0.5 * (w[0].x + w[1].x), (w[1].phi - w[0].phi).arg()))
            .collect()
    }

    /// Sweep over x-extents of the polyline segments; neighbours sharing a vertex are skipped.
    pub fn check_simplicity(&self) -> SimplicityReport {
        let pts: Vec<Complex64> = self.samples.iter().map(|s| s.phi).collect();
        let n = pts.len().saturating_sub(1);
        let mut order: Vec<usize> = (0..n).collect();
        let lo = |i: usize| pts[i].re.min(pts[i + 1].re);
        let hi = |i: usize| pts[i].re.max(pts[i + 1].re);
        order.sort_by(|&a, &b| lo(a).partial_cmp(&lo(b)).unwrap());
        let mut active: Vec<usize> = Vec::new();
        for &i in &order {
            if pts[i] == pts[i + 1] {
                continue;
            }
            let x = lo(i);
            active.retain(|&j| hi(j) >= x);
            for &j in &active {
                if i.abs_diff(j) > 1 && segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                    return SimplicityReport {
                        segments: n,
                        crossing: Some((i.min(j), i.max(j))),
                    };
                }
            }
            active.push(i);
        }
        SimplicityReport {
            segments: n,
            crossing: None,
        }
    }

    /// CSV with columns x, re_phi, im_phi, abs_dphi, is_singular.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["x", "re_phi", "im_phi", "abs_dphi", "is_singular"])?;
        for s in &self.samples {
            let d = match s.abs_dphi {
                AbsDerivative::Finite(v) => fmt17(v),
                AbsDerivative::Infinite => "inf".to_string(),
            };
            out.write_record([fmt17(s.x), fmt17(s.phi.re), fmt17(s.phi.im), d, s.singular.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Full-precision decimal: 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Complex64, b: Complex64, c: Complex64| {
        c.re >= a.re.min(b.re) && c.re <= a.re.max(b.re) && c.im >= a.im.min(b.im) && c.im <= a.im.max(b.im)
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub segments: usize,
    /// min over segments of Re∫₀¹G(γ(t))dt − cos(c′)·min|G| on the segment.
    pub min_margin: f64,
    /// min over segments of Re∫₀¹G.
    pub min_real_part: f64,
    pub failures: usize,
}

/// Re∫₀¹ G on random segments in [−2, 3] × (0, 2] against the floor cos(c′)·min|G|.
pub fn check_injectivity(
    map: &ConformalMap,
    n_segments: usize,
    seed: u64,
) -> Result<InjectivityReport, ConformalError> {
    if n_segments == 0 {
        return Err(ConformalError::Domain("need at least one segment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = || Complex64::new(rng.gen_range(-2.0..3.0), 2.0 - rng.gen_range(0.0..2.0));
    let segs: Vec<(Complex64, Complex64)> = (0..n_segments).map(|_| (pick(), pick())).collect();
    let cos_c = map.c_prime().cos();
    let rows: Vec<(f64, f64)> = segs
        .par_iter()
        .map(|&(z1, z2)| {
            let r = segment_margin(map, z1, z2, cos_c)?;
            Ok(r)
        })
        .collect::<Result<_, ConformalError>>()?;
    let min_margin = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let min_real_part = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(InjectivityReport {
        segments: n_segments,
        min_margin,
        min_real_part,
        failures: rows.iter().filter(|r| !(r.0 > 0.0)).count(),
    })
}

/// (Re∫₀¹G − cos c′·min|G|, Re∫₀¹G) for the segment z1 → z2.
pub fn segment_margin(
    map: &ConformalMap,
    z1: Complex64,
    z2: Complex64,
    cos_c: f64,
) -> Result<(f64, f64), ConformalError> {
    if z1 == z2 {
        return Err(ConformalError::Domain("degenerate segment".into()));
    }
    if !(z1.im > 0.0 && z2.im > 0.0) {
        return Err(ConformalError::Domain("segment endpoints must be interior".into()));
    }
    let d = z2 - z1;
    let mut min_g = f64::INFINITY;
    let f = |t: f64| -> Complex64 {
        let g = map.evaluator().log_g(z1 + d * t).exp();
        min_g = min_g.min(g.norm());
        g
    };
    let v = Integrator::new(1e-13, 1e-11)
        .with_max_intervals(4000)
        .integrate(f, 0.0, 1.0)?
        .value;
    Ok((v.re - cos_c * min_g, v.re))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub radii: Vec<f64>,
    /// min over the arc |z| = R of |Φ(z)|.
    pub min_abs_phi: Vec<f64>,
    /// Least-squares slope of log min|Φ| against log R.
    pub exponent: f64,
    /// min over R of min|Φ|·R^(c′/π − 1).
    pub normalized_floor: f64,
}

/// |Φ| on the arcs |z| = R at angles π(j + 1/2)/M.
pub fn growth_check(map: &ConformalMap, radii: &[f64], arc_samples: usize) -> Result<GrowthReport, ConformalError> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return Err(ConformalError::Domain(
            "radii must be positive and increasing, at least two".into(),
        ));
    }
    let m = arc_samples.max(1);
    let mut mins = Vec::with_capacity(radii.len());
    for &r in radii {
        let vals: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|j| {
                let a = PI * (j as f64 + 0.5) / m as f64;
                map.phi(Complex64::from_polar(r, a), None).map(|p| p.norm())
            })
            .collect::<Result<_, _>>()?;
        mins.push(vals.into_iter().fold(f64::INFINITY, f64::min));
    }
    let lx: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ly: Vec<f64> = mins.iter().map(|v| v.ln()).collect();
    let exponent = fit_slope(&lx, &ly);
    let e = map.c_prime() / PI - 1.0;
    let normalized_floor = radii
        .iter()
        .zip(&mins)
        .map(|(r, v)| v * r.powf(e))
        .fold(f64::INFINITY, f64::min);
    Ok(GrowthReport {
        radii: radii.to_vec(),
        min_abs_phi: mins,
        exponent,
        normalized_floor,
    })
}

/// Least-squares slope of y on x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::TangentProfile;

    fn wedge() -> ConformalMap {
        ConformalMap::new(HilbertEvaluator::new(TangentProfile::wedge(PI / 4.0).unwrap()))
    }

    #[test]
    fn base_point_and_flat_map() {
        let m = ConformalMap::new(HilbertEvaluator::new(TangentProfile::flat()));
        assert_eq!(m.phi(I, None).unwrap(), Complex64::new(0.0, 0.0));
        let z = Complex64::new(2.0, 0.5);
        assert!((m.phi(z, None).unwrap() - (z - I)).norm() < 1e-12);
        assert!((m.phi(Complex64::new(-1.0, 0.0), None).unwrap() - Complex64::new(-1.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn path_independence() {
        let m = wedge();
        let z = Complex64::new(1.0, 1.0);
        let a = m.phi(z, None).unwrap();
        let p = PathSpec::polyline(vec![I, Complex64::new(0.0, 2.0), Complex64::new(1.0, 2.0), z]).unwrap();
        let b = m.phi(z, Some(&p)).unwrap();
        assert!((a - b).norm() < 1e-8, "{a} {b}");
    }

    #[test]
    fn wedge_boundary_closed_form() {
        let m = wedge();
        let e = 0.75;
        let phi0 = m.phi(Complex64::new(0.0, 0.0), None).unwrap();
        for x in [0.1, 0.5, 2.0] {
            let got = m.phi(Complex64::new(x, 0.0), None).unwrap() - phi0;
            let want = Complex64::from_polar(x.powf(e) / e, PI / 4.0);
            assert!((got - want).norm() < 1e-8, "{x}: {got} {want}");
        }
    }

    #[test]
    fn path_validation() {
        assert!(PathSpec::polyline(vec![I]).is_err());
        assert!(PathSpec::polyline(vec![I, I]).is_err());
        assert!(PathSpec::polyline(vec![I, Complex64::new(0.0, -1.0)]).is_err());
        assert!(PathSpec::new(
            vec![I, Complex64::new(0.0, 0.0)],
            vec![SegmentRule::SingularEnd { p: 1.0 }]
        )
        .is_err());
    }

    #[test]
    fn crossing_segments() {
        let c = |a: f64, b: f64| Complex64::new(a, b);
        assert!(segments_cross(c(0.0, 0.0), c(1.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)));
        assert!(!segments_cross(c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)));
        assert!(segments_cross(c(0.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)));
    }
}
