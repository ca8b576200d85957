//! Walk-on-spheres estimate of harmonic measure in D, used as an independent oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{measure_ratio, MeasureError};
use crate::conformal::BoundaryTrace;

/// Walkers farther than this many domain diameters from the trace are treated as escaped.
const FAR_FACTOR: f64 = 1e4;
const LEAF: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MCConfig {
    pub n_walkers: usize,
    pub seed: u64,
    /// Absorption shell width.
    pub wos_epsilon: f64,
    pub max_steps: usize,
}

impl Default for MCConfig {
    fn default() -> Self {
        Self {
            n_walkers: 100_000,
            seed: 7,
            wos_epsilon: 1e-4,
            max_steps: 100_000,
        }
    }
}

/// Where a walker ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exit {
    /// Absorbed next to the traced part of ∂D, at boundary parameter x.
    Boundary(f64),
    LeftRay,
    RightRay,
    Escaped,
    Timeout,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    lo: Complex64,
    hi: Complex64,
    // Leaf: segment range; inner: children.
    start: usize,
    end: usize,
    left: usize,
    right: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Place {
    Segment(usize, f64),
    LeftRay,
    RightRay,
}

/// ∂D as the traced polyline closed off by its two exact tail rays.
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    verts: Vec<Complex64>,
    params: Vec<f64>,
    left_dir: Complex64,
    right_dir: Complex64,
    order: Vec<usize>,
    nodes: Vec<Node>,
    center: Complex64,
    diameter: f64,
}

impl BoundaryGeometry {
    pub fn new(trace: &BoundaryTrace) -> Result<Self, MeasureError> {
        let p = trace.map().evaluator().profile();
        let (x_lo, x_hi) = trace.x_range();
        let (s_lo, s_hi) = p.support();
        if s_lo < s_hi && !(x_lo < s_lo && x_hi > s_hi) {
            return Err(MeasureError::Precondition(format!(
                "trace [{x_lo}, {x_hi}] must cover the support [{s_lo}, {s_hi}] of f"
            )));
        }
        let mut verts = Vec::new();
        let mut params = Vec::new();
        for s in trace.samples() {
            if verts.last() != Some(&s.phi) {
                verts.push(s.phi);
                params.push(s.x);
            }
        }
        let left_dir = -Complex64::from_polar(1.0, p.eval(x_lo));
        let right_dir = Complex64::from_polar(1.0, p.eval(x_hi));
        let (mut lo, mut hi) = (verts[0], verts[0]);
        for v in &verts {
            lo = Complex64::new(lo.re.min(v.re), lo.im.min(v.im));
            hi = Complex64::new(hi.re.max(v.re), hi.im.max(v.im));
        }
        let mut g = Self {
            order: (0..verts.len() - 1).collect(),
            verts,
            params,
            left_dir,
            right_dir,
            nodes: Vec::new(),
            center: (lo + hi) * 0.5,
            diameter: (hi - lo).norm().max(1e-300),
        };
        let n = g.order.len();
        g.build(0, n);
        Ok(g)
    }

    fn seg_box(&self, i: usize) -> (Complex64, Complex64) {
        let (a, b) = (self.verts[i], self.verts[i + 1]);
        (
            Complex64::new(a.re.min(b.re), a.im.min(b.im)),
            Complex64::new(a.re.max(b.re), a.im.max(b.im)),
        )
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let (mut lo, mut hi) = self.seg_box(self.order[start]);
        for &i in &self.order[start..end] {
            let (l, h) = self.seg_box(i);
            lo = Complex64::new(lo.re.min(l.re), lo.im.min(l.im));
            hi = Complex64::new(hi.re.max(h.re), hi.im.max(h.im));
        }
        let idx = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            end,
            left: 0,
            right: 0,
        });
        if end - start > LEAF {
            let wide = hi.re - lo.re >= hi.im - lo.im;
            let key = |v: &BoundaryGeometry, i: usize| {
                let m = (v.verts[i] + v.verts[i + 1]) * 0.5;
                if wide {
                    m.re
                } else {
                    m.im
                }
            };
            let mut part = self.order[start..end].to_vec();
            part.sort_by(|&a, &b| key(self, a).partial_cmp(&key(self, b)).unwrap());
            self.order[start..end].copy_from_slice(&part);
            let mid = (start + end) / 2;
            let l = self.build(start, mid);
            let r = self.build(mid, end);
            self.nodes[idx].left = l;
            self.nodes[idx].right = r;
        }
        idx
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    fn nearest(&self, z: Complex64) -> (f64, Place) {
        let mut best = (f64::INFINITY, Place::LeftRay);
        for (v, d, place) in [
            (self.verts[0], self.left_dir, Place::LeftRay),
            (*self.verts.last().unwrap(), self.right_dir, Place::RightRay),
        ] {
            let t = ((z - v).re * d.re + (z - v).im * d.im).max(0.0);
            let dist = (z - (v + d * t)).norm();
            if dist < best.0 {
                best = (dist, place);
            }
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let n = self.nodes[ni];
            let dx = (n.lo.re - z.re).max(z.re - n.hi.re).max(0.0);
            let dy = (n.lo.im - z.im).max(z.im - n.hi.im).max(0.0);
            if dx.hypot(dy) >= best.0 {
                continue;
            }
            if n.end - n.start <= LEAF {
                for &i in &self.order[n.start..n.end] {
                    let (a, b) = (self.verts[i], self.verts[i + 1]);
                    let d = b - a;
                    let l2 = d.norm_sqr();
                    let t = if l2 > 0.0 {
                        (((z - a).re * d.re + (z - a).im * d.im) / l2).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let dist = (z - (a + d * t)).norm();
                    if dist < best.0 {
                        best = (dist, Place::Segment(i, t));
                    }
                }
            } else {
                stack.push(n.left);
                stack.push(n.right);
            }
        }
        best
    }

    /// Distance from z to ∂D.
    pub fn distance(&self, z: Complex64) -> f64 {
        self.nearest(z).0
    }

    /// Odd number of boundary crossings below z.
    pub fn is_interior(&self, z: Complex64) -> bool {
        let mut count = 0usize;
        for w in self.verts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.re <= z.re) != (b.re <= z.re) {
                let y = a.im + (b.im - a.im) * (z.re - a.re) / (b.re - a.re);
                if y < z.im {
                    count += 1;
                }
            }
        }
        for (v, d) in [
            (self.verts[0], self.left_dir),
            (*self.verts.last().unwrap(), self.right_dir),
        ] {
            if d.re != 0.0 {
                let s = (z.re - v.re) / d.re;
                if s > 0.0 && v.im + s * d.im < z.im {
                    count += 1;
                }
            }
        }
        count % 2 == 1
    }

    fn walk(&self, start: Complex64, mc: &MCConfig, walker: u64) -> Exit {
        let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
        rng.set_stream(walker);
        let far = FAR_FACTOR * self.diameter;
        let mut z = start;
        for _ in 0..mc.max_steps {
            let (d, place) = self.nearest(z);
            if d < mc.wos_epsilon {
                return match place {
                    Place::Segment(i, t) => Exit::Boundary(self.params[i] + t * (self.params[i + 1] - self.params[i])),
                    Place::LeftRay => Exit::LeftRay,
                    Place::RightRay => Exit::RightRay,
                };
            }
            if (z - self.center).norm() > far {
                return Exit::Escaped;
            }
            let a: f64 = rng.gen::<f64>() * 2.0 * PI;
            z += Complex64::from_polar(d, a);
        }
        Exit::Timeout
    }
}

/// Exit locations of `mc.n_walkers` walkers started at X. Walker i uses stream i of the
/// seeded generator, so results do not depend on scheduling.
pub fn wos_exits(geom: &BoundaryGeometry, x: Complex64, mc: &MCConfig) -> Result<Vec<Exit>, MeasureError> {
    if !(mc.wos_epsilon > 0.0) || mc.n_walkers == 0 || mc.max_steps == 0 {
        return Err(MeasureError::Precondition(
            "MC config needs walkers, steps and a positive shell".into(),
        ));
    }
    if !geom.is_interior(x) || geom.distance(x) <= mc.wos_epsilon {
        return Err(MeasureError::Precondition(format!(
            "start point {x} is not interior to the traced domain"
        )));
    }
    Ok((0..mc.n_walkers as u64)
        .into_par_iter()
        .map(|i| geom.walk(x, mc, i))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcFrequency {
    pub a: f64,
    pub b: f64,
    pub hits: usize,
    pub frequency: f64,
    /// Binomial standard error.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WosReport {
    pub walkers: usize,
    pub timeouts: usize,
    pub escapes: usize,
    pub arcs: Vec<ArcFrequency>,
}

impl WosReport {
    /// Walkers stopped by max_steps stay below 0.1%.
    pub fn timeouts_ok(&self) -> bool {
        (self.timeouts as f64) < 1e-3 * self.walkers as f64
    }
}

fn frequency(exits: &[Exit], a: f64, b: f64) -> ArcFrequency {
    let hits = exits
        .iter()
        .filter(|e| matches!(e, Exit::Boundary(x) if *x >= a && *x < b))
        .count();
    let n = exits.len() as f64;
    let f = hits as f64 / n;
    ArcFrequency {
        a,
        b,
        hits,
        frequency: f,
        sigma: (f * (1.0 - f) / n).sqrt(),
    }
}

/// Hit frequencies of the boundary arcs Φ([a, b]) for walkers started at X.
pub fn wos_harmonic_measure(
    trace: &BoundaryTrace,
    x: Complex64,
    arcs: &[(f64, f64)],
    mc: &MCConfig,
) -> Result<WosReport, MeasureError> {
    let (lo, hi) = trace.x_range();
    let mut sorted = arcs.to_vec();
    sorted.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    for (i, &(a, b)) in sorted.iter().enumerate() {
        if !(a < b && a >= lo && b <= hi) {
            return Err(MeasureError::Precondition(format!(
                "arc [{a}, {b}] outside the trace [{lo}, {hi}]"
            )));
        }
        if i > 0 && a < sorted[i - 1].1 {
            return Err(MeasureError::Precondition("arcs overlap".into()));
        }
    }
    let geom = BoundaryGeometry::new(trace)?;
    let exits = wos_exits(&geom, x, mc)?;
    Ok(WosReport {
        walkers: exits.len(),
        timeouts: exits.iter().filter(|e| **e == Exit::Timeout).count(),
        escapes: exits.iter().filter(|e| **e == Exit::Escaped).count(),
        arcs: arcs.iter().map(|&(a, b)| frequency(&exits, a, b)).collect(),
    })
}

/// Harmonic measure of [a, b] ⊂ ℝ seen from z0 in the upper half-plane; by conformal
/// invariance this is ω^{Φ(z0)}(Φ([a, b])).
pub fn pullback_probability(z0: Complex64, a: f64, b: f64) -> f64 {
    (((b - z0.re) / z0.im).atan() - ((a - z0.re) / z0.im).atan()) / PI
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub r: f64,
    pub omega_x: f64,
    pub sigma: f64,
    /// Preimage length, the measure with pole at infinity.
    pub omega_inf: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleComparison {
    pub rows: Vec<PoleRow>,
    pub dropped: Vec<(f64, String)>,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

/// ω^X(Δ_r)/ω^∞(Δ_r) at Φ(p_center) over r.
pub fn pole_comparison(
    trace: &BoundaryTrace,
    x: Complex64,
    p_center: f64,
    r_list: &[f64],
    mc: &MCConfig,
) -> Result<PoleComparison, MeasureError> {
    let c = trace.phi_at(p_center)?;
    for &r in r_list {
        if (x - c).norm() <= 2.0 * r {
            return Err(MeasureError::Precondition(format!(
                "pole {x} lies inside B(Φ(p), 2r) for r = {r}"
            )));
        }
    }
    let balls: Vec<_> = r_list
        .iter()
        .map(|&r| measure_ratio(trace, p_center, r))
        .collect::<Result<_, _>>()?;
    let geom = BoundaryGeometry::new(trace)?;
    let exits = wos_exits(&geom, x, mc)?;
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for m in balls {
        let f = frequency(&exits, m.a, m.b);
        if f.hits == 0 || f.sigma > 0.2 * f.frequency {
            dropped.push((
                m.r,
                format!("statistical error {:.3e} exceeds 20% of {:.3e}", f.sigma, f.frequency),
            ));
            continue;
        }
        rows.push(PoleRow {
            r: m.r,
            omega_x: f.frequency,
            sigma: f.sigma,
            omega_inf: m.omega,
            ratio: f.frequency / m.omega,
        });
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(PoleComparison {
        rows,
        dropped,
        max_ratio,
        min_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{trace_boundary, ConformalMap};
    use crate::hilbert::HilbertEvaluator;
    use crate::profile::TangentProfile;

    #[test]
    fn half_plane_quarter() {
        let map = ConformalMap::new(HilbertEvaluator::new(TangentProfile::flat()));
        let tr = trace_boundary(&map, -3.0, 3.0, 61).unwrap();
        let geom = BoundaryGeometry::new(&tr).unwrap();
        assert!(geom.is_interior(Complex64::new(0.0, 0.0)));
        assert!(!geom.is_interior(Complex64::new(0.0, -2.0)));
        assert!((geom.distance(Complex64::new(10.0, 0.0)) - 1.0).abs() < 1e-12);
        let mc = MCConfig {
            n_walkers: 4000,
            ..MCConfig::default()
        };
        let rep = wos_harmonic_measure(&tr, Complex64::new(0.0, 0.0), &[(0.0, 1.0)], &mc).unwrap();
        let f = rep.arcs[0];
        assert!((f.frequency - 0.25).abs() < 4.0 * f.sigma, "{f:?}");
        let again = wos_harmonic_measure(&tr, Complex64::new(0.0, 0.0), &[(0.0, 1.0)], &mc).unwrap();
        assert_eq!(rep, again);
        assert!((pullback_probability(Complex64::new(0.0, 1.0), 0.0, 1.0) - 0.25).abs() < 1e-15);
    }
}
