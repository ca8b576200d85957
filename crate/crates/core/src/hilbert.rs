//! Hilbert transform K of the tangent profiles.
//!
//! For a single modified step H̃ supported on [0, x*] the transform is evaluated through the
//! Cauchy integral C(z) = ∫₀^{x*} H̃(y)/(z − y) dy, using Gauss–Legendre panels that are
//! geometric toward the origin, dyadic refinement next to the target, and moment expansions
//! for everything far away. The same machinery gives the analytic extension into the upper
//! half-plane. An independent principal-value quadrature serves as the oracle.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::{Mode, SmoothStep, TangentProfile};
use crate::quadrature::{gl16, Integrator, QuadValue, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("x = {x:e} lies inside [{a:e}, {b:e}]: the integral diverges")]
    Divergent { x: f64, a: f64, b: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("principal value extrapolation did not converge at x = {x:e}: last two estimates {last:e}, {prev:e}")]
    Extrapolation { x: f64, last: f64, prev: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A value of K that may be the logarithmic singularity −∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KValue {
    Finite(f64),
    NegInfinity,
}

impl KValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            KValue::Finite(v) => Some(v),
            KValue::NegInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, KValue::Finite(_))
    }

    pub fn scale(self, s: f64) -> KValue {
        match self {
            KValue::Finite(v) => KValue::Finite(v * s),
            KValue::NegInfinity => KValue::NegInfinity,
        }
    }
}

/// ∫ₐᵇ dy/(x − y) = log|x − a| − log|x − b| for x outside [a, b].
pub fn pv_log_integral(a: f64, b: f64, x: f64) -> Result<f64, HilbertError> {
    if x >= a && x <= b {
        return Err(HilbertError::Divergent { x, a, b });
    }
    Ok((x - a).abs().ln() - (x - b).abs().ln())
}

/// K of the Heaviside step: (1/π) log|x|.
pub fn k_heaviside(x: f64) -> KValue {
    if x == 0.0 {
        KValue::NegInfinity
    } else {
        KValue::Finite(x.abs().ln() / PI)
    }
}

const LEVELS: usize = 200;
const MOMENTS: usize = 32;
const MAX_DEPTH: u32 = 64;

trait Target: Copy {
    type V: QuadValue<f64>;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn modulus(self) -> f64;
    fn kernel(self, y: f64) -> Self::V;
    /// ∫₀^y dt/(z − t).
    fn log_span(self, y: f64) -> Self::V;
    /// ∫₀^Y h(t)/(z − t) dt from scaled moments μₙ = ∫₀^Y h (t/Y)ⁿ dt.
    fn series(self, mu: &[f64], y: f64) -> Self::V;
    fn rescaled(self, m: f64) -> Self;
}

impl Target for f64 {
    type V = f64;
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    #[inline]
    fn kernel(self, y: f64) -> f64 {
        1.0 / (self - y)
    }
    fn log_span(self, y: f64) -> f64 {
        self.abs().ln() - (self - y).abs().ln()
    }
    fn series(self, mu: &[f64], y: f64) -> f64 {
        let q = y / self;
        mu.iter().rev().fold(0.0, |acc, m| acc * q + m) / self
    }
    fn rescaled(self, m: f64) -> Self {
        m.copysign(self)
    }
}

impl Target for Complex64 {
    type V = Complex64;
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn kernel(self, y: f64) -> Complex64 {
        (self - y).inv()
    }
    fn log_span(self, y: f64) -> Complex64 {
        self.ln() - (self - y).ln()
    }
    fn series(self, mu: &[f64], y: f64) -> Complex64 {
        let q = Complex64::new(y, 0.0) / self;
        mu.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, m| acc * q + m) / self
    }
    fn rescaled(self, m: f64) -> Self {
        self * (m / self.norm())
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    start: usize,
}

/// Cauchy-integral machinery for one modified step H̃.
#[derive(Debug, Clone)]
pub struct StepTransform {
    step: Arc<SmoothStep>,
    x0: f64,
    x_star: f64,
    panels: Vec<Panel>,
    // panels[..level_start[j]] lie above x0·2^-j.
    level_start: Vec<usize>,
    node_y: Vec<f64>,
    node_w: Vec<f64>,
    node_h: Vec<f64>,
    mu: Vec<[f64; MOMENTS]>,
    mu_top: [f64; MOMENTS],
}

impl StepTransform {
    pub fn new(step: Arc<SmoothStep>) -> Self {
        let x0 = step.x0();
        let x_star = step.x_star();
        let (gx, gw) = gl16();
        let mut panels = Vec::new();
        let mut node_y = Vec::new();
        let mut node_w = Vec::new();
        let mut node_h = Vec::new();
        let mut push = |a: f64, b: f64, panels: &mut Vec<Panel>| {
            let start = node_y.len();
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in gx.iter().zip(gw) {
                let y = mid + half * x;
                node_y.push(y);
                node_w.push(w * half);
                node_h.push(step.eval(y));
            }
            panels.push(Panel { a, b, start });
        };
        let breaks = step.breakpoints();
        // Bridge pieces, subdivided so no panel is much longer than x0.
        let mut bridge: Vec<(f64, f64)> = Vec::new();
        for w in step.bridge().knots().windows(2) {
            let n = ((w[1] - w[0]) / (2.0 * x0)).ceil().clamp(1.0, 8.0) as usize;
            for i in 0..n {
                let a = w[0] + (w[1] - w[0]) * i as f64 / n as f64;
                let b = if i + 1 == n {
                    w[1]
                } else {
                    w[0] + (w[1] - w[0]) * (i + 1) as f64 / n as f64
                };
                bridge.push((a, b));
            }
        }
        for &(a, b) in bridge.iter().rev() {
            push(a, b, &mut panels);
        }
        let mut level_start = Vec::with_capacity(LEVELS + 1);
        level_start.push(panels.len());
        for j in 0..LEVELS {
            let hi = x0 * 0.5f64.powi(j as i32);
            let lo = 0.5 * hi;
            let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&v| v > lo && v < hi).collect();
            cuts.push(lo);
            cuts.push(hi);
            cuts.sort_by(|a, b| b.partial_cmp(a).unwrap());
            cuts.dedup();
            for w in cuts.windows(2) {
                push(w[1], w[0], &mut panels);
            }
            level_start.push(panels.len());
        }
        // Moments, accumulated from the bottom level upward.
        let y_bottom = x0 * 0.5f64.powi(LEVELS as i32);
        let h_bottom = step.eval(y_bottom);
        let mut mu = vec![[0.0; MOMENTS]; LEVELS + 1];
        for (n, m) in mu[LEVELS].iter_mut().enumerate() {
            *m = h_bottom * y_bottom / (n as f64 + 1.0);
        }
        for j in (0..LEVELS).rev() {
            let y_j = x0 * 0.5f64.powi(j as i32);
            let mut m = [0.0; MOMENTS];
            for n in 0..MOMENTS {
                m[n] = mu[j + 1][n] * 0.5f64.powi(n as i32);
            }
            for p in &panels[level_start[j]..level_start[j + 1]] {
                for i in p.start..p.start + 16 {
                    let q = node_y[i] / y_j;
                    let mut pow = node_w[i] * node_h[i];
                    for mn in m.iter_mut() {
                        *mn += pow;
                        pow *= q;
                    }
                }
            }
            mu[j] = m;
        }
        let mut mu_top = [0.0; MOMENTS];
        let r = x0 / x_star;
        for n in 0..MOMENTS {
            mu_top[n] = mu[0][n] * r.powi(n as i32);
        }
        for p in &panels[..level_start[0]] {
            for i in p.start..p.start + 16 {
                let q = node_y[i] / x_star;
                let mut pow = node_w[i] * node_h[i];
                for mn in mu_top.iter_mut() {
                    *mn += pow;
                    pow *= q;
                }
            }
        }
        Self {
            step,
            x0,
            x_star,
            panels,
            level_start,
            node_y,
            node_w,
            node_h,
            mu,
            mu_top,
        }
    }

    pub fn step(&self) -> &SmoothStep {
        &self.step
    }

    fn y_level(&self, j: usize) -> f64 {
        self.x0 * 0.5f64.powi(j as i32)
    }

    // ∫₀^{x*} (h(y) − sub)/(z − y) dy. `removable` marks a real target in (0, x*] with
    // sub = h(x), where the integrand has only a removable singularity at y = x.
    fn integral<P: Target>(&self, z: P, sub: f64, removable: bool) -> P::V {
        let floor = 4.0 * self.y_level(LEVELS);
        let z = if z.modulus() < floor { z.rescaled(floor) } else { z };
        let m = z.modulus();
        if m >= 4.0 * self.x_star {
            return z.series(&self.mu_top, self.x_star) - z.log_span(self.x_star) * sub;
        }
        let j = if m >= 4.0 * self.x0 {
            0
        } else {
            ((4.0 * self.x0 / m).log2().ceil() as usize).clamp(1, LEVELS)
        };
        let y = self.y_level(j);
        let (mut acc, top) = (z.series(&self.mu[j], y) - z.log_span(y) * sub, self.level_start[j]);
        for p in &self.panels[..top] {
            if 2.0 * dist(z, p.a, p.b) >= p.b - p.a {
                let mut s = P::V::zero();
                for i in p.start..p.start + 16 {
                    s = s + z.kernel(self.node_y[i]) * (self.node_w[i] * (self.node_h[i] - sub));
                }
                acc = acc + s;
            } else {
                acc = acc + self.near(z, sub, removable, p.a, p.b, 0);
            }
        }
        acc
    }

    fn near<P: Target>(&self, z: P, sub: f64, removable: bool, a: f64, b: f64, depth: u32) -> P::V {
        let x = z.re();
        if x > a && x < b && depth < MAX_DEPTH {
            return self.near(z, sub, removable, a, x, depth + 1) + self.near(z, sub, removable, x, b, depth + 1);
        }
        let touching = x == a || x == b;
        if 2.0 * dist(z, a, b) >= b - a || depth >= MAX_DEPTH || (removable && touching) {
            return self.direct(z, sub, a, b);
        }
        let mid = 0.5 * (a + b);
        self.near(z, sub, removable, a, mid, depth + 1) + self.near(z, sub, removable, mid, b, depth + 1)
    }

    fn direct<P: Target>(&self, z: P, sub: f64, a: f64, b: f64) -> P::V {
        let (gx, gw) = gl16();
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = P::V::zero();
        for (x, w) in gx.iter().zip(gw) {
            let y = mid + half * x;
            let t = z.kernel(y) * (w * half * (self.step.eval(y) - sub));
            // A node landing exactly on a real target carries zero weight.
            if t.magnitude().is_finite() {
                s = s + t;
            }
        }
        s
    }

    fn anchor(&self, x: f64) -> f64 {
        self.step.eval(x.clamp(0.0, self.x_star))
    }

    /// π·KH̃(x).
    pub fn pi_k(&self, x: f64) -> KValue {
        if x == 0.0 {
            return KValue::NegInfinity;
        }
        let sub = self.anchor(x);
        let removable = x > 0.0 && x <= self.x_star;
        let i = self.integral(x, sub, removable);
        let mut v = i;
        if sub != 0.0 {
            v += sub * x.abs().ln();
        }
        if sub != 1.0 {
            v += (1.0 - sub) * (x - self.x_star).abs().ln();
        }
        KValue::Finite(v)
    }

    /// π·Ψ(z) = C(z) + Log(z − x*) for Im z > 0; its boundary values are π(KH̃ + i(1 − H̃)).
    pub fn pi_psi(&self, z: Complex64) -> Complex64 {
        let sub = self.anchor(z.re);
        let i = self.integral(z, sub, false);
        let lz = z.ln();
        let lzs = (z - self.x_star).ln();
        i + (lz - lzs) * sub + lzs
    }
}

fn dist<P: Target>(z: P, a: f64, b: f64) -> f64 {
    let x = z.re();
    let dx = if x < a {
        a - x
    } else if x > b {
        x - b
    } else {
        0.0
    };
    dx.hypot(z.im())
}

/// Value of Kf at a point together with its regular part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KProfile {
    pub value: KValue,
    /// Kf minus the contribution of the nearest jump (at a jump: the sum over the others).
    pub regular_part: f64,
    /// Number of terms summed.
    pub terms: usize,
}

/// Region of the real line relative to the modified step, for the two-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Left,
    Inner,
    AtX0,
    Bridge,
    AtXStar,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub region: Region,
    pub lower: f64,
    pub upper: f64,
}

/// Evaluates K for a tangent profile and its single step.
#[derive(Debug, Clone)]
pub struct HilbertEvaluator {
    profile: TangentProfile,
    transform: Option<Arc<StepTransform>>,
}

impl HilbertEvaluator {
    pub fn new(profile: TangentProfile) -> Self {
        let transform = profile.step_arc().map(|s| Arc::new(StepTransform::new(s)));
        Self { profile, transform }
    }

    pub fn profile(&self) -> &TangentProfile {
        &self.profile
    }

    pub fn transform(&self) -> Option<&StepTransform> {
        self.transform.as_deref()
    }

    /// K of the profile's step at x: (1/π) log|x| or KH̃(x).
    pub fn k_step(&self, x: f64) -> KValue {
        match &self.transform {
            None => k_heaviside(x),
            Some(t) => t.pi_k(x).scale(1.0 / PI),
        }
    }

    /// KH̃(x); fails in Lipschitz mode.
    pub fn k_htilde(&self, x: f64) -> Result<KValue, HilbertError> {
        match &self.transform {
            None => Err(HilbertError::Domain("K_Htilde needs a C1 profile".into())),
            Some(t) => Ok(t.pi_k(x).scale(1.0 / PI)),
        }
    }

    /// Kf(x) = c Σ aₖ K(x − xₖ), truncated adaptively in x.
    pub fn k_profile(&self, x: f64) -> KProfile {
        let p = &self.profile;
        let n = p.transform_terms(x);
        let mut total = 0.0;
        let mut singular = None;
        let mut nearest = (f64::INFINITY, 0.0);
        for k in 1..=n {
            let tau = x - p.jump(k);
            match self.k_step(tau) {
                KValue::NegInfinity => singular = Some(k),
                KValue::Finite(v) => {
                    let term = p.c() * p.amplitude(k) * v;
                    total += term;
                    if tau.abs() < nearest.0 {
                        nearest = (tau.abs(), term);
                    }
                }
            }
        }
        if singular.is_some() || (x == 0.0 && p.accumulates_at_origin()) {
            return KProfile {
                value: KValue::NegInfinity,
                regular_part: total,
                terms: n,
            };
        }
        KProfile {
            value: KValue::Finite(total),
            regular_part: total - nearest.1,
            terms: n,
        }
    }

    /// π·Ψ of one step at z (Im z > 0): Log z for H, C(z) + Log(z − x*) for H̃.
    pub fn pi_psi_step(&self, z: Complex64) -> Complex64 {
        match &self.transform {
            None => z.ln(),
            Some(t) => t.pi_psi(z),
        }
    }

    /// log G(z) = −W + iV = i c′ − c Σ aₖ Ψ(z − xₖ) for Im z > 0.
    pub fn log_g(&self, z: Complex64) -> Complex64 {
        let p = &self.profile;
        let n = p.transform_terms(z.norm());
        let mut s = Complex64::new(0.0, 0.0);
        for k in 1..=n {
            s += self.pi_psi_step(z - p.jump(k)) * p.amplitude(k);
        }
        Complex64::new(0.0, p.c_prime()) - s * (p.c() / PI)
    }

    fn c1(&self) -> Result<&StepTransform, HilbertError> {
        self.transform
            .as_deref()
            .ok_or_else(|| HilbertError::Domain("region bounds need a C1 profile".into()))
    }

    /// Bracket for π·KH̃(x) on 0 < x < x0 built from θ̃, its derivative and f(x0).
    pub fn decay_bounds(&self, x: f64) -> Result<(f64, f64), HilbertError> {
        let t = self.c1()?;
        let (x0, xs) = (t.x0, t.x_star);
        if !(x > 0.0 && x < x0) {
            return Err(HilbertError::Domain(format!("decay bounds need 0 < x < x0, got {x}")));
        }
        let sm = t.step().smoothed();
        let f = t.step().eval(x);
        let v0 = t.step().eval(x0);
        let sup_right = sm
            .sup_derivative(x, x0)
            .map_err(|e| HilbertError::Domain(e.to_string()))?;
        let sup_left = sm
            .sup_derivative(x / 2.0, x)
            .map_err(|e| HilbertError::Domain(e.to_string()))?;
        let lower = (1.0 - f) * (x0 - x).ln() + f * x.ln()
            - sup_right * (x0 - x)
            - sup_left * x / 2.0
            - v0 * std::f64::consts::LN_2;
        let upper = (1.0 - v0) * (xs - x).ln() + (v0 - f) * (x0 - x).ln() + f * x.ln();
        Ok((lower, upper))
    }

    /// The region bracket for π·KH̃(x), x ≠ 0, with the step scale x* in place of 1/2.
    pub fn region_bracket(&self, x: f64) -> Result<Bracket, HilbertError> {
        let t = self.c1()?;
        let (x0, xs) = (t.x0, t.x_star);
        let step = t.step();
        let v0 = step.eval(x0);
        let g_lip = step.bridge().g_lip();
        if x == 0.0 {
            return Err(HilbertError::Domain("no bracket at the origin".into()));
        }
        let b = if x < 0.0 {
            Bracket {
                region: Region::Left,
                lower: (1.0 - v0) * (x0 - x).ln() + v0 * (-x).ln(),
                upper: (xs - x).ln(),
            }
        } else if x < x0 {
            let (lower, upper) = self.decay_bounds(x)?;
            Bracket {
                region: Region::Inner,
                lower,
                upper,
            }
        } else if x == x0 {
            let sup = step
                .smoothed()
                .sup_derivative(x0 / 2.0, x0)
                .map_err(|e| HilbertError::Domain(e.to_string()))?;
            Bracket {
                region: Region::AtX0,
                lower: v0 * (x0 / 2.0).ln() + (1.0 - v0) * (xs - x0).ln() - g_lip * (xs - x0) - sup * x0 / 2.0,
                upper: v0 * x0.ln() + (1.0 - v0) * (xs - x0).ln(),
            }
        } else if x < xs {
            let f = step.eval(x);
            Bracket {
                region: Region::Bridge,
                lower: f * (x - x0).ln() + (1.0 - f) * (xs - x).ln() - g_lip * (xs - x0),
                upper: (f - v0) * (x - x0).ln() + v0 * x.ln() + (1.0 - f) * (xs - x).ln(),
            }
        } else if x == xs {
            Bracket {
                region: Region::AtXStar,
                lower: x0.ln(),
                upper: (1.0 - v0) * xs.ln() + v0 * x0.ln(),
            }
        } else {
            Bracket {
                region: Region::Right,
                lower: (x - xs).ln(),
                upper: x.ln(),
            }
        };
        Ok(b)
    }
}

/// Settings of the principal-value oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleSettings {
    pub levels: usize,
    pub tolerance: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            levels: 10,
            tolerance: 1e-7,
        }
    }
}

/// Result of the principal-value oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleValue {
    /// Kf(x).
    pub value: f64,
    /// |difference of the last two extrapolated estimates| / π.
    pub error: f64,
    /// Raw excised values π·I(εⱼ) for diagnostics.
    pub excised: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Kf(x) by direct quadrature of the defining principal value:
/// (1/π) lim_ε [∫_{|x−y|≥ε} f(y)/(x−y) dy + ∫_{|y|>1} f(y)/y dy], with symmetric excision at
/// εⱼ = 2⁻ʲ·dist(x, jumps) and two-point Richardson extrapolation in ε.
pub fn pv_quadrature_oracle(p: &TangentProfile, x: f64, settings: OracleSettings) -> Result<OracleValue, HilbertError> {
    let n = p.value_terms();
    let mut jumps: Vec<f64> = (1..=n).map(|k| p.jump(k)).collect();
    if p.accumulates_at_origin() {
        jumps.push(0.0);
    }
    let d = jumps.iter().map(|j| (x - j).abs()).fold(1.0f64, f64::min);
    if d == 0.0 {
        return Err(HilbertError::Domain(format!("oracle point {x} is a jump location")));
    }
    let eps: Vec<f64> = (0..=settings.levels).map(|j| d * 0.5f64.powi(j as i32)).collect();
    oracle_with_eps(p, x, &eps, settings.tolerance)
}

/// As [`pv_quadrature_oracle`] with an explicit decreasing ε sequence.
pub fn oracle_with_eps(p: &TangentProfile, x: f64, eps: &[f64], tolerance: f64) -> Result<OracleValue, HilbertError> {
    if eps.len() < 3 || eps.windows(2).any(|w| !(w[1] < w[0])) || !(eps[eps.len() - 1] > 0.0) {
        return Err(HilbertError::Domain(
            "eps sequence must be positive, decreasing, length >= 3".into(),
        ));
    }
    let q = Integrator::new(1e-13, 1e-12).with_max_intervals(20000);
    let n = p.value_terms();
    let (lo, hi) = p.support();
    let c_prime = p.c_prime();
    let big_y = 2.0 + hi.max(1.0).max(x.abs() + 1.0);
    let lo = lo.min(x - eps[0]) - 1.0;
    // Breakpoints: every place where f or f′ is not smooth.
    let mut pts = vec![lo, -1.0, 0.0, 1.0, big_y];
    for k in 1..=n {
        let xk = p.jump(k);
        pts.push(xk);
        if let Some(s) = p.step() {
            for b in s.breakpoints() {
                pts.push(xk + b);
            }
        }
    }
    let d = eps[0];
    let f = |y: f64| p.eval(y);
    // Outer part: [lo, x − d] and [x + d, Y].
    let split = |a: f64, b: f64| -> Vec<f64> {
        let mut v: Vec<f64> = pts.iter().copied().filter(|&t| t > a && t < b).collect();
        v.push(a);
        v.push(b);
        v.sort_by(|u, w| u.partial_cmp(w).unwrap());
        v.dedup();
        v
    };
    let mut outer = 0.0;
    if x - d > lo {
        outer += q.integrate_points(|y| f(y) / (x - y), &split(lo, x - d))?.value;
    }
    outer += q.integrate_points(|y| f(y) / (x - y), &split(x + d, big_y))?.value;
    // Compensator ∫_{1<|y|<Y} f/y (f vanishes below −1) and the exact tail beyond Y.
    let comp = q.integrate_points(|y| f(y) / y, &split(1.0, big_y))?.value;
    let tail = c_prime * ((big_y - x) / big_y).ln();
    let base = outer + comp + tail;
    // Symmetric annuli ε_{j+1} <= |x − y| <= ε_j.
    let mut excised = vec![base];
    let mut acc = base;
    for w in eps.windows(2) {
        let (e1, e0) = (w[1], w[0]);
        let ann = q.integrate(|s| (f(x - s) - f(x + s)) / s, e1, e0)?.value;
        acc += ann;
        excised.push(acc);
    }
    let mut eps = eps.to_vec();
    let mut rich: Vec<f64> = excised
        .windows(2)
        .zip(eps.windows(2))
        .map(|(v, e)| richardson(v[0], v[1], e[0] / e[1]))
        .collect();
    // Points where f′ has a kink leave an O(ε²) remainder; keep halving while it is visible.
    let mut extra = 0;
    while (rich[rich.len() - 1] - rich[rich.len() - 2]).abs() > tolerance * PI && extra < 30 {
        let e0 = eps[eps.len() - 1];
        let e1 = 0.5 * e0;
        acc += q.integrate(|s| (f(x - s) - f(x + s)) / s, e1, e0)?.value;
        excised.push(acc);
        eps.push(e1);
        let m = excised.len();
        rich.push(richardson(excised[m - 2], excised[m - 1], 2.0));
        extra += 1;
    }
    let last = rich[rich.len() - 1];
    let prev = rich[rich.len() - 2];
    if (last - prev).abs() > tolerance * PI {
        return Err(HilbertError::Extrapolation { x, last, prev });
    }
    Ok(OracleValue {
        value: last / PI,
        error: (last - prev).abs() / PI,
        excised,
        eps,
    })
}

fn richardson(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (ratio * fine - coarse) / (ratio - 1.0)
}

impl HilbertEvaluator {
    /// Whether the profile uses modified steps.
    pub fn is_c1(&self) -> bool {
        self.profile.mode() == Mode::C1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::ModulusSpec;
    use crate::profile::Sequence;
    use crate::Smoothed;

    fn htilde_profile() -> TangentProfile {
        let sm = Smoothed::new(ModulusSpec::log_inverse(), 0.5).unwrap();
        TangentProfile::new(
            Mode::C1,
            1.0,
            Sequence::Explicit(vec![1.0]),
            Sequence::Explicit(vec![0.0]),
            Some(SmoothStep::new(sm).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn log_integral_examples() {
        assert!((pv_log_integral(0.0, 1.0, 2.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((pv_log_integral(0.0, 1.0, -1.0).unwrap() + 2f64.ln()).abs() < 1e-15);
        assert!(pv_log_integral(0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn heaviside_examples() {
        assert_eq!(k_heaviside(1.0), KValue::Finite(0.0));
        assert!((k_heaviside(2.0).finite().unwrap() - 0.22064).abs() < 1e-5);
        assert_eq!(k_heaviside(0.0), KValue::NegInfinity);
    }

    #[test]
    fn oracle_reproduces_heaviside() {
        let p = TangentProfile::wedge(1.0).unwrap();
        let o = pv_quadrature_oracle(&p, 2.0, OracleSettings::default()).unwrap();
        assert!((o.value - 2f64.ln() / PI).abs() < 1e-9, "{}", o.value);
        let o = pv_quadrature_oracle(&p, -0.3, OracleSettings::default()).unwrap();
        assert!((o.value - 0.3f64.ln() / PI).abs() < 1e-9, "{}", o.value);
    }

    #[test]
    fn htilde_matches_oracle() {
        let p = htilde_profile();
        let ev = HilbertEvaluator::new(p.clone());
        for &x in &[-0.3, -0.01, 0.003, 0.0156, 0.05, 0.1, 0.3, 2.0, 10.0] {
            let k = ev.k_htilde(x).unwrap().finite().unwrap();
            let o = pv_quadrature_oracle(&p, x, OracleSettings::default()).unwrap();
            assert!((k - o.value).abs() < 1e-7, "x = {x}: {k} vs {}", o.value);
        }
    }

    #[test]
    fn cauchy_boundary_limit() {
        let p = htilde_profile();
        let ev = HilbertEvaluator::new(p.clone());
        let t = ev.transform().unwrap();
        for &x in &[-0.2, 0.004, 0.05, 0.2, 0.7] {
            let z = Complex64::new(x, 1e-9);
            let psi = t.pi_psi(z);
            let k = t.pi_k(x).finite().unwrap();
            assert!((psi.re - k).abs() < 1e-6, "x = {x}: {} vs {k}", psi.re);
            assert!((psi.im - PI * (1.0 - t.step().eval(x))).abs() < 1e-6);
        }
    }
}
