//! Modified Heaviside step H̃, the monotone bridge g, and the tangent-angle profile
//! f(x) = c Σ aₖ H̃(x − xₖ).

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modulus::{ModulusError, ModulusKind};
use crate::Smoothed;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("bridge endpoints inconsistent: {0}")]
    Bridge(String),
    #[error("bridge is not monotone: g'({at:e}) = {slope:e}")]
    NotMonotone { at: f64, slope: f64 },
    #[error("invalid profile: {0}")]
    Invalid(String),
    #[error(transparent)]
    Modulus(#[from] ModulusError),
}

/// Monotone C¹ piecewise cubic on [x0, x*] with g(x0) = v0, g'(x0) = d0, g(x*) = 1, g'(x*) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    g_lip: f64,
}

fn hermite(xa: f64, xb: f64, ya: f64, yb: f64, da: f64, db: f64, x: f64) -> (f64, f64) {
    let h = xb - xa;
    let t = (x - xa) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * ya
        + (t3 - 2.0 * t2 + t) * h * da
        + (-2.0 * t3 + 3.0 * t2) * yb
        + (t3 - t2) * h * db;
    let d = (6.0 * t2 - 6.0 * t) / h * ya
        + (3.0 * t2 - 4.0 * t + 1.0) * da
        + (-6.0 * t2 + 6.0 * t) / h * yb
        + (3.0 * t2 - 2.0 * t) * db;
    (v, d)
}

impl BridgeSpline {
    /// Bridge for a smoothed modulus: v0 = θ̃(x0), d0 = θ̃′(x0).
    pub fn build(sm: &Smoothed) -> Result<Self, ProfileError> {
        let x0 = sm.x0();
        let v0 = sm.eval(x0)?;
        if v0 >= 0.5 {
            return Err(ProfileError::Bridge(format!("theta~(x0) = {v0} is not below 1/2")));
        }
        Self::from_endpoints(x0, sm.x_star(), v0, sm.derivative(x0)?)
    }

    pub fn from_endpoints(x0: f64, x_star: f64, v0: f64, d0: f64) -> Result<Self, ProfileError> {
        if !(x0 < x_star) || !(x0 > 0.0) {
            return Err(ProfileError::Bridge(format!(
                "need 0 < x0 < x_star, got {x0} and {x_star}"
            )));
        }
        if !(0.0..1.0).contains(&v0) || !(d0 >= 0.0) || !d0.is_finite() {
            return Err(ProfileError::Bridge(format!(
                "need 0 <= v0 < 1 and finite d0 >= 0, got v0 = {v0}, d0 = {d0}"
            )));
        }
        let len = x_star - x0;
        let secant = (1.0 - v0) / len;
        if secant * len < 1e-12 {
            return Err(ProfileError::Bridge("no room between v0 and 1".into()));
        }
        let (knots, values, slopes) = if d0 <= 3.0 * secant {
            (vec![x0, x_star], vec![v0, 1.0], vec![d0, 0.0])
        } else {
            // One midpoint split; the first piece gets a steeper secant so d0 fits under the
            // Fritsch–Carlson bound.
            let xm = x0 + 0.5 * len;
            let s1 = d0 / 2.5;
            let vm = v0 + s1 * (xm - x0);
            if vm >= 1.0 {
                return Err(ProfileError::Bridge(format!(
                    "d0 = {d0} too large for the gap: the secant bound needs v(xm) = {vm} < 1"
                )));
            }
            let s2 = (1.0 - vm) / (x_star - xm);
            let a = d0 / s1;
            let dm = s2.min(s1 * (9.0 - a * a).sqrt());
            (vec![x0, xm, x_star], vec![v0, vm, 1.0], vec![d0, dm, 0.0])
        };
        let mut b = Self {
            knots,
            values,
            slopes,
            g_lip: 0.0,
        };
        let n = 1000;
        for i in 0..=n {
            let x = x0 + len * i as f64 / n as f64;
            let d = b.deriv(x);
            if d < -1e-12 * (1.0 + d0) {
                return Err(ProfileError::NotMonotone { at: x, slope: d });
            }
        }
        // Each piece's derivative is a quadratic, so its extremum is at an end or the vertex.
        let mut lip = 0f64;
        for i in 0..b.knots.len() - 1 {
            let (xa, xb) = (b.knots[i], b.knots[i + 1]);
            lip = lip.max(b.slopes[i].abs()).max(b.slopes[i + 1].abs());
            let (c2, c1) = b.deriv_coefficients(i);
            if c2 != 0.0 {
                let tv = -c1 / (2.0 * c2);
                if tv > 0.0 && tv < 1.0 {
                    lip = lip.max(b.piece(i, xa + tv * (xb - xa)).1.abs());
                }
            }
        }
        b.g_lip = lip;
        Ok(b)
    }

    // Coefficients (of t², t) of g' on piece i, in the unit variable.
    fn deriv_coefficients(&self, i: usize) -> (f64, f64) {
        let h = self.knots[i + 1] - self.knots[i];
        let (ya, yb, da, db) = (self.values[i], self.values[i + 1], self.slopes[i], self.slopes[i + 1]);
        let c2 = 6.0 / h * ya + 3.0 * da - 6.0 / h * yb + 3.0 * db;
        let c1 = -6.0 / h * ya - 4.0 * da + 6.0 / h * yb - 2.0 * db;
        (c2, c1)
    }

    fn piece(&self, i: usize, x: f64) -> (f64, f64) {
        hermite(
            self.knots[i],
            self.knots[i + 1],
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            x,
        )
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.knots.len() - 1;
        (0..n).find(|&i| x <= self.knots[i + 1]).unwrap_or(n - 1)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.piece(self.locate(x), x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.piece(self.locate(x), x).1
    }

    pub fn x0(&self) -> f64 {
        self.knots[0]
    }

    pub fn x_star(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Knots including both endpoints; the cubic is smooth between consecutive knots.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn g_lip(&self) -> f64 {
        self.g_lip
    }
}

/// H̃: 0 on (−∞, 0], θ̃ on (0, x0], the bridge on (x0, x*), 1 on [x*, ∞).
#[derive(Debug, Clone)]
pub struct SmoothStep {
    sm: Smoothed,
    bridge: BridgeSpline,
    floor_value: f64,
}

impl SmoothStep {
    pub fn new(sm: Smoothed) -> Result<Self, ProfileError> {
        let bridge = BridgeSpline::build(&sm)?;
        Self::with_bridge(sm, bridge)
    }

    pub fn with_bridge(sm: Smoothed, bridge: BridgeSpline) -> Result<Self, ProfileError> {
        if (bridge.x0() - sm.x0()).abs() > 0.0 || (bridge.x_star() - sm.x_star()).abs() > 0.0 {
            return Err(ProfileError::Bridge(
                "bridge does not match the smoothed modulus scales".into(),
            ));
        }
        let floor_value = match &sm.base().kind {
            ModulusKind::Tabulated { r, .. } => sm.eval(r[0])?,
            _ => 0.0,
        };
        Ok(Self {
            sm,
            bridge,
            floor_value,
        })
    }

    pub fn smoothed(&self) -> &Smoothed {
        &self.sm
    }

    pub fn bridge(&self) -> &BridgeSpline {
        &self.bridge
    }

    pub fn x0(&self) -> f64 {
        self.sm.x0()
    }

    pub fn x_star(&self) -> f64 {
        self.sm.x_star()
    }

    fn theta_tilde(&self, x: f64) -> f64 {
        // Tables below their first radius are extended by the first smoothed value.
        self.sm.eval(x).unwrap_or(self.floor_value)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x <= self.x0() {
            self.theta_tilde(x)
        } else if x < self.x_star() {
            self.bridge.eval(x)
        } else {
            1.0
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.x_star() {
            0.0
        } else if x <= self.x0() {
            self.sm.derivative(x).unwrap_or(0.0)
        } else {
            self.bridge.deriv(x)
        }
    }

    /// sup over |x| <= r of |H̃(x) − H̃(0)|, which is θ̃(r) by monotonicity.
    pub fn modulus_at_origin(&self, r: f64) -> Result<f64, ProfileError> {
        if !(r > 0.0 && r <= self.x0()) {
            return Err(ProfileError::Invalid(format!(
                "modulus at origin needs 0 < r <= x0, got {r}"
            )));
        }
        Ok(self.sm.eval(r)?)
    }

    /// Points where H̃ is not analytic, in (0, x*]: x0, interior bridge knots, x*.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.bridge.knots().to_vec();
        if let ModulusKind::Tabulated { r, .. } = &self.sm.base().kind {
            for &ri in r {
                for s in [ri, ri / 2.0, ri / 4.0] {
                    if s > 0.0 && s < self.x0() {
                        b.push(s);
                    }
                }
            }
        }
        b.sort_by(|a, b| a.partial_cmp(b).unwrap());
        b.dedup();
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Plain Heaviside steps.
    Lipschitz,
    /// Modified steps H̃.
    C1,
}

/// A sequence of reals indexed from k = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    /// first · ratio^(k−1), k >= 1; infinite.
    Geometric {
        first: f64,
        ratio: f64,
    },
    Explicit(Vec<f64>),
}

impl Sequence {
    pub fn dyadic() -> Self {
        Sequence::Geometric { first: 0.5, ratio: 0.5 }
    }

    pub fn get(&self, k: usize) -> f64 {
        match self {
            Sequence::Geometric { first, ratio } => first * ratio.powi(k as i32 - 1),
            Sequence::Explicit(v) => v[k - 1],
        }
    }

    fn len(&self) -> Option<usize> {
        match self {
            Sequence::Geometric { .. } => None,
            Sequence::Explicit(v) => Some(v.len()),
        }
    }
}

/// f(x) = c Σ aₖ H(x − xₖ) with H the plain or modified step.
#[derive(Debug, Clone)]
pub struct TangentProfile {
    mode: Mode,
    c: f64,
    amplitudes: Sequence,
    jumps: Sequence,
    k: usize,
    tail_tol: f64,
    terms: Option<usize>,
    step: Option<Arc<SmoothStep>>,
}

pub const DEFAULT_K: usize = 20;
pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

impl TangentProfile {
    pub fn new(
        mode: Mode,
        c: f64,
        amplitudes: Sequence,
        jumps: Sequence,
        step: Option<SmoothStep>,
    ) -> Result<Self, ProfileError> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(ProfileError::Invalid(format!("c must be positive, got {c}")));
        }
        let terms = match (amplitudes.len(), jumps.len()) {
            (None, None) => None,
            (Some(n), None) | (None, Some(n)) => Some(n),
            (Some(n), Some(m)) if n == m => Some(n),
            (Some(n), Some(m)) => {
                return Err(ProfileError::Invalid(format!("{n} amplitudes but {m} jump locations")));
            }
        };
        for s in [&amplitudes, &jumps] {
            if let Sequence::Geometric { first, ratio } = s {
                if !(*ratio > 0.0 && *ratio < 1.0) || !first.is_finite() || *first == 0.0 {
                    return Err(ProfileError::Invalid(
                        "geometric sequences need a nonzero first term and ratio in (0, 1)".into(),
                    ));
                }
            }
        }
        if let Sequence::Geometric { first, .. } = amplitudes {
            if first <= 0.0 {
                return Err(ProfileError::Invalid("amplitudes must be positive".into()));
            }
        }
        if let Sequence::Explicit(a) = &amplitudes {
            if a.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(ProfileError::Invalid("amplitudes must be positive".into()));
            }
        }
        match &jumps {
            Sequence::Geometric { first, .. } if first.abs() > 1.0 => {
                return Err(ProfileError::Invalid("jump locations must satisfy |x_k| <= 1".into()));
            }
            Sequence::Explicit(x) => {
                if x.iter().any(|v| v.abs() > 1.0 || !v.is_finite()) {
                    return Err(ProfileError::Invalid("jump locations must satisfy |x_k| <= 1".into()));
                }
                let mut s = x.clone();
                s.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if s.windows(2).any(|w| w[0] == w[1]) {
                    return Err(ProfileError::Invalid("jump locations must be distinct".into()));
                }
            }
            _ => {}
        }
        if mode == Mode::C1 && step.is_none() {
            return Err(ProfileError::Invalid("C1 mode needs a smooth step".into()));
        }
        let p = Self {
            mode,
            c,
            amplitudes,
            jumps,
            k: DEFAULT_K,
            tail_tol: DEFAULT_TAIL_TOL,
            terms,
            step: if mode == Mode::C1 { step.map(Arc::new) } else { None },
        };
        if !(p.c_prime() < PI / 2.0) {
            return Err(ProfileError::Invalid(format!(
                "c' = {} must be below pi/2",
                p.c_prime()
            )));
        }
        Ok(p)
    }

    /// Default dyadic configuration aₖ = xₖ = 2⁻ᵏ with c scaled so that c′ = `c_prime`.
    pub fn dyadic(mode: Mode, c_prime: f64, step: Option<SmoothStep>) -> Result<Self, ProfileError> {
        Self::new(mode, 1.0, Sequence::dyadic(), Sequence::dyadic(), step).and_then(|p| p.with_c_prime(c_prime))
    }

    /// f = c·H(x): a single Heaviside step at the origin.
    pub fn wedge(c: f64) -> Result<Self, ProfileError> {
        Self::new(
            Mode::Lipschitz,
            c,
            Sequence::Explicit(vec![1.0]),
            Sequence::Explicit(vec![0.0]),
            None,
        )
    }

    /// f ≡ 0.
    pub fn flat() -> Self {
        Self::new(
            Mode::Lipschitz,
            1.0,
            Sequence::Explicit(vec![]),
            Sequence::Explicit(vec![]),
            None,
        )
        .expect("empty profile is valid")
    }

    pub fn with_c_prime(mut self, c_prime: f64) -> Result<Self, ProfileError> {
        if !(c_prime > 0.0 && c_prime < PI / 2.0) {
            return Err(ProfileError::Invalid(format!(
                "c' target must lie in (0, pi/2), got {c_prime}"
            )));
        }
        let s = self.amplitude_sum();
        if s == 0.0 {
            return Err(ProfileError::Invalid("cannot scale an empty profile".into()));
        }
        self.c = c_prime / s;
        Ok(self)
    }

    pub fn with_truncation(mut self, k: usize, tail_tol: f64) -> Result<Self, ProfileError> {
        if k == 0 || !(tail_tol > 0.0) {
            return Err(ProfileError::Invalid("truncation needs K >= 1 and tail_tol > 0".into()));
        }
        self.k = k;
        self.tail_tol = tail_tol;
        Ok(self)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }
    pub fn amplitudes(&self) -> &Sequence {
        &self.amplitudes
    }
    pub fn jumps(&self) -> &Sequence {
        &self.jumps
    }
    pub fn step(&self) -> Option<&SmoothStep> {
        self.step.as_deref()
    }
    pub fn step_arc(&self) -> Option<Arc<SmoothStep>> {
        self.step.clone()
    }
    /// Number of terms for finite lists, None for infinite sequences.
    pub fn term_count(&self) -> Option<usize> {
        self.terms
    }

    /// Width of the step support: x* for H̃, 0 for H.
    pub fn step_width(&self) -> f64 {
        self.step.as_ref().map_or(0.0, |s| s.x_star())
    }

    pub fn amplitude(&self, k: usize) -> f64 {
        self.amplitudes.get(k)
    }

    pub fn jump(&self, k: usize) -> f64 {
        self.jumps.get(k)
    }

    pub fn amplitude_sum(&self) -> f64 {
        match &self.amplitudes {
            Sequence::Geometric { first, ratio } => match self.terms {
                Some(n) => first * (1.0 - ratio.powi(n as i32)) / (1.0 - ratio),
                None => first / (1.0 - ratio),
            },
            Sequence::Explicit(v) => v.iter().sum(),
        }
    }

    pub fn c_prime(&self) -> f64 {
        self.c * self.amplitude_sum()
    }

    /// Σ_{j>k} a_j.
    pub fn tail(&self, k: usize) -> f64 {
        match (&self.amplitudes, self.terms) {
            (_, Some(n)) if k >= n => 0.0,
            (Sequence::Geometric { first, ratio }, None) => first * ratio.powi(k as i32) / (1.0 - ratio),
            (Sequence::Geometric { .. }, Some(n)) => (k + 1..=n).map(|j| self.amplitude(j)).sum(),
            (Sequence::Explicit(v), _) => v[k.min(v.len())..].iter().sum(),
        }
    }

    /// Terms used for f: all of a finite list, otherwise the first k >= K with c·tail <= tail_tol.
    pub fn value_terms(&self) -> usize {
        self.terms.unwrap_or_else(|| {
            let mut k = self.k;
            while self.c * self.tail(k) > self.tail_tol {
                k += 1;
            }
            k
        })
    }

    /// Terms used for Kf at x: the tail weighted by the logarithmic growth of KH near x.
    pub fn transform_terms(&self, x: f64) -> usize {
        self.terms.unwrap_or_else(|| {
            let w = x.abs().max(2f64.powi(-60)).ln().abs() + 1.0;
            let mut k = self.k;
            while self.c * self.tail(k) * w > self.tail_tol {
                k += 1;
            }
            k
        })
    }

    pub fn step_value(&self, x: f64) -> f64 {
        match &self.step {
            None => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Some(s) => s.eval(x),
        }
    }

    pub fn step_deriv(&self, x: f64) -> f64 {
        self.step.as_ref().map_or(0.0, |s| s.deriv(x))
    }

    /// f(x), accurate to tail_tol.
    pub fn eval(&self, x: f64) -> f64 {
        (1..=self.value_terms())
            .map(|k| self.amplitude(k) * self.step_value(x - self.jump(k)))
            .sum::<f64>()
            * self.c
    }

    /// f′(x) away from jumps (0 in Lipschitz mode).
    pub fn deriv(&self, x: f64) -> f64 {
        (1..=self.value_terms())
            .map(|k| self.amplitude(k) * self.step_deriv(x - self.jump(k)))
            .sum::<f64>()
            * self.c
    }

    /// δₖ: distance from xₖ to the other jump locations.
    pub fn delta(&self, k: usize) -> f64 {
        let xk = self.jump(k);
        match (&self.jumps, self.terms) {
            (Sequence::Geometric { .. }, None) => {
                let mut d = (xk - self.jump(k + 1)).abs();
                if k > 1 {
                    d = d.min((xk - self.jump(k - 1)).abs());
                }
                // Geometric ratios < 1/2 put the accumulation point closer than k + 1.
                d.min(xk.abs())
            }
            _ => {
                let n = self.terms.unwrap_or(0);
                (1..=n)
                    .filter(|&j| j != k)
                    .map(|j| (self.jump(j) - xk).abs())
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Whether the jump set accumulates at 0 (infinite sequences).
    pub fn accumulates_at_origin(&self) -> bool {
        self.terms.is_none()
    }

    /// Singular points of |G| on the real line resolved explicitly: xₖ for k up to K, and 0
    /// when the jumps accumulate there. Each comes with the local exponent of |G|.
    pub fn singular_points(&self) -> Vec<(f64, f64)> {
        let n = self.terms.map_or(self.k, |n| n);
        let mut pts: Vec<(f64, f64)> = (1..=n)
            .map(|k| (self.jump(k), self.c * self.amplitude(k) / PI))
            .collect();
        if self.accumulates_at_origin() {
            pts.push((0.0, self.c_prime() / PI));
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pts
    }

    /// Index k with xₖ == x among the evaluated terms, if any.
    pub fn jump_index(&self, x: f64, terms: usize) -> Option<usize> {
        (1..=terms).find(|&k| self.jump(k) == x)
    }

    /// Whether |G(x)| is infinite: x is a jump or the accumulation point.
    pub fn is_singular(&self, x: f64) -> bool {
        (x == 0.0 && self.accumulates_at_origin()) || self.jump_index(x, self.transform_terms(x)).is_some()
    }

    /// Extent of the non-constant part of f: [min xₖ, max xₖ + step width].
    pub fn support(&self) -> (f64, f64) {
        let n = self.terms.unwrap_or(1).max(1);
        let mut lo = if self.accumulates_at_origin() {
            0.0
        } else {
            f64::INFINITY
        };
        let mut hi = if self.accumulates_at_origin() {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        if self.terms == Some(0) {
            return (0.0, 0.0);
        }
        let count = if self.accumulates_at_origin() { 1 } else { n };
        for k in 1..=count {
            lo = lo.min(self.jump(k));
            hi = hi.max(self.jump(k));
        }
        if let Sequence::Geometric { first, .. } = self.jumps {
            lo = lo.min(first.min(0.0));
            hi = hi.max(first.max(0.0));
        }
        (lo, hi + self.step_width())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::ModulusSpec;

    #[test]
    fn bridge_sanity() {
        let b = BridgeSpline::from_endpoints(0.1, 0.5, 0.3, 0.0).unwrap();
        let g = b.eval(0.3);
        assert!(g > 0.3 && g < 1.0);
        assert!((b.eval(0.1) - 0.3).abs() < 1e-15 && (b.eval(0.5) - 1.0).abs() < 1e-15);
        assert!(b.deriv(0.5).abs() < 1e-12);
    }

    #[test]
    fn bridge_example_needs_split() {
        let e = std::f64::consts::E;
        let l = std::f64::consts::LN_2;
        let b = BridgeSpline::from_endpoints(1.0 / e, 0.5, l, e * l).unwrap();
        assert_eq!(b.knots().len(), 2);
        assert!((b.deriv(1.0 / e) - e * l).abs() < 1e-12 * e * l);
        assert!((b.eval(0.5) - 1.0).abs() < 1e-12);
        assert!(b.g_lip() >= e * l);
    }

    #[test]
    fn steep_start_splits_once() {
        let b = BridgeSpline::from_endpoints(0.1, 0.5, 0.3, 6.0).unwrap();
        assert_eq!(b.knots().len(), 3);
        assert!((b.deriv(0.1) - 6.0).abs() < 1e-12);
        for i in 0..=100 {
            assert!(b.deriv(0.1 + 0.004 * i as f64) >= -1e-12);
        }
    }

    #[test]
    fn bridge_degenerate_fails() {
        assert!(BridgeSpline::from_endpoints(0.1, 0.1, 0.3, 0.0).is_err());
        assert!(BridgeSpline::from_endpoints(0.1, 0.5, 1.0, 0.0).is_err());
        assert!(BridgeSpline::from_endpoints(0.1, 0.5, 0.9, 100.0).is_err());
    }

    #[test]
    fn smooth_step_values() {
        let sm = Smoothed::new(ModulusSpec::log_inverse(), 0.5).unwrap();
        let s = SmoothStep::new(sm.clone()).unwrap();
        assert_eq!(s.eval(-1.0), 0.0);
        assert_eq!(s.eval(s.x_star() + 1.0), 1.0);
        assert!((s.eval(s.x0()) - sm.eval(sm.x0()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_single_step() {
        let p = TangentProfile::wedge(1.0).unwrap();
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(-1.0), 0.0);
    }

    #[test]
    fn dyadic_c_prime() {
        let sm = Smoothed::new(ModulusSpec::log_inverse(), 0.5).unwrap();
        let p = TangentProfile::dyadic(Mode::C1, PI / 4.0, Some(SmoothStep::new(sm).unwrap())).unwrap();
        assert!((p.c_prime() - PI / 4.0).abs() < 1e-15);
        assert!((p.eval(3.0) - PI / 4.0).abs() <= p.tail_tol());
        assert_eq!(p.eval(-0.5), 0.0);
        assert!((p.delta(3) - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn rejects_large_c_prime() {
        assert!(TangentProfile::wedge(2.0).is_err());
    }
}
