//! Moduli of continuity θ, their double logarithmic average θ̃, and the scale selection
//! (x*, x0) that the tangent profile is built on.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{gl16, Integrator, QuadratureError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModulusError {
    #[error("r = {r:e} outside the validity domain ({lo:e}, {hi:e}]")]
    Domain { r: f64, lo: f64, hi: f64 },
    #[error("invalid modulus: {0}")]
    Invalid(String),
    #[error("no dyadic x0 >= 2^-40 satisfies the selection constraints (theta decays too slowly)")]
    NoDyadicX0,
    #[error("smoothed modulus is already >= 1 at the smallest admissible radius {r:e}")]
    NoCrossing { r: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Kind of modulus θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind<T> {
    /// θ(r) = 1 / log2(1/r), valid for r < 1.
    LogInverse,
    /// θ(r) = r^γ.
    Power { gamma: T },
    /// θ(r) = c.
    Constant { value: T },
    /// Piecewise-linear interpolation of (r, θ) samples; no extrapolation.
    Tabulated { r: Vec<T>, theta: Vec<T> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiniClass {
    Dini,
    NonDini,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusSpec<T> {
    pub kind: ModulusKind<T>,
    pub r_max: T,
}

impl<T: Real> ModulusSpec<T> {
    pub fn log_inverse() -> Self {
        Self {
            kind: ModulusKind::LogInverse,
            r_max: T::one(),
        }
    }

    pub fn power(gamma: T) -> Result<Self, ModulusError> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(ModulusError::Invalid(format!(
                "power exponent must be positive, got {gamma:?}"
            )));
        }
        Ok(Self {
            kind: ModulusKind::Power { gamma },
            r_max: T::infinity(),
        })
    }

    pub fn constant(value: T) -> Result<Self, ModulusError> {
        if !(value > T::zero()) || !value.is_finite() {
            return Err(ModulusError::Invalid(format!(
                "constant modulus must be positive, got {value:?}"
            )));
        }
        Ok(Self {
            kind: ModulusKind::Constant { value },
            r_max: T::infinity(),
        })
    }

    pub fn tabulated(r: Vec<T>, theta: Vec<T>) -> Result<Self, ModulusError> {
        if r.len() < 2 || r.len() != theta.len() {
            return Err(ModulusError::Invalid(
                "tabulated modulus needs >= 2 matching (r, theta) pairs".into(),
            ));
        }
        if !(r[0] > T::zero()) {
            return Err(ModulusError::Invalid("tabulated radii must be positive".into()));
        }
        for w in r.windows(2) {
            if !(w[1] > w[0]) {
                return Err(ModulusError::Invalid(
                    "tabulated radii must be strictly increasing".into(),
                ));
            }
        }
        for w in theta.windows(2) {
            if w[1] < w[0] {
                return Err(ModulusError::Invalid("tabulated theta must be non-decreasing".into()));
            }
        }
        if theta.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(ModulusError::Invalid(
                "tabulated theta must be finite and non-negative".into(),
            ));
        }
        let r_max = *r.last().unwrap();
        Ok(Self {
            kind: ModulusKind::Tabulated { r, theta },
            r_max,
        })
    }

    /// Re-checks the invariants of a spec built by hand or deserialized.
    pub fn validated(self) -> Result<Self, ModulusError> {
        match self.kind {
            ModulusKind::LogInverse => Ok(Self::log_inverse()),
            ModulusKind::Power { gamma } => Self::power(gamma),
            ModulusKind::Constant { value } => Self::constant(value),
            ModulusKind::Tabulated { r, theta } => Self::tabulated(r, theta),
        }
    }

    /// Smallest r at which θ is defined (0 for the builtins).
    pub fn r_min(&self) -> T {
        match &self.kind {
            ModulusKind::Tabulated { r, .. } => r[0],
            _ => T::zero(),
        }
    }

    /// θ(r).
    pub fn eval(&self, r: T) -> Result<T, ModulusError> {
        let lo = self.r_min();
        let in_domain = match &self.kind {
            ModulusKind::LogInverse => r > T::zero() && r < T::one(),
            ModulusKind::Tabulated { .. } => r >= lo && r <= self.r_max,
            _ => r > T::zero() && r <= self.r_max,
        };
        if !in_domain {
            return Err(ModulusError::Domain {
                r: r.to_f64().unwrap_or(f64::NAN),
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: self.r_max.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(match &self.kind {
            ModulusKind::LogInverse => T::LN_2() / -r.ln(),
            ModulusKind::Power { gamma } => r.powf(*gamma),
            ModulusKind::Constant { value } => *value,
            ModulusKind::Tabulated { r: rs, theta } => interpolate(rs, theta, r),
        })
    }

    /// Dini classification. Builtins are decided analytically; tables by dyadic partial sums.
    pub fn classify_dini(&self, tol: T) -> DiniClass {
        match &self.kind {
            ModulusKind::LogInverse | ModulusKind::Constant { .. } => DiniClass::NonDini,
            ModulusKind::Power { .. } => DiniClass::Dini,
            ModulusKind::Tabulated { r, theta } => {
                // ∫ θ(r)/r dr over a dyadic shell [2^-i-1, 2^-i] is about θ(2^-i) log 2.
                let i_lo = (-r.last().unwrap().log2()).ceil().to_i32().unwrap_or(0);
                let i_hi = (-r[0].log2()).floor().to_i32().unwrap_or(0);
                if i_hi - i_lo < 4 {
                    return DiniClass::Inconclusive;
                }
                let terms: Vec<T> = (i_lo..=i_hi)
                    .map(|i| interpolate(r, theta, T::lit(2f64.powi(-i))))
                    .collect();
                let sum: T = terms.iter().fold(T::zero(), |a, b| a + *b);
                let last = terms[terms.len() - 1];
                if sum > T::lit(1e3) {
                    return DiniClass::NonDini;
                }
                // A geometric tail bound on the remaining shells.
                let prev = terms[terms.len() - 2];
                if prev > T::zero() && last < prev {
                    let q = last / prev;
                    if q < T::lit(0.95) && last * q / (T::one() - q) <= tol {
                        return DiniClass::Dini;
                    }
                }
                if last == T::zero() {
                    return DiniClass::Dini;
                }
                DiniClass::Inconclusive
            }
        }
    }
}

fn interpolate<T: Real>(rs: &[T], theta: &[T], r: T) -> T {
    let i = match rs.iter().position(|v| *v >= r) {
        Some(0) => return theta[0],
        Some(i) => i,
        None => return *theta.last().unwrap(),
    };
    let t = (r - rs[i - 1]) / (rs[i] - rs[i - 1]);
    theta[i - 1] + t * (theta[i] - theta[i - 1])
}

/// θ̃ together with the selected scales x* and x0.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedModulus<T> {
    base: ModulusSpec<T>,
    quad_tol: T,
    x_star: T,
    x0: T,
    beta: T,
}

impl<T: Real> SmoothedModulus<T> {
    pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

    pub fn new(base: ModulusSpec<T>, beta: T) -> Result<Self, ModulusError> {
        Self::with_tolerance(base, beta, T::lit(Self::DEFAULT_QUAD_TOL))
    }

    pub fn with_tolerance(base: ModulusSpec<T>, beta: T, quad_tol: T) -> Result<Self, ModulusError> {
        if !(beta > T::zero() && beta < T::one()) {
            return Err(ModulusError::Invalid(format!("beta must lie in (0, 1), got {beta:?}")));
        }
        if !(quad_tol > T::zero()) {
            return Err(ModulusError::Invalid("quad_tol must be positive".into()));
        }
        let mut sm = Self {
            base,
            quad_tol,
            x_star: T::zero(),
            x0: T::zero(),
            beta,
        };
        let (x0, x_star) = sm.select_x0(beta)?;
        sm.x0 = x0;
        sm.x_star = x_star;
        Ok(sm)
    }

    pub fn base(&self) -> &ModulusSpec<T> {
        &self.base
    }
    pub fn x_star(&self) -> T {
        self.x_star
    }
    pub fn x0(&self) -> T {
        self.x0
    }
    pub fn beta(&self) -> T {
        self.beta
    }
    pub fn quad_tol(&self) -> T {
        self.quad_tol
    }

    /// Largest r at which θ̃ is defined: θ is needed on [r, 4r].
    pub fn r_limit(&self) -> T {
        self.base.r_max / T::lit(4.0)
    }

    fn check(&self, r: T) -> Result<(), ModulusError> {
        let lo = self.base.r_min();
        let hi = self.r_limit();
        let ok = match self.base.kind {
            ModulusKind::Tabulated { .. } => r >= lo && r <= hi,
            ModulusKind::LogInverse => r > T::zero() && r < hi,
            _ => r > T::zero() && r <= hi,
        };
        if ok {
            Ok(())
        } else {
            Err(ModulusError::Domain {
                r: r.to_f64().unwrap_or(f64::NAN),
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: hi.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// θ̃(r) = (1/log²2) ∫_r^{2r} (1/t) ∫_t^{2t} θ(s)/s ds dt.
    ///
    /// In logarithmic variables this is a triangle-weighted average of θ over [r, 4r], which
    /// has closed forms for the builtin kinds and is piecewise smooth for tables.
    pub fn eval(&self, r: T) -> Result<T, ModulusError> {
        self.check(r)?;
        let l = T::LN_2();
        Ok(match &self.base.kind {
            ModulusKind::Constant { value } => *value,
            ModulusKind::Power { gamma } => {
                let g = *gamma;
                let k = (T::lit(2.0).powf(g) - T::one()) / (g * l);
                r.powf(g) * k * k
            }
            ModulusKind::LogInverse => {
                let b = -r.ln();
                let far = b - T::lit(2.0) * l;
                let s = -b * (-l / b).ln_1p()
                    + if far > T::zero() {
                        far * (-l / (b - l)).ln_1p()
                    } else {
                        T::zero()
                    };
                s / l
            }
            ModulusKind::Tabulated { .. } => self.tabulated_kernel(r, false),
        })
    }

    /// dθ̃/dr = (1/(r log²2)) [∫_{2r}^{4r} θ(s)/s ds − ∫_r^{2r} θ(s)/s ds].
    pub fn derivative(&self, r: T) -> Result<T, ModulusError> {
        self.check(r)?;
        let l = T::LN_2();
        Ok(match &self.base.kind {
            ModulusKind::Constant { .. } => T::zero(),
            ModulusKind::Power { gamma } => *gamma * self.eval(r)? / r,
            ModulusKind::LogInverse => {
                let b = -r.ln();
                ((-l / b).ln_1p() - (-l / (b - l)).ln_1p()) / (l * r)
            }
            ModulusKind::Tabulated { .. } => self.tabulated_kernel(r, true),
        })
    }

    /// Reference route: nested adaptive quadrature of the defining double integral.
    pub fn eval_nested(&self, r: T) -> Result<T, ModulusError> {
        self.check(r)?;
        let q = Integrator::new(self.quad_tol * T::lit(0.01), T::lit(1e-13));
        let base = &self.base;
        let breaks = self.table_breaks();
        let mut failure = None;
        let outer = q.integrate(
            |t: T| {
                let mut pts = vec![t];
                pts.extend(breaks.iter().copied().filter(|b| *b > t && *b < t + t));
                pts.push(t + t);
                match q.integrate_points(|s: T| base.eval(s).map(|v| v / s).unwrap_or(T::nan()), &pts) {
                    Ok(e) => e.value / t,
                    Err(e) => {
                        failure.get_or_insert(e);
                        T::zero()
                    }
                }
            },
            r,
            r + r,
        );
        if let Some(e) = failure {
            return Err(e.into());
        }
        let l = T::LN_2();
        Ok(outer?.value / (l * l))
    }

    fn table_breaks(&self) -> Vec<T> {
        match &self.base.kind {
            ModulusKind::Tabulated { r, .. } => r.clone(),
            _ => Vec::new(),
        }
    }

    // Gauss–Legendre on each smooth piece of the log-variable kernel form.
    fn tabulated_kernel(&self, r: T, derivative: bool) -> T {
        let l = T::LN_2();
        let two_l = l + l;
        let mut cuts = vec![T::zero(), l, two_l];
        for rb in self.table_breaks() {
            let w = (rb / r).ln();
            if w > T::zero() && w < two_l {
                cuts.push(w);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let (xs, ws) = gl16();
        let mut acc = T::zero();
        for c in cuts.windows(2) {
            let (a, b) = (c[0], c[1]);
            let half = (b - a) * T::lit(0.5);
            let mid = (a + b) * T::lit(0.5);
            for (x, w) in xs.iter().zip(ws) {
                let wv = mid + half * T::lit(*x);
                let s = (r * wv.exp()).min(self.base.r_max);
                let th = self.base.eval(s).unwrap_or(T::zero());
                let weight = if derivative {
                    if wv < l {
                        -T::one()
                    } else {
                        T::one()
                    }
                } else {
                    wv.min(two_l - wv)
                };
                acc = acc + T::lit(*w) * half * th * weight;
            }
        }
        if derivative {
            acc / (l * l * r)
        } else {
            acc / (l * l)
        }
    }

    /// Largest value of θ̃′ on [a, b], estimated on a log-spaced grid including the endpoints.
    pub fn sup_derivative(&self, a: T, b: T) -> Result<T, ModulusError> {
        let n = 64;
        let (la, lb) = (a.ln(), b.ln());
        let mut best = T::zero();
        for i in 0..=n {
            let t = T::lit(i as f64 / n as f64);
            let r = (la + (lb - la) * t).exp().max(a).min(b);
            best = best.max(self.derivative(r)?);
        }
        Ok(best)
    }

    /// Returns (x0, x_star). x_star solves θ̃ = 1 by bisection (capped at 1/2 and by the domain of
    /// θ̃); x0 is the largest dyadic 2^-m below x_star/4 with θ̃(x0) < 1/2 and
    /// θ(8 x0) <= (1 − β) log 2.
    pub fn select_x0(&self, beta: T) -> Result<(T, T), ModulusError> {
        let x_star = self.find_x_star()?;
        let limit = T::lit(2f64.powi(-40));
        let quarter = x_star / T::lit(4.0);
        let mut m = 0i32;
        while T::lit(2f64.powi(-m)) >= quarter {
            m += 1;
        }
        let bound = (T::one() - beta) * T::LN_2();
        loop {
            let x0 = T::lit(2f64.powi(-m));
            if x0 < limit {
                return Err(ModulusError::NoDyadicX0);
            }
            if self.check(x0).is_err() {
                return Err(ModulusError::NoDyadicX0);
            }
            let smooth_ok = self.eval(x0)? < T::lit(0.5);
            let theta_ok = self.base.eval(x0 * T::lit(8.0))? <= bound;
            if smooth_ok && theta_ok {
                return Ok((x0, x_star));
            }
            m += 1;
        }
    }

    fn find_x_star(&self) -> Result<T, ModulusError> {
        let half = T::lit(0.5);
        let mut hi = half.min(self.r_limit());
        if matches!(self.base.kind, ModulusKind::LogInverse) {
            // θ̃ is finite at r = 1/4 but its derivative is not; stay strictly inside.
            hi = hi * (T::one() - T::epsilon() * T::lit(16.0));
        }
        if self.eval(hi)? < T::one() {
            return Ok(hi);
        }
        let r_min = self.base.r_min();
        let mut lo = hi * half;
        let mut guard = 0;
        while self.eval(lo)? >= T::one() {
            lo = lo * half;
            guard += 1;
            if lo < r_min || guard > 200 {
                return Err(ModulusError::NoCrossing {
                    r: r_min.max(lo).to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        for _ in 0..200 {
            let mid = (lo + hi) * half;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid)? < T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}
