#![allow(clippy::excessive_precision)]

//! Adaptive Gauss–Kronrod quadrature and fixed Gauss–Legendre rules.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: value {value:e}, error estimate {error:e} after {intervals} intervals")]
    NotConverged { value: f64, error: f64, intervals: usize },
    #[error("integrand returned a non-finite value at {at:e}")]
    NonFinite { at: f64 },
    #[error("invalid integration interval [{a:e}, {b:e}]")]
    InvalidInterval { a: f64, b: f64 },
}

/// Values that can be integrated: reals, complex numbers and small tuples thereof.
pub trait QuadValue<T: Real>: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.re.abs().max(self.im.abs())
    }
}

// Kronrod abscissae (descending) and weights, with the embedded 10-point Gauss weights.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_031_300,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

/// One application of the 21-point Kronrod rule. Returns (value, error estimate).
pub fn gk21<T: Real, V: QuadValue<T>, F: FnMut(T) -> V>(f: &mut F, a: T, b: T) -> (V, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut res_k = fc * T::lit(WGK[10]);
    let mut res_g = V::zero();
    let mut res_abs = fc.magnitude() * T::lit(WGK[10]);
    let mut fv1 = [V::zero(); 10];
    let mut fv2 = [V::zero(); 10];
    for j in 0..10 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let s = f1 + f2;
        res_k = res_k + s * T::lit(WGK[j]);
        res_abs = res_abs + (f1.magnitude() + f2.magnitude()) * T::lit(WGK[j]);
        if j % 2 == 1 {
            res_g = res_g + s * T::lit(WG[j / 2]);
        }
    }
    let mean = res_k * half;
    let mut res_asc = (fc - mean).magnitude() * T::lit(WGK[10]);
    for j in 0..10 {
        res_asc = res_asc + ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude()) * T::lit(WGK[j]);
    }
    let hab = h.abs();
    let res_asc = res_asc * hab;
    let res_abs = res_abs * hab;
    let value = res_k * h;
    let mut err = ((res_k - res_g) * h).magnitude();
    if res_asc != T::zero() && err != T::zero() {
        let ratio = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * ratio.min(T::one());
    }
    let eps = T::epsilon();
    if res_abs > T::min_positive_value() / (T::lit(50.0) * eps) {
        err = err.max(T::lit(50.0) * eps * res_abs);
    }
    (value, err)
}

struct Piece<T, V> {
    a: T,
    b: T,
    value: V,
    error: T,
}

impl<T: Real, V> PartialEq for Piece<T, V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real, V> Eq for Piece<T, V> {}
impl<T: Real, V> PartialOrd for Piece<T, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real, V> Ord for Piece<T, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integrator: repeatedly bisects the interval with the largest error.
#[derive(Debug, Clone, Copy)]
pub struct Integrator<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Integrator<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-10),
            max_intervals: 2000,
        }
    }
}

impl<T: Real> Integrator<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    pub fn integrate<V, F>(&self, f: F, a: T, b: T) -> Result<Estimate<V>, QuadratureError>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        self.integrate_points(f, &[a, b])
    }

    /// Integrates over consecutive pieces `points[i]..points[i+1]`. Points must be monotone.
    pub fn integrate_points<V, F>(&self, mut f: F, points: &[T]) -> Result<Estimate<V>, QuadratureError>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        if points.len() < 2 {
            return Ok(Estimate {
                value: V::zero(),
                error: 0.0,
                evaluations: 0,
            });
        }
        for w in points.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(QuadratureError::InvalidInterval {
                    a: w[0].to_f64().unwrap_or(f64::NAN),
                    b: w[1].to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let mut heap = BinaryHeap::new();
        let mut total = V::zero();
        let mut total_err = T::zero();
        let mut evals = 0usize;
        let bad: Cell<Option<T>> = Cell::new(None);
        let checked = |v: T, f: &mut F| -> V {
            let y = f(v);
            if !y.magnitude().is_finite() && bad.get().is_none() {
                bad.set(Some(v));
            }
            y
        };
        let eval = |a: T, b: T, f: &mut F| -> (V, T) {
            let mut g = |x: T| checked(x, f);
            gk21(&mut g, a, b)
        };
        for w in points.windows(2) {
            if w[0] == w[1] {
                continue;
            }
            let (v, e) = eval(w[0], w[1], &mut f);
            evals += 21;
            total = total + v;
            total_err = total_err + e;
            heap.push(Piece {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
        let finish = |bad: Option<T>| -> Result<(), QuadratureError> {
            match bad {
                Some(at) => Err(QuadratureError::NonFinite {
                    at: at.to_f64().unwrap_or(f64::NAN),
                }),
                None => Ok(()),
            }
        };
        loop {
            let floor = T::lit(100.0) * T::epsilon() * total.magnitude();
            let tol = self.abs_tol.max(self.rel_tol * total.magnitude()).max(floor);
            if total_err <= tol {
                break;
            }
            if heap.len() >= self.max_intervals {
                finish(bad.get())?;
                return Err(QuadratureError::NotConverged {
                    value: total.magnitude().to_f64().unwrap_or(f64::NAN),
                    error: total_err.to_f64().unwrap_or(f64::NAN),
                    intervals: heap.len(),
                });
            }
            let Some(worst) = heap.pop() else { break };
            let mid = T::lit(0.5) * (worst.a + worst.b);
            if mid == worst.a || mid == worst.b {
                // Interval exhausted at machine resolution; accept it.
                heap.push(Piece {
                    error: T::zero(),
                    ..worst
                });
                total_err = total_err - worst.error;
                continue;
            }
            let (v1, e1) = eval(worst.a, mid, &mut f);
            let (v2, e2) = eval(mid, worst.b, &mut f);
            evals += 42;
            if bad.get().is_some() {
                break;
            }
            total = total - worst.value + v1 + v2;
            total_err = total_err - worst.error + e1 + e2;
            heap.push(Piece {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Piece {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }
        finish(bad.get())?;
        // Re-sum to shed accumulated rounding from the running updates.
        let mut value = V::zero();
        let mut err = T::zero();
        for p in heap.iter() {
            value = value + p.value;
            err = err + p.error;
        }
        Ok(Estimate {
            value,
            error: err.to_f64().unwrap_or(f64::NAN),
            evaluations: evals,
        })
    }

    /// Integral over [a, b] of an integrand behaving like |x - a|^(-p) near `a`, 0 <= p < 1.
    ///
    /// Uses x = a + (b - a) u^(1/(1-p)), which turns the singularity into a smooth factor.
    pub fn integrate_singular_start<V, F>(&self, mut f: F, a: T, b: T, p: T) -> Result<Estimate<V>, QuadratureError>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        let q = T::one() / (T::one() - p);
        let len = b - a;
        let g = |u: T| {
            if u <= T::zero() {
                return V::zero();
            }
            let s = u.powf(q);
            let jac = len * q * u.powf(q - T::one());
            if jac == T::zero() {
                return V::zero();
            }
            f(a + len * s) * jac
        };
        self.integrate(g, T::zero(), T::one())
    }

    /// As [`Integrator::integrate_singular_start`] with the singularity at `b`.
    pub fn integrate_singular_end<V, F>(&self, f: F, a: T, b: T, p: T) -> Result<Estimate<V>, QuadratureError>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        self.integrate_singular_start(f, b, a, p).map(|e| Estimate {
            value: e.value * -T::one(),
            ..e
        })
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Cached 16-point Gauss–Legendre rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}
