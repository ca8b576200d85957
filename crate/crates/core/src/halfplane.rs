//! Poisson extensions V = P_t∗f, W = P_t∗Kf and the analytic function G = exp(−W + iV).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::{HilbertEvaluator, KValue};
use crate::profile::TangentProfile;
use crate::quadrature::{Integrator, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HalfPlaneError {
    #[error("point ({x}, {t}) is not in the open upper half-plane")]
    NotInterior { x: f64, t: f64 },
    #[error("Kf is singular at y = {0:e} on the integration path")]
    Singular(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// P_t(ξ) = (1/π) t/(ξ² + t²).
pub fn poisson_kernel(xi: f64, t: f64) -> f64 {
    t / (PI * (xi * xi + t * t))
}

/// A point z = x + it with t > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    x: f64,
    t: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, t: f64) -> Result<Self, HalfPlaneError> {
        if !(t > 0.0) || !x.is_finite() || !t.is_finite() {
            return Err(HalfPlaneError::NotInterior { x, t });
        }
        Ok(Self { x, t })
    }

    pub fn from_complex(z: Complex64) -> Result<Self, HalfPlaneError> {
        Self::new(z.re, z.im)
    }

    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.t)
    }

    /// δ₀: distance to the closed jump set of the profile.
    pub fn delta0(&self, p: &TangentProfile) -> f64 {
        let n = p.transform_terms(self.z().norm());
        let mut d = (1..=n)
            .map(|k| (self.z() - p.jump(k)).norm())
            .fold(f64::INFINITY, f64::min);
        if p.accumulates_at_origin() {
            d = d.min(self.z().norm());
        }
        d
    }
}

fn angle_points(p: &TangentProfile, z: UpperHalfPoint, extra: &[f64]) -> Vec<f64> {
    let n = p.value_terms();
    let mut ys: Vec<f64> = (1..=n).map(|k| p.jump(k)).collect();
    if let Some(s) = p.step() {
        for k in 1..=n.min(p.k()) {
            for b in s.breakpoints() {
                ys.push(p.jump(k) + b);
            }
        }
    }
    ys.extend_from_slice(extra);
    let mut phis: Vec<f64> = ys.iter().map(|y| ((y - z.x) / z.t).atan()).collect();
    phis.push(0.0);
    phis.retain(|v| v.is_finite());
    phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    phis.dedup();
    phis
}

/// V(z) = ∫ P_t(x − y) f(y) dy, computed in the angle variable y = x + t tan φ, where the
/// kernel becomes dφ/π and the constant tails integrate exactly.
pub fn extend_v(p: &TangentProfile, z: UpperHalfPoint) -> Result<f64, HalfPlaneError> {
    let (lo, hi) = p.support();
    if lo > hi {
        return Ok(0.0);
    }
    let phi_lo = ((lo - z.x) / z.t).atan();
    let phi_hi = ((hi - z.x) / z.t).atan();
    let mut pts: Vec<f64> = angle_points(p, z, &[])
        .into_iter()
        .filter(|&v| v > phi_lo && v < phi_hi)
        .collect();
    pts.insert(0, phi_lo);
    pts.push(phi_hi);
    let q = Integrator::new(1e-13, 1e-12).with_max_intervals(20000);
    let body = if phi_hi > phi_lo {
        q.integrate_points(|phi: f64| p.eval(z.x + z.t * phi.tan()), &pts)?
            .value
    } else {
        0.0
    };
    Ok((body + p.c_prime() * (FRAC_PI_2 - phi_hi)) / PI)
}

/// W(z) through the analytic extension: W = Re(c Σ aₖ Ψ(z − xₖ)) = −Re log G(z).
pub fn extend_w(ev: &HilbertEvaluator, z: UpperHalfPoint) -> f64 {
    -ev.log_g(z.z()).re
}

/// W(z) = ∫ P_t(x − y) Kf(y) dy by direct quadrature, split at |y − x| = 2δ₀.
pub fn extend_w_poisson(ev: &HilbertEvaluator, z: UpperHalfPoint) -> Result<f64, HalfPlaneError> {
    let p = ev.profile();
    let d0 = z.delta0(p);
    let mut pts = angle_points(p, z, &[z.x - 2.0 * d0, z.x + 2.0 * d0]);
    pts.insert(0, -FRAC_PI_2);
    pts.push(FRAC_PI_2);
    let q = Integrator::new(1e-10, 1e-10).with_max_intervals(40000);
    let mut singular = None;
    let v = q.integrate_points(
        |phi: f64| {
            let y = z.x + z.t * phi.tan();
            match ev.k_profile(y).value {
                KValue::Finite(v) => v,
                KValue::NegInfinity => {
                    singular.get_or_insert(y);
                    0.0
                }
            }
        },
        &pts,
    )?;
    if let Some(y) = singular {
        return Err(HalfPlaneError::Singular(y));
    }
    Ok(v.value / PI)
}

/// G at an interior point.
pub fn g_interior(ev: &HilbertEvaluator, z: UpperHalfPoint) -> Complex64 {
    ev.log_g(z.z()).exp()
}

/// Boundary value of G: exp(−Kf(x)) e^{i f(x)}, with an infinite modulus at singular points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryG {
    Finite(Complex64),
    Infinite { arg: f64 },
}

impl BoundaryG {
    pub fn value(self) -> Option<Complex64> {
        match self {
            BoundaryG::Finite(g) => Some(g),
            BoundaryG::Infinite { .. } => None,
        }
    }

    pub fn arg(self) -> f64 {
        match self {
            BoundaryG::Finite(g) => g.arg(),
            BoundaryG::Infinite { arg } => arg,
        }
    }
}

pub fn g_boundary(ev: &HilbertEvaluator, x: f64) -> BoundaryG {
    let arg = ev.profile().eval(x);
    match ev.k_profile(x).value {
        KValue::Finite(k) => BoundaryG::Finite(Complex64::from_polar((-k).exp(), arg)),
        KValue::NegInfinity => BoundaryG::Infinite { arg },
    }
}

/// A point of the closed upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HalfPlanePoint {
    Interior(UpperHalfPoint),
    Boundary(f64),
}

pub fn eval_g(ev: &HilbertEvaluator, z: HalfPlanePoint) -> BoundaryG {
    match z {
        HalfPlanePoint::Interior(u) => BoundaryG::Finite(g_interior(ev, u)),
        HalfPlanePoint::Boundary(x) => g_boundary(ev, x),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert!((poisson_kernel(0.0, 1.0) - 1.0 / PI).abs() < 1e-16);
        assert!((poisson_kernel(1.0, 1.0) - 0.5 / PI).abs() < 1e-16);
        let q = Integrator::new(1e-12, 1e-12);
        let v = q
            .integrate(
                |phi: f64| poisson_kernel(phi.tan(), 1.0) / phi.cos().powi(2),
                -FRAC_PI_2,
                FRAC_PI_2,
            )
            .unwrap();
        assert!((v.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn v_of_single_step() {
        let p = TangentProfile::wedge(1.2).unwrap();
        let v = extend_v(&p, UpperHalfPoint::new(0.0, 1.0).unwrap()).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
        let v = extend_v(&p, UpperHalfPoint::new(0.5, 1e-6).unwrap()).unwrap();
        assert!((v - 1.2).abs() < 1e-4);
    }

    #[test]
    fn w_lipschitz_closed_form() {
        let ev = HilbertEvaluator::new(TangentProfile::wedge(PI / 4.0).unwrap().clone());
        let p = TangentProfile::new(
            crate::profile::Mode::Lipschitz,
            1.0,
            crate::profile::Sequence::Explicit(vec![1.0]),
            crate::profile::Sequence::Explicit(vec![0.0]),
            None,
        )
        .unwrap();
        let ev1 = HilbertEvaluator::new(p);
        assert!(extend_w(&ev1, UpperHalfPoint::new(0.0, 1.0).unwrap()).abs() < 1e-15);
        let z = UpperHalfPoint::new(3.0, 4.0).unwrap();
        assert!((extend_w(&ev1, z) - 5f64.ln() / PI).abs() < 1e-14);
        let wq = extend_w_poisson(&ev1, z).unwrap();
        assert!((wq - 5f64.ln() / PI).abs() < 1e-8, "{wq}");
        let g = g_boundary(&ev, 2.0).value().unwrap();
        assert!((g.norm() - 2f64.powf(-0.25)).abs() < 1e-15);
    }
}
