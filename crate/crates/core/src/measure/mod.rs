//! Harmonic-measure density on ∂D, surface-ball ratios, the Monte Carlo oracle and the
//! product-integral check.

mod appendix;
mod wos;

pub use appendix::{appendix_product_integral, appendix_product_integral_at, AppendixResult};
pub use wos::{
    pole_comparison, pullback_probability, wos_exits, wos_harmonic_measure, ArcFrequency, BoundaryGeometry, Exit,
    MCConfig, PoleComparison, PoleRow, WosReport,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{fit_slope, fmt17, BoundaryTrace, ConformalError};
use crate::hilbert::{HilbertEvaluator, KValue};
use crate::quadrature::QuadratureError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("radius {r:e} exceeds the trace coverage around x = {x}")]
    Coverage { x: f64, r: f64 },
    #[error("preimage of the surface ball at x = {x}, r = {r:e} is disconnected at this resolution")]
    Disconnected { x: f64, r: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("product integral failed near the singular point k = {k}: {source}")]
    Appendix { k: usize, source: QuadratureError },
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// dω/dσ at Φ(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub value: f64,
    pub singular: bool,
}

/// exp(Kf(x)), the reciprocal of |G(x)|; zero and flagged where Kf = −∞.
pub fn density_at(ev: &HilbertEvaluator, x: f64) -> Density {
    match ev.k_profile(x).value {
        KValue::Finite(k) => Density {
            value: k.exp(),
            singular: false,
        },
        KValue::NegInfinity => Density {
            value: 0.0,
            singular: true,
        },
    }
}

/// ω(Δ_r)/H¹(Δ_r) for the surface ball Δ_r(Φ(x_center)), with pole at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureRatio {
    pub r: f64,
    /// Preimage interval [a, b] of the surface ball.
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub length: f64,
    pub ratio: f64,
}

pub fn measure_ratio(trace: &BoundaryTrace, x_center: f64, r: f64) -> Result<MeasureRatio, MeasureError> {
    if !(r > 0.0) {
        return Err(MeasureError::Precondition(format!("radius must be positive, got {r}")));
    }
    let p = trace.phi_at(x_center)?;
    let s = trace.samples();
    let j0 = s.partition_point(|v| v.x <= x_center);
    let outside = |z: Complex64| (z - p).norm() >= r;
    let right = (j0..s.len()).find(|&j| outside(s[j].phi));
    let left = (0..j0).rev().find(|&j| s[j].x < x_center && outside(s[j].phi));
    let (Some(jr), Some(jl)) = (right, left) else {
        return Err(MeasureError::Coverage { x: x_center, r });
    };
    let g = |x: f64| -> Result<f64, MeasureError> { Ok((trace.phi_at(x)? - p).norm() - r) };
    let b = solve_exit(&g, s[jr - 1].x.max(x_center), s[jr].x)?;
    let a = solve_exit(&g, s[jl + 1].x.min(x_center), s[jl].x)?;
    // Nothing beyond the exits may come back into the ball.
    let segs_far = (jr..s.len() - 1).chain(0..jl);
    for j in segs_far {
        if point_segment_distance(p, s[j].phi, s[j + 1].phi) < r {
            return Err(MeasureError::Disconnected { x: x_center, r });
        }
    }
    let length = trace.map().boundary_integral(a, b)?.len;
    let omega = b - a;
    Ok(MeasureRatio {
        r,
        a,
        b,
        omega,
        length,
        ratio: omega / length,
    })
}

/// Root of g between `inside` (g < 0) and `outside` (g >= 0) by the Illinois method.
fn solve_exit<F>(g: &F, inside: f64, outside: f64) -> Result<f64, MeasureError>
where
    F: Fn(f64) -> Result<f64, MeasureError>,
{
    let (mut x0, mut x1) = (inside, outside);
    let (mut g0, mut g1) = (g(x0)?, g(x1)?);
    if g1 == 0.0 {
        return Ok(x1);
    }
    let mut side = 0;
    for _ in 0..200 {
        if (x1 - x0).abs() <= 4.0 * f64::EPSILON * x0.abs().max(x1.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let mut x = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(x > x0.min(x1) && x < x0.max(x1)) {
            x = 0.5 * (x0 + x1);
        }
        let gx = g(x)?;
        if gx == 0.0 {
            return Ok(x);
        }
        if (gx < 0.0) == (g0 < 0.0) {
            x0 = x;
            g0 = gx;
            if side == -1 {
                g1 *= 0.5;
            }
            side = -1;
        } else {
            x1 = x;
            g1 = gx;
            if side == 1 {
                g0 *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (x0 + x1))
}

pub(crate) fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * d.re + (p - a).im * d.im) / l2;
    (p - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Ratio curve and verdict for one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterReport {
    pub x: f64,
    pub p: Complex64,
    pub density: Density,
    pub curve: Vec<MeasureRatio>,
    /// Slope of log ratio against log r.
    pub slope: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub threshold: f64,
    pub centers: Vec<CenterReport>,
}

/// Summary written next to density.csv.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub threshold: f64,
    pub flagged: Vec<f64>,
    pub slopes: Vec<(f64, f64)>,
    /// The accumulation point is reported without a verdict.
    pub origin: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<WosReport>,
}

pub const FLAG_THRESHOLD: f64 = 1e-2;

/// Ratio curves for every center; a center is flagged when its ratio at the finest radius is
/// below `threshold` and decreases over the last five radii.
pub fn singular_set_scan(
    trace: &BoundaryTrace,
    centers: &[f64],
    r_list: &[f64],
) -> Result<DensityReport, MeasureError> {
    singular_set_scan_with(trace, centers, r_list, FLAG_THRESHOLD)
}

pub fn singular_set_scan_with(
    trace: &BoundaryTrace,
    centers: &[f64],
    r_list: &[f64],
    threshold: f64,
) -> Result<DensityReport, MeasureError> {
    let mut radii = r_list.to_vec();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let reports: Vec<CenterReport> = centers
        .par_iter()
        .map(|&x| {
            let p = trace.phi_at(x)?;
            let density = density_at(trace.map().evaluator(), x);
            let curve: Vec<MeasureRatio> = radii
                .iter()
                .map(|&r| measure_ratio(trace, x, r))
                .collect::<Result<_, _>>()?;
            let lx: Vec<f64> = curve.iter().map(|c| c.r.ln()).collect();
            let ly: Vec<f64> = curve.iter().map(|c| c.ratio.ln()).collect();
            let slope = if curve.len() >= 2 {
                fit_slope(&lx, &ly)
            } else {
                f64::NAN
            };
            let tail = &curve[curve.len().saturating_sub(5)..];
            let decreasing = tail.windows(2).all(|w| w[1].ratio < w[0].ratio);
            let flagged = x != 0.0 && curve.last().is_some_and(|c| c.ratio < threshold) && decreasing;
            Ok(CenterReport {
                x,
                p,
                density,
                curve,
                slope,
                flagged,
            })
        })
        .collect::<Result<_, MeasureError>>()?;
    Ok(DensityReport {
        threshold,
        centers: reports,
    })
}

impl DensityReport {
    pub fn flagged(&self) -> Vec<f64> {
        self.centers.iter().filter(|c| c.flagged).map(|c| c.x).collect()
    }

    pub fn summary(&self) -> DensitySummary {
        DensitySummary {
            threshold: self.threshold,
            flagged: self.flagged(),
            slopes: self
                .centers
                .iter()
                .filter(|c| c.x != 0.0)
                .map(|c| (c.x, c.slope))
                .collect(),
            origin: self
                .centers
                .iter()
                .find(|c| c.x == 0.0)
                .map(|c| c.curve.iter().map(|m| (m.r, m.ratio)).collect()),
            mc: None,
        }
    }

    /// CSV with columns center_x, r, omega, length, ratio, flagged.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["center_x", "r", "omega", "length", "ratio", "flagged"])?;
        for c in &self.centers {
            for m in &c.curve {
                out.write_record([
                    fmt17(c.x),
                    fmt17(m.r),
                    fmt17(m.omega),
                    fmt17(m.length),
                    fmt17(m.ratio),
                    c.flagged.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
