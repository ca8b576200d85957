//! ∫_{−ε}^{ε} Π|x − xₖ|^(−bₖ) dx against the bound ε^(1−Σbₖ).

use serde::{Deserialize, Serialize};

use super::MeasureError;
use crate::conformal::fit_slope;
use crate::quadrature::{Integrator, QuadratureError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixResult {
    pub exponent_sum: f64,
    pub eps: Vec<f64>,
    pub integrals: Vec<f64>,
    /// ∫_{−ε}^0.
    pub left_integrals: Vec<f64>,
    /// Least-squares slope of log ∫ against log ε.
    pub fitted_slope: f64,
    /// ∫ <= C ε^(1−Σb) with C fixed at the largest ε.
    pub bound_ok: bool,
    /// ∫_{−ε}^0 <= ε^(1−Σb)/(1−Σb) at every ε.
    pub left_bound_ok: bool,
}

/// Singularities at xₖ = 2⁻ᵏ, k = 1, 2, ...
pub fn appendix_product_integral(b: &[f64], eps_list: &[f64]) -> Result<AppendixResult, MeasureError> {
    let positions: Vec<f64> = (1..=b.len()).map(|k| 0.5f64.powi(k as i32)).collect();
    appendix_product_integral_at(b, &positions, eps_list)
}

/// As [`appendix_product_integral`] with explicit singular positions.
pub fn appendix_product_integral_at(
    b: &[f64],
    positions: &[f64],
    eps_list: &[f64],
) -> Result<AppendixResult, MeasureError> {
    if b.is_empty() || b.len() != positions.len() {
        return Err(MeasureError::Precondition("need one position per exponent".into()));
    }
    if b.iter().any(|&v| !(v > 0.0)) {
        return Err(MeasureError::Precondition("exponents must be positive".into()));
    }
    let sum: f64 = b.iter().sum();
    if !(sum < 0.5) {
        return Err(MeasureError::Precondition(format!(
            "sum of exponents {sum} must be below 1/2"
        )));
    }
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(MeasureError::Precondition(
            "eps_list must be positive and strictly decreasing".into(),
        ));
    }
    // Singular points with their total exponents and the smallest index k landing there.
    let mut sing: Vec<(f64, f64, usize)> = Vec::new();
    for (k, (&x, &e)) in positions.iter().zip(b).enumerate() {
        match sing.iter_mut().find(|s| s.0 == x) {
            Some(s) => s.1 += e,
            None => sing.push((x, e, k + 1)),
        }
    }
    sing.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    let g = |x: f64| -> f64 {
        let l: f64 = positions.iter().zip(b).map(|(&p, &e)| e * (x - p).abs().ln()).sum();
        let v = (-l).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let q = Integrator::new(1e-15, 1e-12).with_max_intervals(5000);
    let exponent_at = |x: f64| sing.iter().find(|s| s.0 == x).map_or((0.0, 0), |s| (s.1, s.2));
    let nearest_k = |x: f64| {
        sing.iter()
            .min_by(|p, q| (p.0 - x).abs().partial_cmp(&(q.0 - x).abs()).unwrap())
            .map_or(0, |s| s.2)
    };
    let integrate = |lo: f64, hi: f64| -> Result<f64, MeasureError> {
        let mut cuts = vec![lo];
        cuts.extend(sing.iter().map(|s| s.0).filter(|&x| x > lo && x < hi));
        cuts.push(hi);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (pu, ku) = exponent_at(w[0]);
            let (pv, kv) = exponent_at(w[1]);
            let wrap = |e: QuadratureError, k: usize| MeasureError::Appendix {
                k: if k > 0 { k } else { nearest_k(w[0]) },
                source: e,
            };
            let v = match (pu > 0.0, pv > 0.0) {
                (false, false) => q.integrate(g, w[0], w[1]).map_err(|e| wrap(e, 0))?.value,
                (true, false) => {
                    q.integrate_singular_start(g, w[0], w[1], pu)
                        .map_err(|e| wrap(e, ku))?
                        .value
                }
                (false, true) => {
                    q.integrate_singular_end(g, w[0], w[1], pv)
                        .map_err(|e| wrap(e, kv))?
                        .value
                }
                (true, true) => {
                    let m = 0.5 * (w[0] + w[1]);
                    q.integrate_singular_start(g, w[0], m, pu)
                        .map_err(|e| wrap(e, ku))?
                        .value
                        + q.integrate_singular_end(g, m, w[1], pv).map_err(|e| wrap(e, kv))?.value
                }
            };
            total += v;
        }
        Ok(total)
    };
    let mut integrals = Vec::with_capacity(eps_list.len());
    let mut left_integrals = Vec::with_capacity(eps_list.len());
    for &e in eps_list {
        let left = integrate(-e, 0.0)?;
        let right = integrate(0.0, e)?;
        left_integrals.push(left);
        integrals.push(left + right);
    }
    let lx: Vec<f64> = eps_list.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = integrals.iter().map(|v| v.ln()).collect();
    let fitted_slope = fit_slope(&lx, &ly);
    let power = 1.0 - sum;
    let c = integrals[0] / eps_list[0].powf(power);
    let bound_ok = integrals
        .iter()
        .zip(eps_list)
        .all(|(v, e)| *v <= c * e.powf(power) * (1.0 + 1e-9));
    let left_bound_ok = left_integrals
        .iter()
        .zip(eps_list)
        .all(|(v, e)| *v <= e.powf(power) / power * (1.0 + 1e-12));
    Ok(AppendixResult {
        exponent_sum: sum,
        eps: eps_list.to_vec(),
        integrals,
        left_integrals,
        fitted_slope,
        bound_ok,
        left_bound_ok,
    })
}
