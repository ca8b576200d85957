// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod halfplane;
pub mod hilbert;
pub mod measure;
pub mod modulus;
pub mod profile;
pub mod quadrature;
pub mod scalar;

/// The smoothed modulus over f64, used by all higher layers.
pub type Smoothed = modulus::SmoothedModulus<f64>;
/// Modulus specification over f64.
pub type Modulus = modulus::ModulusSpec<f64>;
