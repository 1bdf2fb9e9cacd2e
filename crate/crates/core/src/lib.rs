//! Slepian-basis least squares, bound verification and ReLU network
//! emulation on [-1, 1]^d.
//!
//! The numerical core is generic over the scalar type ([`Real`], i.e. `f32`
//! or `f64`); the aliases below fix `f64`, which is what the CLI and the
//! experiment runner use.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod indexset;
pub mod linalg;
pub mod netcalc;
pub mod nettrain;
pub mod lstsq;
pub mod polybasis;
pub mod prolate;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod tensorbasis;

pub use error::{Error, Result};
pub use indexset::IndexSet;
pub use polybasis::PolyFamily;
pub use scalar::Real;

pub type ProlateBasis = prolate::ProlateBasis1D<f64>;
pub type ProlateBasisF32 = prolate::ProlateBasis1D<f32>;
pub type Matrix = linalg::Mat<f64>;
pub type Basis = tensorbasis::TensorBasis<f64>;
pub type Samples = sampling::SampleSet<f64>;
pub type Target = sampling::TargetFunction<f64>;
pub type Fit = lstsq::FitResult<f64>;
