//! Laplace-domain forecasting of forced and delayed dynamical systems.
//!
//! The response of a forced system is factored in the s-domain as
//! `Y(s) = H(s)(B X(s) + P(s))`: a learned transfer function `H`, the
//! transformed forcing `X`, and a polynomial `P` carrying the initial state.
//! Forecasts are recovered with a Fourier-series inverse Laplace transform,
//! so no time-stepping solver is involved at inference.

pub mod autodiff;
pub mod error;
pub mod laplace;
pub mod model;
pub mod systems;
pub mod training;

pub use error::{Error, ErrorClass, Result};
