//! Reverse-mode automatic differentiation over dense matrices.
//!
//! Every value on a [`Tape`] is a two-dimensional `f64` array; scalars are
//! `1 × 1`. Complex quantities are pairs of real nodes ([`CVar`]).

mod adam;
mod checkpoint;
mod complex;
mod gradcheck;
mod mlp;
mod params;
mod tape;

pub use adam::{clip_global_norm, global_norm, Adam};
pub use checkpoint::{Checkpoint, StoredTensor};
pub use complex::{complex_add, complex_div, complex_mul, complex_sub, CVar};
pub use gradcheck::{grad_check, GradCheck, GRAD_CHECK_FLOOR};
pub use mlp::{Activation, Init, Mlp, MlpSpec};
pub use params::{ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, Tensor, Var};
