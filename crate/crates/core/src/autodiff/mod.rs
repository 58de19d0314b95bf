//! Reverse-mode differentiation over small dense tensors.
//!
//! A [`Tape`] records every primitive as it is evaluated; calling
//! [`Tape::backward`] on a scalar sweeps the record in reverse and returns
//! gradients for every node and every parameter that was read.

mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, FD_STEP};
pub use params::{ParamGrads, ParamId, ParamStore};
pub use tape::{argmax, CustomBackward, Gradients, Tape, Var};
pub use tensor::Tensor;
