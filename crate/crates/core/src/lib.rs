//! Numerical toolkit for algebraic curvature tensors: isotropic-curvature
//! and pinching conditions checked by frame-space minimization, the
//! identities relating them, and the Ricci flow reaction ODE.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod conditions;
pub mod error;
pub mod flow;
pub mod frames;
pub mod io;
pub mod models;
pub mod tensor;

pub use error::{Error, Result};
pub use frames::{Frame, Weights};
pub use tensor::{project_curvature, CurvatureTensor};
