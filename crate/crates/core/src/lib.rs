//! Solver and Monte Carlo lab for the stochastic time-fractional diffusion
//! equation `∂ₜ^α u + Au = ₀Iₜ^γ Ẇ` on the unit interval.
//!
//! Linear finite elements in space, Grünwald-Letnikov convolution quadrature
//! in time, truncated Karhunen-Loève noise.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem1d;
pub mod fracquad;
pub mod lab;
pub mod mlf;
pub mod noise;
pub mod oracle;
pub mod quadrature;
pub mod stepper;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use fem1d::{EigenBasis, FemSpace};
pub use fracquad::{gl_weights, WeightTable};
pub use lab::{
    holder_probe, predicted_rates, run_study, run_study_with_workers, ErrorReport, HolderPlan, HolderReport,
    PredictedRates, Rate, StudyMode, StudyPlan,
};
pub use mlf::{mittag_leffler, MlfParams};
pub use noise::{sample_increments, IncrementMatrix, NoiseModel, StreamKey};
pub use stepper::{solve_trajectory, InitialData, ModelConfig, NamedInitial, SolveResult, Stepper};
