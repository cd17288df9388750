//! Total-variation regularized optical flow.
//!
//! Five variational models share one primal-dual solver: quadratic or
//! absolute data terms, quadratic or total-variation smoothness, and two
//! extended models that pay a separate cost for first-order flow
//! variation. The crate also carries the error metrics, a synthetic
//! benchmark protocol and `.flo`/image/CSV input and output.

pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod models;
pub mod prox;
pub mod solver;
pub mod synth;

pub use error::{FlowError, Result};
pub use grid::{
    div_backward, grad_forward, image_derivatives, CentralScale, DerivativeConfig, FlowField,
    GradientField, GradientScheme, Grid, Image, ImageDerivatives,
};
pub use metrics::{ae, aee, aggregate_ranks, evaluate, ErrorReport, RankRow};
pub use models::{DualState, ModelKind, ModelSpec, PrimalState, WCoupling};
pub use prox::Isotropy;
pub use solver::{
    bregman_solve, chambolle_pock, constraint_residual, solve, solve_observed, BregmanState,
    IterationInfo, SolveReport,
};
pub use synth::{BenchCase, Dataset, Manifest, NoiseConfig, NoiseTarget, SyntheticKind};
