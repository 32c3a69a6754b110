//! Chaotic random tanh networks and the floating-point divergence of their
//! iterates.
//!
//! A network of `n` nodes evolves as `x(t+1) = tanh(w x(t) + b)` with `w` and
//! `b` drawn uniformly from (-1, 1). The crate provides
//!
//! - [`dynamics`]: sampling and iteration under a chosen [`EvalKernel`], a
//!   fully specified rounding strategy (precision and summation order);
//! - [`learner`]: a from-scratch single-layer student trained with MSE and
//!   Adam to recover `w` and `b` from a trajectory;
//! - [`metrics`]: relative parameter errors, per-step trajectory errors and
//!   blow-up statistics;
//! - [`experiments`]: seeded twin, sweep and train-then-predict drivers;
//! - [`io`]: CSV, parameter-file and PGM heatmap formats.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the storage type to `f64`, which is what the experiments use.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod learner;
pub mod metrics;
pub mod rng;
pub mod scalar;

pub use dynamics::{iterate, sample_network, sample_state, step, NetworkParams, Sampler, StateVector, Trajectory};
pub use error::{Error, Result};
pub use experiments::{
    divergence_sweep, train_and_predict, twin_divergence, SweepEntry, SweepSpec, TrainPredictOutcome,
    TrainPredictSetup, TrainPredictSpec, TwinOutcome, TwinSpec,
};
pub use kernel::{EvalKernel, Precision, SumOrder};
pub use learner::{
    adam_update, build_dataset, gradient, mse_loss, predict_rollout, train, AdamState, Dataset, GradientPair,
    TrainConfig,
};
pub use metrics::{
    average_curves, blow_up_analysis, param_errors, per_step_error, total_error, BlowUpReport, ErrorCurve,
};
pub use rng::Seed;
pub use scalar::Real;

pub type State = StateVector<f64>;
pub type Network = NetworkParams<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Dataset64 = Dataset<f64>;
pub type AdamState64 = AdamState<f64>;
pub type Gradient64 = GradientPair<f64>;

pub type State32 = StateVector<f32>;
pub type Network32 = NetworkParams<f32>;
pub type Trajectory32 = Trajectory<f32>;
