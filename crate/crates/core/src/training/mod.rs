//! Scalers, losses, Adam, and the two-step and simultaneous regimes.
//!
//! Two-step training fits the operator first, freezes it, runs it over the
//! training set and fits the head on those outputs, with a standard scaler
//! per grid point pooled over samples and time rows. Simultaneous training backpropagates one loss on the head's
//! output through both networks; the head then works in the operator's
//! scaled output space.

mod config;
mod model;
mod normalize;
mod optim;
mod trainer;

pub use config::{DeepOnetArch, HeadKind, OperatorKind, OptimConfig, TrainingConfig, TrainingMode};
pub use model::{GradSink, HeadModel, Joint, OperatorContext, OperatorModel, OperatorNet, TrainedModel};
pub use normalize::{NormalizerKind, NormalizerState};
pub use optim::{adam_step, lr_schedule_step, mse_loss, squared_error_grad, Adam, BETA1, BETA2, EPSILON};
pub use trainer::{
    run_stage, train, train_head, train_operator, train_simultaneous, train_two_step, Checkpoint, CheckpointHook,
    HeadObjective, History, JointObjective, Objective, OperatorObjective, Phase, StageState, TrainOutcome,
};
