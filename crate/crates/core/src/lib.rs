//! Recurrent-head neural operators for long-horizon Korteweg–de Vries prediction.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece:
//! the pseudo-spectral KdV reference solver, DeepONet and FNO-2D operators,
//! simple RNN / GRU / LSTM sequence heads with hand-written backpropagation,
//! the two training regimes, and the evaluation protocols. File formats,
//! the command line and plotting live in the `kdvnet` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
// index loops mirror the math in the numerical kernels
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod deeponet;
pub mod error;
pub mod eval;
pub mod fft;
pub mod fno;
pub mod kdv;
pub mod linalg;
pub mod math;
pub mod params;
pub mod rng;
pub mod rnn;
pub mod training;

pub use error::{Error, Result};


/// Commonly used types.
pub mod prelude {
    pub use crate::deeponet::{DeepOnet, DeepOnetSpec, Mlp, MlpSpec};
    pub use crate::eval::{MetricsReport, Predictor, Protocol};
    pub use crate::fno::{Fno, FnoSpec};
    pub use crate::kdv::{Dataset, GridSpec, PdeParams, SolitonParams, Split, Trajectory};
    pub use crate::params::Parameters;
    pub use crate::rnn::{CellKind, Head, HeadSpec};
    pub use crate::training::{
        HeadKind, NormalizerKind, NormalizerState, OperatorKind, TrainedModel, TrainingConfig,
        TrainingMode,
    };
    pub use crate::{Error, Result};
}
