//! Operators wrapped with their scalers, optional heads, and the composed
//! predictor used for evaluation.

use alloc::string::String;
use alloc::vec::Vec;

use super::config::{OperatorKind, TrainingConfig, TrainingMode};
use super::normalize::{NormalizerKind, NormalizerState};
use crate::deeponet::{query_grid, DeepOnet};
use crate::eval::Predictor;
use crate::fno::{build_fno_input, Fno, INPUT_CHANNELS};
use crate::kdv::GridSpec;
use crate::params::{prefixed, Parameters, Tensor};
use crate::rng::Rng;
use crate::rnn::Head;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorNet {
    DeepOnet(DeepOnet),
    Fno(Fno),
}

impl OperatorNet {
    pub fn init(config: &TrainingConfig, nx: usize, rng: &mut Rng) -> Result<Self> {
        Ok(match config.operator {
            OperatorKind::DeepOnet => OperatorNet::DeepOnet(DeepOnet::init(&config.deeponet.spec(nx), rng)?),
            OperatorKind::Fno => {
                config.fno.validate(config.horizon, nx)?;
                OperatorNet::Fno(Fno::init(config.fno, rng))
            }
        })
    }

    pub fn kind(&self) -> OperatorKind {
        match self {
            OperatorNet::DeepOnet(_) => OperatorKind::DeepOnet,
            OperatorNet::Fno(_) => OperatorKind::Fno,
        }
    }
}

impl Parameters for OperatorNet {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        match self {
            OperatorNet::DeepOnet(n) => n.tensors(),
            OperatorNet::Fno(n) => n.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            OperatorNet::DeepOnet(n) => n.tensors_mut(),
            OperatorNet::Fno(n) => n.tensors_mut(),
        }
    }
}

/// Scalers and query grid surrounding an operator network.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorContext {
    pub horizon: usize,
    pub nx: usize,
    /// Initial-condition scaler, `nx` features.
    pub input_norm: NormalizerState,
    /// Trunk coordinate scaler, 2 features.
    pub coord_norm: NormalizerState,
    /// Output scaler, `horizon * nx` features.
    pub output_norm: NormalizerState,
    /// Scaled `(x, t)` queries, time-major, `t_i = (i + 1) dt`.
    pub coords: Vec<f64>,
}

/// Per-sample gradient sink: receives `(first_sample, outputs)` in model
/// space and returns the loss gradient for those rows.
pub type GradSink<'a> = dyn FnMut(usize, &[f64]) -> Result<Vec<f64>> + 'a;

impl OperatorContext {
    /// Fits the scalers for `kind` on training initial conditions and
    /// training targets (rows `1..=horizon`).
    pub fn fit(
        kind: OperatorKind,
        grid: &GridSpec,
        horizon: usize,
        train_u0: &[f64],
        train_targets: &[f64],
    ) -> Result<Self> {
        let nx = grid.nx;
        let xs: Vec<f64> = (0..nx).map(|j| grid.x(j)).collect();
        let ts: Vec<f64> = (1..=horizon).map(|i| i as f64 * grid.dt_record).collect();
        let raw = query_grid(&xs, &ts);
        let (input_norm, coord_norm, output_norm) = match kind {
            OperatorKind::DeepOnet => (
                NormalizerState::fit(NormalizerKind::Standard, train_u0, nx)?,
                NormalizerState::fit(NormalizerKind::MinMax, &raw, 2)?,
                NormalizerState::fit(NormalizerKind::Standard, train_targets, horizon * nx)?,
            ),
            OperatorKind::Fno => (
                NormalizerState::identity(nx),
                NormalizerState::identity(2),
                NormalizerState::identity(horizon * nx),
            ),
        };
        let coords = coord_norm.applied(&raw);
        Ok(Self {
            horizon,
            nx,
            input_norm,
            coord_norm,
            output_norm,
            coords,
        })
    }

    pub fn features(&self) -> usize {
        self.horizon * self.nx
    }

    /// Model-space outputs `[batch, horizon * nx]` from scaled inputs.
    pub fn forward(&self, net: &OperatorNet, x: &[f64], batch: usize) -> Result<Vec<f64>> {
        match net {
            OperatorNet::DeepOnet(n) => n.forward(x, batch, &self.coords),
            OperatorNet::Fno(n) => n.forward(x, batch, self.horizon, self.nx),
        }
    }

    /// Runs forward and backward passes on scaled inputs. `sink` is called
    /// once per batch (DeepONet) or once per sample (FNO).
    pub fn accumulate(
        &self,
        net: &OperatorNet,
        x: &[f64],
        batch: usize,
        grads: &mut OperatorNet,
        sink: &mut GradSink<'_>,
    ) -> Result<()> {
        match (net, grads) {
            (OperatorNet::DeepOnet(n), OperatorNet::DeepOnet(g)) => {
                let (out, cache) = n.forward_cached(x, batch, &self.coords)?;
                let go = sink(0, &out)?;
                n.backward(&cache, &go, g);
            }
            (OperatorNet::Fno(n), OperatorNet::Fno(g)) => {
                let (nt, nx) = (self.horizon, self.nx);
                let basis = n.basis(nt, nx)?;
                let inputs = build_fno_input(x, batch, nt, nx)?;
                let per = nt * nx * INPUT_CHANNELS;
                for (s, inp) in inputs.chunks_exact(per).enumerate() {
                    let (out, cache) = n.forward_sample(inp, nt, nx, &basis)?;
                    let go = sink(s, &out)?;
                    n.backward_sample(&cache, &go, nt, nx, &basis, g);
                }
            }
            _ => return Err(Error::State("gradient buffer does not match operator".into())),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorModel {
    pub net: OperatorNet,
    pub ctx: OperatorContext,
}

impl OperatorModel {
    /// Model-space outputs from physical initial conditions.
    pub fn forward_model(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        let x = self.ctx.input_norm.applied(u0);
        self.ctx.forward(&self.net, &x, batch)
    }

    pub fn predict_physical(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        let mut out = self.forward_model(u0, batch)?;
        self.ctx.output_norm.invert(&mut out);
        Ok(out)
    }
}

/// A recurrent head and, in two-step mode, the scaler shared by its inputs
/// and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    pub head: Head,
    pub scaler: Option<NormalizerState>,
}

/// Operator and head trained jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub operator: OperatorNet,
    pub head: Head,
}

impl Parameters for Joint {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = prefixed("operator", self.operator.tensors());
        out.extend(prefixed("head", self.head.tensors()));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.operator.tensors_mut();
        out.extend(self.head.tensors_mut());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: TrainingConfig,
    pub operator: OperatorModel,
    pub head: Option<HeadModel>,
}

impl TrainedModel {
    pub fn id(&self) -> String {
        self.config.model_id()
    }

    /// Operator output before the head, in physical units.
    pub fn operator_prediction(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.operator.predict_physical(u0, batch)
    }

    /// Applies the head to physical-unit operator outputs `[batch, F]`.
    pub fn apply_head(&self, op_physical: &[f64], batch: usize) -> Result<Vec<f64>> {
        let Some(h) = &self.head else {
            return Ok(op_physical.to_vec());
        };
        let horizon = self.operator.ctx.horizon;
        match (self.config.mode, &h.scaler) {
            (TrainingMode::TwoStep, Some(s)) => {
                let x = s.applied(op_physical);
                let mut y = h.head.forward(&x, batch, horizon)?;
                s.invert(&mut y);
                Ok(y)
            }
            (TrainingMode::Simultaneous, None) => {
                let norm = &self.operator.ctx.output_norm;
                let x = norm.applied(op_physical);
                let mut y = h.head.forward(&x, batch, horizon)?;
                norm.invert(&mut y);
                Ok(y)
            }
            _ => Err(Error::State("head scaler does not match training mode".into())),
        }
    }
}

impl Predictor for TrainedModel {
    fn horizon(&self) -> usize {
        self.operator.ctx.horizon
    }

    fn nx(&self) -> usize {
        self.operator.ctx.nx
    }

    fn predict(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        let op = self.operator_prediction(u0, batch)?;
        self.apply_head(&op, batch)
    }
}

impl Predictor for OperatorModel {
    fn horizon(&self) -> usize {
        self.ctx.horizon
    }

    fn nx(&self) -> usize {
        self.ctx.nx
    }

    fn predict(&self, u0: &[f64], batch: usize) -> Result<Vec<f64>> {
        self.predict_physical(u0, batch)
    }
}
