//! Epoch loop, the three training objectives and resumable state.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::config::{HeadKind, OptimConfig, TrainingConfig, TrainingMode};
use super::model::{HeadModel, Joint, OperatorContext, OperatorModel, OperatorNet, TrainedModel};
use super::normalize::{NormalizerKind, NormalizerState};
use super::optim::{lr_schedule_step, squared_error_grad, Adam};
use crate::eval::mae;
use crate::kdv::{Dataset, Split};
use crate::params::{Parameters, Tensor};
use crate::rng::{self, Rng, RngState};
use crate::rnn::Head;
use crate::{Error, Result};

const INIT_OPERATOR: u64 = 100;
const INIT_HEAD: u64 = 101;
const SHUFFLE_OPERATOR: u64 = 200;
const SHUFFLE_HEAD: u64 = 201;
const SHUFFLE_JOINT: u64 = 202;
/// Rows per forward call during validation.
const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    /// Mean training loss per epoch (model space).
    pub train_loss: Vec<f64>,
    /// Epochs (1-based) at which validation ran.
    pub val_epochs: Vec<usize>,
    /// Validation MAE in physical units.
    pub val_mae: Vec<f64>,
}

/// A differentiable training problem over parameters `Params`.
pub trait Objective {
    type Params: Parameters + Clone;
    fn train_len(&self) -> usize;
    /// Mean squared error of the batch; gradients are added to `grads`.
    fn batch(&self, params: &Self::Params, idx: &[usize], grads: &mut Self::Params) -> Result<f64>;
    /// Validation MAE in physical units.
    fn validate(&self, params: &Self::Params) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageState<P> {
    pub params: P,
    pub best: P,
    pub best_val: f64,
    pub best_epoch: usize,
    pub adam: Adam,
    pub lr: f64,
    /// Completed epochs.
    pub epoch: usize,
    pub rng: Rng,
    pub history: History,
}

impl<P: Parameters + Clone> StageState<P> {
    pub fn fresh(params: P, lr: f64, rng: Rng) -> Self {
        let n = params.parameter_count();
        Self {
            best: params.clone(),
            params,
            best_val: f64::INFINITY,
            best_epoch: 0,
            adam: Adam::new(n),
            lr,
            epoch: 0,
            rng,
            history: History::default(),
        }
    }

    fn save(&self, ck: &mut Checkpoint, prefix: &str) {
        ck.push_params(&format!("{prefix}.params"), &self.params);
        ck.push_params(&format!("{prefix}.best"), &self.best);
        ck.push_vec("opt.m", self.adam.m.clone());
        ck.push_vec("opt.v", self.adam.v.clone());
        ck.push_scalar("opt.step", self.adam.step as f64);
        ck.push_scalar("state.lr", self.lr);
        ck.push_scalar("state.epoch", self.epoch as f64);
        ck.push_scalar("state.best_val", self.best_val);
        ck.push_scalar("state.best_epoch", self.best_epoch as f64);
        ck.push_history(prefix, &self.history);
        ck.rng = RngState::capture(&self.rng);
    }

    fn load(ck: &Checkpoint, prefix: &str, template: &P) -> Result<Self> {
        let mut params = template.clone();
        ck.load_params(&format!("{prefix}.params"), &mut params)?;
        let mut best = template.clone();
        ck.load_params(&format!("{prefix}.best"), &mut best)?;
        let n = params.parameter_count();
        let m = ck.vec("opt.m")?;
        let v = ck.vec("opt.v")?;
        if m.len() != n || v.len() != n {
            return Err(Error::State("optimizer state does not match parameters".into()));
        }
        Ok(Self {
            params,
            best,
            best_val: ck.scalar("state.best_val")?,
            best_epoch: ck.scalar("state.best_epoch")? as usize,
            adam: Adam {
                step: ck.scalar("opt.step")? as u64,
                m: m.to_vec(),
                v: v.to_vec(),
            },
            lr: ck.scalar("state.lr")?,
            epoch: ck.scalar("state.epoch")? as usize,
            rng: ck.rng.restore(),
            history: ck.history(prefix)?,
        })
    }
}

/// Trains until `opt.epochs` epochs are complete, keeping the parameters
/// with the lowest validation MAE in `state.best`.
pub fn run_stage<O: Objective>(
    obj: &O,
    opt: &OptimConfig,
    eval_every: usize,
    stage: &'static str,
    state: &mut StageState<O::Params>,
    on_epoch: &mut dyn FnMut(&StageState<O::Params>) -> Result<()>,
) -> Result<()> {
    let n = obj.train_len();
    if n == 0 {
        return Err(Error::invalid("training split is empty"));
    }
    let mut grads = state.params.zeros_like();
    let mut order: Vec<usize> = (0..n).collect();
    while state.epoch < opt.epochs {
        for (i, o) in order.iter_mut().enumerate() {
            *o = i;
        }
        rng::shuffle(&mut state.rng, &mut order);
        let mut total = 0.0;
        for idx in order.chunks(opt.batch_size) {
            grads.zero();
            let loss = obj.batch(&state.params, idx, &mut grads)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Divergence {
                    stage,
                    epoch: state.epoch,
                });
            }
            state.adam.update(&mut state.params, &grads, state.lr);
            total += loss * idx.len() as f64;
        }
        state.history.train_loss.push(total / n as f64);
        state.epoch += 1;
        state.lr = lr_schedule_step(state.lr, state.epoch, opt.step_size, opt.decay);
        if state.epoch % eval_every == 0 || state.epoch == opt.epochs {
            let val = obj.validate(&state.params)?;
            if !val.is_finite() {
                return Err(Error::Divergence {
                    stage,
                    epoch: state.epoch,
                });
            }
            state.history.val_epochs.push(state.epoch);
            state.history.val_mae.push(val);
            if val < state.best_val {
                state.best_val = val;
                state.best_epoch = state.epoch;
                state.best = state.params.clone();
            }
        }
        on_epoch(state)?;
    }
    Ok(())
}

fn gather(data: &[f64], width: usize, idx: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(idx.len() * width);
    for &i in idx {
        out.extend_from_slice(&data[i * width..(i + 1) * width]);
    }
    out
}

fn chunked<F>(x: &[f64], width: usize, mut f: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], usize) -> Result<Vec<f64>>,
{
    let mut out = Vec::new();
    for c in x.chunks(EVAL_CHUNK * width) {
        out.extend(f(c, c.len() / width)?);
    }
    Ok(out)
}

/// Operator alone against scaled targets.
pub struct OperatorObjective<'a> {
    pub ctx: &'a OperatorContext,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub val_x: Vec<f64>,
    pub val_truth: Vec<f64>,
}

impl Objective for OperatorObjective<'_> {
    type Params = OperatorNet;

    fn train_len(&self) -> usize {
        self.x.len() / self.ctx.nx
    }

    fn batch(&self, params: &OperatorNet, idx: &[usize], grads: &mut OperatorNet) -> Result<f64> {
        let f = self.ctx.features();
        let xb = gather(&self.x, self.ctx.nx, idx);
        let yb = gather(&self.y, f, idx);
        let denom = (idx.len() * f) as f64;
        let mut sse = 0.0;
        self.ctx.accumulate(params, &xb, idx.len(), grads, &mut |s, out| {
            let mut g = vec![0.0; out.len()];
            sse += squared_error_grad(out, &yb[s * f..s * f + out.len()], denom, &mut g);
            Ok(g)
        })?;
        Ok(sse / denom)
    }

    fn validate(&self, params: &OperatorNet) -> Result<f64> {
        let mut pred = chunked(&self.val_x, self.ctx.nx, |c, b| self.ctx.forward(params, c, b))?;
        self.ctx.output_norm.invert(&mut pred);
        mae(&self.val_truth, &pred)
    }
}

/// Head on frozen, pre-computed operator outputs.
pub struct HeadObjective {
    pub horizon: usize,
    pub features: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub val_x: Vec<f64>,
    pub val_truth: Vec<f64>,
    pub scaler: NormalizerState,
}

impl Objective for HeadObjective {
    type Params = Head;

    fn train_len(&self) -> usize {
        self.x.len() / self.features
    }

    fn batch(&self, head: &Head, idx: &[usize], grads: &mut Head) -> Result<f64> {
        let f = self.features;
        let xb = gather(&self.x, f, idx);
        let yb = gather(&self.y, f, idx);
        let (out, cache) = head.forward_cached(&xb, idx.len(), self.horizon)?;
        let denom = (idx.len() * f) as f64;
        let mut g = vec![0.0; out.len()];
        let sse = squared_error_grad(&out, &yb, denom, &mut g);
        head.backward(&cache, &g, grads);
        Ok(sse / denom)
    }

    fn validate(&self, head: &Head) -> Result<f64> {
        let mut pred = chunked(&self.val_x, self.features, |c, b| head.forward(c, b, self.horizon))?;
        self.scaler.invert(&mut pred);
        mae(&self.val_truth, &pred)
    }
}

/// Operator and head with one loss on the head output.
pub struct JointObjective<'a> {
    pub ctx: &'a OperatorContext,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub val_x: Vec<f64>,
    pub val_truth: Vec<f64>,
}

impl Objective for JointObjective<'_> {
    type Params = Joint;

    fn train_len(&self) -> usize {
        self.x.len() / self.ctx.nx
    }

    fn batch(&self, params: &Joint, idx: &[usize], grads: &mut Joint) -> Result<f64> {
        let f = self.ctx.features();
        let horizon = self.ctx.horizon;
        let xb = gather(&self.x, self.ctx.nx, idx);
        let yb = gather(&self.y, f, idx);
        let denom = (idx.len() * f) as f64;
        let mut sse = 0.0;
        let Joint {
            operator: g_op,
            head: g_head,
        } = grads;
        self.ctx.accumulate(&params.operator, &xb, idx.len(), g_op, &mut |s, out| {
            let rows = out.len() / f;
            let (y, cache) = params.head.forward_cached(out, rows, horizon)?;
            let mut g = vec![0.0; y.len()];
            sse += squared_error_grad(&y, &yb[s * f..(s + rows) * f], denom, &mut g);
            Ok(params.head.backward(&cache, &g, g_head))
        })?;
        Ok(sse / denom)
    }

    fn validate(&self, params: &Joint) -> Result<f64> {
        let horizon = self.ctx.horizon;
        let mut pred = chunked(&self.val_x, self.ctx.nx, |c, b| {
            let z = self.ctx.forward(&params.operator, c, b)?;
            params.head.forward(&z, b, horizon)
        })?;
        self.ctx.output_norm.invert(&mut pred);
        mae(&self.val_truth, &pred)
    }
}

/// Which stage a checkpoint was taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Operator = 0,
    Head = 1,
    Joint = 2,
    Done = 3,
}

impl Phase {
    fn from_code(c: f64) -> Result<Self> {
        Ok(match c as u8 {
            0 => Phase::Operator,
            1 => Phase::Head,
            2 => Phase::Joint,
            3 => Phase::Done,
            _ => return Err(Error::State("unknown checkpoint phase".into())),
        })
    }
}

/// Named arrays plus RNG state; everything needed to resume or to rebuild a
/// trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: u64,
    pub arrays: Vec<(String, Tensor)>,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn new(config_hash: u64) -> Self {
        Self {
            config_hash,
            arrays: Vec::new(),
            rng: RngState::capture(&rng::keyed(0, 0)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.arrays.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::State(format!("checkpoint lacks array `{name}`")))
    }

    pub fn push(&mut self, name: &str, t: Tensor) {
        self.arrays.push((name.to_string(), t));
    }

    pub fn push_vec(&mut self, name: &str, v: Vec<f64>) {
        let n = v.len();
        self.push(name, Tensor::new(vec![n], v));
    }

    pub fn push_scalar(&mut self, name: &str, v: f64) {
        self.push_vec(name, vec![v]);
    }

    pub fn scalar(&self, name: &str) -> Result<f64> {
        let t = self.require(name)?;
        t.data
            .first()
            .copied()
            .ok_or_else(|| Error::State(format!("array `{name}` is empty")))
    }

    pub fn vec(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.require(name)?.data)
    }

    pub fn push_params<P: Parameters + ?Sized>(&mut self, prefix: &str, p: &P) {
        for (name, t) in p.tensors() {
            self.push(&format!("{prefix}.{name}"), t.clone());
        }
    }

    /// Copies arrays into `p`; any missing name or shape difference means
    /// the checkpoint was written for another architecture.
    pub fn load_params<P: Parameters + ?Sized>(&self, prefix: &str, p: &mut P) -> Result<()> {
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        for (name, t) in names.iter().zip(p.tensors_mut()) {
            let full = format!("{prefix}.{name}");
            let src = self.require(&full)?;
            if src.shape != t.shape {
                return Err(Error::State(format!(
                    "array `{full}` has shape {:?}, architecture expects {:?}",
                    src.shape, t.shape
                )));
            }
            t.data.copy_from_slice(&src.data);
        }
        Ok(())
    }

    pub fn push_norm(&mut self, prefix: &str, n: &NormalizerState) {
        self.push_scalar(&format!("{prefix}.kind"), n.kind.code() as f64);
        self.push_vec(&format!("{prefix}.shift"), n.shift.clone());
        self.push_vec(&format!("{prefix}.scale"), n.scale.clone());
    }

    pub fn norm(&self, prefix: &str) -> Result<NormalizerState> {
        let kind = NormalizerKind::from_code(self.scalar(&format!("{prefix}.kind"))? as u8)
            .ok_or_else(|| Error::State("unknown scaler kind".into()))?;
        Ok(NormalizerState {
            kind,
            shift: self.vec(&format!("{prefix}.shift"))?.to_vec(),
            scale: self.vec(&format!("{prefix}.scale"))?.to_vec(),
        })
    }

    fn push_history(&mut self, prefix: &str, h: &History) {
        self.push_vec(&format!("{prefix}.history.train_loss"), h.train_loss.clone());
        self.push_vec(
            &format!("{prefix}.history.val_epochs"),
            h.val_epochs.iter().map(|&e| e as f64).collect(),
        );
        self.push_vec(&format!("{prefix}.history.val_mae"), h.val_mae.clone());
    }

    pub fn history(&self, prefix: &str) -> Result<History> {
        Ok(History {
            train_loss: self.vec(&format!("{prefix}.history.train_loss"))?.to_vec(),
            val_epochs: self
                .vec(&format!("{prefix}.history.val_epochs"))?
                .iter()
                .map(|&e| e as usize)
                .collect(),
            val_mae: self.vec(&format!("{prefix}.history.val_mae"))?.to_vec(),
        })
    }

    pub fn phase(&self) -> Result<Phase> {
        Phase::from_code(self.scalar("state.phase")?)
    }
}

/// Initial conditions and targets of one split, in physical units.
struct SplitData {
    u0: Vec<f64>,
    truth: Vec<f64>,
}

fn split_data(dataset: &Dataset, split: Split, horizon: usize) -> SplitData {
    let idx = dataset.indices(split);
    let mut u0 = Vec::new();
    let mut truth = Vec::new();
    for i in idx {
        let t = &dataset.trajectories[i];
        u0.extend_from_slice(t.initial());
        truth.extend_from_slice(t.target(horizon));
    }
    SplitData { u0, truth }
}

pub struct TrainOutcome {
    pub model: TrainedModel,
    pub operator_history: History,
    pub head_history: Option<History>,
    /// Best validation MAE of the operator stage (the joint stage in
    /// simultaneous mode).
    pub operator_val_mae: f64,
    /// Validation MAE of the returned model.
    pub val_mae: f64,
}

pub type CheckpointHook<'a> = dyn FnMut(&Checkpoint) -> Result<()> + 'a;

/// Trains `config` on the train split with validation-based selection.
/// `resume` continues from an intermediate checkpoint; `hook` receives a
/// checkpoint every `config.checkpoint_every` epochs.
pub fn train(
    dataset: &Dataset,
    config: &TrainingConfig,
    resume: Option<&Checkpoint>,
    hook: &mut CheckpointHook<'_>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let hash = config.hash();
    if let Some(ck) = resume {
        if ck.config_hash != hash {
            return Err(Error::State(
                "checkpoint was written for a different configuration".into(),
            ));
        }
    }
    let (grid, horizon) = (dataset.grid, config.horizon);
    if horizon > grid.nt_record {
        return Err(Error::invalid(format!(
            "horizon {horizon} exceeds recorded rows {}",
            grid.nt_record
        )));
    }
    let nx = grid.nx;
    let train = split_data(dataset, Split::Train, horizon);
    let val = split_data(dataset, Split::Val, horizon);
    if train.u0.is_empty() || val.u0.is_empty() {
        return Err(Error::invalid("training and validation splits must be nonempty"));
    }

    let ctx = OperatorContext::fit(config.operator, &grid, horizon, &train.u0, &train.truth)?;
    let op_init = OperatorNet::init(config, nx, &mut rng::keyed(config.seed, INIT_OPERATOR))?;
    let head_init = config
        .head_spec(nx)
        .map(|s| Head::init(s, &mut rng::keyed(config.seed, INIT_HEAD)));

    let phase = match resume {
        Some(ck) => ck.phase()?,
        None if config.mode == TrainingMode::Simultaneous => Phase::Joint,
        None => Phase::Operator,
    };
    if phase == Phase::Done {
        return Err(Error::State("checkpoint holds a finished model".into()));
    }
    let cadence = config.checkpoint_every;
    let base = |phase: Phase| {
        let mut ck = Checkpoint::new(hash);
        ck.push_scalar("state.phase", phase as u8 as f64);
        ck
    };

    let x_train = ctx.input_norm.applied(&train.u0);
    let y_train = ctx.output_norm.applied(&train.truth);
    let x_val = ctx.input_norm.applied(&val.u0);

    if config.mode == TrainingMode::Simultaneous {
        let head = head_init.ok_or_else(|| Error::invalid("simultaneous training needs a head"))?;
        let template = Joint {
            operator: op_init,
            head,
        };
        let mut st = match resume {
            Some(ck) => StageState::load(ck, "joint", &template)?,
            None => StageState::fresh(
                template,
                config.operator_opt.lr,
                rng::keyed(config.seed, SHUFFLE_JOINT),
            ),
        };
        let obj = JointObjective {
            ctx: &ctx,
            x: x_train,
            y: y_train,
            val_x: x_val,
            val_truth: val.truth,
        };
        run_stage(&obj, &config.operator_opt, config.eval_every, "joint", &mut st, &mut |s| {
            if cadence > 0 && s.epoch % cadence == 0 {
                let mut ck = base(Phase::Joint);
                s.save(&mut ck, "joint");
                hook(&ck)?;
            }
            Ok(())
        })?;
        let Joint { operator, head } = st.best;
        let model = TrainedModel {
            config: config.clone(),
            operator: OperatorModel { net: operator, ctx },
            head: Some(HeadModel { head, scaler: None }),
        };
        return Ok(TrainOutcome {
            model,
            operator_history: st.history,
            head_history: None,
            operator_val_mae: st.best_val,
            val_mae: st.best_val,
        });
    }

    // two-step: operator stage
    let (operator, op_history, op_val) = if phase == Phase::Operator {
        let mut st = match resume {
            Some(ck) => StageState::load(ck, "operator", &op_init)?,
            None => StageState::fresh(
                op_init,
                config.operator_opt.lr,
                rng::keyed(config.seed, SHUFFLE_OPERATOR),
            ),
        };
        let obj = OperatorObjective {
            ctx: &ctx,
            x: x_train.clone(),
            y: y_train,
            val_x: x_val.clone(),
            val_truth: val.truth.clone(),
        };
        run_stage(&obj, &config.operator_opt, config.eval_every, "operator", &mut st, &mut |s| {
            if cadence > 0 && s.epoch % cadence == 0 {
                let mut ck = base(Phase::Operator);
                s.save(&mut ck, "operator");
                hook(&ck)?;
            }
            Ok(())
        })?;
        (st.best, st.history, st.best_val)
    } else {
        let ck = resume.ok_or_else(|| Error::State("head phase without checkpoint".into()))?;
        let mut op = op_init;
        ck.load_params("stage1.operator", &mut op)?;
        (op, ck.history("stage1")?, ck.scalar("stage1.best_val")?)
    };

    let op_model = OperatorModel { net: operator, ctx };
    let Some(head_template) = head_init else {
        return Ok(TrainOutcome {
            model: TrainedModel {
                config: config.clone(),
                operator: op_model,
                head: None,
            },
            operator_history: op_history,
            head_history: None,
            operator_val_mae: op_val,
            val_mae: op_val,
        });
    };

    let stage1 = Stage1 {
        operator: op_model,
        history: op_history,
        best_val: op_val,
    };
    let resume = if phase == Phase::Head { resume } else { None };
    head_stage(config, &train, val, stage1, head_template, resume, hook)
}

/// A trained, frozen operator entering the head stage.
struct Stage1 {
    operator: OperatorModel,
    history: History,
    best_val: f64,
}

fn head_stage(
    config: &TrainingConfig,
    train: &SplitData,
    val: SplitData,
    stage1: Stage1,
    head_template: Head,
    resume: Option<&Checkpoint>,
    hook: &mut CheckpointHook<'_>,
) -> Result<TrainOutcome> {
    let Stage1 {
        operator: op_model,
        history: op_history,
        best_val: op_val,
    } = stage1;
    let (horizon, nx) = (op_model.ctx.horizon, op_model.ctx.nx);
    let op_train = chunked(&train.u0, nx, |c, b| op_model.predict_physical(c, b))?;
    let op_val_out = chunked(&val.u0, nx, |c, b| op_model.predict_physical(c, b))?;
    // one mean / std per grid point, pooled over samples and time rows
    let scaler = NormalizerState::fit(NormalizerKind::Standard, &op_train, nx)?;
    let obj = HeadObjective {
        horizon,
        features: horizon * nx,
        x: scaler.applied(&op_train),
        y: scaler.applied(&train.truth),
        val_x: scaler.applied(&op_val_out),
        val_truth: val.truth,
        scaler: scaler.clone(),
    };
    let mut st = match resume {
        Some(ck) => StageState::load(ck, "head", &head_template)?,
        None => StageState::fresh(
            head_template,
            config.head_opt.lr,
            rng::keyed(config.seed, SHUFFLE_HEAD),
        ),
    };
    let (hash, cadence) = (config.hash(), config.checkpoint_every);
    run_stage(&obj, &config.head_opt, config.eval_every, "head", &mut st, &mut |s| {
        if cadence > 0 && s.epoch % cadence == 0 {
            let mut ck = Checkpoint::new(hash);
            ck.push_scalar("state.phase", Phase::Head as u8 as f64);
            ck.push_params("stage1.operator", &op_model.net);
            ck.push_history("stage1", &op_history);
            ck.push_scalar("stage1.best_val", op_val);
            s.save(&mut ck, "head");
            hook(&ck)?;
        }
        Ok(())
    })?;
    let val_mae = st.best_val;
    Ok(TrainOutcome {
        model: TrainedModel {
            config: config.clone(),
            operator: op_model,
            head: Some(HeadModel {
                head: st.best,
                scaler: Some(scaler),
            }),
        },
        operator_history: op_history,
        head_history: Some(st.history),
        operator_val_mae: op_val,
        val_mae,
    })
}

/// Two-step stage 2 on an operator already trained by [`train_operator`]
/// with the same operator settings; equivalent to [`train_two_step`] but
/// lets several heads share one stage-1 run.
pub fn train_head(dataset: &Dataset, config: &TrainingConfig, operator: &TrainOutcome) -> Result<TrainOutcome> {
    let cfg = TrainingConfig {
        mode: TrainingMode::TwoStep,
        ..config.clone()
    };
    cfg.validate()?;
    let stage1_cfg = TrainingConfig {
        head: HeadKind::None,
        ..cfg.clone()
    };
    let trained = &operator.model.config;
    let comparable = TrainingConfig {
        head: HeadKind::None,
        mode: TrainingMode::TwoStep,
        head_hidden: stage1_cfg.head_hidden,
        head_opt: stage1_cfg.head_opt,
        ..trained.clone()
    };
    if operator.model.head.is_some() || comparable.hash() != stage1_cfg.hash() {
        return Err(Error::State("operator was trained with different settings".into()));
    }
    let nx = dataset.grid.nx;
    let head_template = cfg
        .head_spec(nx)
        .map(|s| Head::init(s, &mut rng::keyed(cfg.seed, INIT_HEAD)))
        .ok_or_else(|| Error::invalid("train_head needs a recurrent head"))?;
    let train = split_data(dataset, Split::Train, cfg.horizon);
    let val = split_data(dataset, Split::Val, cfg.horizon);
    let stage1 = Stage1 {
        operator: operator.model.operator.clone(),
        history: operator.operator_history.clone(),
        best_val: operator.operator_val_mae,
    };
    head_stage(&cfg, &train, val, stage1, head_template, None, &mut no_hook)
}

fn no_hook(_: &Checkpoint) -> Result<()> {
    Ok(())
}

/// Trains the operator alone, ignoring any head in `config`.
pub fn train_operator(dataset: &Dataset, config: &TrainingConfig) -> Result<TrainOutcome> {
    let cfg = TrainingConfig {
        head: HeadKind::None,
        mode: TrainingMode::TwoStep,
        ..config.clone()
    };
    train(dataset, &cfg, None, &mut no_hook)
}

pub fn train_two_step(dataset: &Dataset, config: &TrainingConfig) -> Result<TrainOutcome> {
    let cfg = TrainingConfig {
        mode: TrainingMode::TwoStep,
        ..config.clone()
    };
    train(dataset, &cfg, None, &mut no_hook)
}

pub fn train_simultaneous(dataset: &Dataset, config: &TrainingConfig) -> Result<TrainOutcome> {
    let cfg = TrainingConfig {
        mode: TrainingMode::Simultaneous,
        ..config.clone()
    };
    train(dataset, &cfg, None, &mut no_hook)
}

impl TrainedModel {
    /// Final-model checkpoint (phase `Done`).
    pub fn to_checkpoint(&self, histories: &[(&str, &History)]) -> Checkpoint {
        let mut ck = Checkpoint::new(self.config.hash());
        ck.push_scalar("state.phase", Phase::Done as u8 as f64);
        ck.push_params("operator", &self.operator.net);
        let ctx = &self.operator.ctx;
        ck.push_norm("norm.input", &ctx.input_norm);
        ck.push_norm("norm.coord", &ctx.coord_norm);
        ck.push_norm("norm.output", &ctx.output_norm);
        ck.push_vec("ctx.coords", ctx.coords.clone());
        if let Some(h) = &self.head {
            ck.push_params("head", &h.head);
            if let Some(s) = &h.scaler {
                ck.push_norm("norm.head", s);
            }
        }
        for (name, h) in histories {
            ck.push_history(name, h);
        }
        ck
    }

    pub fn from_checkpoint(config: &TrainingConfig, nx: usize, ck: &Checkpoint) -> Result<Self> {
        if ck.config_hash != config.hash() {
            return Err(Error::State(
                "checkpoint was written for a different configuration".into(),
            ));
        }
        if ck.phase()? != Phase::Done {
            return Err(Error::State("checkpoint holds an unfinished run".into()));
        }
        let mut scratch = rng::keyed(0, 0);
        let mut net = OperatorNet::init(config, nx, &mut scratch)?;
        ck.load_params("operator", &mut net)?;
        let ctx = OperatorContext {
            horizon: config.horizon,
            nx,
            input_norm: ck.norm("norm.input")?,
            coord_norm: ck.norm("norm.coord")?,
            output_norm: ck.norm("norm.output")?,
            coords: ck.vec("ctx.coords")?.to_vec(),
        };
        if ctx.output_norm.features() != config.horizon * nx || ctx.input_norm.features() != nx {
            return Err(Error::State("scaler sizes do not match the grid".into()));
        }
        let head = match config.head_spec(nx) {
            None => None,
            Some(spec) => {
                let mut head = Head::zeros(spec);
                ck.load_params("head", &mut head)?;
                let scaler = match config.mode {
                    TrainingMode::TwoStep => Some(ck.norm("norm.head")?),
                    TrainingMode::Simultaneous => None,
                };
                Some(HeadModel { head, scaler })
            }
        };
        Ok(Self {
            config: config.clone(),
            operator: OperatorModel { net, ctx },
            head,
        })
    }
}
