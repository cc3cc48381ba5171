use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::deeponet::{DeepOnetSpec, MlpSpec};
use crate::fno::FnoSpec;
use crate::params::Fnv;
use crate::rnn::{CellKind, HeadSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OperatorKind {
    #[cfg_attr(feature = "serde", serde(rename = "deeponet"))]
    DeepOnet,
    Fno,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HeadKind {
    None,
    Rnn,
    Gru,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TrainingMode {
    TwoStep,
    Simultaneous,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::DeepOnet => "deeponet",
            OperatorKind::Fno => "fno",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "deeponet" | "don" => Some(OperatorKind::DeepOnet),
            "fno" => Some(OperatorKind::Fno),
            _ => None,
        }
    }
}

impl HeadKind {
    pub fn cell(self) -> Option<CellKind> {
        match self {
            HeadKind::None => None,
            HeadKind::Rnn => Some(CellKind::Simple),
            HeadKind::Gru => Some(CellKind::Gru),
            HeadKind::Lstm => Some(CellKind::Lstm),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeadKind::None => "none",
            HeadKind::Rnn => "rnn",
            HeadKind::Gru => "gru",
            HeadKind::Lstm => "lstm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(HeadKind::None),
            "rnn" => Some(HeadKind::Rnn),
            "gru" => Some(HeadKind::Gru),
            "lstm" => Some(HeadKind::Lstm),
            _ => None,
        }
    }
}

impl TrainingMode {
    pub fn name(self) -> &'static str {
        match self {
            TrainingMode::TwoStep => "two_step",
            TrainingMode::Simultaneous => "simultaneous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "two_step" | "two-step" => Some(TrainingMode::TwoStep),
            "simultaneous" => Some(TrainingMode::Simultaneous),
            _ => None,
        }
    }
}

/// Hidden widths of the branch and trunk networks and the shared latent
/// width. Branch: swish hidden layers, linear output. Trunk: swish hidden
/// layers except the last, then two linear layers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeepOnetArch {
    pub branch_hidden: Vec<usize>,
    pub trunk_hidden: Vec<usize>,
    pub latent: usize,
}

impl DeepOnetArch {
    pub fn full() -> Self {
        Self {
            branch_hidden: vec![150, 250, 450, 380, 320],
            trunk_hidden: vec![200, 220, 240, 250, 260, 280],
            latent: 300,
        }
    }

    pub fn desk() -> Self {
        Self {
            branch_hidden: vec![64, 64],
            trunk_hidden: vec![64, 64, 64],
            latent: 64,
        }
    }

    pub fn spec(&self, nx: usize) -> DeepOnetSpec {
        let mut b = vec![nx];
        b.extend(&self.branch_hidden);
        b.push(self.latent);
        let mut t = vec![2];
        t.extend(&self.trunk_hidden);
        t.push(self.latent);
        DeepOnetSpec {
            branch: MlpSpec::swish_with_linear_tail(b, 1),
            trunk: MlpSpec::swish_with_linear_tail(t, 2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OptimConfig {
    pub batch_size: usize,
    pub lr: f64,
    /// Epochs between learning-rate decays; 0 disables the schedule.
    pub step_size: usize,
    pub decay: f64,
    pub epochs: usize,
}

impl OptimConfig {
    fn validate(&self, what: &str) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::invalid(format!(
                "{what}: batch size and epochs must be positive"
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("{what}: learning rate must be positive")));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid(format!("{what}: decay factor must lie in (0, 1]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingConfig {
    pub mode: TrainingMode,
    pub operator: OperatorKind,
    pub head: HeadKind,
    /// Predicted rows after the initial condition.
    pub horizon: usize,
    pub seed: u64,
    pub deeponet: DeepOnetArch,
    pub fno: FnoSpec,
    pub head_hidden: usize,
    /// Operator stage (and the joint stage in simultaneous mode).
    pub operator_opt: OptimConfig,
    /// Head stage of two-step training.
    pub head_opt: OptimConfig,
    /// Validation cadence in epochs; the last epoch is always validated.
    pub eval_every: usize,
    /// Checkpoint cadence in epochs; 0 disables intermediate checkpoints.
    pub checkpoint_every: usize,
}

impl TrainingConfig {
    /// Full-size architecture and optimiser settings.
    pub fn full(operator: OperatorKind, head: HeadKind, mode: TrainingMode) -> Self {
        let operator_opt = match operator {
            OperatorKind::DeepOnet => OptimConfig {
                batch_size: 256,
                lr: 1e-4,
                step_size: 0,
                decay: 1.0,
                epochs: 40_000,
            },
            OperatorKind::Fno => OptimConfig {
                batch_size: 50,
                lr: 1e-3,
                step_size: 100,
                decay: 0.5,
                epochs: 1_000,
            },
        };
        Self {
            mode,
            operator,
            head,
            horizon: 200,
            seed: 0,
            deeponet: DeepOnetArch::full(),
            fno: FnoSpec::full(),
            head_hidden: 200,
            operator_opt,
            head_opt: OptimConfig {
                epochs: 10_000,
                ..operator_opt
            },
            eval_every: 1,
            checkpoint_every: 0,
        }
    }

    /// Reduced widths and budgets that train on a single CPU core: on
    /// N = 500 an FNO run takes about 12 minutes, a head about 4.
    pub fn desk(operator: OperatorKind, head: HeadKind, mode: TrainingMode) -> Self {
        let operator_opt = match operator {
            OperatorKind::DeepOnet => OptimConfig {
                batch_size: 32,
                lr: 1e-3,
                step_size: 500,
                decay: 0.5,
                epochs: 2_000,
            },
            OperatorKind::Fno => OptimConfig {
                batch_size: 5,
                lr: 2e-3,
                step_size: 100,
                decay: 0.5,
                epochs: 150,
            },
        };
        Self {
            mode,
            operator,
            head,
            horizon: 200,
            seed: 0,
            deeponet: DeepOnetArch::desk(),
            fno: FnoSpec {
                width: 8,
                n_layers: 4,
                modes_t: 8,
                modes_x: 8,
                pad_t: 9,
                pad_x: 9,
                projection: 32,
            },
            head_hidden: 64,
            operator_opt,
            head_opt: OptimConfig {
                batch_size: 32,
                lr: 2e-3,
                step_size: 100,
                decay: 0.5,
                epochs: 200,
            },
            eval_every: 10,
            checkpoint_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::invalid("horizon must be positive"));
        }
        if self.mode == TrainingMode::Simultaneous && self.head == HeadKind::None {
            return Err(Error::invalid("simultaneous training needs a recurrent head"));
        }
        if self.eval_every == 0 {
            return Err(Error::invalid("validation cadence must be positive"));
        }
        if self.head != HeadKind::None && self.head_hidden == 0 {
            return Err(Error::invalid("head hidden size must be positive"));
        }
        self.operator_opt.validate("operator")?;
        if self.mode == TrainingMode::TwoStep && self.head != HeadKind::None {
            self.head_opt.validate("head")?;
        }
        Ok(())
    }

    pub fn head_spec(&self, nx: usize) -> Option<HeadSpec> {
        self.head.cell().map(|cell| HeadSpec {
            cell,
            hidden: self.head_hidden,
            width: nx,
        })
    }

    /// Short identifier such as `fno+lstm` or `deeponet`.
    pub fn model_id(&self) -> alloc::string::String {
        match (self.head, self.mode) {
            (HeadKind::None, _) => self.operator.name().into(),
            (h, TrainingMode::TwoStep) => format!("{}+{}", self.operator.name(), h.name()),
            (h, TrainingMode::Simultaneous) => {
                format!("{}+{}-sim", self.operator.name(), h.name())
            }
        }
    }

    /// Identity of everything a checkpoint depends on; epoch budgets and
    /// cadences are excluded so that runs can be extended on resume.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv::new();
        let opt = |o: &OptimConfig| format!("{}|{:?}|{}|{:?}", o.batch_size, o.lr, o.step_size, o.decay);
        let key = format!(
            "{:?}|{:?}|{:?}|{}|{}|{:?}|{:?}|{}|{}|{}",
            self.mode,
            self.operator,
            self.head,
            self.horizon,
            self.seed,
            self.deeponet,
            self.fno,
            self.head_hidden,
            opt(&self.operator_opt),
            opt(&self.head_opt),
        );
        h.bytes(key.as_bytes());
        h.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_presets() {
        let d = TrainingConfig::full(OperatorKind::DeepOnet, HeadKind::None, TrainingMode::TwoStep);
        assert_eq!((d.operator_opt.batch_size, d.operator_opt.lr), (256, 1e-4));
        assert_eq!(d.deeponet.spec(50).branch.parameter_count(), 547_950);
        assert_eq!(d.deeponet.spec(50).trunk.parameter_count(), 380_750);
        let f = TrainingConfig::full(OperatorKind::Fno, HeadKind::Lstm, TrainingMode::TwoStep);
        assert_eq!(
            (f.operator_opt.batch_size, f.operator_opt.lr, f.operator_opt.step_size),
            (50, 1e-3, 100)
        );
        assert_eq!(f.head_spec(50).unwrap().parameter_count(), 210_850);
    }

    #[test]
    fn validation() {
        let mut c = TrainingConfig::desk(OperatorKind::Fno, HeadKind::None, TrainingMode::Simultaneous);
        assert!(c.validate().is_err());
        c.mode = TrainingMode::TwoStep;
        assert!(c.validate().is_ok());
        c.operator_opt.lr = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn hash_ignores_budgets() {
        let a = TrainingConfig::desk(OperatorKind::Fno, HeadKind::Gru, TrainingMode::TwoStep);
        let mut b = a.clone();
        b.operator_opt.epochs += 10;
        b.checkpoint_every = 3;
        assert_eq!(a.hash(), b.hash());
        b.fno.width += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
