//! Training configuration: preset, then a partial TOML file, then
//! command-line overrides.

use kdvnet_core::training::{HeadKind, OperatorKind, TrainingConfig, TrainingMode};
use toml::{Table, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    /// Reduced widths and budgets for a single CPU.
    #[default]
    Desk,
    /// Full-size widths and optimiser settings.
    Full,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Preset::Desk),
            "full" => Some(Preset::Full),
            _ => None,
        }
    }

    pub fn build(self, operator: OperatorKind, head: HeadKind, mode: TrainingMode) -> TrainingConfig {
        match self {
            Preset::Desk => TrainingConfig::desk(operator, head, mode),
            Preset::Full => TrainingConfig::full(operator, head, mode),
        }
    }
}

/// Flag-level overrides; `None` keeps the preset or file value. `set`
/// holds `dotted.key=value` pairs applied last.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub operator: Option<OperatorKind>,
    pub head: Option<HeadKind>,
    pub mode: Option<TrainingMode>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub head_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub checkpoint_every: Option<usize>,
    pub set: Vec<String>,
}

fn to_table(config: &TrainingConfig) -> Result<Table> {
    Table::try_from(config).map_err(|e| Error::Config(e.to_string()))
}

/// Copies `over` into `base`, refusing keys `base` does not have.
fn merge(base: &mut Table, over: Table, path: &str) -> Result<()> {
    for (key, value) in over {
        let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        match (base.get_mut(&key), value) {
            (None, _) => return Err(Error::Config(format!("unknown key `{full}`"))),
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o, &full)?,
            (Some(slot), v) => *slot = v,
        }
    }
    Ok(())
}

fn kind_from_table<T>(table: &Table, key: &str, parse: fn(&str) -> Option<T>) -> Result<Option<T>> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => parse(s)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("`{key}`: unknown value `{s}`"))),
        Some(v) => Err(Error::Config(format!("`{key}` must be a string, got {v}"))),
    }
}

/// `a.b.c=value`, where `value` is parsed as a TOML value (bare words fall
/// back to strings).
fn parse_assignment(s: &str) -> Result<Table> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`{s}`: expected key=value")))?;
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.trim().to_string()),
    };
    let mut parts: Vec<&str> = key.trim().split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).ok_or_else(|| Error::Config(format!("`{s}`: empty key")))?;
    let mut table = Table::new();
    table.insert(last.to_string(), value);
    for p in parts.into_iter().rev() {
        let mut outer = Table::new();
        outer.insert(p.to_string(), Value::Table(table));
        table = outer;
    }
    Ok(table)
}

/// Resolves the final configuration. Kinds come from the flags, else the
/// file, else FNO / no head / two-step; the preset is built for those kinds
/// and the file and overrides are layered on top.
pub fn resolve(preset: Preset, file: Option<&str>, o: &Overrides) -> Result<TrainingConfig> {
    let file: Table = match file {
        Some(text) => text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?,
        None => Table::new(),
    };
    let operator = o
        .operator
        .or(kind_from_table(&file, "operator", OperatorKind::parse)?)
        .unwrap_or(OperatorKind::Fno);
    let head = o.head.or(kind_from_table(&file, "head", HeadKind::parse)?).unwrap_or(HeadKind::None);
    let mode = o
        .mode
        .or(kind_from_table(&file, "mode", TrainingMode::parse)?)
        .unwrap_or(TrainingMode::TwoStep);

    let mut table = to_table(&preset.build(operator, head, mode))?;
    merge(&mut table, file, "")?;
    let mut config: TrainingConfig = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config.operator = operator;
    config.head = head;
    config.mode = mode;
    if let Some(v) = o.horizon {
        config.horizon = v;
    }
    if let Some(v) = o.seed {
        // checkpoints embed the config as TOML, whose integers are i64
        if v > i64::MAX as u64 {
            return Err(Error::Config(format!("seed {v} exceeds {}", i64::MAX)));
        }
        config.seed = v;
    }
    if let Some(v) = o.epochs {
        config.operator_opt.epochs = v;
    }
    if let Some(v) = o.head_epochs {
        config.head_opt.epochs = v;
    }
    if let Some(v) = o.batch_size {
        config.operator_opt.batch_size = v;
    }
    if let Some(v) = o.lr {
        config.operator_opt.lr = v;
    }
    if let Some(v) = o.checkpoint_every {
        config.checkpoint_every = v;
    }
    if !o.set.is_empty() {
        let mut table = to_table(&config)?;
        for s in &o.set {
            merge(&mut table, parse_assignment(s)?, "")?;
        }
        config = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    }
    config.validate()?;
    Ok(config)
}

pub fn to_toml(config: &TrainingConfig) -> Result<String> {
    toml::to_string_pretty(config).map_err(|e| Error::Config(e.to_string()))
}
