//! Run configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! num_clients = 10
//! strategy = fedlol
//! dataset = packed:data/train.bin
//! ```
//!
//! Unset keys keep their defaults (10 clients, 100 rounds, 3 local epochs,
//! learning rate 1e-4, batch size 16).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::{ChannelConfig, Fading};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::params::DEFAULT_BYTES_PER_ELEMENT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[default]
    FedLol,
    FedAvg,
    FedProx,
    Centralized,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fedlol" => Ok(Strategy::FedLol),
            "fedavg" => Ok(Strategy::FedAvg),
            "fedprox" => Ok(Strategy::FedProx),
            "centralized" => Ok(Strategy::Centralized),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected fedlol|fedavg|fedprox|centralized)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Strategy::FedLol => "fedlol",
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx => "fedprox",
            Strategy::Centralized => "centralized",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// Procedural gratings; see [`crate::data::synthetic_dataset`].
    Synthetic { classes: usize, per_class: usize },
    Packed(PathBuf),
    RawDir(PathBuf),
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "synthetic" {
            return Ok(DataSource::Synthetic {
                classes: 10,
                per_class: 200,
            });
        }
        match s.split_once(':') {
            Some(("packed", p)) => Ok(DataSource::Packed(PathBuf::from(p))),
            Some(("raw-dir", p)) => Ok(DataSource::RawDir(PathBuf::from(p))),
            _ => Err(Error::Config(format!(
                "dataset must be synthetic, packed:<path> or raw-dir:<path>, got `{s}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub num_clients: usize,
    pub global_rounds: u32,
    pub local_epochs: u32,
    /// Channel-group synchronisation interval `P`.
    pub update_interval: u32,
    pub lr: f64,
    pub batch_size: usize,
    pub strategy: Strategy,
    pub fedprox_mu: f64,
    pub partial_update: bool,
    pub seed: u64,
    pub alpha: f64,
    pub channel: ChannelConfig,
    pub model: ModelSpec,
    pub data: DataSource,
    pub eval_samples: usize,
    pub eval_interval: u32,
    pub checkpoint_interval: u32,
    pub bytes_per_element: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            num_clients: 10,
            global_rounds: 100,
            local_epochs: 3,
            update_interval: 5,
            lr: 1e-4,
            batch_size: 16,
            strategy: Strategy::FedLol,
            fedprox_mu: 0.1,
            partial_update: true,
            seed: 0,
            alpha: 0.5,
            channel: ChannelConfig {
                snr_db: 10.0,
                fading: Fading::None,
            },
            model: ModelSpec::standard(),
            data: DataSource::Synthetic {
                classes: 10,
                per_class: 200,
            },
            eval_samples: 100,
            eval_interval: 1,
            checkpoint_interval: 0,
            bytes_per_element: DEFAULT_BYTES_PER_ELEMENT,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_clients < 2 {
            return fail(format!("num_clients must be at least 2, got {}", self.num_clients));
        }
        if self.global_rounds < 1 || self.local_epochs < 1 || self.update_interval < 1 {
            return fail("global_rounds, local_epochs and update_interval must be at least 1".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return fail(format!("lr must be finite and non-negative, got {}", self.lr));
        }
        if !(self.fedprox_mu >= 0.0 && self.fedprox_mu.is_finite()) {
            return fail(format!("fedprox_mu must be non-negative, got {}", self.fedprox_mu));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.batch_size == 0 || self.eval_interval == 0 || self.bytes_per_element == 0 {
            return fail("batch_size, eval_interval and bytes_per_element must be positive".into());
        }
        if !self.channel.snr_db.is_finite() {
            return fail("snr_train_db must be finite".into());
        }
        if let DataSource::Synthetic { classes, per_class } = self.data {
            if classes == 0 || per_class == 0 {
                return fail("synthetic dataset needs classes and per_class above zero".into());
            }
        }
        self.model.validate()
    }

    /// Label used in report rows, e.g. `fedlol/partial`.
    pub fn strategy_label(&self) -> String {
        match self.strategy {
            Strategy::Centralized => "centralized".into(),
            s if self.partial_update => format!("{s}/partial"),
            s => format!("{s}/full"),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::ConfigLine {
            path: path.to_path_buf(),
            line: 0,
            message: format!("cannot read config: {e}"),
        })?;
        Self::parse(&text, path)
    }

    /// Parses config text; errors name the offending line.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |message: String| Error::ConfigLine {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }

        let mut cfg = RunConfig::default();
        // presets first so that explicit architecture keys override them
        entries.sort_by_key(|(_, k, _)| k != "model");
        for (line, key, value) in &entries {
            cfg.set(key, value).map_err(|e| Error::ConfigLine {
                path: origin.to_path_buf(),
                line: *line,
                message: match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                },
            })?;
        }
        cfg.validate().map_err(|e| Error::ConfigLine {
            path: origin.to_path_buf(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
        }
        match key {
            "num_clients" => self.num_clients = num(key, value)?,
            "global_rounds" => self.global_rounds = num(key, value)?,
            "local_epochs" => self.local_epochs = num(key, value)?,
            "update_interval" => self.update_interval = num(key, value)?,
            "lr" => self.lr = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "strategy" => self.strategy = value.parse()?,
            "fedprox_mu" => self.fedprox_mu = num(key, value)?,
            "partial_update" => self.partial_update = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "snr_train_db" => self.channel.snr_db = num(key, value)?,
            "fading" => self.channel.fading = value.parse()?,
            "dataset" => {
                let keep = match (&self.data, value.parse::<DataSource>()?) {
                    (DataSource::Synthetic { classes, per_class }, DataSource::Synthetic { .. }) => {
                        DataSource::Synthetic {
                            classes: *classes,
                            per_class: *per_class,
                        }
                    }
                    (_, other) => other,
                };
                self.data = keep;
            }
            "synthetic_classes" | "synthetic_per_class" => {
                let n: usize = num(key, value)?;
                let (mut classes, mut per_class) = match self.data {
                    DataSource::Synthetic { classes, per_class } => (classes, per_class),
                    _ => (10, 200),
                };
                if key == "synthetic_classes" {
                    classes = n;
                } else {
                    per_class = n;
                }
                if matches!(self.data, DataSource::Synthetic { .. }) {
                    self.data = DataSource::Synthetic { classes, per_class };
                }
            }
            "eval_samples" => self.eval_samples = num(key, value)?,
            "eval_interval" => self.eval_interval = num(key, value)?,
            "checkpoint_interval" => self.checkpoint_interval = num(key, value)?,
            "bytes_per_element" => self.bytes_per_element = num(key, value)?,
            "model" => {
                self.model = match value {
                    "standard" => ModelSpec::standard(),
                    "tiny" => ModelSpec::tiny(),
                    "micro" => ModelSpec::micro(),
                    other => {
                        return Err(Error::Config(format!(
                            "unknown model preset `{other}` (expected standard|tiny|micro)"
                        )))
                    }
                }
            }
            "image_shape" => {
                let dims: Vec<usize> = value
                    .split('x')
                    .map(|d| num(key, d.trim()))
                    .collect::<Result<_>>()?;
                match dims[..] {
                    [c, h, w] => self.model.image_shape = (c, h, w),
                    _ => return Err(Error::Config(format!("image_shape must be CxHxW, got `{value}`"))),
                }
            }
            "patch" => self.model.patch = num(key, value)?,
            "semantic_hidden" => self.model.semantic_hidden = num(key, value)?,
            "feature_dim" => self.model.feature_dim = num(key, value)?,
            "symbol_dim" => self.model.symbol_dim = num(key, value)?,
            "channel_width" => self.model.channel_width = num(key, value)?,
            "channel_layers" => self.model.channel_layers = num(key, value)?,
            "snr_width" => self.model.snr_width = num(key, value)?,
            "bias" => self.model.bias = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table() {
        let c = RunConfig::default();
        assert_eq!(c.num_clients, 10);
        assert_eq!(c.global_rounds, 100);
        assert_eq!(c.local_epochs, 3);
        assert_eq!(c.lr, 1e-4);
        assert_eq!(c.batch_size, 16);
        assert_eq!(c.update_interval, 5);
        assert_eq!(c.model.compression_ratio(), 1.0 / 16.0);
        c.validate().unwrap();
    }

    #[test]
    fn parse_overrides_and_presets() {
        let text = "symbol_dim = 24 # fewer symbols\nmodel = tiny\nstrategy=fedavg\npartial_update = false\n\nfading = rayleigh\nsynthetic_per_class = 20\n";
        let c = RunConfig::parse(text, Path::new("x.cfg")).unwrap();
        assert_eq!(c.model.symbol_dim, 24);
        assert_eq!(c.model.image_shape, (3, 16, 16));
        assert_eq!(c.strategy, Strategy::FedAvg);
        assert!(!c.partial_update);
        assert_eq!(c.channel.fading, Fading::Rayleigh);
        assert_eq!(c.data, DataSource::Synthetic { classes: 10, per_class: 20 });
        assert_eq!(c.strategy_label(), "fedavg/full");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("seed = 1\n\nlr = fast\n", Path::new("a.cfg")).unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 3, .. }), "{err}");
        assert_eq!(err.to_string(), "a.cfg:3: invalid value `fast` for `lr`");
        let err = RunConfig::parse("no equals sign", Path::new("a.cfg")).unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 1, .. }));
        let err = RunConfig::parse("\nbogus = 1", Path::new("a.cfg")).unwrap_err();
        assert!(matches!(err, Error::ConfigLine { line: 2, .. }));
        assert!(RunConfig::parse("num_clients = 1", Path::new("a.cfg")).is_err());
    }

    #[test]
    fn dataset_sources() {
        assert_eq!(
            "packed:/tmp/x.bin".parse::<DataSource>().unwrap(),
            DataSource::Packed("/tmp/x.bin".into())
        );
        assert!("zip:/x".parse::<DataSource>().is_err());
    }
}
