//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment and blank lines are ignored.
//! Every key is optional and unknown keys are rejected. Lists are comma
//! separated. The canonical rendering written next to every output lists all
//! keys with their resolved values, and its SHA-256 is the config hash.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `domain` | `binpack` | `gmm`, `binpack` or `reconfig` |
//! | `seed` | `0` | master seed for every random stream |
//! | `method` | `gandi` | training method for `train`: `gan` or `gandi` |
//! | `collect.episodes` | `50` | solved episodes to collect |
//! | `collect.max_attempts` | `1000` | instances tried before giving up |
//! | `collect.expansions` | `200` | planner budget while collecting |
//! | `planner.k` | `3` | actions sampled per expansion |
//! | `planner.expansions` | `8` | planner budget for validation and evaluation |
//! | `train.episodes` | `20` | training-episode counts to sweep |
//! | `train.epochs` | `500` | adversarial training epochs |
//! | `train.batch_size` | `32` | mini-batch size |
//! | `train.checkpoint_every` | `50` | checkpoint period in epochs |
//! | `train.d_learning_rate` | `0.001` | discriminator Adam step |
//! | `train.g_learning_rate` | `0.001` | generator Adam step |
//! | `train.adam_beta1` | `0.5` | Adam first-moment decay for both networks |
//! | `train.noise_dim` | `4` | generator noise dimension |
//! | `train.validation_instances` | `10` | instances for checkpoint selection |
//! | `importance.model` | `network` | `network` or `tabular` |
//! | `importance.epochs` | `200` | ratio network epochs |
//! | `importance.batch_size` | `32` | ratio network mini-batch size |
//! | `importance.learning_rate` | `1.0` | ratio network Adadelta step |
//! | `importance.holdout` | `0.2` | fraction held out to pick the ratio network epoch |
//! | `importance.bins` | `20` | bins per dimension for the tabular model |
//! | `bootstrap.size` | `0` | bootstrap draws; `0` means the merged dataset size |
//! | `eval.samplers` | `uniform,gan,gandi` | samplers to evaluate |
//! | `eval.trials` | `100` | test instances per sampler and episode count |
//! | `binpack.*` | see [`BinPackConfig`] | `depth`, `width`, `access` (`straight` or `fixed_base`), `base_y`, `clearance`, `min_objects`, `max_objects`, `min_size`, `max_size`, `progress_feature` |
//! | `reconfig.*` | see [`ReconfigConfig`] | `depth`, `width`, `n_movable`, `movable_size`, `target_size`, `clearance`, `initial_blockers` |
//! | `verify.instances` | `1000` | random instances per bound |
//! | `verify.lemma_instances` | `100` | instances for the discriminator check |
//! | `toy.on_target` | `200` | toy samples from `p` |
//! | `toy.off_target` | `2000` | toy samples from `q` |
//! | `toy.generated` | `10000` | generator samples drawn after training |
//! | `toy.grid` | `60` | density grid resolution |

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::adversarial::TrainConfig;
use crate::domains::{AccessModel, BinPackConfig, DomainKind, ReconfigConfig};
use crate::{Error, Result};

use super::io::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Gan,
    Gandi,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Gan => "gan",
            Method::Gandi => "gandi",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(Method::Gan),
            "gandi" => Ok(Method::Gandi),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// An action sampler under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerTag {
    Uniform,
    Learned(Method),
}

impl SamplerTag {
    pub fn tag(self) -> &'static str {
        match self {
            SamplerTag::Uniform => "uniform",
            SamplerTag::Learned(m) => m.tag(),
        }
    }
}

impl FromStr for SamplerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            Ok(SamplerTag::Uniform)
        } else {
            s.parse().map(SamplerTag::Learned).map_err(|_| Error::InvalidConfig(format!("unknown sampler '{s}'")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImportanceKind {
    Network,
    Tabular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub seed: u64,
    pub method: Method,
    pub collect_episodes: usize,
    pub collect_max_attempts: usize,
    pub collect_expansions: usize,
    pub k: usize,
    pub expansions: usize,
    pub train_episodes: Vec<usize>,
    pub train: TrainConfig,
    pub validation_instances: usize,
    pub importance: ImportanceKind,
    pub importance_epochs: usize,
    pub importance_batch_size: usize,
    pub importance_learning_rate: f64,
    pub importance_holdout: f64,
    pub importance_bins: usize,
    pub bootstrap_size: usize,
    pub samplers: Vec<SamplerTag>,
    pub eval_trials: usize,
    pub binpack: BinPackConfig,
    pub reconfig: ReconfigConfig,
    pub verify_instances: usize,
    pub lemma_instances: usize,
    pub toy_on_target: usize,
    pub toy_off_target: usize,
    pub toy_generated: usize,
    pub toy_grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainKind::BinPack,
            seed: 0,
            method: Method::Gandi,
            collect_episodes: 50,
            collect_max_attempts: 1000,
            collect_expansions: 200,
            k: 3,
            expansions: 8,
            train_episodes: vec![20],
            train: TrainConfig::default(),
            validation_instances: 10,
            importance: ImportanceKind::Network,
            importance_epochs: 200,
            importance_batch_size: 32,
            importance_learning_rate: 1.0,
            importance_holdout: 0.2,
            importance_bins: 20,
            bootstrap_size: 0,
            samplers: vec![SamplerTag::Uniform, SamplerTag::Learned(Method::Gan), SamplerTag::Learned(Method::Gandi)],
            eval_trials: 100,
            binpack: BinPackConfig::default(),
            reconfig: ReconfigConfig::default(),
            verify_instances: 1000,
            lemma_instances: 100,
            toy_on_target: 200,
            toy_off_target: 2000,
            toy_generated: 10_000,
            toy_grid: 60,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig(format!("bad value '{value}' for '{key}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("bad boolean '{value}' for '{key}'"))),
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected 'key = value'", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::InvalidConfig(format!("line {}: duplicate key '{key}'", n + 1)));
            }
        }
        let mut cfg = Self::default();
        // The default entry point of the fixed-base model depends on the width.
        let late = ["binpack.access", "binpack.base_y"];
        let (last, first): (Vec<_>, Vec<_>) = entries.iter().partition(|(k, _)| late.contains(&k.as_str()));
        for (key, value) in first.into_iter().chain(last) {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "domain" => self.domain = v.parse()?,
            "seed" => self.seed = parse_value(key, v)?,
            "method" => self.method = v.parse()?,
            "collect.episodes" => self.collect_episodes = parse_value(key, v)?,
            "collect.max_attempts" => self.collect_max_attempts = parse_value(key, v)?,
            "collect.expansions" => self.collect_expansions = parse_value(key, v)?,
            "planner.k" => self.k = parse_value(key, v)?,
            "planner.expansions" => self.expansions = parse_value(key, v)?,
            "train.episodes" => self.train_episodes = parse_list(key, v)?,
            "train.epochs" => self.train.max_epochs = parse_value(key, v)?,
            "train.batch_size" => self.train.batch_size = parse_value(key, v)?,
            "train.checkpoint_every" => self.train.checkpoint_every = parse_value(key, v)?,
            "train.d_learning_rate" => self.train.d_learning_rate = parse_value(key, v)?,
            "train.g_learning_rate" => self.train.g_learning_rate = parse_value(key, v)?,
            "train.adam_beta1" => self.train.adam_beta1 = parse_value(key, v)?,
            "train.noise_dim" => self.train.noise_dim = parse_value(key, v)?,
            "train.validation_instances" => self.validation_instances = parse_value(key, v)?,
            "importance.model" => {
                self.importance = match v {
                    "network" => ImportanceKind::Network,
                    "tabular" => ImportanceKind::Tabular,
                    _ => return Err(Error::InvalidConfig(format!("unknown importance model '{v}'"))),
                }
            }
            "importance.epochs" => self.importance_epochs = parse_value(key, v)?,
            "importance.batch_size" => self.importance_batch_size = parse_value(key, v)?,
            "importance.learning_rate" => self.importance_learning_rate = parse_value(key, v)?,
            "importance.holdout" => self.importance_holdout = parse_value(key, v)?,
            "importance.bins" => self.importance_bins = parse_value(key, v)?,
            "bootstrap.size" => self.bootstrap_size = parse_value(key, v)?,
            "eval.samplers" => self.samplers = parse_list(key, v)?,
            "eval.trials" => self.eval_trials = parse_value(key, v)?,
            "binpack.depth" => self.binpack.depth = parse_value(key, v)?,
            "binpack.width" => self.binpack.width = parse_value(key, v)?,
            "binpack.access" => {
                self.binpack.access = match v {
                    "straight" => AccessModel::Straight,
                    "fixed_base" => AccessModel::FixedBase { base: [0.0, self.binpack.width / 2.0] },
                    _ => return Err(Error::InvalidConfig(format!("unknown access model '{v}'"))),
                }
            }
            "binpack.base_y" => {
                let y = parse_value(key, v)?;
                self.binpack.access = AccessModel::FixedBase { base: [0.0, y] };
            }
            "binpack.clearance" => self.binpack.clearance = parse_value(key, v)?,
            "binpack.min_objects" => self.binpack.min_objects = parse_value(key, v)?,
            "binpack.max_objects" => self.binpack.max_objects = parse_value(key, v)?,
            "binpack.min_size" => self.binpack.min_size = parse_value(key, v)?,
            "binpack.max_size" => self.binpack.max_size = parse_value(key, v)?,
            "binpack.progress_feature" => self.binpack.progress_feature = parse_bool(key, v)?,
            "reconfig.depth" => self.reconfig.depth = parse_value(key, v)?,
            "reconfig.width" => self.reconfig.width = parse_value(key, v)?,
            "reconfig.n_movable" => self.reconfig.n_movable = parse_value(key, v)?,
            "reconfig.movable_size" => self.reconfig.movable_size = parse_value(key, v)?,
            "reconfig.target_size" => self.reconfig.target_size = parse_value(key, v)?,
            "reconfig.clearance" => self.reconfig.clearance = parse_value(key, v)?,
            "reconfig.initial_blockers" => self.reconfig.initial_blockers = parse_value(key, v)?,
            "verify.instances" => self.verify_instances = parse_value(key, v)?,
            "verify.lemma_instances" => self.lemma_instances = parse_value(key, v)?,
            "toy.on_target" => self.toy_on_target = parse_value(key, v)?,
            "toy.off_target" => self.toy_off_target = parse_value(key, v)?,
            "toy.generated" => self.toy_generated = parse_value(key, v)?,
            "toy.grid" => self.toy_grid = parse_value(key, v)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("collect.episodes", self.collect_episodes),
            ("collect.max_attempts", self.collect_max_attempts),
            ("collect.expansions", self.collect_expansions),
            ("planner.k", self.k),
            ("planner.expansions", self.expansions),
            ("train.validation_instances", self.validation_instances),
            ("importance.epochs", self.importance_epochs),
            ("importance.batch_size", self.importance_batch_size),
            ("importance.bins", self.importance_bins),
            ("eval.trials", self.eval_trials),
            ("verify.instances", self.verify_instances),
            ("verify.lemma_instances", self.lemma_instances),
            ("toy.on_target", self.toy_on_target),
            ("toy.off_target", self.toy_off_target),
            ("toy.generated", self.toy_generated),
            ("toy.grid", self.toy_grid),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("'{k}' must be at least 1")));
        }
        if self.train_episodes.is_empty() || self.train_episodes.contains(&0) {
            return Err(Error::InvalidConfig("'train.episodes' needs positive counts".into()));
        }
        if self.samplers.is_empty() {
            return Err(Error::InvalidConfig("'eval.samplers' is empty".into()));
        }
        if self.importance_learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("'importance.learning_rate' must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.importance_holdout) {
            return Err(Error::InvalidConfig("'importance.holdout' must lie in [0, 1)".into()));
        }
        self.train.validate()?;
        self.binpack.validate()?;
        self.reconfig.validate()
    }

    /// Largest training-episode count in the sweep.
    pub fn max_train_episodes(&self) -> usize {
        self.train_episodes.iter().copied().max().unwrap_or(0)
    }

    /// Every key with its resolved value, one per line, in a fixed order.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let b = &self.binpack;
        let r = &self.reconfig;
        let t = &self.train;
        let (access, base_y) = match b.access {
            AccessModel::Straight => ("straight", None),
            AccessModel::FixedBase { base } => ("fixed_base", Some(base[1])),
        };
        let importance = match self.importance {
            ImportanceKind::Network => "network",
            ImportanceKind::Tabular => "tabular",
        };
        let samplers: Vec<&str> = self.samplers.iter().map(|s| s.tag()).collect();
        let mut rows: Vec<(&str, String)> = vec![
            ("domain", self.domain.to_string()),
            ("seed", self.seed.to_string()),
            ("method", self.method.to_string()),
            ("collect.episodes", self.collect_episodes.to_string()),
            ("collect.max_attempts", self.collect_max_attempts.to_string()),
            ("collect.expansions", self.collect_expansions.to_string()),
            ("planner.k", self.k.to_string()),
            ("planner.expansions", self.expansions.to_string()),
            ("train.episodes", join(&self.train_episodes)),
            ("train.epochs", t.max_epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.checkpoint_every", t.checkpoint_every.to_string()),
            ("train.d_learning_rate", t.d_learning_rate.to_string()),
            ("train.g_learning_rate", t.g_learning_rate.to_string()),
            ("train.adam_beta1", t.adam_beta1.to_string()),
            ("train.noise_dim", t.noise_dim.to_string()),
            ("train.validation_instances", self.validation_instances.to_string()),
            ("importance.model", importance.to_string()),
            ("importance.epochs", self.importance_epochs.to_string()),
            ("importance.batch_size", self.importance_batch_size.to_string()),
            ("importance.learning_rate", self.importance_learning_rate.to_string()),
            ("importance.holdout", self.importance_holdout.to_string()),
            ("importance.bins", self.importance_bins.to_string()),
            ("bootstrap.size", self.bootstrap_size.to_string()),
            ("eval.samplers", samplers.join(",")),
            ("eval.trials", self.eval_trials.to_string()),
            ("binpack.depth", b.depth.to_string()),
            ("binpack.width", b.width.to_string()),
            ("binpack.access", access.to_string()),
        ];
        if let Some(y) = base_y {
            rows.push(("binpack.base_y", y.to_string()));
        }
        rows.extend([
            ("binpack.clearance", b.clearance.to_string()),
            ("binpack.min_objects", b.min_objects.to_string()),
            ("binpack.max_objects", b.max_objects.to_string()),
            ("binpack.min_size", b.min_size.to_string()),
            ("binpack.max_size", b.max_size.to_string()),
            ("binpack.progress_feature", b.progress_feature.to_string()),
            ("reconfig.depth", r.depth.to_string()),
            ("reconfig.width", r.width.to_string()),
            ("reconfig.n_movable", r.n_movable.to_string()),
            ("reconfig.movable_size", r.movable_size.to_string()),
            ("reconfig.target_size", r.target_size.to_string()),
            ("reconfig.clearance", r.clearance.to_string()),
            ("reconfig.initial_blockers", r.initial_blockers.to_string()),
            ("verify.instances", self.verify_instances.to_string()),
            ("verify.lemma_instances", self.lemma_instances.to_string()),
            ("toy.on_target", self.toy_on_target.to_string()),
            ("toy.off_target", self.toy_off_target.to_string()),
            ("toy.generated", self.toy_generated.to_string()),
            ("toy.grid", self.toy_grid.to_string()),
        ]);
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// SHA-256 of the canonical text, in hex.
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_text().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_text_round_trips() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("binpack.base_y", "0.4").unwrap();
        cfg.set("train.episodes", "10, 20,35").unwrap();
        cfg.set("eval.samplers", "gandi,uniform").unwrap();
        let again = ExperimentConfig::parse(&cfg.canonical_text()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn comments_blanks_and_errors() {
        let cfg = ExperimentConfig::parse("# header\n\nseed = 7  # trailing\ndomain = reconfig\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.domain, DomainKind::Reconfig);
        assert!(ExperimentConfig::parse("bogus = 1").is_err());
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(ExperimentConfig::parse("seed").is_err());
        assert!(ExperimentConfig::parse("eval.trials = 0").is_err());
        assert!(ExperimentConfig::parse("train.episodes = 10,0").is_err());
        assert!(ExperimentConfig::parse("eval.samplers = uniform,vae").is_err());
    }

    #[test]
    fn hash_tracks_every_value() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
