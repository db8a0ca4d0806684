//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error. [`RunConfig::to_text`] writes every key with its effective value,
//! and reading that text back reproduces the same configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sadsp::analysis::AccumulationMode;
use sadsp::data::{Split, SyntheticConfig, WorldConfig};
use sadsp::eval::{BranchMask, GammaGrid, GammaWeights, SweepConfig};
use sadsp::model::ModelDims;
use sadsp::trainer::{Regime, TrainConfig};

use crate::CliError;

/// Which samples feed the attention analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnalysisSplit {
    Train,
    Test,
    All,
}

impl AnalysisSplit {
    fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
            Self::All => "all",
        }
    }

    pub fn includes(self, split: Split) -> bool {
        match self {
            Self::Train => split == Split::Train,
            Self::Test => split.is_test(),
            Self::All => true,
        }
    }
}

/// Every tunable of a run. Defaults are listed in [`RunConfig::default`] and
/// in the README.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Training seed (init and shuffling). Default 0.
    pub seed: u64,
    /// Synthetic data seed; `None` follows `seed`. Default `None`.
    pub data_seed: Option<u64>,
    /// Run directory. Default `out`.
    pub out: PathBuf,
    /// Feature file; `None` means `<out>/data.bin`.
    pub data: Option<PathBuf>,
    /// Checkpoint file; `None` means `<out>/checkpoint.bin`.
    pub checkpoint: Option<PathBuf>,

    pub synthetic: SyntheticConfig,
    pub world: WorldConfig,
    /// Hidden width of every head. Default 64.
    pub hidden: usize,

    pub train: TrainConfig,
    /// Include wall-clock seconds in the training log. Default false, which
    /// keeps the log byte-reproducible.
    pub log_seconds: bool,

    pub gamma: GammaWeights,
    pub mask: BranchMask,
    pub sweep: SweepConfig,
    pub gamma_grid: GammaGrid,

    pub accumulation: AccumulationMode,
    pub analysis_split: AnalysisSplit,
    pub top_k: usize,
    pub min_max: bool,
    pub probe_epochs: usize,
    pub probe_learning_rate: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data_seed: None,
            out: PathBuf::from("out"),
            data: None,
            checkpoint: None,
            synthetic: SyntheticConfig::default(),
            world: WorldConfig::default(),
            hidden: 64,
            train: TrainConfig::default(),
            log_seconds: false,
            gamma: GammaWeights::default(),
            mask: BranchMask::all(),
            sweep: SweepConfig::default(),
            gamma_grid: GammaGrid::default(),
            accumulation: AccumulationMode::Interleaved,
            analysis_split: AnalysisSplit::Train,
            top_k: 3,
            min_max: true,
            probe_epochs: 300,
            probe_learning_rate: 0.05,
        }
    }
}

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::Usage(format!("{key} = {value:?}: expected {expected}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str, expected: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, expected))
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value, "true or false")),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|v| num::<f64>(key, v.trim(), "a comma-separated list of numbers"))
        .collect()
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses a comma list of branch names into a mask; the empty string keeps
/// every branch.
pub fn parse_disable(value: &str) -> Result<BranchMask, CliError> {
    let names: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    BranchMask::disabling(&names).map_err(|e| CliError::Usage(e.to_string()))
}

impl RunConfig {
    pub fn data_path(&self) -> PathBuf {
        self.data.clone().unwrap_or_else(|| self.out.join("data.bin"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out.join("checkpoint.bin"))
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.data_seed.unwrap_or(self.seed),
            ..self.synthetic.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn model_dims(&self, num_states: usize, num_objects: usize, feature_dim: usize) -> ModelDims {
        ModelDims {
            num_states,
            num_objects,
            feature_dim,
            hidden: self.hidden,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let (k, v) = (key.trim(), value.trim());
        let count = "a non-negative integer";
        let real = "a number";
        match k {
            "seed" => self.seed = num(k, v, count)?,
            "data_seed" => {
                self.data_seed = match v {
                    "seed" => None,
                    _ => Some(num(k, v, "an integer or \"seed\"")?),
                }
            }
            "out" => self.out = PathBuf::from(v),
            "data" => self.data = Some(PathBuf::from(v)),
            "checkpoint" => self.checkpoint = Some(PathBuf::from(v)),
            "num_states" => self.synthetic.num_states = num(k, v, count)?,
            "num_objects" => self.synthetic.num_objects = num(k, v, count)?,
            "feature_dim" => self.synthetic.feature_dim = num(k, v, count)?,
            "seen_ratio" => self.synthetic.seen_ratio = num(k, v, real)?,
            "train_per_pair" => self.synthetic.train_per_pair = num(k, v, count)?,
            "test_per_seen_pair" => self.synthetic.test_per_seen_pair = num(k, v, count)?,
            "test_per_unseen_pair" => self.synthetic.test_per_unseen_pair = num(k, v, count)?,
            "prototype_dim" => self.world.prototype_dim = num(k, v, count)?,
            "interaction" => self.world.interaction = num(k, v, real)?,
            "noise_sigma" => self.world.noise_sigma = num(k, v, real)?,
            "feasible_ratio" => self.world.feasible_ratio = num(k, v, real)?,
            "groups" => self.world.groups = num(k, v, count)?,
            "group_similarity" => self.world.group_similarity = num(k, v, real)?,
            "hidden" => self.hidden = num(k, v, count)?,
            "epochs" => self.train.epochs = num(k, v, count)?,
            "batch_size" => self.train.batch_size = num(k, v, count)?,
            "lr_trunk" => self.train.lr_trunk = num(k, v, real)?,
            "lr_adversary" => self.train.lr_adversary = num(k, v, real)?,
            "lr_other" => self.train.lr_other = num(k, v, real)?,
            "weight_decay" => self.train.weight_decay = num(k, v, real)?,
            "adversary_steps_per_batch" => self.train.adversary_steps_per_batch = num(k, v, count)?,
            "regime" => self.train.regime = v.parse::<Regime>().map_err(|_| bad(k, v, "end_to_end or fixed_trunk"))?,
            "checkpoint_every" => self.train.checkpoint_every = num(k, v, count)?,
            "log_seconds" => self.log_seconds = flag(k, v)?,
            "gamma" => self.gamma = v.parse().map_err(|e: sadsp::Error| CliError::Usage(format!("gamma: {e}")))?,
            "disable" => self.mask = parse_disable(v)?,
            "sweep_steps" => self.sweep.steps = num(k, v, count)?,
            "sweep_midpoints" => self.sweep.include_midpoints = flag(k, v)?,
            "gamma_grid_attention" | "gamma_grid_disentangled" => {
                let values = list(k, v)?;
                let (a, d) = if k == "gamma_grid_attention" {
                    (values, self.grid_values().1)
                } else {
                    (self.grid_values().0, values)
                };
                self.gamma_grid = GammaGrid::from_values(&a, &d).map_err(|e| CliError::Usage(e.to_string()))?;
            }
            "accumulation" => self.accumulation = v.parse().map_err(|_| bad(k, v, "interleaved or raw"))?,
            "analysis_split" => {
                self.analysis_split = match v {
                    "train" => AnalysisSplit::Train,
                    "test" => AnalysisSplit::Test,
                    "all" => AnalysisSplit::All,
                    _ => return Err(bad(k, v, "train, test or all")),
                }
            }
            "top_k" => self.top_k = num(k, v, count)?,
            "min_max" => self.min_max = flag(k, v)?,
            "probe_epochs" => self.probe_epochs = num(k, v, count)?,
            "probe_learning_rate" => self.probe_learning_rate = num(k, v, real)?,
            _ => return Err(CliError::Usage(format!("unknown config key {k:?}"))),
        }
        Ok(())
    }

    fn grid_values(&self) -> (Vec<f64>, Vec<f64>) {
        let d = f64::from(sadsp::eval::GAMMA_STEP_DENOMINATOR);
        let conv = |s: &[u32]| s.iter().map(|&k| f64::from(k) / d).collect();
        (conv(&self.gamma_grid.attention_steps), conv(&self.gamma_grid.disentangled_steps))
    }

    /// Applies every setting in `text`. Errors name the offending line.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected key = value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| CliError::Usage(format!("{origin}:{}: {}", no + 1, e.message())))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    /// The effective configuration, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let s = &self.synthetic;
        let w = &self.world;
        let t = &self.train;
        let (ga, gd) = self.grid_values();
        let data_seed = self.data_seed.map_or_else(|| "seed".to_string(), |v| v.to_string());
        let disabled = self.mask.disabled().join(",");
        let entries: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("data_seed", data_seed),
            ("out", self.out.display().to_string()),
            ("data", self.data_path().display().to_string()),
            ("checkpoint", self.checkpoint_path().display().to_string()),
            ("num_states", s.num_states.to_string()),
            ("num_objects", s.num_objects.to_string()),
            ("feature_dim", s.feature_dim.to_string()),
            ("seen_ratio", s.seen_ratio.to_string()),
            ("train_per_pair", s.train_per_pair.to_string()),
            ("test_per_seen_pair", s.test_per_seen_pair.to_string()),
            ("test_per_unseen_pair", s.test_per_unseen_pair.to_string()),
            ("prototype_dim", w.prototype_dim.to_string()),
            ("interaction", w.interaction.to_string()),
            ("noise_sigma", w.noise_sigma.to_string()),
            ("feasible_ratio", w.feasible_ratio.to_string()),
            ("groups", w.groups.to_string()),
            ("group_similarity", w.group_similarity.to_string()),
            ("hidden", self.hidden.to_string()),
            ("epochs", t.epochs.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("lr_trunk", t.lr_trunk.to_string()),
            ("lr_adversary", t.lr_adversary.to_string()),
            ("lr_other", t.lr_other.to_string()),
            ("weight_decay", t.weight_decay.to_string()),
            ("adversary_steps_per_batch", t.adversary_steps_per_batch.to_string()),
            ("regime", t.regime.to_string()),
            ("checkpoint_every", t.checkpoint_every.to_string()),
            ("log_seconds", self.log_seconds.to_string()),
            ("gamma", self.gamma.to_string()),
            ("disable", disabled),
            ("sweep_steps", self.sweep.steps.to_string()),
            ("sweep_midpoints", self.sweep.include_midpoints.to_string()),
            ("gamma_grid_attention", join(ga)),
            ("gamma_grid_disentangled", join(gd)),
            (
                "accumulation",
                match self.accumulation {
                    AccumulationMode::Interleaved => "interleaved",
                    AccumulationMode::RawThenNormalize => "raw",
                }
                .into(),
            ),
            ("analysis_split", self.analysis_split.name().into()),
            ("top_k", self.top_k.to_string()),
            ("min_max", self.min_max.to_string()),
            ("probe_epochs", self.probe_epochs.to_string()),
            ("probe_learning_rate", self.probe_learning_rate.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("epochs", "3").unwrap();
        cfg.set("disable", "pf_s, pc_o").unwrap();
        cfg.set("gamma_grid_attention", "0.25,0.5").unwrap();
        cfg.set("accumulation", "raw").unwrap();
        cfg.set("data_seed", "7").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(&cfg.to_text(), "echo").unwrap();
        // the echo pins data/checkpoint paths explicitly
        assert_eq!(back.to_text(), cfg.to_text());
        assert_eq!(back.train, cfg.train);
        assert_eq!(back.mask, cfg.mask);
        assert_eq!(back.gamma_grid, cfg.gamma_grid);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("learning_rate", "1").is_err());
        assert!(cfg.set("epochs", "-1").is_err());
        assert!(cfg.set("regime", "frozen").is_err());
        assert!(cfg.set("disable", "pf_x").is_err());
        let err = cfg.apply_text("# comment\n\nepochs = 2\nbogus = 1\n", "run.cfg").unwrap_err();
        assert!(err.message().contains("run.cfg:4"), "{}", err.message());
    }

    #[test]
    fn default_paths_live_under_out() {
        let mut cfg = RunConfig::default();
        cfg.set("out", "runs/a").unwrap();
        assert_eq!(cfg.data_path(), PathBuf::from("runs/a/data.bin"));
        assert_eq!(cfg.checkpoint_path(), PathBuf::from("runs/a/checkpoint.bin"));
    }

    #[test]
    fn data_seed_follows_seed_by_default() {
        let mut cfg = RunConfig::default();
        cfg.set("seed", "5").unwrap();
        assert_eq!(cfg.synthetic_config().seed, 5);
        cfg.set("data_seed", "0").unwrap();
        assert_eq!(cfg.synthetic_config().seed, 0);
        assert_eq!(cfg.train_config().seed, 5);
    }
}
