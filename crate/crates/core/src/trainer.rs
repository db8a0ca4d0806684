//! Alternating min-max optimization.
//!
//! Each minibatch runs `adversary_steps_per_batch` adversary updates
//! (denoisers and discriminators), then one generator update of everything
//! else, each on a fresh forward pass. Three Adam states keep the learning
//! rates of the trunk, the adversaries and the remaining heads apart.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndkit::{AdamConfig, AdamState, Graph, Tensor};

use crate::data::{minibatches, Dataset, Sample};
use crate::losses::{loss_total, LossReport};
use crate::model::{forward_batch, save_checkpoint, Bound, ModelParams, ParamGroup, Phase};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Regime {
    /// Trunk and heads all train.
    #[default]
    EndToEnd,
    /// Trunk weights never change.
    FixedTrunk,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::EndToEnd => "end_to_end",
            Regime::FixedTrunk => "fixed_trunk",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "end_to_end" => Ok(Regime::EndToEnd),
            "fixed_trunk" => Ok(Regime::FixedTrunk),
            other => Err(Error::Contract(format!(
                "unknown regime {other:?}, expected end_to_end or fixed_trunk"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr_trunk: f64,
    pub lr_adversary: f64,
    pub lr_other: f64,
    pub weight_decay: f64,
    pub adversary_steps_per_batch: usize,
    pub regime: Regime,
    /// Save a snapshot every this many epochs; 0 disables snapshots.
    pub checkpoint_every: usize,
    /// Where snapshots go; required when `checkpoint_every > 0`.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 16,
            seed: 0,
            lr_trunk: 5.0e-6,
            lr_adversary: 1.0e-2,
            lr_other: 5.0e-5,
            weight_decay: 5.0e-5,
            adversary_steps_per_batch: 1,
            regime: Regime::EndToEnd,
            checkpoint_every: 0,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    /// Zero epochs is allowed and leaves the parameters untouched.
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("lr_trunk", self.lr_trunk),
            ("lr_adversary", self.lr_adversary),
            ("lr_other", self.lr_other),
        ];
        for (name, lr) in rates {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Contract(format!("{name} must be positive, got {lr}")));
            }
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Contract(format!("weight_decay must be non-negative, got {}", self.weight_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::Contract("batch_size must be positive".into()));
        }
        if self.adversary_steps_per_batch == 0 {
            return Err(Error::Contract("adversary_steps_per_batch must be positive".into()));
        }
        if self.checkpoint_every > 0 && self.checkpoint_dir.is_none() {
            return Err(Error::Contract("checkpoint_every needs a checkpoint_dir".into()));
        }
        Ok(())
    }
}

/// Sample-weighted means over one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Reports from the generator updates; `l_total` is the generator total.
    pub generator: LossReport,
    /// Reports from the (last) adversary update of each batch.
    pub adversary: LossReport,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub wall_seconds: f64,
    pub checkpoint_paths: Vec<PathBuf>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str =
        "epoch,l_sp,l_att,l_dc,l_den_max,l_den_min,l_dis_max,l_dis_min,l_total_generator,l_total_adversary,seconds";

    /// One row per epoch. With `with_seconds == false` the timing column is 0
    /// so the file is reproducible byte for byte.
    pub fn to_csv(&self, with_seconds: bool) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for e in &self.epochs {
            let (g, a) = (&e.generator, &e.adversary);
            let secs = if with_seconds { e.seconds } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{:.3}\n",
                e.epoch, g.l_sp, g.l_att, g.l_dc, a.l_den_max, g.l_den_min, a.l_dis_max, g.l_dis_min, g.l_total, a.l_total, secs
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, with_seconds: bool) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv(with_seconds).as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Feature matrix and labels of the samples at `idx`.
pub fn batch_matrix(samples: &[&Sample], idx: &[usize], d: usize) -> Result<(Tensor, Vec<usize>, Vec<usize>)> {
    let mut values = Vec::with_capacity(idx.len() * d);
    let mut states = Vec::with_capacity(idx.len());
    let mut objects = Vec::with_capacity(idx.len());
    for &i in idx {
        let s = samples[i];
        values.extend(s.features.iter().map(|&v| f64::from(v)));
        states.push(s.state);
        objects.push(s.object);
    }
    Ok((Tensor::new(vec![idx.len(), d], values)?, states, objects))
}

/// One Adam state per parameter group.
pub struct Optimizers {
    trunk: AdamState,
    adversary: AdamState,
    other: AdamState,
}

impl Optimizers {
    pub fn new(cfg: &TrainConfig) -> Self {
        Self {
            trunk: AdamState::new(AdamConfig::new(cfg.lr_trunk, cfg.weight_decay)),
            adversary: AdamState::new(AdamConfig::new(cfg.lr_adversary, cfg.weight_decay)),
            other: AdamState::new(AdamConfig::new(cfg.lr_other, cfg.weight_decay)),
        }
    }
}

/// One forward/backward pass in `phase` on a labelled batch, followed by the
/// optimizer steps of the groups that phase owns. A non-finite loss skips
/// the update and is returned in the report.
pub fn phase_step(
    params: &mut ModelParams,
    opt: &mut Optimizers,
    phase: Phase,
    freeze_trunk: bool,
    batch: &(Tensor, Vec<usize>, Vec<usize>),
) -> Result<LossReport> {
    let (x, states, objects) = batch;
    let mut graph = Graph::new();
    let bound = Bound::new(&mut graph, params, phase, freeze_trunk);
    let fb = forward_batch(&mut graph, &bound, phase, x, &params.dims)?;
    let (vars, report) = loss_total(&mut graph, &fb, states, objects, phase)?;
    if report.first_non_finite().is_some() {
        return Ok(report);
    }
    graph.backward(vars.total)?;
    match phase {
        Phase::Adversary => {
            bound.write_grads(&graph, params, ParamGroup::Adversary)?;
            opt.adversary.step(&mut params.group_tensors_mut(ParamGroup::Adversary))?;
        }
        Phase::Generator => {
            bound.write_grads(&graph, params, ParamGroup::Other)?;
            opt.other.step(&mut params.group_tensors_mut(ParamGroup::Other))?;
            if !freeze_trunk {
                bound.write_grads(&graph, params, ParamGroup::Trunk)?;
                opt.trunk.step(&mut params.group_tensors_mut(ParamGroup::Trunk))?;
            }
        }
        Phase::Inference => return Err(Error::Contract("no optimizer step at inference".into())),
    }
    Ok(report)
}

fn guard(report: &LossReport, epoch: usize, batch: usize) -> Result<()> {
    match report.first_non_finite() {
        Some((term, value)) => Err(Error::Divergence {
            epoch,
            batch,
            term,
            value,
        }),
        None => Ok(()),
    }
}

/// Trains on the train split. Deterministic for a fixed `cfg.seed`.
pub fn train(params: ModelParams, dataset: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    train_with(params, dataset, cfg, |_, _| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    mut params: ModelParams,
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog, &ModelParams),
) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    let spec = &dataset.spec;
    let dims = params.dims;
    if (dims.num_states, dims.num_objects, dims.feature_dim) != (spec.num_states, spec.num_objects, spec.feature_dim) {
        return Err(Error::Dimension(format!(
            "model is {}x{} over {} features, dataset is {}x{} over {}",
            dims.num_states, dims.num_objects, dims.feature_dim, spec.num_states, spec.num_objects, spec.feature_dim
        )));
    }
    let samples = dataset.train();
    if samples.is_empty() {
        return Err(Error::Contract("the train split is empty".into()));
    }
    let freeze_trunk = cfg.regime == Regime::FixedTrunk;
    let mut opt = Optimizers::new(cfg);
    let mut log = TrainLog::default();
    let start = Instant::now();
    for epoch in 0..cfg.epochs {
        let epoch_start = Instant::now();
        let mut generator = LossReport::default();
        let mut adversary = LossReport::default();
        for (bi, idx) in minibatches(samples.len(), cfg.batch_size, cfg.seed, epoch as u64)
            .iter()
            .enumerate()
        {
            let batch = batch_matrix(&samples, idx, dims.feature_dim)?;
            let weight = idx.len() as f64 / samples.len() as f64;
            let mut adv = LossReport::default();
            for _ in 0..cfg.adversary_steps_per_batch {
                adv = phase_step(&mut params, &mut opt, Phase::Adversary, freeze_trunk, &batch)?;
                guard(&adv, epoch, bi)?;
            }
            let gen = phase_step(&mut params, &mut opt, Phase::Generator, freeze_trunk, &batch)?;
            guard(&gen, epoch, bi)?;
            if !params.all_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: bi,
                    term: "parameters",
                    value: f64::NAN,
                });
            }
            adversary.accumulate(&adv, weight);
            generator.accumulate(&gen, weight);
        }
        let entry = EpochLog {
            epoch,
            generator,
            adversary,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        on_epoch(&entry, &params);
        log.epochs.push(entry);
        if let Some(dir) = cfg.checkpoint_dir.as_ref().filter(|_| cfg.checkpoint_every > 0) {
            if (epoch + 1) % cfg.checkpoint_every == 0 {
                let path = dir.join(format!("checkpoint_epoch{:03}.bin", epoch + 1));
                save_checkpoint(&params, &path)?;
                log.checkpoint_paths.push(path);
            }
        }
    }
    log.wall_seconds = start.elapsed().as_secs_f64();
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_documented_rates() {
        let c = TrainConfig::default();
        assert_eq!((c.lr_trunk, c.lr_adversary, c.lr_other, c.weight_decay), (5.0e-6, 1.0e-2, 5.0e-5, 5.0e-5));
        assert_eq!((c.epochs, c.batch_size, c.adversary_steps_per_batch), (50, 16, 1));
        c.validate().unwrap();
    }

    #[test]
    fn invalid_rates_are_rejected() {
        for bad in [0.0, -1.0, f64::NAN] {
            let c = TrainConfig {
                lr_other: bad,
                ..TrainConfig::default()
            };
            assert!(c.validate().is_err());
        }
        let c = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn regime_names_round_trip() {
        for r in [Regime::EndToEnd, Regime::FixedTrunk] {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("ff".parse::<Regime>().is_err());
    }

    #[test]
    fn csv_has_one_row_per_epoch() {
        let log = TrainLog {
            epochs: vec![
                EpochLog {
                    epoch: 0,
                    generator: LossReport::default(),
                    adversary: LossReport::default(),
                    seconds: 1.25,
                },
                EpochLog {
                    epoch: 1,
                    generator: LossReport::default(),
                    adversary: LossReport::default(),
                    seconds: 2.0,
                },
            ],
            ..TrainLog::default()
        };
        let csv = log.to_csv(true);
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",1.250"));
        assert!(log.to_csv(false).lines().nth(1).unwrap().ends_with(",0.000"));
    }
}
