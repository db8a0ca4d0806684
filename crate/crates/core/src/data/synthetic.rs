//! Seeded synthetic feature generator with planted feasibility and contextuality.
//!
//! States and objects are split into groups whose prototypes share a common
//! center. Pairs inside a group are preferentially feasible, so feasibility of
//! an unseen pair can be inferred from similar seen pairs. Each feature is a
//! random mixing projection of
//! `[state_proto ; object_proto ; κ·(state_proto ⊙ object_proto)]` plus
//! Gaussian noise; the Hadamard block entangles the two primitives.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Pair, Sample, Split};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub num_states: usize,
    pub num_objects: usize,
    pub feature_dim: usize,
    /// Fraction of all `|S|·|O|` pairs that are seen during training.
    pub seen_ratio: f64,
    pub train_per_pair: usize,
    pub test_per_seen_pair: usize,
    pub test_per_unseen_pair: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_states: 8,
            num_objects: 10,
            feature_dim: 32,
            seen_ratio: 0.4,
            train_per_pair: 40,
            test_per_seen_pair: 10,
            test_per_unseen_pair: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub prototype_dim: usize,
    /// Weight of the Hadamard interaction block (κ).
    pub interaction: f64,
    pub noise_sigma: f64,
    /// Fraction of all pairs that are feasible; must exceed the seen ratio.
    pub feasible_ratio: f64,
    pub groups: usize,
    /// Share of prototype variance coming from the group center, in `[0, 1]`.
    pub group_similarity: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            prototype_dim: 8,
            interaction: 2.0,
            noise_sigma: 0.2,
            feasible_ratio: 0.6,
            groups: 2,
            group_similarity: 0.6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorld {
    /// `|S| × d_p`, row-major.
    pub state_prototypes: Vec<Vec<f64>>,
    pub object_prototypes: Vec<Vec<f64>>,
    pub interaction: f64,
    pub noise_sigma: f64,
    /// `feasible[s][o]`.
    pub feasible: Vec<Vec<bool>>,
    pub state_groups: Vec<usize>,
    pub object_groups: Vec<usize>,
    /// `d × 3d_p` projection applied to the concatenated blocks.
    pub mixing: Vec<Vec<f64>>,
}

impl SyntheticWorld {
    pub fn is_feasible(&self, (s, o): Pair) -> bool {
        self.feasible[s][o]
    }

    /// Noise-free feature of a pair before `f32` rounding.
    pub fn clean_feature(&self, (s, o): Pair) -> Vec<f64> {
        let sp = &self.state_prototypes[s];
        let op = &self.object_prototypes[o];
        let raw: Vec<f64> = sp
            .iter()
            .chain(op)
            .copied()
            .chain(sp.iter().zip(op).map(|(a, b)| self.interaction * a * b))
            .collect();
        self.mixing
            .iter()
            .map(|row| row.iter().zip(&raw).map(|(w, r)| w * r).sum())
            .collect()
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn validate(cfg: &SyntheticConfig, world: &WorldConfig) -> Result<()> {
    let fail = |m: &str| Err(Error::Spec(m.to_string()));
    if cfg.num_states < 2 || cfg.num_objects < 2 {
        return fail("need at least two states and two objects");
    }
    if cfg.num_states > u16::MAX as usize || cfg.num_objects > u16::MAX as usize {
        return fail("primitive counts must fit in u16");
    }
    if cfg.feature_dim == 0 || world.prototype_dim == 0 {
        return fail("feature and prototype dimensions must be positive");
    }
    if !(world.interaction >= 0.0 && world.noise_sigma >= 0.0) {
        return fail("interaction strength and noise sigma must be non-negative");
    }
    if !(0.0..=1.0).contains(&world.group_similarity) {
        return fail("group_similarity must lie in [0, 1]");
    }
    if world.groups == 0 || world.groups > cfg.num_states.min(cfg.num_objects) {
        return fail("groups must be between 1 and min(|S|, |O|)");
    }
    if cfg.train_per_pair == 0 || cfg.test_per_seen_pair == 0 || cfg.test_per_unseen_pair == 0 {
        return fail("every split needs at least one sample per pair");
    }
    Ok(())
}

/// Picks the feasible pairs: two best-scoring partners per primitive first,
/// then the highest scores overall. In-group pairs score above out-of-group ones.
fn plant_feasibility(
    rng: &mut ChaCha8Rng,
    cfg: &SyntheticConfig,
    world: &WorldConfig,
    state_groups: &[usize],
    object_groups: &[usize],
) -> Result<Vec<Vec<bool>>> {
    let (ns, no) = (cfg.num_states, cfg.num_objects);
    let total = ns * no;
    let target = (world.feasible_ratio * total as f64).round() as usize;
    let mut score = vec![vec![0.0f64; no]; ns];
    for (s, row) in score.iter_mut().enumerate() {
        for (o, v) in row.iter_mut().enumerate() {
            let bonus = if state_groups[s] == object_groups[o] { 1.0 } else { 0.0 };
            *v = bonus + rng.random::<f64>();
        }
    }
    let mut feasible = vec![vec![false; no]; ns];
    let ranked = |mut items: Vec<(f64, Pair)>| {
        items.sort_by(|a, b| b.0.total_cmp(&a.0));
        items
    };
    for (s, row) in score.iter().enumerate() {
        for (_, (s, o)) in ranked((0..no).map(|o| (row[o], (s, o))).collect()).into_iter().take(2) {
            feasible[s][o] = true;
        }
    }
    for o in 0..no {
        let col = (0..ns).map(|s| (score[s][o], (s, o))).collect();
        for (_, (s, o)) in ranked(col).into_iter().take(2) {
            feasible[s][o] = true;
        }
    }
    let mandatory = feasible.iter().flatten().filter(|f| **f).count();
    if mandatory > target {
        return Err(Error::Spec(format!(
            "feasible_ratio {} allows {target} feasible pairs, coverage needs {mandatory}",
            world.feasible_ratio
        )));
    }
    let all: Vec<(f64, Pair)> = (0..ns)
        .flat_map(|s| (0..no).map(move |o| (s, o)))
        .map(|(s, o)| (score[s][o], (s, o)))
        .collect();
    let mut count = mandatory;
    for (_, (s, o)) in ranked(all) {
        if count == target {
            break;
        }
        if !feasible[s][o] {
            feasible[s][o] = true;
            count += 1;
        }
    }
    Ok(feasible)
}

/// Draws the seen pairs from the feasible ones so that every state and object
/// occurs at least once.
fn draw_seen(
    rng: &mut ChaCha8Rng,
    cfg: &SyntheticConfig,
    feasible: &[Vec<bool>],
) -> Result<BTreeSet<Pair>> {
    let (ns, no) = (cfg.num_states, cfg.num_objects);
    let target = (cfg.seen_ratio * (ns * no) as f64).round() as usize;
    let mut candidates: Vec<Pair> = (0..ns)
        .flat_map(|s| (0..no).map(move |o| (s, o)))
        .filter(|&(s, o)| feasible[s][o])
        .collect();
    if target >= candidates.len() {
        return Err(Error::Spec(format!(
            "seen_ratio {} needs {target} seen pairs but only {} are feasible; no unseen pairs would remain",
            cfg.seen_ratio,
            candidates.len()
        )));
    }
    candidates.shuffle(rng);

    let mut seen = BTreeSet::new();
    let mut state_cov = vec![false; ns];
    let mut obj_cov = vec![false; no];
    // pairs covering two new primitives first, then one
    for need in [2, 1] {
        for &(s, o) in &candidates {
            let gain = usize::from(!state_cov[s]) + usize::from(!obj_cov[o]);
            if gain >= need {
                seen.insert((s, o));
                state_cov[s] = true;
                obj_cov[o] = true;
            }
        }
    }
    if seen.len() > target {
        return Err(Error::Spec(format!(
            "seen_ratio {} allows {target} seen pairs, primitive coverage needs {}",
            cfg.seen_ratio,
            seen.len()
        )));
    }
    for &p in &candidates {
        if seen.len() == target {
            break;
        }
        seen.insert(p);
    }
    Ok(seen)
}

pub fn generate_synthetic(cfg: &SyntheticConfig, world: &WorldConfig) -> Result<(SyntheticWorld, Dataset)> {
    validate(cfg, world)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (ns, no, dp) = (cfg.num_states, cfg.num_objects, world.prototype_dim);

    let state_groups: Vec<usize> = (0..ns).map(|s| s * world.groups / ns).collect();
    let object_groups: Vec<usize> = (0..no).map(|o| o * world.groups / no).collect();

    let (wc, wi) = (world.group_similarity.sqrt(), (1.0 - world.group_similarity).sqrt());
    let prototypes = |groups: &[usize], rng: &mut ChaCha8Rng| {
        let centers: Vec<Vec<f64>> = (0..world.groups).map(|_| gaussian_vec(rng, dp)).collect();
        groups
            .iter()
            .map(|&g| {
                let own = gaussian_vec(rng, dp);
                centers[g].iter().zip(own).map(|(c, v)| wc * c + wi * v).collect()
            })
            .collect::<Vec<Vec<f64>>>()
    };
    let state_prototypes = prototypes(&state_groups, &mut rng);
    let object_prototypes = prototypes(&object_groups, &mut rng);

    let scale = 1.0 / ((3 * dp) as f64).sqrt();
    let mixing = (0..cfg.feature_dim)
        .map(|_| gaussian_vec(&mut rng, 3 * dp).into_iter().map(|v| v * scale).collect())
        .collect();

    let feasible = plant_feasibility(&mut rng, cfg, world, &state_groups, &object_groups)?;
    let seen = draw_seen(&mut rng, cfg, &feasible)?;

    let synthetic = SyntheticWorld {
        state_prototypes,
        object_prototypes,
        interaction: world.interaction,
        noise_sigma: world.noise_sigma,
        feasible,
        state_groups,
        object_groups,
        mixing,
    };

    let mut samples = Vec::new();
    let mut emit = |pair: Pair, split: Split, count: usize, rng: &mut ChaCha8Rng| {
        let clean = synthetic.clean_feature(pair);
        for _ in 0..count {
            let features = clean
                .iter()
                .map(|&c| {
                    let eps: f64 = StandardNormal.sample(rng);
                    (c + world.noise_sigma * eps) as f32
                })
                .collect();
            samples.push(Sample {
                features,
                state: pair.0,
                object: pair.1,
                split,
            });
        }
    };
    for &pair in &seen {
        emit(pair, Split::Train, cfg.train_per_pair, &mut rng);
    }
    for &pair in &seen {
        emit(pair, Split::TestSeen, cfg.test_per_seen_pair, &mut rng);
    }
    for s in 0..ns {
        for o in 0..no {
            if synthetic.feasible[s][o] && !seen.contains(&(s, o)) {
                emit((s, o), Split::TestUnseen, cfg.test_per_unseen_pair, &mut rng);
            }
        }
    }

    let dataset = Dataset::from_samples(ns, no, cfg.feature_dim, samples, cfg.seed)?;
    Ok((synthetic, dataset))
}
