//! Labeled feature bundles, open-world pair bookkeeping and minibatching.
//!
//! Datasets come either from a feature file (features extracted by a frozen
//! backbone) or from the seeded synthetic generator in [`synthetic`].

mod io;
pub mod synthetic;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use io::{load_feature_file, write_feature_file, write_pair_sidecar};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticWorld, WorldConfig};

pub type Pair = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    TestSeen,
    TestUnseen,
}

impl Split {
    pub fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::TestSeen => 1,
            Split::TestUnseen => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Split::Train),
            1 => Some(Split::TestSeen),
            2 => Some(Split::TestUnseen),
            _ => None,
        }
    }

    pub fn is_test(self) -> bool {
        self != Split::Train
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Stored as `f32`, the precision of the feature file.
    pub features: Vec<f32>,
    pub state: usize,
    pub object: usize,
    pub split: Split,
}

impl Sample {
    pub fn pair(&self) -> Pair {
        (self.state, self.object)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub num_states: usize,
    pub num_objects: usize,
    pub feature_dim: usize,
    pub seen_pairs: BTreeSet<Pair>,
    pub train_size: usize,
    pub test_seen_size: usize,
    pub test_unseen_size: usize,
    pub rng_seed: u64,
}

impl DatasetSpec {
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_objects
    }

    pub fn is_seen(&self, pair: Pair) -> bool {
        self.seen_pairs.contains(&pair)
    }

    /// Row-major index of a pair in [`open_world_pairs`] order.
    pub fn pair_index(&self, (s, o): Pair) -> usize {
        s * self.num_objects + o
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset, deriving seen pairs and split sizes from the samples.
    pub fn from_samples(
        num_states: usize,
        num_objects: usize,
        feature_dim: usize,
        samples: Vec<Sample>,
        rng_seed: u64,
    ) -> Result<Self> {
        let seen_pairs = samples
            .iter()
            .filter(|s| s.split != Split::TestUnseen)
            .map(Sample::pair)
            .collect();
        let count = |split| samples.iter().filter(|s| s.split == split).count();
        let spec = DatasetSpec {
            num_states,
            num_objects,
            feature_dim,
            seen_pairs,
            train_size: count(Split::Train),
            test_seen_size: count(Split::TestSeen),
            test_unseen_size: count(Split::TestUnseen),
            rng_seed,
        };
        let ds = Self { spec, samples };
        ds.validate()?;
        Ok(ds)
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    pub fn train(&self) -> Vec<&Sample> {
        self.split(Split::Train).collect()
    }

    pub fn test(&self) -> Vec<&Sample> {
        self.samples.iter().filter(|s| s.split.is_test()).collect()
    }

    /// Checks index ranges, feature widths and split soundness.
    pub fn validate(&self) -> Result<()> {
        let spec = &self.spec;
        for (i, s) in self.samples.iter().enumerate() {
            if s.state >= spec.num_states || s.object >= spec.num_objects {
                return Err(Error::Spec(format!(
                    "sample {i}: pair ({}, {}) outside {}x{}",
                    s.state, s.object, spec.num_states, spec.num_objects
                )));
            }
            if s.features.len() != spec.feature_dim {
                return Err(Error::Dimension(format!(
                    "sample {i} has {} features, expected {}",
                    s.features.len(),
                    spec.feature_dim
                )));
            }
            let seen = spec.is_seen(s.pair());
            if seen == (s.split == Split::TestUnseen) {
                return Err(Error::Spec(format!(
                    "sample {i}: pair ({}, {}) in split {:?} contradicts the seen set",
                    s.state, s.object, s.split
                )));
            }
        }
        if spec
            .seen_pairs
            .iter()
            .any(|&(s, o)| s >= spec.num_states || o >= spec.num_objects)
        {
            return Err(Error::Spec("seen pair outside the pair space".into()));
        }
        Ok(())
    }

    /// States and objects that never occur in the training split.
    pub fn uncovered_primitives(&self) -> (Vec<usize>, Vec<usize>) {
        let mut states = vec![false; self.spec.num_states];
        let mut objects = vec![false; self.spec.num_objects];
        for s in self.split(Split::Train) {
            states[s.state] = true;
            objects[s.object] = true;
        }
        let missing = |v: Vec<bool>| v.iter().enumerate().filter(|(_, c)| !**c).map(|(i, _)| i).collect();
        (missing(states), missing(objects))
    }
}

/// The full `S × O` composition space in state-major order.
pub fn open_world_pairs(num_states: usize, num_objects: usize) -> Vec<Pair> {
    (0..num_states)
        .flat_map(|s| (0..num_objects).map(move |o| (s, o)))
        .collect()
}

/// Shuffled index batches over `len` items for one epoch.
///
/// The order depends only on `(seed, epoch)`; the last batch may be short.
pub fn minibatches(len: usize, batch_size: usize, seed: u64, epoch: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch size must be positive");
    let mut order: Vec<usize> = (0..len).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
