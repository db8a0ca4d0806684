use std::collections::BTreeSet;
use std::path::Path;

use crate::data::{Pair, Split};
use crate::{Error, Result};

use super::sweep::{EvalSummary, SweepConfig};

pub const SCORE_MAGIC: &[u8; 8] = b"SADSPSC1";

/// Fused primitive scores of one test sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub state_scores: Vec<f64>,
    pub object_scores: Vec<f64>,
    pub truth: Pair,
    pub split: Split,
}

/// Best seen and best unseen candidate of one sample, with pair indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Contenders {
    pub seen: (f64, usize),
    pub unseen: Option<(f64, usize)>,
}

/// Fused scores for every test sample over the open-world pair space.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    num_states: usize,
    num_objects: usize,
    seen: Vec<bool>,
    rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn new(num_states: usize, num_objects: usize, seen_pairs: &BTreeSet<Pair>, rows: Vec<ScoreRow>) -> Result<Self> {
        let mut seen = vec![false; num_states * num_objects];
        for &(s, o) in seen_pairs {
            if s >= num_states || o >= num_objects {
                return Err(Error::Spec(format!("seen pair ({s}, {o}) outside {num_states}x{num_objects}")));
            }
            seen[s * num_objects + o] = true;
        }
        for (i, r) in rows.iter().enumerate() {
            if r.state_scores.len() != num_states || r.object_scores.len() != num_objects {
                return Err(Error::Dimension(format!(
                    "score row {i} has {}+{} entries, expected {num_states}+{num_objects}",
                    r.state_scores.len(),
                    r.object_scores.len()
                )));
            }
            if r.truth.0 >= num_states || r.truth.1 >= num_objects {
                return Err(Error::Spec(format!("score row {i} has label outside the pair space")));
            }
        }
        Ok(Self {
            num_states,
            num_objects,
            seen,
            rows,
        })
    }

    pub fn rows(&self) -> &[ScoreRow] {
        &self.rows
    }

    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_objects
    }

    pub fn is_seen_index(&self, idx: usize) -> bool {
        self.seen[idx]
    }

    /// Composition score of pair `(k, j)` for row `i`.
    pub fn composition(&self, i: usize, k: usize, j: usize) -> f64 {
        let r = &self.rows[i];
        r.state_scores[k] * r.object_scores[j]
    }

    /// Top-1 pair of row `i` with `bias` added to every unseen pair.
    pub fn predict(&self, i: usize, bias: f64) -> Pair {
        let c = self.contenders(i);
        let idx = resolve(&c, bias);
        (idx / self.num_objects, idx % self.num_objects)
    }

    pub(crate) fn contenders(&self, i: usize) -> Contenders {
        let mut seen: Option<(f64, usize)> = None;
        let mut unseen: Option<(f64, usize)> = None;
        for k in 0..self.num_states {
            for j in 0..self.num_objects {
                let idx = k * self.num_objects + j;
                let v = self.composition(i, k, j);
                let slot = if self.seen[idx] { &mut seen } else { &mut unseen };
                if slot.is_none_or(|(bv, _)| v > bv) {
                    *slot = Some((v, idx));
                }
            }
        }
        Contenders {
            seen: seen.unwrap_or((f64::NEG_INFINITY, usize::MAX)),
            unseen,
        }
    }

    /// Bias sweep and summary metrics. Needs seen and unseen test samples.
    pub fn evaluate(&self, cfg: &SweepConfig) -> Result<EvalSummary> {
        let count = |sp| self.rows.iter().filter(|r| r.split == sp).count();
        if count(Split::TestSeen) == 0 || count(Split::TestUnseen) == 0 {
            return Err(Error::Contract(
                "evaluation needs both test-seen and test-unseen samples".into(),
            ));
        }
        let contenders: Vec<Contenders> = (0..self.rows.len()).map(|i| self.contenders(i)).collect();
        let truth: Vec<(usize, Split)> = self
            .rows
            .iter()
            .map(|r| (r.truth.0 * self.num_objects + r.truth.1, r.split))
            .collect();
        Ok(super::sweep::sweep(&contenders, &truth, cfg))
    }

    /// Binary dump: magic, u32 `|S|`, `|O|`, rows; `|S|·|O|` seen flags;
    /// then per row `|S|` and `|O|` f64 scores, u16 state, u16 object, u8 split.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SCORE_MAGIC);
        for v in [self.num_states, self.num_objects, self.rows.len()] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.extend(self.seen.iter().map(|&b| u8::from(b)));
        for r in &self.rows {
            for v in r.state_scores.iter().chain(&r.object_scores) {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&(r.truth.0 as u16).to_le_bytes());
            out.extend_from_slice(&(r.truth.1 as u16).to_le_bytes());
            out.push(r.split.code());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> std::result::Result<&[u8], String> {
            let s = bytes
                .get(pos..pos + n)
                .ok_or_else(|| format!("truncated at byte offset {pos}, needed {n} more bytes"))?;
            pos += n;
            Ok(s)
        };
        if take(8)? != SCORE_MAGIC {
            return Err("bad magic, not a score table".into());
        }
        let mut u32s = [0usize; 3];
        for v in &mut u32s {
            *v = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        }
        let [ns, no, n] = u32s;
        let seen: Vec<bool> = take(ns * no)?.iter().map(|&b| b != 0).collect();
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut f = |k: usize| -> std::result::Result<Vec<f64>, String> {
                Ok(take(8 * k)?
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect())
            };
            let state_scores = f(ns)?;
            let object_scores = f(no)?;
            let s = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
            let o = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
            let code = take(1)?[0];
            let split = Split::from_code(code).ok_or_else(|| format!("bad split code {code}"))?;
            rows.push(ScoreRow {
                state_scores,
                object_scores,
                truth: (s, o),
                split,
            });
        }
        if pos != bytes.len() {
            return Err(format!("{} trailing bytes", bytes.len() - pos));
        }
        let seen_pairs = (0..ns * no).filter(|&i| seen[i]).map(|i| (i / no, i % no)).collect();
        Self::new(ns, no, &seen_pairs, rows).map_err(|e| e.to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Pair index chosen under `bias`; on an exact tie the lower index wins.
pub(crate) fn resolve(c: &Contenders, bias: f64) -> usize {
    match c.unseen {
        None => c.seen.1,
        Some((u, ui)) => {
            let shifted = u + bias;
            if shifted > c.seen.0 {
                ui
            } else if shifted == c.seen.0 {
                ui.min(c.seen.1)
            } else {
                c.seen.1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ScoreTable {
        let seen: BTreeSet<Pair> = [(0, 0), (1, 1)].into();
        let rows = vec![
            ScoreRow {
                state_scores: vec![0.6, 0.4],
                object_scores: vec![0.3, 0.7],
                truth: (0, 0),
                split: Split::TestSeen,
            },
            ScoreRow {
                state_scores: vec![0.2, 0.8],
                object_scores: vec![0.9, 0.1],
                truth: (1, 0),
                split: Split::TestUnseen,
            },
        ];
        ScoreTable::new(2, 2, &seen, rows).unwrap()
    }

    #[test]
    fn predictions_follow_the_bias() {
        let t = table();
        // row 0: seen (0,0)=0.18, (1,1)=0.28; unseen (0,1)=0.42, (1,0)=0.12
        assert_eq!(t.predict(0, 0.0), (0, 1));
        assert_eq!(t.predict(0, -1.0), (1, 1));
        assert_eq!(t.predict(0, f64::INFINITY), (0, 1));
        assert_eq!(t.predict(0, f64::NEG_INFINITY), (1, 1));
    }

    #[test]
    fn exact_tie_goes_to_the_lower_index() {
        let flat = |seen: BTreeSet<Pair>| {
            let row = ScoreRow {
                state_scores: vec![0.5, 0.5],
                object_scores: vec![0.5, 0.5],
                truth: (0, 0),
                split: Split::TestSeen,
            };
            ScoreTable::new(2, 2, &seen, vec![row]).unwrap()
        };
        // every pair scores 0.25, so bias 0 is an exact tie
        assert_eq!(flat([(1, 1)].into()).predict(0, 0.0), (0, 0));
        assert_eq!(flat([(0, 0)].into()).predict(0, 0.0), (0, 0));
        assert_eq!(flat([(0, 0)].into()).predict(0, 1e-9), (0, 1));
    }

    #[test]
    fn binary_dump_round_trips() {
        let t = table();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..8], SCORE_MAGIC);
        assert_eq!(ScoreTable::from_bytes(&bytes).unwrap(), t);
        assert!(ScoreTable::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn row_width_is_checked() {
        let rows = vec![ScoreRow {
            state_scores: vec![1.0],
            object_scores: vec![1.0, 0.0],
            truth: (0, 0),
            split: Split::TestSeen,
        }];
        assert!(ScoreTable::new(2, 2, &BTreeSet::new(), rows).is_err());
    }
}
