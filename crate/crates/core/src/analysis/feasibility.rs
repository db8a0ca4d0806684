use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use ndkit::softmax;

use crate::data::{Pair, Sample};
use crate::model::{infer, ModelParams};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AccumulationMode {
    /// Softmax after every sample, interleaved with accumulation.
    #[default]
    Interleaved,
    /// Sum raw attention, normalize each touched row/column once at the end.
    RawThenNormalize,
}

impl FromStr for AccumulationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaved" => Ok(Self::Interleaved),
            "raw" => Ok(Self::RawThenNormalize),
            other => Err(Error::Contract(format!(
                "unknown accumulation mode {other:?}, expected interleaved or raw"
            ))),
        }
    }
}

/// Accumulated attention as two `|S| × |O|` planes.
///
/// `object_given_state` rows hold object attention conditioned on a state;
/// `state_given_object` columns hold state attention conditioned on an
/// object. Keeping them apart lets every touched row and column stay a
/// distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityMatrix {
    pub num_states: usize,
    pub num_objects: usize,
    pub object_given_state: Vec<f64>,
    pub state_given_object: Vec<f64>,
    pub touched_states: Vec<bool>,
    pub touched_objects: Vec<bool>,
}

fn softmax_row(m: &mut [f64], row: usize, width: usize) {
    let r = &mut m[row * width..(row + 1) * width];
    let p = softmax(r);
    r.copy_from_slice(&p);
}

fn softmax_col(m: &mut [f64], col: usize, width: usize, height: usize) {
    let v: Vec<f64> = (0..height).map(|k| m[k * width + col]).collect();
    for (k, p) in softmax(&v).into_iter().enumerate() {
        m[k * width + col] = p;
    }
}

impl FeasibilityMatrix {
    pub fn zeros(num_states: usize, num_objects: usize) -> Self {
        Self {
            num_states,
            num_objects,
            object_given_state: vec![0.0; num_states * num_objects],
            state_given_object: vec![0.0; num_states * num_objects],
            touched_states: vec![false; num_states],
            touched_objects: vec![false; num_objects],
        }
    }

    /// One sample: row `state` of the object plane, then column `object` of
    /// the state plane.
    fn step(&mut self, state: usize, object: usize, a_s: &[f64], a_o: &[f64], mode: AccumulationMode) {
        let (ns, no) = (self.num_states, self.num_objects);
        for (j, a) in a_o.iter().enumerate() {
            self.object_given_state[state * no + j] += a;
        }
        if mode == AccumulationMode::Interleaved {
            softmax_row(&mut self.object_given_state, state, no);
        }
        for (k, a) in a_s.iter().enumerate() {
            self.state_given_object[k * no + object] += a;
        }
        if mode == AccumulationMode::Interleaved {
            softmax_col(&mut self.state_given_object, object, no, ns);
        }
        self.touched_states[state] = true;
        self.touched_objects[object] = true;
    }

    fn finish(&mut self, mode: AccumulationMode) {
        if mode != AccumulationMode::RawThenNormalize {
            return;
        }
        let (ns, no) = (self.num_states, self.num_objects);
        for s in (0..ns).filter(|&s| self.touched_states[s]) {
            softmax_row(&mut self.object_given_state, s, no);
        }
        for o in (0..no).filter(|&o| self.touched_objects[o]) {
            softmax_col(&mut self.state_given_object, o, no, ns);
        }
    }

    /// Mean of the two planes: the feasibility score of each pair.
    pub fn combined(&self) -> Vec<f64> {
        self.object_given_state
            .iter()
            .zip(&self.state_given_object)
            .map(|(a, b)| (a + b) / 2.0)
            .collect()
    }

    pub fn at(&self, (s, o): Pair) -> f64 {
        self.combined()[s * self.num_objects + o]
    }

    /// Min-max scaling to `[0, 1]`; a constant matrix maps to zeros.
    pub fn min_max(values: &[f64]) -> Vec<f64> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return vec![0.0; values.len()];
        }
        values.iter().map(|v| (v - lo) / (hi - lo)).collect()
    }

    /// `state,object,object_given_state,state_given_object,combined`
    pub fn to_csv(&self) -> String {
        let combined = self.combined();
        let mut out = String::from("state,object,object_given_state,state_given_object,combined\n");
        for s in 0..self.num_states {
            for o in 0..self.num_objects {
                let i = s * self.num_objects + o;
                let _ = writeln!(
                    out,
                    "{s},{o},{},{},{}",
                    self.object_given_state[i], self.state_given_object[i], combined[i]
                );
            }
        }
        out
    }

    /// Heat-map grid of the combined matrix: one row per state, one column
    /// per object, optionally min-max scaled.
    pub fn grid_csv(&self, min_max: bool) -> String {
        let mut values = self.combined();
        if min_max {
            values = Self::min_max(&values);
        }
        let mut out = String::from("state");
        for o in 0..self.num_objects {
            let _ = write!(out, ",o{o}");
        }
        out.push('\n');
        for s in 0..self.num_states {
            let _ = write!(out, "s{s}");
            for o in 0..self.num_objects {
                let _ = write!(out, ",{}", values[s * self.num_objects + o]);
            }
            out.push('\n');
        }
        out
    }
}

/// Accumulates precomputed attention vectors. Each item is
/// `(state, object, a_s, a_o)` in dataset order.
pub fn accumulate_outputs<'a>(
    num_states: usize,
    num_objects: usize,
    items: impl IntoIterator<Item = (usize, usize, &'a [f64], &'a [f64])>,
    mode: AccumulationMode,
) -> Result<FeasibilityMatrix> {
    let mut m = FeasibilityMatrix::zeros(num_states, num_objects);
    for (i, (s, o, a_s, a_o)) in items.into_iter().enumerate() {
        if s >= num_states || o >= num_objects || a_s.len() != num_states || a_o.len() != num_objects {
            return Err(Error::Dimension(format!(
                "item {i}: pair ({s}, {o}) with attention of lengths {} and {} in a {num_states}x{num_objects} space",
                a_s.len(),
                a_o.len()
            )));
        }
        m.step(s, o, a_s, a_o, mode);
    }
    m.finish(mode);
    Ok(m)
}

/// Runs the network over `samples` in order and accumulates their attention.
pub fn accumulate_attention(params: &ModelParams, samples: &[&Sample], mode: AccumulationMode) -> Result<FeasibilityMatrix> {
    let (ns, no) = (params.dims.num_states, params.dims.num_objects);
    let out = infer(params, samples.iter().map(|s| s.features.as_slice()))?;
    accumulate_outputs(
        ns,
        no,
        samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.state, s.object, out.a_s[i].as_slice(), out.a_o[i].as_slice())),
        mode,
    )
}

/// Which attention vector a frequency table is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    /// Object attention, computed from the state branch; keyed by the true state.
    ObjectsGivenState,
    /// State attention, computed from the object branch; keyed by the true object.
    StatesGivenObject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Pairs most often holding the largest weight.
    Top,
    /// Pairs most often holding the smallest weight.
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairSpace {
    OpenWorld,
    UnseenOnly,
}

/// `counts[s * |O| + o]`: how often pair `(s, o)` held the extreme weight
/// for its conditioning primitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTable {
    pub num_states: usize,
    pub num_objects: usize,
    pub counts: Vec<usize>,
}

impl FrequencyTable {
    fn zeros(ns: usize, no: usize) -> Self {
        Self {
            num_states: ns,
            num_objects: no,
            counts: vec![0; ns * no],
        }
    }

    pub fn count(&self, (s, o): Pair) -> usize {
        self.counts[s * self.num_objects + o]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyTables {
    pub objects_given_state_max: FrequencyTable,
    pub objects_given_state_min: FrequencyTable,
    pub states_given_object_max: FrequencyTable,
    pub states_given_object_min: FrequencyTable,
}

fn arg_extreme(v: &[f64], want_max: bool) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if (want_max && *x > v[best]) || (!want_max && *x < v[best]) {
            best = i;
        }
    }
    best
}

/// Counts, per sample, the argmax and argmin of both attention vectors
/// (first index on ties).
pub fn frequency_tables<'a>(
    num_states: usize,
    num_objects: usize,
    items: impl IntoIterator<Item = (usize, usize, &'a [f64], &'a [f64])>,
) -> FrequencyTables {
    let z = || FrequencyTable::zeros(num_states, num_objects);
    let mut t = FrequencyTables {
        objects_given_state_max: z(),
        objects_given_state_min: z(),
        states_given_object_max: z(),
        states_given_object_min: z(),
    };
    for (s, o, a_s, a_o) in items {
        t.objects_given_state_max.counts[s * num_objects + arg_extreme(a_o, true)] += 1;
        t.objects_given_state_min.counts[s * num_objects + arg_extreme(a_o, false)] += 1;
        t.states_given_object_max.counts[arg_extreme(a_s, true) * num_objects + o] += 1;
        t.states_given_object_min.counts[arg_extreme(a_s, false) * num_objects + o] += 1;
    }
    t
}

impl FrequencyTables {
    pub fn table(&self, conditioning: Conditioning, direction: Direction) -> &FrequencyTable {
        match (conditioning, direction) {
            (Conditioning::ObjectsGivenState, Direction::Top) => &self.objects_given_state_max,
            (Conditioning::ObjectsGivenState, Direction::Bottom) => &self.objects_given_state_min,
            (Conditioning::StatesGivenObject, Direction::Top) => &self.states_given_object_max,
            (Conditioning::StatesGivenObject, Direction::Bottom) => &self.states_given_object_min,
        }
    }

    /// `table,state,object,count` for all four tables.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("table,state,object,count\n");
        let named = [
            ("objects_given_state_max", &self.objects_given_state_max),
            ("objects_given_state_min", &self.objects_given_state_min),
            ("states_given_object_max", &self.states_given_object_max),
            ("states_given_object_min", &self.states_given_object_min),
        ];
        for (name, t) in named {
            for s in 0..t.num_states {
                for o in 0..t.num_objects {
                    let _ = writeln!(out, "{name},{s},{o},{}", t.count((s, o)));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankedPairs {
    pub pairs: Vec<(Pair, usize)>,
    /// Fewer than `k` candidates were available.
    pub short: bool,
}

/// The `k` pairs involving `primitive` (a state for `ObjectsGivenState`, an
/// object otherwise) with the highest counts; ties by pair index.
pub fn topk_feasible(
    tables: &FrequencyTables,
    conditioning: Conditioning,
    primitive: usize,
    k: usize,
    direction: Direction,
    space: PairSpace,
    seen_pairs: &BTreeSet<Pair>,
) -> Result<RankedPairs> {
    if k == 0 {
        return Err(Error::Contract("k must be at least 1".into()));
    }
    let t = tables.table(conditioning, direction);
    let candidates: Vec<Pair> = match conditioning {
        Conditioning::ObjectsGivenState if primitive < t.num_states => (0..t.num_objects).map(|o| (primitive, o)).collect(),
        Conditioning::StatesGivenObject if primitive < t.num_objects => (0..t.num_states).map(|s| (s, primitive)).collect(),
        _ => return Err(Error::Contract(format!("primitive {primitive} out of range"))),
    };
    let mut ranked: Vec<(Pair, usize)> = candidates
        .into_iter()
        .filter(|p| space == PairSpace::OpenWorld || !seen_pairs.contains(p))
        .map(|p| (p, t.count(p)))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let short = ranked.len() < k;
    ranked.truncate(k);
    Ok(RankedPairs { pairs: ranked, short })
}
