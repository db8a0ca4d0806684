//! Open-world inference with γ-weighted fusion, and the calibrated-bias
//! evaluation protocol (best seen, best unseen, harmonic mean, AUC).

mod ablation;
mod scores;
mod sweep;

use std::fmt;
use std::str::FromStr;

use crate::data::{Dataset, Pair, Split};
use crate::model::{infer, ModelParams};
use crate::{Error, Result};

pub use ablation::{
    ablation_csv, gamma_grid, gamma_sweep, gamma_sweep_csv, run_ablation_suite, AblationRow, GammaGrid, GammaPoint,
    ABLATION_CONFIGS, GAMMA_STEP_DENOMINATOR,
};
pub use scores::{ScoreRow, ScoreTable, SCORE_MAGIC};
pub use sweep::{auc, harmonic_mean, EvalSummary, SweepConfig, SweepPoint};

const GAMMA_TOLERANCE: f64 = 1e-9;

/// Fusion coefficients for plain, attention-revised and disentangled predictions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaWeights {
    plain: f64,
    attention: f64,
    disentangled: f64,
}

impl GammaWeights {
    /// Non-negative weights summing to one (within 1e-9).
    pub fn new(plain: f64, attention: f64, disentangled: f64) -> Result<Self> {
        let all = [plain, attention, disentangled];
        if all.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::Contract(format!("gamma weights must be non-negative, got {all:?}")));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > GAMMA_TOLERANCE {
            return Err(Error::Contract(format!("gamma weights must sum to 1, got {sum}")));
        }
        Ok(Self {
            plain,
            attention,
            disentangled,
        })
    }

    /// Simple-primitive predictions only.
    pub fn plain_only() -> Self {
        Self {
            plain: 1.0,
            attention: 0.0,
            disentangled: 0.0,
        }
    }

    pub fn plain(&self) -> f64 {
        self.plain
    }

    pub fn attention(&self) -> f64 {
        self.attention
    }

    pub fn disentangled(&self) -> f64 {
        self.disentangled
    }
}

impl Default for GammaWeights {
    fn default() -> Self {
        Self {
            plain: 0.7,
            attention: 0.25,
            disentangled: 0.05,
        }
    }
}

impl fmt::Display for GammaWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.plain, self.attention, self.disentangled)
    }
}

impl FromStr for GammaWeights {
    type Err = Error;

    /// `"0.7,0.25,0.05"`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Contract(format!("expected three comma-separated gamma weights, got {s:?}")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Contract(format!("gamma weight {p:?} is not a number")))?;
        }
        Self::new(v[0], v[1], v[2])
    }
}

/// Which revision branches take part in fusion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BranchMask {
    /// Attention-revised state prediction, conditioned on the object branch.
    pub enable_pf_s_given_o: bool,
    /// Attention-revised object prediction, conditioned on the state branch.
    pub enable_pf_o_given_s: bool,
    pub enable_pc_s: bool,
    pub enable_pc_o: bool,
}

/// Short names used on the command line and in reports.
pub const BRANCH_NAMES: [&str; 4] = ["pf_s", "pf_o", "pc_s", "pc_o"];

impl BranchMask {
    pub fn all() -> Self {
        Self {
            enable_pf_s_given_o: true,
            enable_pf_o_given_s: true,
            enable_pc_s: true,
            enable_pc_o: true,
        }
    }

    /// Mask with the named branches switched off.
    pub fn disabling(names: &[&str]) -> Result<Self> {
        let mut m = Self::all();
        for &n in names {
            match n.trim() {
                "pf_s" => m.enable_pf_s_given_o = false,
                "pf_o" => m.enable_pf_o_given_s = false,
                "pc_s" => m.enable_pc_s = false,
                "pc_o" => m.enable_pc_o = false,
                "" => {}
                other => {
                    return Err(Error::Contract(format!(
                        "unknown branch {other:?}, expected one of {}",
                        BRANCH_NAMES.join(", ")
                    )))
                }
            }
        }
        Ok(m)
    }

    /// Names of the disabled branches, in canonical order.
    pub fn disabled(&self) -> Vec<&'static str> {
        let flags = [
            self.enable_pf_s_given_o,
            self.enable_pf_o_given_s,
            self.enable_pc_s,
            self.enable_pc_o,
        ];
        BRANCH_NAMES
            .into_iter()
            .zip(flags)
            .filter(|(_, on)| !on)
            .map(|(n, _)| n)
            .collect()
    }
}

impl Default for BranchMask {
    fn default() -> Self {
        Self::all()
    }
}

/// Per-sample network outputs that feed fusion.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveOutputs {
    pub p_s: Vec<f64>,
    pub p_o: Vec<f64>,
    pub a_s: Vec<f64>,
    pub a_o: Vec<f64>,
    pub p_c_s: Vec<f64>,
    pub p_c_o: Vec<f64>,
}

fn fuse_branch(p: &[f64], a: &[f64], pc: &[f64], g: &GammaWeights, use_att: bool, use_dis: bool) -> Result<Vec<f64>> {
    if a.len() != p.len() || pc.len() != p.len() {
        return Err(Error::Dimension(format!(
            "fusion inputs of lengths {}, {}, {}",
            p.len(),
            a.len(),
            pc.len()
        )));
    }
    Ok((0..p.len())
        .map(|k| {
            let mut v = g.plain * p[k];
            if use_att {
                v += g.attention * a[k] * p[k];
            }
            if use_dis {
                v += g.disentangled * pc[k];
            }
            v
        })
        .collect())
}

/// Fused state and object scores. Disabled branches contribute nothing and
/// their weight is not redistributed.
pub fn fuse(out: &PrimitiveOutputs, gamma: &GammaWeights, mask: &BranchMask) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = fuse_branch(&out.p_s, &out.a_s, &out.p_c_s, gamma, mask.enable_pf_s_given_o, mask.enable_pc_s)?;
    let o = fuse_branch(&out.p_o, &out.a_o, &out.p_c_o, gamma, mask.enable_pf_o_given_s, mask.enable_pc_o)?;
    Ok((s, o))
}

/// Pair maximizing `scores_s[k] · scores_o[j]`; the first pair in `pairs`
/// wins ties.
pub fn predict_composition(scores_s: &[f64], scores_o: &[f64], pairs: &[Pair]) -> Result<Pair> {
    let mut best: Option<(Pair, f64)> = None;
    for &(k, j) in pairs {
        let (Some(a), Some(b)) = (scores_s.get(k), scores_o.get(j)) else {
            return Err(Error::Dimension(format!(
                "pair ({k}, {j}) outside {}x{} scores",
                scores_s.len(),
                scores_o.len()
            )));
        };
        let v = a * b;
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some(((k, j), v));
        }
    }
    best.map(|(p, _)| p)
        .ok_or_else(|| Error::Contract("no candidate pairs".into()))
}

/// Network outputs for the test split, computed once and fused many times.
pub struct TestOutputs {
    outputs: Vec<PrimitiveOutputs>,
    truth: Vec<(Pair, Split)>,
}

impl TestOutputs {
    pub fn compute(params: &ModelParams, dataset: &Dataset) -> Result<Self> {
        check_dims(params, dataset)?;
        let test = dataset.test();
        let out = infer(params, test.iter().map(|s| s.features.as_slice()))?;
        let outputs = (0..test.len())
            .map(|i| PrimitiveOutputs {
                p_s: out.p_s[i].clone(),
                p_o: out.p_o[i].clone(),
                a_s: out.a_s[i].clone(),
                a_o: out.a_o[i].clone(),
                p_c_s: out.p_c_s[i].clone(),
                p_c_o: out.p_c_o[i].clone(),
            })
            .collect();
        let truth = test.iter().map(|s| (s.pair(), s.split)).collect();
        Ok(Self { outputs, truth })
    }

    pub fn outputs(&self) -> &[PrimitiveOutputs] {
        &self.outputs
    }

    pub fn score_table(&self, dataset: &Dataset, gamma: &GammaWeights, mask: &BranchMask) -> Result<ScoreTable> {
        let mut rows = Vec::with_capacity(self.outputs.len());
        for (prim, &(truth, split)) in self.outputs.iter().zip(&self.truth) {
            let (state_scores, object_scores) = fuse(prim, gamma, mask)?;
            rows.push(ScoreRow {
                state_scores,
                object_scores,
                truth,
                split,
            });
        }
        ScoreTable::new(dataset.spec.num_states, dataset.spec.num_objects, &dataset.spec.seen_pairs, rows)
    }
}

/// Runs the network over the test split and fuses every sample.
pub fn score_table(params: &ModelParams, dataset: &Dataset, gamma: &GammaWeights, mask: &BranchMask) -> Result<ScoreTable> {
    TestOutputs::compute(params, dataset)?.score_table(dataset, gamma, mask)
}

/// Fails when the model and dataset disagree on any dimension.
pub fn check_dims(params: &ModelParams, dataset: &Dataset) -> Result<()> {
    let (d, s) = (&params.dims, &dataset.spec);
    if (d.num_states, d.num_objects, d.feature_dim) != (s.num_states, s.num_objects, s.feature_dim) {
        return Err(Error::Dimension(format!(
            "checkpoint is {} states x {} objects over {} features, dataset is {} x {} over {}",
            d.num_states, d.num_objects, d.feature_dim, s.num_states, s.num_objects, s.feature_dim
        )));
    }
    Ok(())
}

/// Full protocol: fuse, sweep the unseen-pair bias, summarize.
pub fn evaluate(
    params: &ModelParams,
    dataset: &Dataset,
    gamma: &GammaWeights,
    mask: &BranchMask,
    sweep: &SweepConfig,
) -> Result<EvalSummary> {
    score_table(params, dataset, gamma, mask)?.evaluate(sweep)
}
