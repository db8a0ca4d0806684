use std::fmt::Write as _;

use crate::data::Dataset;
use crate::model::ModelParams;
use crate::{Error, Result};

use super::{BranchMask, EvalSummary, GammaWeights, SweepConfig, TestOutputs};

/// Module-level variants followed by the branch-level disable sets.
pub const ABLATION_CONFIGS: [(&str, &[&str]); 12] = [
    ("SP", &["pf_s", "pf_o", "pc_s", "pc_o"]),
    ("SA-SP", &["pc_s", "pc_o"]),
    ("KD-SP", &["pf_s", "pf_o"]),
    ("SAD-SP", &[]),
    ("disable pf_s", &["pf_s"]),
    ("disable pf_o", &["pf_o"]),
    ("disable pc_s", &["pc_s"]),
    ("disable pc_o", &["pc_o"]),
    ("disable pf_s&pc_s", &["pf_s", "pc_s"]),
    ("disable pf_s&pc_o", &["pf_s", "pc_o"]),
    ("disable pf_o&pc_s", &["pf_o", "pc_s"]),
    ("disable pf_o&pc_o", &["pf_o", "pc_o"]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub name: &'static str,
    pub mask: BranchMask,
    pub summary: EvalSummary,
}

/// Every ablation configuration at one fixed γ.
pub fn run_ablation_suite(
    params: &ModelParams,
    dataset: &Dataset,
    gamma: &GammaWeights,
    sweep: &SweepConfig,
) -> Result<Vec<AblationRow>> {
    let outputs = TestOutputs::compute(params, dataset)?;
    ABLATION_CONFIGS
        .iter()
        .map(|&(name, disabled)| {
            let mask = BranchMask::disabling(disabled)?;
            let summary = outputs.score_table(dataset, gamma, &mask)?.evaluate(sweep)?;
            Ok(AblationRow { name, mask, summary })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = format!("variant,disabled,{}\n", EvalSummary::CSV_HEADER);
    for r in rows {
        let disabled = r.mask.disabled().join("&");
        let _ = writeln!(out, "{},{},{}", r.name, disabled, r.summary.csv_row());
    }
    out
}

/// γ grid in steps of 1/20; entries are step counts, so 5 means 0.25.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaGrid {
    pub attention_steps: Vec<u32>,
    pub disentangled_steps: Vec<u32>,
}

pub const GAMMA_STEP_DENOMINATOR: u32 = 20;

impl Default for GammaGrid {
    /// 0.05 to 0.5 for both revision weights.
    fn default() -> Self {
        Self {
            attention_steps: (1..=10).collect(),
            disentangled_steps: (1..=10).collect(),
        }
    }
}

impl GammaGrid {
    /// Builds a grid from decimal values, each a multiple of 0.05 in `[0, 1]`.
    pub fn from_values(attention: &[f64], disentangled: &[f64]) -> Result<Self> {
        let steps = |vals: &[f64]| -> Result<Vec<u32>> {
            vals.iter()
                .map(|&v| {
                    let k = (v * f64::from(GAMMA_STEP_DENOMINATOR)).round();
                    if !(0.0..=f64::from(GAMMA_STEP_DENOMINATOR)).contains(&k)
                        || (k / f64::from(GAMMA_STEP_DENOMINATOR) - v).abs() > 1e-9
                    {
                        return Err(Error::Contract(format!("gamma grid value {v} is not a multiple of 0.05 in [0, 1]")));
                    }
                    Ok(k as u32)
                })
                .collect()
        };
        Ok(Self {
            attention_steps: steps(attention)?,
            disentangled_steps: steps(disentangled)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaPoint {
    pub attention: f64,
    pub disentangled: f64,
    /// `None` when the plain weight would be negative.
    pub gamma: Option<GammaWeights>,
    pub summary: Option<EvalSummary>,
}

/// Grid points in attention-major order with their γ, or `None` if skipped.
pub fn gamma_grid(grid: &GammaGrid) -> Vec<(f64, f64, Option<GammaWeights>)> {
    let d = f64::from(GAMMA_STEP_DENOMINATOR);
    let mut out = Vec::new();
    for &k2 in &grid.attention_steps {
        for &k3 in &grid.disentangled_steps {
            let (g2, g3) = (f64::from(k2) / d, f64::from(k3) / d);
            let gamma = (k2 + k3 <= GAMMA_STEP_DENOMINATOR)
                .then(|| GammaWeights::new(f64::from(GAMMA_STEP_DENOMINATOR - k2 - k3) / d, g2, g3))
                .transpose()
                .ok()
                .flatten();
            out.push((g2, g3, gamma));
        }
    }
    out
}

/// Evaluates every grid point on the test split. Returns the points and the
/// index of the best-AUC point (first one on ties).
pub fn gamma_sweep(
    params: &ModelParams,
    dataset: &Dataset,
    grid: &GammaGrid,
    sweep: &SweepConfig,
) -> Result<(Vec<GammaPoint>, Option<usize>)> {
    let outputs = TestOutputs::compute(params, dataset)?;
    let mask = BranchMask::all();
    let mut points = Vec::new();
    for (attention, disentangled, gamma) in gamma_grid(grid) {
        let summary = match &gamma {
            Some(g) => Some(outputs.score_table(dataset, g, &mask)?.evaluate(sweep)?),
            None => None,
        };
        points.push(GammaPoint {
            attention,
            disentangled,
            gamma,
            summary,
        });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(s) = &p.summary {
            if best.is_none_or(|(_, a)| s.auc > a) {
                best = Some((i, s.auc));
            }
        }
    }
    Ok((points, best.map(|(i, _)| i)))
}

pub fn gamma_sweep_csv(points: &[GammaPoint], best: Option<usize>) -> String {
    let mut out = String::from("gamma1,gamma2,gamma3,auc,best_hm,status\n");
    for (i, p) in points.iter().enumerate() {
        match (&p.gamma, &p.summary) {
            (Some(g), Some(s)) => {
                let status = if Some(i) == best { "best" } else { "ok" };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{status}",
                    g.plain(),
                    g.attention(),
                    g.disentangled(),
                    100.0 * s.auc,
                    100.0 * s.best_hm
                );
            }
            _ => {
                let _ = writeln!(out, ",{},{},,,skipped", p.attention, p.disentangled);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_configurations_with_distinct_masks() {
        let masks: Vec<BranchMask> = ABLATION_CONFIGS
            .iter()
            .map(|(_, d)| BranchMask::disabling(d).unwrap())
            .collect();
        assert_eq!(masks.len(), 12);
        for i in 0..12 {
            for j in i + 1..12 {
                assert_ne!(masks[i], masks[j], "{} vs {}", ABLATION_CONFIGS[i].0, ABLATION_CONFIGS[j].0);
            }
        }
        assert_eq!(masks[3], BranchMask::all());
    }

    #[test]
    fn chosen_gamma_is_exact_on_the_grid() {
        let grid = GammaGrid::from_values(&[0.25], &[0.05]).unwrap();
        let pts = gamma_grid(&grid);
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].2, Some(GammaWeights::default()));
    }

    #[test]
    fn default_grid_has_one_hundred_points() {
        let pts = gamma_grid(&GammaGrid::default());
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| p.2.is_some()));
    }

    #[test]
    fn negative_plain_weight_is_skipped() {
        let grid = GammaGrid::from_values(&[0.6, 0.2], &[0.5]).unwrap();
        let pts = gamma_grid(&grid);
        assert!(pts[0].2.is_none());
        assert!(pts[1].2.is_some());
        assert!(GammaGrid::from_values(&[0.33], &[0.05]).is_err());
    }
}
