use std::fmt::Write as _;

use crate::data::Split;

use super::scores::{resolve, Contenders};

/// How bias constants are chosen.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// Evenly spaced biases over `[-m, m]`, `m` the largest |seen − unseen| gap.
    pub steps: usize,
    /// Add the midpoints between consecutive distinct gaps so every
    /// reachable operating point is visited.
    pub include_midpoints: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            steps: 201,
            include_midpoints: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub bias: f64,
    pub seen_acc: f64,
    pub unseen_acc: f64,
}

/// Curve and headline metrics, all in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSummary {
    /// Sorted by bias, ascending.
    pub sweep: Vec<SweepPoint>,
    pub best_seen: f64,
    pub best_unseen: f64,
    pub best_hm: f64,
    pub auc: f64,
}

pub fn harmonic_mean(seen: f64, unseen: f64) -> f64 {
    if seen + unseen == 0.0 {
        0.0
    } else {
        2.0 * seen * unseen / (seen + unseen)
    }
}

/// Trapezoidal area under unseen accuracy as a function of seen accuracy.
///
/// Points are ordered by seen accuracy (ties: unseen descending) and exact
/// duplicates dropped, so vertical steps add nothing.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    pts.dedup();
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

fn bias_grid(contenders: &[Contenders], cfg: &SweepConfig) -> Vec<f64> {
    let mut gaps: Vec<f64> = contenders
        .iter()
        .filter_map(|c| c.unseen.map(|(u, _)| c.seen.0 - u))
        .filter(|g| g.is_finite())
        .collect();
    gaps.sort_by(f64::total_cmp);
    gaps.dedup();
    let m = gaps.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    let mut biases = vec![f64::NEG_INFINITY, f64::INFINITY];
    match cfg.steps {
        0 => {}
        1 => biases.push(0.0),
        n => biases.extend((0..n).map(|i| -m + 2.0 * m * i as f64 / (n - 1) as f64)),
    }
    if cfg.include_midpoints {
        biases.extend(gaps.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
        if let (Some(first), Some(last)) = (gaps.first(), gaps.last()) {
            biases.push(first - 1.0);
            biases.push(last + 1.0);
        }
    }
    biases.sort_by(f64::total_cmp);
    biases.dedup();
    biases
}

/// `truth[i]` is the pair index and split of sample `i`.
pub(crate) fn sweep(contenders: &[Contenders], truth: &[(usize, Split)], cfg: &SweepConfig) -> EvalSummary {
    let n_seen = truth.iter().filter(|t| t.1 == Split::TestSeen).count().max(1) as f64;
    let n_unseen = truth.iter().filter(|t| t.1 == Split::TestUnseen).count().max(1) as f64;
    let sweep: Vec<SweepPoint> = bias_grid(contenders, cfg)
        .into_iter()
        .map(|bias| {
            let (mut hit_s, mut hit_u) = (0usize, 0usize);
            for (c, &(target, split)) in contenders.iter().zip(truth) {
                if resolve(c, bias) == target {
                    match split {
                        Split::TestSeen => hit_s += 1,
                        Split::TestUnseen => hit_u += 1,
                        Split::Train => {}
                    }
                }
            }
            SweepPoint {
                bias,
                seen_acc: hit_s as f64 / n_seen,
                unseen_acc: hit_u as f64 / n_unseen,
            }
        })
        .collect();
    let best_seen = sweep.iter().map(|p| p.seen_acc).fold(0.0, f64::max);
    let best_unseen = sweep.iter().map(|p| p.unseen_acc).fold(0.0, f64::max);
    let best_hm = sweep
        .iter()
        .map(|p| harmonic_mean(p.seen_acc, p.unseen_acc))
        .fold(0.0, f64::max);
    let points: Vec<(f64, f64)> = sweep.iter().map(|p| (p.seen_acc, p.unseen_acc)).collect();
    EvalSummary {
        auc: auc(&points),
        sweep,
        best_seen,
        best_unseen,
        best_hm,
    }
}

impl EvalSummary {
    pub const CSV_HEADER: &'static str = "best_seen,best_unseen,best_hm,auc";

    /// Metrics as percentages, one data row.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            100.0 * self.best_seen,
            100.0 * self.best_unseen,
            100.0 * self.best_hm,
            100.0 * self.auc
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    /// `bias,seen_acc,unseen_acc` for every swept constant.
    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("bias,seen_acc,unseen_acc\n");
        for p in &self.sweep {
            let _ = writeln!(out, "{},{},{}", p.bias, p.seen_acc, p.unseen_acc);
        }
        out
    }

    /// Two-column `seen_acc,unseen_acc` curve in seen order, ready to plot.
    pub fn curve_csv(&self) -> String {
        let mut pts: Vec<(f64, f64)> = self.sweep.iter().map(|p| (p.seen_acc, p.unseen_acc)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        pts.dedup();
        let mut out = String::from("seen_acc,unseen_acc\n");
        for (s, u) in pts {
            let _ = writeln!(out, "{s},{u}");
        }
        out
    }
}
