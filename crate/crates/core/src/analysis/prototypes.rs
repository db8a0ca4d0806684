use std::fmt::Write as _;

use crate::data::Dataset;
use crate::model::{infer, ModelParams};
use crate::{Error, Result};

/// Class prototypes (means) and the ratio of within-class spread to
/// between-prototype distance. Lower ratios mean tighter, better separated
/// classes.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeStats {
    /// `None` for classes without samples.
    pub prototypes: Vec<Option<Vec<f64>>>,
    /// Mean Euclidean distance from each sample to its class prototype.
    pub intra_spread: f64,
    /// Mean Euclidean distance over pairs of distinct prototypes.
    pub inter_distance: f64,
    pub ratio: f64,
    pub empty_classes: Vec<usize>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn prototype_stats(embeddings: &[Vec<f64>], labels: &[usize], num_classes: usize) -> Result<PrototypeStats> {
    if embeddings.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} embeddings but {} labels",
            embeddings.len(),
            labels.len()
        )));
    }
    let width = embeddings.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; width]; num_classes];
    let mut counts = vec![0usize; num_classes];
    for (e, &y) in embeddings.iter().zip(labels) {
        if y >= num_classes || e.len() != width {
            return Err(Error::Contract(format!("label {y} or width {} out of range", e.len())));
        }
        counts[y] += 1;
        for (s, v) in sums[y].iter_mut().zip(e) {
            *s += v;
        }
    }
    let prototypes: Vec<Option<Vec<f64>>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s.into_iter().map(|v| v / c as f64).collect()))
        .collect();
    let intra_spread = if embeddings.is_empty() {
        0.0
    } else {
        embeddings
            .iter()
            .zip(labels)
            .map(|(e, &y)| dist(e, prototypes[y].as_deref().unwrap_or_default()))
            .sum::<f64>()
            / embeddings.len() as f64
    };
    let present: Vec<&Vec<f64>> = prototypes.iter().flatten().collect();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..present.len() {
        for j in i + 1..present.len() {
            total += dist(present[i], present[j]);
            pairs += 1;
        }
    }
    let inter_distance = if pairs == 0 { 0.0 } else { total / pairs as f64 };
    let ratio = if inter_distance > 0.0 {
        intra_spread / inter_distance
    } else {
        f64::INFINITY
    };
    Ok(PrototypeStats {
        empty_classes: (0..num_classes).filter(|&c| counts[c] == 0).collect(),
        prototypes,
        intra_spread,
        inter_distance,
        ratio,
    })
}

/// Prototype statistics of branch features before and after the generators,
/// computed over the test samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PrototypeReport {
    pub state_original: PrototypeStats,
    pub state_disentangled: PrototypeStats,
    pub object_original: PrototypeStats,
    pub object_disentangled: PrototypeStats,
}

pub fn prototype_report(params: &ModelParams, dataset: &Dataset) -> Result<PrototypeReport> {
    let test = dataset.test();
    let out = infer(params, test.iter().map(|s| s.features.as_slice()))?;
    let states: Vec<usize> = test.iter().map(|s| s.state).collect();
    let objects: Vec<usize> = test.iter().map(|s| s.object).collect();
    let (ns, no) = (dataset.spec.num_states, dataset.spec.num_objects);
    Ok(PrototypeReport {
        state_original: prototype_stats(&out.z_s, &states, ns)?,
        state_disentangled: prototype_stats(&out.z_s_gen, &states, ns)?,
        object_original: prototype_stats(&out.z_o, &objects, no)?,
        object_disentangled: prototype_stats(&out.z_o_gen, &objects, no)?,
    })
}

impl PrototypeReport {
    fn rows(&self) -> [(&'static str, &'static str, &PrototypeStats); 4] {
        [
            ("state", "original", &self.state_original),
            ("state", "disentangled", &self.state_disentangled),
            ("object", "original", &self.object_original),
            ("object", "disentangled", &self.object_disentangled),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("primitive,features,intra_spread,inter_distance,ratio,empty_classes\n");
        for (p, f, s) in self.rows() {
            let empty: Vec<String> = s.empty_classes.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "{p},{f},{},{},{},{}",
                s.intra_spread,
                s.inter_distance,
                s.ratio,
                empty.join(";")
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, f, s) in self.rows() {
            let _ = writeln!(
                out,
                "{p:<6} {f:<12} spread {:.4}  separation {:.4}  ratio {:.4}",
                s.intra_spread, s.inter_distance, s.ratio
            );
            if !s.empty_classes.is_empty() {
                let _ = writeln!(out, "       no test samples for classes {:?}", s.empty_classes);
            }
        }
        out
    }
}
