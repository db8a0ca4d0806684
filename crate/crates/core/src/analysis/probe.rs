use ndkit::{AdamConfig, AdamState, Graph, Tensor};

use crate::data::Dataset;
use crate::model::{infer, ModelParams};
use crate::{Error, Result};

/// Multinomial logistic regression fitted full-batch with Adam on
/// standardized inputs. Zero-initialized, so the fit is deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub chance: f64,
}

fn standardize(rows: &[Vec<f64>], mean: &[f64], std: &[f64]) -> Vec<f64> {
    rows.iter()
        .flat_map(|r| r.iter().zip(mean).zip(std).map(|((x, m), s)| (x - m) / s))
        .collect()
}

fn accuracy(x: &[f64], labels: &[usize], w: &Tensor, b: &Tensor) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let (d, c) = w.dims2();
    let mut hits = 0;
    for (i, &y) in labels.iter().enumerate() {
        let row = &x[i * d..(i + 1) * d];
        let logits: Vec<f64> = (0..c)
            .map(|k| b.values()[k] + row.iter().enumerate().map(|(j, v)| v * w.at(j, k)).sum::<f64>())
            .collect();
        let mut best = 0;
        for k in 1..c {
            if logits[k] > logits[best] {
                best = k;
            }
        }
        hits += usize::from(best == y);
    }
    hits as f64 / labels.len() as f64
}

/// Fits a linear classifier from `train` rows to labels and reports how well
/// it transfers to `test`.
pub fn train_probe(
    train: (&[Vec<f64>], &[usize]),
    test: (&[Vec<f64>], &[usize]),
    num_classes: usize,
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    let (train_x, train_y) = train;
    let (test_x, test_y) = test;
    if train_x.is_empty() || train_x.len() != train_y.len() || test_x.len() != test_y.len() || num_classes == 0 {
        return Err(Error::Contract("probe needs non-empty, label-aligned inputs".into()));
    }
    let d = train_x[0].len();
    if train_x.iter().chain(test_x).any(|r| r.len() != d) {
        return Err(Error::Dimension("probe rows differ in width".into()));
    }
    if let Some(&y) = train_y.iter().chain(test_y).find(|&&y| y >= num_classes) {
        return Err(Error::Contract(format!("label {y} out of range for {num_classes} classes")));
    }
    let n = train_x.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| train_x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let std: Vec<f64> = (0..d)
        .map(|j| {
            let v = train_x.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 1e-12 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let xs = standardize(train_x, &mean, &std);
    let xt = standardize(test_x, &mean, &std);
    let x = Tensor::new(vec![train_x.len(), d], xs.clone())?;

    let mut w = Tensor::zeros(vec![d, num_classes]).with_requires_grad(true);
    let mut b = Tensor::zeros(vec![num_classes]).with_requires_grad(true);
    let mut adam = AdamState::new(AdamConfig::new(cfg.learning_rate, 0.0));
    for _ in 0..cfg.epochs {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let wv = g.leaf(&w);
        let bv = g.leaf(&b);
        let logits = g.matmul(xv, wv)?;
        let logits = g.add_row(logits, bv)?;
        let p = g.softmax(logits);
        let picked = g.pick(p, train_y)?;
        let lp = g.log(picked);
        let m = g.mean(lp);
        let loss = g.neg(m);
        g.backward(loss)?;
        w.zero_grad();
        b.zero_grad();
        if let Some(gw) = g.grad(wv) {
            w.accumulate_grad(gw)?;
        }
        if let Some(gb) = g.grad(bv) {
            b.accumulate_grad(gb)?;
        }
        adam.step(&mut [&mut w, &mut b])?;
    }
    Ok(ProbeResult {
        train_accuracy: accuracy(&xs, train_y, &w, &b),
        test_accuracy: accuracy(&xt, test_y, &w, &b),
        chance: 1.0 / num_classes as f64,
    })
}

/// How much object identity survives in state features, before and after
/// the state generator, next to how well the disentangled state classifier
/// still recognizes states. Probes fit on the train split and score on the
/// test split.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakageReport {
    pub object_from_original: ProbeResult,
    pub object_from_disentangled: ProbeResult,
    /// Test accuracy of the disentangled state classifier.
    pub disentangled_state_accuracy: f64,
    pub state_chance: f64,
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn leakage_report(params: &ModelParams, dataset: &Dataset, cfg: &ProbeConfig) -> Result<LeakageReport> {
    let train = dataset.train();
    let test = dataset.test();
    if test.is_empty() {
        return Err(Error::Contract("leakage report needs test samples".into()));
    }
    let tr = infer(params, train.iter().map(|s| s.features.as_slice()))?;
    let te = infer(params, test.iter().map(|s| s.features.as_slice()))?;
    let ytr: Vec<usize> = train.iter().map(|s| s.object).collect();
    let yte: Vec<usize> = test.iter().map(|s| s.object).collect();
    let no = dataset.spec.num_objects;
    let hits = test
        .iter()
        .zip(&te.p_c_s)
        .filter(|(s, p)| argmax(p) == s.state)
        .count();
    Ok(LeakageReport {
        object_from_original: train_probe((&tr.z_s, &ytr), (&te.z_s, &yte), no, cfg)?,
        object_from_disentangled: train_probe((&tr.z_s_gen, &ytr), (&te.z_s_gen, &yte), no, cfg)?,
        disentangled_state_accuracy: hits as f64 / test.len() as f64,
        state_chance: 1.0 / dataset.spec.num_states as f64,
    })
}

impl LeakageReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("measure,train_accuracy,test_accuracy,chance\n");
        for (name, r) in [
            ("object_probe_original_state_features", &self.object_from_original),
            ("object_probe_disentangled_state_features", &self.object_from_disentangled),
        ] {
            out.push_str(&format!("{name},{},{},{}\n", r.train_accuracy, r.test_accuracy, r.chance));
        }
        out.push_str(&format!(
            "disentangled_state_classifier,,{},{}\n",
            self.disentangled_state_accuracy, self.state_chance
        ));
        out
    }
}
