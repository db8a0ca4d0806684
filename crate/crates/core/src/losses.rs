//! Training objectives over a [`ForwardBundle`].
//!
//! Every term is a batch mean. The two adversarial min-max games are split
//! into a term the adversaries minimize (`*_max`) and a term the generators
//! minimize (`*_min`); which parameters receive gradients is decided by the
//! [`Phase`] the bundle was built in.

use ndkit::{Graph, Tensor, Var};

use crate::model::{ForwardBundle, Phase};
use crate::{Error, Result};

/// Scalar values of every objective for one batch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub l_sp: f64,
    pub l_att: f64,
    pub l_dc: f64,
    pub l_den_max: f64,
    pub l_den_min: f64,
    pub l_dis_max: f64,
    pub l_dis_min: f64,
    pub l_total: f64,
}

impl LossReport {
    pub const NAMES: [&'static str; 8] = [
        "l_sp", "l_att", "l_dc", "l_den_max", "l_den_min", "l_dis_max", "l_dis_min", "l_total",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.l_sp,
            self.l_att,
            self.l_dc,
            self.l_den_max,
            self.l_den_min,
            self.l_dis_max,
            self.l_dis_min,
            self.l_total,
        ]
    }

    /// First non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<(&'static str, f64)> {
        Self::NAMES
            .into_iter()
            .zip(self.values())
            .find(|(_, v)| !v.is_finite())
    }

    /// Component-wise `self + other * weight`, for running averages.
    pub fn accumulate(&mut self, other: &LossReport, weight: f64) {
        self.l_sp += other.l_sp * weight;
        self.l_att += other.l_att * weight;
        self.l_dc += other.l_dc * weight;
        self.l_den_max += other.l_den_max * weight;
        self.l_den_min += other.l_den_min * weight;
        self.l_dis_max += other.l_dis_max * weight;
        self.l_dis_min += other.l_dis_min * weight;
        self.l_total += other.l_total * weight;
    }
}

fn check_labels(bundle: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<()> {
    if states.len() != bundle.batch || objects.len() != bundle.batch {
        return Err(Error::Contract(format!(
            "batch of {} rows with {} state and {} object labels",
            bundle.batch,
            states.len(),
            objects.len()
        )));
    }
    Ok(())
}

/// `mean_i −log probs[i, labels[i]]`
fn nll(g: &mut Graph, probs: Var, labels: &[usize]) -> Result<Var> {
    let picked = g.pick(probs, labels)?;
    let logs = g.log(picked);
    let m = g.mean(logs);
    Ok(g.neg(m))
}

/// `mean_i (1/n) ‖probs[i] − target[i]‖²` for an `m × n` matrix.
fn scaled_mse(g: &mut Graph, probs: Var, target: Tensor) -> Result<Var> {
    let (m, n) = g.value(probs).dims2();
    let t = g.constant(target);
    let diff = g.sub(probs, t)?;
    let sq = g.square(diff);
    let s = g.sum(sq);
    Ok(g.scale(s, 1.0 / (m.max(1) * n.max(1)) as f64))
}

fn one_hot(rows: usize, width: usize, labels: &[usize]) -> Tensor {
    let mut v = vec![0.0; rows * width];
    for (i, &l) in labels.iter().enumerate() {
        v[i * width + l] = 1.0;
    }
    Tensor::new(vec![rows, width], v).expect("one-hot shape")
}

fn uniform(rows: usize, width: usize) -> Tensor {
    Tensor::new(vec![rows, width], vec![1.0 / width as f64; rows * width]).expect("uniform shape")
}

fn average(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let s = g.add(a, b)?;
    Ok(g.scale(s, 0.5))
}

fn sum_all(g: &mut Graph, terms: &[Var]) -> Result<Var> {
    let mut acc = terms[0];
    for &t in &terms[1..] {
        acc = g.add(acc, t)?;
    }
    Ok(acc)
}

/// Cross-entropy of the simple-primitive classifiers.
pub fn loss_sp(g: &mut Graph, b: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<Var> {
    check_labels(b, states, objects)?;
    let ls = nll(g, b.p_s, states)?;
    let lo = nll(g, b.p_o, objects)?;
    Ok(g.add(ls, lo)?)
}

/// Cross-entropy of attention-fused predictions `(1 + a) · p`.
pub fn loss_att(g: &mut Graph, b: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<Var> {
    check_labels(b, states, objects)?;
    let mut terms = Vec::with_capacity(2);
    for (a, p, labels) in [(b.a_s, b.p_s, states), (b.a_o, b.p_o, objects)] {
        let a = g.pick(a, labels)?;
        let p = g.pick(p, labels)?;
        let boost = g.add_scalar(a, 1.0);
        let fused = g.mul(boost, p)?;
        let logs = g.log(fused);
        let m = g.mean(logs);
        terms.push(g.neg(m));
    }
    Ok(g.add(terms[0], terms[1])?)
}

/// Disentangled classifiers' cross-entropy, averaged over real and generated features.
pub fn loss_dc(g: &mut Graph, b: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<Var> {
    check_labels(b, states, objects)?;
    let rs = nll(g, b.p_ds_real, states)?;
    let ro = nll(g, b.p_do_real, objects)?;
    let gs = nll(g, b.p_ds_gen, states)?;
    let go = nll(g, b.p_do_gen, objects)?;
    let real = g.add(rs, ro)?;
    let gen = g.add(gs, go)?;
    average(g, real, gen)
}

/// Denoiser accuracy term: the object-branch denoiser should recover the
/// state and the state-branch denoiser the object, on real and generated
/// features alike. Minimized by the denoisers.
pub fn loss_den_max(g: &mut Graph, b: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<Var> {
    check_labels(b, states, objects)?;
    let n = b.batch;
    let ns = g.value(b.den_o_real).dims2().1;
    let no = g.value(b.den_s_real).dims2().1;
    let or = scaled_mse(g, b.den_o_real, one_hot(n, ns, states))?;
    let og = scaled_mse(g, b.den_o_gen, one_hot(n, ns, states))?;
    let sr = scaled_mse(g, b.den_s_real, one_hot(n, no, objects))?;
    let sg = scaled_mse(g, b.den_s_gen, one_hot(n, no, objects))?;
    let state_term = average(g, or, og)?;
    let object_term = average(g, sr, sg)?;
    Ok(g.add(state_term, object_term)?)
}

/// Generators push denoiser outputs on generated features toward uniform.
pub fn loss_den_min(g: &mut Graph, b: &ForwardBundle) -> Result<Var> {
    let n = b.batch;
    let ns = g.value(b.den_o_gen).dims2().1;
    let no = g.value(b.den_s_gen).dims2().1;
    let st = scaled_mse(g, b.den_o_gen, uniform(n, ns))?;
    let ob = scaled_mse(g, b.den_s_gen, uniform(n, no))?;
    Ok(g.add(st, ob)?)
}

/// Discriminators label real features 1 and generated features 0.
pub fn loss_dis_max(g: &mut Graph, b: &ForwardBundle) -> Result<Var> {
    let mut terms = Vec::with_capacity(4);
    for (real, fake) in [(b.dis_s_real, b.dis_s_gen), (b.dis_o_real, b.dis_o_gen)] {
        let lr = g.log(real);
        let mr = g.mean(lr);
        terms.push(g.neg(mr));
        let nf = g.neg(fake);
        let comp = g.add_scalar(nf, 1.0);
        let lf = g.log(comp);
        let mf = g.mean(lf);
        terms.push(g.neg(mf));
    }
    sum_all(g, &terms)
}

/// Generators try to make the discriminators call generated features real.
pub fn loss_dis_min(g: &mut Graph, b: &ForwardBundle) -> Result<Var> {
    let mut terms = Vec::with_capacity(2);
    for fake in [b.dis_s_gen, b.dis_o_gen] {
        let l = g.log(fake);
        let m = g.mean(l);
        terms.push(g.neg(m));
    }
    sum_all(g, &terms)
}

/// One named objective, for callers that address terms individually.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossTerm {
    Sp,
    Att,
    Dc,
    DenMax,
    DenMin,
    DisMax,
    DisMin,
}

impl LossTerm {
    pub const ALL: [LossTerm; 7] = [
        LossTerm::Sp,
        LossTerm::Att,
        LossTerm::Dc,
        LossTerm::DenMax,
        LossTerm::DenMin,
        LossTerm::DisMax,
        LossTerm::DisMin,
    ];

    pub fn name(self) -> &'static str {
        LossReport::NAMES[self as usize]
    }

    pub fn build(self, g: &mut Graph, b: &ForwardBundle, states: &[usize], objects: &[usize]) -> Result<Var> {
        match self {
            LossTerm::Sp => loss_sp(g, b, states, objects),
            LossTerm::Att => loss_att(g, b, states, objects),
            LossTerm::Dc => loss_dc(g, b, states, objects),
            LossTerm::DenMax => loss_den_max(g, b, states, objects),
            LossTerm::DenMin => {
                check_labels(b, states, objects)?;
                loss_den_min(g, b)
            }
            LossTerm::DisMax => {
                check_labels(b, states, objects)?;
                loss_dis_max(g, b)
            }
            LossTerm::DisMin => {
                check_labels(b, states, objects)?;
                loss_dis_min(g, b)
            }
        }
    }
}

/// Graph nodes of every term plus the phase total.
#[derive(Clone, Copy, Debug)]
pub struct LossVars {
    pub l_sp: Var,
    pub l_att: Var,
    pub l_dc: Var,
    pub l_den_max: Var,
    pub l_den_min: Var,
    pub l_dis_max: Var,
    pub l_dis_min: Var,
    pub total: Var,
}

/// Builds all seven terms and the total for `phase`.
///
/// Generator phase: `sp + att + dc + den_min + dis_min`.
/// Adversary phase: `dc + den_max + dis_max`.
pub fn loss_total(
    g: &mut Graph,
    b: &ForwardBundle,
    states: &[usize],
    objects: &[usize],
    phase: Phase,
) -> Result<(LossVars, LossReport)> {
    let l_sp = loss_sp(g, b, states, objects)?;
    let l_att = loss_att(g, b, states, objects)?;
    let l_dc = loss_dc(g, b, states, objects)?;
    let l_den_max = loss_den_max(g, b, states, objects)?;
    let l_den_min = loss_den_min(g, b)?;
    let l_dis_max = loss_dis_max(g, b)?;
    let l_dis_min = loss_dis_min(g, b)?;
    let parts = match phase {
        Phase::Generator => vec![l_sp, l_att, l_dc, l_den_min, l_dis_min],
        Phase::Adversary => vec![l_dc, l_den_max, l_dis_max],
        Phase::Inference => {
            return Err(Error::Contract(
                "losses are defined for the generator and adversary phases only".into(),
            ))
        }
    };
    let vars = LossVars {
        l_sp,
        l_att,
        l_dc,
        l_den_max,
        l_den_min,
        l_dis_max,
        l_dis_min,
        total: sum_all(g, &parts)?,
    };
    let scalar = |v: Var| g.values(v)[0];
    let report = LossReport {
        l_sp: scalar(vars.l_sp),
        l_att: scalar(vars.l_att),
        l_dc: scalar(vars.l_dc),
        l_den_max: scalar(vars.l_den_max),
        l_den_min: scalar(vars.l_den_min),
        l_dis_max: scalar(vars.l_dis_max),
        l_dis_min: scalar(vars.l_dis_min),
        l_total: scalar(vars.total),
    };
    Ok((vars, report))
}
