//! The network: shared trunk, simple-primitive classifiers, the two
//! cross-conditioned attention nets and the disentanglement stack.
//!
//! The trunk emits `2h` units; the first `h` form the state branch `z_s` and
//! the last `h` the object branch `z_o`. Attention for states is computed
//! from `z_o` and attention for objects from `z_s`.

mod checkpoint;

use ndkit::{Graph, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub num_states: usize,
    pub num_objects: usize,
    pub feature_dim: usize,
    pub hidden: usize,
}

/// Named subnetworks, in canonical (checkpoint) order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subnet {
    Trunk,
    StateClassifier,
    ObjectClassifier,
    StateAttention,
    ObjectAttention,
    StateGenerator,
    ObjectGenerator,
    StateDisentangled,
    ObjectDisentangled,
    StateDenoiser,
    ObjectDenoiser,
    StateDiscriminator,
    ObjectDiscriminator,
}

/// Learning-rate group a subnetwork belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    Trunk,
    Adversary,
    Other,
}

impl Subnet {
    pub const ALL: [Subnet; 13] = [
        Subnet::Trunk,
        Subnet::StateClassifier,
        Subnet::ObjectClassifier,
        Subnet::StateAttention,
        Subnet::ObjectAttention,
        Subnet::StateGenerator,
        Subnet::ObjectGenerator,
        Subnet::StateDisentangled,
        Subnet::ObjectDisentangled,
        Subnet::StateDenoiser,
        Subnet::ObjectDenoiser,
        Subnet::StateDiscriminator,
        Subnet::ObjectDiscriminator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subnet::Trunk => "f_e",
            Subnet::StateClassifier => "f_s",
            Subnet::ObjectClassifier => "f_o",
            Subnet::StateAttention => "f_sa",
            Subnet::ObjectAttention => "f_oa",
            Subnet::StateGenerator => "f_sg",
            Subnet::ObjectGenerator => "f_og",
            Subnet::StateDisentangled => "f_ds",
            Subnet::ObjectDisentangled => "f_do",
            Subnet::StateDenoiser => "f_s_den",
            Subnet::ObjectDenoiser => "f_o_den",
            Subnet::StateDiscriminator => "f_s_dis",
            Subnet::ObjectDiscriminator => "f_o_dis",
        }
    }

    pub fn group(self) -> ParamGroup {
        match self {
            Subnet::Trunk => ParamGroup::Trunk,
            Subnet::StateDenoiser
            | Subnet::ObjectDenoiser
            | Subnet::StateDiscriminator
            | Subnet::ObjectDiscriminator => ParamGroup::Adversary,
            _ => ParamGroup::Other,
        }
    }

    /// Layer widths from input to output.
    pub fn widths(self, d: &ModelDims) -> Vec<usize> {
        let (h, s, o) = (d.hidden, d.num_states, d.num_objects);
        match self {
            Subnet::Trunk => vec![d.feature_dim, h, 2 * h],
            Subnet::StateClassifier | Subnet::StateDisentangled | Subnet::ObjectDenoiser => vec![h, s],
            Subnet::ObjectClassifier | Subnet::ObjectDisentangled | Subnet::StateDenoiser => vec![h, o],
            Subnet::StateAttention => vec![h, h, h, s],
            Subnet::ObjectAttention => vec![h, h, h, o],
            Subnet::StateGenerator | Subnet::ObjectGenerator => vec![h, h, h],
            Subnet::StateDiscriminator | Subnet::ObjectDiscriminator => vec![h, 1],
        }
    }

    /// Nonlinearity after the last layer (hidden layers always use ReLU).
    fn output(self) -> Output {
        match self {
            Subnet::Trunk | Subnet::StateGenerator | Subnet::ObjectGenerator => Output::Relu,
            Subnet::StateAttention
            | Subnet::ObjectAttention
            | Subnet::StateDiscriminator
            | Subnet::ObjectDiscriminator => Output::Sigmoid,
            _ => Output::Softmax,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Output {
    Relu,
    Sigmoid,
    Softmax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `in × out`
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub dims: ModelDims,
    nets: Vec<Vec<Linear>>,
}

impl ModelParams {
    /// Uniform fan-in initialization, `U(-1/√fan_in, 1/√fan_in)` for weights and biases.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nets = Subnet::ALL
            .iter()
            .map(|net| {
                net.widths(&dims)
                    .windows(2)
                    .map(|w| {
                        let bound = 1.0 / (w[0] as f64).sqrt();
                        let mut draw = |n: usize| -> Vec<f64> {
                            (0..n).map(|_| rng.random_range(-bound..bound)).collect()
                        };
                        Linear {
                            weight: Tensor::new(vec![w[0], w[1]], draw(w[0] * w[1])).unwrap(),
                            bias: Tensor::new(vec![w[1]], draw(w[1])).unwrap(),
                        }
                    })
                    .collect()
            })
            .collect();
        Self { dims, nets }
    }

    pub(crate) fn from_nets(dims: ModelDims, nets: Vec<Vec<Linear>>) -> Self {
        Self { dims, nets }
    }

    pub fn net(&self, net: Subnet) -> &[Linear] {
        &self.nets[net as usize]
    }

    pub fn net_mut(&mut self, net: Subnet) -> &mut [Linear] {
        &mut self.nets[net as usize]
    }

    /// Zeroes the last layer of the given subnetworks.
    pub fn zero_output_layers(&mut self, nets: &[Subnet]) {
        for &n in nets {
            if let Some(last) = self.nets[n as usize].last_mut() {
                last.weight.values_mut().fill(0.0);
                last.bias.values_mut().fill(0.0);
            }
        }
    }

    /// `(name, tensor)` pairs in canonical order, e.g. `f_sa.2.weight`.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for net in Subnet::ALL {
            for (i, layer) in self.net(net).iter().enumerate() {
                out.push((format!("{}.{i}.weight", net.name()), &layer.weight));
                out.push((format!("{}.{i}.bias", net.name()), &layer.bias));
            }
        }
        out
    }

    /// Parameter tensor by canonical name.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let (net, idx, kind) = parse_name(name)?;
        let layer = self.nets[net as usize].get_mut(idx)?;
        Some(if kind { &mut layer.weight } else { &mut layer.bias })
    }

    /// Mutable tensors of one learning-rate group, in canonical order.
    pub fn group_tensors_mut(&mut self, group: ParamGroup) -> Vec<&mut Tensor> {
        Subnet::ALL
            .iter()
            .zip(self.nets.iter_mut())
            .filter(|(net, _)| net.group() == group)
            .flat_map(|(_, layers)| layers.iter_mut())
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.all_finite())
    }
}

/// Which parameters a forward pass differentiates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    /// Trunk, classifiers, attention, generators and `f_d` are live;
    /// denoisers and discriminators are held fixed.
    Generator,
    /// Only denoisers and discriminators are live; every feature they see
    /// is a constant.
    Adversary,
    /// Nothing is differentiated.
    Inference,
}

/// Parameter leaves of one graph.
pub struct Bound {
    layers: Vec<Vec<(Var, Var)>>,
}

impl Bound {
    /// Records every parameter on `graph`. With `freeze_trunk` the trunk is a
    /// constant even in the generator phase.
    pub fn new(graph: &mut Graph, params: &ModelParams, phase: Phase, freeze_trunk: bool) -> Self {
        let layers = Subnet::ALL
            .iter()
            .map(|&net| {
                let live = match (phase, net.group()) {
                    (Phase::Inference, _) => false,
                    (Phase::Generator, ParamGroup::Adversary) => false,
                    (Phase::Generator, ParamGroup::Trunk) => !freeze_trunk,
                    (Phase::Generator, ParamGroup::Other) => true,
                    (Phase::Adversary, g) => g == ParamGroup::Adversary,
                };
                params
                    .net(net)
                    .iter()
                    .map(|l| {
                        let w = graph.leaf(&l.weight.clone().with_requires_grad(live));
                        let b = graph.leaf(&l.bias.clone().with_requires_grad(live));
                        (w, b)
                    })
                    .collect()
            })
            .collect();
        Self { layers }
    }

    pub fn vars(&self, net: Subnet) -> &[(Var, Var)] {
        &self.layers[net as usize]
    }

    /// Copies graph gradients into the parameter tensors of `group`.
    /// Tensors without a gradient get an explicit zero gradient.
    pub fn write_grads(&self, graph: &Graph, params: &mut ModelParams, group: ParamGroup) -> Result<()> {
        for net in Subnet::ALL.into_iter().filter(|n| n.group() == group) {
            for (layer, &(w, b)) in params.net_mut(net).iter_mut().zip(self.vars(net)) {
                for (t, v) in [(&mut layer.weight, w), (&mut layer.bias, b)] {
                    t.zero_grad();
                    match graph.grad(v) {
                        Some(g) => t.accumulate_grad(g)?,
                        None => t.accumulate_grad(&vec![0.0; t.len()])?,
                    }
                }
            }
        }
        Ok(())
    }

    /// Gradient of one parameter tensor by canonical name, if any flowed to it.
    pub fn grad_by_name<'g>(&self, graph: &'g Graph, name: &str) -> Option<&'g [f64]> {
        let (net, idx, is_weight) = parse_name(name)?;
        let (w, b) = *self.vars(net).get(idx)?;
        graph.grad(if is_weight { w } else { b })
    }
}

/// `f_sa.2.weight` → `(StateAttention, 2, true)`.
fn parse_name(name: &str) -> Option<(Subnet, usize, bool)> {
    let mut parts = name.split('.');
    let net = parts.next()?;
    let idx = parts.next()?.parse().ok()?;
    let is_weight = match parts.next()? {
        "weight" => true,
        "bias" => false,
        _ => return None,
    };
    let net = Subnet::ALL.into_iter().find(|n| n.name() == net)?;
    Some((net, idx, is_weight))
}

fn apply(graph: &mut Graph, bound: &Bound, net: Subnet, x: Var) -> Result<Var> {
    let layers = bound.vars(net);
    let mut h = x;
    for (i, &(w, b)) in layers.iter().enumerate() {
        h = graph.matmul(h, w)?;
        h = graph.add_row(h, b)?;
        if i + 1 < layers.len() {
            h = graph.relu(h);
        }
    }
    Ok(match net.output() {
        Output::Relu => graph.relu(h),
        Output::Sigmoid => graph.sigmoid(h),
        Output::Softmax => graph.softmax(h),
    })
}

/// Every head output for a batch, as nodes on the graph.
///
/// Matrices are `batch × width`. `*_gen` entries are computed on the
/// generated features `z'`, `*_real` on the trunk features `z`.
#[derive(Clone, Copy, Debug)]
pub struct ForwardBundle {
    pub z_s: Var,
    pub z_o: Var,
    pub p_s: Var,
    pub p_o: Var,
    pub a_s: Var,
    pub a_o: Var,
    pub z_s_gen: Var,
    pub z_o_gen: Var,
    pub p_ds_real: Var,
    pub p_do_real: Var,
    pub p_ds_gen: Var,
    pub p_do_gen: Var,
    /// `f_s_den`: object distribution predicted from state features.
    pub den_s_real: Var,
    pub den_s_gen: Var,
    /// `f_o_den`: state distribution predicted from object features.
    pub den_o_real: Var,
    pub den_o_gen: Var,
    pub dis_s_real: Var,
    pub dis_s_gen: Var,
    pub dis_o_real: Var,
    pub dis_o_gen: Var,
    pub batch: usize,
}

/// Stacks feature rows into a `batch × d` matrix.
pub fn feature_matrix<'a>(rows: impl IntoIterator<Item = &'a [f32]>, d: usize) -> Result<Tensor> {
    let mut values = Vec::new();
    let mut n = 0;
    for row in rows {
        if row.len() != d {
            return Err(Error::Dimension(format!("feature row has {} values, model expects {d}", row.len())));
        }
        values.extend(row.iter().map(|&v| f64::from(v)));
        n += 1;
    }
    Ok(Tensor::new(vec![n, d], values)?)
}

pub fn forward_batch(graph: &mut Graph, bound: &Bound, phase: Phase, x: &Tensor, dims: &ModelDims) -> Result<ForwardBundle> {
    if x.rank() != 2 || x.shape()[1] != dims.feature_dim {
        return Err(Error::Dimension(format!(
            "input shape {:?}, model expects rows of {}",
            x.shape(),
            dims.feature_dim
        )));
    }
    let h = dims.hidden;
    let input = graph.constant(x.clone());
    let z = apply(graph, bound, Subnet::Trunk, input)?;
    let z_s = graph.slice_cols(z, 0, h)?;
    let z_o = graph.slice_cols(z, h, 2 * h)?;

    let p_s = apply(graph, bound, Subnet::StateClassifier, z_s)?;
    let p_o = apply(graph, bound, Subnet::ObjectClassifier, z_o)?;
    let a_s = apply(graph, bound, Subnet::StateAttention, z_o)?;
    let a_o = apply(graph, bound, Subnet::ObjectAttention, z_s)?;

    let z_s_gen = apply(graph, bound, Subnet::StateGenerator, z_s)?;
    let z_o_gen = apply(graph, bound, Subnet::ObjectGenerator, z_o)?;

    let p_ds_real = apply(graph, bound, Subnet::StateDisentangled, z_s)?;
    let p_do_real = apply(graph, bound, Subnet::ObjectDisentangled, z_o)?;
    let p_ds_gen = apply(graph, bound, Subnet::StateDisentangled, z_s_gen)?;
    let p_do_gen = apply(graph, bound, Subnet::ObjectDisentangled, z_o_gen)?;

    // adversaries see constants in their own phase
    let (zs_r, zo_r, zs_g, zo_g) = if phase == Phase::Adversary {
        (graph.detach(z_s), graph.detach(z_o), graph.detach(z_s_gen), graph.detach(z_o_gen))
    } else {
        (z_s, z_o, z_s_gen, z_o_gen)
    };
    let den_s_real = apply(graph, bound, Subnet::StateDenoiser, zs_r)?;
    let den_s_gen = apply(graph, bound, Subnet::StateDenoiser, zs_g)?;
    let den_o_real = apply(graph, bound, Subnet::ObjectDenoiser, zo_r)?;
    let den_o_gen = apply(graph, bound, Subnet::ObjectDenoiser, zo_g)?;
    let dis_s_real = apply(graph, bound, Subnet::StateDiscriminator, zs_r)?;
    let dis_s_gen = apply(graph, bound, Subnet::StateDiscriminator, zs_g)?;
    let dis_o_real = apply(graph, bound, Subnet::ObjectDiscriminator, zo_r)?;
    let dis_o_gen = apply(graph, bound, Subnet::ObjectDiscriminator, zo_g)?;

    Ok(ForwardBundle {
        z_s,
        z_o,
        p_s,
        p_o,
        a_s,
        a_o,
        z_s_gen,
        z_o_gen,
        p_ds_real,
        p_do_real,
        p_ds_gen,
        p_do_gen,
        den_s_real,
        den_s_gen,
        den_o_real,
        den_o_gen,
        dis_s_real,
        dis_s_gen,
        dis_o_real,
        dis_o_gen,
        batch: x.shape()[0],
    })
}

/// Plain per-sample outputs used at inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub p_s: Vec<Vec<f64>>,
    pub p_o: Vec<Vec<f64>>,
    pub a_s: Vec<Vec<f64>>,
    pub a_o: Vec<Vec<f64>>,
    /// Disentangled classifier on generated features.
    pub p_c_s: Vec<Vec<f64>>,
    pub p_c_o: Vec<Vec<f64>>,
    pub z_s: Vec<Vec<f64>>,
    pub z_o: Vec<Vec<f64>>,
    pub z_s_gen: Vec<Vec<f64>>,
    pub z_o_gen: Vec<Vec<f64>>,
}

impl Inference {
    pub fn len(&self) -> usize {
        self.p_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_s.is_empty()
    }
}

fn rows_of(graph: &Graph, v: Var) -> Vec<Vec<f64>> {
    let t = graph.value(v);
    let (r, _) = t.dims2();
    (0..r).map(|i| t.row(i).to_vec()).collect()
}

/// Runs the network on a batch of feature rows without recording gradients.
pub fn infer<'a>(params: &ModelParams, rows: impl IntoIterator<Item = &'a [f32]>) -> Result<Inference> {
    let x = feature_matrix(rows, params.dims.feature_dim)?;
    let mut graph = Graph::new();
    let bound = Bound::new(&mut graph, params, Phase::Inference, true);
    if x.shape()[0] == 0 {
        return Ok(Inference {
            p_s: vec![],
            p_o: vec![],
            a_s: vec![],
            a_o: vec![],
            p_c_s: vec![],
            p_c_o: vec![],
            z_s: vec![],
            z_o: vec![],
            z_s_gen: vec![],
            z_o_gen: vec![],
        });
    }
    let b = forward_batch(&mut graph, &bound, Phase::Inference, &x, &params.dims)?;
    Ok(Inference {
        p_s: rows_of(&graph, b.p_s),
        p_o: rows_of(&graph, b.p_o),
        a_s: rows_of(&graph, b.a_s),
        a_o: rows_of(&graph, b.a_o),
        p_c_s: rows_of(&graph, b.p_ds_gen),
        p_c_o: rows_of(&graph, b.p_do_gen),
        z_s: rows_of(&graph, b.z_s),
        z_o: rows_of(&graph, b.z_o),
        z_s_gen: rows_of(&graph, b.z_s_gen),
        z_o_gen: rows_of(&graph, b.z_o_gen),
    })
}

/// Single-sample forward pass.
pub fn forward(params: &ModelParams, features: &[f32]) -> Result<Inference> {
    infer(params, [features])
}

/// `(1 + a) ⊙ p`: attention fused into primitive probabilities.
pub fn attention_fuse(a: &[f64], p: &[f64]) -> Result<Vec<f64>> {
    if a.len() != p.len() {
        return Err(Error::Contract(format!(
            "attention has {} entries, probabilities {}",
            a.len(),
            p.len()
        )));
    }
    Ok(a.iter().zip(p).map(|(a, p)| a * p + p).collect())
}

/// Disentangled classifiers applied to generated features: `softmax(f_ds(f_sg(z_s)))`
/// and `softmax(f_do(f_og(z_o)))`.
pub fn disentangled_probs(params: &ModelParams, z_s: &[f64], z_o: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = params.dims.hidden;
    if z_s.len() != h || z_o.len() != h {
        return Err(Error::Dimension(format!(
            "branch features of width {} and {}, model expects {h}",
            z_s.len(),
            z_o.len()
        )));
    }
    let mut graph = Graph::new();
    let bound = Bound::new(&mut graph, params, Phase::Inference, true);
    let zs = graph.constant(Tensor::new(vec![1, h], z_s.to_vec())?);
    let zo = graph.constant(Tensor::new(vec![1, h], z_o.to_vec())?);
    let gs = apply(&mut graph, &bound, Subnet::StateGenerator, zs)?;
    let go = apply(&mut graph, &bound, Subnet::ObjectGenerator, zo)?;
    let ps = apply(&mut graph, &bound, Subnet::StateDisentangled, gs)?;
    let po = apply(&mut graph, &bound, Subnet::ObjectDisentangled, go)?;
    Ok((graph.values(ps).to_vec(), graph.values(po).to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            num_states: 4,
            num_objects: 5,
            feature_dim: 6,
            hidden: 8,
        }
    }

    fn input(seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_output_layers_give_uniform_and_half() {
        let mut p = ModelParams::init(dims(), 1);
        p.zero_output_layers(&[Subnet::StateClassifier, Subnet::StateAttention, Subnet::StateDisentangled]);
        let out = forward(&p, &input(2)).unwrap();
        assert!(out.p_s[0].iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(out.a_s[0].iter().all(|&v| v == 0.5));
        let (pcs, _) = disentangled_probs(&p, &out.z_s[0], &out.z_o[0]).unwrap();
        assert!(pcs.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn outputs_are_distributions_and_attention_is_open_interval() {
        let p = ModelParams::init(dims(), 3);
        for seed in 0..20 {
            let out = forward(&p, &input(seed)).unwrap();
            assert!((out.p_s[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((out.p_o[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((out.p_c_s[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(out.a_s[0].iter().chain(&out.a_o[0]).all(|&a| a > 0.0 && a < 1.0));
            assert_eq!(out.z_s_gen[0].len(), 8);
            assert_eq!(out.z_o_gen[0].len(), 8);
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let a = forward(&ModelParams::init(dims(), 5), &input(1)).unwrap();
        let b = forward(&ModelParams::init(dims(), 5), &input(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_input_width_is_rejected() {
        let p = ModelParams::init(dims(), 5);
        assert!(matches!(forward(&p, &[0.0; 5]), Err(Error::Dimension(_))));
        assert!(disentangled_probs(&p, &[0.0; 3], &[0.0; 8]).is_err());
    }

    #[test]
    fn fuse_values() {
        assert_eq!(attention_fuse(&[0.5], &[0.4]).unwrap(), vec![0.6000000000000001]);
        assert!((attention_fuse(&[0.5], &[0.4]).unwrap()[0] - 0.6).abs() < 1e-15);
        let p = [0.2, 0.5, 0.3];
        assert_eq!(attention_fuse(&[0.0; 3], &p).unwrap(), p.to_vec());
        assert!(attention_fuse(&[0.1, 0.2], &p).is_err());
    }

    #[test]
    fn fuse_with_constant_attention_keeps_argmax() {
        let p = [0.1, 0.6, 0.3];
        let f = attention_fuse(&[0.7; 3], &p).unwrap();
        let argmax = |v: &[f64]| v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(argmax(&f), argmax(&p));
        for (fi, pi) in f.iter().zip(&p) {
            assert!(*fi > *pi && *fi < 2.0 * pi);
        }
    }

    #[test]
    fn parameter_count_and_names() {
        let p = ModelParams::init(dims(), 0);
        let names: Vec<String> = p.named_tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names[0], "f_e.0.weight");
        assert!(names.contains(&"f_o_dis.0.bias".to_string()));
        // 13 subnetworks, 20 linear layers
        assert_eq!(names.len(), 2 * 20);
    }
}
