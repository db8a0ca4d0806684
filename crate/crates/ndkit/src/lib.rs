//! Minimal dense-tensor arithmetic with a reverse-mode tape and an Adam optimizer.
//!
//! Everything is `f64` and row-major. The only broadcasting supported is the
//! row-wise bias addition used by fully connected layers.

mod error;
mod graph;
mod optim;
mod tensor;

pub use error::NdError;
pub use graph::{Graph, Var, LOG_CLAMP};
pub use optim::{AdamConfig, AdamState};
pub use tensor::Tensor;

pub type Result<T> = std::result::Result<T, NdError>;

/// Numerically stable softmax of a slice, written into `out`.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    debug_assert_eq!(logits.len(), out.len());
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Softmax of a slice as a new vector.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, &mut out);
    out
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
