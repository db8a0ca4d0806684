use std::fs;
use std::path::Path;

use ndkit::Tensor;

use super::{Linear, ModelDims, ModelParams, Subnet};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SADSPCK1";

pub fn encode_checkpoint(params: &ModelParams) -> Vec<u8> {
    let d = params.dims;
    let mut out = Vec::with_capacity(64 + 8 * params.num_parameters());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [d.num_states, d.num_objects, d.feature_dim, d.hidden] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for (name, t) in params.named_tensors() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &dim in t.shape() {
            out.extend_from_slice(&(dim as u32).to_le_bytes());
        }
        for v in t.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(params)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|message| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], String> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(format!(
                "truncated while reading {what}: expected at least {end} bytes, file has {}",
                self.bytes.len()
            ));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> std::result::Result<usize, String> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> std::result::Result<ModelParams, String> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err("bad magic, not a checkpoint file".into());
    }
    let dims = ModelDims {
        num_states: r.u32("header")?,
        num_objects: r.u32("header")?,
        feature_dim: r.u32("header")?,
        hidden: r.u32("header")?,
    };
    // Check the total size up front so truncation reports the expected length.
    let expected = expected_len(&dims);
    if bytes.len() != expected {
        return Err(format!(
            "length mismatch: expected {expected} bytes for dims {}x{}x{} h={}, file has {}",
            dims.num_states,
            dims.num_objects,
            dims.feature_dim,
            dims.hidden,
            bytes.len()
        ));
    }
    let mut nets = Vec::with_capacity(Subnet::ALL.len());
    for net in Subnet::ALL {
        let widths = net.widths(&dims);
        let mut layers = Vec::new();
        for (i, w) in widths.windows(2).enumerate() {
            let weight = read_tensor(&mut r, &format!("{}.{i}.weight", net.name()), &[w[0], w[1]])?;
            let bias = read_tensor(&mut r, &format!("{}.{i}.bias", net.name()), &[w[1]])?;
            layers.push(Linear { weight, bias });
        }
        nets.push(layers);
    }
    Ok(ModelParams::from_nets(dims, nets))
}

fn expected_len(dims: &ModelDims) -> usize {
    let mut n = 8 + 16;
    for net in Subnet::ALL {
        for (i, w) in net.widths(dims).windows(2).enumerate() {
            for (suffix, shape) in [("weight", vec![w[0], w[1]]), ("bias", vec![w[1]])] {
                let name_len = format!("{}.{i}.{suffix}", net.name()).len();
                n += 4 + name_len + 4 + 4 * shape.len() + 8 * shape.iter().product::<usize>();
            }
        }
    }
    n
}

fn read_tensor(r: &mut Reader<'_>, name: &str, shape: &[usize]) -> std::result::Result<Tensor, String> {
    let len = r.u32(name)?;
    let got = r.take(len, name)?;
    if got != name.as_bytes() {
        return Err(format!(
            "expected tensor {name}, found {}",
            String::from_utf8_lossy(got)
        ));
    }
    let rank = r.u32(name)?;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(r.u32(name)?);
    }
    if dims != shape {
        return Err(format!("tensor {name} has shape {dims:?}, expected {shape:?}"));
    }
    let n: usize = shape.iter().product();
    let raw = r.take(8 * n, name)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(shape.to_vec(), values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::init(
            ModelDims {
                num_states: 3,
                num_objects: 4,
                feature_dim: 5,
                hidden: 6,
            },
            11,
        )
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let p = params();
        let bytes = encode_checkpoint(&p);
        assert_eq!(bytes.len(), expected_len(&p.dims));
        let q = decode_checkpoint(&bytes).unwrap();
        assert_eq!(p, q);
        assert_eq!(encode_checkpoint(&q), bytes);
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let mut bytes = encode_checkpoint(&params());
        bytes[0] = b'X';
        assert!(decode_checkpoint(&bytes).unwrap_err().contains("magic"));
    }

    #[test]
    fn truncation_names_both_lengths() {
        let bytes = encode_checkpoint(&params());
        let full = bytes.len();
        let err = decode_checkpoint(&bytes[..full - 3]).unwrap_err();
        assert!(err.contains(&format!("expected {full}")), "{err}");
        assert!(err.contains(&format!("file has {}", full - 3)), "{err}");
        let err = decode_checkpoint(&bytes[..12]).unwrap_err();
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        let p = params();
        save_checkpoint(&p, &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), p);
        assert!(matches!(
            load_checkpoint(&dir.path().join("missing.bin")),
            Err(Error::Io { .. })
        ));
    }
}
