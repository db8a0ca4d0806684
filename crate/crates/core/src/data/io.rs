//! Feature file reader and writer.
//!
//! Binary layout, little-endian: `b"SADSPFV1"`, then `u32` |S|, |O|, d and
//! sample count, then per sample `d × f32` features, `u16` state, `u16`
//! object and `u8` split (0 train, 1 test-seen, 2 test-unseen).
//!
//! Paths ending in `.csv` use a text variant with the same column order and a
//! mandatory header row. The text form carries no |S|/|O| header, so those
//! counts are taken as one past the largest index present.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Dataset, Sample, Split};
use crate::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 8] = b"SADSPFV1";

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn write_feature_file(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let bytes = if is_csv(path) {
        encode_csv(dataset).into_bytes()
    } else {
        encode_binary(dataset)
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_feature_file(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if is_csv(path) {
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            path: path.into(),
            location: format!("byte {}", e.utf8_error().valid_up_to()),
            message: "file is not valid UTF-8".into(),
        })?;
        decode_csv(path, &text)
    } else {
        decode_binary(path, &bytes)
    }
}

fn encode_binary(ds: &Dataset) -> Vec<u8> {
    let d = ds.spec.feature_dim;
    let mut out = Vec::with_capacity(24 + ds.samples.len() * (4 * d + 5));
    out.extend_from_slice(FEATURE_MAGIC);
    for v in [ds.spec.num_states, ds.spec.num_objects, d, ds.samples.len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for s in &ds.samples {
        for f in &s.features {
            out.extend_from_slice(&f.to_le_bytes());
        }
        out.extend_from_slice(&(s.state as u16).to_le_bytes());
        out.extend_from_slice(&(s.object as u16).to_le_bytes());
        out.push(s.split.code());
    }
    out
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, at: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.into(),
            location: format!("byte offset {at}"),
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(
                self.pos,
                format!(
                    "truncated while reading {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
}

fn decode_binary(path: &Path, bytes: &[u8]) -> Result<Dataset> {
    let mut cur = Cursor { path, bytes, pos: 0 };
    let magic = cur.take(8, "magic")?;
    if magic != FEATURE_MAGIC {
        return Err(cur.err(0, format!("bad magic {:?}", String::from_utf8_lossy(magic))));
    }
    let ns = cur.u32("state count")? as usize;
    let no = cur.u32("object count")? as usize;
    let d = cur.u32("feature dimension")? as usize;
    let n = cur.u32("sample count")? as usize;
    if ns == 0 || no == 0 {
        return Err(cur.err(8, "state and object counts must be positive"));
    }
    let mut samples = Vec::with_capacity(n.min(1 << 20));
    for i in 0..n {
        let start = cur.pos;
        let raw = cur.take(4 * d, &format!("features of sample {i}"))?;
        let features = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let state = cur.u16("state index")? as usize;
        let object = cur.u16("object index")? as usize;
        let code_at = cur.pos;
        let code = cur.take(1, "split code")?[0];
        if state >= ns || object >= no {
            return Err(cur.err(
                start,
                format!("sample {i}: pair ({state}, {object}) outside {ns}x{no}"),
            ));
        }
        let split = Split::from_code(code)
            .ok_or_else(|| cur.err(code_at, format!("sample {i}: unknown split code {code}")))?;
        samples.push(Sample {
            features,
            state,
            object,
            split,
        });
    }
    if cur.pos != bytes.len() {
        return Err(cur.err(cur.pos, format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    Dataset::from_samples(ns, no, d, samples, 0)
}

fn encode_csv(ds: &Dataset) -> String {
    let d = ds.spec.feature_dim;
    let mut out = String::new();
    let header: Vec<String> = (0..d)
        .map(|i| format!("f{i}"))
        .chain(["state", "object", "split"].map(String::from))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for s in &ds.samples {
        for f in &s.features {
            // `{}` on f32 prints the shortest string that round-trips
            write!(out, "{f},").unwrap();
        }
        writeln!(out, "{},{},{}", s.state, s.object, s.split.code()).unwrap();
    }
    out
}

fn decode_csv(path: &Path, text: &str) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.into(),
        location: format!("line {line}"),
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header row".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns.len() < 4 || columns[columns.len() - 3..] != ["state", "object", "split"] {
        return Err(err(1, "header must end with state,object,split".into()));
    }
    if columns[..columns.len() - 3].iter().any(|c| c.parse::<f64>().is_ok()) {
        return Err(err(1, "header row looks like data".into()));
    }
    let d = columns.len() - 3;
    let mut samples = Vec::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').map(str::trim).collect();
        if cells.len() != d + 3 {
            return Err(err(line, format!("expected {} columns, found {}", d + 3, cells.len())));
        }
        let features = cells[..d]
            .iter()
            .map(|c| c.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| err(line, format!("bad feature value: {e}")))?;
        let index = |c: &str, what: &str| {
            c.parse::<u16>()
                .map(usize::from)
                .map_err(|e| err(line, format!("bad {what} index {c:?}: {e}")))
        };
        let state = index(cells[d], "state")?;
        let object = index(cells[d + 1], "object")?;
        let code = cells[d + 2]
            .parse::<u8>()
            .ok()
            .and_then(Split::from_code)
            .ok_or_else(|| err(line, format!("bad split code {:?}", cells[d + 2])))?;
        samples.push(Sample {
            features,
            state,
            object,
            split: code,
        });
    }
    let ns = samples.iter().map(|s| s.state + 1).max().unwrap_or(0);
    let no = samples.iter().map(|s| s.object + 1).max().unwrap_or(0);
    Dataset::from_samples(ns, no, d, samples, 0)
}

/// Human-readable list of seen and unseen pairs next to a feature file.
pub fn write_pair_sidecar(
    path: impl AsRef<Path>,
    dataset: &Dataset,
    feasible: Option<&[Vec<bool>]>,
) -> Result<()> {
    let spec = &dataset.spec;
    let unseen: std::collections::BTreeSet<_> = dataset
        .split(Split::TestUnseen)
        .map(Sample::pair)
        .collect();
    let mut out = String::new();
    writeln!(out, "states {}", spec.num_states).unwrap();
    writeln!(out, "objects {}", spec.num_objects).unwrap();
    writeln!(out, "seen_pairs {}", spec.seen_pairs.len()).unwrap();
    writeln!(out, "unseen_test_pairs {}", unseen.len()).unwrap();
    for (s, o) in &spec.seen_pairs {
        writeln!(out, "seen {s} {o}").unwrap();
    }
    for (s, o) in &unseen {
        writeln!(out, "unseen {s} {o}").unwrap();
    }
    if let Some(mask) = feasible {
        for (s, row) in mask.iter().enumerate() {
            for (o, f) in row.iter().enumerate() {
                if *f {
                    writeln!(out, "feasible {s} {o}").unwrap();
                }
            }
        }
    }
    let path = path.as_ref();
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
