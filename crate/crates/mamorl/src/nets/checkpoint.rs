//! Text checkpoint format: a magic header, `meta key value` lines, then
//! per-tensor blocks (`tensor <name> <rank> <dims...>` followed by one
//! line of values). Floats are written in Rust's shortest round-trip
//! form, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const CKPT_MAGIC: &str = "MAMORL-CKPT-1";

#[derive(Default)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require_meta(&self, key: &str) -> Result<&str> {
        self.meta_value(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing meta key `{key}`")))
    }

    /// Record parameters under their tensor names (names must be unique).
    pub fn push_params(&mut self, params: &[Tensor]) -> Result<()> {
        for p in params {
            if p.name().is_empty() {
                return Err(Error::Checkpoint("cannot checkpoint an unnamed tensor".into()));
            }
            if self.tensors.iter().any(|(n, _, _)| n == p.name()) {
                return Err(Error::Checkpoint(format!("duplicate tensor name `{}`", p.name())));
            }
            self.tensors.push((p.name().to_string(), p.shape().to_vec(), p.to_vec()));
        }
        Ok(())
    }

    /// Copy stored values into freshly built parameters, matched by name.
    pub fn load_into(&self, params: &[Tensor]) -> Result<()> {
        for p in params {
            let (_, shape, values) = self
                .tensors
                .iter()
                .find(|(n, _, _)| n == p.name())
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{}` not in checkpoint", p.name())))?;
            if shape != p.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{}` has shape {:?} in checkpoint but {:?} in network",
                    p.name(),
                    shape,
                    p.shape()
                )));
            }
            p.set_values(values);
        }
        Ok(())
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let mut out = String::new();
    out.push_str(CKPT_MAGIC);
    out.push('\n');
    for (k, v) in &ckpt.meta {
        out.push_str(&format!("meta {k} {v}\n"));
    }
    for (name, shape, values) in &ckpt.tensors {
        out.push_str(&format!("tensor {name} {}", shape.len()));
        for d in shape {
            out.push_str(&format!(" {d}"));
        }
        out.push('\n');
        let mut first = true;
        for v in values {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
            first = false;
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim() == CKPT_MAGIC => {}
        other => {
            return Err(Error::Checkpoint(format!(
                "bad magic header {other:?}, expected `{CKPT_MAGIC}`"
            )))
        }
    }
    let mut ckpt = Checkpoint::new();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (key, value) = rest
                .split_once(' ')
                .ok_or_else(|| Error::Checkpoint(format!("malformed meta line `{line}`")))?;
            ckpt.meta.push((key.to_string(), value.to_string()));
        } else if let Some(rest) = line.strip_prefix("tensor ") {
            let mut parts = rest.split_whitespace();
            let name = parts
                .next()
                .ok_or_else(|| Error::Checkpoint("tensor line missing name".into()))?
                .to_string();
            let rank: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Checkpoint(format!("bad rank in `{line}`")))?;
            let shape: Vec<usize> = parts
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Checkpoint(format!("bad dims in `{line}`: {e}")))?;
            if shape.len() != rank {
                return Err(Error::Checkpoint(format!("rank/dims mismatch in `{line}`")));
            }
            let expect: usize = shape.iter().product();
            let values_line = lines
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` missing values")))?;
            let values: Vec<f64> = values_line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Checkpoint(format!("bad value in `{name}`: {e}")))?;
            if values.len() != expect {
                return Err(Error::Checkpoint(format!(
                    "tensor `{name}` expects {expect} values, found {}",
                    values.len()
                )));
            }
            ckpt.tensors.push((name, shape, values));
        } else {
            return Err(Error::Checkpoint(format!("unrecognized line `{line}`")));
        }
    }
    Ok(ckpt)
}
