//! Checkpoint files: a text header followed by raw little-endian `f64` data.
//!
//! ```text
//! TOAD-CHECKPOINT 1
//! topic_lstm.fwd.w_ih 100x320
//! ...
//! END
//! <row-major f64 LE values of every parameter, in header order>
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::autodiff::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &str = "TOAD-CHECKPOINT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn encode_checkpoint<T: Scalar>(params: &ParamStore<T>) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").expect("write to Vec");
    for (name, t) in params.iter() {
        let dims: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        writeln!(out, "{name} {}", dims.join("x")).expect("write to Vec");
    }
    out.extend_from_slice(b"END\n");
    for (_, t) in params.iter() {
        for v in t.values() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<ParamStore<T>> {
    let bad = |msg: String| Error::Input(format!("malformed checkpoint: {msg}"));
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Result<String> {
        let rest = &bytes[*pos..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("unterminated header".into()))?;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| bad("header is not UTF-8".into()))?
            .to_owned();
        *pos += end + 1;
        Ok(line)
    };
    let first = next_line(&mut pos)?;
    let expected = format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}");
    if first != expected {
        return Err(bad(format!("expected header {expected:?}, found {first:?}")));
    }
    let mut entries = Vec::new();
    loop {
        let line = next_line(&mut pos)?;
        if line == "END" {
            break;
        }
        let (name, dims) = line
            .rsplit_once(' ')
            .ok_or_else(|| bad(format!("header line {line:?}")))?;
        let shape = dims
            .split('x')
            .map(|d| d.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(format!("shape {dims:?}")))?;
        entries.push((name.to_owned(), shape));
    }
    let mut store = ParamStore::new();
    for (name, shape) in entries {
        let n: usize = shape.iter().product();
        let end = pos + 8 * n;
        if end > bytes.len() {
            return Err(bad(format!("data for {name} truncated")));
        }
        let values = bytes[pos..end]
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect();
        pos = end;
        store.insert(name, Tensor::new(shape, values)?)?;
    }
    if pos != bytes.len() {
        return Err(bad(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(store)
}

pub fn save_checkpoint<T: Scalar>(params: &ParamStore<T>, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(params))?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<ParamStore<T>> {
    decode_checkpoint(&fs::read(path)?)
}
