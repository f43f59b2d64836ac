//! Binary model checkpoint.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        4 bytes  "SSNN"
//! version      u16      1
//! arch_len     u32      length of the architecture JSON
//! arch         arch_len bytes, UTF-8 JSON of the ArchSpec
//! threshold    f64
//! n_tensors    u32
//! per tensor:
//!   name_len   u16, name (UTF-8)
//!   ndim       u8, dims (u32 each)
//!   data       f64 × product(dims), row-major
//! n_bn         u32
//! per batch-norm layer:
//!   channels   u32
//!   mean       f64 × channels
//!   var        f64 × channels
//! ```
//!
//! Tensor names, shapes and order must match what the architecture implies.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use ndarray::{Array1, ArrayD, IxDyn};

use super::model::Model;
use super::params::{layout, ModelParams, RunningStats};
use super::NnError;
use crate::costmodel::ArchSpec;

pub const MAGIC: [u8; 4] = *b"SSNN";
pub const FORMAT_VERSION: u16 = 1;

fn bad(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(mut w: W, model: &Model, threshold: f64) -> Result<(), NnError> {
    let p = &model.params;
    let arch = serde_json::to_vec(&p.arch).map_err(|e| bad(e.to_string()))?;
    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(arch.len() as u32).to_le_bytes())?;
    w.write_all(&arch)?;
    w.write_all(&threshold.to_le_bytes())?;
    w.write_all(&(p.tensors.len() as u32).to_le_bytes())?;
    for (name, t) in p.names.iter().zip(&p.tensors) {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[t.ndim() as u8])?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in t.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.write_all(&(p.bn_running.len() as u32).to_le_bytes())?;
    for rs in &p.bn_running {
        w.write_all(&(rs.mean.len() as u32).to_le_bytes())?;
        for v in rs.mean.iter().chain(rs.var.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Src<R>(R);

impl<R: Read> Src<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], NnError> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => bad(format!("truncated in {what}")),
            _ => NnError::Io(e),
        })?;
        Ok(b)
    }
    fn vec(&mut self, n: usize, what: &str) -> Result<Vec<u8>, NnError> {
        let mut b = Vec::new();
        (&mut self.0).take(n as u64).read_to_end(&mut b)?;
        if b.len() != n {
            return Err(bad(format!("truncated in {what}")));
        }
        Ok(b)
    }
    fn u16(&mut self, what: &str) -> Result<u16, NnError> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }
    fn u32(&mut self, what: &str) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }
    fn f64(&mut self, what: &str) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }
    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>, NnError> {
        let raw = self.vec(n * 8, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Reads a checkpoint, returning the model and its threshold.
pub fn read_checkpoint<R: Read>(r: R) -> Result<(Model, f64), NnError> {
    let mut src = Src(r);
    let magic: [u8; 4] = src.bytes("magic")?;
    if magic != MAGIC {
        return Err(bad(format!("bad magic {magic:?}")));
    }
    let version = src.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("version {version}, expected {FORMAT_VERSION}")));
    }
    let arch_len = src.u32("arch length")? as usize;
    let arch: ArchSpec =
        serde_json::from_slice(&src.vec(arch_len, "arch")?).map_err(|e| bad(format!("arch: {e}")))?;
    let (slots, bn_channels) = layout(&arch)?;
    let threshold = src.f64("threshold")?;

    let n = src.u32("tensor count")? as usize;
    if n != slots.len() {
        return Err(bad(format!("{n} tensors, architecture implies {}", slots.len())));
    }
    let mut tensors = Vec::with_capacity(n);
    for slot in &slots {
        let name_len = src.u16("tensor name")? as usize;
        let name = String::from_utf8(src.vec(name_len, "tensor name")?).map_err(|_| bad("tensor name is not UTF-8"))?;
        if name != slot.name {
            return Err(bad(format!("tensor {name:?} where {:?} was expected", slot.name)));
        }
        let [ndim] = src.bytes::<1>("tensor rank")?;
        let mut dims = Vec::with_capacity(ndim as usize);
        for _ in 0..ndim {
            dims.push(src.u32("tensor dims")? as usize);
        }
        if dims != slot.shape {
            return Err(bad(format!("{name}: shape {dims:?}, expected {:?}", slot.shape)));
        }
        let data = src.f64s(dims.iter().product(), &name)?;
        tensors.push(ArrayD::from_shape_vec(IxDyn(&dims), data).expect("shape checked"));
    }

    let n_bn = src.u32("batch-norm count")? as usize;
    if n_bn != bn_channels.len() {
        return Err(bad(format!("{n_bn} batch-norm layers, architecture implies {}", bn_channels.len())));
    }
    let mut bn_running = Vec::with_capacity(n_bn);
    for &c in &bn_channels {
        let got = src.u32("batch-norm channels")? as usize;
        if got != c {
            return Err(bad(format!("batch-norm with {got} channels, expected {c}")));
        }
        let mean = Array1::from(src.f64s(c, "running mean")?);
        let var = Array1::from(src.f64s(c, "running variance")?);
        bn_running.push(RunningStats { mean, var });
    }
    let mut rest = [0u8; 1];
    if src.0.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes"));
    }
    let params = ModelParams {
        arch,
        names: slots.into_iter().map(|s| s.name).collect(),
        tensors,
        bn_running,
    };
    Ok((Model::from_params(params), threshold))
}

pub fn save_checkpoint(path: &Path, model: &Model, threshold: f64) -> Result<(), NnError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_checkpoint(&mut w, model, threshold)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, f64), NnError> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
