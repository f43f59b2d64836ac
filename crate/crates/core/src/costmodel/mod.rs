//! Forward-pass operation counts and memory requirements of FC, CNN, RNN and
//! BiRNN classifiers, evaluated in closed form from an [`ArchSpec`].

mod arch;
mod formulas;
pub mod presets;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arch::{ArchSpec, CnnArch, CnnLayer, FcArch, FeatureShape, RnnArch};
pub use formulas::{cost_report, mem_peak, mem_total, op_count, CostReport};

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("invalid architecture: {0}")]
    InvalidArch(String),
    #[error("architecture entry {index} ({name}): {reason}")]
    BadEntry { index: usize, name: String, reason: String },
    #[error("architecture list is not valid JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedArch {
    pub name: String,
    pub arch: ArchSpec,
}

impl NamedArch {
    pub fn new(name: impl Into<String>, arch: ArchSpec) -> Self {
        Self { name: name.into(), arch }
    }
}

/// Parses `{"archs": [{"name": ..., "arch": {...}}, ...]}` (a bare array of
/// entries is accepted too). Every entry is checked individually so errors
/// name the offending entry.
pub fn parse_arch_list(json: &str) -> Result<Vec<NamedArch>, CostError> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| CostError::Json(e.to_string()))?;
    let entries = match &value {
        serde_json::Value::Array(v) => v,
        serde_json::Value::Object(m) => match m.get("archs").or_else(|| m.get("entries")) {
            Some(serde_json::Value::Array(v)) => v,
            _ => return Err(CostError::Json("expected an \"archs\" array".into())),
        },
        _ => return Err(CostError::Json("expected an object or array".into())),
    };
    let mut out = Vec::with_capacity(entries.len());
    for (index, e) in entries.iter().enumerate() {
        let name = e.get("name").and_then(|n| n.as_str()).unwrap_or("<unnamed>").to_string();
        let bad = |reason: String| CostError::BadEntry { index, name: name.clone(), reason };
        let named: NamedArch = serde_json::from_value(e.clone()).map_err(|err| bad(err.to_string()))?;
        named.arch.validate().map_err(|err| bad(err.to_string()))?;
        if out.iter().any(|n: &NamedArch| n.name == named.name) {
            return Err(bad("duplicate name".into()));
        }
        out.push(named);
    }
    Ok(out)
}

/// CSV table `arch_name,n_op,m_peak,m_total`.
pub fn costs_csv(archs: &[NamedArch]) -> Result<String, CostError> {
    let mut out = String::from("arch_name,n_op,m_peak,m_total\n");
    for a in archs {
        let r = cost_report(&a.arch)?;
        out.push_str(&format!("{},{},{},{}\n", a.name, r.n_op, r.m_peak, r.m_total));
    }
    Ok(out)
}
