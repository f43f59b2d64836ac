use serde::{Deserialize, Serialize};

use super::CostError;

/// Fully-connected network: `input_size -> hidden_widths... -> output_size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcArch {
    pub input_size: usize,
    #[serde(default)]
    pub hidden_widths: Vec<usize>,
    pub output_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CnnLayer {
    /// Stride-1, same-padded 1-D convolution.
    Conv { channels: usize, kernel: usize },
    BatchNorm,
    /// Max pooling with window and stride `factor`; the remainder is dropped.
    Pool { factor: usize },
}

/// 1-D CNN: hidden layers, then one dense layer, then the output layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnArch {
    pub input_len: usize,
    pub input_channels: usize,
    pub layers: Vec<CnnLayer>,
    /// Defaults to the flattened size of the last hidden layer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dense_size: Option<usize>,
    pub output_size: usize,
}

/// Stacked LSTM over `seq_len` steps, read out from the final hidden state.
/// A bidirectional network runs an independent stack over the reversed
/// sequence and reads out the concatenated final states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RnnArch {
    pub seq_len: usize,
    pub input_features: usize,
    pub hidden_sizes: Vec<usize>,
    pub output_size: usize,
    #[serde(default)]
    pub bidirectional: bool,
}

/// Architecture description shared by the cost model and the trainer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ArchSpec {
    Fc(FcArch),
    Cnn(CnnArch),
    Rnn(RnnArch),
}

/// Channel count and spatial length after one CNN hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureShape {
    pub channels: usize,
    pub len: usize,
}

impl FeatureShape {
    pub fn size(&self) -> usize {
        self.channels * self.len
    }
}

fn nonzero(v: usize, what: &str) -> Result<(), CostError> {
    if v == 0 {
        Err(CostError::InvalidArch(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

impl FcArch {
    pub fn new(input_size: usize, hidden_widths: Vec<usize>, output_size: usize) -> Self {
        Self { input_size, hidden_widths, output_size }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        nonzero(self.input_size, "input_size")?;
        nonzero(self.output_size, "output_size")?;
        for (k, &w) in self.hidden_widths.iter().enumerate() {
            nonzero(w, &format!("hidden width {}", k + 1))?;
        }
        Ok(())
    }

    /// `[N_0, N_1, ..., N_K]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_size).chain(self.hidden_widths.iter().copied()).collect()
    }
}

impl CnnArch {
    /// VGG-style stack: per entry of `block_channels`, two (conv k=3, batch
    /// norm) pairs then a pool; dense layer sized to the flattened output.
    pub fn vgg(input_len: usize, input_channels: usize, block_channels: &[usize], pool: usize, output_size: usize) -> Self {
        let mut layers = Vec::new();
        for &c in block_channels {
            for _ in 0..2 {
                layers.push(CnnLayer::Conv { channels: c, kernel: 3 });
                layers.push(CnnLayer::BatchNorm);
            }
            layers.push(CnnLayer::Pool { factor: pool });
        }
        Self { input_len, input_channels, layers, dense_size: None, output_size }
    }

    pub fn input_shape(&self) -> FeatureShape {
        FeatureShape { channels: self.input_channels, len: self.input_len }
    }

    /// Shape after every hidden layer, in order.
    pub fn shapes(&self) -> Result<Vec<FeatureShape>, CostError> {
        nonzero(self.input_len, "input_len")?;
        nonzero(self.input_channels, "input_channels")?;
        nonzero(self.output_size, "output_size")?;
        let mut cur = self.input_shape();
        let mut out = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            match *layer {
                CnnLayer::Conv { channels, kernel } => {
                    nonzero(channels, &format!("layer {} channels", k + 1))?;
                    nonzero(kernel, &format!("layer {} kernel", k + 1))?;
                    cur.channels = channels;
                }
                CnnLayer::BatchNorm => {}
                CnnLayer::Pool { factor } => {
                    nonzero(factor, &format!("layer {} pool factor", k + 1))?;
                    cur.len /= factor;
                    if cur.len == 0 {
                        return Err(CostError::InvalidArch(format!(
                            "layer {} pools the sequence to zero length",
                            k + 1
                        )));
                    }
                }
            }
            out.push(cur);
        }
        Ok(out)
    }

    pub fn output_shape(&self) -> Result<FeatureShape, CostError> {
        Ok(self.shapes()?.last().copied().unwrap_or(self.input_shape()))
    }

    pub fn dense_size(&self) -> Result<usize, CostError> {
        let flat = self.output_shape()?.size();
        match self.dense_size {
            Some(0) => Err(CostError::InvalidArch("dense_size must be positive".into())),
            Some(d) => Ok(d),
            None => Ok(flat),
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        self.dense_size().map(|_| ())
    }
}

impl RnnArch {
    pub fn new(seq_len: usize, input_features: usize, hidden_sizes: Vec<usize>, output_size: usize, bidirectional: bool) -> Self {
        Self { seq_len, input_features, hidden_sizes, output_size, bidirectional }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        nonzero(self.seq_len, "seq_len")?;
        nonzero(self.input_features, "input_features")?;
        nonzero(self.output_size, "output_size")?;
        if self.hidden_sizes.is_empty() {
            return Err(CostError::InvalidArch("an RNN needs at least one hidden layer".into()));
        }
        for (k, &h) in self.hidden_sizes.iter().enumerate() {
            nonzero(h, &format!("hidden size {}", k + 1))?;
        }
        Ok(())
    }

    /// `[N_0, N_1, ..., N_K]` for one direction.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_features).chain(self.hidden_sizes.iter().copied()).collect()
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }
}

impl ArchSpec {
    pub fn validate(&self) -> Result<(), CostError> {
        match self {
            ArchSpec::Fc(a) => a.validate(),
            ArchSpec::Cnn(a) => a.validate(),
            ArchSpec::Rnn(a) => a.validate(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            ArchSpec::Fc(_) => "fc",
            ArchSpec::Cnn(_) => "cnn",
            ArchSpec::Rnn(a) if a.bidirectional => "birnn",
            ArchSpec::Rnn(_) => "rnn",
        }
    }

    pub fn output_size(&self) -> usize {
        match self {
            ArchSpec::Fc(a) => a.output_size,
            ArchSpec::Cnn(a) => a.output_size,
            ArchSpec::Rnn(a) => a.output_size,
        }
    }
}

impl From<FcArch> for ArchSpec {
    fn from(a: FcArch) -> Self {
        ArchSpec::Fc(a)
    }
}

impl From<CnnArch> for ArchSpec {
    fn from(a: CnnArch) -> Self {
        ArchSpec::Cnn(a)
    }
}

impl From<RnnArch> for ArchSpec {
    fn from(a: RnnArch) -> Self {
        ArchSpec::Rnn(a)
    }
}
