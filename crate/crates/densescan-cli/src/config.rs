//! Chain configuration files.
//!
//! A configuration is a JSON object:
//!
//! ```json
//! {
//!   "channels": 1,
//!   "dummy": 0,
//!   "receptive_field": 3,
//!   "layers": [
//!     {"kind": "conv", "size": 2, "out": 1, "weights": [1, 1]},
//!     {"kind": "pool-max", "size": 2}
//!   ]
//! }
//! ```
//!
//! Entries are grouped into chain layers: every run of sliding entries
//! (`conv`, `pointwise`, `bias`) is composed into one kernel and closed by
//! the next pooling entry (`pool-max`, `pool-avg`, `bypass`). A trailing run
//! without pooling is closed with a bypass. Convolution weights are listed in
//! `(tap, input channel, output channel)` row-major order, or read from a
//! rank-3 sample file given as `"file"` (relative to the configuration).

use std::path::Path;

use densescan::cnn::{
    avg_pool_kernel, bias_kernel, conv_kernel, max_pool_kernel, pointwise_kernel, Channels, FilterBank,
};
use densescan::nsf;
use densescan::windowed::slide;
use densescan::{build_chain, Kernel, Layer, ProcessingChain, Signal};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(default = "one")]
    pub channels: usize,
    #[serde(default)]
    pub dummy: Dummy,
    pub receptive_field: Option<usize>,
    pub layers: Vec<Entry>,
}

fn one() -> usize {
    1
}

/// Dummy sample: a scalar broadcast to every channel, or one value per channel.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Dummy {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Default for Dummy {
    fn default() -> Self {
        Dummy::Scalar(0.0)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Abs,
    Tanh,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Entry {
    Conv {
        size: Option<usize>,
        out: Option<usize>,
        weights: Option<Vec<f64>>,
        file: Option<String>,
    },
    Pointwise {
        function: Activation,
    },
    Bias {
        values: Vec<f64>,
    },
    PoolMax {
        size: usize,
    },
    PoolAvg {
        size: usize,
    },
    Bypass,
}

fn parse_err(msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("chain config: {msg}"))
}

/// Kernel of arity `c1 + c2 - 1` computing `f2(slide(f1, window))`.
fn compose(f1: Kernel<Channels>, f2: Kernel<Channels>) -> Kernel<Channels> {
    let arity = f1.arity() + f2.arity() - 1;
    Kernel::new(arity, move |w: &[Channels]| {
        let window = Signal::new(w.to_vec()).expect("window is non-empty");
        let inner = slide(&f1, &window).expect("window fits the inner kernel");
        f2.eval(inner.as_slice())
    })
}

fn conv_bank(
    size: Option<usize>,
    out: Option<usize>,
    weights: Option<Vec<f64>>,
    file: Option<String>,
    m: usize,
    base: &Path,
) -> Result<FilterBank, CliError> {
    let bank = match (weights, file) {
        (Some(w), None) => {
            let c = size.ok_or_else(|| parse_err("inline conv weights need \"size\""))?;
            let n = out.ok_or_else(|| parse_err("inline conv weights need \"out\""))?;
            FilterBank::new(c, m, n, w).map_err(parse_err)?
        }
        (None, Some(f)) => {
            let path = base.join(f);
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let bank = nsf::parse(&text)
                .and_then(|d| nsf::doc_filter_bank(&d))
                .map_err(parse_err)?;
            if size.is_some_and(|c| c != bank.spatial()) || out.is_some_and(|n| n != bank.out_channels()) {
                return Err(parse_err(format!(
                    "{} disagrees with the declared size or out",
                    path.display()
                )));
            }
            bank
        }
        _ => return Err(parse_err("conv needs exactly one of \"weights\" and \"file\"")),
    };
    if bank.in_channels() != m {
        return Err(parse_err(format!(
            "conv expects {} input channels but receives {m}",
            bank.in_channels()
        )));
    }
    Ok(bank)
}

impl ChainConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(parse_err)
    }

    /// Reads a configuration; relative filter bank paths resolve against its directory.
    pub fn load(path: &Path) -> Result<ProcessingChain<Channels>, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text)?.build(base)
    }

    pub fn dummy_sample(&self) -> Result<Channels, CliError> {
        let values = match &self.dummy {
            Dummy::Scalar(v) => vec![*v; self.channels],
            Dummy::Vector(v) if v.len() == self.channels => v.clone(),
            Dummy::Vector(v) => {
                return Err(parse_err(format!(
                    "dummy has {} values for {} channels",
                    v.len(),
                    self.channels
                )))
            }
        };
        Channels::new(values).map_err(parse_err)
    }

    pub fn build(&self, base: &Path) -> Result<ProcessingChain<Channels>, CliError> {
        if self.channels == 0 {
            return Err(parse_err("channels must be positive"));
        }
        let mut m = self.channels;
        let mut pending: Option<Kernel<Channels>> = None;
        let mut layers = Vec::new();
        let push = |pending: &mut Option<Kernel<Channels>>, k: Kernel<Channels>| {
            *pending = Some(match pending.take() {
                Some(prev) => compose(prev, k),
                None => k,
            });
        };
        for entry in &self.layers {
            match entry {
                Entry::Conv {
                    size,
                    out,
                    weights,
                    file,
                } => {
                    let bank = conv_bank(*size, *out, weights.clone(), file.clone(), m, base)?;
                    m = bank.out_channels();
                    push(&mut pending, conv_kernel(&bank));
                }
                Entry::Pointwise { function } => {
                    let k = match function {
                        Activation::Relu => pointwise_kernel(|v| v.max(0.0), m),
                        Activation::Identity => pointwise_kernel(|v| v, m),
                        Activation::Abs => pointwise_kernel(f64::abs, m),
                        Activation::Tanh => pointwise_kernel(f64::tanh, m),
                    };
                    push(&mut pending, k);
                }
                Entry::Bias { values } => {
                    if values.len() != m || values.iter().any(|v| !v.is_finite()) {
                        return Err(parse_err(format!("bias needs {m} finite values")));
                    }
                    push(&mut pending, bias_kernel(values.clone()));
                }
                Entry::PoolMax { size } | Entry::PoolAvg { size } => {
                    if *size == 0 {
                        return Err(parse_err("pool size must be positive"));
                    }
                    let g = match entry {
                        Entry::PoolMax { .. } => max_pool_kernel(*size, m),
                        _ => avg_pool_kernel(*size, m),
                    };
                    layers.push(Layer::new(pending.take().unwrap_or_else(Kernel::identity), g));
                }
                Entry::Bypass => layers.push(Layer::bypass(pending.take().unwrap_or_else(Kernel::identity))),
            }
        }
        if let Some(f) = pending {
            layers.push(Layer::bypass(f));
        }
        build_chain(layers, self.dummy_sample()?, self.receptive_field).map_err(parse_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(json: &str) -> Result<ProcessingChain<Channels>, CliError> {
        ChainConfig::parse(json)?.build(Path::new("."))
    }

    #[test]
    fn sum_max() {
        let c = chain(
            r#"{"receptive_field": 3, "layers": [
                {"kind": "conv", "size": 2, "out": 1, "weights": [1, 1]},
                {"kind": "pool-max", "size": 2}]}"#,
        )
        .unwrap();
        assert_eq!(c.depth(), 1);
        assert_eq!(c.receptive_field(), 3);
        assert_eq!((c.layer(1).c(), c.layer(1).k()), (2, 2));
    }

    #[test]
    fn grouping_and_composition() {
        let c = chain(
            r#"{"layers": [
                {"kind": "conv", "size": 3, "out": 2, "weights": [1, 0, 0, 1, 1, 1]},
                {"kind": "pointwise", "function": "relu"},
                {"kind": "conv", "size": 2, "out": 1, "weights": [1, -1, 0.5, 2]},
                {"kind": "pool-avg", "size": 2},
                {"kind": "bias", "values": [0.25]}]}"#,
        )
        .unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!((c.layer(1).c(), c.layer(1).k()), (4, 2));
        assert_eq!((c.layer(2).c(), c.layer(2).k()), (1, 1));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(chain(r#"{"layers": []}"#).is_err());
        assert!(chain(r#"{"layers": [{"kind": "pool-max", "size": 2}], "receptive_field": 3}"#).is_err());
        assert!(chain(r#"{"layers": [{"kind": "conv", "size": 2, "weights": [1, 1]}]}"#).is_err());
        assert!(chain(r#"{"layers": [{"kind": "bias", "values": [1, 2]}]}"#).is_err());
        assert!(chain(r#"{"layers": [{"kind": "dropout"}]}"#).is_err());
        assert!(chain(r#"{"channels": 2, "dummy": [1], "layers": [{"kind": "bypass"}]}"#).is_err());
        assert!(chain(r#"{"layers": [{"kind": "bypass"}], "extra": 1}"#).is_err());
    }
}
