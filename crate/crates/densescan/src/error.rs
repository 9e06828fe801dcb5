use thiserror::Error;

/// Failure modes shared by every operator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: index {index} outside the feasible range [{lo}, {hi}]")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        lo: usize,
        hi: usize,
    },

    #[error("{op}: length {got} is below the required minimum {needed}")]
    Length {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("{op}: {divisor_name} = {divisor} does not divide {value_name} = {value}")]
    Divisibility {
        op: &'static str,
        divisor_name: &'static str,
        divisor: usize,
        value_name: &'static str,
        value: usize,
    },

    #[error("{op}: shape mismatch ({detail})")]
    Shape { op: &'static str, detail: String },

    #[error("channel mismatch: expected {expected} channels, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("upsampling factor {0} must be even")]
    OddFactor(usize),

    #[error("ill-formed processing chain at layer {layer}: {reason}")]
    IllFormedChain { layer: usize, reason: String },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("non-finite sample value {0}")]
    NonFinite(f64),

    #[error("{op}: {detail}")]
    Precondition { op: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn divisibility(
        op: &'static str,
        divisor_name: &'static str,
        divisor: usize,
        value_name: &'static str,
        value: usize,
    ) -> Self {
        Error::Divisibility {
            op,
            divisor_name,
            divisor,
            value_name,
            value,
        }
    }

    pub(crate) fn length(op: &'static str, needed: usize, got: usize) -> Self {
        Error::Length { op, needed, got }
    }

    /// True for violations of a length, divisibility or index rule, as opposed
    /// to malformed inputs.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::Length { .. }
                | Error::Divisibility { .. }
                | Error::Precondition { .. }
        )
    }
}
