//! Exact dense scanning of signals with translation-invariant processing
//! chains.
//!
//! A processing chain (convolutions, nonlinearities and pooling layers) that
//! maps a window of `B` samples to one output can be evaluated on every
//! window of a long signal at once. This crate implements several equivalent
//! ways of doing so and keeps all of them bit-for-bit identical to the naive
//! per-window evaluation:
//!
//! * fragmentation-based sliding evaluation with stuffing ([`chain`]),
//! * dilated kernels, relaxed (downsampled) evaluation, shift-and-stitch and a
//!   mixed relaxed/fragmented mode,
//! * two-dimensional scanning of images ([`planar2d`]),
//! * multi-scale window pairs ([`multiscale`]),
//! * transposed and dense-upsampling convolutions ([`cnn`]).
//!
//! [`complexity`] counts kernel invocations and compares them against closed
//! forms. [`nsf`] reads and writes the plain-text sample format used by the
//! command-line tool, and [`corpus`] generates reproducible random chains.
//!
//! All public indices are 1-based.

pub mod chain;
pub mod cnn;
pub mod complexity;
pub mod corpus;
pub mod error;
pub mod multiscale;
pub mod nsf;
pub mod planar2d;
pub mod resample;
pub mod rng;
pub mod signal;
pub mod windowed;

pub use chain::{build_chain, Layer, ProcessingChain};
pub use error::{Error, Result};
pub use signal::{euclid_divmod, subsignal, unvectorize, vectorize, ExactEq, Fragmented, Kernel, Signal};
