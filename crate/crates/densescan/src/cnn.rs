//! Numeric kernels for convolutional networks over multi-channel samples.
//!
//! All arithmetic is IEEE 754 binary64. Scalar products accumulate from `+0.0`
//! in a fixed order (input channel outer, spatial tap inner) without fused
//! multiply-add, so two code paths that perform the same products in the same
//! order agree bit for bit.

use std::fmt;
use std::ops::Deref;

use crate::error::{Error, Result};
use crate::resample::{crop, pad, spread, Boundary};
use crate::signal::{div, rem, Fragmented, Kernel, Signal};
use crate::windowed::defragment;

/// One sample of a multi-channel signal: a point of `R^m`.
///
/// Values are finite. Negative zero is stored as positive zero, which keeps
/// the bitwise equalities between convolution pipelines intact: every
/// accumulator starts at `+0.0` and therefore never produces `-0.0` itself.
/// Equality compares bit patterns.
#[derive(Clone)]
pub struct Channels(Box<[f64]>);

impl Channels {
    /// Validates and wraps channel values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ChannelMismatch { expected: 1, got: 0 });
        }
        let mut values = values;
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite(*v));
            }
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(Channels(values.into_boxed_slice()))
    }

    /// A single-channel sample.
    pub fn scalar(v: f64) -> Result<Self> {
        Channels::new(vec![v])
    }

    /// All-zero sample with `m` channels.
    pub fn zeros(m: usize) -> Self {
        assert!(m >= 1);
        Channels(vec![0.0; m].into_boxed_slice())
    }

    /// Number of channels `m`.
    pub fn channels(&self) -> usize {
        self.0.len()
    }

    /// Kernel outputs bypass validation; the arithmetic above cannot create
    /// negative zero from canonical inputs.
    fn from_kernel(values: Vec<f64>) -> Self {
        Channels(values.into_boxed_slice())
    }
}

impl Deref for Channels {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl PartialEq for Channels {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(other.0.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Eq for Channels {}

impl fmt::Debug for Channels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Channels").field(&&*self.0).finish()
    }
}

impl crate::signal::ExactEq for Channels {
    fn exact_eq(&self, other: &Self) -> bool {
        self == other
    }
}

/// Builds a multi-channel signal, checking that every sample has `m` channels.
pub fn channel_signal(samples: Vec<Vec<f64>>) -> Result<Signal<Channels>> {
    let m = samples.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(samples.len());
    for s in samples {
        if s.len() != m {
            return Err(Error::ChannelMismatch {
                expected: m,
                got: s.len(),
            });
        }
        out.push(Channels::new(s)?);
    }
    Signal::new(out)
}

/// Filter bank with spatial size `c`, `m` input and `n` output channels.
#[derive(Clone, PartialEq)]
pub struct FilterBank {
    c: usize,
    m: usize,
    n: usize,
    weights: Vec<f64>,
}

impl fmt::Debug for FilterBank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FilterBank(c={}, m={}, n={}, {:?})",
            self.c, self.m, self.n, self.weights
        )
    }
}

impl FilterBank {
    /// Wraps weights stored in `(mu, lambda, kappa)` row-major order.
    pub fn new(c: usize, m: usize, n: usize, weights: Vec<f64>) -> Result<Self> {
        if c == 0 || m == 0 || n == 0 || weights.len() != c * m * n {
            return Err(Error::Shape {
                op: "filter bank",
                detail: format!("{c}x{m}x{n} bank cannot hold {} weights", weights.len()),
            });
        }
        if let Some(bad) = weights.iter().find(|w| !w.is_finite()) {
            return Err(Error::NonFinite(*bad));
        }
        Ok(FilterBank { c, m, n, weights })
    }

    /// Bank whose entry `(mu, lambda, kappa)` is `f(mu, lambda, kappa)`.
    pub fn from_fn(c: usize, m: usize, n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut w = Vec::with_capacity(c * m * n);
        for mu in 1..=c {
            for lambda in 1..=m {
                for kappa in 1..=n {
                    w.push(f(mu, lambda, kappa));
                }
            }
        }
        FilterBank::new(c, m, n, w)
    }

    pub fn spatial(&self) -> usize {
        self.c
    }

    pub fn in_channels(&self) -> usize {
        self.m
    }

    pub fn out_channels(&self) -> usize {
        self.n
    }

    /// Weight `(w_mu)_lambda` for output channel `kappa`, 1-based.
    #[inline]
    pub fn at(&self, mu: usize, lambda: usize, kappa: usize) -> f64 {
        self.weights[((mu - 1) * self.m + (lambda - 1)) * self.n + (kappa - 1)]
    }

    /// All weights in `(mu, lambda, kappa)` row-major order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn check_channels(xi: &Signal<Channels>, m: usize) -> Result<()> {
    match xi.iter().find(|s| s.channels() != m) {
        Some(s) => Err(Error::ChannelMismatch {
            expected: m,
            got: s.channels(),
        }),
        None => Ok(()),
    }
}

/// Valid multi-channel convolution:
/// `(xi * w)_i = sum_lambda sum_mu (w_mu)_lambda (xi_{c+i-mu})_lambda`.
pub fn conv(xi: &Signal<Channels>, w: &FilterBank) -> Result<Signal<Channels>> {
    let (c, m, n) = (w.c, w.m, w.n);
    if xi.len() < c {
        return Err(Error::length("conv", c, xi.len()));
    }
    check_channels(xi, m)?;
    let out_len = xi.len() - c + 1;
    let mut out = Vec::with_capacity(out_len);
    for i in 1..=out_len {
        let mut sample = Vec::with_capacity(n);
        for kappa in 1..=n {
            let mut acc = 0.0f64;
            for lambda in 1..=m {
                for mu in 1..=c {
                    acc += w.at(mu, lambda, kappa) * xi.at(c + i - mu)[lambda - 1];
                }
            }
            sample.push(acc);
        }
        out.push(Channels::from_kernel(sample));
    }
    Signal::new(out)
}

/// The window function whose sliding application is [`conv`].
///
/// The returned kernel panics when a window sample does not have the bank's
/// input channel count.
pub fn conv_kernel(w: &FilterBank) -> Kernel<Channels> {
    let w = w.clone();
    Kernel::new(w.c, move |rho: &[Channels]| {
        let (c, m, n) = (w.c, w.m, w.n);
        let out = (1..=n)
            .map(|kappa| {
                let mut acc = 0.0f64;
                for lambda in 1..=m {
                    for mu in 1..=c {
                        let s = &rho[c - mu];
                        assert_eq!(s.channels(), m, "conv kernel: channel mismatch");
                        acc += w.at(mu, lambda, kappa) * s[lambda - 1];
                    }
                }
                acc
            })
            .collect();
        Channels::from_kernel(out)
    })
}

/// Applies `phi` to every channel of a single sample.
pub fn pointwise_kernel(phi: impl Fn(f64) -> f64 + Send + Sync + 'static, m: usize) -> Kernel<Channels> {
    Kernel::new(1, move |w: &[Channels]| {
        assert_eq!(w[0].channels(), m, "pointwise kernel: channel mismatch");
        Channels::from_kernel(w[0].iter().map(|&v| canonical(phi(v))).collect())
    })
}

/// Adds the bias vector `b` channel-wise.
pub fn bias_kernel(b: Vec<f64>) -> Kernel<Channels> {
    Kernel::new(1, move |w: &[Channels]| {
        assert_eq!(w[0].channels(), b.len(), "bias kernel: channel mismatch");
        Channels::from_kernel(w[0].iter().zip(&b).map(|(v, bb)| canonical(v + bb)).collect())
    })
}

/// Channel-wise mean of `k` samples.
pub fn avg_pool_kernel(k: usize, m: usize) -> Kernel<Channels> {
    Kernel::new(k, move |w: &[Channels]| {
        let out = (0..m)
            .map(|lambda| {
                let mut acc = 0.0f64;
                for s in w {
                    acc += s[lambda];
                }
                acc / k as f64
            })
            .collect();
        Channels::from_kernel(out)
    })
}

/// Channel-wise maximum of `k` samples.
pub fn max_pool_kernel(k: usize, m: usize) -> Kernel<Channels> {
    Kernel::new(k, move |w: &[Channels]| {
        let out = (0..m)
            .map(|lambda| w.iter().map(|s| s[lambda]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Channels::from_kernel(out)
    })
}

#[inline]
fn canonical(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    let q = a.div_euclid(b);
    if a.rem_euclid(b) == 0 {
        q
    } else {
        q + 1
    }
}

/// Minimum input length `max{1, ceil((2P - c + 1)/k + 1)}` of [`transposed_conv`].
pub fn transposed_conv_min_len(c: usize, k: usize, p: usize) -> usize {
    let num = 2 * p as i64 - c as i64 + 1 + k as i64;
    ceil_div(num, k as i64).max(1) as usize
}

/// Transposed convolution: spread by `k`, zero-pad by `c - 1`, convolve,
/// then crop `P` samples from both ends. Output length `k(D-1) + c - 2P`.
pub fn transposed_conv(xi: &Signal<Channels>, w: &FilterBank, k: usize, p: usize) -> Result<Signal<Channels>> {
    assert!(k >= 1);
    let min = transposed_conv_min_len(w.c, k, p);
    if xi.len() < min {
        return Err(Error::length("transposed_conv", min, xi.len()));
    }
    check_channels(xi, w.m)?;
    let zero = Channels::zeros(w.m);
    let spread = spread(k, &zero, xi);
    let padded = pad(w.c - 1, &Boundary::Dirichlet(zero), &spread);
    crop(p, &conv(&padded, w)?)
}

/// Filter bank with spatial size `2u` whose transposed convolution with
/// stride `u` and cropping `u/2` is zero-order-hold upsampling.
pub fn zoh_filter_bank(u: usize, m: usize) -> Result<FilterBank> {
    if u == 0 || !u.is_multiple_of(2) {
        return Err(Error::OddFactor(u));
    }
    FilterBank::from_fn(2 * u, m, m, |mu, lambda, kappa| {
        if lambda == kappa && mu > u / 2 && mu <= u + u / 2 {
            1.0
        } else {
            0.0
        }
    })
}

/// Dense upsampling convolution with factor `u`: a unit-size convolution to
/// `u * n` channels whose channel groups are defragmented into `u` output
/// samples each.
pub fn duc(xi: &Signal<Channels>, w: &FilterBank, u: usize) -> Result<Signal<Channels>> {
    assert!(u >= 1);
    if w.c != 1 {
        return Err(Error::Shape {
            op: "duc",
            detail: format!("filter bank must have spatial size 1, found {}", w.c),
        });
    }
    if !w.n.is_multiple_of(u) {
        return Err(Error::ChannelMismatch {
            expected: u * w.n.div_ceil(u),
            got: w.n,
        });
    }
    let n = w.n / u;
    let y = conv(xi, w)?;
    // Treat output channels as fragments: row j, column i holds (y_j)_i.
    let phi = Fragmented::from_fn(y.len(), w.n, |j, i| y.at(j)[i - 1]);
    let merged = defragment(u, &phi)?;
    let out = (1..=merged.rows())
        .map(|j| Channels::from_kernel((1..=n).map(|i| *merged.at(j, i)).collect()))
        .collect();
    Signal::new(out)
}

/// Repacks a spatial-size-`u` bank into the unit-size bank used by [`duc`],
/// so that `duc(xi, duc_reorder(w), u) = transposed_conv(xi, w, u, 0)`.
pub fn duc_reorder(w: &FilterBank) -> FilterBank {
    let (u, m, n) = (w.c, w.m, w.n);
    FilterBank::from_fn(1, m, u * n, |_, lambda, nu| {
        w.at(div(nu - 1, n) + 1, lambda, rem(nu - 1, n) + 1)
    })
    .expect("reordering preserves finiteness")
}
