//! Operators that change signal length: stuffing, trimming, padding, cropping,
//! downsampling, zero-order-hold upsampling and spreading.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::signal::{div, Signal};

type CustomRule<T> = dyn Fn(&Signal<T>, i64) -> T + Send + Sync;

/// Extends sample access beyond the signal bounds.
///
/// Positions inside `1..=D` always return the stored sample; the rule only
/// decides what lies outside.
pub enum Boundary<T> {
    /// Every outside position holds the given value (usually zero).
    Dirichlet(T),
    /// Outside positions replicate the nearest edge sample.
    Neumann,
    /// Caller-defined extension, consulted only for outside positions.
    Custom(Arc<CustomRule<T>>),
}

impl<T: Clone> Clone for Boundary<T> {
    fn clone(&self) -> Self {
        match self {
            Boundary::Dirichlet(z) => Boundary::Dirichlet(z.clone()),
            Boundary::Neumann => Boundary::Neumann,
            Boundary::Custom(f) => Boundary::Custom(Arc::clone(f)),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Boundary<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Dirichlet(z) => write!(f, "Dirichlet({z:?})"),
            Boundary::Neumann => write!(f, "Neumann"),
            Boundary::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl<T: Clone> Boundary<T> {
    /// Sample at (possibly out-of-range) 1-based position `nu`.
    pub fn lookup(&self, xi: &Signal<T>, nu: i64) -> T {
        let d = xi.len() as i64;
        if (1..=d).contains(&nu) {
            return xi.at(nu as usize).clone();
        }
        match self {
            Boundary::Dirichlet(z) => z.clone(),
            Boundary::Neumann => xi.at(nu.clamp(1, d) as usize).clone(),
            Boundary::Custom(f) => f(xi, nu),
        }
    }
}

/// Appends `r` copies of the dummy sample `zeta`.
pub fn stuff<T: Clone>(r: usize, zeta: &T, xi: &Signal<T>) -> Signal<T> {
    let mut v = xi.as_slice().to_vec();
    v.extend(std::iter::repeat_n(zeta.clone(), r));
    Signal::new(v).expect("non-empty")
}

/// Removes the final `r` samples; at least one sample must remain.
pub fn trim<T: Clone>(r: usize, xi: &Signal<T>) -> Result<Signal<T>> {
    if xi.len() < r + 1 {
        return Err(Error::length("trim", r + 1, xi.len()));
    }
    Signal::new(xi.as_slice()[..xi.len() - r].to_vec())
}

/// Extends `xi` by `r` samples on both sides using the boundary rule.
pub fn pad<T: Clone>(r: usize, theta: &Boundary<T>, xi: &Signal<T>) -> Signal<T> {
    let n = xi.len() + 2 * r;
    let v = (1..=n).map(|nu| theta.lookup(xi, nu as i64 - r as i64)).collect();
    Signal::new(v).expect("non-empty")
}

/// Removes `p` samples from both ends.
pub fn crop<T: Clone>(p: usize, xi: &Signal<T>) -> Result<Signal<T>> {
    if xi.len() < 2 * p + 1 {
        return Err(Error::length("crop", 2 * p + 1, xi.len()));
    }
    Signal::new(xi.as_slice()[p..xi.len() - p].to_vec())
}

/// Keeps every `k`-th sample starting with the first; length `ceil(D / k)`.
pub fn downsample<T: Clone>(k: usize, xi: &Signal<T>) -> Signal<T> {
    assert!(k >= 1);
    Signal::new(xi.iter().step_by(k).cloned().collect()).expect("non-empty")
}

/// Repeats every sample `k` times.
pub fn upsample_zoh<T: Clone>(k: usize, xi: &Signal<T>) -> Signal<T> {
    assert!(k >= 1);
    let n = k * xi.len();
    Signal::new((1..=n).map(|nu| xi.at(div(nu - 1, k) + 1).clone()).collect()).expect("non-empty")
}

/// Inserts `k - 1` copies of `zero` between neighbouring samples.
///
/// The zero element is passed explicitly because its shape can depend on the
/// data (for example the channel count of multi-channel samples).
pub fn spread<T: Clone>(k: usize, zero: &T, xi: &Signal<T>) -> Signal<T> {
    assert!(k >= 1);
    let n = k * (xi.len() - 1) + 1;
    let v = (1..=n)
        .map(|i| {
            if (i - 1) % k == 0 {
                xi.at(div(i - 1, k) + 1).clone()
            } else {
                zero.clone()
            }
        })
        .collect();
    Signal::new(v).expect("non-empty")
}
