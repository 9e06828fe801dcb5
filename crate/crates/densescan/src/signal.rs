//! Signals, fragmented signals, kernels and the index arithmetic behind them.
//!
//! Every public index in this crate is 1-based. A signal of length `D` has
//! samples `1..=D`; a fragmented signal with `rows` samples per fragment and
//! `cols` fragments has entries `(1..=rows, 1..=cols)`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Euclidean division of a natural number by a positive one.
///
/// Returns `(div, rem)` with `a = div * b + rem` and `rem < b`.
///
/// # Panics
///
/// Panics if `b == 0`.
pub fn euclid_divmod(a: usize, b: usize) -> (usize, usize) {
    assert!(b >= 1, "euclid_divmod: divisor must be positive");
    (a / b, a % b)
}

/// Quotient part of [`euclid_divmod`].
#[inline]
pub fn div(a: usize, b: usize) -> usize {
    euclid_divmod(a, b).0
}

/// Remainder part of [`euclid_divmod`].
#[inline]
pub fn rem(a: usize, b: usize) -> usize {
    euclid_divmod(a, b).1
}

/// Equality predicate used by the exactness checks.
///
/// For floating point types this compares bit patterns, so `0.0` and `-0.0`
/// are distinct and every comparison is reflexive.
pub trait ExactEq {
    fn exact_eq(&self, other: &Self) -> bool;
}

macro_rules! exact_eq_by_value {
    ($($t:ty),*) => {$(
        impl ExactEq for $t {
            fn exact_eq(&self, other: &Self) -> bool { self == other }
        }
    )*};
}
exact_eq_by_value!(i8, i16, i32, i64, i128, u8, u16, u32, u64, u128, usize, isize, bool, char, String);

impl ExactEq for f64 {
    fn exact_eq(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl ExactEq for f32 {
    fn exact_eq(&self, other: &Self) -> bool {
        self.to_bits() == other.to_bits()
    }
}

impl<T: ExactEq> ExactEq for [T] {
    fn exact_eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.iter().zip(other).all(|(a, b)| a.exact_eq(b))
    }
}

impl<T: ExactEq> ExactEq for Vec<T> {
    fn exact_eq(&self, other: &Self) -> bool {
        self.as_slice().exact_eq(other.as_slice())
    }
}

impl<A: ExactEq, B: ExactEq> ExactEq for (A, B) {
    fn exact_eq(&self, other: &Self) -> bool {
        self.0.exact_eq(&other.0) && self.1.exact_eq(&other.1)
    }
}

/// A non-empty finite sequence of samples.
#[derive(Clone, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
}

impl<T> Signal<T> {
    /// Wraps a sample vector. Fails on an empty vector.
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::length("signal", 1, 0));
        }
        Ok(Signal { samples })
    }

    /// Number of samples `D`.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; signals hold at least one sample.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sample at 1-based position `i`.
    ///
    /// # Panics
    ///
    /// Panics if `i` is outside `1..=len()`.
    pub fn at(&self, i: usize) -> &T {
        assert!(i >= 1 && i <= self.len(), "sample index {i} out of 1..={}", self.len());
        &self.samples[i - 1]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<T> {
        self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.samples.iter()
    }

    /// Applies `f` to every sample.
    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Signal<U> {
        Signal {
            samples: self.samples.iter().map(f).collect(),
        }
    }
}

impl<T> TryFrom<Vec<T>> for Signal<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Signal::new(v)
    }
}

impl<T: fmt::Debug> fmt::Debug for Signal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.samples).finish()
    }
}

impl<T: ExactEq> ExactEq for Signal<T> {
    fn exact_eq(&self, other: &Self) -> bool {
        self.samples.exact_eq(&other.samples)
    }
}

/// Extracts the `d` samples starting at position `i`.
pub fn subsignal<T: Clone>(xi: &Signal<T>, d: usize, i: usize) -> Result<Signal<T>> {
    let len = xi.len();
    if d == 0 || len < d {
        return Err(Error::length("subsignal", d.max(1), len));
    }
    let hi = len - d + 1;
    if i < 1 || i > hi {
        return Err(Error::IndexOutOfRange {
            op: "subsignal",
            index: i,
            lo: 1,
            hi,
        });
    }
    Ok(Signal {
        samples: xi.samples[i - 1..i - 1 + d].to_vec(),
    })
}

/// A rectangular matrix of samples: columns are fragments, rows are samples
/// within a fragment. Stored as one contiguous row-major block.
#[derive(Clone, PartialEq)]
pub struct Fragmented<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Fragmented<T> {
    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 || rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::Shape {
                op: "fragmented signal",
                detail: format!("{rows}x{cols} matrix cannot hold {} samples", data.len()),
            });
        }
        Ok(Fragmented { rows, cols, data })
    }

    /// A single-fragment matrix holding the samples of `xi`.
    pub fn from_signal(xi: Signal<T>) -> Self {
        let rows = xi.len();
        Fragmented {
            rows,
            cols: 1,
            data: xi.samples,
        }
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns(columns: Vec<Vec<T>>) -> Result<Self>
    where
        T: Clone,
    {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if cols == 0 || rows == 0 || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Shape {
                op: "fragmented signal",
                detail: "columns must be non-empty and of equal length".into(),
            });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for mu in 0..rows {
            for col in &columns {
                data.push(col[mu].clone());
            }
        }
        Ok(Fragmented { rows, cols, data })
    }

    /// Samples per fragment.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of fragments.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entry at 1-based `(mu, nu)`.
    ///
    /// # Panics
    ///
    /// Panics when the index lies outside the matrix.
    pub fn at(&self, mu: usize, nu: usize) -> &T {
        assert!(mu >= 1 && mu <= self.rows && nu >= 1 && nu <= self.cols);
        &self.data[(mu - 1) * self.cols + (nu - 1)]
    }

    /// Row-major view of all entries.
    pub fn as_row_major(&self) -> &[T] {
        &self.data
    }

    /// Copy of fragment `nu` (1-based).
    pub fn column(&self, nu: usize) -> Vec<T>
    where
        T: Clone,
    {
        assert!(nu >= 1 && nu <= self.cols);
        (0..self.rows)
            .map(|mu| self.data[mu * self.cols + nu - 1].clone())
            .collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>>
    where
        T: Clone,
    {
        (1..=self.cols).map(|nu| self.column(nu)).collect()
    }

    /// Converts a single-fragment matrix back into a signal.
    pub fn into_signal(self) -> Result<Signal<T>> {
        if self.cols != 1 {
            return Err(Error::Shape {
                op: "into_signal",
                detail: format!("expected one fragment, found {}", self.cols),
            });
        }
        Ok(Signal { samples: self.data })
    }

    /// Builds a matrix whose entry `(mu, nu)` is `f(mu, nu)`.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(rows >= 1 && cols >= 1);
        let mut data = Vec::with_capacity(rows * cols);
        for mu in 1..=rows {
            for nu in 1..=cols {
                data.push(f(mu, nu));
            }
        }
        Fragmented { rows, cols, data }
    }
}

impl<T: fmt::Debug> fmt::Debug for Fragmented<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.cols).collect();
        f.debug_struct("Fragmented")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("entries", &rows)
            .finish()
    }
}

impl<T: ExactEq> ExactEq for Fragmented<T> {
    fn exact_eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data.exact_eq(&other.data)
    }
}

/// Stacks the columns of `chi` into one signal.
pub fn vectorize<T: Clone>(chi: &Fragmented<T>) -> Signal<T> {
    let a = chi.rows;
    let n = a * chi.cols;
    let samples = (1..=n)
        .map(|j| chi.at(rem(j - 1, a) + 1, div(j - 1, a) + 1).clone())
        .collect();
    Signal { samples }
}

/// Inverse of [`vectorize`]: reshapes `xi` into an `a x b` matrix column by column.
pub fn unvectorize<T: Clone>(xi: &Signal<T>, a: usize, b: usize) -> Result<Fragmented<T>> {
    if a == 0 || b == 0 || a.checked_mul(b) != Some(xi.len()) {
        return Err(Error::Shape {
            op: "unvectorize",
            detail: format!("{a}x{b} does not match signal length {}", xi.len()),
        });
    }
    Ok(Fragmented::from_fn(a, b, |i, j| xi.at((j - 1) * a + i).clone()))
}

type KernelFn<I, O> = dyn Fn(&[I]) -> O + Send + Sync;

/// A pure function from `arity` consecutive samples to one output sample.
pub struct Kernel<I, O = I> {
    arity: usize,
    func: Arc<KernelFn<I, O>>,
}

impl<I, O> Clone for Kernel<I, O> {
    fn clone(&self) -> Self {
        Kernel {
            arity: self.arity,
            func: Arc::clone(&self.func),
        }
    }
}

impl<I, O> fmt::Debug for Kernel<I, O> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel(arity {})", self.arity)
    }
}

impl<I, O> Kernel<I, O> {
    /// Wraps a window function of the given arity.
    ///
    /// # Panics
    ///
    /// Panics if `arity == 0`.
    pub fn new(arity: usize, func: impl Fn(&[I]) -> O + Send + Sync + 'static) -> Self {
        assert!(arity >= 1, "kernel arity must be positive");
        Kernel {
            arity,
            func: Arc::new(func),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates the kernel on a window of exactly `arity` samples.
    #[inline]
    pub fn eval(&self, window: &[I]) -> O {
        debug_assert_eq!(window.len(), self.arity);
        (self.func)(window)
    }
}

impl<T: Clone + 'static> Kernel<T, T> {
    /// The arity-1 identity, used as the neutral bypass pooling kernel.
    pub fn identity() -> Self {
        Kernel::new(1, |w: &[T]| w[0].clone())
    }
}
