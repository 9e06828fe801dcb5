//! Sliding, strided and dilated kernel application, plus fragmentation.

use crate::error::{Error, Result};
use crate::signal::{div, rem, Fragmented, Kernel, Signal};

/// Applies `f` at every window position: `out_i = f(xi_i, ..., xi_{i+c-1})`.
pub fn slide<I, O>(f: &Kernel<I, O>, xi: &Signal<I>) -> Result<Signal<O>> {
    let c = f.arity();
    let d = xi.len();
    if d < c {
        return Err(Error::length("slide", c, d));
    }
    let out = xi.as_slice().windows(c).map(|w| f.eval(w)).collect();
    Signal::new(out)
}

/// Applies `g` to non-overlapping blocks of `k = arity(g)` samples.
pub fn stride<I, O>(g: &Kernel<I, O>, xi: &Signal<I>) -> Result<Signal<O>> {
    let k = g.arity();
    let d = xi.len();
    if !d.is_multiple_of(k) {
        return Err(Error::divisibility("stride", "k", k, "signal length", d));
    }
    let out = xi.as_slice().chunks_exact(k).map(|w| g.eval(w)).collect();
    Signal::new(out)
}

/// Extracts `d` samples spaced `k` apart, starting at position `i`.
pub fn dilated_subsignal<T: Clone>(xi: &Signal<T>, d: usize, k: usize, i: usize) -> Result<Signal<T>> {
    assert!(d >= 1 && k >= 1);
    let span = k * (d - 1) + 1;
    if xi.len() < span {
        return Err(Error::length("dilated_subsignal", span, xi.len()));
    }
    let hi = xi.len() - k * (d - 1);
    if i < 1 || i > hi {
        return Err(Error::IndexOutOfRange {
            op: "dilated_subsignal",
            index: i,
            lo: 1,
            hi,
        });
    }
    Signal::new((1..=d).map(|nu| xi.at(i + k * (nu - 1)).clone()).collect())
}

/// Applies `f` to dilated windows whose taps are `k` samples apart.
pub fn dilate<I: Clone, O>(f: &Kernel<I, O>, k: usize, xi: &Signal<I>) -> Result<Signal<O>> {
    assert!(k >= 1);
    let c = f.arity();
    let span = k * (c - 1) + 1;
    let d = xi.len();
    if d < span {
        return Err(Error::length("dilate", span, d));
    }
    let samples = xi.as_slice();
    let mut window = Vec::with_capacity(c);
    let mut out = Vec::with_capacity(d - k * (c - 1));
    for i in 0..d - k * (c - 1) {
        window.clear();
        window.extend((0..c).map(|nu| samples[i + k * nu].clone()));
        out.push(f.eval(&window));
    }
    Signal::new(out)
}

/// Position in the input of fragmentation result entry `(mu, nu)`, for an
/// input with `s` fragments and fragmentation parameter `k`.
#[inline]
pub fn fragment_source(k: usize, s: usize, mu: usize, nu: usize) -> (usize, usize) {
    let flat = (mu - 1) * k * s + nu - 1;
    (div(flat, s) + 1, rem(flat, s) + 1)
}

/// Position in the input of defragmentation result entry `(mu, nu)`, where the
/// result has `s` fragments and the input has `k * s`.
#[inline]
pub fn defragment_source(k: usize, s: usize, mu: usize, nu: usize) -> (usize, usize) {
    let flat = (mu - 1) * s + nu - 1;
    (div(flat, k * s) + 1, rem(flat, k * s) + 1)
}

/// Splits every fragment into `k` interleaved fragments; rows shrink by `k`.
pub fn fragment<T: Clone>(k: usize, chi: &Fragmented<T>) -> Result<Fragmented<T>> {
    assert!(k >= 1);
    let (q, s) = chi.shape();
    if q % k != 0 {
        return Err(Error::divisibility("fragment", "k", k, "rows", q));
    }
    Ok(Fragmented::from_fn(q / k, k * s, |mu, nu| {
        let (a, b) = fragment_source(k, s, mu, nu);
        chi.at(a, b).clone()
    }))
}

/// Inverse of [`fragment`]: merges groups of `k` fragments; rows grow by `k`.
pub fn defragment<T: Clone>(k: usize, chi: &Fragmented<T>) -> Result<Fragmented<T>> {
    assert!(k >= 1);
    let (q, ks) = chi.shape();
    if ks % k != 0 {
        return Err(Error::divisibility("defragment", "k", k, "fragment count", ks));
    }
    let s = ks / k;
    Ok(Fragmented::from_fn(k * q, s, |mu, nu| {
        let (a, b) = defragment_source(k, s, mu, nu);
        chi.at(a, b).clone()
    }))
}

/// Applies `f` in a sliding fashion to every fragment independently.
pub fn slide_fragmented<I: Clone, O>(f: &Kernel<I, O>, chi: &Fragmented<I>) -> Result<Fragmented<O>> {
    let c = f.arity();
    let (q, s) = chi.shape();
    if q < c {
        return Err(Error::length("slide_fragmented", c, q));
    }
    let rows = q - c + 1;
    let mut columns = Vec::with_capacity(s);
    let mut buf = Vec::with_capacity(q);
    for nu in 0..s {
        buf.clear();
        buf.extend((0..q).map(|mu| chi.as_row_major()[mu * s + nu].clone()));
        columns.push(buf.windows(c).map(|w| f.eval(w)).collect::<Vec<O>>());
    }
    let mut data = Vec::with_capacity(rows * s);
    let mut iters: Vec<_> = columns.into_iter().map(Vec::into_iter).collect();
    for _ in 0..rows {
        for it in iters.iter_mut() {
            data.push(it.next().expect("column length"));
        }
    }
    Fragmented::from_row_major(rows, s, data)
}
