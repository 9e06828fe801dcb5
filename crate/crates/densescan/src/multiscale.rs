//! Pairs of windows taken from a signal and from a once-downscaled copy.
//!
//! The downscaled copy is `pi = Down_k(Slide_H(Pad_R(xi)))` for a lowpass `H`
//! of size `h`, with padding `R = ceil(R~/2)` and `R~ = (k-1)B + h - k`.
//! A window of `pi` of length `B` lines up with the multi-scale subsignal of
//! `xi` at index `k div(i-1, k) + 1`, which lets a classifier that looks at
//! both scales be evaluated densely while downscaling only once.

use crate::error::{Error, Result};
use crate::resample::{downsample, pad, trim, upsample_zoh, Boundary};
use crate::signal::{div, subsignal, Kernel, Signal};
use crate::windowed::slide;

/// Downscaling parameters for one extra scale.
#[derive(Clone, Debug)]
pub struct MultiScaleConfig<T> {
    k: usize,
    lowpass: Kernel<T>,
    boundary: Boundary<T>,
    b: usize,
}

impl<T: Clone> MultiScaleConfig<T> {
    /// Step `k >= 2`, lowpass of size `h >= k`, window length `b >= 1`.
    pub fn new(k: usize, lowpass: Kernel<T>, boundary: Boundary<T>, b: usize) -> Result<Self> {
        ms_boundary(b, k, lowpass.arity())?;
        Ok(MultiScaleConfig {
            k,
            lowpass,
            boundary,
            b,
        })
    }

    pub fn step(&self) -> usize {
        self.k
    }

    pub fn lowpass_size(&self) -> usize {
        self.lowpass.arity()
    }

    pub fn window(&self) -> usize {
        self.b
    }

    pub fn boundary(&self) -> &Boundary<T> {
        &self.boundary
    }

    /// `(R~, R)` for this configuration.
    pub fn boundary_sizes(&self) -> (usize, usize) {
        ms_boundary(self.b, self.k, self.lowpass.arity()).expect("validated at construction")
    }
}

/// `(R~, R)` with `R~ = (k-1)B + h - k` and `R = ceil(R~/2)`.
pub fn ms_boundary(b: usize, k: usize, h: usize) -> Result<(usize, usize)> {
    if b == 0 || k < 2 || h < k {
        return Err(Error::BadConfig(format!(
            "multi-scale needs B >= 1, k >= 2 and h >= k (got B = {b}, k = {k}, h = {h})"
        )));
    }
    let rt = (k - 1) * b + h - k;
    Ok((rt, rt.div_ceil(2)))
}

/// Subsignal of length `d` at index `i`, extended by `r` samples on both
/// sides through the boundary rule.
pub fn padded_subsignal<T: Clone>(
    xi: &Signal<T>,
    d: usize,
    r: usize,
    theta: &Boundary<T>,
    i: usize,
) -> Result<Signal<T>> {
    subsignal(xi, d, i)?;
    let v = (1..=d + 2 * r)
        .map(|nu| theta.lookup(xi, i as i64 + nu as i64 - r as i64 - 1))
        .collect();
    Signal::new(v)
}

/// Largest index `j <= i` with `k | j - 1`.
pub fn ms_index(k: usize, i: usize) -> usize {
    assert!(k >= 1 && i >= 1);
    k * div(i - 1, k) + 1
}

/// The downscaled signal `pi`.
pub fn ms_downscale<T: Clone>(cfg: &MultiScaleConfig<T>, xi: &Signal<T>) -> Result<Signal<T>> {
    if xi.len() < cfg.b {
        return Err(Error::length("ms_downscale", cfg.b, xi.len()));
    }
    let (_, r) = cfg.boundary_sizes();
    Ok(downsample(cfg.k, &slide(&cfg.lowpass, &pad(r, &cfg.boundary, xi))?))
}

/// Downscaled window of length `B` around subsignal `i`.
pub fn ms_subsignal<T: Clone>(cfg: &MultiScaleConfig<T>, xi: &Signal<T>, i: usize) -> Result<Signal<T>> {
    let (_, r) = cfg.boundary_sizes();
    let padded = padded_subsignal(xi, cfg.b, r, &cfg.boundary, i)?;
    Ok(downsample(cfg.k, &slide(&cfg.lowpass, &padded)?))
}

/// Trailing samples removed after upsampling in [`ms_scan`].
pub fn ms_scan_trim<T: Clone>(cfg: &MultiScaleConfig<T>, d: usize) -> Result<usize> {
    if d < cfg.b {
        return Err(Error::length("ms_scan", cfg.b, d));
    }
    let (rt, _) = cfg.boundary_sizes();
    let k = cfg.k as i64;
    let parity = (rt % 2) as i64;
    let n = (d - cfg.b + 1) as i64 + parity;
    let r = parity - n % k + if n % k == 0 { 0 } else { k };
    Ok(r as usize)
}

/// Dense evaluation of `g(g_orig(window), g_down(downscaled window))` for
/// every window, computed by sliding `g_orig` over `xi` and `g_down` once over
/// the downscaled signal, then upsampling with zero-order hold.
pub fn ms_scan<T: Clone, P, Q, N>(
    cfg: &MultiScaleConfig<T>,
    xi: &Signal<T>,
    g_orig: &Kernel<T, P>,
    g_down: &Kernel<T, Q>,
    g: impl Fn(&P, &Q) -> N,
) -> Result<Signal<N>>
where
    Q: Clone,
{
    check_window("ms_scan", cfg, g_orig.arity(), g_down.arity())?;
    let r = ms_scan_trim(cfg, xi.len())?;
    let orig = slide(g_orig, xi)?;
    let down = slide(g_down, &ms_downscale(cfg, xi)?)?;
    let down = trim(r, &upsample_zoh(cfg.k, &down))?;
    debug_assert_eq!(orig.len(), down.len());
    Signal::new(orig.iter().zip(down.iter()).map(|(p, q)| g(p, q)).collect())
}

/// Per-window evaluation of the same quantity as [`ms_scan`], extracting each
/// multi-scale subsignal separately.
pub fn ms_scan_reference<T: Clone, P, Q, N>(
    cfg: &MultiScaleConfig<T>,
    xi: &Signal<T>,
    g_orig: &Kernel<T, P>,
    g_down: &Kernel<T, Q>,
    g: impl Fn(&P, &Q) -> N,
) -> Result<Signal<N>> {
    check_window("ms_scan_reference", cfg, g_orig.arity(), g_down.arity())?;
    if xi.len() < cfg.b {
        return Err(Error::length("ms_scan_reference", cfg.b, xi.len()));
    }
    let out = (1..=xi.len() - cfg.b + 1)
        .map(|i| {
            let p = g_orig.eval(subsignal(xi, cfg.b, i)?.as_slice());
            let q = g_down.eval(ms_subsignal(cfg, xi, ms_index(cfg.k, i))?.as_slice());
            Ok(g(&p, &q))
        })
        .collect::<Result<Vec<N>>>()?;
    Signal::new(out)
}

fn check_window<T>(op: &'static str, cfg: &MultiScaleConfig<T>, a: usize, b: usize) -> Result<()> {
    if a != cfg.b || b != cfg.b {
        return Err(Error::Precondition {
            op,
            detail: format!("window kernels must have arity B = {} (got {a} and {b})", cfg.b),
        });
    }
    Ok(())
}

/// The binomial lowpass `(s1 + 2 s2 + s3) / 4`.
pub fn binomial3() -> Kernel<f64> {
    Kernel::new(3, |w: &[f64]| (w[0] + 2.0 * w[1] + w[2]) / 4.0)
}
