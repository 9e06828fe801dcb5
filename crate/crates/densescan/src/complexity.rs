//! Kernel-invocation counting and closed-form speedup ratios.
//!
//! Counts are measured by wrapping every kernel of a chain in a counting
//! adapter and running the regime on a signal of dummy samples. Each
//! evaluation owns fresh tallies, so concurrent evaluations never share a
//! counter. Fragmentation and other reordering work is not counted.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_rational::Ratio;

use crate::chain::{KernelRole, ProcessingChain};
use crate::error::{Error, Result};
use crate::signal::{subsignal, Kernel, Signal};

/// Exact rational number.
pub type Rational = Ratio<i64>;

/// Evaluation regime being counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Strided evaluation of every subsignal separately.
    Stride,
    /// Fragmentation-based sliding evaluation.
    Slide,
    /// Dilated evaluation.
    Dilate,
    /// One relaxed pass over the whole input.
    Relax,
    /// All `k*_L` relaxed passes of shift-and-stitch.
    ShiftStitch,
    /// Mixed evaluation with the given number of relaxed layers.
    Mixed(usize),
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Stride => f.write_str("stride"),
            Regime::Slide => f.write_str("slide"),
            Regime::Dilate => f.write_str("dilate"),
            Regime::Relax => f.write_str("relax"),
            Regime::ShiftStitch => f.write_str("stitch"),
            Regime::Mixed(l) => write!(f, "mixed:{l}"),
        }
    }
}

/// Invocations of one layer's kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayerCounts {
    pub f: u64,
    pub g: u64,
}

/// Measured and predicted invocation counts, one entry per layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalCounts {
    pub regime: Regime,
    pub d: usize,
    pub measured: Vec<LayerCounts>,
    pub predicted: Vec<LayerCounts>,
}

impl EvalCounts {
    pub fn agrees(&self) -> bool {
        self.measured == self.predicted
    }
}

/// Relaxed speedup variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passes {
    /// A single relaxed pass (low-resolution output).
    One,
    /// All `k*_L` passes (full resolution).
    Full,
}

/// Wraps `kernel` so that every evaluation increments `counter`.
pub fn counted<I: 'static, O: 'static>(kernel: &Kernel<I, O>, counter: Arc<AtomicU64>) -> Kernel<I, O> {
    let inner = kernel.clone();
    Kernel::new(kernel.arity(), move |w: &[I]| {
        counter.fetch_add(1, Ordering::Relaxed);
        inner.eval(w)
    })
}

struct Tally {
    f: Vec<Arc<AtomicU64>>,
    g: Vec<Arc<AtomicU64>>,
}

impl Tally {
    fn read(&self) -> Vec<LayerCounts> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(f, g)| LayerCounts {
                f: f.load(Ordering::Relaxed),
                g: g.load(Ordering::Relaxed),
            })
            .collect()
    }
}

fn instrument<T: Clone + 'static>(chain: &ProcessingChain<T>) -> (ProcessingChain<T>, Tally) {
    let depth = chain.depth();
    let tally = Tally {
        f: (0..depth).map(|_| Arc::new(AtomicU64::new(0))).collect(),
        g: (0..depth).map(|_| Arc::new(AtomicU64::new(0))).collect(),
    };
    let wrapped = chain.map_kernels(|j, role, k| {
        let c = match role {
            KernelRole::Sliding => Arc::clone(&tally.f[j - 1]),
            KernelRole::Pooling => Arc::clone(&tally.g[j - 1]),
        };
        counted(k, c)
    });
    (wrapped, tally)
}

fn dummy_signal<T: Clone>(chain: &ProcessingChain<T>, d: usize) -> Signal<T> {
    Signal::new(vec![chain.dummy().clone(); d.max(1)]).expect("non-empty")
}

fn to_u64(v: usize) -> u64 {
    v as u64
}

/// Closed-form invocation counts of `regime` on an input of length `d`.
pub fn predict_counts<T: Clone>(regime: Regime, chain: &ProcessingChain<T>, d: usize) -> Result<Vec<LayerCounts>> {
    let dims = chain.chain_dims(d)?;
    let depth = chain.depth();
    let b = chain.receptive_field();
    let kl = chain.stride_product(depth);
    let cj = |j: usize| chain.layer(j).c();
    let kj = |j: usize| chain.layer(j).k();
    let na = |r: &crate::chain::NotApplicable, op: &'static str| Error::Precondition {
        op,
        detail: r.reason.clone(),
    };
    let counts: Vec<LayerCounts> = match regime {
        Regime::Stride => {
            let n = d - b + 1;
            (1..=depth)
                .map(|j| LayerCounts {
                    f: to_u64(n * (chain.u(j - 1) - cj(j) + 1)),
                    g: to_u64(n * chain.u(j)),
                })
                .collect()
        }
        Regime::Slide => {
            let s = dims.slide.as_ref().map_err(|r| na(r, "count slide"))?;
            (1..=depth)
                .map(|j| {
                    let (rows, cols) = s[j - 1];
                    LayerCounts {
                        f: to_u64(cols * (rows - cj(j) + 1)),
                        g: to_u64(cols * kj(j) * s[j].0),
                    }
                })
                .collect()
        }
        Regime::Dilate => (1..=depth)
            .map(|j| LayerCounts {
                f: to_u64(dims.dilate[j - 1] - chain.stride_product(j - 1) * (cj(j) - 1)),
                g: to_u64(dims.dilate[j]),
            })
            .collect(),
        Regime::Relax => {
            let w = dims.relax.as_ref().map_err(|r| na(r, "count relax"))?;
            relax_counts(chain, w)
        }
        Regime::ShiftStitch => {
            let s = dims.slide.as_ref().map_err(|r| na(r, "count shift-and-stitch"))?;
            let _ = s;
            let pass = chain.chain_dims(d - kl + 1)?;
            let w = pass.relax.as_ref().map_err(|r| na(r, "count shift-and-stitch"))?;
            relax_counts(chain, w)
                .into_iter()
                .map(|c| LayerCounts {
                    f: c.f * to_u64(kl),
                    g: c.g * to_u64(kl),
                })
                .collect()
        }
        Regime::Mixed(l) => {
            let m = dims
                .mixed
                .iter()
                .find(|m| m.level == l)
                .ok_or_else(|| Error::Precondition {
                    op: "count mixed",
                    detail: format!("level {l} outside [1, L-1]"),
                })?;
            let s = m.shapes.as_ref().map_err(|r| na(r, "count mixed"))?;
            (1..=depth)
                .map(|j| {
                    let (rows, cols) = s[j - 1];
                    let f = to_u64(cols * (rows - cj(j) + 1));
                    let g = if j <= l {
                        to_u64(s[j].0)
                    } else {
                        to_u64(cols * kj(j) * s[j].0)
                    };
                    LayerCounts { f, g }
                })
                .collect()
        }
    };
    Ok(counts)
}

fn relax_counts<T: Clone>(chain: &ProcessingChain<T>, w: &[usize]) -> Vec<LayerCounts> {
    (1..=chain.depth())
        .map(|j| LayerCounts {
            f: to_u64(w[j - 1] - chain.layer(j).c() + 1),
            g: to_u64(w[j]),
        })
        .collect()
}

/// Runs `regime` with counting kernels on `d` dummy samples and pairs the
/// measured counts with [`predict_counts`].
pub fn count_eval<T: Clone + 'static>(regime: Regime, chain: &ProcessingChain<T>, d: usize) -> Result<EvalCounts> {
    let predicted = predict_counts(regime, chain, d)?;
    let (wrapped, tally) = instrument(chain);
    let xi = dummy_signal(chain, d);
    match regime {
        Regime::Stride => {
            let b = chain.receptive_field();
            for i in 1..=d - b + 1 {
                wrapped.eval_stride(&subsignal(&xi, b, i)?)?;
            }
        }
        Regime::Slide => {
            wrapped.eval_slide(&xi)?;
        }
        Regime::Dilate => {
            wrapped.eval_dilate(&xi)?;
        }
        Regime::Relax => {
            wrapped.eval_relax(&xi)?;
        }
        Regime::ShiftStitch => {
            wrapped.shift_and_stitch(&xi)?;
        }
        Regime::Mixed(l) => {
            wrapped.eval_mixed(l, &xi)?;
        }
    }
    Ok(EvalCounts {
        regime,
        d,
        measured: tally.read(),
        predicted,
    })
}

fn slide_rows<T: Clone>(chain: &ProcessingChain<T>, d: usize) -> Result<Vec<(usize, usize)>> {
    chain.chain_dims(d)?.slide.map_err(|r| Error::Precondition {
        op: "speedup",
        detail: r.reason,
    })
}

fn check_layer<T: Clone>(chain: &ProcessingChain<T>, j: usize) -> Result<()> {
    if j < 1 || j > chain.depth() {
        return Err(Error::IndexOutOfRange {
            op: "speedup",
            index: j,
            lo: 1,
            hi: chain.depth(),
        });
    }
    Ok(())
}

fn r(n: usize) -> Rational {
    Rational::from_integer(n as i64)
}

/// Closed-form ratio of strided to sliding invocations of layer `j`.
///
/// `S_f = 1 + (U_row_{j-1} - u_{j-1})(u_{j-1} - c_j) / (U_row_{j-1} - c_j + 1)`,
/// `S_g = 1 + (U_row_j - u_j)(u_j - 1) / U_row_j`.
pub fn speedup<T: Clone>(chain: &ProcessingChain<T>, d: usize, j: usize, which: KernelRole) -> Result<Rational> {
    check_layer(chain, j)?;
    let rows = slide_rows(chain, d)?;
    let one = Rational::from_integer(1);
    Ok(match which {
        KernelRole::Sliding => {
            let (row, u, c) = (rows[j - 1].0, chain.u(j - 1), chain.layer(j).c());
            one + (r(row) - r(u)) * (r(u) - r(c)) / (r(row) - r(c) + one)
        }
        KernelRole::Pooling => {
            let (row, u) = (rows[j].0, chain.u(j));
            one + (r(row) - r(u)) * (r(u) - one) / r(row)
        }
    })
}

/// Limit of [`speedup`] as `D` grows: `u_{j-1} - c_j + 1` for `f`, `u_j` for `g`.
pub fn speedup_limit<T: Clone>(chain: &ProcessingChain<T>, j: usize, which: KernelRole) -> u64 {
    match which {
        KernelRole::Sliding => to_u64(chain.u(j - 1) - chain.layer(j).c() + 1),
        KernelRole::Pooling => to_u64(chain.u(j)),
    }
}

/// Closed-form ratio of relaxed (shift-and-stitch) to sliding invocations of
/// layer `j`. With `kb = k*_L / k*_{j-1}` for `f` and `k*_L / k*_j` for `g`:
/// `S = kb (1 - (kb - 1) / (U_row_{j-1} - c_j + 1))` respectively
/// `kb (1 - (kb - 1) / U_row_j)`. [`Passes::One`] divides by `k*_L`.
pub fn speedup_relax<T: Clone>(
    chain: &ProcessingChain<T>,
    d: usize,
    j: usize,
    which: KernelRole,
    passes: Passes,
) -> Result<Rational> {
    check_layer(chain, j)?;
    let rows = slide_rows(chain, d)?;
    let kl = chain.stride_product(chain.depth());
    let one = Rational::from_integer(1);
    let (kb, denom) = match which {
        KernelRole::Sliding => (kl / chain.stride_product(j - 1), rows[j - 1].0 - chain.layer(j).c() + 1),
        KernelRole::Pooling => (kl / chain.stride_product(j), rows[j].0),
    };
    let full = r(kb) * (one - (r(kb) - one) / r(denom));
    Ok(match passes {
        Passes::Full => full,
        Passes::One => full / r(kl),
    })
}

/// Limit of [`speedup_relax`] as `D` grows.
pub fn speedup_relax_limit<T: Clone>(
    chain: &ProcessingChain<T>,
    j: usize,
    which: KernelRole,
    passes: Passes,
) -> Rational {
    let kl = chain.stride_product(chain.depth());
    let kstar = match which {
        KernelRole::Sliding => chain.stride_product(j - 1),
        KernelRole::Pooling => chain.stride_product(j),
    };
    match passes {
        Passes::Full => Rational::new(kl as i64, kstar as i64),
        Passes::One => Rational::new(1, kstar as i64),
    }
}

/// One line of a complexity report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub d: usize,
    pub layer: usize,
    pub regime: Regime,
    pub f_measured: u64,
    pub f_predicted: u64,
    pub g_measured: u64,
    pub g_predicted: u64,
    /// Invocation ratio against the sliding regime; absent when the sliding
    /// regime is not applicable at this `D`.
    pub s_f: Option<Rational>,
    pub s_g: Option<Rational>,
    pub limit_f: u64,
    pub limit_g: u64,
    /// Whether `s_f` and `s_g` did not decrease since the previous feasible
    /// row of the same layer and regime; absent for the first such row.
    pub monotone: Option<bool>,
}

impl ReportRow {
    /// Column names of [`ReportRow::csv_line`].
    pub const CSV_HEADER: &'static str =
        "D,layer,regime,f_measured,f_predicted,g_measured,g_predicted,S_f_num,S_f_den,S_g_num,S_g_den,limit_f,limit_g";

    pub fn csv_line(&self) -> String {
        let split = |s: &Option<Rational>| match s {
            Some(v) => (v.numer().to_string(), v.denom().to_string()),
            None => (String::new(), String::new()),
        };
        let (fnum, fden) = split(&self.s_f);
        let (gnum, gden) = split(&self.s_g);
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.d,
            self.layer,
            self.regime,
            self.f_measured,
            self.f_predicted,
            self.g_measured,
            self.g_predicted,
            fnum,
            fden,
            gnum,
            gden,
            self.limit_f,
            self.limit_g
        )
    }
}

/// Measured and predicted counts with speedup ratios for every `D` in
/// `d_from..=d_to` (step `d_step`) that is at least `B`.
///
/// Rows cover the strided, sliding, dilated and shift-and-stitch regimes;
/// the latter two and the ratios need the sliding precondition and are
/// omitted where it fails.
pub fn emit_report<T: Clone + 'static>(
    chain: &ProcessingChain<T>,
    d_from: usize,
    d_to: usize,
    d_step: usize,
) -> Result<Vec<ReportRow>> {
    if d_step == 0 {
        return Err(Error::BadConfig("D step must be positive".into()));
    }
    let depth = chain.depth();
    let b = chain.receptive_field();
    let kl = chain.stride_product(depth);
    let mut rows = Vec::new();
    let mut last: std::collections::HashMap<(usize, Regime), (Rational, Rational)> = Default::default();
    let mut d = d_from.max(b);
    while d <= d_to {
        if d < d_from {
            d += d_step;
            continue;
        }
        let slide_ok = (d - b + 1).is_multiple_of(kl);
        let stride = count_eval(Regime::Stride, chain, d)?;
        let dilate = count_eval(Regime::Dilate, chain, d)?;
        let mut regimes = vec![(Regime::Stride, stride), (Regime::Dilate, dilate)];
        let slide = if slide_ok {
            let s = count_eval(Regime::Slide, chain, d)?;
            regimes.insert(1, (Regime::Slide, s.clone()));
            regimes.push((Regime::ShiftStitch, count_eval(Regime::ShiftStitch, chain, d)?));
            Some(s)
        } else {
            None
        };
        for j in 1..=depth {
            for (regime, counts) in &regimes {
                let (m, p) = (counts.measured[j - 1], counts.predicted[j - 1]);
                let (s_f, s_g, limit_f, limit_g) = match (regime, slide.as_ref()) {
                    (_, None) => (None, None, 1, 1),
                    (Regime::Stride, Some(_)) => (
                        Some(speedup(chain, d, j, KernelRole::Sliding)?),
                        Some(speedup(chain, d, j, KernelRole::Pooling)?),
                        speedup_limit(chain, j, KernelRole::Sliding),
                        speedup_limit(chain, j, KernelRole::Pooling),
                    ),
                    (Regime::ShiftStitch, Some(_)) => (
                        Some(speedup_relax(chain, d, j, KernelRole::Sliding, Passes::Full)?),
                        Some(speedup_relax(chain, d, j, KernelRole::Pooling, Passes::Full)?),
                        to_u64(kl / chain.stride_product(j - 1)),
                        to_u64(kl / chain.stride_product(j)),
                    ),
                    (_, Some(sl)) => {
                        let base = sl.measured[j - 1];
                        (
                            Some(Rational::new(m.f as i64, base.f as i64)),
                            Some(Rational::new(m.g as i64, base.g as i64)),
                            1,
                            1,
                        )
                    }
                };
                let monotone = match (s_f, s_g) {
                    (Some(f), Some(g)) => {
                        let prev = last.insert((j, *regime), (f, g));
                        prev.map(|(pf, pg)| f >= pf && g >= pg)
                    }
                    _ => None,
                };
                rows.push(ReportRow {
                    d,
                    layer: j,
                    regime: *regime,
                    f_measured: m.f,
                    f_predicted: p.f,
                    g_measured: m.g,
                    g_predicted: p.g,
                    s_f,
                    s_g,
                    limit_f,
                    limit_g,
                    monotone,
                });
            }
        }
        d += d_step;
    }
    Ok(rows)
}
