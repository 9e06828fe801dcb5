//! Processing chains and their evaluation regimes.
//!
//! A chain is a list of layers. Layer `j` slides a kernel `f_j` of arity `c_j`
//! over its input and then pools non-overlapping blocks of `k_j` samples with
//! `g_j`. The stride products are `k*_j = k_1 ... k_j` with `k*_0 = 1`, and the
//! receptive field `B` is the input length for which the strided evaluation
//! yields exactly one output sample.
//!
//! Regimes:
//! * [`ProcessingChain::eval_stride`] processes one subsignal of length `B`.
//! * [`ProcessingChain::eval_slide`] processes a whole signal using
//!   fragmentation; [`ProcessingChain::exact_scan`] wraps it with stuffing so
//!   that any length works.
//! * [`ProcessingChain::eval_dilate`] uses dilated kernels instead of
//!   fragmentation and needs no divisibility.
//! * [`ProcessingChain::eval_relax`] reuses the strided pipeline on a whole
//!   signal, producing every `k*_L`-th output;
//!   [`ProcessingChain::shift_and_stitch`] restores full resolution.
//! * [`ProcessingChain::eval_mixed`] runs the first `l` layers relaxed and the
//!   rest fragmented; [`ProcessingChain::mixed_scan`] handles any length.

use crate::error::{Error, Result};
use crate::resample::{stuff, trim};
use crate::signal::{Fragmented, Kernel, Signal};
use crate::windowed::{defragment, fragment, slide, slide_fragmented, stride};

/// A fragmented result with the `(rows, fragments)` shape after every layer,
/// starting with the input.
pub type Traced<T> = (Fragmented<T>, Vec<(usize, usize)>);

/// Which of a layer's two kernels is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelRole {
    /// The sliding kernel `f_j`.
    Sliding,
    /// The pooling kernel `g_j`.
    Pooling,
}

/// One layer: sliding kernel `f` of arity `c`, pooling kernel `g` of arity `k`.
pub struct Layer<T> {
    f: Kernel<T>,
    g: Kernel<T>,
}

impl<T> Clone for Layer<T> {
    fn clone(&self) -> Self {
        Layer {
            f: self.f.clone(),
            g: self.g.clone(),
        }
    }
}

impl<T> std::fmt::Debug for Layer<T> {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "Layer(c={}, k={})", self.c(), self.k())
    }
}

impl<T> Layer<T> {
    pub fn new(f: Kernel<T>, g: Kernel<T>) -> Self {
        Layer { f, g }
    }

    pub fn c(&self) -> usize {
        self.f.arity()
    }

    pub fn k(&self) -> usize {
        self.g.arity()
    }

    pub fn f(&self) -> &Kernel<T> {
        &self.f
    }

    pub fn g(&self) -> &Kernel<T> {
        &self.g
    }
}

impl<T: Clone + 'static> Layer<T> {
    /// A layer without pooling (`k = 1`, identity `g`).
    pub fn bypass(f: Kernel<T>) -> Self {
        Layer::new(f, Kernel::identity())
    }
}

/// Receptive field `B = k*_L + sum_mu k*_{mu-1} (c_mu - 1)` for the given
/// `(c_j, k_j)` pairs.
pub fn receptive_field(shape: &[(usize, usize)]) -> usize {
    let mut kstar = 1;
    let mut b = 0;
    for &(c, k) in shape {
        b += kstar * (c - 1);
        kstar *= k;
    }
    b + kstar
}

/// An immutable, validated processing chain.
pub struct ProcessingChain<T> {
    layers: Vec<Layer<T>>,
    dummy: T,
    kstar: Vec<usize>,
    u: Vec<usize>,
    b: usize,
}

impl<T: Clone> Clone for ProcessingChain<T> {
    fn clone(&self) -> Self {
        ProcessingChain {
            layers: self.layers.clone(),
            dummy: self.dummy.clone(),
            kstar: self.kstar.clone(),
            u: self.u.clone(),
            b: self.b,
        }
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for ProcessingChain<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProcessingChain")
            .field("layers", &self.layers)
            .field("B", &self.b)
            .field("dummy", &self.dummy)
            .finish()
    }
}

/// Builds a chain, deriving `B` and validating the intermediate lengths.
///
/// When `declared_b` is given it is used as the receptive field and checked:
/// every `u_j = (B - sum_{mu<=j} k*_{mu-1}(c_mu - 1)) / k*_j` must be a
/// positive natural and the final one must equal 1.
pub fn build_chain<T>(layers: Vec<Layer<T>>, dummy: T, declared_b: Option<usize>) -> Result<ProcessingChain<T>> {
    if layers.is_empty() {
        return Err(Error::IllFormedChain {
            layer: 0,
            reason: "a chain needs at least one layer".into(),
        });
    }
    let shape: Vec<(usize, usize)> = layers.iter().map(|l| (l.c(), l.k())).collect();
    let mut kstar = vec![1usize];
    for &(_, k) in &shape {
        kstar.push(kstar.last().unwrap() * k);
    }
    let b = declared_b.unwrap_or_else(|| receptive_field(&shape));
    let mut u = vec![b];
    let mut consumed = 0usize;
    for (j, &(c, _)) in shape.iter().enumerate() {
        consumed += kstar[j] * (c - 1);
        let num = b as i64 - consumed as i64;
        let den = kstar[j + 1] as i64;
        if num < den || num % den != 0 {
            return Err(Error::IllFormedChain {
                layer: j + 1,
                reason: format!("u_{} = ({num})/{den} is not a positive natural number (B = {b})", j + 1),
            });
        }
        u.push((num / den) as usize);
    }
    let ul = *u.last().unwrap();
    if ul != 1 {
        return Err(Error::IllFormedChain {
            layer: shape.len(),
            reason: format!("the chain outputs u_L = {ul} samples per subsignal; exactly one is required"),
        });
    }
    Ok(ProcessingChain {
        layers,
        dummy,
        kstar,
        u,
        b,
    })
}

/// Result of [`ProcessingChain::shift_and_stitch`].
#[derive(Debug, Clone)]
pub struct ShiftStitch<T> {
    /// Relaxed pass `gamma` evaluated on the input shifted by `gamma - 1`.
    pub passes: Vec<Signal<T>>,
    /// The passes interleaved into one full-resolution signal.
    pub stitched: Signal<T>,
}

/// Operating mode selected by [`ProcessingChain::mixed_scan_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedPlan {
    /// Trim `r` samples, evaluate, defragment.
    Trimming { r: usize },
    /// Append `stuffed` dummy samples, evaluate, defragment, trim `s`.
    Stuffing { stuffed: usize, s: usize },
}

/// Why an entry of a [`DimReport`] is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotApplicable {
    pub reason: String,
}

/// Closed-form intermediate shapes for the mixed regime at one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedDims {
    pub level: usize,
    /// `(rows, cols)` after layer `j` for `j = 0..=L`: `(W_j, 1)` up to the
    /// level, then `(U~row_j, U~col_j)`.
    pub shapes: std::result::Result<Vec<(usize, usize)>, NotApplicable>,
}

/// Closed-form intermediate shapes of every regime for one input length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimReport {
    pub d: usize,
    /// Strided lengths `u_j`, `j = 0..=L`.
    pub u: Vec<usize>,
    /// Fragmented shapes `(U_row_j, U_col_j)`, `j = 0..=L`.
    pub slide: std::result::Result<Vec<(usize, usize)>, NotApplicable>,
    /// Dilated lengths `V_j`, `j = 0..=L`.
    pub dilate: Vec<usize>,
    /// Relaxed lengths `W_j`, `j = 0..=L`.
    pub relax: std::result::Result<Vec<usize>, NotApplicable>,
    /// One entry per level `l = 1..=L-1`.
    pub mixed: Vec<MixedDims>,
}

type Shapes<'a> = Option<&'a mut Vec<(usize, usize)>>;

fn record(shapes: &mut Shapes<'_>, shape: (usize, usize)) {
    if let Some(s) = shapes.as_mut() {
        s.push(shape);
    }
}

impl<T: Clone> ProcessingChain<T> {
    /// Builds a chain with derived receptive field.
    pub fn new(layers: Vec<Layer<T>>, dummy: T) -> Result<Self> {
        build_chain(layers, dummy, None)
    }

    /// Number of layers `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Layer `j`, 1-based.
    pub fn layer(&self, j: usize) -> &Layer<T> {
        &self.layers[j - 1]
    }

    /// The dummy sample used for stuffing.
    pub fn dummy(&self) -> &T {
        &self.dummy
    }

    /// Receptive field `B`.
    pub fn receptive_field(&self) -> usize {
        self.b
    }

    /// Stride product `k*_j` for `j = 0..=L`.
    pub fn stride_product(&self, j: usize) -> usize {
        self.kstar[j]
    }

    /// Strided intermediate length `u_j` for `j = 0..=L`.
    pub fn u(&self, j: usize) -> usize {
        self.u[j]
    }

    /// `(c_j, k_j)` for every layer.
    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.c(), l.k())).collect()
    }

    /// Same chain with a different dummy sample.
    pub fn with_dummy(&self, dummy: T) -> Self {
        ProcessingChain { dummy, ..self.clone() }
    }

    /// Same chain with every kernel replaced by `wrap(j, role, kernel)`.
    /// The replacement must keep the arity.
    pub fn map_kernels(&self, mut wrap: impl FnMut(usize, KernelRole, &Kernel<T>) -> Kernel<T>) -> Self {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let f = wrap(i + 1, KernelRole::Sliding, &l.f);
                let g = wrap(i + 1, KernelRole::Pooling, &l.g);
                assert_eq!((f.arity(), g.arity()), (l.c(), l.k()), "map_kernels must keep arities");
                Layer::new(f, g)
            })
            .collect();
        ProcessingChain { layers, ..self.clone() }
    }

    fn kl(&self) -> usize {
        self.kstar[self.depth()]
    }

    fn need_len(&self, op: &'static str, d: usize) -> Result<()> {
        if d < self.b {
            return Err(Error::length(op, self.b, d));
        }
        Ok(())
    }

    fn check_level(&self, op: &'static str, l: usize) -> Result<()> {
        if l < 1 || l >= self.depth() {
            return Err(Error::Precondition {
                op,
                detail: format!("level {l} outside [1, L-1] for a chain of depth L = {}", self.depth()),
            });
        }
        Ok(())
    }

    /// Strided evaluation of one subsignal of length exactly `B`.
    pub fn eval_stride(&self, rho: &Signal<T>) -> Result<Signal<T>> {
        if rho.len() != self.b {
            return Err(Error::Precondition {
                op: "eval_stride",
                detail: format!(
                    "input length {} differs from the receptive field B = {}",
                    rho.len(),
                    self.b
                ),
            });
        }
        self.strided_layers(rho.clone(), 1..=self.depth(), &mut None)
    }

    fn strided_layers(
        &self,
        mut x: Signal<T>,
        range: std::ops::RangeInclusive<usize>,
        shapes: &mut Shapes<'_>,
    ) -> Result<Signal<T>> {
        for j in range {
            let layer = self.layer(j);
            x = stride(&layer.g, &slide(&layer.f, &x)?)?;
            record(shapes, (x.len(), 1));
        }
        Ok(x)
    }

    fn fragmented_layers(
        &self,
        mut chi: Fragmented<T>,
        range: std::ops::RangeInclusive<usize>,
        shapes: &mut Shapes<'_>,
    ) -> Result<Fragmented<T>> {
        for j in range {
            let layer = self.layer(j);
            let pooled = slide_fragmented(&layer.g, &slide_fragmented(&layer.f, &chi)?)?;
            chi = fragment(layer.k(), &pooled)?;
            record(shapes, chi.shape());
        }
        Ok(chi)
    }

    fn run_slide(&self, xi: &Signal<T>, mut shapes: Shapes<'_>) -> Result<Fragmented<T>> {
        let d = xi.len();
        self.need_len("eval_slide", d)?;
        let kl = self.kl();
        if !(d - self.b + 1).is_multiple_of(kl) {
            return Err(Error::divisibility(
                "eval_slide",
                "k*_L",
                kl,
                "D - B + 1",
                d - self.b + 1,
            ));
        }
        record(&mut shapes, (d, 1));
        self.fragmented_layers(Fragmented::from_signal(xi.clone()), 1..=self.depth(), &mut shapes)
    }

    /// Sliding evaluation via fragmentation. Requires `D >= B` and
    /// `k*_L | D - B + 1`; the output has `k*_L` fragments, and the strided
    /// result for subsignal `i` sits at row `div(i-1, k*_L) + 1`, column
    /// `rem(i-1, k*_L) + 1`.
    pub fn eval_slide(&self, xi: &Signal<T>) -> Result<Fragmented<T>> {
        self.run_slide(xi, None)
    }

    /// [`Self::eval_slide`] together with the shape after every layer
    /// (index 0 is the input).
    pub fn eval_slide_traced(&self, xi: &Signal<T>) -> Result<Traced<T>> {
        let mut shapes = Vec::new();
        let out = self.run_slide(xi, Some(&mut shapes))?;
        Ok((out, shapes))
    }

    /// Number of dummy samples [`Self::exact_scan`] appends for input length `d`.
    pub fn exact_scan_stuffing(&self, d: usize) -> Result<usize> {
        self.need_len("exact_scan", d)?;
        let kl = self.kl();
        let rem = (d - self.b + 1) % kl;
        Ok(if rem == 0 { 0 } else { kl - rem })
    }

    /// Dense scan of any signal with `D >= B`: output sample `i` is the
    /// strided evaluation of subsignal `i`, for `i = 1..=D-B+1`.
    pub fn exact_scan(&self, xi: &Signal<T>) -> Result<Signal<T>> {
        let r = self.exact_scan_stuffing(xi.len())?;
        let stuffed = stuff(r, &self.dummy, xi);
        let out = defragment(self.kl(), &self.eval_slide(&stuffed)?)?.into_signal()?;
        trim(r, &out)
    }

    fn run_dilate(&self, xi: &Signal<T>, mut shapes: Shapes<'_>) -> Result<Signal<T>> {
        self.need_len("eval_dilate", xi.len())?;
        record(&mut shapes, (xi.len(), 1));
        let mut x = xi.clone();
        for j in 1..=self.depth() {
            let layer = self.layer(j);
            let step = self.kstar[j - 1];
            x = crate::windowed::dilate(&layer.g, step, &crate::windowed::dilate(&layer.f, step, &x)?)?;
            record(&mut shapes, (x.len(), 1));
        }
        Ok(x)
    }

    /// Dense scan with dilated kernels; any `D >= B`, output length `D - B + 1`.
    pub fn eval_dilate(&self, xi: &Signal<T>) -> Result<Signal<T>> {
        self.run_dilate(xi, None)
    }

    /// [`Self::eval_dilate`] with the length `V_j` after every layer.
    pub fn eval_dilate_traced(&self, xi: &Signal<T>) -> Result<(Signal<T>, Vec<usize>)> {
        let mut shapes = Vec::new();
        let out = self.run_dilate(xi, Some(&mut shapes))?;
        Ok((out, shapes.into_iter().map(|s| s.0).collect()))
    }

    fn run_relax(&self, xi: &Signal<T>, mut shapes: Shapes<'_>) -> Result<Signal<T>> {
        let d = xi.len();
        self.need_len("eval_relax", d)?;
        let kl = self.kl();
        if !(d - self.b).is_multiple_of(kl) {
            return Err(Error::divisibility("eval_relax", "k*_L", kl, "D - B", d - self.b));
        }
        record(&mut shapes, (d, 1));
        self.strided_layers(xi.clone(), 1..=self.depth(), &mut shapes)
    }

    /// Strided pipeline applied to a whole signal. Requires `k*_L | D - B`;
    /// output sample `i` is the strided evaluation of subsignal
    /// `k*_L (i-1) + 1`.
    pub fn eval_relax(&self, xi: &Signal<T>) -> Result<Signal<T>> {
        self.run_relax(xi, None)
    }

    /// [`Self::eval_relax`] with the length `W_j` after every layer.
    pub fn eval_relax_traced(&self, xi: &Signal<T>) -> Result<(Signal<T>, Vec<usize>)> {
        let mut shapes = Vec::new();
        let out = self.run_relax(xi, Some(&mut shapes))?;
        Ok((out, shapes.into_iter().map(|s| s.0).collect()))
    }

    /// Samples [`Self::relaxed_scan`] trims for input length `d`.
    pub fn relaxed_scan_trim(&self, d: usize) -> Result<usize> {
        self.need_len("relaxed_scan", d)?;
        Ok((d - self.b) % self.kl())
    }

    /// Relaxed evaluation of any signal with `D >= B`: the dense scan
    /// downsampled by `k*_L`. Requires `k*_L >= 2`.
    pub fn relaxed_scan(&self, xi: &Signal<T>) -> Result<Signal<T>> {
        if self.kl() < 2 {
            return Err(Error::Precondition {
                op: "relaxed_scan",
                detail: "the final stride product k*_L must be at least 2".into(),
            });
        }
        let r = self.relaxed_scan_trim(xi.len())?;
        self.eval_relax(&trim(r, xi)?)
    }

    /// Runs [`Self::eval_relax`] on the `k*_L` shifted subsignals of length
    /// `D - k*_L + 1` and interleaves the passes. Same preconditions as
    /// [`Self::eval_slide`].
    pub fn shift_and_stitch(&self, xi: &Signal<T>) -> Result<ShiftStitch<T>> {
        let d = xi.len();
        self.need_len("shift_and_stitch", d)?;
        let kl = self.kl();
        if !(d - self.b + 1).is_multiple_of(kl) {
            return Err(Error::divisibility(
                "shift_and_stitch",
                "k*_L",
                kl,
                "D - B + 1",
                d - self.b + 1,
            ));
        }
        let width = d - kl + 1;
        let passes = (1..=kl)
            .map(|gamma| self.eval_relax(&crate::signal::subsignal(xi, width, gamma)?))
            .collect::<Result<Vec<_>>>()?;
        let columns = passes.iter().map(|p| p.as_slice().to_vec()).collect();
        let stitched = defragment(kl, &Fragmented::from_columns(columns)?)?.into_signal()?;
        Ok(ShiftStitch { passes, stitched })
    }

    fn run_mixed(&self, l: usize, xi: &Signal<T>, mut shapes: Shapes<'_>) -> Result<Fragmented<T>> {
        self.check_level("eval_mixed", l)?;
        let d = xi.len();
        let (kl, kls) = (self.kl(), self.kstar[l]);
        let min = self.b + kl - kls;
        if d < min {
            return Err(Error::length("eval_mixed", min, d));
        }
        if !(d - self.b + kls).is_multiple_of(kl) {
            return Err(Error::divisibility(
                "eval_mixed",
                "k*_L",
                kl,
                "D - B + k*_l",
                d - self.b + kls,
            ));
        }
        record(&mut shapes, (d, 1));
        let x = self.strided_layers(xi.clone(), 1..=l, &mut shapes)?;
        self.fragmented_layers(Fragmented::from_signal(x), l + 1..=self.depth(), &mut shapes)
    }

    /// First `l` layers relaxed, the rest fragmented. Requires
    /// `D = B + k*_L t - k*_l` for some `t >= 1`; the output has
    /// `k*_L / k*_l` fragments.
    pub fn eval_mixed(&self, l: usize, xi: &Signal<T>) -> Result<Fragmented<T>> {
        self.run_mixed(l, xi, None)
    }

    /// [`Self::eval_mixed`] with the shape after every layer.
    pub fn eval_mixed_traced(&self, l: usize, xi: &Signal<T>) -> Result<Traced<T>> {
        let mut shapes = Vec::new();
        let out = self.run_mixed(l, xi, Some(&mut shapes))?;
        Ok((out, shapes))
    }

    /// Operating mode of [`Self::mixed_scan`] for input length `d`.
    pub fn mixed_scan_plan(&self, l: usize, d: usize) -> Result<MixedPlan> {
        self.check_level("mixed_scan", l)?;
        self.need_len("mixed_scan", d)?;
        let (kl, kls) = (self.kl(), self.kstar[l]);
        let r = (d - self.b + kls) % kl;
        if r < kls {
            return Ok(MixedPlan::Trimming { r });
        }
        let dense = d - self.b + 1;
        let s_tilde = if dense.is_multiple_of(kls) { kls } else { dense % kls };
        let num = kl - r + s_tilde - 1;
        debug_assert_eq!(num % kls, 0);
        Ok(MixedPlan::Stuffing {
            stuffed: kl - r,
            s: num / kls,
        })
    }

    /// Mixed evaluation of any signal with `D >= B`: the dense scan
    /// downsampled by `k*_l`.
    pub fn mixed_scan(&self, l: usize, xi: &Signal<T>) -> Result<Signal<T>> {
        let ratio = self.kl() / self.kstar[l.min(self.depth())];
        match self.mixed_scan_plan(l, xi.len())? {
            MixedPlan::Trimming { r } => {
                let out = self.eval_mixed(l, &trim(r, xi)?)?;
                defragment(ratio, &out)?.into_signal()
            }
            MixedPlan::Stuffing { stuffed, s } => {
                let out = self.eval_mixed(l, &stuff(stuffed, &self.dummy, xi))?;
                trim(s, &defragment(ratio, &out)?.into_signal()?)
            }
        }
    }

    /// Closed-form shapes of every regime for input length `d >= B`.
    pub fn chain_dims(&self, d: usize) -> Result<DimReport> {
        self.need_len("chain_dims", d)?;
        let depth = self.depth();
        let kl = self.kl();
        let b = self.b;
        // consumed[j] = sum_{mu<=j} k*_{mu-1} (c_mu - 1)
        let mut consumed = vec![0usize];
        let mut dilated = vec![0usize];
        for j in 1..=depth {
            let (c, k) = (self.layer(j).c(), self.layer(j).k());
            consumed.push(consumed[j - 1] + self.kstar[j - 1] * (c - 1));
            dilated.push(dilated[j - 1] + self.kstar[j - 1] * (c + k - 2));
        }

        let slide = if (d - b + 1).is_multiple_of(kl) {
            Ok((0..=depth)
                .map(|j| ((d + 1 - self.kstar[j] - consumed[j]) / self.kstar[j], self.kstar[j]))
                .collect())
        } else {
            Err(NotApplicable {
                reason: format!("k*_L = {kl} does not divide D - B + 1 = {}", d - b + 1),
            })
        };

        let relax_lengths =
            |upto: usize| -> Vec<usize> { (0..=upto).map(|j| (d - consumed[j]) / self.kstar[j]).collect() };
        let relax = if (d - b).is_multiple_of(kl) {
            Ok(relax_lengths(depth))
        } else {
            Err(NotApplicable {
                reason: format!("k*_L = {kl} does not divide D - B = {}", d - b),
            })
        };

        let dilate = (0..=depth).map(|j| d - dilated[j]).collect();

        let mixed = (1..depth)
            .map(|l| {
                let kls = self.kstar[l];
                let shapes = if d < b + kl - kls {
                    Err(NotApplicable {
                        reason: format!("D = {d} is below B + k*_L - k*_l = {}", b + kl - kls),
                    })
                } else if !(d - b + kls).is_multiple_of(kl) {
                    Err(NotApplicable {
                        reason: format!("k*_L = {kl} does not divide D - B + k*_l = {}", d - b + kls),
                    })
                } else {
                    let t = (d - b + kls) / kl;
                    let mut v: Vec<(usize, usize)> = relax_lengths(l).into_iter().map(|w| (w, 1)).collect();
                    for j in l + 1..=depth {
                        v.push((kl / self.kstar[j] * t + self.u[j] - 1, self.kstar[j] / kls));
                    }
                    Ok(v)
                };
                MixedDims { level: l, shapes }
            })
            .collect();

        Ok(DimReport {
            d,
            u: self.u.clone(),
            slide,
            dilate,
            relax,
            mixed,
        })
    }
}
