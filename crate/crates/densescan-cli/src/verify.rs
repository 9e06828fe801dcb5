//! Seeded randomized verification of the scanning theorems.
//!
//! Every check is recorded under a named suite; the report lists the suites
//! in a fixed order with their pass counts and, on failure, the first failing
//! instance. The report depends only on the manifest.

use std::fmt::{Debug, Write as _};

use densescan::chain::MixedPlan;
use densescan::cnn::{
    channel_signal, duc, duc_reorder, transposed_conv, transposed_conv_min_len, zoh_filter_bank, FilterBank,
};
use densescan::complexity::{count_eval, Regime};
use densescan::corpus::{signal_f64, signal_i64, signal_u64, tree_hash, Caps, ChainSpec};
use densescan::multiscale::{
    ms_downscale, ms_index, ms_scan, ms_scan_reference, ms_subsignal, padded_subsignal, MultiScaleConfig,
};
use densescan::resample::{downsample, upsample_zoh, Boundary};
use densescan::rng::Rng;
use densescan::signal::{div, rem};
use densescan::windowed::{defragment, fragment};
use densescan::{subsignal, Fragmented, Kernel, ProcessingChain, Signal};

/// Parameters that fully determine a verification run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunManifest {
    pub seed: u64,
    pub trials: usize,
    pub caps: Caps,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            seed: 1,
            trials: 200,
            caps: Caps::default(),
        }
    }
}

const SUITES: &[&str] = &[
    "exact scan = per-window strided evaluation",
    "dilated evaluation = exact scan",
    "relaxed scan = downsampled exact scan",
    "shift-and-stitch passes = sliding fragments",
    "mixed scan (trimming) = downsampled exact scan",
    "mixed scan (stuffing) = downsampled exact scan",
    "dummy value independence",
    "placement in the fragmented output",
    "dimension formulas",
    "fragmentation laws",
    "multi-scale window properties",
    "multi-scale fast path = per-window path",
    "transposed convolution length",
    "zero-order-hold filter bank",
    "dense upsampling convolution",
    "invocation counts = closed forms",
];

#[derive(Debug, Clone, Default)]
struct Suite {
    passed: u64,
    failed: u64,
    first_failure: Option<String>,
}

/// Outcome of a verification run.
#[derive(Debug, Clone)]
pub struct Report {
    manifest: RunManifest,
    suites: Vec<Suite>,
    skipped_chains: usize,
}

impl Report {
    fn new(manifest: RunManifest) -> Self {
        Report {
            manifest,
            suites: vec![Suite::default(); SUITES.len()],
            skipped_chains: 0,
        }
    }

    fn record(&mut self, suite: usize, ok: bool, instance: impl FnOnce() -> String) {
        let s = &mut self.suites[suite];
        if ok {
            s.passed += 1;
        } else {
            s.failed += 1;
            if s.first_failure.is_none() {
                s.first_failure = Some(instance());
            }
        }
    }

    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.failed == 0)
    }

    /// Suites that ran no checks at all.
    pub fn vacuous(&self) -> Vec<&'static str> {
        SUITES
            .iter()
            .zip(&self.suites)
            .filter(|(_, s)| s.passed + s.failed == 0)
            .map(|(n, _)| *n)
            .collect()
    }

    pub fn render(&self) -> String {
        let m = &self.manifest;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "densescan verify: seed {} trials {} caps L<={} c<={} k<={} D<={}",
            m.seed, m.trials, m.caps.max_l, m.caps.max_c, m.caps.max_k, m.caps.max_d
        );
        if self.skipped_chains > 0 {
            let _ = writeln!(
                out,
                "{} chains had B above the length cap and were skipped",
                self.skipped_chains
            );
        }
        for (name, s) in SUITES.iter().zip(&self.suites) {
            let status = if s.failed > 0 { "FAIL" } else { "ok" };
            let total = s.passed + s.failed;
            let _ = writeln!(out, "{status:<4} {name}: {}/{total} trials", s.passed);
            if let Some(f) = &s.first_failure {
                let _ = writeln!(out, "     first failure: {f}");
            }
        }
        for name in self.vacuous() {
            let _ = writeln!(out, "warning: {name}: 0 trials, vacuous pass");
        }
        let _ = writeln!(
            out,
            "{}",
            if self.all_passed() {
                "result: pass"
            } else {
                "result: FAIL"
            }
        );
        out
    }
}

fn instance<T: Debug>(spec: &ChainSpec, xi: &Signal<T>, what: &str) -> String {
    format!("{what}; chain {spec}; signal {:?}", xi.as_slice())
}

fn oracle<T: Clone>(chain: &ProcessingChain<T>, xi: &Signal<T>) -> Option<Vec<T>> {
    let b = chain.receptive_field();
    (1..=xi.len() - b + 1)
        .map(|i| {
            let out = chain.eval_stride(&subsignal(xi, b, i).ok()?).ok()?;
            (out.len() == 1).then(|| out.at(1).clone())
        })
        .collect()
}

fn check_chain<T: Clone + PartialEq + Debug + 'static>(
    report: &mut Report,
    spec: &ChainSpec,
    chain: &ProcessingChain<T>,
    alt_dummy: T,
    xi: &Signal<T>,
) {
    let d = xi.len();
    let b = chain.receptive_field();
    let kl = chain.stride_product(chain.depth());
    let ctx = |what: &str| instance(spec, xi, what);
    let want = oracle(chain, xi);
    let exact = chain.exact_scan(xi).ok();
    let ok_exact = want.is_some() && exact.as_ref().map(|e| e.as_slice()) == want.as_deref();
    report.record(0, ok_exact, || ctx("exact scan"));
    let Some(exact) = exact else { return };

    report.record(1, chain.eval_dilate(xi).ok().as_ref() == Some(&exact), || ctx("dilate"));
    if kl >= 2 {
        let ok = chain.relaxed_scan(xi).ok() == Some(downsample(kl, &exact));
        report.record(2, ok, || ctx("relaxed scan"));
    }

    let alt = chain.with_dummy(alt_dummy);
    if chain.exact_scan_stuffing(d).unwrap_or(0) > 0 {
        report.record(6, alt.exact_scan(xi).ok().as_ref() == Some(&exact), || {
            ctx("dummy, exact scan")
        });
    }

    let Ok(dims) = chain.chain_dims(d) else {
        report.record(8, false, || ctx("chain_dims"));
        return;
    };
    let mut dims_ok = chain.eval_dilate_traced(xi).map(|(_, v)| v).ok().as_ref() == Some(&dims.dilate);
    match &dims.slide {
        Ok(shapes) => {
            let traced = chain.eval_slide_traced(xi).ok();
            dims_ok &= traced.as_ref().map(|t| &t.1) == Some(shapes);
            dims_ok &= shapes.iter().zip(&dims.dilate).all(|(&(r, c), &v)| r * c == v);
            if let (Some((frag, _)), Some(want)) = (traced, want.as_ref()) {
                let placed = (1..=d - b + 1).all(|i| frag.at(div(i - 1, kl) + 1, rem(i - 1, kl) + 1) == &want[i - 1]);
                report.record(7, placed, || ctx("placement"));
                let ok = chain.shift_and_stitch(xi).is_ok_and(|ss| {
                    ss.stitched == exact && (1..=kl).all(|g| ss.passes[g - 1].as_slice() == frag.column(g).as_slice())
                });
                report.record(3, ok, || ctx("shift-and-stitch"));
            }
        }
        Err(_) => dims_ok &= chain.eval_slide(xi).is_err(),
    }
    match &dims.relax {
        Ok(w) => dims_ok &= chain.eval_relax_traced(xi).map(|t| t.1).ok().as_ref() == Some(w),
        Err(_) => dims_ok &= chain.eval_relax(xi).is_err(),
    }
    for m in &dims.mixed {
        let l = m.level;
        match &m.shapes {
            Ok(s) => dims_ok &= chain.eval_mixed_traced(l, xi).map(|t| t.1).ok().as_ref() == Some(s),
            Err(_) => dims_ok &= chain.eval_mixed(l, xi).is_err(),
        }
        let want_l = downsample(chain.stride_product(l), &exact);
        let ok = chain.mixed_scan(l, xi).ok() == Some(want_l);
        match chain.mixed_scan_plan(l, d) {
            Ok(MixedPlan::Trimming { .. }) => report.record(4, ok, || ctx(&format!("mixed level {l}"))),
            Ok(MixedPlan::Stuffing { .. }) => {
                report.record(5, ok, || ctx(&format!("mixed level {l}")));
                let same = alt.mixed_scan(l, xi).ok() == chain.mixed_scan(l, xi).ok();
                report.record(6, same, || ctx(&format!("dummy, mixed level {l}")));
            }
            Err(_) => report.record(4, false, || ctx(&format!("mixed plan level {l}"))),
        }
    }
    report.record(8, dims_ok, || ctx("dimension formulas"));
}

fn check_counts(report: &mut Report, spec: &ChainSpec, chain: &ProcessingChain<i64>, d: usize) {
    let b = chain.receptive_field();
    let kl = chain.stride_product(chain.depth());
    let mut regimes = vec![Regime::Stride, Regime::Dilate];
    if (d - b + 1).is_multiple_of(kl) {
        regimes.extend([Regime::Slide, Regime::ShiftStitch]);
    }
    if (d - b).is_multiple_of(kl) {
        regimes.push(Regime::Relax);
    }
    for regime in regimes {
        let ok = count_eval(regime, chain, d).is_ok_and(|c| c.agrees());
        report.record(15, ok, || format!("{regime} counts; chain {spec}; D = {d}"));
    }
}

fn check_fragmentation(report: &mut Report, rng: &mut Rng) {
    let k1 = *rng.pick(&[1usize, 2, 3, 6]);
    let k2 = *rng.pick(&[1usize, 2, 3]);
    let rows = k1 * k2 * rng.range(1, 3);
    let cols = rng.range(1, 6);
    let chi = Fragmented::from_fn(rows, cols, |mu, nu| (mu, nu));
    let f1 = fragment(k1, &chi).ok();
    let ok = f1.as_ref().is_some_and(|f| {
        defragment(k1, f).ok().as_ref() == Some(&chi)
            && fragment(k2, f).ok() == fragment(k1 * k2, &chi).ok()
            && fragment(k2, f).ok() == fragment(k2, &chi).ok().and_then(|g| fragment(k1, &g).ok())
    });
    report.record(9, ok, || format!("fragmentation k1 = {k1}, k2 = {k2}, {rows}x{cols}"));
}

fn check_multiscale(report: &mut Report, rng: &mut Rng, trial: usize, max_d: usize) {
    let b = rng.range(1, 6);
    let k = rng.range(2, 3);
    let h = rng.range(k, k + 2);
    let salt = rng.next_u64();
    let theta = if trial.is_multiple_of(2) {
        Boundary::Dirichlet(0)
    } else {
        Boundary::Neumann
    };
    if max_d.min(40) < b {
        return;
    }
    let d = rng.range(b, max_d.min(40));
    let xi = signal_u64(rng, d);
    let Ok(cfg) = MultiScaleConfig::new(k, Kernel::new(h, move |w: &[u64]| tree_hash(salt, w)), theta, b) else {
        return;
    };
    let (rt, r) = cfg.boundary_sizes();
    let what = || format!("multi-scale B = {b}, k = {k}, h = {h}, D = {d}, trial {trial}");
    let props = ms_downscale(&cfg, &xi).is_ok_and(|pi| {
        pi.len() == (d - b + 1 + rt % 2).div_ceil(k) + b - 1
            && (1..=d - b + 1).all(|i| {
                let centered = padded_subsignal(&xi, b, r, cfg.boundary(), i)
                    .is_ok_and(|p| (1..=b).all(|mu| p.at(mu + r) == xi.at(i + mu - 1)));
                let j = ms_index(k, i);
                let in_pi = ms_subsignal(&cfg, &xi, j).ok() == subsignal(&pi, b, div(i - 1, k) + 1).ok();
                centered && j <= i && i - j < k && in_pi
            })
    });
    report.record(10, props, what);
    let (s1, s2) = (rng.next_u64(), rng.next_u64());
    let g1 = Kernel::new(b, move |w: &[u64]| tree_hash(s1, w));
    let g2 = Kernel::new(b, move |w: &[u64]| tree_hash(s2, w));
    let pair = |p: &u64, q: &u64| (*p, *q);
    let fast = ms_scan(&cfg, &xi, &g1, &g2, pair).ok();
    let ok = fast.is_some() && fast == ms_scan_reference(&cfg, &xi, &g1, &g2, pair).ok();
    report.record(11, ok, what);
}

fn random_channels(rng: &mut Rng, d: usize, m: usize) -> Signal<densescan::cnn::Channels> {
    channel_signal(
        (0..d)
            .map(|_| (0..m).map(|_| rng.range_i64(-40, 40) as f64 / 8.0).collect())
            .collect(),
    )
    .expect("finite samples")
}

fn random_bank(rng: &mut Rng, c: usize, m: usize, n: usize) -> FilterBank {
    FilterBank::from_fn(c, m, n, |_, _, _| rng.range_i64(-20, 20) as f64 / 7.0).expect("finite weights")
}

fn check_upsampling(report: &mut Report, rng: &mut Rng) {
    let (d, k, c, p) = (rng.range(1, 8), rng.range(1, 3), rng.range(1, 5), rng.range(0, 2));
    let xi = random_channels(rng, d, 1);
    let w = random_bank(rng, c, 1, 1);
    let ok = match transposed_conv(&xi, &w, k, p) {
        Ok(out) => d >= transposed_conv_min_len(c, k, p) && out.len() + 2 * p == k * (d - 1) + c,
        Err(_) => d < transposed_conv_min_len(c, k, p),
    };
    report.record(12, ok, || format!("transposed conv D = {d}, k = {k}, c = {c}, P = {p}"));

    let u = *rng.pick(&[2usize, 4]);
    let m = rng.range(1, 3);
    let d = rng.range(1, 12);
    let xi = random_channels(rng, d, m);
    let ok = zoh_filter_bank(u, m)
        .and_then(|w| transposed_conv(&xi, &w, u, u / 2))
        .is_ok_and(|out| out == upsample_zoh(u, &xi));
    report.record(13, ok, || format!("zero-order hold u = {u}, m = {m}, D = {}", xi.len()));

    let u = rng.range(1, 4);
    let (m, n) = (rng.range(1, 3), rng.range(1, 3));
    let w = random_bank(rng, u, m, n);
    let d = rng.range(1, 10);
    let xi = random_channels(rng, d, m);
    let ok = duc(&xi, &duc_reorder(&w), u).ok() == transposed_conv(&xi, &w, u, 0).ok();
    report.record(14, ok, || {
        format!("dense upsampling u = {u}, m = {m}, n = {n}, bank {w:?}")
    });
}

/// Runs every suite for the manifest.
pub fn run(manifest: &RunManifest) -> Report {
    let mut report = Report::new(*manifest);
    let mut rng = Rng::new(manifest.seed);
    let caps = manifest.caps;
    for trial in 0..manifest.trials {
        let spec = ChainSpec::random(&mut rng, &caps);
        let b = spec.receptive_field();
        if b > caps.max_d {
            report.skipped_chains += 1;
        } else {
            let (ci, cf, ch) = (spec.build_i64(0), spec.build_f64(0.0), spec.build_hash(0));
            for d in b..=caps.max_d {
                check_chain(&mut report, &spec, &ci, 77, &signal_i64(&mut rng, d));
                check_chain(&mut report, &spec, &cf, -3.25, &signal_f64(&mut rng, d));
                check_chain(&mut report, &spec, &ch, u64::MAX, &signal_u64(&mut rng, d));
                check_counts(&mut report, &spec, &ci, d);
            }
        }
        check_fragmentation(&mut report, &mut rng);
        check_multiscale(&mut report, &mut rng, trial, caps.max_d);
        check_upsampling(&mut report, &mut rng);
    }
    report
}
