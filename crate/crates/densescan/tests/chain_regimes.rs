//! Dense-scan regimes checked against per-window strided evaluation on a
//! seeded corpus of random chains.

use std::fmt::Debug;

use densescan::chain::MixedPlan;
use densescan::corpus::{signal_f64, signal_i64, signal_u64, Caps, ChainSpec};
use densescan::resample::downsample;
use densescan::rng::Rng;
use densescan::signal::{div, rem};
use densescan::{build_chain, subsignal, Error, Kernel, Layer, ProcessingChain, Signal};

#[derive(Default, Debug)]
struct Tally {
    trimming: usize,
    stuffing: usize,
    stuffed_scans: usize,
}

/// Naive oracle: one strided evaluation per window.
fn oracle<T: Clone>(chain: &ProcessingChain<T>, xi: &Signal<T>) -> Vec<T> {
    let b = chain.receptive_field();
    (1..=xi.len() - b + 1)
        .map(|i| {
            let out = chain.eval_stride(&subsignal(xi, b, i).unwrap()).unwrap();
            assert_eq!(out.len(), 1);
            out.at(1).clone()
        })
        .collect()
}

fn check<T: Clone + PartialEq + Debug + 'static>(
    chain: &ProcessingChain<T>,
    other_dummy: T,
    xi: &Signal<T>,
    tally: &mut Tally,
) {
    let d = xi.len();
    let b = chain.receptive_field();
    let depth = chain.depth();
    let kl = chain.stride_product(depth);
    let want = oracle(chain, xi);

    // exact scan and the stuffing bound
    let r = chain.exact_scan_stuffing(d).unwrap();
    assert!(r < kl);
    let exact = chain.exact_scan(xi).unwrap();
    assert_eq!(exact.as_slice(), want.as_slice());

    // dummy independence
    let alt = chain.with_dummy(other_dummy);
    if r > 0 {
        tally.stuffed_scans += 1;
        assert_eq!(alt.exact_scan(xi).unwrap(), exact);
    }

    // dilated regime and its lengths
    let (dil, v) = chain.eval_dilate_traced(xi).unwrap();
    assert_eq!(dil, exact);
    let dims = chain.chain_dims(d).unwrap();
    assert_eq!(dims.dilate, v);

    // relaxed scan
    if kl >= 2 {
        assert_eq!(chain.relaxed_scan(xi).unwrap(), downsample(kl, &exact));
    }
    match &dims.relax {
        Ok(w) => {
            let (out, measured) = chain.eval_relax_traced(xi).unwrap();
            assert_eq!(&measured, w);
            assert_eq!(out, downsample(kl, &exact));
        }
        Err(_) => assert!(chain.eval_relax(xi).is_err()),
    }

    // shift-and-stitch, placement law, slide shapes
    match &dims.slide {
        Ok(u) => {
            let (frag, measured) = chain.eval_slide_traced(xi).unwrap();
            assert_eq!(&measured, u);
            for (j, &(rows, cols)) in u.iter().enumerate() {
                assert_eq!(rows * cols, v[j], "V_j = U_row_j U_col_j");
            }
            for i in 1..=d - b + 1 {
                assert_eq!(frag.at(div(i - 1, kl) + 1, rem(i - 1, kl) + 1), &want[i - 1]);
            }
            let ss = chain.shift_and_stitch(xi).unwrap();
            for gamma in 1..=kl {
                assert_eq!(ss.passes[gamma - 1].as_slice(), frag.column(gamma).as_slice());
            }
            assert_eq!(ss.stitched, exact);
        }
        Err(_) => {
            assert!(matches!(chain.eval_slide(xi), Err(Error::Divisibility { .. })));
        }
    }

    // mixed scan at every level
    for m in &dims.mixed {
        let l = m.level;
        let kls = chain.stride_product(l);
        let plan = chain.mixed_scan_plan(l, d).unwrap();
        match plan {
            MixedPlan::Trimming { .. } => tally.trimming += 1,
            MixedPlan::Stuffing { .. } => tally.stuffing += 1,
        }
        let mixed = chain.mixed_scan(l, xi).unwrap();
        assert_eq!(mixed, downsample(kls, &exact), "level {l}, D = {d}, plan {plan:?}");
        if matches!(plan, MixedPlan::Stuffing { .. }) {
            assert_eq!(alt.mixed_scan(l, xi).unwrap(), mixed);
        }
        match &m.shapes {
            Ok(shapes) => {
                let (out, measured) = chain.eval_mixed_traced(l, xi).unwrap();
                assert_eq!(&measured, shapes);
                assert_eq!(out.cols(), kl / kls);
            }
            Err(_) => assert!(chain.eval_mixed(l, xi).is_err()),
        }
    }
}

fn run_corpus(seed: u64, chains: usize) -> Tally {
    let caps = Caps::default();
    let mut rng = Rng::new(seed);
    let mut tally = Tally::default();
    for _ in 0..chains {
        let spec = ChainSpec::random(&mut rng, &caps);
        let b = spec.receptive_field();
        let (ci, cf, ch) = (spec.build_i64(0), spec.build_f64(0.0), spec.build_hash(0));
        for d in b..=caps.max_d {
            check(&ci, 77, &signal_i64(&mut rng, d), &mut tally);
            check(&cf, -3.25, &signal_f64(&mut rng, d), &mut tally);
            check(&ch, u64::MAX, &signal_u64(&mut rng, d), &mut tally);
        }
    }
    tally
}

#[test]
fn oracle_equivalence_corpus() {
    let tally = run_corpus(2024, 40);
    assert!(tally.trimming >= 20, "{tally:?}");
    assert!(tally.stuffing >= 20, "{tally:?}");
    assert!(tally.stuffed_scans > 0);
}

fn sum_max() -> ProcessingChain<i64> {
    ProcessingChain::new(
        vec![Layer::new(
            Kernel::new(2, |w: &[i64]| w[0] + w[1]),
            Kernel::new(2, |w: &[i64]| w[0].max(w[1])),
        )],
        0,
    )
    .unwrap()
}

#[test]
fn sum_max_dims() {
    let c = sum_max();
    assert_eq!(c.receptive_field(), 3);
    let dims = c.chain_dims(6).unwrap();
    assert_eq!(dims.u, vec![3, 1]);
    assert_eq!(dims.slide.unwrap(), vec![(6, 1), (2, 2)]);
    assert_eq!(dims.dilate, vec![6, 4]);
    assert!(dims.relax.is_err());
    let trivial = c.chain_dims(3).unwrap();
    assert_eq!(trivial.dilate, vec![3, 1]);
    assert_eq!(trivial.relax.unwrap(), vec![3, 1]);
}

#[test]
fn slide_divisibility_message() {
    let c = sum_max();
    let xi = Signal::new(vec![1i64; 7]).unwrap();
    let err = c.eval_slide(&xi).unwrap_err().to_string();
    assert!(err.contains("k*_L") && err.contains("D - B + 1"), "{err}");
}

#[test]
fn relaxed_scan_needs_downsampling() {
    let c = ProcessingChain::new(vec![Layer::bypass(Kernel::new(2, |w: &[i64]| w[0] * w[1]))], 0).unwrap();
    let xi = Signal::new(vec![1i64, 2, 3]).unwrap();
    assert!(c.relaxed_scan(&xi).unwrap_err().is_precondition());
}

#[test]
fn declared_receptive_field_is_checked() {
    let layers = || {
        vec![Layer::new(
            Kernel::new(2, |w: &[i64]| w[0] + w[1]),
            Kernel::new(2, |w: &[i64]| w[0].max(w[1])),
        )]
    };
    assert_eq!(build_chain(layers(), 0, Some(3)).unwrap().receptive_field(), 3);
    assert!(matches!(
        build_chain(layers(), 0, Some(4)),
        Err(Error::IllFormedChain { .. })
    ));
    assert!(matches!(
        build_chain(layers(), 0, Some(5)),
        Err(Error::IllFormedChain { .. })
    ));
    assert!(matches!(
        build_chain(Vec::new(), 0, None),
        Err(Error::IllFormedChain { layer: 0, .. })
    ));
}

#[test]
fn bypass_chain_is_pointwise() {
    let c = ProcessingChain::new(vec![Layer::bypass(Kernel::new(1, |w: &[i64]| 2 * w[0]))], 0).unwrap();
    let xi = Signal::new((1..=9).collect::<Vec<i64>>()).unwrap();
    assert_eq!(c.exact_scan(&xi).unwrap(), xi.map(|v| 2 * v));
}
