use densescan::signal::{div, rem};
use densescan::windowed::{defragment, dilate, fragment, slide, slide_fragmented, stride};
use densescan::{euclid_divmod, subsignal, unvectorize, vectorize, Fragmented, Kernel, Signal};
use proptest::prelude::*;

fn sig(v: Vec<i64>) -> Signal<i64> {
    Signal::new(v).unwrap()
}

fn signal_strategy(max: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-50i64..50, 1..=max)
}

/// Position-sensitive kernel: a polynomial hash of the window.
fn poly(c: usize, salt: i64) -> Kernel<i64> {
    Kernel::new(c, move |w: &[i64]| {
        w.iter().fold(salt, |a, &v| a.wrapping_mul(31).wrapping_add(v))
    })
}

proptest! {
    #[test]
    fn euclid_reconstructs(a in 0usize..1_000_000, b in 1usize..1_000_000, c in 0usize..1_000) {
        let (q, r) = euclid_divmod(a, b);
        prop_assert_eq!(q * b + r, a);
        prop_assert!(r < b);
        prop_assert_eq!(div(a + c * b, b), div(a, b) + c);
        prop_assert_eq!(rem(a + c * b, b), rem(a, b));
    }

    #[test]
    fn subsignal_composition(v in signal_strategy(64), seed in any::<u64>()) {
        let xi = sig(v);
        let n = xi.len();
        let d = 1 + (seed as usize) % n;
        let i = 1 + (seed as usize / 7) % (n - d + 1);
        let c = 1 + (seed as usize / 13) % d;
        let j = 1 + (seed as usize / 17) % (d - c + 1);
        let inner = subsignal(&xi, d, i).unwrap();
        prop_assert_eq!(subsignal(&inner, c, j).unwrap(), subsignal(&xi, c, i + j - 1).unwrap());
    }

    #[test]
    fn vectorize_roundtrip(rows in 1usize..=8, cols in 1usize..=8, seed in any::<u64>()) {
        let chi = Fragmented::from_fn(rows, cols, |mu, nu| (seed.wrapping_mul(mu as u64 * 131 + nu as u64) % 3) as i64);
        prop_assert_eq!(unvectorize(&vectorize(&chi), rows, cols).unwrap(), chi);
    }

    #[test]
    fn exchange_property(v in signal_strategy(48), c in 1usize..=4) {
        let xi = sig(v);
        prop_assume!(xi.len() >= c);
        let f = poly(c, 7);
        let out = slide(&f, &xi).unwrap();
        for d in c..=xi.len() {
            for i in 1..=xi.len() - d + 1 {
                prop_assert_eq!(
                    slide(&f, &subsignal(&xi, d, i).unwrap()).unwrap(),
                    subsignal(&out, d - c + 1, i).unwrap()
                );
            }
        }
    }

    #[test]
    fn slide_composition(v in signal_strategy(40), c1 in 1usize..=3, c2 in 1usize..=3) {
        let xi = sig(v);
        prop_assume!(xi.len() + 1 >= c1 + c2);
        let (f1, f2) = (poly(c1, 3), poly(c2, 5));
        let (a, b) = (f1.clone(), f2.clone());
        let h = Kernel::new(c1 + c2 - 1, move |w: &[i64]| {
            let inner = slide(&a, &Signal::new(w.to_vec()).unwrap()).unwrap();
            b.eval(inner.as_slice())
        });
        prop_assert_eq!(slide(&f2, &slide(&f1, &xi).unwrap()).unwrap(), slide(&h, &xi).unwrap());
    }

    #[test]
    fn stride_examples_generalize(v in signal_strategy(36), k in 1usize..=4) {
        let xi = sig(v);
        prop_assume!(xi.len().is_multiple_of(k));
        let g = poly(k, 1);
        let out = stride(&g, &xi).unwrap();
        prop_assert_eq!(out.len(), xi.len() / k);
        for i in 1..=out.len() {
            prop_assert_eq!(*out.at(i), g.eval(subsignal(&xi, k, k * (i - 1) + 1).unwrap().as_slice()));
        }
    }

    #[test]
    fn dilate_fragment_bridge(v in signal_strategy(48), c in 1usize..=3, k in 1usize..=4) {
        let xi = sig(v);
        prop_assume!(xi.len().is_multiple_of(k) && xi.len() / k >= c);
        let f = poly(c, 11);
        let bridged = defragment(k, &slide_fragmented(&f, &fragment(k, &Fragmented::from_signal(xi.clone())).unwrap()).unwrap())
            .unwrap()
            .into_signal()
            .unwrap();
        prop_assert_eq!(dilate(&f, k, &xi).unwrap(), bridged);
    }
}

/// Every sliding operator over the sample set {0, 1, 2} with arity c is
/// determined by its values on all c-tuples.
#[test]
fn identity_theorem_exhaustive() {
    fn all_signals(len: usize) -> Vec<Vec<i64>> {
        (0..3usize.pow(len as u32))
            .map(|mut n| {
                (0..len)
                    .map(|_| {
                        let d = (n % 3) as i64;
                        n /= 3;
                        d
                    })
                    .collect()
            })
            .collect()
    }
    for c in 1..=3 {
        let f1 = Kernel::new(c, |w: &[i64]| w.iter().fold(0, |a, &v| a * 3 + v));
        // Same function written differently.
        let f2 = Kernel::new(c, |w: &[i64]| {
            w.iter().rev().enumerate().map(|(p, &v)| v * 3i64.pow(p as u32)).sum()
        });
        for t in all_signals(c) {
            assert_eq!(f1.eval(&t), f2.eval(&t));
        }
        for len in c..=c + 3 {
            for v in all_signals(len) {
                let xi = sig(v);
                assert_eq!(slide(&f1, &xi).unwrap(), slide(&f2, &xi).unwrap());
            }
        }
    }
}

#[test]
fn vectorize_exhaustive_2x2() {
    for n in 0..81usize {
        let vals: Vec<i64> = (0..4).map(|p| ((n / 3usize.pow(p)) % 3) as i64).collect();
        let chi = Fragmented::from_row_major(2, 2, vals).unwrap();
        assert_eq!(unvectorize(&vectorize(&chi), 2, 2).unwrap(), chi);
    }
}

#[test]
fn exchange_exhaustive_small() {
    for len in 1..=7usize {
        let xi = sig((0..len as i64).map(|v| v * v - 3).collect());
        for c in 1..=len {
            let f = poly(c, 2);
            let out = slide(&f, &xi).unwrap();
            for d in c..=len {
                for i in 1..=len - d + 1 {
                    assert_eq!(
                        slide(&f, &subsignal(&xi, d, i).unwrap()).unwrap(),
                        subsignal(&out, d - c + 1, i).unwrap()
                    );
                }
            }
        }
    }
}

fn labelled(rows: usize, cols: usize) -> Fragmented<(usize, usize)> {
    Fragmented::from_fn(rows, cols, |mu, nu| (mu, nu))
}

/// Fragmentation algebra over all matrices up to 12x6 and k in {2, 3, 6}.
#[test]
fn fragmentation_algebra_exhaustive() {
    let ks = [2usize, 3, 6];
    for rows in 1..=12 {
        for cols in 1..=6 {
            let chi = labelled(rows, cols);
            for &k in &ks {
                if rows % k == 0 {
                    let f = fragment(k, &chi).unwrap();
                    assert_eq!(f.shape(), (rows / k, k * cols));
                    assert_eq!(defragment(k, &f).unwrap(), chi);
                }
                if cols % k == 0 {
                    let d = defragment(k, &chi).unwrap();
                    // simplified index law of defragmentation
                    let s = cols / k;
                    for mu in 1..=k * rows {
                        for nu in 1..=s {
                            let expect = chi.at(div(mu - 1, k) + 1, rem(mu - 1, k) * s + nu);
                            assert_eq!(d.at(mu, nu), expect);
                        }
                    }
                    assert_eq!(fragment(k, &d).unwrap(), chi);
                }
                for &k2 in &ks {
                    if rows % (k * k2) == 0 {
                        let twice = fragment(k2, &fragment(k, &chi).unwrap()).unwrap();
                        assert_eq!(twice, fragment(k * k2, &chi).unwrap());
                        assert_eq!(twice, fragment(k, &fragment(k2, &chi).unwrap()).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn fragment_index_law() {
    // Row-major flattening of the input, read k*s entries per output row.
    for (rows, cols, k) in [(12, 1, 2), (12, 2, 3), (6, 3, 6), (8, 4, 4)] {
        let chi = labelled(rows, cols);
        let f = fragment(k, &chi).unwrap();
        for mu in 1..=rows / k {
            for nu in 1..=k * cols {
                let lin = (mu - 1) * k * cols + (nu - 1);
                assert_eq!(*f.at(mu, nu), (lin / cols + 1, lin % cols + 1));
            }
        }
    }
}
