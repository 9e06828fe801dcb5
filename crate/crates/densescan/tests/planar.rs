use densescan::corpus::tree_hash;
use densescan::planar2d::{defragment2d, fragment2d, patch, slide2d, Chain2D, FragmentedImage, Image, Kernel2, Layer2};
use densescan::rng::Rng;

fn random_image(rng: &mut Rng, rows: usize, cols: usize) -> Image<i64> {
    Image::from_fn(rows, cols, |_, _| rng.range_i64(-9, 9))
}

fn random_chain(rng: &mut Rng) -> Chain2D<i64> {
    let depth = rng.range(1, 2);
    let layers = (0..depth)
        .map(|_| {
            let (cr, cc, kr, kc) = (rng.range(1, 2), rng.range(1, 2), rng.range(1, 2), rng.range(1, 2));
            let weights: Vec<i64> = (0..cr * cc).map(|_| rng.range_i64(-3, 3)).collect();
            let bias = rng.range_i64(-2, 2);
            let f = Kernel2::new(cr, cc, move |w: &[i64]| {
                w.iter()
                    .zip(&weights)
                    .fold(bias, |a, (&v, &x)| a.wrapping_add(v.wrapping_mul(x)))
            });
            let g = if rng.below(2) == 0 {
                Kernel2::new(kr, kc, |w: &[i64]| *w.iter().max().unwrap())
            } else {
                // order-sensitive pooling
                Kernel2::new(kr, kc, |w: &[i64]| {
                    tree_hash(9, &w.iter().map(|&v| v as u64).collect::<Vec<_>>()) as i64 >> 40
                })
            };
            Layer2 { f, g }
        })
        .collect();
    Chain2D::new(layers, rng.range_i64(-5, 5)).unwrap()
}

#[test]
fn exact_scan_matches_patch_oracle() {
    let mut rng = Rng::new(21);
    let mut stuffed = 0;
    for _ in 0..120 {
        let chain = random_chain(&mut rng);
        let (br, bc) = chain.receptive_field();
        let (kr, kc) = chain.stride_product();
        let rows = rng.range(br, 12);
        let cols = rng.range(bc, 12);
        let xi = random_image(&mut rng, rows, cols);
        let (sr, sc) = chain.stuffing2d(rows, cols).unwrap();
        assert!(sr < kr && sc < kc);
        stuffed += usize::from(sr + sc > 0);
        let fast = chain.exact_scan2d(&xi).unwrap();
        assert_eq!(fast.shape(), (rows - br + 1, cols - bc + 1));
        assert_eq!(fast, chain.scan2d_reference(&xi).unwrap());
        assert_eq!(chain.with_dummy(1234).exact_scan2d(&xi).unwrap(), fast);
    }
    assert!(stuffed > 10);
}

#[test]
fn patch_exchange_exhaustive() {
    let mut rng = Rng::new(22);
    for (cr, cc) in [(1, 1), (2, 1), (1, 3), (2, 2), (3, 2)] {
        let f = Kernel2::new(cr, cc, |w: &[i64]| {
            w.iter().fold(0i64, |a, &v| a.wrapping_mul(17).wrapping_add(v))
        });
        let xi = random_image(&mut rng, 10, 10);
        let full = slide2d(&f, &xi).unwrap();
        for dr in cr..=10 {
            for dc in cc..=10 {
                for i in 1..=10 - dr + 1 {
                    for j in 1..=10 - dc + 1 {
                        let lhs = slide2d(&f, &patch(&xi, dr, dc, i, j).unwrap()).unwrap();
                        let rhs = patch(&full, dr - cr + 1, dc - cc + 1, i, j).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }
}

#[test]
fn fragmentation_roundtrip_and_axis_laws() {
    for rows in 1..=12 {
        for cols in 1..=12 {
            let xi = Image::from_fn(rows, cols, |i, j| (i, j));
            let chi = FragmentedImage::from_image(&xi);
            for (kr, kc) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 2), (2, 3), (3, 3)] {
                if rows % kr != 0 || cols % kc != 0 {
                    assert!(fragment2d(kr, kc, &chi).is_err());
                    continue;
                }
                let f = fragment2d(kr, kc, &chi).unwrap();
                assert_eq!(f.fragment_count(), kr * kc);
                // Fragment (a, b) holds the pixels congruent to (a, b) modulo (k_r, k_c).
                for n in 1..=kr * kc {
                    let (a, b) = ((n - 1) / kc + 1, (n - 1) % kc + 1);
                    let frag = f.fragment(n);
                    for p in 1..=rows / kr {
                        for q in 1..=cols / kc {
                            assert_eq!(*frag.at(p, q), ((p - 1) * kr + a, (q - 1) * kc + b));
                        }
                    }
                }
                assert_eq!(defragment2d(kr, kc, &f).unwrap(), chi);
            }
        }
    }
}

#[test]
fn sum_max_on_seven_by_seven() {
    let chain = Chain2D::new(
        vec![Layer2 {
            f: Kernel2::new(2, 2, |w: &[i64]| w.iter().sum()),
            g: Kernel2::new(2, 2, |w: &[i64]| *w.iter().max().unwrap()),
        }],
        0,
    )
    .unwrap();
    let mut rng = Rng::new(23);
    let xi = random_image(&mut rng, 7, 7);
    let out = chain.exact_scan2d(&xi).unwrap();
    for i in 1..=5 {
        for j in 1..=5 {
            let mut best = i64::MIN;
            for a in 0..2 {
                for b in 0..2 {
                    let s = xi.at(i + a, j + b)
                        + xi.at(i + a + 1, j + b)
                        + xi.at(i + a, j + b + 1)
                        + xi.at(i + a + 1, j + b + 1);
                    best = best.max(s);
                }
            }
            assert_eq!(*out.at(i, j), best);
        }
    }
}
