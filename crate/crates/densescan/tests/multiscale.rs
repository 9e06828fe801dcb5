use densescan::corpus::{signal_u64, tree_hash};
use densescan::multiscale::{
    binomial3, ms_boundary, ms_downscale, ms_index, ms_scan, ms_scan_reference, ms_scan_trim, ms_subsignal,
    padded_subsignal, MultiScaleConfig,
};
use densescan::resample::Boundary;
use densescan::rng::Rng;
use densescan::signal::div;
use densescan::{subsignal, Kernel, Signal};

fn configs(rng: &mut Rng, count: usize) -> Vec<(MultiScaleConfig<u64>, Signal<u64>)> {
    (0..count)
        .map(|t| {
            let b = rng.range(1, 6);
            let k = rng.range(2, 3);
            let h = rng.range(k, k + 2);
            let salt = rng.next_u64();
            let lowpass = Kernel::new(h, move |w: &[u64]| tree_hash(salt, w));
            let theta = if t % 2 == 0 {
                Boundary::Dirichlet(0)
            } else {
                Boundary::Neumann
            };
            let d = rng.range(b, 40);
            (MultiScaleConfig::new(k, lowpass, theta, b).unwrap(), signal_u64(rng, d))
        })
        .collect()
}

#[test]
fn window_properties_randomized() {
    let mut rng = Rng::new(11);
    for (cfg, xi) in configs(&mut rng, 150) {
        let (b, k, d) = (cfg.window(), cfg.step(), xi.len());
        let (rt, r) = cfg.boundary_sizes();
        assert_eq!(rt, (k - 1) * b + cfg.lowpass_size() - k);
        assert_eq!(r, rt.div_ceil(2));
        let pi = ms_downscale(&cfg, &xi).unwrap();
        // length of the downscaled signal
        assert_eq!(pi.len(), (d - b + 1 + rt % 2).div_ceil(k) + b - 1);
        for i in 1..=d - b + 1 {
            // centering
            let padded = padded_subsignal(&xi, b, r, cfg.boundary(), i).unwrap();
            let plain = subsignal(&xi, b, i).unwrap();
            for mu in 1..=b {
                assert_eq!(padded.at(mu + r), plain.at(mu));
            }
            // index transformation bounds
            let j = ms_index(k, i);
            assert!(j <= i && i - j < k && j >= 1);
            // the multi-scale subsignal is a window of pi
            let rho = ms_subsignal(&cfg, &xi, j).unwrap();
            assert_eq!(rho.len(), b);
            assert_eq!(subsignal(&pi, b, div(i - 1, k) + 1).unwrap(), rho);
        }
    }
}

#[test]
fn scan_fast_path_randomized() {
    let mut rng = Rng::new(12);
    for (cfg, xi) in configs(&mut rng, 150) {
        let b = cfg.window();
        let (s1, s2) = (rng.next_u64(), rng.next_u64());
        let g_orig = Kernel::new(b, move |w: &[u64]| tree_hash(s1, w));
        let g_down = Kernel::new(b, move |w: &[u64]| tree_hash(s2, w));
        let pair = |p: &u64, q: &u64| (*p, *q);
        let fast = ms_scan(&cfg, &xi, &g_orig, &g_down, pair).unwrap();
        let slow = ms_scan_reference(&cfg, &xi, &g_orig, &g_down, pair).unwrap();
        assert_eq!(fast.len(), xi.len() - b + 1);
        assert_eq!(fast, slow);
        let r = ms_scan_trim(&cfg, xi.len()).unwrap();
        assert!(r <= cfg.step());
    }
}

#[test]
fn reference_configuration() {
    assert_eq!(ms_boundary(5, 2, 3).unwrap(), (6, 3));
    let cfg = MultiScaleConfig::new(2, binomial3(), Boundary::Dirichlet(0.0), 5).unwrap();
    let xi = Signal::new((1..=9).map(|v| v as f64).collect()).unwrap();
    assert_eq!(ms_downscale(&cfg, &xi).unwrap().len(), 7);
    let padded = padded_subsignal(&xi, 5, 3, cfg.boundary(), 5).unwrap();
    assert_eq!(
        padded.as_slice(),
        &[2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 0.0, 0.0, 0.0]
    );
    assert_eq!(ms_index(2, 5), 5);
    assert_eq!(ms_index(2, 4), 3);
}
