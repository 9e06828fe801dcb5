//! Reproducible random chains and signals for verification suites.
//!
//! A [`ChainSpec`] fixes the layer shapes and kernel parameters; it can be
//! instantiated over integers, floats or hash values. The hash instantiation
//! makes each kernel output depend on every input sample and its position,
//! so any misplaced sample changes the result.

use std::fmt;

use crate::chain::{receptive_field, Layer, ProcessingChain};
use crate::rng::Rng;
use crate::signal::{Kernel, Signal};

/// Size limits for generated chains and signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_l: usize,
    pub max_c: usize,
    pub max_k: usize,
    pub max_d: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_l: 3,
            max_c: 3,
            max_k: 3,
            max_d: 64,
        }
    }
}

/// Pooling operation of a generated layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Min,
    /// Sum for integers, mean for floats.
    Sum,
}

/// Parameters of one generated layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSpec {
    pub c: usize,
    pub k: usize,
    /// One weight per tap of `f`.
    pub weights: Vec<i64>,
    pub bias: i64,
    pub pool: PoolKind,
    /// Salt of the hash instantiation; its low bit selects the float
    /// nonlinearity.
    pub tag: u64,
}

/// A generated chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainSpec {
    pub layers: Vec<LayerSpec>,
}

impl fmt::Display for ChainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .layers
            .iter()
            .map(|l| {
                format!(
                    "(c={} k={} w={:?} b={} pool={:?} tag={:#x})",
                    l.c, l.k, l.weights, l.bias, l.pool, l.tag
                )
            })
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a window.
pub fn tree_hash(salt: u64, window: &[u64]) -> u64 {
    window.iter().fold(mix(salt), |acc, &v| {
        mix(acc.rotate_left(17) ^ v).wrapping_add(0x9E3779B97F4A7C15)
    })
}

impl ChainSpec {
    /// Draws a chain with `1..=max_l` layers, `c` in `1..=max_c` and `k` in
    /// `1..=max_k`.
    pub fn random(rng: &mut Rng, caps: &Caps) -> Self {
        let depth = rng.range(1, caps.max_l.max(1));
        let layers = (0..depth)
            .map(|_| {
                let c = rng.range(1, caps.max_c.max(1));
                let k = rng.range(1, caps.max_k.max(1));
                LayerSpec {
                    c,
                    k,
                    weights: (0..c).map(|_| rng.range_i64(-3, 3)).collect(),
                    bias: rng.range_i64(-2, 2),
                    pool: *rng.pick(&[PoolKind::Max, PoolKind::Min, PoolKind::Sum]),
                    tag: rng.next_u64(),
                }
            })
            .collect();
        ChainSpec { layers }
    }

    pub fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.c, l.k)).collect()
    }

    pub fn receptive_field(&self) -> usize {
        receptive_field(&self.shape())
    }

    pub fn stride_product(&self) -> usize {
        self.layers.iter().map(|l| l.k).product()
    }

    fn build<T: Clone + 'static>(
        &self,
        dummy: T,
        f: impl Fn(&LayerSpec) -> Kernel<T>,
        g: impl Fn(&LayerSpec) -> Kernel<T>,
    ) -> ProcessingChain<T> {
        let layers = self.layers.iter().map(|l| Layer::new(f(l), g(l))).collect();
        ProcessingChain::new(layers, dummy).expect("generated chains are well formed")
    }

    /// Integer instantiation with wrapping arithmetic.
    pub fn build_i64(&self, dummy: i64) -> ProcessingChain<i64> {
        self.build(
            dummy,
            |l| {
                let (w, b) = (l.weights.clone(), l.bias);
                Kernel::new(l.c, move |x: &[i64]| {
                    x.iter()
                        .zip(&w)
                        .fold(b, |acc, (&v, &wi)| acc.wrapping_add(v.wrapping_mul(wi)))
                })
            },
            |l| match l.pool {
                PoolKind::Max => Kernel::new(l.k, |x: &[i64]| *x.iter().max().expect("non-empty")),
                PoolKind::Min => Kernel::new(l.k, |x: &[i64]| *x.iter().min().expect("non-empty")),
                PoolKind::Sum => Kernel::new(l.k, |x: &[i64]| x.iter().fold(0i64, |a, &v| a.wrapping_add(v))),
            },
        )
    }

    /// Float instantiation: weights are quarters, biases eighths, followed
    /// by `tanh` or a rectifier.
    pub fn build_f64(&self, dummy: f64) -> ProcessingChain<f64> {
        self.build(
            dummy,
            |l| {
                let w: Vec<f64> = l.weights.iter().map(|&v| v as f64 / 4.0).collect();
                let b = l.bias as f64 / 8.0;
                let smooth = l.tag & 1 == 1;
                Kernel::new(l.c, move |x: &[f64]| {
                    let s = x.iter().zip(&w).fold(b, |acc, (v, wi)| acc + v * wi);
                    if smooth {
                        s.tanh()
                    } else {
                        s.max(0.0)
                    }
                })
            },
            |l| {
                let k = l.k;
                match l.pool {
                    PoolKind::Max => Kernel::new(k, |x: &[f64]| x.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    PoolKind::Min => Kernel::new(k, |x: &[f64]| x.iter().copied().fold(f64::INFINITY, f64::min)),
                    PoolKind::Sum => Kernel::new(k, move |x: &[f64]| x.iter().sum::<f64>() / k as f64),
                }
            },
        )
    }

    /// Hash instantiation: every kernel output is an order-sensitive hash of
    /// its window, salted per layer and role.
    pub fn build_hash(&self, dummy: u64) -> ProcessingChain<u64> {
        self.build(
            dummy,
            |l| {
                let salt = l.tag;
                Kernel::new(l.c, move |x: &[u64]| tree_hash(salt, x))
            },
            |l| {
                let salt = !l.tag;
                Kernel::new(l.k, move |x: &[u64]| tree_hash(salt, x))
            },
        )
    }
}

/// Integer signal with samples in `-9..=9`.
pub fn signal_i64(rng: &mut Rng, d: usize) -> Signal<i64> {
    Signal::new((0..d).map(|_| rng.range_i64(-9, 9)).collect()).expect("d >= 1")
}

/// Float signal with samples that are multiples of 1/8 in `[-2, 2]`, plus a
/// small irrational-looking offset so that rounding is exercised.
pub fn signal_f64(rng: &mut Rng, d: usize) -> Signal<f64> {
    Signal::new(
        (0..d)
            .map(|_| rng.range_i64(-16, 16) as f64 / 8.0 + rng.below(1000) as f64 * 1e-4 / 3.0)
            .collect(),
    )
    .expect("d >= 1")
}

/// Hash-domain signal of arbitrary 64-bit words.
pub fn signal_u64(rng: &mut Rng, d: usize) -> Signal<u64> {
    Signal::new((0..d).map(|_| rng.next_u64()).collect()).expect("d >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_reproducible() {
        let caps = Caps::default();
        let a: Vec<_> = {
            let mut r = Rng::new(5);
            (0..20).map(|_| ChainSpec::random(&mut r, &caps)).collect()
        };
        let mut r = Rng::new(5);
        let b: Vec<_> = (0..20).map(|_| ChainSpec::random(&mut r, &caps)).collect();
        assert_eq!(a, b);
        for spec in &a {
            assert!(spec.layers.len() <= 3);
            assert!(spec
                .layers
                .iter()
                .all(|l| (1..=3).contains(&l.c) && (1..=3).contains(&l.k)));
            assert_eq!(spec.build_i64(0).receptive_field(), spec.receptive_field());
        }
    }

    #[test]
    fn hash_is_order_sensitive() {
        assert_ne!(tree_hash(1, &[1, 2]), tree_hash(1, &[2, 1]));
        assert_ne!(tree_hash(1, &[1, 2]), tree_hash(2, &[1, 2]));
        assert_ne!(tree_hash(1, &[0]), tree_hash(1, &[0, 0]));
    }
}
