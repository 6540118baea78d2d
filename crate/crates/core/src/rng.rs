//! Seeded substreams and a few sampling primitives.
//!
//! Every stochastic quantity draws from a ChaCha8 stream addressed by
//! `(seed, stream)`, so batches can run on any thread and still reproduce
//! bit-exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// SplitMix64 finalizer; derives child seeds from `(seed, tag)`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform point on `S^{d-1}` (normalized Gaussian vector).
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Haar-random orthogonal matrix (rows), by Gram–Schmidt on Gaussian rows.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<Vec<f64>> {
    loop {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v = gaussian_vector(rng, d);
            for r in &rows {
                let c: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(r) {
                    *x -= c * y;
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                break;
            }
            rows.push(v.into_iter().map(|x| x / n).collect());
        }
        if rows.len() == d {
            return rows;
        }
    }
}

pub fn apply(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}
