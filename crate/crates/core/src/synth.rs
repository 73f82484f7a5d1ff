//! Synthetic point sets shared by benchmarks, the CLI and tests.

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::seed::Rng;
use crate::space::{BitVector, Point, RealVector};

/// `n` points uniform on `[0,1]^d`.
pub fn uniform_points(n: usize, d: usize, rng: &mut Rng) -> Result<Vec<RealVector>> {
    (0..n).map(|_| RealVector::new((0..d).map(|_| rng.random()).collect())).collect()
}

/// Uniform latent coordinates on `[0,1]^intrinsic` mapped linearly into
/// `ambient` dimensions by a fixed Gaussian matrix.
pub fn manifold_points(n: usize, intrinsic: usize, ambient: usize, rng: &mut Rng) -> Result<Vec<RealVector>> {
    if intrinsic == 0 || ambient < intrinsic {
        return Err(invalid("intrinsic", "need 1 <= intrinsic <= ambient"));
    }
    let basis: Vec<f64> = (0..ambient * intrinsic).map(|_| StandardNormal.sample(rng)).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..intrinsic).map(|_| rng.random()).collect();
            let x = (0..ambient)
                .map(|j| (0..intrinsic).map(|k| basis[j * intrinsic + k] * z[k]).sum())
                .collect();
            RealVector::new(x)
        })
        .collect()
}

/// Equal mixture of unit-variance Gaussians centered at `±separation/2`
/// along the first axis, labeled 0 and 1.
pub fn two_gaussians(n: usize, d: usize, separation: f64, rng: &mut Rng) -> Result<(Vec<RealVector>, Vec<f64>)> {
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.random_bool(0.5);
        let shift = if label { separation / 2.0 } else { -separation / 2.0 };
        let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        x[0] += shift;
        points.push(RealVector::new(x)?);
        labels.push(label as u8 as f64);
    }
    Ok((points, labels))
}

pub fn random_bits(n: usize, d: usize, rng: &mut Rng) -> Result<Vec<BitVector>> {
    (0..n).map(|_| BitVector::random(d, rng)).collect()
}

/// Copy of `x` with exactly `count` distinct coordinates flipped.
pub fn flip_bits(x: &BitVector, count: usize, rng: &mut Rng) -> BitVector {
    let mut y = x.clone();
    for i in sample(rng, x.dim(), count.min(x.dim())) {
        y.flip(i);
    }
    y
}

/// A query with one point at Hamming distance `near` and `n − 1` points at
/// distance at least `far`; returns `(points, query, planted index)`.
pub fn planted_hamming(d: usize, n: usize, near: usize, far: usize, rng: &mut Rng) -> Result<(Vec<BitVector>, BitVector, usize)> {
    if n == 0 || near > d || far > d || near >= far {
        return Err(invalid("near/far", "need near < far <= d and n >= 1"));
    }
    let q = BitVector::random(d, rng)?;
    let mut complement = q.clone();
    for i in 0..d {
        complement.flip(i);
    }
    let planted = rng.random_range(0..n);
    let points = (0..n)
        .map(|i| {
            if i == planted {
                flip_bits(&q, near, rng)
            } else {
                let back = rng.random_range(0..=d - far);
                flip_bits(&complement, back, rng)
            }
        })
        .collect();
    Ok((points, q, planted))
}
