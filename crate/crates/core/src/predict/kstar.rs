use crate::error::{invalid, Error, Result};
use crate::exact::brute_force_knn;
use crate::space::{LabeledDataset, Point};

use super::regress::{check_positive, RegressionEstimate};

/// Adaptive weights over the sorted neighbors of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct KStarSolution {
    pub k_star: usize,
    /// One weight per input distance; positive exactly for the first `k_star`.
    pub weights: Vec<f64>,
    pub lambda: f64,
}

/// Minimizes `‖α‖₂ + αᵀβ` over the probability simplex, with
/// `β_i = beta[i]^exponent`.
///
/// The optimum puts weight `∝ λ − β_i` on a prefix of the neighbors, where
/// `λ` solves `Σ_{i≤k}(λ − β_i)² = 1`. Growing `k` while `λ_k > β_{k+1}`
/// finds the prefix in one pass.
pub fn kstar_select(beta: &[f64], exponent: f64) -> Result<KStarSolution> {
    if beta.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_positive("exponent", exponent)?;
    if beta.iter().any(|b| !(*b >= 0.0 && b.is_finite())) {
        return Err(invalid("beta", "distances must be finite and nonnegative"));
    }
    if beta.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("beta", "distances must be sorted ascending"));
    }
    let b: Vec<f64> = if exponent == 1.0 {
        beta.to_vec()
    } else {
        beta.iter().map(|x| x.powf(exponent)).collect()
    };
    let n = b.len();
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut k = 0;
    let mut lambda = 0.0;
    while k < n {
        s1 += b[k];
        s2 += b[k] * b[k];
        k += 1;
        let kf = k as f64;
        let disc = (s1 * s1 - kf * (s2 - 1.0)).max(0.0);
        lambda = (s1 + disc.sqrt()) / kf;
        if k == n || lambda <= b[k] {
            break;
        }
    }
    let total: f64 = b[..k].iter().map(|x| lambda - x).sum();
    let mut weights = vec![0.0; n];
    for (w, x) in weights.iter_mut().zip(&b[..k]) {
        *w = (lambda - x) / total;
    }
    Ok(KStarSolution {
        k_star: k,
        weights,
        lambda,
    })
}

/// `Σ α_i Y_(i)` with `β_i = (scale · ρ_i)^exponent` over all neighbors of `q`.
pub fn kstar_regress<P: Point>(
    ds: &LabeledDataset<P>,
    q: &P,
    scale: f64,
    exponent: f64,
) -> Result<(RegressionEstimate, KStarSolution)> {
    check_positive("scale", scale)?;
    let labels = ds.require_labels()?;
    let hits = brute_force_knn(ds, q, ds.len())?;
    let beta: Vec<f64> = hits.iter().map(|h| scale * h.distance).collect();
    let sol = kstar_select(&beta, exponent)?;
    let value = hits
        .iter()
        .zip(&sol.weights)
        .map(|(h, w)| w * labels[h.index])
        .sum();
    let est = RegressionEstimate {
        value,
        support_size: sol.k_star,
        empty_neighborhood: false,
    };
    Ok((est, sol))
}
