use crate::error::{invalid, Result};
use crate::exact::{brute_force_knn, fixed_radius_search};
use crate::kernel::{KernelSpec, KernelVariant};
use crate::space::{LabeledDataset, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionEstimate {
    pub value: f64,
    /// Training points with nonzero weight.
    pub support_size: usize,
    /// No training point received weight; `value` is then 0.
    pub empty_neighborhood: bool,
}

impl RegressionEstimate {
    pub(crate) fn mean_of(labels: impl Iterator<Item = f64>) -> Self {
        let (mut sum, mut count) = (0.0, 0usize);
        for y in labels {
            sum += y;
            count += 1;
        }
        if count == 0 {
            return Self::empty();
        }
        RegressionEstimate {
            value: sum / count as f64,
            support_size: count,
            empty_neighborhood: false,
        }
    }

    pub(crate) fn empty() -> Self {
        RegressionEstimate {
            value: 0.0,
            support_size: 0,
            empty_neighborhood: true,
        }
    }
}

/// Mean label of the `k` nearest neighbors.
pub fn knn_regress<P: Point>(ds: &LabeledDataset<P>, q: &P, k: usize) -> Result<RegressionEstimate> {
    let labels = ds.require_labels()?;
    let hits = brute_force_knn(ds, q, k)?;
    Ok(RegressionEstimate::mean_of(hits.iter().map(|h| labels[h.index])))
}

/// Mean label of every point within distance `h`; empty when there is none.
pub fn fixed_radius_regress<P: Point>(ds: &LabeledDataset<P>, q: &P, h: f64) -> Result<RegressionEstimate> {
    let labels = ds.require_labels()?;
    let mut ids: Vec<usize> = fixed_radius_search(ds, q, h)?.iter().map(|hit| hit.index).collect();
    ids.sort_unstable();
    Ok(RegressionEstimate::mean_of(ids.into_iter().map(|i| labels[i])))
}

/// Nadaraya–Watson estimate `Σ K(ρ_i/h) Y_i / Σ K(ρ_i/h)`.
///
/// Gaussian weights are rescaled by the largest one before summing. The
/// ratio is unchanged, but it stays defined for bandwidths so small that
/// every raw weight underflows.
pub fn kernel_regress<P: Point>(ds: &LabeledDataset<P>, q: &P, spec: &KernelSpec) -> Result<RegressionEstimate> {
    let labels = ds.require_labels()?;
    if ds.is_empty() {
        return Ok(RegressionEstimate::empty());
    }
    ds.check_query(q)?;
    let h = spec.bandwidth();
    // The naive kernel compares raw distances so that it selects exactly the
    // points `fixed_radius_regress` selects.
    let keep = |dist: f64| match spec.variant() {
        KernelVariant::Naive => dist <= h,
        KernelVariant::Gaussian => true,
        KernelVariant::TruncatedGaussian { tau } => dist / h <= tau,
    };
    let scaled: Vec<(f64, f64)> = ds
        .points()
        .iter()
        .zip(labels)
        .map(|(p, &y)| (p.dist(q), y))
        .filter(|&(dist, _)| keep(dist))
        .map(|(dist, y)| (dist / h, y))
        .collect();
    if scaled.is_empty() {
        return Ok(RegressionEstimate::empty());
    }
    let s_min = scaled.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let (mut num, mut den) = (0.0, 0.0);
    for &(s, y) in &scaled {
        let w = match spec.variant() {
            KernelVariant::Naive => 1.0,
            KernelVariant::Gaussian | KernelVariant::TruncatedGaussian { .. } => {
                (-0.5 * (s - s_min) * (s + s_min)).exp()
            }
        };
        num += w * y;
        den += w;
    }
    Ok(RegressionEstimate {
        value: num / den,
        support_size: scaled.len(),
        empty_neighborhood: false,
    })
}

/// Plug-in decision: 1 iff `η̂ ≥ 1/2`, ties going to 1.
pub fn classify_value(eta: f64) -> u8 {
    (eta >= 0.5) as u8
}

/// Plug-in decision that also answers 0 when no point carried weight.
pub fn classify(estimate: &RegressionEstimate) -> u8 {
    if estimate.empty_neighborhood {
        return 0;
    }
    classify_value(estimate.value)
}

pub fn knn_classify<P: Point>(ds: &LabeledDataset<P>, q: &P, k: usize) -> Result<u8> {
    knn_regress(ds, q, k).map(|e| classify(&e))
}

/// Weighted majority vote: label 1 wins when its kernel-weighted votes are
/// at least those of label 0.
pub fn kernel_classify<P: Point>(ds: &LabeledDataset<P>, q: &P, spec: &KernelSpec) -> Result<u8> {
    kernel_regress(ds, q, spec).map(|e| classify(&e))
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(name, "must be positive and finite"));
    }
    Ok(())
}
