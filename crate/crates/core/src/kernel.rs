//! Smoothing kernels on normalized distance `s = ρ/h`.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelVariant {
    /// `1{s ≤ 1}`; kernel regression with it is fixed-radius regression.
    Naive,
    Gaussian,
    /// Gaussian cut to zero beyond `tau`.
    TruncatedGaussian { tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    variant: KernelVariant,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(variant: KernelVariant, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid("bandwidth", "must be positive and finite"));
        }
        if let KernelVariant::TruncatedGaussian { tau } = variant {
            if !(tau > 0.0) {
                return Err(invalid("tau", "must be positive"));
            }
        }
        Ok(KernelSpec { variant, bandwidth })
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Weight of a point at raw distance `distance`.
    #[inline]
    pub fn weight(&self, distance: f64) -> f64 {
        kernel_eval(self, distance / self.bandwidth)
    }

    /// Normalized distance beyond which every weight is zero, if any.
    pub fn support_radius(&self) -> Option<f64> {
        match self.variant {
            KernelVariant::Naive => Some(1.0),
            KernelVariant::Gaussian => None,
            KernelVariant::TruncatedGaussian { tau } => Some(tau),
        }
    }
}

#[inline]
pub fn kernel_eval(spec: &KernelSpec, s: f64) -> f64 {
    match spec.variant {
        KernelVariant::Naive => {
            if s <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
        KernelVariant::Gaussian => (-0.5 * s * s).exp(),
        KernelVariant::TruncatedGaussian { tau } => {
            if s <= tau {
                (-0.5 * s * s).exp()
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(v: KernelVariant) -> KernelSpec {
        KernelSpec::new(v, 1.0).unwrap()
    }

    #[test]
    fn examples() {
        let naive = spec(KernelVariant::Naive);
        assert_eq!(kernel_eval(&naive, 0.5), 1.0);
        assert_eq!(kernel_eval(&naive, 1.5), 0.0);
        assert_eq!(kernel_eval(&spec(KernelVariant::Gaussian), 0.0), 1.0);
        let trunc = spec(KernelVariant::TruncatedGaussian { tau: 3.0 });
        assert_eq!(kernel_eval(&trunc, 4.0), 0.0);
        assert_eq!(kernel_eval(&trunc, 2.0), (-2.0f64).exp());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(KernelSpec::new(KernelVariant::Naive, 0.0).is_err());
        assert!(KernelSpec::new(KernelVariant::Gaussian, f64::NAN).is_err());
        assert!(KernelSpec::new(KernelVariant::TruncatedGaussian { tau: 0.0 }, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn nonincreasing_and_bounded(a in 0.0f64..20.0, b in 0.0f64..20.0, tau in 0.1f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for v in [KernelVariant::Naive, KernelVariant::Gaussian, KernelVariant::TruncatedGaussian { tau }] {
                let k = spec(v);
                let (klo, khi) = (kernel_eval(&k, lo), kernel_eval(&k, hi));
                prop_assert!(khi <= klo);
                prop_assert!((0.0..=1.0).contains(&klo) && (0.0..=1.0).contains(&khi));
            }
        }
    }
}
