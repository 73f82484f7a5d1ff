//! Discrete-time series with an explicit time origin, and the
//! shift-minimized distance between them.

use crate::error::{invalid, Error, Result};

/// Values observed on the contiguous steps `origin .. origin + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    origin: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(origin: i64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "time series values must be finite"));
        }
        Ok(TimeSeries { origin, values })
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// One past the last observed step.
    pub fn end(&self) -> i64 {
        self.origin + self.values.len() as i64
    }

    pub fn get(&self, t: i64) -> Option<f64> {
        if t < self.origin {
            return None;
        }
        self.values.get((t - self.origin) as usize).copied()
    }

    /// Values on steps `from ..= to`, or the first unobservable step.
    pub fn window(&self, from: i64, to: i64) -> Result<&[f64]> {
        if from < self.origin {
            return Err(Error::Unobservable { step: from });
        }
        if to >= self.end() {
            return Err(Error::Unobservable { step: to });
        }
        if to < from {
            return Ok(&[]);
        }
        let a = (from - self.origin) as usize;
        let b = (to - self.origin) as usize;
        Ok(&self.values[a..=b])
    }

    /// The series whose value at step `t` is this series' value at `t + by`.
    pub fn advanced(&self, by: i64) -> TimeSeries {
        TimeSeries {
            origin: self.origin - by,
            values: self.values.clone(),
        }
    }
}

/// `min_{|Δ| ≤ Δmax} ‖x(1..T) − x′(1+Δ..T+Δ)‖₂`.
pub fn shift_min_distance(x: &TimeSeries, other: &TimeSeries, t: usize, max_shift: usize) -> Result<f64> {
    Ok(shift_min_distances(x, other, &[t], max_shift)?[0])
}

/// [`shift_min_distance`] for several horizons at once, sharing the
/// per-shift running sums. `horizons` is any list of positive lengths;
/// results are returned in the same order.
pub fn shift_min_distances(
    x: &TimeSeries,
    other: &TimeSeries,
    horizons: &[usize],
    max_shift: usize,
) -> Result<Vec<f64>> {
    let t_max = match horizons.iter().copied().max() {
        Some(t) if horizons.iter().all(|&h| h > 0) => t,
        _ => return Err(invalid("horizon", "horizons must be positive and nonempty")),
    };
    let dm = max_shift as i64;
    let xs = x.window(1, t_max as i64)?;
    let ys = other.window(1 - dm, t_max as i64 + dm)?;

    let mut best = vec![f64::INFINITY; horizons.len()];
    let mut order: Vec<usize> = (0..horizons.len()).collect();
    order.sort_by_key(|&i| horizons[i]);
    for shift in 0..=2 * max_shift {
        let ys = &ys[shift..shift + t_max];
        let mut acc = 0.0;
        let mut next = 0;
        for (step, (a, b)) in xs.iter().zip(ys).enumerate() {
            let d = a - b;
            acc += d * d;
            while next < order.len() && horizons[order[next]] == step + 1 {
                let slot = &mut best[order[next]];
                if acc < *slot {
                    *slot = acc;
                }
                next += 1;
            }
        }
    }
    Ok(best.into_iter().map(f64::sqrt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use rand::Rng as _;

    fn random_series(rng: &mut crate::seed::Rng, origin: i64, len: usize) -> TimeSeries {
        TimeSeries::new(origin, (0..len).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
    }

    fn brute(x: &TimeSeries, y: &TimeSeries, t: i64, dm: i64) -> f64 {
        let mut best = f64::INFINITY;
        for shift in -dm..=dm {
            let mut s = 0.0;
            for step in 1..=t {
                let d = x.get(step).unwrap() - y.get(step + shift).unwrap();
                s += d * d;
            }
            best = best.min(s.sqrt());
        }
        best
    }

    #[test]
    fn zero_shift_is_plain_euclidean() {
        let x = TimeSeries::new(1, vec![1.0, 2.0, 3.0, 9.0]).unwrap();
        let y = TimeSeries::new(1, vec![1.0, 0.0, 3.0, -9.0]).unwrap();
        assert_eq!(shift_min_distance(&x, &y, 3, 0).unwrap(), 2.0);
    }

    #[test]
    fn exact_alignment_gives_zero() {
        let mut rng = rng_from(3);
        let base = random_series(&mut rng, -10, 40);
        for shift in -3..=3 {
            let other = base.advanced(-shift);
            assert_eq!(shift_min_distance(&base, &other, 20, 3).unwrap(), 0.0);
        }
    }

    #[test]
    fn matches_brute_force_over_seven_shifts() {
        let mut rng = rng_from(9);
        for _ in 0..50 {
            let x = random_series(&mut rng, 1, 25);
            let y = random_series(&mut rng, -2, 31);
            let got = shift_min_distance(&x, &y, 25, 3).unwrap();
            assert!((got - brute(&x, &y, 25, 3)).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_horizon_agrees_with_single() {
        let mut rng = rng_from(21);
        let x = random_series(&mut rng, 1, 60);
        let y = random_series(&mut rng, -4, 70);
        let hs = [60, 1, 17, 17, 33];
        let all = shift_min_distances(&x, &y, &hs, 4).unwrap();
        for (h, d) in hs.iter().zip(all) {
            assert_eq!(d, shift_min_distance(&x, &y, *h, 4).unwrap());
        }
    }

    #[test]
    fn unobservable_range_is_an_error() {
        let x = TimeSeries::new(1, vec![0.0; 10]).unwrap();
        let y = TimeSeries::new(0, vec![0.0; 12]).unwrap();
        assert!(shift_min_distance(&x, &y, 10, 1).is_ok());
        assert!(matches!(shift_min_distance(&x, &y, 10, 2), Err(Error::Unobservable { .. })));
        assert!(shift_min_distance(&x, &y, 11, 0).is_err());
    }

    #[test]
    fn monotone_in_shift_and_horizon() {
        let mut rng = rng_from(77);
        for _ in 0..100 {
            let x = random_series(&mut rng, -6, 40);
            let y = random_series(&mut rng, -6, 40);
            let mut prev = f64::INFINITY;
            for dm in 0..=5 {
                let d = shift_min_distance(&x, &y, 20, dm).unwrap();
                assert!(d <= prev);
                prev = d;
            }
            let mut prev = 0.0;
            for t in 1..=25 {
                let d = shift_min_distance(&x, &y, t, 5).unwrap();
                assert!(d >= prev);
                prev = d;
            }
        }
    }

    #[test]
    fn not_symmetric() {
        // x(1) = 5 reappears in y one step later; y(1) = 2 has no match in x.
        let x = TimeSeries::new(0, vec![1.0, 5.0, 1.0]).unwrap();
        let y = TimeSeries::new(0, vec![9.0, 2.0, 5.0]).unwrap();
        let xy = shift_min_distance(&x, &y, 1, 1).unwrap();
        let yx = shift_min_distance(&y, &x, 1, 1).unwrap();
        assert_eq!(xy, 0.0);
        assert_eq!(yx, 1.0);
    }
}
