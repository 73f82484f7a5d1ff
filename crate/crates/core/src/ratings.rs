//! Like/dislike rating vectors for the collaborative filtering model.

use crate::error::{Error, Result};

/// Ratings in `{-1, 0, +1}` indexed by item; 0 means unrated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingsVector(Vec<i8>);

impl RatingsVector {
    pub fn unrated(items: usize) -> Self {
        RatingsVector(vec![0; items])
    }

    pub fn from_values(values: Vec<i8>) -> Result<Self> {
        if values.iter().any(|v| !(-1..=1).contains(v)) {
            return Err(crate::error::invalid("ratings", "entries must be -1, 0 or +1"));
        }
        Ok(RatingsVector(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, item: usize) -> i8 {
        self.0[item]
    }

    #[inline]
    pub fn is_rated(&self, item: usize) -> bool {
        self.0[item] != 0
    }

    pub fn set(&mut self, item: usize, rating: i8) {
        debug_assert!(rating == 1 || rating == -1);
        self.0[item] = rating;
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

/// `1 − ⟨y_u, y_v⟩_S / |S|`, from 0 (full agreement) to 2 (full disagreement).
pub fn cosine_dist_ratings(yu: &RatingsVector, yv: &RatingsVector, support: &[usize]) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let inner: i64 = support.iter().map(|&i| (yu.get(i) as i64) * (yv.get(i) as i64)).sum();
    Ok(1.0 - inner as f64 / support.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[i8]) -> RatingsVector {
        RatingsVector::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let a = r(&[1, -1, 1, 1, 0]);
        let s = [0, 1, 2, 3];
        assert_eq!(cosine_dist_ratings(&a, &a, &s).unwrap(), 0.0);
        let neg = r(&[-1, 1, -1, -1, 0]);
        assert_eq!(cosine_dist_ratings(&a, &neg, &s).unwrap(), 2.0);
        let half = r(&[1, -1, -1, -1, 1]);
        assert_eq!(cosine_dist_ratings(&a, &half, &s).unwrap(), 1.0);
    }

    #[test]
    fn empty_support() {
        let a = r(&[1]);
        assert_eq!(cosine_dist_ratings(&a, &a, &[]), Err(Error::EmptySupport));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(RatingsVector::from_values(vec![2]).is_err());
    }
}
