//! Nearest neighbor search structures, nonparametric predictors built on
//! them, and two latent-source simulators for time series classification and
//! online collaborative filtering.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod exact;
pub mod kernel;
pub mod lsh;
pub mod par;
pub mod predict;
pub mod ratings;
pub mod recsim;
pub mod rptree;
pub mod seed;
pub mod series;
pub mod space;
pub mod stats;
pub mod synth;
pub mod tslatent;

pub use error::{Error, Result};
pub use kernel::{kernel_eval, KernelSpec, KernelVariant};
pub use ratings::{cosine_dist_ratings, RatingsVector};
pub use series::{shift_min_distance, TimeSeries};
pub use space::{euclidean, hamming, BitVector, LabeledDataset, NeighborHit, Point, RealVector};
