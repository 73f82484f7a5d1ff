//! Nonparametric prediction on top of the search structures.

mod kstar;
mod partition;
mod regress;
mod two_layer;

pub use kstar::{kstar_regress, kstar_select, KStarSolution};
pub use partition::{ensemble_kernel_weights, partition_kernel_weights, Ensemble, EnsembleMode, PartitionKernel};
pub use regress::{
    classify, classify_value, fixed_radius_regress, kernel_classify, kernel_regress, knn_classify, knn_regress,
    RegressionEstimate,
};
pub use two_layer::{two_layer_knn, TwoLayerKnn};
