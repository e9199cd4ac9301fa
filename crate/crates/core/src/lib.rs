//! Generation, application and analysis of patch masks for masked image
//! modeling.
//!
//! Count-derived quantities (occlusion probabilities, metrics, class
//! weights, mixing coefficients) are generic over [`Scalar`]; the aliases at
//! the bottom of this file name the `f64` and exact-rational instantiations.

pub mod augment;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod netpbm;
pub mod occlusion;
pub mod patterns;
pub mod propagation;
pub mod rng;
pub mod scalar;

pub use error::{MaskError, Result};
pub use grid::{
    apply_mask, complement, masked_ratio, partition, random_masked_count, target_kept_count, target_masked_count,
    GrayImage, MaskMap, PatchGrid,
};
pub use patterns::{
    gen_blockwise, gen_mesh, gen_random, gen_square, mesh_candidates, BlockParams, CandidateSet, MeshOptions,
    ParityClass, PatternSpec, Provenance,
};
pub use rng::RngSeed;
pub use scalar::Scalar;

pub use num_rational::BigRational;

pub type Occlusion = occlusion::OcclusionEstimate<f64>;
pub type ExactOcclusion = occlusion::OcclusionEstimate<BigRational>;
pub type Metrics = metrics::MetricsReport<f64>;
pub type ExactMetrics = metrics::MetricsReport<BigRational>;
pub type ClassWeights = metrics::ClassWeights<f64>;
pub type ExactClassWeights = metrics::ClassWeights<BigRational>;
pub type MixCoefficient = augment::MixCoefficient<f64>;
pub type ExactMixCoefficient = augment::MixCoefficient<BigRational>;
pub type LabelVec = augment::LabelVec<f64>;
pub type ExactLabelVec = augment::LabelVec<BigRational>;
