//! Driver-behavior segmentation from vehicle bus telemetry.
//!
//! The pipeline resamples eight bus signals to 4 Hz, extracts seven
//! features per signal, turns each user's feature vector into a 10-bin
//! normalized histogram and clusters users with K-means. The number of
//! clusters is chosen by how stable the clustering stays between random
//! 70/30 splits of the data (V-measure), and a second experiment measures
//! how much data can be dropped before the clustering changes.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the common instantiations.

pub mod config;
pub mod error;
pub mod experiments;
pub mod export;
pub mod features;
pub mod histogram;
pub mod ingest;
pub mod learn;
pub mod pipeline;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use experiments::{
    cross_validate, robustness_curve, select_optimal_k, BinsMode, CrossValCell, CrossValResult,
    ExperimentOptions, SubsampleCurve, SubsampleMethod,
};
pub use features::{extract_feature, FeatureKind, FeatureTable, FeatureVector, SingularPoints};
pub use histogram::{BinSpec, Histogram, HistogramOptions, HistogramSet};
pub use ingest::{SampleSeries, Session, SignalKind, UniformSeries, UserRecord};
pub use learn::{
    kmeans, pca_project, v_measure, Clustering, KMeansOptions, PcaProjection, PointSet,
};
pub use scalar::Scalar;

pub type SampleSeries64 = SampleSeries<f64>;
pub type UniformSeries64 = UniformSeries<f64>;
pub type UserRecord64 = UserRecord<f64>;
pub type FeatureTable64 = FeatureTable<f64>;
pub type HistogramSet64 = HistogramSet<f64>;
pub type PointSet64 = PointSet<f64>;
pub type Clustering64 = Clustering<f64>;
pub type PcaProjection64 = PcaProjection<f64>;

pub type SampleSeries32 = SampleSeries<f32>;
pub type UniformSeries32 = UniformSeries<f32>;
pub type UserRecord32 = UserRecord<f32>;
pub type FeatureTable32 = FeatureTable<f32>;
pub type HistogramSet32 = HistogramSet<f32>;
pub type PointSet32 = PointSet<f32>;
pub type Clustering32 = Clustering<f32>;
pub type PcaProjection32 = PcaProjection<f32>;
