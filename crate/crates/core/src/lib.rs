//! Multiview user geolocation.
//!
//! Four per-user views (TF-IDF, paragraph vectors, mention-graph node
//! embeddings and posting-hour histograms) feed a multi-entry network whose
//! class predictions are decoded to coordinates through per-class median
//! centroids.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below name the double-precision instantiations used by the CLI.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod features;
pub mod geo;
pub mod graph;
pub mod labels;
pub mod matrix;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod synthetic;
pub mod temporal;
pub mod text;

pub use error::{Error, Result};
pub use scalar::{Dtype, Scalar};

pub type MatrixF64 = matrix::Matrix<f64>;
pub type FeatureMatrixF64 = features::FeatureMatrix<f64>;
pub type FeatureViewF64 = features::FeatureView<f64>;
pub type MenetModelF64 = model::MenetModel<f64>;
pub type PvdbowModelF64 = text::pvdbow::PvdbowModel<f64>;
pub type NodeEmbeddingF64 = graph::NodeEmbedding<f64>;
