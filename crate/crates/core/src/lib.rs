//! Switched-linear coding.
//!
//! Rectified linear autoencoders (tied or untied, one or more layers),
//! sigmoid autoencoders, triangle k-means, soft thresholding and a lasso
//! reference coder, together with PCA/ZCA whitening, seeded data generators
//! and the geometry used to inspect learned features.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command line live in the `switchcode` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod dataset;
pub mod encoders;
pub mod error;
pub mod exec;
pub mod idx;
pub mod lasso;
pub mod linalg;
pub mod preprocess;
pub mod rng;
pub mod training;
pub mod viz;

pub use dataset::{gen_gaussian, gen_line_manifold, gen_mog, Dataset, MixtureComponent, MixtureSpec, Source};
pub use encoders::{
    active_set, decode, encode, loss_active, negative_pair, soft_threshold_encode,
    triangle_kmeans_encode, Activation, Encoding, Layer, Model, ModelSpec, NegativePair,
};
pub use error::{Error, KinkSite, Result};
pub use exec::{Executor, Sequential};
pub use lasso::{kkt_residual, lasso_encode, LassoProblem, LassoSolution};
pub use linalg::Matrix;
pub use preprocess::{fit_pca, whiten_fit, PcaBasis, WhitenMode, WhitenTransform};
pub use rng::Rng;
pub use training::{grad, grad_check, loss, sgd_train, Gradient, LossBreakdown, TrainConfig, TrainReport};
pub use viz::{
    feature_tiles, hyperplanes, pairing_report, response_grid, GridMode, PlaneSet, ResponseGrid,
    TileSheet,
};
