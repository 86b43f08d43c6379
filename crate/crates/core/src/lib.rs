//! Core algorithms for imbalance-aware gradient boosting: datasets and
//! resampling, the shifted-sigmoid activation with its focal losses,
//! a deterministic histogram GBDT trainer, rank-based AUC evaluation,
//! and the shift pretraining that fits `g = alpha * ln(IR) + beta`.
//!
//! This crate is `no_std` (with `alloc`); all IO, file formats and the
//! command-line tool live in the companion `asigboost` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod activation;
pub mod dataset;
pub mod gbdt;
pub mod loss;
pub mod metrics;
pub mod pca;
pub mod pretrain;
pub mod rng;

pub use activation::{asig, g_factor, sigmoid, AsigParams};
pub use dataset::{Dataset, FeatureMatrix, ImbalanceRatio};
pub use gbdt::{BoostConfig, BoostedModel};
pub use loss::{GradHess, LossKind, LossSpec};
pub use metrics::{auc, evaluate, EvalProtocol, EvalRecord};
pub use pretrain::{pretrain_asig, PretrainResult, ShiftGrid};
