//! Multi-label document classification: a bag-of-words feed-forward network,
//! a word-index convolutional network, and a binary-relevance logistic
//! regression baseline, with thresholded outputs, micro-averaged evaluation,
//! ROC sweeps and k-fold cross-validation.

pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod models;
pub mod nn;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
