//! Unsupervised word segmentation by greedy n-gram compression under a
//! penalized likelihood, with information-criterion model selection.

pub mod cli;
pub mod corpus;
pub mod criteria;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod learner;
pub mod lexmodel;
pub mod search;

pub use error::{Error, Result};
