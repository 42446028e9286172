//! Constrained D-optimal and EW D-optimal allocation for stratified sampling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod models;
pub mod optimizer;
pub mod region;
pub mod samplers;
pub mod sim;
pub mod study;

pub use error::{Error, Result};
