//! Queues served at the SINR-driven rate of a receiver surrounded by mobile
//! Poisson interferers: simulation, estimators and analytic approximations.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod config;
pub mod environment;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod interference;
pub mod mobility;
pub mod par;
pub mod quadrature;
pub mod queueing;
pub mod rng;

pub use error::{Error, Result};
