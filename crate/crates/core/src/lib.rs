//! Simulator for non-stationary UAV-to-vehicle mmWave channels.
//!
//! Inter-path parameters (path set, delays, mean angles) come from scene
//! geometry; path powers from a small feed-forward regressor on delay; ray
//! angle offsets from an adversarially trained generator. The crate also
//! provides the training side (synthetic ray corpora, clustering, network
//! training) and the correlation statistics of generated channels.

pub mod bpnn;
pub mod channel;
pub mod clustering;
pub mod config;
pub mod error;
pub mod gan;
pub mod io;
pub mod kinematics;
pub mod nn;
pub mod scene;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
