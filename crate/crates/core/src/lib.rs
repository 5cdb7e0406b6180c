//! Convolutional network engine with a fixed general-purpose filter bank as
//! its first layer, the matching learned-filter baseline, a frozen-layer
//! feature cache, MNIST loading and a phase-timed training harness.

pub mod data;
pub mod error;
pub mod fsutil;
pub mod image;
pub mod kernel_bank;
pub mod network;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
