//! Sub-model generation, container codec, lossy-link simulation and a
//! three-tier model library for downloading situation-adapted AI models
//! onto edge devices.

pub mod data;
pub mod error;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
pub mod codec;
pub mod compress;
pub mod channel;
pub mod library;
pub mod linkbudget;
pub mod plan;
