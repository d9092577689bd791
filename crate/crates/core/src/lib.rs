//! Secrecy analysis and learned power allocation for a SWIPT-powered
//! cooperative NOMA downlink with a decode-and-forward near-user relay and an
//! energy-harvesting eavesdropper.

pub mod dataset;
pub mod error;
pub mod model;
pub mod nn;
pub mod optimizer;
pub mod persist;
pub mod quadrature;
pub mod rng;
pub mod secrecy;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
