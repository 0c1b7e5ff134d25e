//! Security analysis engine for floodlight quantum key distribution.
//!
//! The pipeline: terminal models build the Gaussian states the protocol
//! prepares; the adversary module bounds what a frequency-domain collective
//! attacker can learn; the receiver module gives the legitimate parties'
//! error statistics; keyrate combines both into optimized secret-key-rate
//! lower bounds; monitor provides the photon-coincidence channel statistics
//! that pin the attacker's injection fraction.

pub mod adversary;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian;
pub mod keyrate;
pub mod monitor;
pub mod receiver;
pub mod terminals;

pub use error::{Error, Result};
