//! Co-simulation of an optically biased, optically read-out latching
//! superconducting nanowire single photon detector.
//!
//! A cryogenic photodiode converts bias light into the detector current; the
//! latched nanowire's voltage drives an electro-optic modulator whose output
//! carries the click back out on fibre.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod config;
pub mod error;
pub mod fitkit;
pub mod modulator;
pub mod params;
pub mod photodiode;
pub mod presets;
pub mod roots;
pub mod scenario;
pub mod snspd;
pub mod stats;

pub use error::{Result, SimError};
