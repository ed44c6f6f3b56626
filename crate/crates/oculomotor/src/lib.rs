//! Closed-loop simulator of a biomimetic oculomotor controller: a foveated
//! retina/SC front end feeding brainstem-style spiking gaze sub-networks,
//! rate-window decoding into servo deltas, and a simulated eye/neck plant
//! watching a laser dot on a wall. Optional reward-modulated Hebbian
//! learning adapts the SC output gains online.

pub mod config;
pub mod connectome;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod learning;
pub mod plant;
pub mod retina;
pub mod snn;

pub use error::{Error, Result};
