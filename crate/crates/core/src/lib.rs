//! Few-photon scattering in one-dimensional waveguides coupled to quantum
//! emitters.
//!
//! Five emitter models are supported: a single two-level emitter, a
//! Jaynes–Cummings cavity, an array of two-level emitters, a two-level
//! emitter in front of a mirror and a Rydberg-EIT array. Units are c = ħ = 1
//! and momenta are detunings from the carrier k0.

pub mod config;
pub mod error;
pub mod gme;
pub mod greens;
pub mod linalg;
pub mod quad;
pub mod single_photon;
pub mod transient;
pub mod two_photon;

pub use config::{validate, Channel, Direction, Extended, Mode, Model, SystemConfig, Wavepacket};
pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
