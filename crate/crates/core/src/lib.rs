//! Physically-based foggy image simulation.
//!
//! The crate follows light from the scene to the final picture:
//!
//! 1. [`render`] solves volumetric light transport through homogeneous fog
//!    ([`medium`]) in a [`scene`] and yields spectral radiance plus depth.
//! 2. [`camera`] converts radiance to sensor-plane irradiance and then to a
//!    noisy, mosaicked raw frame.
//! 3. [`isp`] turns the raw frame into a display-referred 8-bit RGB image.
//!
//! [`asm`] implements the classical atmospheric scattering model as a baseline
//! and [`analysis`] holds the measurement tools used to compare the two.
//! [`pipeline`] wires everything together from a single job file.

pub mod analysis;
pub mod asm;
pub mod camera;
pub mod error;
pub mod image;
pub mod io;
pub mod isp;
pub mod math;
pub mod medium;
pub mod pipeline;
pub mod render;
pub mod rng;
pub mod scene;
pub mod spectrum;

pub use error::{Error, Result};
