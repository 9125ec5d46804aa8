//! Stain transfer and evaluation for histopathology tiles.
//!
//! Implements three classical stain-transfer methods (ColorStat statistics
//! matching in CIELAB, Macenko SVD-based stain separation, and Vahadane
//! sparse non-negative dictionary learning), corpus-averaged profile
//! fitting, and the three metrics used to score transferred image sets:
//! windowed SSIM on grayscale pairs, 1-D Wasserstein distance on LAB color
//! channels, and the Fréchet distance between feature-space Gaussians.
//!
//! The crate is organized around plain data types: [`imagecore::ImageTile`]
//! is the unit of work, [`stainalg`] fits and applies transfer profiles,
//! [`metrics`] scores image sets, and [`datapipe`] builds tile datasets and
//! manifests.

pub mod datapipe;
pub mod error;
pub mod imagecore;
pub mod metrics;
pub mod stainalg;
pub mod synthetic;
pub mod util;

pub use error::{Error, Result};

// feature Gaussians expose nalgebra types in their fields
pub use nalgebra;
