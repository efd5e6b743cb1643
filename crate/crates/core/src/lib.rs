//! Deterministic, seed-reproducible image data augmentation.
//!
//! The crate is organised bottom-up:
//!
//! * [`image`]: the RGB raster, quantization, boundary modes, resize, I/O.
//! * [`geometry`]: affine transforms and inverse-mapping warps, flips.
//! * [`photometric`]: brightness, channel isolation, 3x3 kernels.
//! * [`noise`]: Gaussian and salt-and-pepper noise.
//! * [`advanced`]: random erasing, PatchShuffle, SamplePairing.
//! * [`rng`] / [`sampling`]: seeded streams, technique parameter draws.
//! * [`pipeline`]: dataset scan, planning, parallel execution, manifests.
//! * [`cli`]: the `dataug` command line.

pub mod advanced;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod image;
pub mod noise;
pub mod photometric;
pub mod pipeline;
pub mod rng;
pub mod sampling;

pub use error::{Error, Result};
pub use geometry::{AffineTransform, Interp};
pub use image::{FillMode, ImageBuffer};
pub use rng::RandomStream;
pub use sampling::{Technique, TechniqueParams, TechniqueSpec};
