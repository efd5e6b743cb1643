//! Additive Gaussian noise and salt-and-pepper corruption.

use crate::error::{Error, Result};
use crate::image::{quantize, ImageBuffer, CHANNELS};
use crate::rng::RandomStream;

/// Default upper bound on the per-image standard deviation.
pub const DEFAULT_VARIABILITY: f64 = 50.0;

/// Gaussian noise parameters. `deviation` is drawn once per image from
/// `variability * U[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianNoiseParams {
    pub variability: f64,
    pub deviation: f64,
}

impl GaussianNoiseParams {
    pub fn draw(variability: f64, rng: &mut RandomStream) -> Result<Self> {
        if !(variability >= 0.0 && variability.is_finite()) {
            return Err(Error::invalid(format!(
                "noise variability must be finite and >= 0, got {variability}"
            )));
        }
        let deviation = variability * rng.next_f64();
        Ok(Self {
            variability,
            deviation,
        })
    }
}

/// Draws a deviation from `variability`, then adds `N(0, deviation^2)` to
/// every channel value.
pub fn add_gaussian_noise(
    img: &ImageBuffer,
    variability: f64,
    rng: &mut RandomStream,
) -> Result<ImageBuffer> {
    let params = GaussianNoiseParams::draw(variability, rng)?;
    Ok(add_gaussian_noise_with_deviation(
        img,
        params.deviation,
        rng,
    ))
}

/// Adds noise at a fixed standard deviation. Normals are consumed in
/// Box-Muller pairs over the interleaved channel values in raster order.
pub fn add_gaussian_noise_with_deviation(
    img: &ImageBuffer,
    deviation: f64,
    rng: &mut RandomStream,
) -> ImageBuffer {
    let mut out = img.clone();
    if deviation == 0.0 {
        return out;
    }
    for pair in out.as_raw_mut().chunks_mut(2) {
        let (z0, z1) = rng.gaussian_pair();
        pair[0] = quantize(pair[0] as f64 + deviation * z0);
        if let Some(v) = pair.get_mut(1) {
            *v = quantize(*v as f64 + deviation * z1);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaltPepperParams {
    /// Probability that a pixel is corrupted.
    pub amount: f64,
    /// Probability that a corrupted pixel becomes white rather than black.
    pub salt_ratio: f64,
}

impl SaltPepperParams {
    pub fn new(amount: f64, salt_ratio: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amount) || !(0.0..=1.0).contains(&salt_ratio) {
            return Err(Error::invalid(format!(
                "salt-and-pepper amount and salt_ratio must lie in [0, 1], got ({amount}, {salt_ratio})"
            )));
        }
        Ok(Self { amount, salt_ratio })
    }
}

/// Sets each pixel independently, with probability `amount`, to white
/// (probability `salt_ratio`) or black.
pub fn add_salt_pepper(
    img: &ImageBuffer,
    p: SaltPepperParams,
    rng: &mut RandomStream,
) -> ImageBuffer {
    salt_pepper_with_count(img, p, rng).0
}

/// As [`add_salt_pepper`], also returning the number of corrupted pixels.
pub fn salt_pepper_with_count(
    img: &ImageBuffer,
    p: SaltPepperParams,
    rng: &mut RandomStream,
) -> (ImageBuffer, usize) {
    let mut out = img.clone();
    let mut corrupted = 0;
    for px in out.as_raw_mut().chunks_exact_mut(CHANNELS) {
        if rng.bernoulli(p.amount) {
            let v = if rng.bernoulli(p.salt_ratio) { 255 } else { 0 };
            px.fill(v);
            corrupted += 1;
        }
    }
    (out, corrupted)
}
