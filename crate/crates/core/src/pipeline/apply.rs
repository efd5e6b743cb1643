use serde_json::Value;

use super::config::RenderSettings;
use crate::advanced::{patch_shuffle, random_erase, sample_pairing};
use crate::error::{Error, Result};
use crate::geometry::{
    flip_h, flip_v, image_center, make_rotation, make_shear, make_translation, make_zoom,
    warp_affine,
};
use crate::image::ImageBuffer;
use crate::noise::{
    add_gaussian_noise_with_deviation, salt_pepper_with_count, GaussianNoiseParams,
};
use crate::photometric::{adjust_brightness, convolve3, isolate_channel, Kernel3};
use crate::rng::RandomStream;
use crate::sampling::{ParamMap, TechniqueParams};

/// Output of one technique application.
#[derive(Debug, Clone)]
pub struct Applied {
    pub image: ImageBuffer,
    /// Values decided while applying (drawn deviation, erase rectangle, ...).
    /// Recorded for inspection; replay re-derives them from the seed.
    pub observed: ParamMap,
}

/// Applies concrete parameters to an already-resized source image.
/// `partner` is required for sample pairing and ignored otherwise.
pub fn apply_technique(
    img: &ImageBuffer,
    params: &TechniqueParams,
    render: &RenderSettings,
    partner: Option<&ImageBuffer>,
    rng: &mut RandomStream,
) -> Result<Applied> {
    let mut observed = ParamMap::new();
    let (cx, cy) = image_center(img);
    let warp = |t| warp_affine(img, &t, render.interp, render.fill);
    let image = match *params {
        TechniqueParams::Rotate { degrees } => warp(make_rotation(degrees, cx, cy))?,
        TechniqueParams::Shift { dx_frac, dy_frac } => warp(make_translation(
            dx_frac * img.width() as f64,
            dy_frac * img.height() as f64,
        ))?,
        TechniqueParams::Shear { degrees } => warp(make_shear(degrees, cx, cy)?)?,
        TechniqueParams::Zoom { fx, fy } => warp(make_zoom(fx, fy, cx, cy)?)?,
        TechniqueParams::Flip {
            horizontal,
            vertical,
        } => {
            let mut out = img.clone();
            if horizontal {
                out = flip_h(&out);
            }
            if vertical {
                out = flip_v(&out);
            }
            out
        }
        TechniqueParams::Brightness { factor } => adjust_brightness(img, factor)?,
        TechniqueParams::NoiseGaussian { variability } => {
            let noise = GaussianNoiseParams::draw(variability, rng)?;
            observed.insert("deviation".into(), noise.deviation.into());
            add_gaussian_noise_with_deviation(img, noise.deviation, rng)
        }
        TechniqueParams::NoiseSaltPepper(p) => {
            let (out, corrupted) = salt_pepper_with_count(img, p, rng);
            observed.insert("corrupted_pixels".into(), corrupted.into());
            out
        }
        TechniqueParams::Erase(p) => {
            let outcome = random_erase(img, &p, rng)?;
            match outcome.rect {
                Some(r) => {
                    for (k, v) in [("x", r.x), ("y", r.y), ("w", r.width), ("h", r.height)] {
                        observed.insert(format!("rect_{k}"), v.into());
                    }
                }
                None => {
                    observed.insert("erased".into(), Value::Bool(false));
                }
            }
            outcome.image
        }
        TechniqueParams::PatchShuffle(p) => {
            let outcome = patch_shuffle(img, p, rng)?;
            observed.insert("shuffled_windows".into(), outcome.shuffled_windows.into());
            outcome.image
        }
        TechniqueParams::SamplePairing { crop } => {
            let partner =
                partner.ok_or_else(|| Error::invalid("sample pairing requires a partner image"))?;
            sample_pairing(img, partner, crop, rng)?
        }
        TechniqueParams::ChannelIsolate { channel } => isolate_channel(img, channel),
        TechniqueParams::Blur { kernel } => convolve3(img, &kernel.kernel(), render.fill),
        TechniqueParams::Sharpen => convolve3(img, &Kernel3::sharpen(), render.fill),
    };
    Ok(Applied { image, observed })
}
