//! Random erasing, PatchShuffle and SamplePairing.

use crate::error::{Error, Result};
use crate::geometry::flip_h;
use crate::image::{quantize, resize_bilinear, ImageBuffer, CHANNELS};
use crate::rng::RandomStream;

const ERASE_ATTEMPTS: usize = 100;

/// Side length of the SamplePairing crop.
pub const DEFAULT_PAIRING_CROP: usize = 224;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EraseFill {
    /// Independent uniform intensity per channel value.
    #[default]
    Random,
    /// Per-channel mean of the whole image.
    Mean,
    Constant(u8),
}

impl EraseFill {
    pub fn name(&self) -> &'static str {
        match self {
            EraseFill::Random => "random",
            EraseFill::Mean => "mean",
            EraseFill::Constant(_) => "constant",
        }
    }
}

/// Bounds for the erased rectangle. `aspect` is height over width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EraseParams {
    pub area_lo: f64,
    pub area_hi: f64,
    pub aspect_lo: f64,
    pub aspect_hi: f64,
    pub fill: EraseFill,
}

impl Default for EraseParams {
    fn default() -> Self {
        Self {
            area_lo: 0.02,
            area_hi: 0.4,
            aspect_lo: 0.3,
            aspect_hi: 3.33,
            fill: EraseFill::Random,
        }
    }
}

impl EraseParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.area_lo > 0.0
            && self.area_lo <= self.area_hi
            && self.area_hi <= 1.0
            && self.aspect_lo > 0.0
            && self.aspect_lo <= self.aspect_hi
            && self.aspect_hi.is_finite();
        if !ok {
            return Err(Error::invalid(format!("invalid erase parameters {self:?}")));
        }
        Ok(())
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

#[derive(Debug, Clone)]
pub struct EraseOutcome {
    pub image: ImageBuffer,
    /// `None` when no feasible rectangle was found and the input was
    /// returned unchanged.
    pub rect: Option<Rect>,
}

/// Overwrites one random rectangle. Gives up after 100 infeasible draws.
pub fn random_erase(
    img: &ImageBuffer,
    params: &EraseParams,
    rng: &mut RandomStream,
) -> Result<EraseOutcome> {
    params.validate()?;
    let (w, h) = (img.width(), img.height());
    let total = (w * h) as f64;
    for _ in 0..ERASE_ATTEMPTS {
        let area = rng.uniform(params.area_lo, params.area_hi) * total;
        let aspect = rng.uniform(params.aspect_lo, params.aspect_hi);
        let eh = (area * aspect).sqrt().round() as usize;
        let ew = (area / aspect).sqrt().round() as usize;
        if ew == 0 || eh == 0 || ew > w || eh > h {
            continue;
        }
        let x = rng.below((w - ew + 1) as u64) as usize;
        let y = rng.below((h - eh + 1) as u64) as usize;
        let rect = Rect {
            x,
            y,
            width: ew,
            height: eh,
        };
        let mean = match params.fill {
            EraseFill::Mean => channel_means(img),
            _ => [0; 3],
        };
        let mut out = img.clone();
        for yy in y..y + eh {
            for xx in x..x + ew {
                let px = match params.fill {
                    EraseFill::Random => [
                        rng.below(256) as u8,
                        rng.below(256) as u8,
                        rng.below(256) as u8,
                    ],
                    EraseFill::Mean => mean,
                    EraseFill::Constant(v) => [v; 3],
                };
                out.put_pixel(xx, yy, px);
            }
        }
        return Ok(EraseOutcome {
            image: out,
            rect: Some(rect),
        });
    }
    log::warn!("random_erase: no feasible rectangle after {ERASE_ATTEMPTS} draws");
    Ok(EraseOutcome {
        image: img.clone(),
        rect: None,
    })
}

fn channel_means(img: &ImageBuffer) -> [u8; 3] {
    let mut sums = [0u64; 3];
    for px in img.as_raw().chunks_exact(CHANNELS) {
        for c in 0..CHANNELS {
            sums[c] += px[c] as u64;
        }
    }
    let n = (img.width() * img.height()) as f64;
    sums.map(|s| quantize(s as f64 / n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchShuffleParams {
    /// Window side in pixels.
    pub n: usize,
    /// Per-window shuffle probability.
    pub p: f64,
}

impl Default for PatchShuffleParams {
    fn default() -> Self {
        Self { n: 2, p: 0.05 }
    }
}

impl PatchShuffleParams {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n == 0 || !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "patch shuffle needs n >= 1 and p in [0, 1], got n={n}, p={p}"
            )));
        }
        Ok(Self { n, p })
    }
}

#[derive(Debug, Clone)]
pub struct PatchShuffleOutcome {
    pub image: ImageBuffer,
    pub windows: usize,
    /// Windows selected for shuffling (whether or not the permutation
    /// happened to move anything).
    pub shuffled_windows: usize,
}

/// Tiles the image into `n x n` windows in raster order (edge windows may be
/// smaller) and permutes whole pixels inside each window with probability `p`.
pub fn patch_shuffle(
    img: &ImageBuffer,
    params: PatchShuffleParams,
    rng: &mut RandomStream,
) -> Result<PatchShuffleOutcome> {
    let params = PatchShuffleParams::new(params.n, params.p)?;
    let (w, h, n) = (img.width(), img.height(), params.n);
    let mut out = img.clone();
    let mut windows = 0;
    let mut shuffled = 0;
    let mut coords = Vec::with_capacity(n * n);
    for wy in (0..h).step_by(n) {
        for wx in (0..w).step_by(n) {
            windows += 1;
            if !rng.bernoulli(params.p) {
                continue;
            }
            shuffled += 1;
            coords.clear();
            for y in wy..(wy + n).min(h) {
                for x in wx..(wx + n).min(w) {
                    coords.push((x, y));
                }
            }
            let mut order: Vec<usize> = (0..coords.len()).collect();
            rng.shuffle(&mut order);
            for (dst, &src) in coords.iter().zip(&order) {
                let (sx, sy) = coords[src];
                out.put_pixel(dst.0, dst.1, img.pixel(sx, sy));
            }
        }
    }
    Ok(PatchShuffleOutcome {
        image: out,
        windows,
        shuffled_windows: shuffled,
    })
}

/// Upscales so the short side is at least `crop`.
fn ensure_min_side(img: &ImageBuffer, crop: usize) -> Result<ImageBuffer> {
    let (w, h) = (img.width(), img.height());
    if w >= crop && h >= crop {
        return Ok(img.clone());
    }
    let scale = crop as f64 / w.min(h) as f64;
    let nw = ((w as f64 * scale).round() as usize).max(crop);
    let nh = ((h as f64 * scale).round() as usize).max(crop);
    resize_bilinear(img, nw, nh)
}

fn random_cut(img: &ImageBuffer, crop: usize, rng: &mut RandomStream) -> ImageBuffer {
    let x0 = rng.below((img.width() - crop + 1) as u64) as usize;
    let y0 = rng.below((img.height() - crop + 1) as u64) as usize;
    let flip = rng.bernoulli(0.5);
    let mut data = Vec::with_capacity(crop * crop * CHANNELS);
    let row = img.width() * CHANNELS;
    for y in y0..y0 + crop {
        let start = y * row + x0 * CHANNELS;
        data.extend_from_slice(&img.as_raw()[start..start + crop * CHANNELS]);
    }
    let cut = ImageBuffer::from_raw(crop, crop, data).expect("crop dimensions are consistent");
    if flip {
        flip_h(&cut)
    } else {
        cut
    }
}

/// Random `crop x crop` cut and coin-flip mirror of each input, then the
/// per-channel average. The result carries `a`'s label.
pub fn sample_pairing(
    a: &ImageBuffer,
    b: &ImageBuffer,
    crop: usize,
    rng: &mut RandomStream,
) -> Result<ImageBuffer> {
    if crop == 0 {
        return Err(Error::invalid("sample pairing crop must be at least 1"));
    }
    let a = random_cut(&ensure_min_side(a, crop)?, crop, rng);
    let b = random_cut(&ensure_min_side(b, crop)?, crop, rng);
    let mut out = a.blank_like();
    for ((o, &x), &y) in out.as_raw_mut().iter_mut().zip(a.as_raw()).zip(b.as_raw()) {
        *o = quantize((x as f64 + y as f64) * 0.5);
    }
    Ok(out)
}
