//! The raster type shared by every transform, plus quantization, boundary
//! index mapping, resizing and PNG/JPEG I/O.
//!
//! Pixels are 8-bit RGB, row-major and channel-interleaved. Transform math is
//! done in `f64` and quantized once per technique through [`clamp_round`].

use std::fmt;
use std::io::Cursor;
use std::path::Path;
use std::str::FromStr;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// Dense 8-bit RGB raster.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImageBuffer")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl ImageBuffer {
    /// A `width` x `height` image with every channel set to `fill`.
    pub fn new(width: usize, height: usize, fill: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![fill; width * height * CHANNELS],
        })
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * CHANNELS {
            return Err(Error::invalid(format!(
                "buffer of {} bytes does not match {width}x{height} RGB",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Same dimensions as `self`, zero-filled. Used as a scratch target.
    pub(crate) fn blank_like(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: vec![0; self.data.len()],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub(crate) fn as_raw_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn offset(&self, x: usize, y: usize) -> usize {
        (y * self.width + x) * CHANNELS
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put_pixel(&mut self, x: usize, y: usize, p: [u8; 3]) {
        let i = self.offset(x, y);
        self.data[i..i + CHANNELS].copy_from_slice(&p);
    }

    /// Decodes a JPEG or PNG file. Grayscale is replicated to RGB and any
    /// alpha channel is dropped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = ImageReader::open(path)
            .map_err(|e| Error::io(path, e))?
            .with_guessed_format()
            .map_err(|e| Error::io(path, e))?;
        let decoded = reader.decode().map_err(|source| Error::Decode {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(decoded))
    }

    pub fn from_dynamic(img: image::DynamicImage) -> Self {
        let rgb = img.into_rgb8();
        let (w, h) = rgb.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            data: rgb.into_raw(),
        }
    }

    /// Encodes as an 8-bit RGB PNG. The encoder settings are fixed so the
    /// output bytes are a pure function of the pixels.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        let encoder =
            PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive);
        encoder.write_image(
            &self.data,
            self.width as u32,
            self.height as u32,
            ExtendedColorType::Rgb8,
        )?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// `new_image`: a uniformly filled RGB buffer.
pub fn new_image(width: usize, height: usize, fill: u8) -> Result<ImageBuffer> {
    ImageBuffer::new(width, height, fill)
}

/// Rounds half away from zero, then clamps into `[0, 255]`.
pub fn clamp_round(x: f64) -> Result<u8> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("non-finite intensity {x}")));
    }
    Ok(quantize(x))
}

/// Infallible [`clamp_round`] for kernels whose arithmetic cannot produce
/// non-finite values. NaN maps to 0.
#[inline]
pub(crate) fn quantize(x: f64) -> u8 {
    x.round().clamp(0.0, 255.0) as u8
}

/// Rule for sampling outside the raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillMode {
    /// Edge-duplicating mirror: `d c b a | a b c d | d c b a`.
    #[default]
    Reflect,
    Nearest,
    Wrap,
    Constant(u8),
}

impl FillMode {
    pub fn name(&self) -> &'static str {
        match self {
            FillMode::Reflect => "reflect",
            FillMode::Nearest => "nearest",
            FillMode::Wrap => "wrap",
            FillMode::Constant(_) => "constant",
        }
    }

    /// Parses a mode name; `cval` is only consulted for `constant`.
    pub fn parse(name: &str, cval: u8) -> Result<Self> {
        match name {
            "reflect" => Ok(FillMode::Reflect),
            "nearest" => Ok(FillMode::Nearest),
            "wrap" => Ok(FillMode::Wrap),
            "constant" => Ok(FillMode::Constant(cval)),
            other => Err(Error::invalid(format!("unknown fill mode '{other}'"))),
        }
    }
}

impl FromStr for FillMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FillMode::parse(s, 0)
    }
}

/// Maps a possibly out-of-range index onto `[0, n)`. `None` means the
/// caller should use the constant fill value.
#[inline]
pub fn map_index(i: i64, n: usize, mode: FillMode) -> Option<usize> {
    debug_assert!(n >= 1);
    let n_i = n as i64;
    if (0..n_i).contains(&i) {
        return Some(i as usize);
    }
    match mode {
        FillMode::Reflect => {
            let period = 2 * n_i;
            let m = i.rem_euclid(period);
            Some(if m < n_i { m } else { period - 1 - m } as usize)
        }
        FillMode::Nearest => Some(i.clamp(0, n_i - 1) as usize),
        FillMode::Wrap => Some(i.rem_euclid(n_i) as usize),
        FillMode::Constant(_) => None,
    }
}

/// Bilinear resize with half-pixel-centre alignment. Aspect ratio is not
/// preserved. Samples beyond the edge clamp to the border pixel.
pub fn resize_bilinear(img: &ImageBuffer, out_w: usize, out_h: usize) -> Result<ImageBuffer> {
    check_dims(out_w, out_h)?;
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let xs = axis_taps(img.width, out_w);
    let ys = axis_taps(img.height, out_h);
    let mut out = ImageBuffer::new(out_w, out_h, 0)?;
    let src = &img.data;
    let stride = img.width * CHANNELS;
    let mut dst = 0;
    for &(y0, y1, ty) in &ys {
        let (r0, r1) = (y0 * stride, y1 * stride);
        for &(x0, x1, tx) in &xs {
            let (c0, c1) = (x0 * CHANNELS, x1 * CHANNELS);
            for c in 0..CHANNELS {
                let p00 = src[r0 + c0 + c] as f64;
                let p01 = src[r0 + c1 + c] as f64;
                let p10 = src[r1 + c0 + c] as f64;
                let p11 = src[r1 + c1 + c] as f64;
                let top = p00 + (p01 - p00) * tx;
                let bottom = p10 + (p11 - p10) * tx;
                out.data[dst] = quantize(top + (bottom - top) * ty);
                dst += 1;
            }
        }
    }
    Ok(out)
}

/// Per output index: (lower source index, upper source index, weight of upper).
fn axis_taps(n_in: usize, n_out: usize) -> Vec<(usize, usize, f64)> {
    let scale = n_in as f64 / n_out as f64;
    let last = (n_in - 1) as f64;
    (0..n_out)
        .map(|o| {
            let s = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = s.floor();
            let i0 = lo as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            (i0, i1, s - lo)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn new_image_fills_every_channel() {
        let img = new_image(2, 2, 0).unwrap();
        assert_eq!(img.as_raw(), &[0u8; 12]);
        let white = new_image(1, 1, 255).unwrap();
        assert_eq!(white.pixel(0, 0), [255, 255, 255]);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        assert!(matches!(new_image(0, 5, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(new_image(5, 0, 0), Err(Error::InvalidArgument(_))));
        assert!(ImageBuffer::from_raw(2, 2, vec![0; 11]).is_err());
    }

    #[test]
    fn clamp_round_ties_away_and_clamps() {
        assert_eq!(clamp_round(127.5).unwrap(), 128);
        assert_eq!(clamp_round(126.5).unwrap(), 127);
        assert_eq!(clamp_round(255.7).unwrap(), 255);
        assert_eq!(clamp_round(-3.2).unwrap(), 0);
        assert!(clamp_round(f64::NAN).is_err());
        assert!(clamp_round(f64::INFINITY).is_err());
    }

    #[test]
    fn map_index_examples() {
        assert_eq!(map_index(-1, 4, FillMode::Reflect), Some(0));
        assert_eq!(map_index(-2, 4, FillMode::Reflect), Some(1));
        assert_eq!(map_index(4, 4, FillMode::Reflect), Some(3));
        assert_eq!(map_index(8, 4, FillMode::Reflect), Some(0));
        assert_eq!(map_index(5, 4, FillMode::Wrap), Some(1));
        assert_eq!(map_index(-1, 4, FillMode::Wrap), Some(3));
        assert_eq!(map_index(4, 4, FillMode::Nearest), Some(3));
        assert_eq!(map_index(-7, 4, FillMode::Nearest), Some(0));
        assert_eq!(map_index(4, 4, FillMode::Constant(0)), None);
        assert_eq!(map_index(-1, 1, FillMode::Reflect), Some(0));
    }

    /// Reflect reference: walk the mirrored sequence step by step.
    fn reflect_by_walking(i: i64, n: usize) -> usize {
        let mut pos: i64 = 0;
        let mut dir: i64 = 1;
        let steps = i.unsigned_abs();
        if i < 0 {
            // stepping left from 0 first lands on the duplicated edge.
            dir = -1;
        }
        let mut cur = pos;
        for _ in 0..steps {
            let next = cur + dir;
            if next < 0 || next >= n as i64 {
                dir = -dir;
            } else {
                cur = next;
            }
            pos = cur;
        }
        pos as usize
    }

    proptest! {
        #[test]
        fn map_index_total_and_idempotent(i in -1000i64..1000, n in 1usize..20) {
            for mode in [FillMode::Reflect, FillMode::Nearest, FillMode::Wrap] {
                let j = map_index(i, n, mode).unwrap();
                prop_assert!(j < n);
                prop_assert_eq!(map_index(j as i64, n, mode), Some(j));
            }
            let c = map_index(i, n, FillMode::Constant(7));
            prop_assert_eq!(c.is_some(), (0..n as i64).contains(&i));
        }

        #[test]
        fn reflect_matches_walking_reference(i in -200i64..200, n in 1usize..12) {
            prop_assert_eq!(map_index(i, n, FillMode::Reflect), Some(reflect_by_walking(i, n)));
        }

        #[test]
        fn resize_of_constant_is_constant(v in any::<u8>(), w in 1usize..9, h in 1usize..9,
                                          ow in 1usize..17, oh in 1usize..17) {
            let img = new_image(w, h, v).unwrap();
            let out = resize_bilinear(&img, ow, oh).unwrap();
            prop_assert_eq!((out.width(), out.height()), (ow, oh));
            prop_assert!(out.as_raw().iter().all(|&p| p == v));
        }
    }

    #[test]
    fn resize_to_same_size_is_identity() {
        let img = ImageBuffer::from_fn(5, 3, |x, y| [x as u8 * 40, y as u8 * 70, 9]).unwrap();
        assert_eq!(resize_bilinear(&img, 5, 3).unwrap(), img);
        assert!(resize_bilinear(&img, 0, 3).is_err());
    }

    #[test]
    fn png_round_trip_and_gray_to_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageBuffer::from_fn(7, 4, |x, y| [x as u8, y as u8, 200]).unwrap();
        let p = dir.path().join("a.png");
        img.save_png(&p).unwrap();
        assert_eq!(ImageBuffer::load(&p).unwrap(), img);

        let gray = image::GrayImage::from_fn(3, 2, |x, _| image::Luma([x as u8 * 10]));
        let gp = dir.path().join("g.png");
        gray.save(&gp).unwrap();
        let loaded = ImageBuffer::load(&gp).unwrap();
        assert_eq!(loaded.pixel(2, 1), [20, 20, 20]);
    }
}
