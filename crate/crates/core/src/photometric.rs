//! Brightness scaling, single-channel isolation and 3x3 kernel filters.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{map_index, quantize, FillMode, ImageBuffer, CHANNELS};

/// Multiplies every intensity by `factor` (linear, no gamma). Zero gives
/// black.
pub fn adjust_brightness(img: &ImageBuffer, factor: f64) -> Result<ImageBuffer> {
    if !(factor >= 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!(
            "brightness factor must be finite and >= 0, got {factor}"
        )));
    }
    let mut out = img.clone();
    for v in out.as_raw_mut() {
        *v = quantize(*v as f64 * factor);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "R" | "r" => Ok(Channel::R),
            "G" | "g" => Ok(Channel::G),
            "B" | "b" => Ok(Channel::B),
            other => Err(Error::invalid(format!("unknown channel '{other}'"))),
        }
    }
}

/// Keeps `channel` and zeroes the other two.
pub fn isolate_channel(img: &ImageBuffer, channel: Channel) -> ImageBuffer {
    let keep = channel.index();
    let mut out = img.clone();
    for px in out.as_raw_mut().chunks_exact_mut(CHANNELS) {
        for (c, v) in px.iter_mut().enumerate() {
            if c != keep {
                *v = 0;
            }
        }
    }
    out
}

/// 3x3 correlation kernel, row-major, `weights[dy + 1][dx + 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel3 {
    weights: [[f64; 3]; 3],
}

impl Kernel3 {
    pub fn new(weights: [[f64; 3]; 3]) -> Result<Self> {
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> [[f64; 3]; 3] {
        self.weights
    }

    pub fn identity() -> Self {
        Self {
            weights: [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
        }
    }

    pub fn box_blur() -> Self {
        Self {
            weights: [[1.0 / 9.0; 3]; 3],
        }
    }

    pub fn gaussian_blur() -> Self {
        let w = |v: f64| v / 16.0;
        Self {
            weights: [
                [w(1.0), w(2.0), w(1.0)],
                [w(2.0), w(4.0), w(2.0)],
                [w(1.0), w(2.0), w(1.0)],
            ],
        }
    }

    pub fn sharpen() -> Self {
        Self {
            weights: [[0.0, -1.0, 0.0], [-1.0, 5.0, -1.0], [0.0, -1.0, 0.0]],
        }
    }
}

/// Named blur kernels selectable for the `blur` technique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlurKind {
    Box,
    #[default]
    Gaussian,
}

impl BlurKind {
    pub fn kernel(self) -> Kernel3 {
        match self {
            BlurKind::Box => Kernel3::box_blur(),
            BlurKind::Gaussian => Kernel3::gaussian_blur(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BlurKind::Box => "box",
            BlurKind::Gaussian => "gaussian",
        }
    }
}

impl FromStr for BlurKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(BlurKind::Box),
            "gaussian" => Ok(BlurKind::Gaussian),
            other => Err(Error::invalid(format!("unknown blur kernel '{other}'"))),
        }
    }
}

/// Per-channel 3x3 correlation with `fill` at the borders.
pub fn convolve3(img: &ImageBuffer, k: &Kernel3, fill: FillMode) -> ImageBuffer {
    let (w, h) = (img.width(), img.height());
    let cval = match fill {
        FillMode::Constant(v) => v as f64,
        _ => 0.0,
    };
    let src = img.as_raw();
    let mut out = img.blank_like();
    let dst = out.as_raw_mut();
    for y in 0..h {
        let rows = [-1i64, 0, 1].map(|d| map_index(y as i64 + d, h, fill));
        for x in 0..w {
            let cols = [-1i64, 0, 1].map(|d| map_index(x as i64 + d, w, fill));
            let o = (y * w + x) * CHANNELS;
            for ch in 0..CHANNELS {
                let mut acc = 0.0;
                for (ky, r) in rows.iter().enumerate() {
                    for (kx, c) in cols.iter().enumerate() {
                        let v = match (r, c) {
                            (Some(r), Some(c)) => src[(r * w + c) * CHANNELS + ch] as f64,
                            _ => cval,
                        };
                        acc += k.weights[ky][kx] * v;
                    }
                }
                dst[o + ch] = quantize(acc);
            }
        }
    }
    out
}
