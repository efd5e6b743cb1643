//! Affine transforms and inverse-mapping warps.
//!
//! An [`AffineTransform`] maps source coordinates to output coordinates, in
//! pixel-centre units (pixel `(i, j)` has its centre at `(i, j)`, x right,
//! y down). [`warp_affine`] pulls each output pixel from the source through
//! the inverse, so there are never holes.
//!
//! Transforms combine by pre-multiplication: `compose(a, b)` applies `b`
//! first, then `a`.

use std::ops::Mul;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{map_index, quantize, FillMode, ImageBuffer, CHANNELS};

/// 3x3 homogeneous matrix with last row `[0, 0, 1]` and an invertible
/// linear part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineTransform {
    m: [[f64; 3]; 3],
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        if m[2] != [0.0, 0.0, 1.0] {
            return Err(Error::invalid("affine matrix last row must be [0, 0, 1]"));
        }
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("affine matrix has non-finite entries"));
        }
        let t = Self { m };
        if t.determinant() == 0.0 {
            return Err(Error::invalid("affine matrix is singular"));
        }
        Ok(t)
    }

    /// Linear part `[[a, b], [c, d]]` plus translation `(tx, ty)`.
    fn from_parts(a: f64, b: f64, tx: f64, c: f64, d: f64, ty: f64) -> Self {
        Self {
            m: [[a, b, tx], [c, d, ty], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// Determinant of the upper-left 2x2 block.
    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        (
            m[0][0] * x + m[0][1] * y + m[0][2],
            m[1][0] * x + m[1][1] * y + m[1][2],
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.determinant();
        let m = &self.m;
        let (a, b, c, d) = (m[0][0] / det, m[0][1] / det, m[1][0] / det, m[1][1] / det);
        let (tx, ty) = (m[0][2], m[1][2]);
        let inv = Self::from_parts(d, -b, -(d * tx - b * ty), -c, a, -(-c * tx + a * ty));
        if det == 0.0 || inv.m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("affine transform is not invertible"));
        }
        Ok(inv)
    }

    /// Conjugates by a translation so the transform acts about `(cx, cy)`.
    fn about(self, cx: f64, cy: f64) -> Self {
        make_translation(cx, cy) * self * make_translation(-cx, -cy)
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Mul for AffineTransform {
    type Output = AffineTransform;

    fn mul(self, rhs: AffineTransform) -> AffineTransform {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.m[i][k] * rhs.m[k][j]).sum();
            }
        }
        out[2] = [0.0, 0.0, 1.0];
        AffineTransform { m: out }
    }
}

/// Applies `b` first, then `a`.
pub fn compose(a: &AffineTransform, b: &AffineTransform) -> AffineTransform {
    *a * *b
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90.
fn sin_cos_deg(degrees: f64) -> (f64, f64) {
    let r = degrees.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

/// Rotation about `(cx, cy)`. Positive angles turn the content
/// counter-clockwise as displayed (y down).
pub fn make_rotation(degrees: f64, cx: f64, cy: f64) -> AffineTransform {
    let (s, c) = sin_cos_deg(degrees);
    AffineTransform::from_parts(c, s, 0.0, -s, c, 0.0).about(cx, cy)
}

pub fn make_translation(dx: f64, dy: f64) -> AffineTransform {
    AffineTransform::from_parts(1.0, 0.0, dx, 0.0, 1.0, dy)
}

/// x-shear about `(cx, cy)`: `x' = x + tan(deg) * (y - cy)`, `y' = y`.
pub fn make_shear(degrees_x: f64, cx: f64, cy: f64) -> Result<AffineTransform> {
    if !degrees_x.is_finite() || degrees_x.abs() >= 90.0 {
        return Err(Error::invalid(format!(
            "shear angle must be within (-90, 90) degrees, got {degrees_x}"
        )));
    }
    let k = if degrees_x == 0.0 {
        0.0
    } else {
        degrees_x.to_radians().tan()
    };
    Ok(AffineTransform::from_parts(1.0, k, 0.0, 0.0, 1.0, 0.0).about(cx, cy))
}

/// Zoom about `(cx, cy)`. The warped output at `(x, y)` shows the source at
/// `((x - cx) * fx + cx, (y - cy) * fy + cy)`, so factors above 1 zoom out.
pub fn make_zoom(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<AffineTransform> {
    if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
        return Err(Error::invalid(format!(
            "zoom factors must be positive, got ({fx}, {fy})"
        )));
    }
    Ok(AffineTransform::from_parts(1.0 / fx, 0.0, 0.0, 0.0, 1.0 / fy, 0.0).about(cx, cy))
}

/// Centre of an image in pixel-centre coordinates.
pub fn image_center(img: &ImageBuffer) -> (f64, f64) {
    (
        (img.width() as f64 - 1.0) / 2.0,
        (img.height() as f64 - 1.0) / 2.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interp {
    #[default]
    Bilinear,
    Nearest,
}

impl Interp {
    pub fn name(&self) -> &'static str {
        match self {
            Interp::Bilinear => "bilinear",
            Interp::Nearest => "nearest",
        }
    }
}

impl FromStr for Interp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Interp::Bilinear),
            "nearest" => Ok(Interp::Nearest),
            other => Err(Error::invalid(format!("unknown interpolation '{other}'"))),
        }
    }
}

/// Warps `img` by `t` (source to output). Output has the input's size.
pub fn warp_affine(
    img: &ImageBuffer,
    t: &AffineTransform,
    interp: Interp,
    fill: FillMode,
) -> Result<ImageBuffer> {
    let inv = t.inverse()?;
    let (w, h) = (img.width(), img.height());
    let cval = match fill {
        FillMode::Constant(v) => v as f64,
        _ => 0.0,
    };
    let src = img.as_raw();
    let mut out = img.blank_like();
    let dst = out.as_raw_mut();
    let mut o = 0;
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            match interp {
                Interp::Nearest => {
                    let ix = map_index((sx + 0.5).floor() as i64, w, fill);
                    let iy = map_index((sy + 0.5).floor() as i64, h, fill);
                    match (ix, iy) {
                        (Some(ix), Some(iy)) => {
                            let s = (iy * w + ix) * CHANNELS;
                            dst[o..o + CHANNELS].copy_from_slice(&src[s..s + CHANNELS]);
                        }
                        _ => dst[o..o + CHANNELS].fill(cval as u8),
                    }
                }
                Interp::Bilinear => {
                    let (fx0, fy0) = (sx.floor(), sy.floor());
                    let (tx, ty) = (sx - fx0, sy - fy0);
                    let (x0, y0) = (fx0 as i64, fy0 as i64);
                    let cols = [map_index(x0, w, fill), map_index(x0 + 1, w, fill)];
                    let rows = [map_index(y0, h, fill), map_index(y0 + 1, h, fill)];
                    let tap = |r: Option<usize>, c: Option<usize>, ch: usize| match (r, c) {
                        (Some(r), Some(c)) => src[(r * w + c) * CHANNELS + ch] as f64,
                        _ => cval,
                    };
                    for ch in 0..CHANNELS {
                        let top =
                            tap(rows[0], cols[0], ch) * (1.0 - tx) + tap(rows[0], cols[1], ch) * tx;
                        let bottom =
                            tap(rows[1], cols[0], ch) * (1.0 - tx) + tap(rows[1], cols[1], ch) * tx;
                        dst[o + ch] = quantize(top * (1.0 - ty) + bottom * ty);
                    }
                }
            }
            o += CHANNELS;
        }
    }
    Ok(out)
}

/// Mirror left-right. Exact, no resampling.
pub fn flip_h(img: &ImageBuffer) -> ImageBuffer {
    let mut out = img.blank_like();
    let w = img.width();
    for y in 0..img.height() {
        for x in 0..w {
            out.put_pixel(w - 1 - x, y, img.pixel(x, y));
        }
    }
    out
}

/// Mirror top-bottom. Exact, no resampling.
pub fn flip_v(img: &ImageBuffer) -> ImageBuffer {
    let mut out = img.blank_like();
    let row = img.width() * CHANNELS;
    let h = img.height();
    let (src, dst) = (img.as_raw(), out.as_raw_mut());
    for y in 0..h {
        let d = (h - 1 - y) * row;
        dst[d..d + row].copy_from_slice(&src[y * row..(y + 1) * row]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &AffineTransform, b: &AffineTransform, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn rotation_identities() {
        assert_eq!(make_rotation(0.0, 3.0, 7.0), AffineTransform::IDENTITY);
        assert!(close(
            &make_rotation(360.0, 3.0, 7.0),
            &AffineTransform::IDENTITY,
            1e-12
        ));
        assert!(close(
            &make_rotation(-720.0, 1.5, 2.5),
            &AffineTransform::IDENTITY,
            1e-12
        ));
    }

    #[test]
    fn translation_group_inverse() {
        assert_eq!(make_translation(0.0, 0.0), AffineTransform::IDENTITY);
        let t = compose(&make_translation(2.5, -4.0), &make_translation(-2.5, 4.0));
        assert!(close(&t, &AffineTransform::IDENTITY, 1e-12));
        let dx = 0.2 * 512.0;
        assert_eq!(make_translation(dx, 0.0).apply(0.0, 0.0), (102.4, 0.0));
    }

    #[test]
    fn shear_examples() {
        assert_eq!(
            make_shear(0.0, 4.0, 4.0).unwrap(),
            AffineTransform::IDENTITY
        );
        let s = make_shear(45.0, 10.0, 3.0).unwrap();
        let (x, y) = s.apply(6.0, 3.0);
        assert!((x - 6.0).abs() < 1e-12 && (y - 3.0).abs() < 1e-12);
        let s0 = make_shear(45.0, 0.0, 0.0).unwrap();
        let (x, y) = s0.apply(0.0, 2.0);
        assert!((x - 2.0).abs() < 1e-12 && y == 2.0);
        assert!(make_shear(90.0, 0.0, 0.0).is_err());
        assert!(make_shear(-95.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn zoom_examples() {
        assert_eq!(
            make_zoom(1.0, 1.0, 2.0, 2.0).unwrap(),
            AffineTransform::IDENTITY
        );
        let round = compose(
            &make_zoom(2.0, 2.0, 1.5, 1.5).unwrap(),
            &make_zoom(0.5, 0.5, 1.5, 1.5).unwrap(),
        );
        assert!(close(&round, &AffineTransform::IDENTITY, 1e-12));
        assert!(make_zoom(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(make_zoom(1.0, -2.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn compose_algebra() {
        let a = make_rotation(33.0, 1.0, 2.0);
        let b = make_shear(12.0, 0.5, 0.5).unwrap();
        let c = make_zoom(1.3, 0.7, 3.0, 1.0).unwrap();
        assert!(close(&compose(&AffineTransform::IDENTITY, &a), &a, 0.0));
        assert!(close(
            &compose(&a, &a.inverse().unwrap()),
            &AffineTransform::IDENTITY,
            1e-12
        ));
        let left = compose(&a, &compose(&b, &c));
        let right = compose(&compose(&a, &b), &c);
        assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn singular_matrices_are_rejected() {
        let m = [[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(AffineTransform::from_matrix(m).is_err());
        let bad_row = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 1.0, 1.0]];
        assert!(AffineTransform::from_matrix(bad_row).is_err());
    }

    #[test]
    fn integer_shift_with_constant_fill() {
        let img = ImageBuffer::from_raw(3, 1, vec![10, 10, 10, 20, 20, 20, 30, 30, 30]).unwrap();
        for interp in [Interp::Nearest, Interp::Bilinear] {
            let out = warp_affine(
                &img,
                &make_translation(1.0, 0.0),
                interp,
                FillMode::Constant(0),
            )
            .unwrap();
            assert_eq!(out.as_raw(), &[0, 0, 0, 10, 10, 10, 20, 20, 20]);
        }
    }

    #[test]
    fn flips_reverse_exactly() {
        let img = ImageBuffer::from_raw(3, 1, vec![1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        assert_eq!(flip_h(&img).as_raw(), &[7, 8, 9, 4, 5, 6, 1, 2, 3]);
        assert_eq!(flip_v(&img), img);
        let tall = ImageBuffer::from_fn(2, 3, |x, y| [x as u8, y as u8, 0]).unwrap();
        assert_eq!(flip_v(&tall).pixel(1, 0), [1, 2, 0]);
        assert_eq!(flip_h(&flip_h(&tall)), tall);
        assert_eq!(flip_v(&flip_v(&tall)), tall);
    }
}
