#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use dataug_core::ImageBuffer;

pub const FIXTURE_SIZE: usize = 23;

/// Smooth two-tone gradient with a seed-dependent tilt, so every fixture
/// image differs and resampling stays well-behaved.
pub fn gradient(w: usize, h: usize, seed: usize) -> ImageBuffer {
    let k = (seed % 7) as f64 + 1.0;
    ImageBuffer::from_fn(w, h, |x, y| {
        let fx = x as f64 / w.max(2) as f64;
        let fy = y as f64 / h.max(2) as f64;
        [
            (255.0 * fx) as u8,
            (255.0 * fy) as u8,
            (127.0 + 100.0 * ((fx * k + fy) * std::f64::consts::PI).sin()) as u8,
        ]
    })
    .unwrap()
}

/// 23 images split 12/11 over two class directories, mixing PNG and JPEG
/// and a few source sizes.
pub fn fixture_23(dir: &Path) -> PathBuf {
    let root = dir.join("fixture");
    for i in 0..FIXTURE_SIZE {
        let class = if i < 12 { "Abyssinian" } else { "Bengal" };
        let d = root.join(class);
        std::fs::create_dir_all(&d).unwrap();
        let (w, h) = [(64, 48), (80, 80), (40, 72)][i % 3];
        let img = gradient(w, h, i);
        if i % 4 == 3 {
            let raw = image::RgbImage::from_raw(w as u32, h as u32, img.into_raw()).unwrap();
            raw.save(d.join(format!("{class}_{i}.jpg"))).unwrap();
        } else {
            img.save_png(d.join(format!("{class}_{i}.png"))).unwrap();
        }
    }
    root
}

/// `counts` images per class directory.
pub fn class_fixture(dir: &Path, counts: &[(&str, usize)]) -> PathBuf {
    let root = dir.join("classes");
    let mut n = 0;
    for (class, count) in counts {
        let d = root.join(class);
        std::fs::create_dir_all(&d).unwrap();
        for i in 0..*count {
            gradient(16, 16, n)
                .save_png(d.join(format!("{class}_{i}.png")))
                .unwrap();
            n += 1;
        }
    }
    root
}

/// Relative path to file bytes for every file under `root`.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_path_buf();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Independent xorshift-style byte source for random test images.
pub fn random_image(w: usize, h: usize, seed: u64) -> ImageBuffer {
    let mut s = seed.wrapping_mul(0x2545_f491_4f6c_dd1d) | 1;
    ImageBuffer::from_fn(w, h, |_, _| {
        let mut px = [0u8; 3];
        for c in &mut px {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            *c = (s >> 56) as u8;
        }
        px
    })
    .unwrap()
}

/// Brute-force references used as oracles. They share no code with the
/// library beyond the `ImageBuffer` container.
pub mod reference {
    use dataug_core::{FillMode, ImageBuffer};

    pub fn quantize(x: f64) -> u8 {
        let r = if x >= 0.0 {
            (x + 0.5).floor()
        } else {
            -((-x + 0.5).floor())
        };
        r.clamp(0.0, 255.0) as u8
    }

    /// Reflection by repeated folding about the edges.
    pub fn reflect(mut i: i64, n: i64) -> i64 {
        while i < 0 || i >= n {
            if i < 0 {
                i = -i - 1;
            } else {
                i = 2 * n - 1 - i;
            }
        }
        i
    }

    pub fn fetch(img: &ImageBuffer, x: i64, y: i64, c: usize, fill: FillMode) -> f64 {
        let (w, h) = (img.width() as i64, img.height() as i64);
        let inside = |x: i64, y: i64| img.pixel(x as usize, y as usize)[c] as f64;
        if (0..w).contains(&x) && (0..h).contains(&y) {
            return inside(x, y);
        }
        match fill {
            FillMode::Reflect => inside(reflect(x, w), reflect(y, h)),
            FillMode::Nearest => inside(x.clamp(0, w - 1), y.clamp(0, h - 1)),
            FillMode::Wrap => inside(x.rem_euclid(w), y.rem_euclid(h)),
            FillMode::Constant(v) => v as f64,
        }
    }

    /// Inverse of the affine part `[[a, b, tx], [c, d, ty]]` by Cramer's rule.
    pub fn invert(m: [[f64; 3]; 3]) -> [[f64; 3]; 2] {
        let [a, b, tx] = m[0];
        let [c, d, ty] = m[1];
        let det = a * d - b * c;
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        [
            [ia, ib, -(ia * tx + ib * ty)],
            [ic, id, -(ic * tx + id * ty)],
        ]
    }

    fn source_of(inv: &[[f64; 3]; 2], x: usize, y: usize) -> (f64, f64) {
        let (x, y) = (x as f64, y as f64);
        (
            inv[0][0] * x + inv[0][1] * y + inv[0][2],
            inv[1][0] * x + inv[1][1] * y + inv[1][2],
        )
    }

    pub fn warp_nearest(img: &ImageBuffer, forward: [[f64; 3]; 3], fill: FillMode) -> ImageBuffer {
        let inv = invert(forward);
        ImageBuffer::from_fn(img.width(), img.height(), |x, y| {
            let (sx, sy) = source_of(&inv, x, y);
            let (ix, iy) = (sx.round() as i64, sy.round() as i64);
            [0, 1, 2].map(|c| fetch(img, ix, iy, c, fill) as u8)
        })
        .unwrap()
    }

    /// Unquantized bilinear sample.
    pub fn bilinear_at(img: &ImageBuffer, sx: f64, sy: f64, c: usize, fill: FillMode) -> f64 {
        let (x0, y0) = (sx.floor() as i64, sy.floor() as i64);
        let (tx, ty) = (sx - sx.floor(), sy - sy.floor());
        let mut acc = 0.0;
        for (dy, wy) in [(0, 1.0 - ty), (1, ty)] {
            for (dx, wx) in [(0, 1.0 - tx), (1, tx)] {
                acc += wx * wy * fetch(img, x0 + dx, y0 + dy, c, fill);
            }
        }
        acc
    }

    pub fn warp_bilinear_f64(
        img: &ImageBuffer,
        forward: [[f64; 3]; 3],
        fill: FillMode,
    ) -> Vec<f64> {
        let inv = invert(forward);
        let mut out = Vec::with_capacity(img.as_raw().len());
        for y in 0..img.height() {
            for x in 0..img.width() {
                let (sx, sy) = source_of(&inv, x, y);
                for c in 0..3 {
                    out.push(bilinear_at(img, sx, sy, c, fill));
                }
            }
        }
        out
    }

    /// Half-pixel-centre bilinear resize with edge clamping.
    pub fn resize(img: &ImageBuffer, ow: usize, oh: usize) -> ImageBuffer {
        let (w, h) = (img.width() as f64, img.height() as f64);
        ImageBuffer::from_fn(ow, oh, |x, y| {
            let sx = ((x as f64 + 0.5) * w / ow as f64 - 0.5).clamp(0.0, w - 1.0);
            let sy = ((y as f64 + 0.5) * h / oh as f64 - 0.5).clamp(0.0, h - 1.0);
            [0, 1, 2].map(|c| quantize(bilinear_at(img, sx, sy, c, FillMode::Nearest)))
        })
        .unwrap()
    }

    pub fn splitmix64(state: &mut u64) -> u64 {
        *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}
