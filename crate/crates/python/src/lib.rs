//! Python bindings: the `dataug` extension module.

use std::path::PathBuf;

use dataug_core::advanced::{
    patch_shuffle as core_patch_shuffle, random_erase as core_random_erase,
    sample_pairing as core_sample_pairing, EraseParams, PatchShuffleParams, DEFAULT_PAIRING_CROP,
};
use dataug_core::geometry::{self, image_center, AffineTransform, Interp};
use dataug_core::noise::{add_gaussian_noise, salt_pepper_with_count, SaltPepperParams};
use dataug_core::photometric::{self, BlurKind, Channel, Kernel3};
use dataug_core::pipeline::{self, LabelRule, PipelineConfig, Problem, RenderSettings};
use dataug_core::sampling::parse_technique_list;
use dataug_core::{Error, FillMode, ImageBuffer, RandomStream, Technique, TechniqueSpec};
use pyo3::exceptions::{PyFileNotFoundError, PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NotFound(p) => PyFileNotFoundError::new_err(p.display().to_string()),
        e @ (Error::Io { .. } | Error::Aborted { .. }) => PyOSError::new_err(e.to_string()),
        e @ (Error::InvalidArgument(_) | Error::Manifest { .. } | Error::Config { .. }) => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for dataug_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn render(interp: &str, fill: &str, cval: u8) -> PyResult<(Interp, FillMode)> {
    Ok((interp.parse().py()?, FillMode::parse(fill, cval).py()?))
}

/// An RGB image with 8-bit channels, stored row-major and interleaved.
#[pyclass(name = "Image", module = "dataug", frozen)]
struct PyImage {
    inner: ImageBuffer,
}

fn wrap(inner: ImageBuffer) -> PyImage {
    PyImage { inner }
}

#[pymethods]
impl PyImage {
    #[new]
    #[pyo3(signature = (width, height, fill = 0))]
    fn new(width: usize, height: usize, fill: u8) -> PyResult<Self> {
        Ok(wrap(ImageBuffer::new(width, height, fill).py()?))
    }

    /// Builds an image from `width * height * 3` interleaved RGB bytes.
    #[staticmethod]
    fn from_bytes(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        Ok(wrap(ImageBuffer::from_raw(width, height, data).py()?))
    }

    /// Decodes a PNG or JPEG file, converting to RGB.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(wrap(ImageBuffer::load(path).py()?))
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.as_raw())
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<(u8, u8, u8)> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!(
                "pixel ({x}, {y}) is out of bounds"
            )));
        }
        let [r, g, b] = self.inner.pixel(x, y);
        Ok((r, g, b))
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save_png(path).py()
    }

    fn encode_png<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        Ok(PyBytes::new(py, &self.inner.encode_png().py()?))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(width={}, height={})",
            self.inner.width(),
            self.inner.height()
        )
    }
}

/// Deterministic xoshiro256** stream seeded through SplitMix64.
#[pyclass(name = "RandomStream", module = "dataug")]
struct PyRandomStream {
    inner: RandomStream,
}

#[pymethods]
impl PyRandomStream {
    #[new]
    fn new(seed: u64) -> Self {
        Self {
            inner: RandomStream::new(seed),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn next_f64(&mut self) -> f64 {
        self.inner.next_f64()
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.inner.uniform(lo, hi)
    }

    fn below(&mut self, n: u64) -> PyResult<u64> {
        if n == 0 {
            return Err(PyValueError::new_err("n must be positive"));
        }
        Ok(self.inner.below(n))
    }
}

fn technique(name: &str) -> PyResult<Technique> {
    name.parse().py()
}

#[pyfunction]
fn derive_seed(
    master: u64,
    source_index: u64,
    technique_name: &str,
    replicate: u64,
) -> PyResult<u64> {
    Ok(dataug_core::sampling::derive_seed(
        master,
        source_index,
        technique(technique_name)?,
        replicate,
    ))
}

#[pyfunction]
fn clamp_round(x: f64) -> PyResult<u8> {
    dataug_core::image::clamp_round(x).py()
}

#[pyfunction]
fn resize(img: &PyImage, width: usize, height: usize) -> PyResult<PyImage> {
    Ok(wrap(
        dataug_core::image::resize_bilinear(&img.inner, width, height).py()?,
    ))
}

/// Warps by a forward 3x3 affine matrix (last row `[0, 0, 1]`).
#[pyfunction]
#[pyo3(signature = (img, matrix, interp = "bilinear", fill = "reflect", cval = 0))]
fn warp(
    img: &PyImage,
    matrix: [[f64; 3]; 3],
    interp: &str,
    fill: &str,
    cval: u8,
) -> PyResult<PyImage> {
    let (interp, fill) = render(interp, fill, cval)?;
    let t = AffineTransform::from_matrix(matrix).py()?;
    Ok(wrap(
        geometry::warp_affine(&img.inner, &t, interp, fill).py()?,
    ))
}

fn warp_about<F>(img: &PyImage, interp: &str, fill: &str, cval: u8, build: F) -> PyResult<PyImage>
where
    F: FnOnce(f64, f64) -> dataug_core::Result<AffineTransform>,
{
    let (interp, fill) = render(interp, fill, cval)?;
    let (cx, cy) = image_center(&img.inner);
    let t = build(cx, cy).py()?;
    Ok(wrap(
        geometry::warp_affine(&img.inner, &t, interp, fill).py()?,
    ))
}

/// Rotates about the image centre; positive angles turn counter-clockwise.
#[pyfunction]
#[pyo3(signature = (img, degrees, interp = "bilinear", fill = "reflect", cval = 0))]
fn rotate(img: &PyImage, degrees: f64, interp: &str, fill: &str, cval: u8) -> PyResult<PyImage> {
    warp_about(img, interp, fill, cval, |cx, cy| {
        Ok(geometry::make_rotation(degrees, cx, cy))
    })
}

/// Translates by `(dx, dy)` pixels.
#[pyfunction]
#[pyo3(signature = (img, dx, dy, interp = "bilinear", fill = "reflect", cval = 0))]
fn shift(img: &PyImage, dx: f64, dy: f64, interp: &str, fill: &str, cval: u8) -> PyResult<PyImage> {
    warp_about(img, interp, fill, cval, |_, _| {
        Ok(geometry::make_translation(dx, dy))
    })
}

#[pyfunction]
#[pyo3(signature = (img, degrees, interp = "bilinear", fill = "reflect", cval = 0))]
fn shear(img: &PyImage, degrees: f64, interp: &str, fill: &str, cval: u8) -> PyResult<PyImage> {
    warp_about(img, interp, fill, cval, |cx, cy| {
        geometry::make_shear(degrees, cx, cy)
    })
}

/// Factors above 1 zoom out, below 1 zoom in.
#[pyfunction]
#[pyo3(signature = (img, fx, fy = None, interp = "bilinear", fill = "reflect", cval = 0))]
fn zoom(
    img: &PyImage,
    fx: f64,
    fy: Option<f64>,
    interp: &str,
    fill: &str,
    cval: u8,
) -> PyResult<PyImage> {
    let fy = fy.unwrap_or(fx);
    warp_about(img, interp, fill, cval, |cx, cy| {
        geometry::make_zoom(fx, fy, cx, cy)
    })
}

#[pyfunction]
fn flip_h(img: &PyImage) -> PyImage {
    wrap(geometry::flip_h(&img.inner))
}

#[pyfunction]
fn flip_v(img: &PyImage) -> PyImage {
    wrap(geometry::flip_v(&img.inner))
}

#[pyfunction]
fn adjust_brightness(img: &PyImage, factor: f64) -> PyResult<PyImage> {
    Ok(wrap(
        photometric::adjust_brightness(&img.inner, factor).py()?,
    ))
}

/// Keeps one of `"R"`, `"G"`, `"B"` and zeroes the others.
#[pyfunction]
fn isolate_channel(img: &PyImage, channel: &str) -> PyResult<PyImage> {
    let channel: Channel = channel.parse().py()?;
    Ok(wrap(photometric::isolate_channel(&img.inner, channel)))
}

fn filter(img: &PyImage, k: &Kernel3, fill: &str, cval: u8) -> PyResult<PyImage> {
    let fill = FillMode::parse(fill, cval).py()?;
    Ok(wrap(photometric::convolve3(&img.inner, k, fill)))
}

#[pyfunction]
#[pyo3(signature = (img, kind = "gaussian", fill = "reflect", cval = 0))]
fn blur(img: &PyImage, kind: &str, fill: &str, cval: u8) -> PyResult<PyImage> {
    let kind: BlurKind = kind.parse().py()?;
    filter(img, &kind.kernel(), fill, cval)
}

#[pyfunction]
#[pyo3(signature = (img, fill = "reflect", cval = 0))]
fn sharpen(img: &PyImage, fill: &str, cval: u8) -> PyResult<PyImage> {
    filter(img, &Kernel3::sharpen(), fill, cval)
}

/// 3x3 correlation with arbitrary weights.
#[pyfunction]
#[pyo3(signature = (img, weights, fill = "reflect", cval = 0))]
fn convolve3(img: &PyImage, weights: [[f64; 3]; 3], fill: &str, cval: u8) -> PyResult<PyImage> {
    filter(img, &Kernel3::new(weights).py()?, fill, cval)
}

#[pyfunction]
#[pyo3(signature = (img, seed, variability = dataug_core::noise::DEFAULT_VARIABILITY))]
fn gaussian_noise(img: &PyImage, seed: u64, variability: f64) -> PyResult<PyImage> {
    let mut rng = RandomStream::new(seed);
    Ok(wrap(
        add_gaussian_noise(&img.inner, variability, &mut rng).py()?,
    ))
}

/// Returns `(image, corrupted_pixel_count)`.
#[pyfunction]
#[pyo3(signature = (img, seed, amount, salt_ratio = 0.5))]
fn salt_pepper(
    img: &PyImage,
    seed: u64,
    amount: f64,
    salt_ratio: f64,
) -> PyResult<(PyImage, usize)> {
    let p = SaltPepperParams::new(amount, salt_ratio).py()?;
    let (out, n) = salt_pepper_with_count(&img.inner, p, &mut RandomStream::new(seed));
    Ok((wrap(out), n))
}

/// Returns `(image, (x, y, width, height) or None)`.
#[pyfunction]
#[pyo3(signature = (img, seed, area = (0.02, 0.4), aspect = (0.3, 3.33)))]
#[allow(clippy::type_complexity)]
fn random_erase(
    img: &PyImage,
    seed: u64,
    area: (f64, f64),
    aspect: (f64, f64),
) -> PyResult<(PyImage, Option<(usize, usize, usize, usize)>)> {
    let params = EraseParams {
        area_lo: area.0,
        area_hi: area.1,
        aspect_lo: aspect.0,
        aspect_hi: aspect.1,
        ..EraseParams::default()
    };
    let out = core_random_erase(&img.inner, &params, &mut RandomStream::new(seed)).py()?;
    Ok((
        wrap(out.image),
        out.rect.map(|r| (r.x, r.y, r.width, r.height)),
    ))
}

/// Returns `(image, shuffled_window_count)`.
#[pyfunction]
#[pyo3(signature = (img, seed, n = 2, p = 0.05))]
fn patch_shuffle(img: &PyImage, seed: u64, n: usize, p: f64) -> PyResult<(PyImage, usize)> {
    let params = PatchShuffleParams::new(n, p).py()?;
    let out = core_patch_shuffle(&img.inner, params, &mut RandomStream::new(seed)).py()?;
    Ok((wrap(out.image), out.shuffled_windows))
}

#[pyfunction]
#[pyo3(signature = (a, b, seed, crop = DEFAULT_PAIRING_CROP))]
fn sample_pairing(a: &PyImage, b: &PyImage, seed: u64, crop: usize) -> PyResult<PyImage> {
    Ok(wrap(
        core_sample_pairing(&a.inner, &b.inner, crop, &mut RandomStream::new(seed)).py()?,
    ))
}

fn label_rule(name: &str) -> PyResult<LabelRule> {
    name.parse().py()
}

/// Lists `(path, label, source_index)` for every decodable image.
#[pyfunction]
#[pyo3(signature = (input_dir, label_rule = "parent-dir"))]
fn scan(input_dir: PathBuf, label_rule: &str) -> PyResult<Vec<(PathBuf, String, usize)>> {
    let report = pipeline::scan_dataset(&input_dir, self::label_rule(label_rule)?).py()?;
    Ok(report
        .entries
        .into_iter()
        .map(|e| (e.path, e.label, e.source_index))
        .collect())
}

/// Runs the augmentation pipeline and returns a summary dict.
#[pyfunction]
#[pyo3(signature = (
    input_dir, output_dir, seed, techniques = None, size = pipeline::DEFAULT_SIZE,
    fill = "reflect", cval = 0, interp = "bilinear", label_rule = "parent-dir",
    balance = None, jobs = None
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    input_dir: PathBuf,
    output_dir: PathBuf,
    seed: u64,
    techniques: Option<&str>,
    size: usize,
    fill: &str,
    cval: u8,
    interp: &str,
    label_rule: &str,
    balance: Option<f64>,
    jobs: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let (interp, fill) = render(interp, fill, cval)?;
    let mut cfg = PipelineConfig::new(input_dir, output_dir, seed);
    if let Some(list) = techniques {
        cfg.techniques = parse_technique_list(list)
            .py()?
            .into_iter()
            .map(TechniqueSpec::new)
            .collect();
    }
    cfg.render = RenderSettings { size, fill, interp };
    cfg.label_rule = self::label_rule(label_rule)?;
    cfg.balance_ratio = balance;
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    let report = py.detach(|| pipeline::run(&cfg)).py()?;
    let out = PyDict::new(py);
    out.set_item("generated", report.manifest.len())?;
    out.set_item("sources", report.dataset_size)?;
    out.set_item("manifest", report.manifest_path)?;
    out.set_item("failures", report.failures.len())?;
    Ok(out)
}

/// Problems found, as `(file, description)`; empty means verified.
#[pyfunction]
fn verify(manifest: PathBuf) -> PyResult<Vec<(PathBuf, String)>> {
    let report = pipeline::verify_manifest(&manifest).py()?;
    Ok(report
        .issues
        .into_iter()
        .map(|i| {
            let what = match i.problem {
                Problem::Missing => "missing".to_string(),
                Problem::HashMismatch { expected, actual } => {
                    format!("sha256 mismatch: expected {expected}, found {actual}")
                }
                Problem::DuplicateRow => "listed more than once".to_string(),
            };
            (i.file, what)
        })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (input_dir, label_rule = "parent-dir"))]
fn stats(input_dir: PathBuf, label_rule: &str) -> PyResult<String> {
    dataug_core::cli::stats_report(&input_dir, self::label_rule(label_rule)?).py()
}

#[pyfunction]
#[pyo3(signature = (input_dir, technique_name, seed, count = 4, size = pipeline::DEFAULT_SIZE))]
fn preview(
    input_dir: PathBuf,
    technique_name: &str,
    seed: u64,
    count: usize,
    size: usize,
) -> PyResult<PyImage> {
    let entries = pipeline::scan_dataset(&input_dir, LabelRule::ParentDir)
        .py()?
        .entries;
    let spec = TechniqueSpec::new(technique(technique_name)?);
    let render = RenderSettings {
        size,
        ..RenderSettings::default()
    };
    Ok(wrap(
        pipeline::preview_sheet(&entries, &spec, count, seed, &render).py()?,
    ))
}

#[pymodule]
fn dataug(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyRandomStream>()?;
    m.add(
        "TECHNIQUES",
        Technique::ALL.iter().map(|t| t.name()).collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(clamp_round, m)?)?;
    m.add_function(wrap_pyfunction!(resize, m)?)?;
    m.add_function(wrap_pyfunction!(warp, m)?)?;
    m.add_function(wrap_pyfunction!(rotate, m)?)?;
    m.add_function(wrap_pyfunction!(shift, m)?)?;
    m.add_function(wrap_pyfunction!(shear, m)?)?;
    m.add_function(wrap_pyfunction!(zoom, m)?)?;
    m.add_function(wrap_pyfunction!(flip_h, m)?)?;
    m.add_function(wrap_pyfunction!(flip_v, m)?)?;
    m.add_function(wrap_pyfunction!(adjust_brightness, m)?)?;
    m.add_function(wrap_pyfunction!(isolate_channel, m)?)?;
    m.add_function(wrap_pyfunction!(blur, m)?)?;
    m.add_function(wrap_pyfunction!(sharpen, m)?)?;
    m.add_function(wrap_pyfunction!(convolve3, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_noise, m)?)?;
    m.add_function(wrap_pyfunction!(salt_pepper, m)?)?;
    m.add_function(wrap_pyfunction!(random_erase, m)?)?;
    m.add_function(wrap_pyfunction!(patch_shuffle, m)?)?;
    m.add_function(wrap_pyfunction!(sample_pairing, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(stats, m)?)?;
    m.add_function(wrap_pyfunction!(preview, m)?)?;
    Ok(())
}
