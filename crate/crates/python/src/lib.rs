//! Python bindings for `keyframe-entropy`.
//!
//! Frames cross the boundary as `Frame` objects holding 8-bit luma; shots as
//! `(start, end)` tuples; structured results (reports, layouts, evaluation
//! metrics) as plain dicts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::Serialize;

use keyframe_entropy as kf;
use kf::keyframes::{select_centers, DEFAULT_MIN_BIN_SIZE, DEFAULT_SD_THRESHOLD};
use kf::shots::{DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};
use kf::synth::{SynthConfig, SyntheticVideo};

create_exception!(
    keyframe_entropy,
    KeyframeError,
    PyException,
    "Pipeline failure; args are (message, exit_code)."
);

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// One grayscale frame.
#[pyclass(name = "Frame", module = "keyframe_entropy", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyFrame {
    inner: kf::Frame,
}

#[pymethods]
impl PyFrame {
    #[new]
    #[pyo3(signature = (width, height, pixels, index = 0))]
    fn new(width: usize, height: usize, pixels: Vec<u8>, index: usize) -> PyResult<Self> {
        let inner = kf::Frame::new(index, width, height, pixels).map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Frame of packed RGB triples converted to luma.
    #[staticmethod]
    #[pyo3(signature = (width, height, rgb, index = 0))]
    fn from_rgb(width: usize, height: usize, rgb: &[u8], index: usize) -> PyResult<Self> {
        if rgb.len() != width * height * 3 {
            return Err(value_error(format!(
                "expected {} RGB bytes for {width}x{height}, got {}",
                width * height * 3,
                rgb.len()
            )));
        }
        let luma = rgb
            .chunks_exact(3)
            .map(|p| kf::to_grayscale(p[0], p[1], p[2]))
            .collect();
        Self::new(width, height, luma, index)
    }

    #[getter]
    fn index(&self) -> usize {
        self.inner.index()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn with_index(&self, index: usize) -> Self {
        Self {
            inner: self.inner.clone().with_index(index),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.pixels().len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Frame(index={}, width={}, height={})",
            self.inner.index(),
            self.inner.width(),
            self.inner.height()
        )
    }
}

fn frames_of(frames: &[PyRef<'_, PyFrame>]) -> Vec<kf::Frame> {
    frames.iter().map(|f| f.inner.clone()).collect()
}

fn segments_of(values: Vec<f64>) -> PyResult<kf::SegmentedEntropy> {
    let n = values.len();
    kf::SegmentedEntropy::from_values(values)
        .ok_or_else(|| value_error(format!("expected 64 segment values, got {n}")))
}

#[pyfunction]
fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    kf::to_grayscale(r, g, b)
}

/// Grey-level counts (256 entries).
#[pyfunction]
fn histogram(frame: &PyFrame) -> Vec<u64> {
    kf::histogram(&frame.inner).counts().to_vec()
}

/// Shannon entropy in bits of a frame's grey levels.
#[pyfunction]
fn entropy(frame: &PyFrame) -> f64 {
    kf::frame_entropy(&frame.inner)
}

#[pyfunction]
fn modified_entropy(value: f64) -> u32 {
    kf::modified_entropy(value)
}

/// Entropies of the 8×8 segment grid, row-major.
#[pyfunction]
fn segmented_entropies(frame: &PyFrame) -> PyResult<Vec<f64>> {
    kf::segmented_entropies(&frame.inner)
        .map(|s| s.values().to_vec())
        .map_err(value_error)
}

#[pyfunction]
fn dissimilarity(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    Ok(kf::dissimilarity(&segments_of(a)?, &segments_of(b)?))
}

#[pyfunction]
fn correlation(a: &PyFrame, b: &PyFrame) -> PyResult<f64> {
    kf::correlation(&a.inner, &b.inner).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (frames, threshold = DEFAULT_CUT_THRESHOLD))]
fn detect_cuts(frames: Vec<PyRef<'_, PyFrame>>, threshold: f64) -> PyResult<Vec<(usize, usize)>> {
    let frames = frames_of(&frames);
    let shots = kf::detect_cuts(frames.into_iter().map(Ok), threshold).map_err(value_error)?;
    Ok(shots.into_iter().map(|s| (s.start, s.end)).collect())
}

#[pyfunction]
#[pyo3(signature = (shots, min_len = DEFAULT_MIN_SHOT_LEN))]
fn merge_short_shots(shots: Vec<(usize, usize)>, min_len: usize) -> PyResult<Vec<(usize, usize)>> {
    let mut expected = 0;
    for &(start, end) in &shots {
        if start != expected || end <= start {
            return Err(value_error("shots must tile [0, n) in order"));
        }
        expected = end;
    }
    let shots: Vec<kf::Shot> = shots.into_iter().map(|(s, e)| kf::Shot::new(s, e)).collect();
    Ok(kf::merge_short_shots(&shots, min_len)
        .into_iter()
        .map(|s| (s.start, s.end))
        .collect())
}

/// Bins as `(key, member frame indices)` in first-seen order.
#[pyfunction]
fn bin_frames(frames: Vec<PyRef<'_, PyFrame>>) -> Vec<(u32, Vec<usize>)> {
    kf::bin_frames(&frames_of(&frames))
        .into_iter()
        .map(|b| (b.key, b.members))
        .collect()
}

/// Centre-frame indices chosen from the bins of one shot's frames.
#[pyfunction]
#[pyo3(signature = (frames, min_bin_size = DEFAULT_MIN_BIN_SIZE, fallback = false))]
fn select_keyframes(frames: Vec<PyRef<'_, PyFrame>>, min_bin_size: usize, fallback: bool) -> Vec<usize> {
    let bins = kf::bin_frames(&frames_of(&frames));
    select_centers(&bins, min_bin_size, fallback)
        .into_iter()
        .map(|p| p.frame_index)
        .collect()
}

/// Drops near-duplicate candidates given as `(frame_index, segments)`.
/// Returns `(surviving indices, [(index, duplicate_of, sd), ...])`.
#[pyfunction]
#[pyo3(signature = (candidates, sd_threshold = DEFAULT_SD_THRESHOLD))]
#[allow(clippy::type_complexity)]
fn dedup(
    candidates: Vec<(usize, Vec<f64>)>,
    sd_threshold: f64,
) -> PyResult<(Vec<usize>, Vec<(usize, usize, f64)>)> {
    let keyframes = candidates
        .into_iter()
        .map(|(index, values)| {
            Ok(kf::KeyFrame {
                frame_index: index,
                shot: kf::Shot::new(index, index + 1),
                bin_key: 0,
                global_entropy: 0.0,
                segments: segments_of(values)?,
            })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let outcome = kf::dedup(&keyframes, sd_threshold);
    Ok((
        outcome.survivors.iter().map(|k| k.frame_index).collect(),
        outcome
            .eliminations
            .iter()
            .map(|e| (e.frame_index, e.duplicate_of, e.sd))
            .collect(),
    ))
}

fn ground_truth(indices: Vec<usize>, total_frames: usize) -> PyResult<kf::GroundTruth> {
    kf::GroundTruth::new(indices, total_frames).map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (detected, truth, total_frames, window = kf::eval::DEFAULT_MATCH_WINDOW))]
fn match_keyframes<'py>(
    py: Python<'py>,
    detected: Vec<usize>,
    truth: Vec<usize>,
    total_frames: usize,
    window: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let gt = ground_truth(truth, total_frames)?;
    to_py(py, &kf::match_keyframes(&detected, &gt, window))
}

/// Identified / redundant / missing counts with deviation and compactness.
#[pyfunction]
#[pyo3(signature = (detected, truth, total_frames, window = kf::eval::DEFAULT_MATCH_WINDOW))]
fn evaluate<'py>(
    py: Python<'py>,
    detected: Vec<usize>,
    truth: Vec<usize>,
    total_frames: usize,
    window: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let gt = ground_truth(truth, total_frames)?;
    let report = kf::eval::evaluate(&detected, &gt, window).map_err(value_error)?;
    to_py(py, &report)
}

/// Runs the full pipeline and returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (
    input, format, out, *, width = None, height = None, gt = None,
    cut_threshold = DEFAULT_CUT_THRESHOLD, min_shot_len = DEFAULT_MIN_SHOT_LEN,
    min_bin_size = DEFAULT_MIN_BIN_SIZE, sd_threshold = DEFAULT_SD_THRESHOLD,
    fallback_keyframe = false, match_window = kf::eval::DEFAULT_MATCH_WINDOW,
    seed_report = false,
))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline<'py>(
    py: Python<'py>,
    input: String,
    format: &str,
    out: PathBuf,
    width: Option<usize>,
    height: Option<usize>,
    gt: Option<PathBuf>,
    cut_threshold: f64,
    min_shot_len: usize,
    min_bin_size: usize,
    sd_threshold: f64,
    fallback_keyframe: bool,
    match_window: usize,
    seed_report: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let kind: kf::SourceKind = format.parse().map_err(value_error)?;
    let config = kf::PipelineConfig {
        source: kf::SourceSpec {
            kind,
            locator: kf::Locator::from(input),
            width,
            height,
        },
        params: kf::ExtractParams {
            cut_threshold,
            min_shot_len,
            min_bin_size,
            sd_threshold,
            fallback_keyframe,
        },
        match_window,
        output_dir: out,
        ground_truth: gt,
        seed_report,
    };
    let report = py
        .detach(|| kf::run_pipeline(&config))
        .map_err(|e| KeyframeError::new_err((e.to_string(), e.exit_code())))?;
    to_py(py, &report)
}

/// Writes a seeded synthetic video and returns its layout as a dict.
#[pyfunction]
#[pyo3(signature = (
    out, *, format = "pgm-dir", scenes = 3, frames_per_scene = 997, width = 320,
    height = 240, seed = 7, fade_len = 4, repeat_first = true,
))]
#[allow(clippy::too_many_arguments)]
fn generate_synthetic<'py>(
    py: Python<'py>,
    out: PathBuf,
    format: &str,
    scenes: usize,
    frames_per_scene: usize,
    width: usize,
    height: usize,
    seed: u64,
    fade_len: usize,
    repeat_first: bool,
) -> PyResult<Bound<'py, PyAny>> {
    if width < kf::frame::MIN_SIDE || height < kf::frame::MIN_SIDE || scenes == 0 || frames_per_scene == 0 {
        return Err(value_error("need at least one scene, one frame per scene and 8x8 frames"));
    }
    let kind: kf::SourceKind = format.parse().map_err(value_error)?;
    let video = SyntheticVideo::new(SynthConfig {
        scenes,
        frames_per_scene,
        width,
        height,
        seed,
        fade_len,
        repeat_first,
    });
    py.detach(|| -> std::io::Result<()> {
        fs::create_dir_all(&out)?;
        match kind {
            kf::SourceKind::ImageDirectory => video.write_pgm_dir(&out),
            kf::SourceKind::RawGray => video.write_raw(BufWriter::new(File::create(out.join("video.raw"))?)),
            kf::SourceKind::Y4m => video.write_y4m(BufWriter::new(File::create(out.join("video.y4m"))?)),
        }
    })?;
    to_py(py, video.layout())
}

/// Frames of a synthetic video without touching the disk.
#[pyfunction]
#[pyo3(signature = (*, scenes = 3, frames_per_scene = 997, width = 320, height = 240, seed = 7, fade_len = 4, repeat_first = true))]
#[allow(clippy::too_many_arguments)]
fn synthetic_frames(
    scenes: usize,
    frames_per_scene: usize,
    width: usize,
    height: usize,
    seed: u64,
    fade_len: usize,
    repeat_first: bool,
) -> PyResult<Vec<PyFrame>> {
    if width < kf::frame::MIN_SIDE || height < kf::frame::MIN_SIDE {
        return Err(value_error("frames must be at least 8x8"));
    }
    let video = SyntheticVideo::new(SynthConfig {
        scenes,
        frames_per_scene,
        width,
        height,
        seed,
        fade_len,
        repeat_first,
    });
    Ok(video.frames().map(|inner| PyFrame { inner }).collect())
}

#[pymodule(name = "keyframe_entropy")]
pub fn keyframe_entropy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("KeyframeError", m.py().get_type::<KeyframeError>())?;
    m.add_class::<PyFrame>()?;
    m.add_function(wrap_pyfunction!(to_grayscale, m)?)?;
    m.add_function(wrap_pyfunction!(histogram, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(modified_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(segmented_entropies, m)?)?;
    m.add_function(wrap_pyfunction!(dissimilarity, m)?)?;
    m.add_function(wrap_pyfunction!(correlation, m)?)?;
    m.add_function(wrap_pyfunction!(detect_cuts, m)?)?;
    m.add_function(wrap_pyfunction!(merge_short_shots, m)?)?;
    m.add_function(wrap_pyfunction!(bin_frames, m)?)?;
    m.add_function(wrap_pyfunction!(select_keyframes, m)?)?;
    m.add_function(wrap_pyfunction!(dedup, m)?)?;
    m.add_function(wrap_pyfunction!(match_keyframes, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_frames, m)?)?;
    Ok(())
}
