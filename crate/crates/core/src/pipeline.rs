//! End-to-end extraction: frames → shots → per-shot entropy bins → key-frame
//! candidates → global duplicate filter → optional evaluation, with key-frame
//! images and a JSON report written to an output directory.
//!
//! Frames are read in small chunks whose entropies are computed in parallel.
//! Every frame is appended to an anonymous spill file until its shot is
//! settled; only the selected centre frames are read back, so resident pixel
//! data stays bounded by the chunk size regardless of shot or video length.

use std::collections::VecDeque;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{frame_entropy, DimensionError};
use crate::eval::{self, EvalError, EvalReport, GroundTruth, DEFAULT_MATCH_WINDOW};
use crate::frame::{Frame, MIN_SIDE};
use crate::ingest::{self, pgm, FrameStream, IngestError, SourceSpec};
use crate::keyframes::{
    bin_entropies, select_centers, Deduplicator, Elimination, KeyFrame, Verdict,
    DEFAULT_MIN_BIN_SIZE, DEFAULT_SD_THRESHOLD,
};
use crate::shots::{Cut, CutDetector, Shot, ShotError, ShotMerger, DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};

/// Frames read from the source before their entropies are computed.
pub const CHUNK_FRAMES: usize = 16;

pub const REPORT_FILE: &str = "report.json";
pub const SEED_GROUND_TRUTH_FILE: &str = "ground_truth.seed.txt";

/// JSON schema every `report.json` conforms to.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Shots(#[from] ShotError),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("ground truth covers {expected} frames but the video has {actual}")]
    FrameCountMismatch { expected: usize, actual: usize },
    #[error("output directory {path} is not usable: {source}")]
    OutputDir { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("spill buffer: {0}")]
    Spill(io::Error),
}

impl PipelineError {
    /// Process exit status: 2 bad config, 3 ingest, 4 evaluation, 1 other I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::OutputDir { .. } => 2,
            PipelineError::Shots(ShotError::InvalidThreshold(_)) => 2,
            PipelineError::Ingest(_) | PipelineError::Shots(_) | PipelineError::Dimension(_) => 3,
            PipelineError::Eval(_) | PipelineError::FrameCountMismatch { .. } => 4,
            PipelineError::Write { .. } | PipelineError::Spill(_) => 1,
        }
    }
}

/// Tunables of the extraction itself, independent of where frames come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractParams {
    pub cut_threshold: f64,
    pub min_shot_len: usize,
    pub min_bin_size: usize,
    pub sd_threshold: f64,
    pub fallback_keyframe: bool,
}

impl Default for ExtractParams {
    fn default() -> Self {
        Self {
            cut_threshold: DEFAULT_CUT_THRESHOLD,
            min_shot_len: DEFAULT_MIN_SHOT_LEN,
            min_bin_size: DEFAULT_MIN_BIN_SIZE,
            sd_threshold: DEFAULT_SD_THRESHOLD,
            fallback_keyframe: false,
        }
    }
}

impl ExtractParams {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.cut_threshold > 0.0 && self.cut_threshold <= 1.0) {
            return Err(PipelineError::Config(format!(
                "cut threshold must lie in (0, 1], got {}",
                self.cut_threshold
            )));
        }
        if !(self.sd_threshold.is_finite() && self.sd_threshold >= 0.0) {
            return Err(PipelineError::Config(format!(
                "sd threshold must be a finite value >= 0, got {}",
                self.sd_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub source: SourceSpec,
    #[serde(flatten)]
    pub params: ExtractParams,
    pub match_window: usize,
    pub output_dir: PathBuf,
    pub ground_truth: Option<PathBuf>,
    /// Also write the surviving key-frames as an editable ground-truth file.
    #[serde(default)]
    pub seed_report: bool,
}

impl PipelineConfig {
    pub fn new(source: SourceSpec, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            source,
            params: ExtractParams::default(),
            match_window: DEFAULT_MATCH_WINDOW,
            output_dir: output_dir.into(),
            ground_truth: None,
            seed_report: false,
        }
    }
}

/// Bin summary for the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinRecord {
    pub key: u32,
    pub size: usize,
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub start: usize,
    pub end: usize,
    pub bins: Vec<BinRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFrameRecord {
    #[serde(flatten)]
    pub keyframe: KeyFrame,
    pub fallback: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryStats {
    /// Most decoded frames held at once.
    pub peak_resident_frames: usize,
    /// Most frames parked in the spill buffer at once.
    pub peak_spilled_frames: usize,
}

/// Everything the extraction stage produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub total_frames: usize,
    pub width: usize,
    pub height: usize,
    pub cuts: Vec<Cut>,
    pub raw_shot_count: usize,
    pub shots: Vec<ShotRecord>,
    pub candidates: Vec<KeyFrameRecord>,
    pub keyframes: Vec<KeyFrameRecord>,
    pub eliminations: Vec<Elimination>,
    pub memory: MemoryStats,
}

impl Extraction {
    pub fn shot_list(&self) -> Vec<Shot> {
        self.shots.iter().map(|s| Shot::new(s.start, s.end)).collect()
    }

    pub fn keyframe_indices(&self) -> Vec<usize> {
        self.keyframes.iter().map(|k| k.keyframe.frame_index).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: ToolInfo,
    /// Seconds since the Unix epoch when the report was written.
    pub timestamp: u64,
    pub config: PipelineConfig,
    #[serde(flatten)]
    pub extraction: Extraction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalReport>,
}

/// Frames parked on disk, one anonymous file per raw shot so settled shots
/// can be dropped whole.
struct SpillBuffer {
    frame_bytes: usize,
    width: usize,
    height: usize,
    chunks: VecDeque<SpillChunk>,
    split_pending: bool,
    spilled: usize,
    peak: usize,
}

struct SpillChunk {
    start: usize,
    count: usize,
    file: BufWriter<File>,
}

impl SpillBuffer {
    fn new(width: usize, height: usize) -> Self {
        Self {
            frame_bytes: width * height,
            width,
            height,
            chunks: VecDeque::new(),
            split_pending: false,
            spilled: 0,
            peak: 0,
        }
    }

    /// Makes the next append open a fresh chunk, so a later release can
    /// drop everything before it.
    fn split(&mut self) {
        self.split_pending = true;
    }

    fn append(&mut self, frame: &Frame) -> io::Result<()> {
        if self.split_pending || self.chunks.is_empty() {
            self.chunks.push_back(SpillChunk {
                start: frame.index(),
                count: 0,
                file: BufWriter::new(tempfile::tempfile()?),
            });
            self.split_pending = false;
        }
        let chunk = self.chunks.back_mut().expect("chunk exists");
        debug_assert_eq!(chunk.start + chunk.count, frame.index());
        chunk.file.write_all(frame.pixels())?;
        chunk.count += 1;
        self.spilled += 1;
        self.peak = self.peak.max(self.spilled);
        Ok(())
    }

    fn load(&mut self, index: usize) -> io::Result<Frame> {
        let chunk = self
            .chunks
            .iter_mut()
            .find(|c| (c.start..c.start + c.count).contains(&index))
            .ok_or_else(|| io::Error::new(io::ErrorKind::NotFound, format!("frame {index} not spilled")))?;
        chunk.file.flush()?;
        let file = chunk.file.get_mut();
        let end = file.stream_position()?;
        file.seek(SeekFrom::Start(((index - chunk.start) * self.frame_bytes) as u64))?;
        let mut pixels = vec![0u8; self.frame_bytes];
        file.read_exact(&mut pixels)?;
        file.seek(SeekFrom::Start(end))?;
        Ok(Frame::new(index, self.width, self.height, pixels).expect("spilled frame size"))
    }

    /// Drops chunks that lie entirely before `index`.
    fn release_before(&mut self, index: usize) {
        while let Some(front) = self.chunks.front() {
            if front.start + front.count <= index {
                self.spilled -= front.count;
                self.chunks.pop_front();
            } else {
                break;
            }
        }
    }
}

/// Running count of decoded frames held by the pipeline.
#[derive(Debug, Default)]
struct Residency {
    current: usize,
    peak: usize,
}

impl Residency {
    fn acquire(&mut self, n: usize) {
        self.current += n;
        self.peak = self.peak.max(self.current);
    }

    fn release(&mut self, n: usize) {
        self.current -= n;
    }
}

/// Receives each surviving key-frame together with its pixels.
pub trait KeyFrameSink {
    fn keep(&mut self, keyframe: &KeyFrame, frame: &Frame) -> Result<Option<String>, PipelineError>;
}

/// Discards pixels; useful when only the report is wanted.
pub struct NullSink;

impl KeyFrameSink for NullSink {
    fn keep(&mut self, _: &KeyFrame, _: &Frame) -> Result<Option<String>, PipelineError> {
        Ok(None)
    }
}

/// Writes `keyframe_<index:06>.pgm` files into a directory.
pub struct PgmDirSink {
    dir: PathBuf,
}

impl PgmDirSink {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }
}

pub fn keyframe_file_name(index: usize) -> String {
    format!("keyframe_{index:06}.pgm")
}

impl KeyFrameSink for PgmDirSink {
    fn keep(&mut self, keyframe: &KeyFrame, frame: &Frame) -> Result<Option<String>, PipelineError> {
        let name = keyframe_file_name(keyframe.frame_index);
        let path = self.dir.join(&name);
        let write = || -> io::Result<()> {
            let out = BufWriter::new(File::create(&path)?);
            pgm::write(out, frame.width(), frame.height(), frame.pixels())
        };
        write().map_err(|source| PipelineError::Write {
            path: path.clone(),
            source,
        })?;
        Ok(Some(name))
    }
}

struct Extractor<'a, S> {
    params: &'a ExtractParams,
    sink: &'a mut S,
    detector: CutDetector,
    merger: ShotMerger,
    spill: Option<SpillBuffer>,
    residency: Residency,
    /// Entropy of every frame seen so far; index = frame index.
    entropies: Vec<f64>,
    dedup: Deduplicator,
    raw_shot_count: usize,
    shots: Vec<ShotRecord>,
    candidates: Vec<KeyFrameRecord>,
    keyframes: Vec<KeyFrameRecord>,
    eliminations: Vec<Elimination>,
}

impl<'a, S: KeyFrameSink> Extractor<'a, S> {
    fn new(params: &'a ExtractParams, sink: &'a mut S) -> Result<Self, PipelineError> {
        params.validate()?;
        Ok(Self {
            params,
            sink,
            detector: CutDetector::new(params.cut_threshold)?,
            merger: ShotMerger::new(params.min_shot_len),
            spill: None,
            residency: Residency::default(),
            entropies: Vec::new(),
            dedup: Deduplicator::new(params.sd_threshold),
            raw_shot_count: 0,
            shots: Vec::new(),
            candidates: Vec::new(),
            keyframes: Vec::new(),
            eliminations: Vec::new(),
        })
    }

    fn run(mut self, mut stream: FrameStream) -> Result<Extraction, PipelineError> {
        loop {
            let mut chunk = Vec::with_capacity(CHUNK_FRAMES);
            for item in stream.by_ref().take(CHUNK_FRAMES) {
                chunk.push(item?);
                self.residency.acquire(1);
            }
            if chunk.is_empty() {
                break;
            }
            let entropies: Vec<f64> = chunk.par_iter().map(frame_entropy).collect();
            for (frame, en) in chunk.into_iter().zip(entropies) {
                self.accept(frame, en)?;
            }
        }

        let total_frames = self.detector.frames_seen();
        if total_frames == 0 {
            return Err(ShotError::EmptyStream.into());
        }
        if let Some(last) = self.detector.finish() {
            self.close_raw_shot(last)?;
        }
        if let Some(shot) = self.merger.finish() {
            self.process_shot(shot)?;
        }

        let spill = self.spill.as_ref().expect("frames were spilled");
        Ok(Extraction {
            total_frames,
            width: spill.width,
            height: spill.height,
            cuts: self.detector.cuts().to_vec(),
            raw_shot_count: self.raw_shot_count,
            shots: self.shots,
            candidates: self.candidates,
            keyframes: self.keyframes,
            eliminations: self.eliminations,
            memory: MemoryStats {
                peak_resident_frames: self.residency.peak,
                peak_spilled_frames: spill.peak,
            },
        })
    }

    fn accept(&mut self, frame: Frame, entropy: f64) -> Result<(), PipelineError> {
        debug_assert_eq!(frame.index(), self.entropies.len());
        self.entropies.push(entropy);
        if self.spill.is_none() {
            // every key-frame candidate is cut into the segment grid later
            if frame.width() < MIN_SIDE || frame.height() < MIN_SIDE {
                return Err(PipelineError::Dimension(DimensionError {
                    index: frame.index(),
                    width: frame.width(),
                    height: frame.height(),
                }));
            }
            self.spill = Some(SpillBuffer::new(frame.width(), frame.height()));
        }

        let had_previous = self.detector.frames_seen() > 0;
        let closed = self.detector.push(frame)?;
        // the detector keeps this frame and drops the one before it
        if had_previous {
            self.residency.release(1);
        }
        if let Some(raw) = closed {
            self.close_raw_shot(raw)?;
        }

        let spill = self.spill.as_mut().expect("initialised above");
        let current = self.detector.last_frame().expect("frame just pushed");
        spill.append(current).map_err(PipelineError::Spill)
    }

    fn close_raw_shot(&mut self, raw: Shot) -> Result<(), PipelineError> {
        self.raw_shot_count += 1;
        if let Some(spill) = self.spill.as_mut() {
            spill.split();
        }
        if let Some(settled) = self.merger.push(raw) {
            self.process_shot(settled)?;
        }
        Ok(())
    }

    fn process_shot(&mut self, shot: Shot) -> Result<(), PipelineError> {
        let bins = bin_entropies((shot.start..shot.end).map(|i| (i, self.entropies[i])));
        let mut picks = select_centers(&bins, self.params.min_bin_size, self.params.fallback_keyframe);

        self.shots.push(ShotRecord {
            start: shot.start,
            end: shot.end,
            bins: bins
                .iter()
                .map(|b| BinRecord {
                    key: b.key,
                    size: b.len(),
                    selected: picks.iter().find(|p| p.bin_key == b.key).map(|p| p.frame_index),
                })
                .collect(),
        });

        picks.sort_by_key(|p| p.frame_index);
        let spill = self.spill.as_mut().expect("shot frames were spilled");
        for pick in picks {
            let frame = spill.load(pick.frame_index).map_err(PipelineError::Spill)?;
            self.residency.acquire(1);
            let keyframe = KeyFrame::from_frame(&frame, shot)?;
            let mut record = KeyFrameRecord {
                keyframe,
                fallback: pick.fallback,
                image: None,
            };
            self.candidates.push(record.clone());
            match self.dedup.offer(&record.keyframe) {
                Verdict::Kept => {
                    record.image = self.sink.keep(&record.keyframe, &frame)?;
                    self.keyframes.push(record);
                }
                Verdict::Eliminated(e) => self.eliminations.push(e),
            }
            drop(frame);
            self.residency.release(1);
        }
        spill.release_before(shot.end);
        Ok(())
    }
}

/// Runs segmentation, selection and duplicate filtering over `stream`,
/// handing every surviving key-frame to `sink`.
pub fn extract<S: KeyFrameSink>(
    stream: FrameStream,
    params: &ExtractParams,
    sink: &mut S,
) -> Result<Extraction, PipelineError> {
    Extractor::new(params, sink)?.run(stream)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn prepare_output_dir(dir: &Path) -> Result<(), PipelineError> {
    let fail = |source| PipelineError::OutputDir {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(fail)?;
    // stale key-frames from an earlier run would no longer match the report
    for entry in fs::read_dir(dir).map_err(fail)? {
        let path = entry.map_err(fail)?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("keyframe_") && name.ends_with(".pgm") {
            fs::remove_file(&path).map_err(fail)?;
        }
    }
    let probe = dir.join(".keyframe-write-probe");
    File::create(&probe).map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes).map_err(|source| PipelineError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Serialises a report the way `report.json` stores it.
pub fn report_json(report: &Report) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialises");
    text.push('\n');
    text
}

/// Runs the whole pipeline for `config`, writing key-frame images and
/// `report.json` into the output directory.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Report, PipelineError> {
    config.params.validate()?;
    config
        .source
        .validate()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let truth = config
        .ground_truth
        .as_deref()
        .map(GroundTruth::load)
        .transpose()?;
    let stream = ingest::open_source(&config.source)?;
    run_with_stream(config, stream, truth)
}

/// [`run_pipeline`] over an already-open stream and pre-loaded ground truth.
pub fn run_with_stream(
    config: &PipelineConfig,
    stream: FrameStream,
    truth: Option<GroundTruth>,
) -> Result<Report, PipelineError> {
    prepare_output_dir(&config.output_dir)?;
    let mut sink = PgmDirSink::new(&config.output_dir);
    let extraction = extract(stream, &config.params, &mut sink)?;

    let evaluation = match &truth {
        Some(gt) => {
            if gt.total_frames != extraction.total_frames {
                return Err(PipelineError::FrameCountMismatch {
                    expected: gt.total_frames,
                    actual: extraction.total_frames,
                });
            }
            Some(eval::evaluate(&extraction.keyframe_indices(), gt, config.match_window)?)
        }
        None => None,
    };

    if config.seed_report {
        let seed = GroundTruth {
            keyframe_indices: extraction.keyframe_indices(),
            total_frames: extraction.total_frames,
        };
        let text = format!(
            "# detected key-frames; edit into a reference annotation\n{}",
            seed.to_text()
        );
        write_file(&config.output_dir.join(SEED_GROUND_TRUTH_FILE), text.as_bytes())?;
    }

    let report = Report {
        tool: ToolInfo {
            name: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        timestamp: unix_now(),
        config: config.clone(),
        extraction,
        evaluation,
    };
    write_file(&config.output_dir.join(REPORT_FILE), report_json(&report).as_bytes())?;
    Ok(report)
}
