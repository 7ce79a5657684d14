//! Frame sources: PGM directories, raw 8-bit luma pipes and YUV4MPEG2
//! streams, all exposed as one pull-based [`FrameStream`].

mod dir;
pub mod pgm;
mod raw;
mod y4m;

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Frame, MIN_SIDE};

pub use dir::list_frame_files;
pub use y4m::Y4mHeader;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("read error at byte offset {offset}: {source}")]
    Read { offset: u64, source: io::Error },
    #[error("cannot read {path}: {source}")]
    ReadFile { path: PathBuf, source: io::Error },
    #[error("stream ends inside a frame at byte offset {offset} ({remaining} of {frame_bytes} bytes present)")]
    Truncated {
        offset: u64,
        remaining: usize,
        frame_bytes: usize,
    },
    #[error("unsupported image file {path}: {reason}")]
    UnsupportedFile { path: PathBuf, reason: String },
    #[error("malformed Y4M stream at byte offset {offset}: {reason}")]
    Y4m { offset: u64, reason: String },
    #[error("raw-gray input needs --width and --height")]
    MissingDimensions,
    #[error("invalid frame size {width}x{height}: both sides must be at least {MIN_SIDE}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("frame {index} is {found_width}x{found_height}, stream started at {width}x{height}")]
    DimensionChange {
        index: usize,
        width: usize,
        height: usize,
        found_width: usize,
        found_height: usize,
    },
    #[error("{0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("cannot read an image directory from stdin")]
    DirectoryFromStdin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    /// A directory of P5 files, consumed in lexicographic filename order.
    ImageDirectory,
    /// Tightly packed 8-bit luma, dimensions supplied out of band.
    RawGray,
    /// YUV4MPEG2; only the Y plane is used.
    Y4m,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::ImageDirectory => "pgm-dir",
            SourceKind::RawGray => "raw",
            SourceKind::Y4m => "y4m",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pgm-dir" | "image-directory" => Ok(SourceKind::ImageDirectory),
            "raw" | "raw-gray" => Ok(SourceKind::RawGray),
            "y4m" => Ok(SourceKind::Y4m),
            other => Err(format!("unknown input format {other:?}")),
        }
    }
}

/// Where a source reads from. `-` on the command line means stdin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Locator {
    Stdin,
    Path(PathBuf),
}

impl From<String> for Locator {
    fn from(s: String) -> Self {
        if s == "-" {
            Locator::Stdin
        } else {
            Locator::Path(PathBuf::from(s))
        }
    }
}

impl From<Locator> for String {
    fn from(l: Locator) -> Self {
        l.to_string()
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Stdin => f.write_str("-"),
            Locator::Path(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub locator: Locator,
    pub width: Option<usize>,
    pub height: Option<usize>,
}

impl SourceSpec {
    pub fn image_directory(path: impl Into<PathBuf>) -> Self {
        Self {
            kind: SourceKind::ImageDirectory,
            locator: Locator::Path(path.into()),
            width: None,
            height: None,
        }
    }

    pub fn raw_gray(locator: Locator, width: usize, height: usize) -> Self {
        Self {
            kind: SourceKind::RawGray,
            locator,
            width: Some(width),
            height: Some(height),
        }
    }

    pub fn y4m(locator: Locator) -> Self {
        Self {
            kind: SourceKind::Y4m,
            locator,
            width: None,
            height: None,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for side in [self.width, self.height].into_iter().flatten() {
            if side < MIN_SIDE {
                return Err(IngestError::InvalidDimensions {
                    width: self.width.unwrap_or(0),
                    height: self.height.unwrap_or(0),
                });
            }
        }
        if self.kind == SourceKind::RawGray && (self.width.is_none() || self.height.is_none()) {
            return Err(IngestError::MissingDimensions);
        }
        Ok(())
    }
}

type FrameIter = Box<dyn Iterator<Item = Result<Frame, IngestError>> + Send>;

/// Pull-based, single-consumer sequence of frames with indices 0, 1, 2, …
///
/// All frames share the dimensions of the first one; the stream stops after
/// the first error. Streams from [`open_source`] also require frames of at
/// least 8×8.
pub struct FrameStream {
    inner: FrameIter,
    next_index: usize,
    dims: Option<(usize, usize)>,
    min_side: usize,
    failed: bool,
}

impl FrameStream {
    fn new(inner: FrameIter) -> Self {
        Self {
            inner,
            next_index: 0,
            dims: None,
            min_side: 1,
            failed: false,
        }
    }

    /// Rejects a first frame smaller than the 8×8 segment grid.
    fn require_grid(mut self) -> Self {
        self.min_side = MIN_SIDE;
        self
    }

    /// Wraps in-memory frames. Their indices are rewritten to be contiguous.
    pub fn from_frames<I>(frames: I) -> Self
    where
        I: IntoIterator<Item = Frame>,
        I::IntoIter: Send + 'static,
    {
        Self::new(Box::new(frames.into_iter().map(Ok)))
    }

    /// Frame size seen so far, if any frame has been yielded.
    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.dims
    }

    fn check(&mut self, frame: Frame) -> Result<Frame, IngestError> {
        let index = self.next_index;
        let (w, h) = frame.dimensions();
        match self.dims {
            None => {
                if w < self.min_side || h < self.min_side {
                    return Err(IngestError::InvalidDimensions {
                        width: w,
                        height: h,
                    });
                }
                self.dims = Some((w, h));
            }
            Some((width, height)) if (width, height) != (w, h) => {
                return Err(IngestError::DimensionChange {
                    index,
                    width,
                    height,
                    found_width: w,
                    found_height: h,
                });
            }
            Some(_) => {}
        }
        self.next_index += 1;
        Ok(frame.with_index(index))
    }
}

impl Iterator for FrameStream {
    type Item = Result<Frame, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.inner.next()?.and_then(|f| self.check(f));
        self.failed = item.is_err();
        Some(item)
    }
}

impl fmt::Debug for FrameStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameStream")
            .field("next_index", &self.next_index)
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

fn open_reader(locator: &Locator) -> Result<Box<dyn Read + Send>, IngestError> {
    match locator {
        Locator::Stdin => Ok(Box::new(io::stdin())),
        Locator::Path(path) => {
            let file = File::open(path).map_err(|source| IngestError::Open {
                path: path.clone(),
                source,
            })?;
            Ok(Box::new(file))
        }
    }
}

pub fn open_source(spec: &SourceSpec) -> Result<FrameStream, IngestError> {
    spec.validate()?;
    let inner: FrameIter = match spec.kind {
        SourceKind::ImageDirectory => {
            let Locator::Path(path) = &spec.locator else {
                return Err(IngestError::DirectoryFromStdin);
            };
            Box::new(dir::DirFrames::open(path)?)
        }
        SourceKind::RawGray => {
            let reader = BufReader::with_capacity(1 << 20, open_reader(&spec.locator)?);
            let (width, height) = (spec.width.unwrap(), spec.height.unwrap());
            Box::new(raw::RawFrames::new(reader, width, height))
        }
        SourceKind::Y4m => {
            let reader = BufReader::with_capacity(1 << 20, open_reader(&spec.locator)?);
            Box::new(y4m::Y4mFrames::new(reader)?)
        }
    };
    Ok(FrameStream::new(inner).require_grid())
}

/// Reads a raw-gray stream from any reader.
pub fn raw_stream<R: Read + Send + 'static>(reader: R, width: usize, height: usize) -> FrameStream {
    FrameStream::new(Box::new(raw::RawFrames::new(
        BufReader::new(reader),
        width,
        height,
    )))
}

/// Reads a Y4M stream from any reader.
pub fn y4m_stream<R: Read + Send + 'static>(reader: R) -> Result<FrameStream, IngestError> {
    Ok(FrameStream::new(Box::new(y4m::Y4mFrames::new(
        BufReader::new(reader),
    )?)))
}

/// Fills `buf` as far as the reader allows; returns the byte count read.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
