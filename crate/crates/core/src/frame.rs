//! 8-bit grayscale frames.

use std::fmt;

use thiserror::Error;

/// Smallest width or height that still supports the 8×8 segment grid.
pub const MIN_SIDE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame {index}: expected {expected} pixels for {width}x{height}, got {actual}")]
pub struct FrameSizeError {
    pub index: usize,
    pub width: usize,
    pub height: usize,
    pub expected: usize,
    pub actual: usize,
}

/// One video frame: a row-major `height × width` grid of luma values.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    index: usize,
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn new(
        index: usize,
        width: usize,
        height: usize,
        pixels: Vec<u8>,
    ) -> Result<Self, FrameSizeError> {
        let expected = width * height;
        if pixels.len() != expected {
            return Err(FrameSizeError {
                index,
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
        })
    }

    /// A frame where every pixel has the same value.
    pub fn filled(index: usize, width: usize, height: usize, value: u8) -> Self {
        Self {
            index,
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Same pixels, new ordinal.
    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Frame")
            .field("index", &self.index)
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// BT.601 luma: `round(0.299 r + 0.587 g + 0.114 b)`.
pub fn to_grayscale(r: u8, g: u8, b: u8) -> u8 {
    let luma = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
    luma.round().clamp(0.0, 255.0) as u8
}
