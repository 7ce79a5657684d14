//! Grey-level histograms, Shannon entropy and the 64-segment local entropy
//! signature used to compare frames.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Frame, MIN_SIDE};

/// Number of grey levels in an 8-bit frame.
pub const LEVELS: usize = 256;

/// Segments per side of the local-entropy grid.
pub const GRID_SIDE: usize = 8;

/// Total segments in the local-entropy grid.
pub const SEGMENTS: usize = GRID_SIDE * GRID_SIDE;

/// Upper bound of [`entropy`]: log2(256).
pub const MAX_ENTROPY: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("frame {index} is {width}x{height}; segmented entropy needs at least {min}x{min}", min = MIN_SIDE)]
pub struct DimensionError {
    pub index: usize,
    pub width: usize,
    pub height: usize,
}

/// Count of pixels at each grey level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: [u64; LEVELS],
    total: u64,
}

impl Histogram {
    pub fn from_pixels(pixels: &[u8]) -> Self {
        let mut hist = Self::empty();
        hist.accumulate(pixels);
        hist
    }

    fn empty() -> Self {
        Self {
            counts: [0; LEVELS],
            total: 0,
        }
    }

    fn accumulate(&mut self, pixels: &[u8]) {
        for &p in pixels {
            self.counts[p as usize] += 1;
        }
        self.total += pixels.len() as u64;
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Probability of grey level `k`: `h(k) / (M·N)`.
    pub fn probability(&self, k: u8) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts[k as usize] as f64 / self.total as f64
    }
}

pub fn histogram(frame: &Frame) -> Histogram {
    Histogram::from_pixels(frame.pixels())
}

/// Shannon entropy in bits. Empty levels contribute nothing.
pub fn entropy(hist: &Histogram) -> f64 {
    if hist.total == 0 {
        return 0.0;
    }
    let total = hist.total as f64;
    let mut sum = 0.0;
    for &c in hist.counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / total;
        sum -= p * p.log2();
    }
    // -0.0 for single-level frames
    sum.max(0.0)
}

pub fn frame_entropy(frame: &Frame) -> f64 {
    entropy(&histogram(frame))
}

/// Bin key for an entropy value: `round(en²)`, halves rounded away from zero.
pub fn modified_entropy(en: f64) -> u32 {
    let squared = (en * en).round();
    squared.clamp(0.0, MAX_ENTROPY * MAX_ENTROPY) as u32
}

/// Per-segment entropies over an 8×8 grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentedEntropy {
    values: Vec<f64>,
}

impl SegmentedEntropy {
    /// Returns `None` unless exactly 64 values are given.
    pub fn from_values(values: Vec<f64>) -> Option<Self> {
        (values.len() == SEGMENTS).then_some(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * GRID_SIDE + col]
    }
}

/// Pixel range covered by grid cell `cell` along an axis of length `len`.
/// The last cell absorbs the remainder.
pub fn segment_span(len: usize, cell: usize) -> Range<usize> {
    let step = len / GRID_SIDE;
    let start = cell * step;
    let end = if cell + 1 == GRID_SIDE {
        len
    } else {
        start + step
    };
    start..end
}

pub fn segmented_entropies(frame: &Frame) -> Result<SegmentedEntropy, DimensionError> {
    let (width, height) = frame.dimensions();
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(DimensionError {
            index: frame.index(),
            width,
            height,
        });
    }

    let cols: Vec<Range<usize>> = (0..GRID_SIDE).map(|c| segment_span(width, c)).collect();
    let mut hists = vec![Histogram::empty(); SEGMENTS];
    for grid_row in 0..GRID_SIDE {
        for y in segment_span(height, grid_row) {
            let row = frame.row(y);
            for (grid_col, span) in cols.iter().enumerate() {
                hists[grid_row * GRID_SIDE + grid_col].accumulate(&row[span.clone()]);
            }
        }
    }

    Ok(SegmentedEntropy {
        values: hists.iter().map(entropy).collect(),
    })
}

/// Population standard deviation of the per-segment entropy differences
/// `b - a`. Zero means the two frames differ by at most a uniform shift.
pub fn dissimilarity(a: &SegmentedEntropy, b: &SegmentedEntropy) -> f64 {
    let n = SEGMENTS as f64;
    let diffs: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| y - x)
        .collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let variance = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    variance.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(width: usize, height: usize, pixels: Vec<u8>) -> Frame {
        Frame::new(0, width, height, pixels).unwrap()
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&Frame::filled(0, 4, 4, 0));
        assert_eq!(h.counts()[0], 16);
        assert_eq!(h.counts()[1..].iter().sum::<u64>(), 0);
        assert_eq!(h.total(), 16);

        let h = histogram(&frame(2, 2, vec![0, 0, 255, 255]));
        assert_eq!(h.counts()[0], 2);
        assert_eq!(h.counts()[255], 2);
        assert_eq!(h.total(), 4);
        assert_eq!(h.probability(255), 0.5);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(frame_entropy(&Frame::filled(0, 4, 4, 7)), 0.0);
        assert_eq!(frame_entropy(&frame(2, 2, vec![0, 0, 255, 255])), 1.0);
        let all_levels: Vec<u8> = (0..=255u8).cycle().take(512).collect();
        assert_eq!(frame_entropy(&frame(32, 16, all_levels)), 8.0);
    }

    #[test]
    fn modified_entropy_examples() {
        assert_eq!(modified_entropy(0.0), 0);
        assert_eq!(modified_entropy(2.3), 5);
        assert_eq!(modified_entropy(7.99), 64);
        assert_eq!(modified_entropy(8.0), 64);
        assert_eq!(modified_entropy(1.5811), 2);
        assert_eq!(modified_entropy(1.5812), 3);
    }

    #[test]
    fn segment_spans_cover_axis() {
        assert_eq!(segment_span(100, 0), 0..12);
        assert_eq!(segment_span(100, 6), 72..84);
        assert_eq!(segment_span(100, 7), 84..100);
        assert_eq!(segment_span(8, 7), 7..8);
    }

    #[test]
    fn segmented_all_zero() {
        let seg = segmented_entropies(&Frame::filled(0, 16, 16, 0)).unwrap();
        assert_eq!(seg.values().len(), SEGMENTS);
        assert!(seg.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn segmented_single_hot_segment() {
        // segment (row 2, col 5) covers x 10..12, y 4..6
        let mut pixels = vec![0u8; 256];
        pixels[4 * 16 + 10] = 0;
        pixels[4 * 16 + 11] = 0;
        pixels[5 * 16 + 10] = 255;
        pixels[5 * 16 + 11] = 255;
        let seg = segmented_entropies(&frame(16, 16, pixels)).unwrap();
        for r in 0..GRID_SIDE {
            for c in 0..GRID_SIDE {
                let expected = if (r, c) == (2, 5) { 1.0 } else { 0.0 };
                assert_eq!(seg.get(r, c), expected, "segment ({r}, {c})");
            }
        }
    }

    #[test]
    fn segmented_rejects_small_frames() {
        let err = segmented_entropies(&Frame::filled(4, 7, 8, 0)).unwrap_err();
        assert_eq!((err.index, err.width, err.height), (4, 7, 8));
        assert!(segmented_entropies(&Frame::filled(0, 8, 8, 0)).is_ok());
    }

    #[test]
    fn dissimilarity_examples() {
        let a = SegmentedEntropy::from_values((0..64).map(|i| i as f64 / 10.0).collect()).unwrap();
        assert_eq!(dissimilarity(&a, &a), 0.0);

        let shifted =
            SegmentedEntropy::from_values(a.values().iter().map(|v| v + 0.75).collect()).unwrap();
        assert!(dissimilarity(&a, &shifted) < 1e-12);

        let zero = SegmentedEntropy::from_values(vec![0.0; 64]).unwrap();
        let mut hot = vec![0.0; 64];
        hot[17] = 1.0;
        let hot = SegmentedEntropy::from_values(hot).unwrap();
        // sqrt((63 (1/64)^2 + (63/64)^2) / 64)
        let expected = ((63.0 / 4096.0 + (63.0f64 / 64.0).powi(2)) / 64.0).sqrt();
        assert!((dissimilarity(&zero, &hot) - expected).abs() < 1e-15);
        assert!((dissimilarity(&zero, &hot) - 0.12402).abs() < 1e-5);
    }

    #[test]
    fn from_values_checks_length() {
        assert!(SegmentedEntropy::from_values(vec![0.0; 63]).is_none());
    }
}
