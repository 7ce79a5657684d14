//! Hard-cut detection by pixel-wise correlation of consecutive frames, and
//! absorption of too-short shots left behind by fades and dissolves.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::Frame;
use crate::ingest::IngestError;

/// Correlation below which consecutive frames are split into separate shots.
pub const DEFAULT_CUT_THRESHOLD: f64 = 0.9;

/// Shots shorter than this many frames are merged into a neighbour.
pub const DEFAULT_MIN_SHOT_LEN: usize = 10;

#[derive(Debug, Error)]
pub enum ShotError {
    #[error("frame dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
    #[error("cut threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("cannot segment an empty frame stream")]
    EmptyStream,
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Half-open frame range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shot {
    pub start: usize,
    pub end: usize,
}

impl Shot {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end, "empty shot {start}..{end}");
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..self.end).contains(&index)
    }
}

/// Pearson correlation of co-located pixels.
///
/// Solid frames have no variance, so the quotient is replaced by: both solid
/// and means within one grey level → 1.0; otherwise → 0.0.
pub fn correlation(a: &Frame, b: &Frame) -> Result<f64, ShotError> {
    if a.dimensions() != b.dimensions() {
        return Err(ShotError::DimensionMismatch {
            a_width: a.width(),
            a_height: a.height(),
            b_width: b.width(),
            b_height: b.height(),
        });
    }
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (&x, &y) in a.pixels().iter().zip(b.pixels()) {
        let (x, y) = (u64::from(x), u64::from(y));
        sa += x;
        sb += y;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
    }
    let n = a.pixels().len() as i128;
    let (sa, sb) = (sa as i128, sb as i128);
    // n² times the population (co)variances, exact
    let var_a = n * saa as i128 - sa * sa;
    let var_b = n * sbb as i128 - sb * sb;
    let cov = n * sab as i128 - sa * sb;

    match (var_a == 0, var_b == 0) {
        (true, true) => {
            // |sa/n - sb/n| <= 1
            Ok(if (sa - sb).abs() <= n { 1.0 } else { 0.0 })
        }
        (true, false) | (false, true) => Ok(0.0),
        (false, false) => {
            let r = cov as f64 / ((var_a as f64).sqrt() * (var_b as f64).sqrt());
            Ok(r.clamp(-1.0, 1.0))
        }
    }
}

/// A detected hard cut: frame `at` starts a new shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub at: usize,
    pub correlation: f64,
}

/// Incremental cut detector holding only the previous frame.
#[derive(Debug)]
pub struct CutDetector {
    threshold: f64,
    previous: Option<Frame>,
    shot_start: usize,
    frames_seen: usize,
    cuts: Vec<Cut>,
}

impl CutDetector {
    pub fn new(threshold: f64) -> Result<Self, ShotError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(ShotError::InvalidThreshold(threshold));
        }
        Ok(Self {
            threshold,
            previous: None,
            shot_start: 0,
            frames_seen: 0,
            cuts: Vec::new(),
        })
    }

    /// Feeds the next frame. Returns the shot closed by a cut in front of
    /// this frame, if any.
    pub fn push(&mut self, frame: Frame) -> Result<Option<Shot>, ShotError> {
        let mut closed = None;
        if let Some(prev) = &self.previous {
            let r = correlation(prev, &frame)?;
            if r < self.threshold {
                let at = self.frames_seen;
                self.cuts.push(Cut { at, correlation: r });
                closed = Some(Shot::new(self.shot_start, at));
                self.shot_start = at;
            }
        }
        self.previous = Some(frame);
        self.frames_seen += 1;
        Ok(closed)
    }

    /// Most recently pushed frame.
    pub fn last_frame(&self) -> Option<&Frame> {
        self.previous.as_ref()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Closes the final shot. `None` if no frame was pushed.
    pub fn finish(&mut self) -> Option<Shot> {
        if self.frames_seen == self.shot_start {
            return None;
        }
        let last = Shot::new(self.shot_start, self.frames_seen);
        self.shot_start = self.frames_seen;
        self.previous = None;
        Some(last)
    }
}

/// Splits a stream into shots at every adjacent pair whose correlation is
/// below `threshold`. Holds at most two frames at a time.
pub fn detect_cuts<I>(frames: I, threshold: f64) -> Result<Vec<Shot>, ShotError>
where
    I: IntoIterator<Item = Result<Frame, IngestError>>,
{
    let mut detector = CutDetector::new(threshold)?;
    let mut shots = Vec::new();
    for frame in frames {
        shots.extend(detector.push(frame?)?);
    }
    shots.extend(detector.finish());
    if shots.is_empty() {
        return Err(ShotError::EmptyStream);
    }
    Ok(shots)
}

/// Incremental form of [`merge_short_shots`].
///
/// Short shots accumulate forward until the run reaches `min_len`; a short
/// run left at the end is folded into the last complete shot. Because of
/// that, the most recent complete shot is held back until the next one
/// completes or [`finish`](Self::finish) is called.
#[derive(Debug, Clone)]
pub struct ShotMerger {
    min_len: usize,
    held: Option<Shot>,
    pending: Option<Shot>,
}

impl ShotMerger {
    pub fn new(min_len: usize) -> Self {
        Self {
            min_len,
            held: None,
            pending: None,
        }
    }

    /// Feeds the next contiguous shot; returns a shot that is now final.
    pub fn push(&mut self, shot: Shot) -> Option<Shot> {
        let run = match self.pending.take() {
            Some(p) => {
                debug_assert_eq!(p.end, shot.start, "shots must be contiguous");
                Shot::new(p.start, shot.end)
            }
            None => shot,
        };
        if run.len() >= self.min_len {
            self.held.replace(run)
        } else {
            self.pending = Some(run);
            None
        }
    }

    /// Range currently held back or pending, i.e. not yet final.
    pub fn unsettled(&self) -> Option<Shot> {
        match (self.held, self.pending) {
            (Some(h), Some(p)) => Some(Shot::new(h.start, p.end)),
            (h, p) => h.or(p),
        }
    }

    pub fn finish(&mut self) -> Option<Shot> {
        match (self.held.take(), self.pending.take()) {
            (Some(h), Some(p)) => Some(Shot::new(h.start, p.end)),
            (h, p) => h.or(p),
        }
    }
}

/// Merges every shot shorter than `min_len` into its successor (a trailing
/// short run goes into its predecessor). If the whole range is shorter than
/// `min_len` a single shot covering it is returned.
pub fn merge_short_shots(shots: &[Shot], min_len: usize) -> Vec<Shot> {
    let mut merger = ShotMerger::new(min_len);
    let mut out: Vec<Shot> = shots.iter().filter_map(|&s| merger.push(s)).collect();
    out.extend(merger.finish());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shots(bounds: &[(usize, usize)]) -> Vec<Shot> {
        bounds.iter().map(|&(s, e)| Shot::new(s, e)).collect()
    }

    fn ramp(index: usize) -> Frame {
        Frame::new(index, 8, 8, (0..64).map(|i| (i * 4) as u8).collect()).unwrap()
    }

    #[test]
    fn self_and_anti_correlation() {
        let a = ramp(0);
        assert!((correlation(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = Frame::new(1, 8, 8, a.pixels().iter().map(|p| 255 - p).collect()).unwrap();
        assert!((correlation(&a, &inv).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rules() {
        let solid = |v| Frame::filled(0, 8, 8, v);
        assert_eq!(correlation(&solid(40), &solid(40)).unwrap(), 1.0);
        assert_eq!(correlation(&solid(40), &solid(41)).unwrap(), 1.0);
        assert_eq!(correlation(&solid(40), &solid(42)).unwrap(), 0.0);
        assert_eq!(correlation(&solid(40), &ramp(0)).unwrap(), 0.0);
        assert_eq!(correlation(&ramp(0), &solid(40)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let err = correlation(&Frame::filled(0, 8, 8, 0), &Frame::filled(0, 9, 8, 0)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("8x8") && msg.contains("9x8"), "{msg}");
    }

    #[test]
    fn detect_cuts_identical_frames() {
        let frames = (0..100).map(|i| Ok(ramp(i)));
        assert_eq!(detect_cuts(frames, 0.9).unwrap(), shots(&[(0, 100)]));
    }

    #[test]
    fn detect_cuts_single_and_empty() {
        assert_eq!(detect_cuts([Ok(ramp(0))], 0.9).unwrap(), shots(&[(0, 1)]));
        assert!(matches!(
            detect_cuts(std::iter::empty(), 0.9),
            Err(ShotError::EmptyStream)
        ));
    }

    #[test]
    fn threshold_validation() {
        assert!(CutDetector::new(0.0).is_err());
        assert!(CutDetector::new(1.0001).is_err());
        assert!(CutDetector::new(f64::NAN).is_err());
        assert!(CutDetector::new(1.0).is_ok());
    }

    #[test]
    fn merge_examples() {
        assert_eq!(merge_short_shots(&shots(&[(0, 3), (3, 100)]), 10), shots(&[(0, 100)]));
        assert_eq!(
            merge_short_shots(&shots(&[(0, 50), (50, 100)]), 10),
            shots(&[(0, 50), (50, 100)])
        );
        assert_eq!(
            merge_short_shots(&shots(&[(0, 40), (40, 44), (44, 48), (48, 90)]), 10),
            shots(&[(0, 40), (40, 90)])
        );
    }

    #[test]
    fn merge_trailing_and_tiny_videos() {
        assert_eq!(
            merge_short_shots(&shots(&[(0, 50), (50, 53), (53, 55)]), 10),
            shots(&[(0, 55)])
        );
        assert_eq!(merge_short_shots(&shots(&[(0, 3), (3, 7)]), 10), shots(&[(0, 7)]));
        assert_eq!(
            merge_short_shots(&shots(&[(0, 1), (1, 2)]), 0),
            shots(&[(0, 1), (1, 2)])
        );
    }

    #[test]
    fn merger_holds_back_last_complete_shot() {
        let mut m = ShotMerger::new(10);
        assert_eq!(m.push(Shot::new(0, 20)), None);
        assert_eq!(m.unsettled(), Some(Shot::new(0, 20)));
        assert_eq!(m.push(Shot::new(20, 22)), None);
        assert_eq!(m.unsettled(), Some(Shot::new(0, 22)));
        assert_eq!(m.push(Shot::new(22, 40)), Some(Shot::new(0, 20)));
        assert_eq!(m.finish(), Some(Shot::new(20, 40)));
        assert_eq!(m.finish(), None);
    }
}
