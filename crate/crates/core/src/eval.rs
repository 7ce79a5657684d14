//! Scoring detected key-frames against hand-picked ground truth: identified,
//! redundant and missing counts, deviation from the manual standard and
//! compactness.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default matching tolerance in frames (about half a second at 24 fps).
pub const DEFAULT_MATCH_WINDOW: usize = 12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("ground truth line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("ground truth lacks the total_frames=N header")]
    MissingHeader,
    #[error("ground truth lists no key-frames; deviation is undefined")]
    EmptyGroundTruth,
    #[error("cannot read ground truth {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Manually selected key-frames of one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub keyframe_indices: Vec<usize>,
    pub total_frames: usize,
}

impl GroundTruth {
    pub fn new(keyframe_indices: Vec<usize>, total_frames: usize) -> Result<Self, EvalError> {
        for (i, pair) in keyframe_indices.windows(2).enumerate() {
            if pair[0] >= pair[1] {
                return Err(EvalError::Parse {
                    line: i + 2,
                    reason: format!("indices not strictly increasing ({} then {})", pair[0], pair[1]),
                });
            }
        }
        if let Some(&last) = keyframe_indices.last() {
            if last >= total_frames {
                return Err(EvalError::Parse {
                    line: keyframe_indices.len(),
                    reason: format!("index {last} not below total_frames={total_frames}"),
                });
            }
        }
        Ok(Self {
            keyframe_indices,
            total_frames,
        })
    }

    /// Parses the text format: a `total_frames=N` header, then one frame
    /// index per line. `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut total = None;
        let mut indices: Vec<usize> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if total.is_none() {
                let value = line
                    .strip_prefix("total_frames=")
                    .ok_or(EvalError::MissingHeader)?;
                total = Some(value.trim().parse::<usize>().map_err(|e| EvalError::Parse {
                    line: line_no,
                    reason: format!("bad total_frames: {e}"),
                })?);
                continue;
            }
            let index: usize = line.parse().map_err(|e| EvalError::Parse {
                line: line_no,
                reason: format!("bad frame index {line:?}: {e}"),
            })?;
            if let Some(&prev) = indices.last() {
                if index <= prev {
                    return Err(EvalError::Parse {
                        line: line_no,
                        reason: format!("index {index} does not follow {prev}"),
                    });
                }
            }
            indices.push(index);
        }
        let total_frames = total.ok_or(EvalError::MissingHeader)?;
        Self::new(indices, total_frames).map_err(|e| match e {
            EvalError::Parse { reason, .. } => EvalError::Parse { line: 0, reason },
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("total_frames={}\n", self.total_frames);
        for i in &self.keyframe_indices {
            writeln!(out, "{i}").unwrap();
        }
        out
    }

    pub fn len(&self) -> usize {
        self.keyframe_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframe_indices.is_empty()
    }
}

/// One-to-one pairing between ground truth and detections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matching {
    /// `(ground truth, detected)` pairs in ground-truth order.
    pub pairs: Vec<(usize, usize)>,
    /// Detections with no ground-truth partner.
    pub unmatched_detected: Vec<usize>,
    /// Ground-truth frames nobody detected.
    pub unmatched_truth: Vec<usize>,
}

/// Greedy matching: each ground-truth frame, in order, claims the nearest
/// unclaimed detection within `±window` (the earlier one on ties).
pub fn match_keyframes(detected: &[usize], gt: &GroundTruth, window: usize) -> Matching {
    let mut detected: Vec<usize> = detected.to_vec();
    detected.sort_unstable();
    let mut claimed = vec![false; detected.len()];
    let mut pairs = Vec::new();
    let mut unmatched_truth = Vec::new();

    for &truth in &gt.keyframe_indices {
        let lo = detected.partition_point(|&d| d + window < truth);
        let best = (lo..detected.len())
            .take_while(|&i| detected[i] <= truth + window)
            .filter(|&i| !claimed[i])
            .min_by_key(|&i| (detected[i].abs_diff(truth), detected[i]));
        match best {
            Some(i) => {
                claimed[i] = true;
                pairs.push((truth, detected[i]));
            }
            None => unmatched_truth.push(truth),
        }
    }

    let unmatched_detected = detected
        .iter()
        .zip(&claimed)
        .filter(|(_, &c)| !c)
        .map(|(&d, _)| d)
        .collect();
    Matching {
        pairs,
        unmatched_detected,
        unmatched_truth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub identified: usize,
    pub matched: usize,
    pub redundant: usize,
    pub missing: usize,
    pub ground_truth: usize,
    pub total_frames: usize,
    /// `missing / ground_truth`
    pub deviation: f64,
    /// `identified / total_frames`
    pub compactness: f64,
}

/// Fraction of the manual key-frames that were missed.
pub fn deviation(missing: usize, manual: usize) -> Result<f64, EvalError> {
    if manual == 0 {
        return Err(EvalError::EmptyGroundTruth);
    }
    Ok(missing as f64 / manual as f64)
}

/// Key-frames kept per frame of video; smaller is more compact.
pub fn compactness(identified: usize, total_frames: usize) -> f64 {
    if total_frames == 0 {
        return 0.0;
    }
    identified as f64 / total_frames as f64
}

pub fn metrics(
    matching: &Matching,
    gt: &GroundTruth,
    detected_count: usize,
) -> Result<EvalReport, EvalError> {
    let missing = matching.unmatched_truth.len();
    Ok(EvalReport {
        identified: detected_count,
        matched: matching.pairs.len(),
        redundant: matching.unmatched_detected.len(),
        missing,
        ground_truth: gt.len(),
        total_frames: gt.total_frames,
        deviation: deviation(missing, gt.len())?,
        compactness: compactness(detected_count, gt.total_frames),
    })
}

/// Matches and scores in one step.
pub fn evaluate(detected: &[usize], gt: &GroundTruth, window: usize) -> Result<EvalReport, EvalError> {
    let matching = match_keyframes(detected, gt, window);
    metrics(&matching, gt, detected.len())
}
