//! Per-shot entropy binning, centre-frame selection and cross-shot
//! elimination of near-duplicate key-frames.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    dissimilarity, frame_entropy, modified_entropy, segmented_entropies, DimensionError,
    SegmentedEntropy,
};
use crate::frame::Frame;
use crate::shots::Shot;

/// Bins must hold strictly more frames than this to yield a key-frame.
pub const DEFAULT_MIN_BIN_SIZE: usize = 20;

/// Default dissimilarity at or below which a later key-frame is a duplicate.
pub const DEFAULT_SD_THRESHOLD: f64 = 0.15;

/// Frames of one shot sharing a modified-entropy key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyBin {
    pub key: u32,
    /// Frame indices in arrival order.
    pub members: Vec<usize>,
}

impl EntropyBin {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member at position `len / 2`.
    pub fn center(&self) -> usize {
        self.members[self.members.len() / 2]
    }
}

/// Groups `(frame index, entropy)` pairs by `round(entropy²)`. Bins appear in
/// the order their key was first seen.
pub fn bin_entropies<I>(entries: I) -> Vec<EntropyBin>
where
    I: IntoIterator<Item = (usize, f64)>,
{
    let mut slot_of_key: [Option<usize>; 65] = [None; 65];
    let mut bins: Vec<EntropyBin> = Vec::new();
    for (index, en) in entries {
        let key = modified_entropy(en);
        match slot_of_key[key as usize] {
            Some(slot) => bins[slot].members.push(index),
            None => {
                slot_of_key[key as usize] = Some(bins.len());
                bins.push(EntropyBin {
                    key,
                    members: vec![index],
                });
            }
        }
    }
    bins
}

/// Bins the frames of one shot by modified entropy.
pub fn bin_frames(shot_frames: &[Frame]) -> Vec<EntropyBin> {
    bin_entropies(shot_frames.iter().map(|f| (f.index(), frame_entropy(f))))
}

/// The centre frame chosen from one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinPick {
    pub bin_key: u32,
    pub bin_size: usize,
    pub frame_index: usize,
    /// True when the pick came from the largest-bin fallback.
    #[serde(default)]
    pub fallback: bool,
}

/// Centre members of every bin with more than `min_bin_size` frames, in bin
/// order. With `fallback` set, a shot where no bin qualifies still yields the
/// centre of its largest bin (earliest bin on ties).
pub fn select_centers(bins: &[EntropyBin], min_bin_size: usize, fallback: bool) -> Vec<BinPick> {
    let mut picks: Vec<BinPick> = bins
        .iter()
        .filter(|b| b.len() > min_bin_size)
        .map(|b| BinPick {
            bin_key: b.key,
            bin_size: b.len(),
            frame_index: b.center(),
            fallback: false,
        })
        .collect();
    if picks.is_empty() && fallback {
        let largest = bins
            .iter()
            .reduce(|best, b| if b.len() > best.len() { b } else { best });
        if let Some(b) = largest {
            picks.push(BinPick {
                bin_key: b.key,
                bin_size: b.len(),
                frame_index: b.center(),
                fallback: true,
            });
        }
    }
    picks
}

/// A selected representative frame and the features used to compare it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyFrame {
    pub frame_index: usize,
    pub shot: Shot,
    pub bin_key: u32,
    pub global_entropy: f64,
    pub segments: SegmentedEntropy,
}

impl KeyFrame {
    pub fn from_frame(frame: &Frame, shot: Shot) -> Result<Self, DimensionError> {
        debug_assert!(shot.contains(frame.index()));
        let global_entropy = frame_entropy(frame);
        Ok(Self {
            frame_index: frame.index(),
            shot,
            bin_key: modified_entropy(global_entropy),
            global_entropy,
            segments: segmented_entropies(frame)?,
        })
    }
}

/// Key-frames for one shot whose frames are all in memory.
///
/// `shot_frames` must be the frames of `shot` in index order.
pub fn select_keyframes(
    shot_frames: &[Frame],
    shot: Shot,
    bins: &[EntropyBin],
    min_bin_size: usize,
) -> Result<Vec<KeyFrame>, DimensionError> {
    select_centers(bins, min_bin_size, false)
        .into_iter()
        .map(|pick| KeyFrame::from_frame(&shot_frames[pick.frame_index - shot.start], shot))
        .collect()
}

/// Why a candidate was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elimination {
    pub frame_index: usize,
    pub duplicate_of: usize,
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Kept,
    Eliminated(Elimination),
}

/// Keep-earliest duplicate filter fed in ascending frame order.
///
/// Each candidate is compared with every key-frame kept so far; the first
/// one within `sd_threshold` eliminates it.
#[derive(Debug, Clone)]
pub struct Deduplicator {
    sd_threshold: f64,
    kept: Vec<(usize, SegmentedEntropy)>,
}

impl Deduplicator {
    pub fn new(sd_threshold: f64) -> Self {
        Self {
            sd_threshold,
            kept: Vec::new(),
        }
    }

    pub fn offer(&mut self, candidate: &KeyFrame) -> Verdict {
        debug_assert!(
            self.kept.last().is_none_or(|(i, _)| *i <= candidate.frame_index),
            "candidates must arrive in frame order"
        );
        for (index, segments) in &self.kept {
            let sd = dissimilarity(segments, &candidate.segments);
            if sd <= self.sd_threshold {
                return Verdict::Eliminated(Elimination {
                    frame_index: candidate.frame_index,
                    duplicate_of: *index,
                    sd,
                });
            }
        }
        self.kept
            .push((candidate.frame_index, candidate.segments.clone()));
        Verdict::Kept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub survivors: Vec<KeyFrame>,
    pub eliminations: Vec<Elimination>,
}

/// Removes near-duplicate key-frames, keeping the earliest of each group.
pub fn dedup(candidates: &[KeyFrame], sd_threshold: f64) -> DedupOutcome {
    let mut ordered: Vec<&KeyFrame> = candidates.iter().collect();
    ordered.sort_by_key(|k| k.frame_index);
    let mut filter = Deduplicator::new(sd_threshold);
    let mut outcome = DedupOutcome {
        survivors: Vec::new(),
        eliminations: Vec::new(),
    };
    for kf in ordered {
        match filter.offer(kf) {
            Verdict::Kept => outcome.survivors.push(kf.clone()),
            Verdict::Eliminated(e) => outcome.eliminations.push(e),
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::SEGMENTS;

    /// 16×16 frame whose pixels take `levels` distinct values equally often.
    fn frame_with_levels(index: usize, levels: usize) -> Frame {
        let pixels = (0..256).map(|i| (i % levels) as u8).collect();
        Frame::new(index, 16, 16, pixels).unwrap()
    }

    fn bin(key: u32, members: std::ops::Range<usize>) -> EntropyBin {
        EntropyBin {
            key,
            members: members.collect(),
        }
    }

    fn keyframe(frame_index: usize, values: Vec<f64>) -> KeyFrame {
        KeyFrame {
            frame_index,
            shot: Shot::new(0, 10_000),
            bin_key: 0,
            global_entropy: 0.0,
            segments: SegmentedEntropy::from_values(values).unwrap(),
        }
    }

    #[test]
    fn identical_frames_share_one_bin() {
        let frames: Vec<Frame> = (0..30).map(|i| frame_with_levels(i, 4)).collect();
        let bins = bin_frames(&frames);
        assert_eq!(bins, vec![bin(4, 0..30)]);
    }

    #[test]
    fn interleaved_entropies() {
        // 8 levels -> 3 bits -> key 9; 4 levels -> 2 bits -> key 4
        let mut frames = Vec::new();
        let mut low = Vec::new();
        let mut high = Vec::new();
        for i in 0..35 {
            if i % 7 == 3 || i % 7 == 5 {
                low.push(i);
                frames.push(frame_with_levels(i, 4));
            } else {
                high.push(i);
                frames.push(frame_with_levels(i, 8));
            }
        }
        assert_eq!((high.len(), low.len()), (25, 10));
        let bins = bin_frames(&frames);
        assert_eq!(
            bins,
            vec![
                EntropyBin { key: 9, members: high },
                EntropyBin { key: 4, members: low },
            ]
        );
    }

    #[test]
    fn center_selection_and_gate() {
        let picks = select_centers(&[bin(10, 100..125)], 20, false);
        assert_eq!(picks.len(), 1);
        assert_eq!(picks[0].frame_index, 112);

        assert!(select_centers(&[bin(10, 0..20)], 20, false).is_empty());

        let bins = [bin(1, 0..5), bin(2, 5..35), bin(3, 35..56)];
        let picks = select_centers(&bins, 20, false);
        let keys: Vec<u32> = picks.iter().map(|p| p.bin_key).collect();
        assert_eq!(keys, vec![2, 3]);
        assert_eq!(picks[0].frame_index, 20);
        assert_eq!(picks[1].frame_index, 45);
    }

    #[test]
    fn fallback_picks_largest_bin() {
        let bins = [bin(1, 0..5), bin(2, 5..12), bin(3, 12..19)];
        assert!(select_centers(&bins, 20, false).is_empty());
        let picks = select_centers(&bins, 20, true);
        assert_eq!(picks.len(), 1);
        assert_eq!((picks[0].bin_key, picks[0].frame_index), (2, 8));
        assert!(picks[0].fallback);
        assert!(select_centers(&[], 20, true).is_empty());
    }

    #[test]
    fn select_keyframes_builds_features() {
        let frames: Vec<Frame> = (40..70).map(|i| frame_with_levels(i, 16)).collect();
        let shot = Shot::new(40, 70);
        let bins = bin_frames(&frames);
        let kfs = select_keyframes(&frames, shot, &bins, 20).unwrap();
        assert_eq!(kfs.len(), 1);
        assert_eq!(kfs[0].frame_index, 55);
        assert_eq!(kfs[0].bin_key, 16);
        assert_eq!(kfs[0].global_entropy, 4.0);
        assert_eq!(kfs[0].shot, shot);
    }

    #[test]
    fn dedup_identical_content() {
        let a = keyframe(10, vec![3.0; SEGMENTS]);
        let b = keyframe(500, vec![3.0; SEGMENTS]);
        let out = dedup(&[a.clone(), b], 0.15);
        assert_eq!(out.survivors, vec![a]);
        assert_eq!(
            out.eliminations,
            vec![Elimination { frame_index: 500, duplicate_of: 10, sd: 0.0 }]
        );
    }

    #[test]
    fn dedup_distinct_content_unchanged() {
        let spread = |scale: f64| (0..SEGMENTS).map(|i| (i as f64 * scale) % 8.0).collect();
        let input = vec![keyframe(1, spread(0.1)), keyframe(2, spread(0.37)), keyframe(3, spread(1.3))];
        let out = dedup(&input, 0.15);
        assert_eq!(out.survivors, input);
        assert!(out.eliminations.is_empty());
    }

    #[test]
    fn dedup_chain_keeps_first() {
        // A, B, C differ pairwise by a small bump in one segment
        let base = vec![5.0; SEGMENTS];
        let mut b = base.clone();
        b[0] = 5.3;
        let mut c = base.clone();
        c[0] = 5.6;
        let input = vec![keyframe(0, base), keyframe(40, b), keyframe(80, c)];
        let out = dedup(&input, 0.1);
        let kept: Vec<usize> = out.survivors.iter().map(|k| k.frame_index).collect();
        assert_eq!(kept, vec![0]);
        assert!(out.eliminations.iter().all(|e| e.duplicate_of == 0));
    }
}
