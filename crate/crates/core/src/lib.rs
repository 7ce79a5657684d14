//! Key-frame extraction for grayscale frame sequences.
//!
//! A video is split into shots wherever the pixel correlation of two
//! consecutive frames drops below a threshold. Inside each shot, frames are
//! grouped by `round(entropy²)` of their grey-level histogram and the centre
//! frame of every sufficiently large group becomes a key-frame candidate.
//! Candidates whose 8×8 grid of local entropies matches an earlier key-frame
//! (standard deviation of the differences near zero) are dropped.
//!
//! ```
//! use keyframe_entropy::{frame::Frame, entropy};
//!
//! let frame = Frame::new(0, 2, 2, vec![0, 0, 255, 255]).unwrap();
//! let en = entropy::frame_entropy(&frame);
//! assert_eq!(en, 1.0);
//! assert_eq!(entropy::modified_entropy(en), 1);
//! ```

pub mod entropy;
pub mod eval;
pub mod frame;
pub mod ingest;
pub mod keyframes;
pub mod pipeline;
pub mod shots;
pub mod synth;

pub use entropy::{
    dissimilarity, entropy, frame_entropy, histogram, modified_entropy, segmented_entropies,
    Histogram, SegmentedEntropy,
};
pub use eval::{match_keyframes, metrics, EvalReport, GroundTruth, Matching};
pub use frame::{to_grayscale, Frame};
pub use ingest::{open_source, FrameStream, IngestError, Locator, SourceKind, SourceSpec};
pub use keyframes::{bin_frames, dedup, select_keyframes, EntropyBin, KeyFrame};
pub use pipeline::{run_pipeline, ExtractParams, PipelineConfig, PipelineError, Report};
pub use shots::{correlation, detect_cuts, merge_short_shots, Shot};
