//! Seeded synthetic videos with planted cuts, short fade shots and a
//! verbatim repeat of the first scene.
//!
//! Each scene is a smooth textured plane with spatially varying contrast that
//! pans slowly, so consecutive frames stay highly correlated. Scenes are
//! separated by short runs of dark noise frames. Frames are generated on
//! demand from `(seed, index)`, so a video never has to exist in memory.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::GroundTruth;
use crate::frame::Frame;
use crate::ingest::pgm;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub scenes: usize,
    pub frames_per_scene: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Dark noise frames inserted in front of every segment but the first.
    pub fade_len: usize,
    /// Append a verbatim copy of scene 0 at the end.
    pub repeat_first: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            scenes: 3,
            frames_per_scene: 997,
            width: 320,
            height: 240,
            seed: 7,
            fade_len: 4,
            repeat_first: true,
        }
    }
}

/// One planted stretch of scene content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub scene: usize,
    /// First frame of the fade in front of this segment (equals `start`
    /// when there is no fade).
    pub fade_start: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub total_frames: usize,
    pub segments: Vec<Segment>,
}

impl Layout {
    pub fn new(config: &SynthConfig) -> Self {
        let order: Vec<usize> = (0..config.scenes)
            .chain(config.repeat_first.then_some(0))
            .collect();
        let mut segments = Vec::with_capacity(order.len());
        let mut cursor = 0;
        for (i, &scene) in order.iter().enumerate() {
            let fade_start = cursor;
            if i > 0 {
                cursor += config.fade_len;
            }
            segments.push(Segment {
                scene,
                fade_start,
                start: cursor,
                end: cursor + config.frames_per_scene,
            });
            cursor += config.frames_per_scene;
        }
        Self {
            total_frames: cursor,
            segments,
        }
    }

    /// Shot boundaries after short fades are merged forward: each segment's
    /// shot starts where its fade starts.
    pub fn expected_shot_starts(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.fade_start).collect()
    }

    /// Centre frame of the first occurrence of every scene.
    pub fn ground_truth(&self) -> GroundTruth {
        let mut seen = Vec::new();
        let mut indices = Vec::new();
        for seg in &self.segments {
            if !seen.contains(&seg.scene) {
                seen.push(seg.scene);
                indices.push(seg.start + (seg.end - seg.start) / 2);
            }
        }
        GroundTruth {
            keyframe_indices: indices,
            total_frames: self.total_frames,
        }
    }

    /// What the generator draws at `index`.
    pub fn locate(&self, index: usize) -> Location {
        for seg in &self.segments {
            if (seg.fade_start..seg.start).contains(&index) {
                return Location::Fade {
                    before: seg.scene,
                    step: index - seg.fade_start,
                };
            }
            if (seg.start..seg.end).contains(&index) {
                return Location::Scene {
                    scene: seg.scene,
                    t: index - seg.start,
                };
            }
        }
        Location::OutOfRange
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Scene { scene: usize, t: usize },
    Fade { before: usize, step: usize },
    OutOfRange,
}

/// Static texture a scene pans across.
struct SceneTexture {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    velocity: (f64, f64),
}

/// Deterministic frame source for a [`SynthConfig`].
pub struct SyntheticVideo {
    config: SynthConfig,
    layout: Layout,
    textures: Vec<SceneTexture>,
}

/// Independent generator for one `(purpose, item)` pair under `seed`.
fn sub_rng(seed: u64, purpose: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose << 32 | item);
    rng
}

impl SyntheticVideo {
    pub fn new(config: SynthConfig) -> Self {
        let layout = Layout::new(&config);
        let textures = (0..config.scenes)
            .map(|scene| Self::make_texture(&config, scene))
            .collect();
        Self {
            config,
            layout,
            textures,
        }
    }

    fn make_texture(config: &SynthConfig, scene: usize) -> SceneTexture {
        let mut rng = sub_rng(config.seed, 1, scene as u64);
        let speed = |rng: &mut ChaCha8Rng| {
            let v: f64 = rng.gen_range(0.03..0.07);
            if rng.gen_bool(0.5) { v } else { -v }
        };
        let velocity = (speed(&mut rng), speed(&mut rng) * 0.5);
        let travel = |v: f64| (v.abs() * config.frames_per_scene as f64).ceil() as usize + 2;
        let width = config.width + travel(velocity.0);
        let height = config.height + travel(velocity.1);

        // smooth field: a few long-wavelength gratings
        let gratings: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                let wavelength = rng.gen_range(40.0..140.0);
                let angle = rng.gen_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                (k * angle.cos(), k * angle.sin(), rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.5..1.0))
            })
            .collect();
        let weight: f64 = gratings.iter().map(|g| g.3).sum();

        // contrast envelope: a handful of gaussian blobs over a low floor
        let blobs: Vec<(f64, f64, f64)> = (0..5)
            .map(|_| {
                (
                    rng.gen_range(0.0..width as f64),
                    rng.gen_range(0.0..height as f64),
                    rng.gen_range(0.12..0.3) * config.width.min(config.height) as f64 * 1.5,
                )
            })
            .collect();
        let base_level: f64 = rng.gen_range(90.0..165.0);

        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (fx, fy) = (x as f64, y as f64);
                let field: f64 = gratings
                    .iter()
                    .map(|&(kx, ky, phase, amp)| amp * (kx * fx + ky * fy + phase).sin())
                    .sum::<f64>()
                    / weight;
                let envelope: f64 = 0.08
                    + blobs
                        .iter()
                        .map(|&(cx, cy, r)| {
                            let d2 = (fx - cx).powi(2) + (fy - cy).powi(2);
                            (-d2 / (2.0 * r * r)).exp()
                        })
                        .fold(0.0, f64::max);
                let grain: f64 = rng.gen_range(-3.0..3.0);
                let value = base_level + 230.0 * envelope.min(1.0) * field + grain;
                pixels.push(value.round().clamp(0.0, 255.0) as u8);
            }
        }
        SceneTexture {
            width,
            height,
            pixels,
            velocity,
        }
    }

    pub fn config(&self) -> &SynthConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.layout.total_frames
    }

    pub fn is_empty(&self) -> bool {
        self.layout.total_frames == 0
    }

    pub fn frame(&self, index: usize) -> Frame {
        let (w, h) = (self.config.width, self.config.height);
        let pixels = match self.layout.locate(index) {
            Location::Scene { scene, t } => self.scene_pixels(scene, t),
            Location::Fade { before, step } => {
                // dark noise that halves its range every step
                let mut rng = sub_rng(self.config.seed, 2, (before * 1024 + step) as u64);
                let levels = (16u32 >> step.min(4)).max(2);
                (0..w * h).map(|_| rng.gen_range(0..levels) as u8).collect()
            }
            Location::OutOfRange => panic!("frame {index} outside synthetic video"),
        };
        Frame::new(index, w, h, pixels).expect("generator produces full frames")
    }

    fn scene_pixels(&self, scene: usize, t: usize) -> Vec<u8> {
        let tex = &self.textures[scene];
        let offset = |v: f64, span: usize| {
            let travel = (v.abs() * t as f64).floor() as usize;
            if v >= 0.0 { travel } else { span - 1 - travel }
        };
        let span_x = tex.width - self.config.width;
        let span_y = tex.height - self.config.height;
        let ox = offset(tex.velocity.0, span_x);
        let oy = offset(tex.velocity.1, span_y);
        let mut pixels = Vec::with_capacity(self.config.width * self.config.height);
        for y in 0..self.config.height {
            let row = (oy + y) * tex.width + ox;
            pixels.extend_from_slice(&tex.pixels[row..row + self.config.width]);
        }
        pixels
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.len()).map(move |i| self.frame(i))
    }

    /// Owned frame iterator, suitable for a [`FrameStream`](crate::ingest::FrameStream).
    pub fn into_frames(self) -> impl Iterator<Item = Frame> + Send + 'static {
        (0..self.len()).map(move |i| self.frame(i))
    }

    /// Writes `frame_000000.pgm`, `frame_000001.pgm`, … into `dir`.
    pub fn write_pgm_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for frame in self.frames() {
            let path = dir.join(format!("frame_{:06}.pgm", frame.index()));
            let out = BufWriter::new(File::create(path)?);
            pgm::write(out, frame.width(), frame.height(), frame.pixels())?;
        }
        Ok(())
    }

    pub fn write_raw<W: Write>(&self, mut out: W) -> io::Result<()> {
        for frame in self.frames() {
            out.write_all(frame.pixels())?;
        }
        out.flush()
    }

    /// Y4M, 4:2:0 with neutral chroma.
    pub fn write_y4m<W: Write>(&self, mut out: W) -> io::Result<()> {
        let (w, h) = (self.config.width, self.config.height);
        writeln!(out, "YUV4MPEG2 W{w} H{h} F24:1 Ip A1:1 C420jpeg")?;
        let chroma = vec![128u8; 2 * w.div_ceil(2) * h.div_ceil(2)];
        for frame in self.frames() {
            out.write_all(b"FRAME\n")?;
            out.write_all(frame.pixels())?;
            out.write_all(&chroma)?;
        }
        out.flush()
    }
}
