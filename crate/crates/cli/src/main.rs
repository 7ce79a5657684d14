//! `keyframe`: extract entropy-based key-frames from a grayscale frame
//! sequence, or generate seeded synthetic test videos.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use keyframe_entropy::eval::DEFAULT_MATCH_WINDOW;
use keyframe_entropy::ingest::{Locator, SourceKind, SourceSpec};
use keyframe_entropy::keyframes::{DEFAULT_MIN_BIN_SIZE, DEFAULT_SD_THRESHOLD};
use keyframe_entropy::pipeline::{run_pipeline, ExtractParams, PipelineConfig, REPORT_FILE};
use keyframe_entropy::shots::{DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};
use keyframe_entropy::synth::{SynthConfig, SyntheticVideo};

const EXIT_BAD_CONFIG: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "keyframe", version)]
#[command(about = "Entropy-based shot segmentation and key-frame extraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract key-frames and write them with a JSON report
    Extract(ExtractArgs),
    /// Write a seeded synthetic video with planted cuts, fades and a repeated scene
    GenerateSynthetic(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    /// Directory of binary PGM files, read in filename order
    PgmDir,
    /// Packed 8-bit luma frames; needs --width and --height
    Raw,
    /// YUV4MPEG2 stream; only the Y plane is used
    Y4m,
}

impl From<InputFormat> for SourceKind {
    fn from(f: InputFormat) -> Self {
        match f {
            InputFormat::PgmDir => SourceKind::ImageDirectory,
            InputFormat::Raw => SourceKind::RawGray,
            InputFormat::Y4m => SourceKind::Y4m,
        }
    }
}

#[derive(clap::Args, Debug)]
struct ExtractArgs {
    /// Input path, or `-` for stdin (raw and y4m only)
    #[arg(long, value_name = "PATH")]
    input: String,

    #[arg(long, value_enum)]
    format: InputFormat,

    /// Frame width in pixels (raw input)
    #[arg(long)]
    width: Option<usize>,

    /// Frame height in pixels (raw input)
    #[arg(long)]
    height: Option<usize>,

    /// Consecutive frames correlating below this start a new shot
    #[arg(long, default_value_t = DEFAULT_CUT_THRESHOLD)]
    cut_threshold: f64,

    /// Shots shorter than this many frames are merged into a neighbour
    #[arg(long, default_value_t = DEFAULT_MIN_SHOT_LEN)]
    min_shot_len: usize,

    /// Entropy bins need more than this many frames to yield a key-frame
    #[arg(long, default_value_t = DEFAULT_MIN_BIN_SIZE)]
    min_bin_size: usize,

    /// Key-frames within this segmented-entropy SD of an earlier one are dropped
    #[arg(long, default_value_t = DEFAULT_SD_THRESHOLD)]
    sd_threshold: f64,

    /// Emit the centre of the largest bin for shots where no bin qualifies
    #[arg(long)]
    fallback_keyframe: bool,

    /// Ground-truth file to evaluate against
    #[arg(long, value_name = "FILE")]
    gt: Option<PathBuf>,

    /// Matching tolerance in frames for evaluation
    #[arg(long, default_value_t = DEFAULT_MATCH_WINDOW)]
    match_window: usize,

    /// Output directory for key-frame images and report.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Also write the detected key-frames as an editable ground-truth file
    #[arg(long)]
    seed_report: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    PgmDir,
    Raw,
    Y4m,
}

#[derive(clap::Args, Debug)]
struct SynthArgs {
    /// Distinct scenes
    #[arg(long, default_value_t = 3)]
    scenes: usize,

    #[arg(long, default_value_t = 997)]
    frames_per_scene: usize,

    /// Frame size as WIDTHxHEIGHT
    #[arg(long, default_value = "320x240", value_parser = parse_size)]
    size: (usize, usize),

    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Dark noise frames in front of every scene after the first
    #[arg(long, default_value_t = 4)]
    fade_len: usize,

    /// Do not append a verbatim repeat of the first scene
    #[arg(long)]
    no_repeat: bool,

    /// pgm-dir writes frame_NNNNNN.pgm; raw and y4m write video.raw / video.y4m
    #[arg(long, value_enum, default_value_t = OutputFormat::PgmDir)]
    format: OutputFormat,

    #[arg(long, value_name = "DIR")]
    out: PathBuf,

    /// Where to write the ground-truth file
    #[arg(long, value_name = "FILE")]
    gt_out: Option<PathBuf>,

    /// Where to write the planted segment layout as JSON
    #[arg(long, value_name = "FILE")]
    layout_out: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(w)?, parse(h)?))
}

fn extract(args: ExtractArgs) -> ExitCode {
    let source = SourceSpec {
        kind: args.format.into(),
        locator: Locator::from(args.input),
        width: args.width,
        height: args.height,
    };
    let config = PipelineConfig {
        source,
        params: ExtractParams {
            cut_threshold: args.cut_threshold,
            min_shot_len: args.min_shot_len,
            min_bin_size: args.min_bin_size,
            sd_threshold: args.sd_threshold,
            fallback_keyframe: args.fallback_keyframe,
        },
        match_window: args.match_window,
        output_dir: args.out,
        ground_truth: args.gt,
        seed_report: args.seed_report,
    };

    let started = Instant::now();
    let report = match run_pipeline(&config) {
        Ok(report) => report,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let ex = &report.extraction;
    println!(
        "{} frames, {} shots ({} before merging), {} candidates, {} key-frames, {} eliminated",
        ex.total_frames,
        ex.shots.len(),
        ex.raw_shot_count,
        ex.candidates.len(),
        ex.keyframes.len(),
        ex.eliminations.len(),
    );
    if let Some(eval) = &report.evaluation {
        println!(
            "identified {} redundant {} missing {} deviation {:.2} compactness {:.5}",
            eval.identified, eval.redundant, eval.missing, eval.deviation, eval.compactness
        );
    }
    println!(
        "wrote {} in {:.1}s",
        config.output_dir.join(REPORT_FILE).display(),
        started.elapsed().as_secs_f64()
    );
    ExitCode::SUCCESS
}

fn synth_config(args: &SynthArgs) -> anyhow::Result<SynthConfig> {
    let (width, height) = args.size;
    if width < 8 || height < 8 {
        bail!("size must be at least 8x8, got {width}x{height}");
    }
    if args.scenes == 0 || args.frames_per_scene == 0 {
        bail!("need at least one scene of at least one frame");
    }
    Ok(SynthConfig {
        scenes: args.scenes,
        frames_per_scene: args.frames_per_scene,
        width,
        height,
        seed: args.seed,
        fade_len: args.fade_len,
        repeat_first: !args.no_repeat,
    })
}

fn generate(args: SynthArgs, config: SynthConfig) -> anyhow::Result<()> {
    let video = SyntheticVideo::new(config);

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    match args.format {
        OutputFormat::PgmDir => video.write_pgm_dir(&args.out)?,
        OutputFormat::Raw => {
            let path = args.out.join("video.raw");
            video.write_raw(BufWriter::new(File::create(&path)?))?;
        }
        OutputFormat::Y4m => {
            let path = args.out.join("video.y4m");
            video.write_y4m(BufWriter::new(File::create(&path)?))?;
        }
    }
    if let Some(layout_out) = &args.layout_out {
        let layout = serde_json::to_string_pretty(video.layout())?;
        fs::write(layout_out, layout + "\n")
            .with_context(|| format!("writing {}", layout_out.display()))?;
    }
    if let Some(gt_out) = &args.gt_out {
        fs::write(gt_out, video.layout().ground_truth().to_text())
            .with_context(|| format!("writing {}", gt_out.display()))?;
    }
    println!(
        "wrote {} frames ({} segments) to {}",
        video.len(),
        video.layout().segments.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Extract(args) => extract(args),
        Command::GenerateSynthetic(args) => {
            let config = match synth_config(&args) {
                Ok(config) => config,
                Err(err) => {
                    eprintln!("error: {err:#}");
                    return ExitCode::from(EXIT_BAD_CONFIG);
                }
            };
            match generate(args, config) {
                Ok(()) => ExitCode::SUCCESS,
                Err(err) => {
                    eprintln!("error: {err:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
