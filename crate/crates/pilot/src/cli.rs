//! Command-line front end.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gesture_pilot::annotate::annotate;
use gesture_pilot::frame::{encode_pgm, load_sequence, try_read_wire_frame, write_ppm};
use gesture_pilot::pipeline::{PipelineState, StageTimings};
use gesture_pilot::scenario::Scenario;
use gesture_pilot::scene::{render_at, ArmPose};
use gesture_pilot::skin::{debug_rasters, train_from_dirs};
use gesture_pilot::{BoundingBox, Frame, FrameReport, Models, Pipeline, PipelineConfig};

use crate::server::{serve, AppState};

#[derive(Debug, Parser)]
#[command(name = "pilot", version, about = "Fly a simulated quadrotor with arm gestures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Process a frame directory or a rendered scenario.
    Run(RunArgs),
    /// Serve the HTTP control endpoints and the /pilot WebSocket.
    Serve(ServeArgs),
    /// Build a skin lookup table from directories of skin and non-skin images.
    TrainSkin(TrainSkinArgs),
    /// Time each pipeline stage on rendered frames.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON pipeline configuration; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// OpenCV Haar cascade XML.
    #[arg(long)]
    pub cascade: Option<PathBuf>,
    /// Skin model written by `train-skin`.
    #[arg(long)]
    pub skin_model: Option<PathBuf>,
    /// Start tracking this box instead of waiting for a face.
    #[arg(long, value_parser = parse_box, value_name = "X,Y,W,H")]
    pub init_box: Option<BoundingBox>,
    /// Tracker overrides, e.g. `eta=0.05,scales=17`.
    #[arg(long, value_name = "KEY=VALUE,...")]
    pub tracker: Option<String>,
}

impl ModelArgs {
    pub fn config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if self.cascade.is_some() {
            config.io.cascade = self.cascade.clone();
        }
        if self.skin_model.is_some() {
            config.io.skin_model = self.skin_model.clone();
        }
        if self.init_box.is_some() {
            config.init_box = self.init_box;
        }
        if let Some(spec) = &self.tracker {
            config.tracker.apply_overrides(spec)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    /// `dir:<path>` (or a bare path) for a frame directory, `wire:stdin` or
    /// `wire:<host:port>` for a stream of wire frames.
    #[arg(long, required_unless_present = "scenario", conflicts_with = "scenario", value_parser = parse_input)]
    pub input: Option<Input>,
    #[arg(long, default_value = "*.ppm")]
    pub pattern: String,
    /// Milliseconds between input frames.
    #[arg(long, default_value_t = 40)]
    pub frame_interval: u32,
    /// Closed-loop scenario JSON; frames are rendered from the simulated drone.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// JSONL report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Directory for annotated frames.
    #[arg(long)]
    pub annotated: Option<PathBuf>,
    /// Directory for skin likelihood, mask and overlay images.
    #[arg(long)]
    pub dump_skin: Option<PathBuf>,
    /// JSONL of tracked boxes.
    #[arg(long)]
    pub track_log: Option<PathBuf>,
    /// JSONL of per-frame hand detections.
    #[arg(long)]
    pub hand_log: Option<PathBuf>,
    /// JSONL of emitted commands.
    #[arg(long)]
    pub command_log: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    Dir(PathBuf),
    WireStdin,
    WireTcp(String),
}

pub fn parse_input(s: &str) -> std::result::Result<Input, String> {
    match s.split_once(':') {
        Some(("dir", path)) if !path.is_empty() => Ok(Input::Dir(path.into())),
        Some(("wire", "stdin")) => Ok(Input::WireStdin),
        Some(("wire", addr)) if addr.contains(':') => Ok(Input::WireTcp(addr.into())),
        Some(("wire", other)) => Err(format!("wire input must be stdin or host:port, got {other:?}")),
        _ if !s.is_empty() => Ok(Input::Dir(s.into())),
        _ => Err("empty input".into()),
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: std::net::IpAddr,
    /// Largest accepted frame, in pixels.
    #[arg(long)]
    pub max_pixels: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainSkinArgs {
    #[arg(long)]
    pub skin: PathBuf,
    #[arg(long)]
    pub nonskin: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub bins: u32,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub models: ModelArgs,
    #[arg(long, default_value_t = 200)]
    pub frames: usize,
}

pub fn parse_box(s: &str) -> std::result::Result<BoundingBox, String> {
    let parts: Vec<i32> = s
        .split(',')
        .map(|p| p.trim().parse::<i32>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(BoundingBox::new(x, y, w, h)),
        [_, _, _, _] => Err("width and height must be positive".into()),
        _ => Err(format!("expected x,y,w,h, got {s:?}")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Serve(args) => serve_command(&args),
        Command::TrainSkin(args) => train_skin_command(&args),
        Command::Bench(args) => bench_command(&args),
    }
}

struct Sinks {
    report: Box<dyn Write>,
    track: Option<BufWriter<File>>,
    hand: Option<BufWriter<File>>,
    command: Option<BufWriter<File>>,
    annotated: Option<PathBuf>,
    dump_skin: Option<PathBuf>,
}

fn create(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    path.as_ref()
        .map(|p| File::create(p).map(BufWriter::new).with_context(|| format!("creating {}", p.display())))
        .transpose()
}

impl Sinks {
    fn open(args: &RunArgs) -> Result<Sinks> {
        let report: Box<dyn Write> = match &args.report {
            Some(path) => {
                Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
            }
            None => Box::new(BufWriter::new(std::io::stdout())),
        };
        for dir in [&args.annotated, &args.dump_skin].into_iter().flatten() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Sinks {
            report,
            track: create(&args.track_log)?,
            hand: create(&args.hand_log)?,
            command: create(&args.command_log)?,
            annotated: args.annotated.clone(),
            dump_skin: args.dump_skin.clone(),
        })
    }

    fn write(&mut self, pipeline: &Pipeline, models: &Models, frame: &Frame, report: &FrameReport) -> Result<()> {
        writeln!(self.report, "{}", report.to_jsonl())?;
        if let (Some(out), Some(line)) = (&mut self.track, report.track_log_line()) {
            writeln!(out, "{line}")?;
        }
        if let Some(out) = &mut self.hand {
            writeln!(out, "{}", report.detection.log_line(report.timestamp_ms))?;
        }
        if let (Some(out), Some(cmd)) = (&mut self.command, report.command) {
            let width = report.user_box.map_or(0.0, |b| f64::from(b.width));
            writeln!(out, "{}", cmd.log_line(report.timestamp_ms, width))?;
        }
        if let Some(dir) = &self.annotated {
            write_ppm(&dir.join(format!("frame_{:06}.ppm", report.frame)), &annotate(frame, report))?;
        }
        if let (Some(dir), Some(mask)) = (&self.dump_skin, pipeline.last_mask()) {
            let (likelihood, binary, overlay) = debug_rasters(&models.skin, frame, mask);
            std::fs::write(dir.join(format!("skin_{:06}_likelihood.pgm", report.frame)), encode_pgm(&likelihood))?;
            std::fs::write(dir.join(format!("skin_{:06}_mask.pgm", report.frame)), encode_pgm(&binary))?;
            write_ppm(&dir.join(format!("skin_{:06}_overlay.ppm", report.frame)), &overlay)?;
        }
        Ok(())
    }
}

impl Sinks {
    fn flush(&mut self) -> Result<()> {
        self.report.flush()?;
        for out in [&mut self.track, &mut self.hand, &mut self.command].into_iter().flatten() {
            out.flush()?;
        }
        Ok(())
    }
}

type FrameSource = Box<dyn Iterator<Item = gesture_pilot::Result<Frame>>>;

fn open_input(input: &Input, config: &PipelineConfig) -> Result<FrameSource> {
    let wire = |reader: Box<dyn Read>| -> FrameSource {
        let mut reader = BufReader::new(reader);
        let max = config.io.max_pixels;
        Box::new(std::iter::from_fn(move || try_read_wire_frame(&mut reader, max).transpose()))
    };
    Ok(match input {
        Input::Dir(dir) => {
            let frames = load_sequence(dir, &config.io.pattern, config.io.frame_interval_ms)?;
            log::info!("{} frames from {}", frames.len(), dir.display());
            Box::new(frames.into_iter().map(Ok))
        }
        Input::WireStdin => wire(Box::new(std::io::stdin())),
        Input::WireTcp(addr) => {
            let stream = TcpStream::connect(addr).with_context(|| format!("connecting to {addr}"))?;
            wire(Box::new(stream))
        }
    })
}

fn run_command(args: &RunArgs) -> Result<()> {
    let mut config = args.models.config()?;
    config.io.pattern = args.pattern.clone();
    config.io.frame_interval_ms = args.frame_interval;
    config.io.input = match &args.input {
        Some(Input::Dir(dir)) => Some(dir.clone()),
        _ => None,
    };
    config.io.scenario = args.scenario.clone();
    config.io.report = args.report.clone();
    config.io.annotated = args.annotated.clone();
    config.io.dump_skin = args.dump_skin.clone();

    let scenario = args.scenario.as_deref().map(Scenario::load).transpose()?;
    if let Some(s) = &scenario {
        s.configure(&mut config);
    }
    let models = Models::load(&config)?;
    let mut pipeline = Pipeline::new(config.clone(), models.clone())?;
    let mut sinks = Sinks::open(args)?;

    let last = match &scenario {
        Some(s) => {
            let reports = s.run_with(&mut pipeline, |pipeline, frame, report| {
                sinks.write(pipeline, &models, frame, report).map_err(|e| gesture_pilot::Error::Input(e.to_string()))
            });
            reports?.pop()
        }
        None => {
            let mut frames = open_input(args.input.as_ref().expect("clap requires --input"), &config)?;
            let mut last = None;
            while let Some(frame) = frames.next().transpose()? {
                let report = pipeline.process(&frame)?;
                sinks.write(&pipeline, &models, &frame, &report)?;
                let lost = report.state == PipelineState::Lost;
                last = Some(report);
                if lost {
                    break;
                }
            }
            last
        }
    };
    sinks.flush()?;
    if let Some(r) = last.filter(|r| r.state == PipelineState::Lost) {
        bail!("tracking lost at frame {}: {}", r.frame, r.error.unwrap_or_default());
    }
    Ok(())
}

fn serve_command(args: &ServeArgs) -> Result<()> {
    let mut config = args.models.config()?;
    if let Some(max) = args.max_pixels {
        config.io.max_pixels = max;
    }
    let models = Models::load(&config)?;
    let state = AppState::new(config, models);
    let addr = SocketAddr::new(args.bind, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        serve(listener, state).await?;
        Ok(())
    })
}

fn train_skin_command(args: &TrainSkinArgs) -> Result<()> {
    let model = train_from_dirs(&args.skin, &args.nonskin, args.bins)?;
    model.save(&args.output)?;
    log::info!("wrote {}-bin skin model to {}", model.bins(), args.output.display());
    Ok(())
}

#[derive(Default)]
struct Column {
    samples: Vec<f64>,
}

impl Column {
    fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len().max(1) as f64
    }

    fn p95(&self) -> f64 {
        let mut s = self.samples.clone();
        s.sort_by(|a, b| a.total_cmp(b));
        s.get((s.len() as f64 * 0.95) as usize).or(s.last()).copied().unwrap_or(0.0)
    }
}

fn bench_command(args: &BenchArgs) -> Result<()> {
    let config = args.models.config()?;
    let models = Models::load(&config)?;
    let frames = bench_frames(&config, args.frames)?;
    let mut pipeline = Pipeline::new(config, models)?;
    let names = ["init", "track", "skin", "hands", "command", "sim", "annotate", "total"];
    let mut columns: Vec<Column> = names.iter().map(|_| Column::default()).collect();
    let start = Instant::now();
    for frame in &frames {
        let t = Instant::now();
        let report = pipeline.process(frame)?;
        let a = Instant::now();
        let _ = annotate(frame, &report);
        let annotate_ms = a.elapsed().as_secs_f64() * 1e3;
        let StageTimings { init, track, skin, hands, command, sim } = pipeline.timings();
        let total = t.elapsed().as_secs_f64() * 1e3;
        for (c, v) in columns.iter_mut().zip([init, track, skin, hands, command, sim, annotate_ms, total]) {
            c.samples.push(v);
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut out = std::io::stdout().lock();
    writeln!(out, "{:<10} {:>10} {:>10}", "stage", "mean ms", "p95 ms")?;
    for (name, c) in names.iter().zip(&columns) {
        writeln!(out, "{name:<10} {:>10.3} {:>10.3}", c.mean(), c.p95())?;
    }
    writeln!(out, "{} frames, {:.1} fps", frames.len(), frames.len() as f64 / elapsed)?;
    Ok(())
}

/// A user holding a stretched arm, filmed from the configured start pose.
fn bench_frames(config: &PipelineConfig, count: usize) -> Result<Vec<Frame>> {
    let mut scenario = Scenario::holding(ArmPose::Right, 0.4, count);
    scenario.scene.user_position = config.world.user_position;
    scenario.scene.noise_seed = Some(1);
    let drone = gesture_pilot::sim::DroneState::facing(config.world.drone_start, config.world.user_position);
    (0..count)
        .map(|i| {
            let ts = (i as u32) * config.io.frame_interval_ms;
            Ok(render_at(&scenario.spec_at(i), &drone, ts)?.0)
        })
        .collect()
}
