use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "agitrack", version, about = "Agitation detection from wristband signals and pose keypoints")]
pub struct Cli {
    /// TOML file overlaying defaults ([engine], [forest], [seq], [synth], [preagitation])
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root directory for relative --in/--out paths
    #[arg(long, global = true, env = "AGITRACK_DATA_DIR")]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic session directory
    Synth(SynthArgs),
    /// Load a session directory and report what it holds
    Ingest(IngestArgs),
    /// Extract wristband or pose features
    #[command(subcommand)]
    Features(FeaturesCmd),
    /// Train a classifier
    #[command(subcommand)]
    Train(TrainCmd),
    /// Per-class correlation pruning of pose features
    Prune(PruneArgs),
    /// Score a recorded session and run the detection engine over it
    Replay(ReplayArgs),
    /// Run the review service, optionally feeding it a replayed session
    Serve(ServeArgs),
    /// Render a CSV trace to an SVG line plot
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `default` or a scenario TOML file
    #[arg(long, default_value = "default")]
    pub spec: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Session length override in seconds (episodes past the end are dropped)
    #[arg(long)]
    pub duration: Option<f64>,
    /// Participant id written to the session metadata
    #[arg(long)]
    pub participant: Option<String>,
    #[arg(long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Session directory
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long = "out")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FeaturesCmd {
    /// One row of 153 features per window
    Wrist(WristArgs),
    /// Fixed-length pose feature sequences
    Pose(PoseArgs),
}

#[derive(Debug, Args)]
pub struct WristArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub out: PathBuf,
    /// Window length in seconds (only 60 is supported)
    #[arg(long, default_value_t = 60.0)]
    pub window: f64,
    #[arg(long, default_value_t = 60.0)]
    pub stride: f64,
    /// Append the vendor biomarker columns
    #[arg(long)]
    pub biomarkers: bool,
}

#[derive(Debug, Args)]
pub struct PoseArgs {
    /// Session directory with keypoints.jsonl
    #[arg(long = "in", required_unless_present = "clips")]
    pub input: Option<PathBuf>,
    /// Instead of a session, generate this many synthetic clips per class
    #[arg(long, conflicts_with = "input")]
    pub clips: Option<usize>,
    #[arg(long = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub window: f64,
    #[arg(long, default_value_t = 1.0)]
    pub stride: f64,
    /// Tracked person id; defaults to the first one seen
    #[arg(long)]
    pub participant: Option<String>,
    /// Prune report whose kept features select the columns
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum TrainCmd {
    /// Tree ensemble on a wrist feature matrix
    Forest(ForestArgs),
    /// Recurrent network on pose sequences
    Seq(SeqArgs),
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub out: PathBuf,
    /// extra_trees, random_forest or gradient_boosted
    #[arg(long, default_value = "extra_trees")]
    pub kind: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Decision threshold for the evaluation report
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// How PRE_AGITATION windows enter training: exclude, negative or positive
    #[arg(long, default_value = "exclude")]
    pub preagitation: String,
    /// Evaluation report path (default: next to the model)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeqArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub out: PathBuf,
    /// lstm or gru
    #[arg(long, default_value = "lstm")]
    pub kind: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    /// Stop once held-out accuracy reaches this
    #[arg(long)]
    pub target_accuracy: Option<f64>,
    /// Evaluation report path (default: next to the model)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Per-epoch loss CSV
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Sequence dataset CSV written by `features pose`
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Session directory
    #[arg(long = "in", alias = "session")]
    pub input: PathBuf,
    /// Event log (JSON lines)
    #[arg(long = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub wrist_model: Option<PathBuf>,
    #[arg(long)]
    pub video_model: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// OR, WRIST_ONLY or VIDEO_ONLY
    #[arg(long)]
    pub fusion: Option<String>,
    /// Detection latency report (default: next to the event log)
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Window scores CSV
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Store directory (event log, snapshots, models)
    #[arg(long = "out", default_value = "store")]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Bearer token required on every route but /healthz
    #[arg(long, env = "AGITRACK_TOKEN", hide_env_values = true)]
    pub token: Option<String>,
    /// Session directory to replay into the service
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub wrist_model: Option<PathBuf>,
    #[arg(long)]
    pub video_model: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub fusion: Option<String>,
    /// Replay speed as a multiple of real time; 0 replays without pausing
    #[arg(long, default_value_t = 60.0)]
    pub speed: f64,
    /// Register the replayed session as labeled (its labels become training data)
    #[arg(long)]
    pub labeled: bool,
    /// Exit after the replay instead of serving forever
    #[arg(long)]
    pub exit_after_replay: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// CSV with a header; the first column is the x axis
    #[arg(long = "in")]
    pub input: PathBuf,
    /// SVG output
    #[arg(long = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub title: Option<String>,
}
