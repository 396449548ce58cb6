use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mapcore::config::{Intervals, PipelineConfig};
use mapcore::raster::{DepthFormat, ValidRange};

#[derive(Debug, Parser)]
#[command(
    name = "mapcore",
    version,
    about = "Geolocate objects in street-level images from metric depth"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geolocate detections from depth rasters and camera metadata.
    Locate {
        #[command(flatten)]
        common: Common,
        /// How depths under a mask are combined.
        #[arg(long, value_enum, default_value_t = Aggregate::Mean)]
        aggregate: Aggregate,
    },
    /// Compare predicted depth against ground-truth rasters or point clouds.
    EvalDepth {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = PoolingArg::Pixel)]
        pooling: PoolingArg,
    },
    /// Merge same-class records closer than the radius.
    Dedup {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = LinkageArg::Transitive)]
        linkage: LinkageArg,
    },
    /// Match records against annotations or a database.
    Match {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Annotations)]
        mode: Mode,
        /// Camera-object distance edges for the summary, e.g. `10,20`.
        #[arg(long)]
        intervals: Option<Intervals>,
    },
    /// Render a synthetic survey with exact ground truth.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        images: usize,
        #[arg(long = "per-image", default_value_t = 5)]
        per_image: usize,
        /// Multiplicative Gaussian depth noise, as a fraction.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 960)]
        width: u32,
        #[arg(long, default_value_t = 540)]
        height: u32,
        #[arg(long, default_value_t = 600.0)]
        focal: f64,
    },
    /// Print depth and coordinate error tables from earlier outputs.
    Report {
        #[command(flatten)]
        common: Common,
        /// `eval_depth.json` written by eval-depth.
        #[arg(long = "eval")]
        eval_json: Option<PathBuf>,
        /// `match.json` written by match.
        #[arg(long = "match")]
        match_json: Option<PathBuf>,
        #[arg(long)]
        intervals: Option<Intervals>,
        /// Write a box plot of coordinate errors here.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Aggregate {
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PoolingArg {
    Pixel,
    Image,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LinkageArg {
    Transitive,
    Strict,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Annotations,
    Database,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub meta: Option<PathBuf>,
    #[arg(long)]
    pub depth_dir: Option<PathBuf>,
    /// `pfm` or `raw`.
    #[arg(long)]
    pub depth_format: Option<DepthFormat>,
    #[arg(long)]
    pub detections: Option<PathBuf>,
    #[arg(long)]
    pub labels_dir: Option<PathBuf>,
    #[arg(long)]
    pub cloud_dir: Option<PathBuf>,
    #[arg(long)]
    pub truth_dir: Option<PathBuf>,
    #[arg(long)]
    pub refs: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Dedup radius (database mode: search radius), metres.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub max_dist: Option<f64>,
    #[arg(long)]
    pub bearing_tol: Option<f64>,
    /// Depth bin edges, e.g. `5,10,20`.
    #[arg(long)]
    pub bins: Option<Intervals>,
    /// `MIN,MAX` in metres; depths in (MIN, MAX] are valid.
    #[arg(long)]
    pub valid_range: Option<ValidRange>,
    #[arg(long)]
    pub earth_radius: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_timestamp: bool,
}

impl Common {
    /// Config file (or defaults) with flags applied on top, validated.
    pub fn resolve(&self) -> mapcore::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone().into();
                }
            )*};
        }
        set!(meta, depth_dir, detections, labels_dir, cloud_dir, truth_dir, refs, records, out);
        set!(
            depth_format,
            radius,
            max_dist,
            bearing_tol,
            bins,
            valid_range,
            earth_radius,
            workers
        );
        cfg.no_timestamp |= self.no_timestamp;
        cfg.validate()?;
        Ok(cfg)
    }
}
