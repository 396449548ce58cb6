//! Protocol constants and the pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{EarthModel, MEAN_EARTH_RADIUS_M};
use crate::raster::{DepthFormat, ValidRange};

/// Depth-evaluation distance bins: <5, 5-10, 10-20, >=20 m.
pub const DEPTH_BIN_EDGES_M: [f64; 3] = [5.0, 10.0, 20.0];
/// Camera-to-sign intervals for coordinate errors: <10, 10-20, >=20 m.
pub const SIGN_INTERVAL_EDGES_M: [f64; 2] = [10.0, 20.0];
/// Camera-to-damage intervals: 2-4, 4-6, 6-8, 8-10 m (plus open ends).
pub const DAMAGE_INTERVAL_EDGES_M: [f64; 5] = [2.0, 4.0, 6.0, 8.0, 10.0];
/// Same-class detections closer than this are one object.
pub const DEDUP_RADIUS_M: f64 = 3.0;
/// Predictions further than this from every same-class reference stay unmatched.
pub const MATCH_MAX_DISTANCE_M: f64 = 10.0;
/// Estimates are flagged reliable below this camera-object distance.
pub const RELIABLE_DISTANCE_M: f64 = 20.0;
/// Allowed difference between the ray bearing and the bearing to a database entry.
pub const BEARING_TOLERANCE_DEG: f64 = 5.0;

/// Strictly increasing interval edges splitting `[0, inf)` into half-open
/// intervals `[lo, hi)`: `edges.len() + 1` intervals in total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Intervals {
    edges: Vec<f64>,
}

impl Intervals {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.iter().any(|e| !e.is_finite() || *e <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "interval edges must be positive and finite: {edges:?}"
            )));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "interval edges must be strictly increasing: {edges:?}"
            )));
        }
        Ok(Self { edges })
    }

    pub fn depth_bins() -> Self {
        Self {
            edges: DEPTH_BIN_EDGES_M.to_vec(),
        }
    }

    pub fn sign_intervals() -> Self {
        Self {
            edges: SIGN_INTERVAL_EDGES_M.to_vec(),
        }
    }

    pub fn damage_intervals() -> Self {
        Self {
            edges: DAMAGE_INTERVAL_EDGES_M.to_vec(),
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, value: f64) -> usize {
        self.edges.partition_point(|e| *e <= value)
    }

    /// `(lo, hi)` bounds of interval `i`; `hi` is infinite for the last one.
    pub fn bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.edges[i - 1] };
        let hi = self.edges.get(i).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn label(&self, i: usize) -> String {
        let n = self.edges.len();
        if i == 0 {
            format!("<{}", self.edges[0])
        } else if i == n {
            format!(">{}", self.edges[n - 1])
        } else {
            format!("{}-{}", self.edges[i - 1], self.edges[i])
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.label(i)).collect()
    }
}

impl TryFrom<Vec<f64>> for Intervals {
    type Error = Error;

    fn try_from(edges: Vec<f64>) -> Result<Self> {
        Intervals::new(edges)
    }
}

impl From<Intervals> for Vec<f64> {
    fn from(i: Intervals) -> Self {
        i.edges
    }
}

impl std::str::FromStr for Intervals {
    type Err = Error;

    /// Parses comma-separated edges, e.g. `5,10,20`.
    fn from_str(s: &str) -> Result<Self> {
        let edges = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad interval edge {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Intervals::new(edges)
    }
}

/// Settings shared by all CLI subcommands. TOML keys match the flag names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub meta: Option<PathBuf>,
    pub depth_dir: Option<PathBuf>,
    pub depth_format: DepthFormat,
    pub detections: Option<PathBuf>,
    pub labels_dir: Option<PathBuf>,
    pub cloud_dir: Option<PathBuf>,
    /// Ground-truth depth rasters, an alternative to `cloud_dir`.
    pub truth_dir: Option<PathBuf>,
    pub refs: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub earth_radius: f64,
    pub valid_range: ValidRange,
    pub radius: f64,
    pub max_dist: f64,
    pub bearing_tol: f64,
    pub bins: Intervals,
    pub workers: usize,
    pub no_timestamp: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            meta: None,
            depth_dir: None,
            depth_format: DepthFormat::Pfm,
            detections: None,
            labels_dir: None,
            cloud_dir: None,
            truth_dir: None,
            refs: None,
            records: None,
            out: None,
            earth_radius: MEAN_EARTH_RADIUS_M,
            valid_range: ValidRange::default(),
            radius: DEDUP_RADIUS_M,
            max_dist: MATCH_MAX_DISTANCE_M,
            bearing_tol: BEARING_TOLERANCE_DEG,
            bins: Intervals::depth_bins(),
            workers: 1,
            no_timestamp: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("earth-radius", self.earth_radius)?;
        positive("radius", self.radius)?;
        positive("max-dist", self.max_dist)?;
        positive("bearing-tol", self.bearing_tol)?;
        ValidRange::new(self.valid_range.min_m, self.valid_range.max_m)?;
        Intervals::new(self.bins.edges.clone())?;
        if self.workers == 0 {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn earth(&self) -> Result<EarthModel> {
        EarthModel::new(self.earth_radius)
    }
}
