use serde::{Deserialize, Serialize};

use crate::config::Intervals;
use crate::matching::MatchResult;

/// Five-number summary; quartiles by linear interpolation between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxStats {
    /// `sorted` must be ascending and non-empty.
    fn from_sorted(sorted: &[f64]) -> Self {
        let q = |p: f64| {
            let h = (sorted.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Self {
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[sorted.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub label: String,
    pub count: usize,
    pub mean_m: Option<f64>,
    pub boxplot: Option<BoxStats>,
}

impl IntervalStats {
    fn new(label: String, mut errors: Vec<f64>) -> Self {
        errors.sort_by(f64::total_cmp);
        let mean_m = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
        Self {
            label,
            count: errors.len(),
            mean_m,
            boxplot: (!errors.is_empty()).then(|| BoxStats::from_sorted(&errors)),
        }
    }
}

/// Position errors overall and per camera-object distance interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordErrorTable {
    pub edges: Vec<f64>,
    pub total: IntervalStats,
    pub intervals: Vec<IntervalStats>,
}

/// `pairs` holds `(position error, camera-object distance)` in metres.
pub fn coord_error_stats(pairs: &[(f64, f64)], intervals: &Intervals) -> CoordErrorTable {
    let mut split = vec![Vec::new(); intervals.len()];
    for &(err, dist) in pairs {
        split[intervals.index_of(dist)].push(err);
    }
    CoordErrorTable {
        edges: intervals.edges().to_vec(),
        total: IntervalStats::new("total".into(), pairs.iter().map(|p| p.0).collect()),
        intervals: split
            .into_iter()
            .enumerate()
            .map(|(i, e)| IntervalStats::new(intervals.label(i), e))
            .collect(),
    }
}

/// Uses the true camera-object distance of each pair when known, the
/// estimated one otherwise.
pub fn coord_error_stats_from_matches(m: &MatchResult, intervals: &Intervals) -> CoordErrorTable {
    let pairs: Vec<(f64, f64)> = m.pairs.iter().map(|p| (p.distance_m, p.cam_dist_m())).collect();
    coord_error_stats(&pairs, intervals)
}
