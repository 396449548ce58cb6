//! One-to-one matching of predicted records against annotations or a
//! database of known objects.

use serde::{Deserialize, Serialize};

use crate::config::{Intervals, BEARING_TOLERANCE_DEG, MATCH_MAX_DISTANCE_M};
use crate::error::{Error, Result};
use crate::geo::{self, EarthModel, GeoPoint};
use crate::locate::{median, ObjectRecord};

/// A known object: an annotation or a database entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub id: String,
    pub class: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub pred_id: String,
    pub ref_id: String,
    pub class: String,
    /// Distance between prediction and reference, metres.
    pub distance_m: f64,
    /// Camera-object distance estimated by the prediction.
    pub est_cam_dist_m: f64,
    /// Camera to reference distance, when the prediction knows its camera.
    pub true_cam_dist_m: Option<f64>,
}

impl MatchPair {
    /// Camera-object distance used for interval statistics: the true one when
    /// known, the estimate otherwise.
    pub fn cam_dist_m(&self) -> f64 {
        self.true_cam_dist_m.unwrap_or(self.est_cam_dist_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalMean {
    pub label: String,
    pub count: usize,
    pub mean_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub predictions: usize,
    pub references: usize,
    pub matched: usize,
    /// Fraction of references matched by some prediction (0 when there are
    /// no references).
    pub found_fraction: f64,
    pub mean_distance_m: Option<f64>,
    pub median_distance_m: Option<f64>,
    pub per_interval: Vec<IntervalMean>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_predictions: Vec<String>,
    pub unmatched_references: Vec<String>,
    pub skipped: Vec<SkippedRecord>,
    pub summary: MatchSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchOptions {
    pub max_dist_m: f64,
    /// Camera-object distance intervals for the summary.
    pub intervals: Intervals,
    pub earth: EarthModel,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            max_dist_m: MATCH_MAX_DISTANCE_M,
            intervals: Intervals::sign_intervals(),
            earth: EarthModel::default(),
        }
    }
}

struct Candidate {
    pred: usize,
    reference: usize,
    distance: f64,
}

/// Greedy one-to-one assignment: candidates are consumed in ascending
/// distance, ties broken by prediction id then reference id.
fn assign(
    preds: &[&ObjectRecord],
    refs: &[Reference],
    mut candidates: Vec<Candidate>,
    skipped: Vec<SkippedRecord>,
    intervals: &Intervals,
    em: &EarthModel,
) -> MatchResult {
    candidates.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| preds[a.pred].id.cmp(&preds[b.pred].id))
            .then_with(|| refs[a.reference].id.cmp(&refs[b.reference].id))
    });
    let mut pred_used = vec![false; preds.len()];
    let mut ref_used = vec![false; refs.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if pred_used[c.pred] || ref_used[c.reference] {
            continue;
        }
        pred_used[c.pred] = true;
        ref_used[c.reference] = true;
        let (p, r) = (preds[c.pred], &refs[c.reference]);
        pairs.push(MatchPair {
            pred_id: p.id.clone(),
            ref_id: r.id.clone(),
            class: r.class.clone(),
            distance_m: c.distance,
            est_cam_dist_m: p.distance_m,
            true_cam_dist_m: p.camera.map(|cam| geo::geo_distance(cam, r.point, em)),
        });
    }
    let unmatched_predictions = preds
        .iter()
        .zip(&pred_used)
        .filter(|(_, u)| !**u)
        .map(|(p, _)| p.id.clone())
        .collect();
    let unmatched_references = refs
        .iter()
        .zip(&ref_used)
        .filter(|(_, u)| !**u)
        .map(|(r, _)| r.id.clone())
        .collect();
    let summary = summarize(&pairs, preds.len() + skipped.len(), refs.len(), intervals);
    MatchResult {
        pairs,
        unmatched_predictions,
        unmatched_references,
        skipped,
        summary,
    }
}

fn summarize(pairs: &[MatchPair], n_preds: usize, n_refs: usize, intervals: &Intervals) -> MatchSummary {
    let mut dists: Vec<f64> = pairs.iter().map(|p| p.distance_m).collect();
    let mean = (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64);
    let med = (!dists.is_empty()).then(|| median(&mut dists));
    let mut sums = vec![(0usize, 0.0f64); intervals.len()];
    for p in pairs {
        let slot = &mut sums[intervals.index_of(p.cam_dist_m())];
        slot.0 += 1;
        slot.1 += p.distance_m;
    }
    let per_interval = sums
        .iter()
        .enumerate()
        .map(|(i, (n, s))| IntervalMean {
            label: intervals.label(i),
            count: *n,
            mean_m: (*n > 0).then(|| s / *n as f64),
        })
        .collect();
    MatchSummary {
        predictions: n_preds,
        references: n_refs,
        matched: pairs.len(),
        found_fraction: if n_refs == 0 {
            0.0
        } else {
            pairs.len() as f64 / n_refs as f64
        },
        mean_distance_m: mean,
        median_distance_m: med,
        per_interval,
    }
}

/// Matches each prediction to the closest same-class reference no further
/// than `max_dist_m`; every reference is used at most once.
pub fn match_annotations(preds: &[ObjectRecord], refs: &[Reference], opts: &MatchOptions) -> Result<MatchResult> {
    if !(opts.max_dist_m.is_finite() && opts.max_dist_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max match distance must be positive, got {}",
            opts.max_dist_m
        )));
    }
    let em = &opts.earth;
    let mut candidates = Vec::new();
    for (pi, p) in preds.iter().enumerate() {
        for (ri, r) in refs.iter().enumerate() {
            if p.class != r.class {
                continue;
            }
            let d = geo::geo_distance(p.point, r.point, em);
            if d <= opts.max_dist_m {
                candidates.push(Candidate {
                    pred: pi,
                    reference: ri,
                    distance: d,
                });
            }
        }
    }
    let preds: Vec<&ObjectRecord> = preds.iter().collect();
    Ok(assign(&preds, refs, candidates, Vec::new(), &opts.intervals, em))
}

/// Matches records against database entries. An entry is a candidate when it
/// has the same class, lies within `radius_m` of the record, and the bearing
/// from the record's camera to the entry is within `bearing_tol_deg` of the
/// record's ray bearing. Records without a camera position are skipped.
pub fn match_database(
    records: &[ObjectRecord],
    db: &[Reference],
    radius_m: f64,
    bearing_tol_deg: f64,
    opts: &MatchOptions,
) -> Result<MatchResult> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius_m}"
        )));
    }
    if !(bearing_tol_deg.is_finite() && bearing_tol_deg > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bearing tolerance must be positive, got {bearing_tol_deg}"
        )));
    }
    let em = &opts.earth;
    let mut kept: Vec<&ObjectRecord> = Vec::new();
    let mut skipped = Vec::new();
    for r in records {
        if r.camera.is_some() {
            kept.push(r);
        } else {
            log::warn!("{}: no camera position, cannot match against the database", r.id);
            skipped.push(SkippedRecord {
                id: r.id.clone(),
                reason: "record has no camera position".into(),
            });
        }
    }
    let mut candidates = Vec::new();
    for (pi, p) in kept.iter().enumerate() {
        let cam = p.camera.expect("filtered above");
        for (ri, e) in db.iter().enumerate() {
            if p.class != e.class {
                continue;
            }
            let d = geo::geo_distance(p.point, e.point, em);
            if d > radius_m {
                continue;
            }
            let delta = geo::wrap_angle_deg(geo::initial_bearing(cam, e.point) - p.bearing_eff_deg);
            if delta.abs() <= bearing_tol_deg {
                candidates.push(Candidate {
                    pred: pi,
                    reference: ri,
                    distance: d,
                });
            }
        }
    }
    Ok(assign(&kept, db, candidates, skipped, &opts.intervals, em))
}

/// Default bearing tolerance for [`match_database`].
pub const DEFAULT_BEARING_TOL_DEG: f64 = BEARING_TOLERANCE_DEG;
