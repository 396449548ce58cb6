use serde::{Deserialize, Serialize};

use super::semantic::{group_of, SemanticGroup};
use crate::config::Intervals;
use crate::error::{Error, Result};
use crate::locate::median;
use crate::raster::{DepthMap, SemanticMap};

/// Running MAE/ARE sums for one report cell. Keeps the per-pixel relative
/// errors so the median can be reported.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorAccumulator {
    pub count: usize,
    pub sum_abs: f64,
    pub sum_rel: f64,
    #[serde(skip)]
    rel: Vec<f64>,
}

impl ErrorAccumulator {
    pub fn push(&mut self, pred: f64, truth: f64) {
        let abs = (pred - truth).abs();
        self.count += 1;
        self.sum_abs += abs;
        self.sum_rel += abs / truth;
        self.rel.push(abs / truth);
    }

    pub fn merge(&mut self, other: &ErrorAccumulator) {
        self.count += other.count;
        self.sum_abs += other.sum_abs;
        self.sum_rel += other.sum_rel;
        self.rel.extend_from_slice(&other.rel);
    }

    pub fn mae(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_abs / self.count as f64)
    }

    pub fn are(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_rel / self.count as f64)
    }

    pub fn median_are(&self) -> Option<f64> {
        (!self.rel.is_empty()).then(|| median(&mut self.rel.clone()))
    }
}

/// Depth errors split by truth-depth bin and, when labels are given, by
/// semantic group.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    bins: Intervals,
    total: ErrorAccumulator,
    per_bin: Vec<ErrorAccumulator>,
    /// `[bin][group]`, present when a semantic map was supplied.
    cells: Option<Vec<[ErrorAccumulator; 4]>>,
}

/// One row of the flattened report. `"all"` marks a marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub group: String,
    pub bin: String,
    pub count: usize,
    pub mae_m: Option<f64>,
    pub are: Option<f64>,
    pub median_are: Option<f64>,
}

impl ErrorReport {
    fn empty(bins: &Intervals, semantic: bool) -> Self {
        Self {
            bins: bins.clone(),
            total: ErrorAccumulator::default(),
            per_bin: vec![ErrorAccumulator::default(); bins.len()],
            cells: semantic.then(|| vec![Default::default(); bins.len()]),
        }
    }

    pub fn bins(&self) -> &Intervals {
        &self.bins
    }

    pub fn total(&self) -> &ErrorAccumulator {
        &self.total
    }

    pub fn bin(&self, i: usize) -> &ErrorAccumulator {
        &self.per_bin[i]
    }

    pub fn has_groups(&self) -> bool {
        self.cells.is_some()
    }

    /// Cell for one bin and evaluated group; `None` without semantics.
    pub fn cell(&self, bin: usize, group: SemanticGroup) -> Option<&ErrorAccumulator> {
        let g = group.index()?;
        self.cells.as_ref().map(|c| &c[bin][g])
    }

    /// Marginal over all bins for one group.
    pub fn group(&self, group: SemanticGroup) -> Option<ErrorAccumulator> {
        let g = group.index()?;
        let cells = self.cells.as_ref()?;
        let mut acc = ErrorAccumulator::default();
        for row in cells {
            acc.merge(&row[g]);
        }
        Some(acc)
    }

    /// Pools another report pixel by pixel.
    pub fn merge(&mut self, other: &ErrorReport) -> Result<()> {
        if self.bins != other.bins || self.has_groups() != other.has_groups() {
            return Err(Error::InvalidParameter(
                "cannot merge reports with different bins or grouping".into(),
            ));
        }
        self.total.merge(&other.total);
        for (a, b) in self.per_bin.iter_mut().zip(&other.per_bin) {
            a.merge(b);
        }
        if let (Some(a), Some(b)) = (self.cells.as_mut(), other.cells.as_ref()) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (ca, cb) in ra.iter_mut().zip(rb) {
                    ca.merge(cb);
                }
            }
        }
        Ok(())
    }

    fn accumulators(&self) -> Vec<(String, String, ErrorAccumulator)> {
        let labels = self.bins.labels();
        let mut out = vec![("all".to_string(), "all".to_string(), self.total.clone())];
        for (label, acc) in labels.iter().zip(&self.per_bin) {
            out.push(("all".into(), label.clone(), acc.clone()));
        }
        if self.cells.is_some() {
            for g in SemanticGroup::EVALUATED {
                out.push((g.name().into(), "all".into(), self.group(g).unwrap_or_default()));
                for (b, label) in labels.iter().enumerate() {
                    let acc = self.cell(b, g).cloned().unwrap_or_default();
                    out.push((g.name().into(), label.clone(), acc));
                }
            }
        }
        out
    }

    /// Rows in table order: overall first, then each group; within each,
    /// the all-bins marginal followed by the bins.
    pub fn rows(&self) -> Vec<ErrorRow> {
        self.accumulators()
            .into_iter()
            .map(|(group, bin, acc)| ErrorRow {
                group,
                bin,
                count: acc.count,
                mae_m: acc.mae(),
                are: acc.are(),
                median_are: acc.median_are(),
            })
            .collect()
    }
}

/// Compares a predicted depth map against ground truth. A pixel is evaluated
/// when it is valid in both maps and, with labels, not in an excluded group.
/// Bins use the truth depth.
pub fn depth_errors(
    pred: &DepthMap,
    truth: &DepthMap,
    sem: Option<&SemanticMap>,
    bins: &Intervals,
) -> Result<ErrorReport> {
    if pred.dimensions() != truth.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: truth.dimensions(),
            found: pred.dimensions(),
        });
    }
    if let Some(s) = sem {
        if s.dimensions() != truth.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: truth.dimensions(),
                found: s.dimensions(),
            });
        }
    }
    let mut report = ErrorReport::empty(bins, sem.is_some());
    for i in 0..pred.values().len() {
        if !(pred.is_valid_index(i) && truth.is_valid_index(i)) {
            continue;
        }
        let group = match sem {
            Some(s) => match group_of(s.labels()[i]).index() {
                Some(g) => Some(g),
                None => continue,
            },
            None => None,
        };
        let p = pred.values()[i] as f64;
        let t = truth.values()[i] as f64;
        let b = bins.index_of(t);
        report.total.push(p, t);
        report.per_bin[b].push(p, t);
        if let (Some(cells), Some(g)) = (report.cells.as_mut(), group) {
            cells[b][g].push(p, t);
        }
    }
    if report.total.count == 0 {
        return Err(Error::EmptyReport);
    }
    Ok(report)
}

/// How per-image reports are combined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Every pixel weighs the same.
    #[default]
    PerPixel,
    /// Each image's cell value weighs the same; images without pixels in a
    /// cell are left out of that cell.
    PerImage,
}

pub fn aggregate(reports: &[ErrorReport], pooling: Pooling) -> Result<Vec<ErrorRow>> {
    let (first, rest) = reports.split_first().ok_or(Error::EmptyReport)?;
    let mut pooled = first.clone();
    for r in rest {
        pooled.merge(r)?;
    }
    let mut rows = pooled.rows();
    if pooling == Pooling::PerImage {
        let per_image: Vec<Vec<ErrorRow>> = reports.iter().map(ErrorReport::rows).collect();
        for (i, row) in rows.iter_mut().enumerate() {
            let mean = |f: fn(&ErrorRow) -> Option<f64>| {
                let vals: Vec<f64> = per_image.iter().filter_map(|r| f(&r[i])).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            };
            row.mae_m = mean(|r| r.mae_m);
            row.are = mean(|r| r.are);
            row.median_are = mean(|r| r.median_are);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::raster::ValidRange;

    fn map(values: &[f32]) -> DepthMap {
        DepthMap::new(values.len() as u32, 1, values.to_vec(), ValidRange::default()).unwrap()
    }

    #[test]
    fn mae_and_are_by_hand() {
        let r = depth_errors(&map(&[8.0, 12.0]), &map(&[10.0, 10.0]), None, &Intervals::depth_bins()).unwrap();
        assert_eq!(r.total().mae(), Some(2.0));
        assert_eq!(r.total().are(), Some(0.2));
        assert_eq!(r.total().median_are(), Some(0.2));
    }

    #[test]
    fn excluded_pixel_leaves_every_cell() {
        // person (11) on the second pixel
        let sem = SemanticMap::new(2, 1, vec![0, 11]).unwrap();
        let r = depth_errors(
            &map(&[8.0, 13.0]),
            &map(&[10.0, 10.0]),
            Some(&sem),
            &Intervals::depth_bins(),
        )
        .unwrap();
        assert_eq!(r.total().count, 1);
        assert_eq!(r.total().mae(), Some(2.0));
        assert_eq!(r.total().are(), Some(0.2));
        assert_eq!(r.group(SemanticGroup::Flat).unwrap().count, 1);
        let group_total: usize = SemanticGroup::EVALUATED
            .iter()
            .map(|g| r.group(*g).unwrap().count)
            .sum();
        assert_eq!(group_total, 1);
    }

    #[test]
    fn bins_follow_truth_depth() {
        let r = depth_errors(&map(&[3.5, 14.0]), &map(&[3.0, 15.0]), None, &Intervals::depth_bins()).unwrap();
        assert_eq!(r.bin(0).count, 1);
        assert_eq!(r.bin(1).count, 0);
        assert_eq!(r.bin(2).count, 1);
        assert_eq!(r.bin(3).count, 0);
    }

    #[test]
    fn invalid_pixels_are_skipped_and_empty_is_an_error() {
        let r = depth_errors(
            &map(&[f32::NAN, 9.0]),
            &map(&[10.0, 10.0]),
            None,
            &Intervals::depth_bins(),
        )
        .unwrap();
        assert_eq!(r.total().count, 1);
        assert!(matches!(
            depth_errors(&map(&[f32::NAN]), &map(&[10.0]), None, &Intervals::depth_bins()),
            Err(Error::EmptyReport)
        ));
        let sky = SemanticMap::new(1, 1, vec![10]).unwrap();
        assert!(depth_errors(&map(&[9.0]), &map(&[10.0]), Some(&sky), &Intervals::depth_bins()).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(depth_errors(&map(&[1.0]), &map(&[1.0, 2.0]), None, &Intervals::depth_bins()).is_err());
    }

    #[test]
    fn are_uses_truth_denominator() {
        let bins = Intervals::depth_bins();
        let a = depth_errors(&map(&[8.0]), &map(&[10.0]), None, &bins).unwrap();
        let b = depth_errors(&map(&[10.0]), &map(&[8.0]), None, &bins).unwrap();
        assert_eq!(a.total().mae(), b.total().mae());
        assert_ne!(a.total().are(), b.total().are());
    }

    #[test]
    fn per_pixel_and_per_image_pooling() {
        let bins = Intervals::depth_bins();
        let a = depth_errors(&map(&[11.0]), &map(&[10.0]), None, &bins).unwrap();
        let b = depth_errors(&map(&[13.0, 13.0, 13.0]), &map(&[10.0, 10.0, 10.0]), None, &bins).unwrap();
        let pixel = aggregate(&[a.clone(), b.clone()], Pooling::PerPixel).unwrap();
        let image = aggregate(&[a, b], Pooling::PerImage).unwrap();
        assert_eq!(pixel[0].count, 4);
        assert_relative_eq!(pixel[0].mae_m.unwrap(), 10.0 / 4.0);
        assert_relative_eq!(image[0].mae_m.unwrap(), 2.0);
        assert_eq!(image[0].count, 4);
        assert!(aggregate(&[], Pooling::PerPixel).is_err());
    }

    #[test]
    fn rows_cover_groups_and_bins() {
        let sem = SemanticMap::new(2, 1, vec![0, 8]).unwrap();
        let r = depth_errors(
            &map(&[8.0, 12.0]),
            &map(&[10.0, 10.0]),
            Some(&sem),
            &Intervals::depth_bins(),
        )
        .unwrap();
        let rows = r.rows();
        assert_eq!(rows.len(), 5 * 5);
        assert_eq!((rows[0].group.as_str(), rows[0].bin.as_str()), ("all", "all"));
        let nature = rows.iter().find(|r| r.group == "nature" && r.bin == "10-20").unwrap();
        assert_eq!(nature.count, 1);
        assert_eq!(nature.mae_m, Some(2.0));
    }

    proptest! {
        #[test]
        fn scaling_keeps_are_and_scales_mae(
            pairs in prop::collection::vec((1.0f32..50.0, 1.0f32..50.0), 1..20),
            c in 0.5f32..3.0,
        ) {
            let bins = Intervals::depth_bins();
            let range = ValidRange::new(0.01, 1000.0).unwrap();
            let mk = |v: Vec<f32>| DepthMap::new(v.len() as u32, 1, v, range).unwrap();
            let p: Vec<f32> = pairs.iter().map(|x| x.0).collect();
            let t: Vec<f32> = pairs.iter().map(|x| x.1).collect();
            let base = depth_errors(&mk(p.clone()), &mk(t.clone()), None, &bins).unwrap();
            let scaled = depth_errors(
                &mk(p.iter().map(|v| v * c).collect()),
                &mk(t.iter().map(|v| v * c).collect()),
                None,
                &bins,
            )
            .unwrap();
            // f32 storage rounds the scaled values.
            prop_assert!((base.total().are().unwrap() - scaled.total().are().unwrap()).abs() < 1e-5);
            prop_assert!((base.total().mae().unwrap() * c as f64 - scaled.total().mae().unwrap()).abs() < 1e-4);
        }

        #[test]
        fn bin_counts_sum_to_total(
            pairs in prop::collection::vec((0.2f32..60.0, 0.2f32..60.0, 0u8..20), 1..40),
        ) {
            let bins = Intervals::depth_bins();
            let n = pairs.len() as u32;
            let p = DepthMap::new(n, 1, pairs.iter().map(|x| x.0).collect(), ValidRange::default()).unwrap();
            let t = DepthMap::new(n, 1, pairs.iter().map(|x| x.1).collect(), ValidRange::default()).unwrap();
            let s = SemanticMap::new(n, 1, pairs.iter().map(|x| if x.2 == 19 { 255 } else { x.2 }).collect()).unwrap();
            if let Ok(r) = depth_errors(&p, &t, Some(&s), &bins) {
                let by_bin: usize = (0..bins.len()).map(|b| r.bin(b).count).sum();
                let by_group: usize = SemanticGroup::EVALUATED.iter().map(|g| r.group(*g).unwrap().count).sum();
                prop_assert_eq!(by_bin, r.total().count);
                prop_assert_eq!(by_group, r.total().count);
            }
        }
    }
}
