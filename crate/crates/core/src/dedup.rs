//! Merging of duplicate detections of the same object seen from several
//! images.
//!
//! Same-class records whose positions lie within `radius` of each other are
//! linked, linked components collapse into one record at their centroid, and
//! the procedure repeats on the merged positions until no two same-class
//! records are within `radius`. The result is therefore a fixpoint:
//! deduplicating it again changes nothing.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{self, EarthModel, EnuDisplacement, GeoPoint};
use crate::locate::ObjectRecord;

/// How pairwise links form clusters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    /// Connected components of the "within radius" graph. Chains may span
    /// more than `radius`.
    #[default]
    Transitive,
    /// Within each merge round, a link is only taken when every pair in the
    /// resulting cluster is within `radius`. Links are tried shortest first.
    StrictDiameter,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Attaches the larger root under the smaller so roots are canonical.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Same-class index pairs `(i, j, distance)` with `i < j` and distance <= `radius`.
pub(crate) fn close_pairs(
    points: &[GeoPoint],
    classes: &[&str],
    radius: f64,
    em: &EarthModel,
) -> Vec<(usize, usize, f64)> {
    if points.is_empty() {
        return Vec::new();
    }
    // Equirectangular grid; cells are oversized so that neighbouring cells
    // cover the true radius despite the projection's scale error.
    let ref_lat = points[0].lat.to_radians().cos().max(1e-6);
    let cell = radius * 1.25;
    let meters = |p: GeoPoint| {
        let x = geo::normalize_lon(p.lon).to_radians() * em.radius() * ref_lat;
        let y = p.lat.to_radians() * em.radius();
        ((x / cell).floor() as i64, (y / cell).floor() as i64)
    };
    let mut grid: HashMap<(&str, i64, i64), Vec<usize>> = HashMap::new();
    let keys: Vec<(i64, i64)> = points.iter().map(|p| meters(*p)).collect();
    for (i, &(cx, cy)) in keys.iter().enumerate() {
        grid.entry((classes[i], cx, cy)).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for (i, &(cx, cy)) in keys.iter().enumerate() {
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(bucket) = grid.get(&(classes[i], cx + dx, cy + dy)) else {
                    continue;
                };
                for &j in bucket {
                    if j <= i {
                        continue;
                    }
                    let d = geo::geo_distance(points[i], points[j], em);
                    if d <= radius {
                        pairs.push((i, j, d));
                    }
                }
            }
        }
    }
    // Longitude wraps at the antimeridian; catch pairs split across it.
    if keys.iter().any(|k| k.0 != keys[0].0) && points.iter().any(|p| p.lon.abs() > 179.0) {
        let edge: Vec<usize> = (0..points.len()).filter(|&i| points[i].lon.abs() > 179.0).collect();
        for (a, &i) in edge.iter().enumerate() {
            for &j in &edge[a + 1..] {
                if classes[i] == classes[j] && (points[i].lon > 0.0) != (points[j].lon > 0.0) {
                    let d = geo::geo_distance(points[i], points[j], em);
                    if d <= radius {
                        pairs.push((i.min(j), i.max(j), d));
                    }
                }
            }
        }
    }
    pairs.sort_by_key(|p| (p.0, p.1));
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    pairs
}

fn centroid(points: &[GeoPoint], origin: GeoPoint, em: &EarthModel) -> Result<GeoPoint> {
    let (mut se, mut sn) = (0.0, 0.0);
    for p in points {
        let (e, n) = geo::local_offset(*p, origin, em)?;
        se += e;
        sn += n;
    }
    let k = points.len() as f64;
    let (east, north) = (se / k, sn / k);
    geo::displacement_to_geo(
        EnuDisplacement {
            east,
            north,
            horizontal: east.hypot(north),
        },
        origin,
        em,
    )
}

/// Merges same-class records within `radius` metres (transitive linkage).
pub fn dedup(records: &[ObjectRecord], radius: f64, em: &EarthModel) -> Result<Vec<ObjectRecord>> {
    dedup_with(records, radius, Linkage::Transitive, em)
}

/// Merges duplicates. Each merged record sits at the centroid of its members
/// (mean east/north offsets around the member with the smallest id); its id,
/// distance, bearing and camera come from the member nearest that centroid,
/// and its `image_ids` list every contributing image. Output is sorted by id.
pub fn dedup_with(
    records: &[ObjectRecord],
    radius: f64,
    linkage: Linkage,
    em: &EarthModel,
) -> Result<Vec<ObjectRecord>> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dedup radius must be positive, got {radius}"
        )));
    }
    // Members refer to the input slice; the canonical order is by id and then
    // position so that results do not depend on input order.
    let canonical = |a: usize, b: usize| -> Ordering {
        let (ra, rb) = (&records[a], &records[b]);
        ra.id
            .cmp(&rb.id)
            .then(ra.point.lat.total_cmp(&rb.point.lat))
            .then(ra.point.lon.total_cmp(&rb.point.lon))
    };
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by(|a, b| canonical(*a, *b));

    let mut groups: Vec<Vec<usize>> = order.iter().map(|&i| vec![i]).collect();
    let mut reps: Vec<GeoPoint> = order.iter().map(|&i| records[i].point).collect();

    loop {
        let classes: Vec<&str> = groups.iter().map(|g| records[g[0]].class.as_str()).collect();
        let mut pairs = close_pairs(&reps, &classes, radius, em);
        if pairs.is_empty() {
            break;
        }
        let mut uf = UnionFind::new(groups.len());
        match linkage {
            Linkage::Transitive => {
                for &(i, j, _) in &pairs {
                    uf.union(i, j);
                }
            }
            Linkage::StrictDiameter => {
                pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then((a.0, a.1).cmp(&(b.0, b.1))));
                let mut members: Vec<Vec<usize>> = (0..groups.len()).map(|i| vec![i]).collect();
                for &(i, j, _) in &pairs {
                    let (ri, rj) = (uf.find(i), uf.find(j));
                    if ri == rj {
                        continue;
                    }
                    let fits = members[ri].iter().all(|&a| {
                        members[rj]
                            .iter()
                            .all(|&b| geo::geo_distance(reps[a], reps[b], em) <= radius)
                    });
                    if fits {
                        uf.union(ri, rj);
                        let root = uf.find(ri);
                        let other = if root == ri { rj } else { ri };
                        let moved = std::mem::take(&mut members[other]);
                        members[root].extend(moved);
                    }
                }
            }
        }
        let mut merged: Vec<Vec<usize>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for (gi, group) in groups.iter().enumerate() {
            let root = uf.find(gi);
            let s = *slot.entry(root).or_insert_with(|| {
                merged.push(Vec::new());
                merged.len() - 1
            });
            merged[s].extend(group.iter().copied());
        }
        for g in merged.iter_mut() {
            g.sort_by(|a, b| canonical(*a, *b));
        }
        let new_reps = merged
            .iter()
            .map(|g| {
                let pts: Vec<GeoPoint> = g.iter().map(|&i| records[i].point).collect();
                centroid(&pts, pts[0], em)
            })
            .collect::<Result<Vec<_>>>()?;
        if merged.len() == groups.len() {
            break;
        }
        groups = merged;
        reps = new_reps;
    }

    let mut out = Vec::with_capacity(groups.len());
    for (g, rep) in groups.iter().zip(&reps) {
        if g.len() == 1 {
            out.push(records[g[0]].clone());
            continue;
        }
        let nearest = g
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let da = geo::geo_distance(records[a].point, *rep, em);
                let db = geo::geo_distance(records[b].point, *rep, em);
                da.total_cmp(&db).then(canonical(a, b))
            })
            .expect("groups are non-empty");
        let mut image_ids: Vec<String> = g.iter().flat_map(|&i| records[i].image_ids.iter().cloned()).collect();
        image_ids.sort();
        image_ids.dedup();
        let mut merged = records[nearest].clone();
        merged.point = *rep;
        merged.image_ids = image_ids;
        out.push(merged);
    }
    out.sort_by(|a, b| {
        a.id.cmp(&b.id)
            .then(a.point.lat.total_cmp(&b.point.lat))
            .then(a.point.lon.total_cmp(&b.point.lon))
    });
    Ok(out)
}
