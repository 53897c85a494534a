//! Bivariate Tukey (halfspace) depth, iso-depth regions, the depth median,
//! and bagplot construction.
//!
//! The depth of a point is the minimum number of sample points contained in
//! any closed half-plane whose boundary passes through it. Per-point depth
//! uses a rotating-line sweep over the directions to the sample points in
//! O(n log n); all side counts come from exact sign tests on cross and dot
//! products, never from angle arithmetic, so the sweep agrees with a brute
//! force enumeration bit for bit.
//!
//! A depth region `{theta : depth(theta) >= d}` is the intersection of the
//! closed half-planes that exclude fewer than d points. The binding
//! half-planes are bounded by lines through point pairs that straddle rank
//! d in the projection order; those constraints are enumerated from
//! per-anchor angular sweeps and intersected by polygon clipping. Regions
//! may degenerate to a segment or a point (collinear clouds, even tie
//! configurations); they are kept as collapsed polygons rather than being
//! reported empty.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geom::{cross, dot, norm, rot90, sub, clip_halfplane, convex_hull, Point2, Polygon2};
use crate::reduction::PointCloud2D;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("empty depth region: level {d} exceeds the maximum attainable depth")]
    EmptyRegion { d: usize },
    #[error("bagplot needs at least {needed} points, found {n}")]
    TooFewPoints { n: usize, needed: usize },
    #[error("invalid depth level {d}: must be at least 1")]
    InvalidLevel { d: usize },
    #[error("invalid fence coefficient {coef}: must be positive and finite")]
    InvalidCoefficient { coef: f64 },
}

/// Which fence rule a bagplot uses to flag outliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FenceKind {
    /// Expansion in depth units: points with depth below
    /// `max_depth - (max_depth - bag_depth) * coef` are outliers.
    Depth,
    /// Classical geometric inflation of the bag polygon about the median by
    /// `coef`; points outside the inflated polygon are outliers.
    Geometric,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Fence {
    Depth { level: f64 },
    Geometric { factor: f64, polygon: Polygon2 },
}

/// Bagplot of a 2D score cloud: depth median, the ~50% bag region, fence,
/// and the outlier / loop index partition.
#[derive(Debug, Clone, Serialize)]
pub struct Bagplot {
    pub median: Point2,
    pub bag: Polygon2,
    /// Depth level of the bag: the smallest region holding at least
    /// ceil(n/2) sample points (no interpolation between levels).
    pub bag_depth: usize,
    pub max_point_depth: usize,
    pub fence: Fence,
    pub outlier_indices: Vec<usize>,
    /// Non-outliers outside the bag.
    pub loop_indices: Vec<usize>,
    pub point_depths: Vec<usize>,
}

impl Bagplot {
    /// Indices inside the bag (depth >= bag level, outliers excluded).
    pub fn bag_indices(&self) -> Vec<usize> {
        (0..self.point_depths.len())
            .filter(|i| {
                self.point_depths[*i] >= self.bag_depth && !self.outlier_indices.contains(i)
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// per-anchor angular sweep

/// Directions from one anchor to all other points, sorted CCW and grouped
/// by exact direction equality, with per-group side counts.
struct AnchorSweep {
    /// (direction, original point index), sorted by angle.
    dirs: Vec<(Point2, u32)>,
    groups: Vec<GroupInfo>,
    /// Points coincident with the anchor (on every line through it).
    zero_count: usize,
}

#[derive(Clone, Copy)]
struct GroupInfo {
    start: u32,
    len: u32,
    /// Points strictly left of the line spanned by this direction.
    strictly_left: u32,
    /// Size of the exactly antipodal group, if any.
    antipodal: u32,
}

#[inline]
fn angle_half(v: Point2) -> u8 {
    // half 0 covers angles in [0, pi): y > 0, or y == 0 with x > 0
    if v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0) {
        1
    } else {
        0
    }
}

#[inline]
fn dir_cmp(a: Point2, b: Point2) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match angle_half(a).cmp(&angle_half(b)) {
        Equal => {
            let c = cross(a, b);
            if c > 0.0 {
                Less
            } else if c < 0.0 {
                Greater
            } else {
                Equal
            }
        }
        other => other,
    }
}

/// `skip` marks the anchor's own index when the anchor is a sample point.
fn anchor_sweep(anchor: Point2, pts: &[Point2], skip: usize) -> AnchorSweep {
    let mut dirs: Vec<(Point2, u32)> = Vec::with_capacity(pts.len());
    let mut zero_count = 0usize;
    for (j, p) in pts.iter().enumerate() {
        if j == skip {
            continue;
        }
        let w = sub(*p, anchor);
        if w[0] == 0.0 && w[1] == 0.0 {
            zero_count += 1;
        } else {
            dirs.push((w, j as u32));
        }
    }
    dirs.sort_by(|a, b| dir_cmp(a.0, b.0));

    let mut groups: Vec<GroupInfo> = Vec::new();
    let mut start = 0usize;
    while start < dirs.len() {
        let mut end = start + 1;
        while end < dirs.len() && dir_cmp(dirs[start].0, dirs[end].0) == std::cmp::Ordering::Equal
        {
            end += 1;
        }
        groups.push(GroupInfo {
            start: start as u32,
            len: (end - start) as u32,
            strictly_left: 0,
            antipodal: 0,
        });
        start = end;
    }

    let g = groups.len();
    if g >= 2 {
        let reps: Vec<Point2> = groups.iter().map(|gi| dirs[gi.start as usize].0).collect();
        let lens: Vec<usize> = groups.iter().map(|gi| gi.len as usize).collect();
        // rotating two-pointer: for each group, sum the counts of groups in
        // the open half-plane strictly left of its direction
        let mut run: usize = 0;
        let mut e: usize = 1;
        while e < g && cross(reps[0], reps[e]) > 0.0 {
            run += lens[e];
            e += 1;
        }
        for i in 0..g {
            if i > 0 {
                if cross(reps[i - 1], reps[i]) > 0.0 {
                    run -= lens[i];
                }
                if e <= i {
                    e = i + 1;
                }
                while e < i + g {
                    let idx = e % g;
                    if idx == i || cross(reps[i], reps[idx]) <= 0.0 {
                        break;
                    }
                    run += lens[idx];
                    e += 1;
                }
            }
            groups[i].strictly_left = run as u32;
            let idx = e % g;
            if idx != i && cross(reps[i], reps[idx]) == 0.0 && dot(reps[i], reps[idx]) < 0.0 {
                groups[i].antipodal = lens[idx] as u32;
            }
        }
    }

    AnchorSweep {
        dirs,
        groups,
        zero_count,
    }
}

fn depth_from_sweep(sweep: &AnchorSweep) -> usize {
    let n_prime: usize = sweep.dirs.len();
    let nt = sweep.zero_count;
    if n_prime == 0 {
        return nt;
    }
    let mut best = usize::MAX;
    for gi in &sweep.groups {
        let s = gi.strictly_left as usize;
        let a = gi.len as usize;
        let b = gi.antipodal as usize;
        // closed half-planes whose boundary rotates about the anchor:
        // just-ccw / just-cw of this direction, and their complements
        let cands = [
            s + b,
            s + a,
            n_prime - s - b,
            n_prime - s - a,
            s + a + b,
            n_prime - s,
        ];
        for c in cands {
            best = best.min(c);
        }
    }
    best + nt
}

/// Exact Tukey depth of `theta` with respect to the cloud, O(n log n).
pub fn tukey_depth(theta: Point2, cloud: &PointCloud2D) -> usize {
    let sweep = anchor_sweep(theta, cloud.points(), usize::MAX);
    depth_from_sweep(&sweep)
}

/// Depth of every sample point; rows are independent and run in parallel.
pub fn point_depths(cloud: &PointCloud2D) -> Vec<usize> {
    let pts = cloud.points();
    pts.par_iter()
        .map(|p| depth_from_sweep(&anchor_sweep(*p, pts, usize::MAX)))
        .collect()
}

// ---------------------------------------------------------------------------
// depth regions

/// For every ordered direction (i -> j): points strictly left of the
/// directed line, and points collinear with it (anchor and j excluded from
/// neither: `collinear` counts all OTHER points on the line plus j itself).
struct PairCounts {
    per_anchor: Vec<AnchorSweep>,
}

fn pair_counts(pts: &[Point2]) -> PairCounts {
    let sweeps: Vec<AnchorSweep> = (0..pts.len())
        .into_par_iter()
        .map(|i| anchor_sweep(pts[i], pts, i))
        .collect();
    PairCounts { per_anchor: sweeps }
}

fn coordinate_scale(pts: &[Point2]) -> f64 {
    pts.iter()
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0_f64, f64::max)
        .max(1e-300)
}

/// Half-plane constraints `dot(u, theta) <= c` whose intersection is the
/// depth-`d` region. Lines through pairs straddling rank d in projection
/// order, plus cap directions for angular gaps of pi or more (needed for
/// collinear clouds and n = 2, where the pair lines alone leave the region
/// unbounded along the common line).
fn region_constraints(pts: &[Point2], counts: &PairCounts, d: usize) -> Vec<(Point2, f64)> {
    let n = pts.len();
    let mut cons: Vec<(Point2, f64)> = Vec::new();
    for (i, sweep) in counts.per_anchor.iter().enumerate() {
        let others = n - 1;
        for gi in &sweep.groups {
            let on_line = gi.len as usize + gi.antipodal as usize + sweep.zero_count;
            let b = on_line + 1; // anchor itself is on the line
            let a_left = gi.strictly_left as usize;
            let a_right = others - a_left - on_line;
            let emit_left = a_left <= d - 1 && a_left + b >= d;
            let emit_right = a_right <= d - 1 && a_right + b >= d;
            if !emit_left && !emit_right {
                continue;
            }
            let seg = &sweep.dirs[gi.start as usize..(gi.start + gi.len) as usize];
            for &(w, j32) in seg {
                let j = j32 as usize;
                if j <= i {
                    continue; // each unordered pair once
                }
                let inv = 1.0 / norm(w);
                let u = rot90(w);
                let u = [u[0] * inv, u[1] * inv];
                if emit_left {
                    let c = dot(u, pts[i]).max(dot(u, pts[j]));
                    cons.push((u, c));
                }
                if emit_right {
                    let un = [-u[0], -u[1]];
                    let c = dot(un, pts[i]).max(dot(un, pts[j]));
                    cons.push((un, c));
                }
            }
        }
    }

    // cap directions across angular gaps >= pi
    if !cons.is_empty() {
        for _ in 0..4 {
            let mut angles: Vec<f64> = cons.iter().map(|(u, _)| u[1].atan2(u[0])).collect();
            angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let mut mids = Vec::new();
            for k in 0..angles.len() {
                let a0 = angles[k];
                let a1 = if k + 1 < angles.len() {
                    angles[k + 1]
                } else {
                    angles[0] + std::f64::consts::TAU
                };
                if a1 - a0 >= std::f64::consts::PI * (1.0 - 1e-12) {
                    mids.push((a0 + a1) / 2.0);
                }
            }
            if mids.is_empty() {
                break;
            }
            for mid in mids {
                let u = [mid.cos(), mid.sin()];
                let mut projs: Vec<f64> = pts.iter().map(|p| dot(u, *p)).collect();
                projs.sort_by(|x, y| y.partial_cmp(x).unwrap());
                cons.push((u, projs[d - 1]));
            }
        }
    }
    cons
}

fn region_from_counts(pts: &[Point2], counts: &PairCounts, d: usize) -> Option<Polygon2> {
    let n = pts.len();
    if d > n {
        return None;
    }
    if pts.iter().all(|p| *p == pts[0]) {
        return Some(Polygon2::new(vec![pts[0]]));
    }
    let cons = region_constraints(pts, counts, d);
    if cons.is_empty() {
        return None;
    }
    let scale = coordinate_scale(pts);
    let eps = 1e-9 * scale;
    let mut lo = [f64::INFINITY, f64::INFINITY];
    let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let pad = 0.5 * ((hi[0] - lo[0]) + (hi[1] - lo[1])) + scale * 1e-6 + 1.0;
    let mut poly = vec![
        [lo[0] - pad, lo[1] - pad],
        [hi[0] + pad, lo[1] - pad],
        [hi[0] + pad, hi[1] + pad],
        [lo[0] - pad, hi[1] + pad],
    ];
    for (u, c) in &cons {
        poly = clip_halfplane(&poly, *u, *c, eps);
        if poly.is_empty() {
            return None;
        }
    }
    Some(Polygon2::new(poly))
}

/// The convex region `{theta : depth(theta) >= d}`.
pub fn depth_region(cloud: &PointCloud2D, d: usize) -> Result<Polygon2, GeometryError> {
    if d < 1 {
        return Err(GeometryError::InvalidLevel { d });
    }
    let pts = cloud.points();
    if d > pts.len() {
        return Err(GeometryError::EmptyRegion { d });
    }
    let counts = pair_counts(pts);
    region_from_counts(pts, &counts, d).ok_or(GeometryError::EmptyRegion { d })
}

fn deepest_region(pts: &[Point2], counts: &PairCounts, start: usize) -> Option<Polygon2> {
    let mut best: Option<Polygon2> = None;
    let mut d = start.max(1);
    while d <= pts.len() {
        match region_from_counts(pts, counts, d) {
            Some(poly) if !poly.is_empty() => {
                best = Some(poly);
                d += 1;
            }
            _ => break,
        }
    }
    best
}

/// Centroid of the deepest nonempty depth region. The result is generally
/// not a sample point.
pub fn tukey_median(cloud: &PointCloud2D) -> Point2 {
    let pts = cloud.points();
    if pts.len() == 1 || pts.iter().all(|p| *p == pts[0]) {
        return pts[0];
    }
    let depths = point_depths(cloud);
    let dstar = *depths.iter().max().unwrap();
    let counts = pair_counts(pts);
    match deepest_region(pts, &counts, dstar) {
        Some(poly) => poly.centroid(),
        None => {
            // should not happen: region(dstar) holds the deepest point
            let idx = depths.iter().enumerate().max_by_key(|(_, d)| **d).unwrap().0;
            pts[idx]
        }
    }
}

/// Build a bagplot. The bag is the smallest depth region holding at least
/// ceil(n/2) sample points; the fence expands it according to `fence_kind`
/// with coefficient `coef` (3 classically, 2.57 to retain about 99% of a
/// Gaussian cloud under geometric inflation). A depth fence below zero is
/// clamped, leaving no outliers.
pub fn build_bagplot(
    cloud: &PointCloud2D,
    coef: f64,
    fence_kind: FenceKind,
) -> Result<Bagplot, GeometryError> {
    let pts = cloud.points();
    let n = pts.len();
    if n < 4 {
        return Err(GeometryError::TooFewPoints { n, needed: 4 });
    }
    if !(coef > 0.0) || !coef.is_finite() {
        return Err(GeometryError::InvalidCoefficient { coef });
    }
    let depths = point_depths(cloud);
    let max_point_depth = *depths.iter().max().unwrap();
    let need = n.div_ceil(2);
    let mut bag_depth = 1;
    for d in 1..=max_point_depth {
        if depths.iter().filter(|x| **x >= d).count() >= need {
            bag_depth = d;
        } else {
            break;
        }
    }
    let counts = pair_counts(pts);
    let bag = region_from_counts(pts, &counts, bag_depth)
        .filter(|p| !p.is_empty())
        .unwrap_or_else(|| {
            // numeric fallback: hull of the qualifying points
            let members: Vec<Point2> = (0..n)
                .filter(|i| depths[*i] >= bag_depth)
                .map(|i| pts[i])
                .collect();
            convex_hull(&members)
        });
    let median = match deepest_region(pts, &counts, max_point_depth) {
        Some(poly) => poly.centroid(),
        None => bag.centroid(),
    };

    let scale = coordinate_scale(pts);
    let (fence, outlier_indices): (Fence, Vec<usize>) = match fence_kind {
        FenceKind::Depth => {
            let level = max_point_depth as f64
                - (max_point_depth as f64 - bag_depth as f64).abs() * coef;
            let cut = level.max(0.0);
            let outliers = (0..n).filter(|i| (depths[*i] as f64) < cut).collect();
            (Fence::Depth { level }, outliers)
        }
        FenceKind::Geometric => {
            let polygon = bag.scaled_about(median, coef);
            let eps = 1e-9 * scale;
            let outliers = (0..n).filter(|i| !polygon.contains(pts[*i], eps)).collect();
            (
                Fence::Geometric {
                    factor: coef,
                    polygon,
                },
                outliers,
            )
        }
    };
    let loop_indices = (0..n)
        .filter(|i| depths[*i] < bag_depth && !outlier_indices.contains(i))
        .collect();
    Ok(Bagplot {
        median,
        bag,
        bag_depth,
        max_point_depth,
        fence,
        outlier_indices,
        loop_indices,
        point_depths: depths,
    })
}
