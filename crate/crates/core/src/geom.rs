//! Small 2D geometry toolkit shared by the depth machinery and the renderer.

use serde::{Deserialize, Serialize};

pub type Point2 = [f64; 2];

#[inline]
pub fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point2, b: Point2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the cross product a × b. Positive when b points to the
/// left of a.
#[inline]
pub fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point2) -> f64 {
    dot(a, a).sqrt()
}

/// Rotate by +90 degrees; `dot(rot90(v), w) == cross(v, w)`.
#[inline]
pub fn rot90(v: Point2) -> Point2 {
    [-v[1], v[0]]
}

/// Convex polygon with counter-clockwise vertices.
///
/// Depth regions may legitimately degenerate to a segment or a single point
/// (for example on collinear clouds); such polygons keep their collapsed
/// vertices rather than becoming empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon2 {
    pub vertices: Vec<Point2>,
}

impl Polygon2 {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Polygon2 { vertices }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            acc += cross(v[i], v[j]);
        }
        acc / 2.0
    }

    /// Area centroid; falls back to the vertex mean for degenerate polygons,
    /// which is the segment midpoint / point itself for collapsed regions.
    pub fn centroid(&self) -> Point2 {
        let v = &self.vertices;
        assert!(!v.is_empty(), "centroid of empty polygon");
        let area = self.signed_area();
        let scale = self
            .vertices
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        if area.abs() <= 1e-18 * scale * scale {
            let mut c = [0.0, 0.0];
            for p in v {
                c[0] += p[0];
                c[1] += p[1];
            }
            return [c[0] / v.len() as f64, c[1] / v.len() as f64];
        }
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            let w = cross(v[i], v[j]);
            cx += (v[i][0] + v[j][0]) * w;
            cy += (v[i][1] + v[j][1]) * w;
        }
        [cx / (6.0 * area), cy / (6.0 * area)]
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = [f64::INFINITY, f64::INFINITY];
        let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Closed membership test with absolute slack `eps`. Works for
    /// degenerate polygons as well: edge half-plane tests are combined with
    /// a bounding-box check so a collapsed polygon only accepts its own
    /// neighbourhood.
    pub fn contains(&self, p: Point2, eps: f64) -> bool {
        if self.vertices.is_empty() {
            return false;
        }
        let (lo, hi) = self.bounding_box();
        if p[0] < lo[0] - eps || p[0] > hi[0] + eps || p[1] < lo[1] - eps || p[1] > hi[1] + eps {
            return false;
        }
        let v = &self.vertices;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            let edge = sub(v[j], v[i]);
            let len = norm(edge);
            if len <= eps * 1e-3 {
                continue;
            }
            // signed distance of p to the edge line, negative = outside (CCW)
            if cross(edge, sub(p, v[i])) / len < -eps {
                return false;
            }
        }
        true
    }

    /// Scale every vertex about `center` by `factor`.
    pub fn scaled_about(&self, center: Point2, factor: f64) -> Polygon2 {
        Polygon2 {
            vertices: self
                .vertices
                .iter()
                .map(|p| {
                    [
                        center[0] + factor * (p[0] - center[0]),
                        center[1] + factor * (p[1] - center[1]),
                    ]
                })
                .collect(),
        }
    }
}

/// Convex hull by Andrew's monotone chain, CCW orientation. Collinear
/// points interior to an edge are dropped; an all-collinear input yields
/// the extreme segment, a single distinct point yields one vertex.
pub fn convex_hull(points: &[Point2]) -> Polygon2 {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return Polygon2::new(pts);
    }
    let mut lower: Vec<Point2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2
            && cross(
                sub(lower[lower.len() - 1], lower[lower.len() - 2]),
                sub(p, lower[lower.len() - 2]),
            ) <= 0.0
        {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(
                sub(upper[upper.len() - 1], upper[upper.len() - 2]),
                sub(p, upper[upper.len() - 2]),
            ) <= 0.0
        {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.is_empty() {
        // fully collinear input
        return Polygon2::new(vec![pts[0], pts[pts.len() - 1]]);
    }
    Polygon2::new(lower)
}

/// Clip a convex polygon against the closed half-plane
/// `{ p : dot(normal, p) <= offset + eps }` (Sutherland–Hodgman step).
/// `eps >= 0` keeps boundary-touching and slightly-degenerate geometry.
pub fn clip_halfplane(poly: &[Point2], normal: Point2, offset: f64, eps: f64) -> Vec<Point2> {
    if poly.is_empty() {
        return Vec::new();
    }
    let inside = |p: Point2| dot(normal, p) - offset <= eps;
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let s = poly[i];
        let e = poly[(i + 1) % poly.len()];
        let si = inside(s);
        let ei = inside(e);
        if si {
            out.push(s);
        }
        if si != ei {
            let ds = dot(normal, s) - offset;
            let de = dot(normal, e) - offset;
            let denom = ds - de;
            if denom.abs() > 0.0 {
                let t = (ds / denom).clamp(0.0, 1.0);
                out.push([s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]);
            }
        }
    }
    // drop consecutive duplicates introduced by clipping
    let mut dedup: Vec<Point2> = Vec::with_capacity(out.len());
    for p in out {
        if let Some(last) = dedup.last() {
            if (last[0] - p[0]).abs() <= eps * 1e-3 && (last[1] - p[1]).abs() <= eps * 1e-3 {
                continue;
            }
        }
        dedup.push(p);
    }
    if dedup.len() >= 2 {
        let first = dedup[0];
        let last = *dedup.last().unwrap();
        if (first[0] - last[0]).abs() <= eps * 1e-3 && (first[1] - last[1]).abs() <= eps * 1e-3 {
            dedup.pop();
        }
    }
    dedup
}
