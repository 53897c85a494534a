//! Bivariate Gaussian kernel density estimation and highest-density-region
//! classification of a score cloud.
//!
//! The estimate is
//!
//! ```text
//! f(X) = (1/n) * sum_i K_H(X - X_i),   K_H(X) = |H|^(-1/2) K(H^(-1/2) X)
//! ```
//!
//! with the standard Gaussian kernel `K(X) = exp(-<X,X>/2) / (2 pi)` and a
//! symmetric positive-definite bandwidth matrix `H`. Per-query sums run in
//! a fixed point order, so results are reproducible to the last bit; the
//! queries themselves are evaluated in parallel.
//!
//! Coverage thresholds are sample quantiles of the densities at the cloud
//! points (not integrated-probability regions): `f_alpha` is chosen so that
//! about `alpha * n` points satisfy `f(X_i) >= f_alpha`, ties included.
//!
//! Known caveat, by construction of the estimator: a tight cluster of
//! outliers inflates its own density and can escape the quantile rule.
//! When the number of outliers is known a priori, [`OutlierRule::LowestK`]
//! flags the k lowest-density points instead.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curves::CurveClass;
use crate::geom::Point2;
use crate::reduction::PointCloud2D;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("degenerate cloud: zero variance in coordinate {coordinate}")]
    DegenerateCloud { coordinate: usize },
    #[error("bandwidth matrix is not symmetric positive-definite")]
    SingularBandwidth,
    #[error("coverage level {alpha} outside (0, 1)")]
    InvalidAlpha { alpha: f64 },
    #[error("outlier count {k} exceeds cloud size {n}")]
    InvalidCount { k: usize, n: usize },
}

/// Symmetric positive-definite 2x2 bandwidth matrix, in squared score
/// units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bandwidth {
    pub h11: f64,
    pub h12: f64,
    pub h22: f64,
}

impl Bandwidth {
    pub fn new(h11: f64, h12: f64, h22: f64) -> Result<Self, DensityError> {
        let det = h11 * h22 - h12 * h12;
        if !(h11 > 0.0) || !(det > 0.0) || !h11.is_finite() || !h12.is_finite() || !h22.is_finite()
        {
            return Err(DensityError::SingularBandwidth);
        }
        Ok(Bandwidth { h11, h12, h22 })
    }

    pub fn diagonal(h11: f64, h22: f64) -> Result<Self, DensityError> {
        Bandwidth::new(h11, 0.0, h22)
    }

    pub fn det(&self) -> f64 {
        self.h11 * self.h22 - self.h12 * self.h12
    }

    /// Quadratic form `v^T H^{-1} v`.
    #[inline]
    pub fn inv_quad(&self, v: Point2) -> f64 {
        let det = self.det();
        (self.h22 * v[0] * v[0] - 2.0 * self.h12 * v[0] * v[1] + self.h11 * v[1] * v[1]) / det
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let mid = (self.h11 + self.h22) / 2.0;
        let delta = ((self.h11 - self.h22) / 2.0).hypot(self.h12);
        mid + delta
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mid = (self.h11 + self.h22) / 2.0;
        let delta = ((self.h11 - self.h22) / 2.0).hypot(self.h12);
        mid - delta
    }
}

/// Diagonal bandwidth `H_kk = (n^(-1/3) * sigma_k)^2` from the
/// per-coordinate sample standard deviations.
pub fn scott_bandwidth(cloud: &PointCloud2D) -> Result<Bandwidth, DensityError> {
    let pts = cloud.points();
    let n = pts.len();
    if n < 2 {
        return Err(DensityError::DegenerateCloud { coordinate: 1 });
    }
    let mut sigma = [0.0f64; 2];
    for k in 0..2 {
        let mean: f64 = pts.iter().map(|p| p[k]).sum::<f64>() / n as f64;
        let var: f64 =
            pts.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>() / (n - 1) as f64;
        if var <= 0.0 {
            return Err(DensityError::DegenerateCloud { coordinate: k + 1 });
        }
        sigma[k] = var.sqrt();
    }
    let factor = (n as f64).powf(-1.0 / 3.0);
    let h = |s: f64| {
        let v = factor * s;
        v * v
    };
    Bandwidth::diagonal(h(sigma[0]), h(sigma[1]))
}

/// Evaluate the density estimate at each query point.
pub fn kde_eval(
    cloud: &PointCloud2D,
    bw: &Bandwidth,
    queries: &[Point2],
) -> Result<Vec<f64>, DensityError> {
    let det = bw.det();
    if !(det > 0.0) || !(bw.h11 > 0.0) {
        return Err(DensityError::SingularBandwidth);
    }
    let pts = cloud.points();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt() * pts.len() as f64);
    Ok(queries
        .par_iter()
        .map(|q| {
            let mut acc = 0.0;
            for p in pts {
                let d = [q[0] - p[0], q[1] - p[1]];
                acc += (-0.5 * bw.inv_quad(d)).exp();
            }
            acc * norm
        })
        .collect())
}

fn densities_at_points(cloud: &PointCloud2D, bw: &Bandwidth) -> Result<Vec<f64>, DensityError> {
    kde_eval(cloud, bw, cloud.points())
}

/// Density threshold for coverage `alpha`: with densities sorted ascending,
/// the value at 1-based index `floor((1-alpha)*n) + 1`, so that ceil(alpha*n)
/// points (plus ties) sit at or above it.
fn threshold_from_sorted(sorted_asc: &[f64], alpha: f64) -> f64 {
    let n = sorted_asc.len();
    let k0 = (((1.0 - alpha) * n as f64).floor() as usize + 1).min(n);
    sorted_asc[k0 - 1]
}

/// Coverage thresholds `f_alpha` for each requested level.
pub fn hdr_thresholds(
    cloud: &PointCloud2D,
    bw: &Bandwidth,
    alphas: &[f64],
) -> Result<Vec<(f64, f64)>, DensityError> {
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(DensityError::InvalidAlpha { alpha: a });
        }
    }
    let mut dens = densities_at_points(cloud, bw)?;
    dens.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(alphas
        .iter()
        .map(|&a| (a, threshold_from_sorted(&dens, a)))
        .collect())
}

const MODE_GRID: usize = 256;
const MEAN_SHIFT_ITERS: usize = 50;

fn mean_shift(cloud: &PointCloud2D, bw: &Bandwidth, start: Point2) -> Point2 {
    let pts = cloud.points();
    let mut x = start;
    for _ in 0..MEAN_SHIFT_ITERS {
        let mut wsum = 0.0;
        let mut acc = [0.0, 0.0];
        for p in pts {
            let d = [x[0] - p[0], x[1] - p[1]];
            let w = (-0.5 * bw.inv_quad(d)).exp();
            wsum += w;
            acc[0] += w * p[0];
            acc[1] += w * p[1];
        }
        if wsum <= f64::MIN_POSITIVE {
            break;
        }
        x = [acc[0] / wsum, acc[1] / wsum];
    }
    x
}

/// Global mode of the density estimate: argmax over a 256x256 grid spanning
/// the cloud's bounding box (expanded by three bandwidth standard
/// deviations), refined by fixed-point mean-shift iterations. The sample
/// point with the highest density seeds a second refinement so the mode
/// never scores below any sample point.
pub fn hdr_mode(cloud: &PointCloud2D, bw: &Bandwidth) -> Result<Point2, DensityError> {
    let pts = cloud.points();
    let expand = 3.0 * bw.max_eigenvalue().sqrt();
    let mut lo = [f64::INFINITY, f64::INFINITY];
    let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        lo[k] -= expand;
        hi[k] += expand;
    }
    let coord = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (MODE_GRID - 1) as f64;
    let rows: Vec<(f64, usize, usize)> = (0..MODE_GRID)
        .into_par_iter()
        .map(|iy| {
            let y = coord(1, iy);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for ix in 0..MODE_GRID {
                let q = [coord(0, ix), y];
                let mut acc = 0.0;
                for p in pts {
                    let d = [q[0] - p[0], q[1] - p[1]];
                    acc += (-0.5 * bw.inv_quad(d)).exp();
                }
                if acc > best.0 {
                    best = (acc, ix);
                }
            }
            (best.0, best.1, iy)
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    for r in rows {
        if r.0 > best.0 {
            best = r;
        }
    }
    let grid_start = [coord(0, best.1), coord(1, best.2)];
    let mode_a = mean_shift(cloud, bw, grid_start);
    let dens = densities_at_points(cloud, bw)?;
    let best_point = dens
        .iter()
        .enumerate()
        .fold((0usize, f64::NEG_INFINITY), |acc, (i, d)| {
            if *d > acc.1 {
                (i, *d)
            } else {
                acc
            }
        });
    let mode_b = mean_shift(cloud, bw, pts[best_point.0]);
    let fa = kde_eval(cloud, bw, &[mode_a])?[0];
    let fb = kde_eval(cloud, bw, &[mode_b])?[0];
    Ok(if fb > fa { mode_b } else { mode_a })
}

/// How HDR classification decides which points are outliers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutlierRule {
    /// Points below the coverage-`alpha` density threshold (default 0.95).
    Quantile(f64),
    /// Exactly the k lowest-density points (ties broken by index).
    LowestK(usize),
}

/// Full HDR analysis of a cloud: thresholds, mode, per-point density and
/// class.
#[derive(Debug, Clone, Serialize)]
pub struct HdrResult {
    /// (coverage level, density threshold) pairs, e.g. 0.5 and 0.95.
    pub thresholds: Vec<(f64, f64)>,
    pub mode: Point2,
    pub classes: Vec<CurveClass>,
    pub density_at_points: Vec<f64>,
}

/// Classify every point: Central inside the 50% region, Outer between the
/// 50% region and the outlier rule's boundary, Outlier beyond it.
pub fn hdr_classify(
    cloud: &PointCloud2D,
    bw: &Bandwidth,
    rule: OutlierRule,
) -> Result<HdrResult, DensityError> {
    let dens = densities_at_points(cloud, bw)?;
    let n = dens.len();
    let mut sorted = dens.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let f_central = threshold_from_sorted(&sorted, 0.5);

    let (thresholds, outlier_flags): (Vec<(f64, f64)>, Vec<bool>) = match rule {
        OutlierRule::Quantile(alpha) => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(DensityError::InvalidAlpha { alpha });
            }
            let f_out = threshold_from_sorted(&sorted, alpha);
            let flags = dens.iter().map(|d| *d < f_out).collect();
            (vec![(0.5, f_central), (alpha, f_out)], flags)
        }
        OutlierRule::LowestK(k) => {
            if k > n {
                return Err(DensityError::InvalidCount { k, n });
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dens[a].partial_cmp(&dens[b]).unwrap().then(a.cmp(&b)));
            let mut flags = vec![false; n];
            for &i in order.iter().take(k) {
                flags[i] = true;
            }
            (vec![(0.5, f_central)], flags)
        }
    };

    let classes = dens
        .iter()
        .zip(&outlier_flags)
        .map(|(d, out)| {
            if *out {
                CurveClass::Outlier
            } else if *d >= f_central {
                CurveClass::Central
            } else {
                CurveClass::Outer
            }
        })
        .collect();
    let mode = hdr_mode(cloud, bw)?;
    Ok(HdrResult {
        thresholds,
        mode,
        classes,
        density_at_points: dens,
    })
}

/// Count connected components of the half-maximum super-level set of the
/// density on a coarse grid; a result above 1 hints at multimodality
/// (where a bagplot's unimodality assumption breaks down). The estimate is
/// oversmoothed (doubled bandwidth radius) so sampling ripple does not
/// split the half-max set while well-separated blobs still do.
pub fn count_grid_modes(cloud: &PointCloud2D, bw: &Bandwidth) -> usize {
    const G: usize = 64;
    let bw = &Bandwidth {
        h11: bw.h11 * 4.0,
        h12: bw.h12 * 4.0,
        h22: bw.h22 * 4.0,
    };
    let pts = cloud.points();
    let expand = 2.0 * bw.max_eigenvalue().sqrt();
    let mut lo = [f64::INFINITY, f64::INFINITY];
    let mut hi = [f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        lo[k] -= expand;
        hi[k] += expand;
    }
    let queries: Vec<Point2> = (0..G * G)
        .map(|idx| {
            let (ix, iy) = (idx % G, idx / G);
            [
                lo[0] + (hi[0] - lo[0]) * ix as f64 / (G - 1) as f64,
                lo[1] + (hi[1] - lo[1]) * iy as f64 / (G - 1) as f64,
            ]
        })
        .collect();
    let dens = match kde_eval(cloud, bw, &queries) {
        Ok(d) => d,
        Err(_) => return 1,
    };
    let max = dens.iter().fold(0.0f64, |a, b| a.max(*b));
    let cut = 0.5 * max;
    let mut seen = vec![false; G * G];
    let mut components = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..G * G {
        if seen[start] || dens[start] < cut {
            continue;
        }
        components += 1;
        stack.push(start);
        seen[start] = true;
        while let Some(idx) = stack.pop() {
            let (ix, iy) = (idx % G, idx / G);
            let mut push = |jx: usize, jy: usize| {
                let j = jy * G + jx;
                if !seen[j] && dens[j] >= cut {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if ix > 0 {
                push(ix - 1, iy);
            }
            if ix + 1 < G {
                push(ix + 1, iy);
            }
            if iy > 0 {
                push(ix, iy - 1);
            }
            if iy + 1 < G {
                push(ix, iy + 1);
            }
        }
    }
    components.max(1)
}
