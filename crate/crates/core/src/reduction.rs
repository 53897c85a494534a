//! Dimension reduction of a curve ensemble to a low-dimensional score
//! space: classical PCA and a robust projection-pursuit variant that
//! maximizes the median absolute deviation of the projections instead of
//! their variance.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::FunctionalSample;
use crate::geom::Point2;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("degenerate sample: all curves are identical, covariance is zero")]
    DegenerateSample,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid component count {p}: must be in [1, {max}]")]
    InvalidComponents { p: usize, max: usize },
    #[error("at least 2 curves required, found {n}")]
    TooFewCurves { n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaKind {
    Classical,
    Robust,
}

/// A fitted linear reduction: mean curve, orthonormal component loadings
/// (rows), and per-component explained-variance ratios. For the robust
/// variant the ratios are criterion-based (see [`fit_robust_pca`]) and
/// `kind` says so.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub loadings: Vec<Vec<f64>>,
    pub var_ratios: Vec<f64>,
    pub kind: PcaKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PcaModel {
    pub fn components(&self) -> usize {
        self.loadings.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// n points in a 2-component score space, index-aligned with the curves
/// they were projected from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud2D {
    points: Vec<Point2>,
}

impl PointCloud2D {
    pub fn new(points: Vec<Point2>) -> Result<Self, ReductionError> {
        if points.is_empty() {
            return Err(ReductionError::TooFewCurves { n: 0 });
        }
        for p in &points {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(ReductionError::DimensionMismatch {
                    expected: 2,
                    found: 0,
                });
            }
        }
        Ok(PointCloud2D { points })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }
}

fn centered(sample: &FunctionalSample) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mean = sample.mean_curve();
    let x = sample
        .values()
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    (mean, x)
}

fn total_variance(x: &[Vec<f64>]) -> f64 {
    let n = x.len();
    x.iter()
        .flat_map(|row| row.iter())
        .map(|v| v * v)
        .sum::<f64>()
        / (n - 1) as f64
}

fn degenerate_floor(sample: &FunctionalSample) -> f64 {
    let scale = sample
        .values()
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    let eps = 1e-12 * (1.0 + scale);
    eps * eps
}

fn check_fit_preconditions(
    sample: &FunctionalSample,
    p: usize,
) -> Result<(usize, usize), ReductionError> {
    let (n, m) = (sample.n(), sample.m());
    if n < 2 {
        return Err(ReductionError::TooFewCurves { n });
    }
    let max_p = (n - 1).min(m);
    if p < 1 || p > max_p {
        return Err(ReductionError::InvalidComponents { p, max: max_p });
    }
    Ok((n, m))
}

/// First-positive sign convention: flip each loading so its
/// largest-magnitude entry is positive. Deterministic across platforms.
fn canonicalize_sign(loading: &mut [f64]) {
    let mut best = 0usize;
    for (i, v) in loading.iter().enumerate() {
        if v.abs() > loading[best].abs() {
            best = i;
        }
    }
    if loading[best] < 0.0 {
        for v in loading.iter_mut() {
            *v = -*v;
        }
    }
}

/// Eigendecomposition route: covariance (m x m) when m <= n, Gram matrix
/// (n x n) otherwise. Returns `count` (eigenvalue, loading) pairs sorted by
/// nonincreasing eigenvalue, loadings orthonormal.
fn principal_directions(x: &[Vec<f64>], count: usize) -> Vec<(f64, Vec<f64>)> {
    let n = x.len();
    let m = x[0].len();
    let denom = (n - 1) as f64;
    let mut pairs: Vec<(f64, Vec<f64>)> = if m <= n {
        let mut cov = DMatrix::zeros(m, m);
        for row in x {
            for i in 0..m {
                for j in i..m {
                    cov[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..m {
            for j in i..m {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        let eig = cov.symmetric_eigen();
        (0..m)
            .map(|k| {
                let vec: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, k)]).collect();
                (eig.eigenvalues[k], vec)
            })
            .collect()
    } else {
        let gram = DMatrix::from_fn(n, n, |i, j| {
            x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum::<f64>() / denom
        });
        let eig = gram.symmetric_eigen();
        (0..n)
            .map(|k| {
                let mut dir = vec![0.0; m];
                for (i, row) in x.iter().enumerate() {
                    let w = eig.eigenvectors[(i, k)];
                    for (d, v) in dir.iter_mut().zip(row) {
                        *d += w * v;
                    }
                }
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for v in &mut dir {
                        *v /= norm;
                    }
                }
                (eig.eigenvalues[k], dir)
            })
            .collect()
    };
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pairs.truncate(count);
    // Rank-deficient inputs can leave near-zero eigenvalues whose vectors are
    // numerically meaningless; replace them by a Gram-Schmidt completion so
    // the loading rows stay orthonormal.
    let kept: Vec<Vec<f64>> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let scale = pairs.first().map(|p| p.0.abs()).unwrap_or(0.0);
    for k in 0..pairs.len() {
        if pairs[k].0 <= scale * 1e-13 || !vector_is_unit(&pairs[k].1) {
            let prev: Vec<&[f64]> = (0..k).map(|i| pairs[i].1.as_slice()).collect();
            pairs[k].1 = orthonormal_completion(&prev, m, &kept);
            pairs[k].0 = pairs[k].0.max(0.0);
        }
    }
    pairs
}

fn vector_is_unit(v: &[f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>();
    (n - 1.0).abs() < 1e-6
}

fn orthonormal_completion(prev: &[&[f64]], m: usize, hints: &[Vec<f64>]) -> Vec<f64> {
    let candidates = hints
        .iter()
        .map(|h| h.as_slice())
        .chain((0..m).map(|_| [].as_slice()));
    let mut basis_idx = 0usize;
    for (ci, cand) in candidates.enumerate() {
        let mut v: Vec<f64> = if cand.is_empty() {
            let mut e = vec![0.0; m];
            e[basis_idx.min(m - 1)] = 1.0;
            basis_idx += 1;
            e
        } else {
            cand.to_vec()
        };
        for u in prev {
            let d: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u.iter()) {
                *vi -= d * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            for x in &mut v {
                *x /= norm;
            }
            return v;
        }
        let _ = ci;
    }
    // unreachable for m > prev.len(); keep a defined result regardless
    let mut e = vec![0.0; m];
    e[0] = 1.0;
    e
}

/// Classical PCA: loadings are the top-`p` eigenvectors of the empirical
/// covariance of the curves; `var_ratios[k]` is the k-th eigenvalue over
/// the total variance.
pub fn fit_pca(sample: &FunctionalSample, p: usize) -> Result<PcaModel, ReductionError> {
    let (_, _) = check_fit_preconditions(sample, p)?;
    let (mean, x) = centered(sample);
    let total = total_variance(&x);
    if total <= degenerate_floor(sample) {
        return Err(ReductionError::DegenerateSample);
    }
    let pairs = principal_directions(&x, p);
    let mut loadings = Vec::with_capacity(p);
    let mut var_ratios = Vec::with_capacity(p);
    for (lambda, mut vec) in pairs {
        canonicalize_sign(&mut vec);
        loadings.push(vec);
        var_ratios.push(lambda.max(0.0) / total);
    }
    Ok(PcaModel {
        mean,
        loadings,
        var_ratios,
        kind: PcaKind::Classical,
        seed: None,
    })
}

/// Median absolute deviation of the projections of `x` onto `u`.
fn mad_criterion(x: &[Vec<f64>], u: &[f64]) -> f64 {
    let mut s: Vec<f64> = x
        .iter()
        .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
        .collect();
    let med = median_inplace(&mut s);
    let mut dev: Vec<f64> = s.iter().map(|v| (v - med).abs()).collect();
    median_inplace(&mut dev)
}

fn median_inplace(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let d: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= d * ui;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

const RANDOM_DIRECTIONS: usize = 1000;
const GOLDEN_ITERS: usize = 40;
const REFINE_PASSES: usize = 2;

/// One golden-section pass maximizing the criterion over rotations of `u`
/// towards `axis` (unit, orthogonal to `u`). Returns the best (value, u).
fn golden_refine(x: &[Vec<f64>], u: &[f64], axis: &[f64], best_val: f64) -> (f64, Vec<f64>) {
    let rotate = |phi: f64| -> Vec<f64> {
        let (s, c) = phi.sin_cos();
        u.iter().zip(axis).map(|(a, b)| c * a + s * b).collect()
    };
    let eval = |phi: f64| mad_criterion(x, &rotate(phi));
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_4);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    for _ in 0..GOLDEN_ITERS {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        }
    }
    let (phi, val) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if val > best_val {
        let mut v = rotate(phi);
        normalize(&mut v);
        (val, v)
    } else {
        (best_val, u.to_vec())
    }
}

/// Robust projection pursuit. Each direction maximizes
/// `median_i |<x_i, u> - median_j <x_j, u>|` over unit vectors orthogonal
/// to the previously found directions. Candidates are the normalized
/// deviations of every curve from the pointwise median curve, 1000 seeded
/// random unit directions, and the classical first direction of the
/// deflated data; the best candidate is refined by coordinate-wise
/// golden-section rotations on the sphere.
///
/// `var_ratios` are the per-direction criterion values normalized by the
/// criterion total over a full orthonormal sequence (the pursued directions
/// followed by a classical completion of the deflated remainder); they are
/// criterion-based, not eigenvalue-based.
pub fn fit_robust_pca(
    sample: &FunctionalSample,
    p: usize,
    seed: u64,
) -> Result<PcaModel, ReductionError> {
    let (n, m) = check_fit_preconditions(sample, p)?;
    let (mean, x0) = centered(sample);
    if total_variance(&x0) <= degenerate_floor(sample) {
        return Err(ReductionError::DegenerateSample);
    }
    let q = (n - 1).min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.clone();
    let mut loadings: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut criteria: Vec<f64> = Vec::with_capacity(p);

    for _component in 0..p {
        // pointwise median curve of the deflated data
        let mut med_curve = vec![0.0; m];
        {
            let mut col = vec![0.0; n];
            for (t, mc) in med_curve.iter_mut().enumerate() {
                for (i, row) in x.iter().enumerate() {
                    col[i] = row[t];
                }
                *mc = median_inplace(&mut col);
            }
        }
        let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(n + RANDOM_DIRECTIONS + 1);
        for row in &x {
            let mut d: Vec<f64> = row.iter().zip(&med_curve).map(|(a, b)| a - b).collect();
            project_out(&mut d, &loadings);
            if normalize(&mut d) > 1e-12 {
                candidates.push(d);
            }
        }
        for _ in 0..RANDOM_DIRECTIONS {
            let mut d: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            project_out(&mut d, &loadings);
            if normalize(&mut d) > 1e-12 {
                candidates.push(d);
            }
        }
        // classical leading direction of the deflated data, so the pursuit
        // never returns anything worse than plain PCA
        let classical = principal_directions(&x, 1);
        if let Some((_, mut v)) = classical.into_iter().next() {
            project_out(&mut v, &loadings);
            if normalize(&mut v) > 1e-12 {
                candidates.push(v);
            }
        }
        if candidates.is_empty() {
            return Err(ReductionError::DegenerateSample);
        }
        // argmax with a total order (criterion, then candidate index):
        // bit-identical regardless of evaluation schedule
        let best = candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| (mad_criterion(&x, c), i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );
        let (mut best_val, mut u) = (best.0, candidates[best.1].clone());
        for _pass in 0..REFINE_PASSES {
            for j in 0..m {
                let mut axis = vec![0.0; m];
                axis[j] = 1.0;
                project_out(&mut axis, &loadings);
                // keep the rotation inside the deflated subspace and
                // orthogonal to the current direction
                let d: f64 = axis.iter().zip(&u).map(|(a, b)| a * b).sum();
                for (ai, ui) in axis.iter_mut().zip(&u) {
                    *ai -= d * ui;
                }
                if normalize(&mut axis) <= 1e-9 {
                    continue;
                }
                let (val, refined) = golden_refine(&x, &u, &axis, best_val);
                best_val = val;
                u = refined;
            }
        }
        project_out(&mut u, &loadings);
        normalize(&mut u);
        criteria.push(best_val);
        for row in &mut x {
            let d: f64 = row.iter().zip(&u).map(|(a, b)| a * b).sum();
            for (ri, ui) in row.iter_mut().zip(&u) {
                *ri -= d * ui;
            }
        }
        loadings.push(u);
    }

    // cheap classical completion of the remainder, for the criterion total
    let mut total: f64 = criteria.iter().sum();
    if q > p {
        for (_, mut v) in principal_directions(&x, q - p) {
            project_out(&mut v, &loadings);
            if normalize(&mut v) > 1e-9 {
                total += mad_criterion(&x0, &v);
            }
        }
    }
    if total <= 0.0 {
        return Err(ReductionError::DegenerateSample);
    }
    let var_ratios = criteria.iter().map(|c| c / total).collect();
    let mut loadings = loadings;
    for l in &mut loadings {
        canonicalize_sign(l);
    }
    Ok(PcaModel {
        mean,
        loadings,
        var_ratios,
        kind: PcaKind::Robust,
        seed: Some(seed),
    })
}

/// Full score matrix: one row per curve, `<loading_k, x_i - mean>` per
/// component.
pub fn scores_matrix(
    model: &PcaModel,
    sample: &FunctionalSample,
) -> Result<Vec<Vec<f64>>, ReductionError> {
    if model.dim() != sample.m() {
        return Err(ReductionError::DimensionMismatch {
            expected: model.dim(),
            found: sample.m(),
        });
    }
    Ok(sample
        .values()
        .iter()
        .map(|row| {
            model
                .loadings
                .iter()
                .map(|l| {
                    row.iter()
                        .zip(&model.mean)
                        .zip(l)
                        .map(|((v, m), w)| (v - m) * w)
                        .sum()
                })
                .collect()
        })
        .collect())
}

/// Project every curve onto the first two components.
pub fn project(
    model: &PcaModel,
    sample: &FunctionalSample,
) -> Result<PointCloud2D, ReductionError> {
    if model.components() < 2 {
        return Err(ReductionError::InvalidComponents {
            p: model.components(),
            max: 2,
        });
    }
    let scores = scores_matrix(model, sample)?;
    PointCloud2D::new(scores.into_iter().map(|s| [s[0], s[1]]).collect())
}

/// Back-project a score vector: `mean + sum_k scores[k] * loading_k`.
pub fn reconstruct(model: &PcaModel, scores: &[f64]) -> Result<Vec<f64>, ReductionError> {
    if scores.len() != model.components() {
        return Err(ReductionError::DimensionMismatch {
            expected: model.components(),
            found: scores.len(),
        });
    }
    let mut out = model.mean.clone();
    for (s, l) in scores.iter().zip(&model.loadings) {
        for (o, w) in out.iter_mut().zip(l) {
            *o += s * w;
        }
    }
    Ok(out)
}
