//! Band depth (BD2) for curve ensembles, the depth-ranked functional
//! boxplot, and a smoothed-bootstrap confidence band for the median curve.
//!
//! The band of two curves is everything between their pointwise min and max
//! envelopes; the BD2 depth of a curve is the fraction of the `n choose 2`
//! bands that contain it at every grid point (closed inequalities, so a
//! curve always lies in the n-1 bands it generates). Depth counts are kept
//! as exact integers; the ranking breaks ties by ascending curve index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::curves::FunctionalSample;

#[derive(Debug, Error)]
pub enum BandDepthError {
    #[error("curve length mismatch: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("band depth needs at least 2 curves, found {n}")]
    TooFewCurves { n: usize },
    #[error("central proportion {alpha} outside (0, 1]")]
    InvalidAlpha { alpha: f64 },
    #[error("expansion factor {factor} must be nonnegative and finite")]
    InvalidFactor { factor: f64 },
    #[error("bootstrap needs at least 100 resamples, got {b}")]
    TooFewResamples { b: usize },
    #[error("smoothing fraction {gamma} must be nonnegative and finite")]
    InvalidGamma { gamma: f64 },
}

/// True iff `y` lies within the band of `yi` and `yj` at every grid point.
pub fn band_contains(y: &[f64], yi: &[f64], yj: &[f64]) -> Result<bool, BandDepthError> {
    if y.len() != yi.len() || y.len() != yj.len() {
        return Err(BandDepthError::LengthMismatch {
            a: y.len(),
            b: yi.len().max(yj.len()),
        });
    }
    Ok(contained(y, yi, yj))
}

#[inline]
fn contained(y: &[f64], yi: &[f64], yj: &[f64]) -> bool {
    for t in 0..y.len() {
        let (lo, hi) = if yi[t] <= yj[t] {
            (yi[t], yj[t])
        } else {
            (yj[t], yi[t])
        };
        if y[t] < lo || y[t] > hi {
            return false;
        }
    }
    true
}

/// Exact BD2 depths for every curve, with the tie-broken total ranking.
#[derive(Debug, Clone, Serialize)]
pub struct BandDepthResult {
    /// Number of containing bands per curve; `depths[i] = counts[i] / pairs`.
    pub counts: Vec<u64>,
    /// `n choose 2`.
    pub pairs: u64,
    pub depths: Vec<f64>,
    /// Curve indices by nonincreasing depth, ties by ascending index.
    pub ranking: Vec<usize>,
}

impl BandDepthResult {
    /// Indices of the curves at maximal depth.
    pub fn deepest(&self) -> Vec<usize> {
        let max = *self.counts.iter().max().unwrap();
        (0..self.counts.len())
            .filter(|i| self.counts[*i] == max)
            .collect()
    }
}

pub(crate) fn bd2_counts(values: &[Vec<f64>]) -> Vec<u64> {
    let n = values.len();
    (0..n)
        .into_par_iter()
        .map(|c| {
            let y = &values[c];
            let mut count = 0u64;
            for i in 0..n {
                for j in (i + 1)..n {
                    if contained(y, &values[i], &values[j]) {
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}

fn result_from_counts(counts: Vec<u64>, n: usize) -> BandDepthResult {
    let pairs = (n as u64) * (n as u64 - 1) / 2;
    let depths: Vec<f64> = counts.iter().map(|c| *c as f64 / pairs as f64).collect();
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    BandDepthResult {
        counts,
        pairs,
        depths,
        ranking,
    }
}

/// BD2 for all curves of the sample; per-curve counts run in parallel.
pub fn bd2_all(sample: &FunctionalSample) -> Result<BandDepthResult, BandDepthError> {
    let n = sample.n();
    if n < 2 {
        return Err(BandDepthError::TooFewCurves { n });
    }
    Ok(result_from_counts(bd2_counts(sample.values()), n))
}

fn median_from(values: &[Vec<f64>], counts: &[u64]) -> Vec<f64> {
    let max = *counts.iter().max().unwrap();
    let tied: Vec<usize> = (0..counts.len()).filter(|i| counts[*i] == max).collect();
    if tied.len() == 1 {
        return values[tied[0]].clone();
    }
    let m = values[0].len();
    let mut out = vec![0.0; m];
    for &i in &tied {
        for (o, v) in out.iter_mut().zip(&values[i]) {
            *o += v;
        }
    }
    for o in &mut out {
        *o /= tied.len() as f64;
    }
    out
}

/// The deepest curve; when several curves tie at maximal depth, their
/// pointwise average.
pub fn median_curve(sample: &FunctionalSample, depths: &BandDepthResult) -> Vec<f64> {
    median_from(sample.values(), &depths.counts)
}

/// Pointwise min/max envelope of the `ceil(alpha * n)` deepest curves.
pub fn central_region(
    sample: &FunctionalSample,
    depths: &BandDepthResult,
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>), BandDepthError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(BandDepthError::InvalidAlpha { alpha });
    }
    let n = sample.n();
    let k = ((alpha * n as f64).ceil() as usize).clamp(1, n);
    Ok(envelope(
        sample.values(),
        depths.ranking.iter().take(k).copied(),
    ))
}

fn envelope(values: &[Vec<f64>], indices: impl IntoIterator<Item = usize>) -> (Vec<f64>, Vec<f64>) {
    let m = values[0].len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for i in indices {
        for t in 0..m {
            lo[t] = lo[t].min(values[i][t]);
            hi[t] = hi[t].max(values[i][t]);
        }
    }
    (lo, hi)
}

/// Functional boxplot: central envelope of the deepest curves, fence
/// obtained by inflating that envelope pointwise by `factor` times its
/// height, and the curves escaping the fence anywhere as outliers.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalBoxplot {
    pub median_curve: Vec<f64>,
    pub central_lower: Vec<f64>,
    pub central_upper: Vec<f64>,
    pub fence_lower: Vec<f64>,
    pub fence_upper: Vec<f64>,
    pub nonoutlier_lower: Vec<f64>,
    pub nonoutlier_upper: Vec<f64>,
    pub outlier_indices: Vec<usize>,
    pub alpha: f64,
    pub factor: f64,
}

/// Build the boxplot, computing depths internally.
pub fn functional_boxplot(
    sample: &FunctionalSample,
    alpha: f64,
    factor: f64,
) -> Result<FunctionalBoxplot, BandDepthError> {
    let depths = bd2_all(sample)?;
    functional_boxplot_with(sample, &depths, alpha, factor)
}

/// Build the boxplot from precomputed depths.
pub fn functional_boxplot_with(
    sample: &FunctionalSample,
    depths: &BandDepthResult,
    alpha: f64,
    factor: f64,
) -> Result<FunctionalBoxplot, BandDepthError> {
    if !(factor >= 0.0) || !factor.is_finite() {
        return Err(BandDepthError::InvalidFactor { factor });
    }
    let (central_lower, central_upper) = central_region(sample, depths, alpha)?;
    let m = sample.m();
    let mut fence_lower = vec![0.0; m];
    let mut fence_upper = vec![0.0; m];
    for t in 0..m {
        let h = central_upper[t] - central_lower[t];
        fence_lower[t] = central_lower[t] - factor * h;
        fence_upper[t] = central_upper[t] + factor * h;
    }
    let outlier_indices: Vec<usize> = (0..sample.n())
        .filter(|&i| {
            sample
                .curve(i)
                .iter()
                .zip(&fence_lower)
                .zip(&fence_upper)
                .any(|((v, lo), hi)| v < lo || v > hi)
        })
        .collect();
    let (nonoutlier_lower, nonoutlier_upper) = envelope(
        sample.values(),
        (0..sample.n()).filter(|i| !outlier_indices.contains(i)),
    );
    Ok(FunctionalBoxplot {
        median_curve: median_curve(sample, depths),
        central_lower,
        central_upper,
        fence_lower,
        fence_upper,
        nonoutlier_lower,
        nonoutlier_upper,
        outlier_indices,
        alpha,
        factor,
    })
}

/// Pointwise 95% confidence band for the BD2 median curve by smoothed
/// bootstrap: resample curves with replacement, add Gaussian noise with
/// pointwise standard deviation `gamma * sample_std(t)`, recompute the
/// median per resample, and take pointwise 2.5% / 97.5% quantiles of the
/// `b` medians. Each resample draws from its own counter-derived stream of
/// the seed, so results do not depend on scheduling.
pub fn bootstrap_median_ci(
    sample: &FunctionalSample,
    b: usize,
    gamma: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), BandDepthError> {
    if b < 100 {
        return Err(BandDepthError::TooFewResamples { b });
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(BandDepthError::InvalidGamma { gamma });
    }
    let n = sample.n();
    if n < 2 {
        return Err(BandDepthError::TooFewCurves { n });
    }
    let m = sample.m();
    let std = sample.pointwise_std();
    let medians: Vec<Vec<f64>> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            let mut values: Vec<Vec<f64>> = Vec::with_capacity(n);
            for _ in 0..n {
                let idx = rng.random_range(0..n);
                let mut row = sample.curve(idx).to_vec();
                if gamma > 0.0 {
                    for (v, s) in row.iter_mut().zip(&std) {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        *v += gamma * s * z;
                    }
                }
                values.push(row);
            }
            let counts = bd2_counts(&values);
            median_from(&values, &counts)
        })
        .collect();
    let mut lower = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let lo_idx = quantile_index(0.025, b);
    let hi_idx = quantile_index(0.975, b);
    let mut column = vec![0.0; b];
    for t in 0..m {
        for (r, med) in medians.iter().enumerate() {
            column[r] = med[t];
        }
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lower[t] = column[lo_idx];
        upper[t] = column[hi_idx];
    }
    Ok((lower, upper))
}

/// Empirical inverse-CDF index for quantile `q` of `b` sorted values.
pub(crate) fn quantile_index(q: f64, b: usize) -> usize {
    (((q * b as f64).ceil() as usize).max(1) - 1).min(b - 1)
}
