//! End-to-end analysis pipelines: reduce to score space and classify there
//! (HDR or bagplot), or rank directly by band depth; in all cases map the
//! result back to curve space as an [`EnsembleSummary`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::banddepth::{
    self, bootstrap_median_ci, BandDepthError, BandDepthResult, FunctionalBoxplot,
};
use crate::curves::{CurveClass, FunctionalSample};
use crate::density::{self, Bandwidth, DensityError, HdrResult, OutlierRule};
use crate::geom::Point2;
use crate::halfspace::{self, Bagplot, FenceKind, GeometryError};
use crate::reduction::{self, PcaModel, PointCloud2D, ReductionError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    BandDepth(#[from] BandDepthError),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hdr,
    Bagplot,
    BandDepth,
}

/// A pointwise band in curve space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCurves {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Parameters actually used by a run, echoed for reproducibility.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunMetadata {
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robust: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduction_seed: Option<u64>,
    /// Explained-variance ratios of the fitted model (criterion-based for
    /// the robust variant).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explained_variance: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Bandwidth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outlier_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outliers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snap_to_sample: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coef: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fence: Option<FenceKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_resamples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap_seed: Option<u64>,
    /// How the confidence band was obtained: "bd2-bootstrap" resamples
    /// curves and recomputes the band-depth median; "score-corner-approx"
    /// bootstraps the 2D depth median and back-projects the pointwise CI
    /// corners (an approximation, the score CI is a rectangle).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_kind: Option<String>,
    /// Central-region rule: envelope of the ceil(alpha*n) deepest curves,
    /// no interpolation between depth levels.
    pub central_rule: &'static str,
    /// Coverage thresholds are sample quantiles of point densities.
    pub quantile_rule: &'static str,
}

impl RunMetadata {
    fn new(n: usize, m: usize) -> Self {
        RunMetadata {
            n,
            m,
            central_rule: "ceil-alpha-n deepest curves",
            quantile_rule: "inverse-empirical-cdf, ties included",
            ..Default::default()
        }
    }
}

/// Classification of an ensemble plus the curve-space geometry every method
/// reports: a center curve, nested central / non-outlier envelopes, and an
/// optional confidence band for the median.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    pub method: Method,
    pub classes: Vec<CurveClass>,
    pub center_curve: Vec<f64>,
    pub central_envelope: BandCurves,
    pub nonoutlier_envelope: BandCurves,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_band: Option<BandCurves>,
    pub metadata: RunMetadata,
}

impl EnsembleSummary {
    pub fn outlier_indices(&self) -> Vec<usize> {
        self.classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CurveClass::Outlier)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ReductionOptions {
    /// Components to fit (at least 2; the score cloud uses the first two).
    pub components: usize,
    pub robust: bool,
    /// Required when `robust` is set.
    pub seed: Option<u64>,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions {
            components: 2,
            robust: false,
            seed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: 500,
            gamma: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct HdrOptions {
    pub reduction: ReductionOptions,
    /// Explicit bandwidth; defaults to the diagonal n^(-1/3)-scaled rule.
    pub bandwidth: Option<Bandwidth>,
    pub rule: Option<OutlierRule>,
    /// Return the highest-density sample curve instead of the reconstructed
    /// mode.
    pub snap_to_sample: bool,
}

#[derive(Debug, Clone)]
pub struct BagplotOptions {
    pub reduction: ReductionOptions,
    pub coef: f64,
    pub fence: FenceKind,
    pub bootstrap: BootstrapOptions,
}

impl Default for BagplotOptions {
    fn default() -> Self {
        BagplotOptions {
            reduction: ReductionOptions::default(),
            coef: 3.0,
            fence: FenceKind::Depth,
            bootstrap: BootstrapOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandDepthOptions {
    pub alpha: f64,
    pub factor: f64,
    pub bootstrap: BootstrapOptions,
}

impl Default for BandDepthOptions {
    fn default() -> Self {
        BandDepthOptions {
            alpha: 0.5,
            factor: 1.5,
            bootstrap: BootstrapOptions::default(),
        }
    }
}

fn fit_model(
    sample: &FunctionalSample,
    opts: &ReductionOptions,
) -> Result<PcaModel, PipelineError> {
    if opts.components < 2 {
        return Err(PipelineError::InvalidOptions(format!(
            "need at least 2 components for score-space methods, got {}",
            opts.components
        )));
    }
    let model = if opts.robust {
        let seed = opts.seed.ok_or_else(|| {
            PipelineError::InvalidOptions("robust reduction requires a seed".into())
        })?;
        reduction::fit_robust_pca(sample, opts.components, seed)?
    } else {
        reduction::fit_pca(sample, opts.components)?
    };
    Ok(model)
}

fn envelope_of(
    sample: &FunctionalSample,
    indices: impl IntoIterator<Item = usize>,
) -> BandCurves {
    let m = sample.m();
    let mut lower = vec![f64::INFINITY; m];
    let mut upper = vec![f64::NEG_INFINITY; m];
    let mut any = false;
    for i in indices {
        any = true;
        for (t, v) in sample.curve(i).iter().enumerate() {
            lower[t] = lower[t].min(*v);
            upper[t] = upper[t].max(*v);
        }
    }
    if !any {
        // empty class: collapse onto the mean so the band stays finite
        let mean = sample.mean_curve();
        return BandCurves {
            lower: mean.clone(),
            upper: mean,
        };
    }
    BandCurves { lower, upper }
}

fn reconstruct_score2(model: &PcaModel, score: Point2) -> Vec<f64> {
    let mut full = vec![0.0; model.components()];
    full[0] = score[0];
    full[1] = score[1];
    reduction::reconstruct(model, &full).expect("length matches by construction")
}

/// HDR pipeline output: the summary plus the fitted model, the score cloud
/// and the raw HDR classification for score-space reporting.
#[derive(Debug, Clone)]
pub struct HdrRun {
    pub summary: EnsembleSummary,
    pub model: PcaModel,
    pub cloud: PointCloud2D,
    pub hdr: HdrResult,
}

/// Reduce, estimate the density, classify by highest-density regions, and
/// map back: the center curve is the back-projected global mode.
pub fn run_hdr(sample: &FunctionalSample, opts: &HdrOptions) -> Result<HdrRun, PipelineError> {
    let model = fit_model(sample, &opts.reduction)?;
    let cloud = reduction::project(&model, sample)?;
    let bw = match opts.bandwidth {
        Some(b) => b,
        None => density::scott_bandwidth(&cloud)?,
    };
    let rule = opts.rule.unwrap_or(OutlierRule::Quantile(0.95));
    let hdr = density::hdr_classify(&cloud, &bw, rule)?;
    let center_curve = if opts.snap_to_sample {
        let best = hdr
            .density_at_points
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, d)| {
                if *d > acc.1 {
                    (i, *d)
                } else {
                    acc
                }
            });
        sample.curve(best.0).to_vec()
    } else {
        reconstruct_score2(&model, hdr.mode)
    };
    let classes = hdr.classes.clone();
    let central = envelope_of(
        sample,
        classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CurveClass::Central)
            .map(|(i, _)| i),
    );
    let nonoutlier = envelope_of(
        sample,
        classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != CurveClass::Outlier)
            .map(|(i, _)| i),
    );
    let mut metadata = RunMetadata::new(sample.n(), sample.m());
    metadata.components = Some(model.components());
    metadata.robust = Some(opts.reduction.robust);
    metadata.reduction_seed = model.seed;
    metadata.explained_variance = Some(model.var_ratios.clone());
    metadata.bandwidth = Some(bw);
    match rule {
        OutlierRule::Quantile(a) => metadata.outlier_alpha = Some(a),
        OutlierRule::LowestK(k) => metadata.n_outliers = Some(k),
    }
    metadata.snap_to_sample = Some(opts.snap_to_sample);
    Ok(HdrRun {
        summary: EnsembleSummary {
            method: Method::Hdr,
            classes,
            center_curve,
            central_envelope: central,
            nonoutlier_envelope: nonoutlier,
            ci_band: None,
            metadata,
        },
        model,
        cloud,
        hdr,
    })
}

/// Bagplot pipeline output.
#[derive(Debug, Clone)]
pub struct BagplotRun {
    pub summary: EnsembleSummary,
    pub model: PcaModel,
    pub cloud: PointCloud2D,
    pub bagplot: Bagplot,
    /// More than one density mode detected on a coarse KDE grid; the
    /// bagplot's unimodality assumption is then questionable.
    pub multimodal_hint: bool,
}

/// Smoothed bootstrap of the 2D depth median: per-coordinate percentile
/// intervals of the resampled medians.
fn bootstrap_score_median_ci(
    cloud: &PointCloud2D,
    opts: &BootstrapOptions,
) -> Result<([f64; 2], [f64; 2]), PipelineError> {
    if opts.resamples < 100 {
        return Err(PipelineError::BandDepth(BandDepthError::TooFewResamples {
            b: opts.resamples,
        }));
    }
    if !(opts.gamma >= 0.0) || !opts.gamma.is_finite() {
        return Err(PipelineError::BandDepth(BandDepthError::InvalidGamma {
            gamma: opts.gamma,
        }));
    }
    let pts = cloud.points();
    let n = pts.len();
    let mut sigma = [0.0f64; 2];
    for k in 0..2 {
        let mean: f64 = pts.iter().map(|p| p[k]).sum::<f64>() / n as f64;
        sigma[k] = (pts.iter().map(|p| (p[k] - mean) * (p[k] - mean)).sum::<f64>()
            / (n - 1).max(1) as f64)
            .sqrt();
    }
    let medians: Vec<Point2> = (0..opts.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(r as u64 + 1);
            let resampled: Vec<Point2> = (0..n)
                .map(|_| {
                    let p = pts[rng.random_range(0..n)];
                    if opts.gamma > 0.0 {
                        let zx: f64 = StandardNormal.sample(&mut rng);
                        let zy: f64 = StandardNormal.sample(&mut rng);
                        [
                            p[0] + opts.gamma * sigma[0] * zx,
                            p[1] + opts.gamma * sigma[1] * zy,
                        ]
                    } else {
                        p
                    }
                })
                .collect();
            let rc = PointCloud2D::new(resampled).expect("resample stays finite");
            halfspace::tukey_median(&rc)
        })
        .collect();
    let b = medians.len();
    let lo_idx = banddepth::quantile_index(0.025, b);
    let hi_idx = banddepth::quantile_index(0.975, b);
    let mut lo = [0.0f64; 2];
    let mut hi = [0.0f64; 2];
    for k in 0..2 {
        let mut col: Vec<f64> = medians.iter().map(|p| p[k]).collect();
        col.sort_by(|a, b| a.partial_cmp(b).unwrap());
        lo[k] = col[lo_idx];
        hi[k] = col[hi_idx];
    }
    Ok((lo, hi))
}

/// Reduce, build the Tukey-depth bagplot in score space, and map back:
/// the center curve is the back-projected depth median; the confidence
/// band back-projects the corners of the bootstrapped score-median CI.
pub fn run_bagplot(
    sample: &FunctionalSample,
    opts: &BagplotOptions,
) -> Result<BagplotRun, PipelineError> {
    let model = fit_model(sample, &opts.reduction)?;
    let cloud = reduction::project(&model, sample)?;
    let bagplot = halfspace::build_bagplot(&cloud, opts.coef, opts.fence)?;
    let multimodal_hint = match density::scott_bandwidth(&cloud) {
        Ok(bw) => density::count_grid_modes(&cloud, &bw) > 1,
        Err(_) => false,
    };
    let center_curve = reconstruct_score2(&model, bagplot.median);

    let mut classes = vec![CurveClass::Outer; sample.n()];
    for i in bagplot.bag_indices() {
        classes[i] = CurveClass::Central;
    }
    for &i in &bagplot.outlier_indices {
        classes[i] = CurveClass::Outlier;
    }
    let central = envelope_of(
        sample,
        classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == CurveClass::Central)
            .map(|(i, _)| i),
    );
    let nonoutlier = envelope_of(
        sample,
        classes
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != CurveClass::Outlier)
            .map(|(i, _)| i),
    );

    let (ci_lo, ci_hi) = bootstrap_score_median_ci(&cloud, &opts.bootstrap)?;
    let corners = [
        [ci_lo[0], ci_lo[1]],
        [ci_lo[0], ci_hi[1]],
        [ci_hi[0], ci_lo[1]],
        [ci_hi[0], ci_hi[1]],
    ];
    let m = sample.m();
    let mut band = BandCurves {
        lower: vec![f64::INFINITY; m],
        upper: vec![f64::NEG_INFINITY; m],
    };
    for c in corners {
        let curve = reconstruct_score2(&model, c);
        for (t, v) in curve.iter().enumerate() {
            band.lower[t] = band.lower[t].min(*v);
            band.upper[t] = band.upper[t].max(*v);
        }
    }

    let mut metadata = RunMetadata::new(sample.n(), sample.m());
    metadata.components = Some(model.components());
    metadata.robust = Some(opts.reduction.robust);
    metadata.reduction_seed = model.seed;
    metadata.explained_variance = Some(model.var_ratios.clone());
    metadata.coef = Some(opts.coef);
    metadata.fence = Some(opts.fence);
    metadata.bootstrap_resamples = Some(opts.bootstrap.resamples);
    metadata.bootstrap_gamma = Some(opts.bootstrap.gamma);
    metadata.bootstrap_seed = Some(opts.bootstrap.seed);
    metadata.ci_kind = Some("score-corner-approx".into());
    Ok(BagplotRun {
        summary: EnsembleSummary {
            method: Method::Bagplot,
            classes,
            center_curve,
            central_envelope: central,
            nonoutlier_envelope: nonoutlier,
            ci_band: Some(band),
            metadata,
        },
        model,
        cloud,
        bagplot,
        multimodal_hint,
    })
}

/// Band-depth pipeline output.
#[derive(Debug, Clone)]
pub struct BandDepthRun {
    pub summary: EnsembleSummary,
    pub depths: BandDepthResult,
    pub boxplot: FunctionalBoxplot,
}

/// Pure functional path: BD2 ranking, functional boxplot, bootstrap CI.
///
/// Classes: curves at least as deep as the ceil(alpha*n)-th ranked curve
/// are Central (depth ties included, so exact ties cannot straddle the
/// boundary); among the rest, fence violators are Outlier and the
/// remainder Outer.
pub fn run_band_depth(
    sample: &FunctionalSample,
    opts: &BandDepthOptions,
) -> Result<BandDepthRun, PipelineError> {
    let depths = banddepth::bd2_all(sample)?;
    let boxplot = banddepth::functional_boxplot_with(sample, &depths, opts.alpha, opts.factor)?;
    let n = sample.n();
    let k = ((opts.alpha * n as f64).ceil() as usize).clamp(1, n);
    let central_cut = depths.counts[depths.ranking[k - 1]];
    let mut classes = vec![CurveClass::Outer; n];
    for (i, class) in classes.iter_mut().enumerate() {
        if depths.counts[i] >= central_cut {
            *class = CurveClass::Central;
        } else if boxplot.outlier_indices.contains(&i) {
            *class = CurveClass::Outlier;
        }
    }
    let (ci_lower, ci_upper) = bootstrap_median_ci(
        sample,
        opts.bootstrap.resamples,
        opts.bootstrap.gamma,
        opts.bootstrap.seed,
    )?;
    let mut metadata = RunMetadata::new(n, sample.m());
    metadata.alpha = Some(opts.alpha);
    metadata.factor = Some(opts.factor);
    metadata.bootstrap_resamples = Some(opts.bootstrap.resamples);
    metadata.bootstrap_gamma = Some(opts.bootstrap.gamma);
    metadata.bootstrap_seed = Some(opts.bootstrap.seed);
    metadata.ci_kind = Some("bd2-bootstrap".into());
    let summary = EnsembleSummary {
        method: Method::BandDepth,
        classes,
        center_curve: boxplot.median_curve.clone(),
        central_envelope: BandCurves {
            lower: boxplot.central_lower.clone(),
            upper: boxplot.central_upper.clone(),
        },
        nonoutlier_envelope: BandCurves {
            lower: boxplot.nonoutlier_lower.clone(),
            upper: boxplot.nonoutlier_upper.clone(),
        },
        ci_band: Some(BandCurves {
            lower: ci_lower,
            upper: ci_upper,
        }),
        metadata,
    };
    Ok(BandDepthRun {
        summary,
        depths,
        boxplot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn fast_bootstrap(seed: u64) -> BootstrapOptions {
        BootstrapOptions {
            resamples: 100,
            gamma: 0.05,
            seed,
        }
    }

    fn check_summary_invariants(summary: &EnsembleSummary, sample: &FunctionalSample) {
        assert_eq!(summary.classes.len(), sample.n());
        for t in 0..sample.m() {
            assert!(
                summary.central_envelope.lower[t] >= summary.nonoutlier_envelope.lower[t] - 1e-12
            );
            assert!(
                summary.central_envelope.upper[t] <= summary.nonoutlier_envelope.upper[t] + 1e-12
            );
        }
        for (i, class) in summary.classes.iter().enumerate() {
            if *class != CurveClass::Outlier {
                for (t, v) in sample.curve(i).iter().enumerate() {
                    assert!(*v >= summary.nonoutlier_envelope.lower[t] - 1e-12);
                    assert!(*v <= summary.nonoutlier_envelope.upper[t] + 1e-12);
                }
            }
        }
        if let Some(ci) = &summary.ci_band {
            for t in 0..sample.m() {
                assert!(ci.lower[t] <= ci.upper[t]);
            }
        }
    }

    #[test]
    fn hdr_run_produces_nested_envelopes() {
        let sample = synthetic::transient_ensemble(60, 40, 3);
        let run = run_hdr(&sample, &HdrOptions::default()).unwrap();
        assert!(run
            .summary
            .classes
            .iter()
            .any(|c| *c == CurveClass::Central));
        check_summary_invariants(&run.summary, &sample);
        // explained variance by two smooth dominant modes should be high
        let ev: f64 = run.model.var_ratios.iter().sum();
        assert!(ev > 0.5, "explained variance {ev}");
    }

    #[test]
    fn hdr_flags_planted_outliers() {
        let base = synthetic::transient_ensemble(60, 40, 5);
        let (sample, planted) = synthetic::plant_gross_outliers(&base, 3, 12.0);
        let run = run_hdr(&sample, &HdrOptions::default()).unwrap();
        for &i in &planted {
            assert_eq!(run.summary.classes[i], CurveClass::Outlier, "curve {i}");
        }
        // the planted curves carry the lowest densities
        let mut ranked: Vec<usize> = (0..sample.n()).collect();
        ranked.sort_by(|&a, &b| {
            run.hdr.density_at_points[a]
                .partial_cmp(&run.hdr.density_at_points[b])
                .unwrap()
        });
        for &i in &planted {
            assert!(ranked[..3].contains(&i));
        }
    }

    #[test]
    fn hdr_of_identical_curves_is_degenerate() {
        let grid: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let sample =
            FunctionalSample::new(grid, vec![vec![1.0; 10]; 8], None).unwrap();
        assert!(matches!(
            run_hdr(&sample, &HdrOptions::default()).unwrap_err(),
            PipelineError::Reduction(ReductionError::DegenerateSample)
        ));
    }

    #[test]
    fn hdr_snap_returns_sample_curve() {
        let sample = synthetic::transient_ensemble(30, 25, 9);
        let opts = HdrOptions {
            snap_to_sample: true,
            ..Default::default()
        };
        let run = run_hdr(&sample, &opts).unwrap();
        assert!(sample
            .values()
            .iter()
            .any(|row| row == &run.summary.center_curve));
    }

    #[test]
    fn bagplot_center_near_centroid_on_symmetric_cloud() {
        // curves = mean +- a*v1 +- b*v2: the score cloud is symmetric about
        // the origin, so the depth median back-projects to the mean curve
        let m = 20;
        let grid: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let v1: Vec<f64> = (0..m).map(|i| (i as f64 / 3.0).sin()).collect();
        let v2: Vec<f64> = (0..m).map(|i| (i as f64 / 5.0).cos()).collect();
        let mut values = Vec::new();
        for &(a, b) in &[(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0),
                          (2.0, 0.5), (2.0, -0.5), (-2.0, 0.5), (-2.0, -0.5)] {
            values.push(
                (0..m)
                    .map(|t| 100.0 + a * v1[t] + b * v2[t])
                    .collect::<Vec<f64>>(),
            );
        }
        let sample = FunctionalSample::new(grid, values, None).unwrap();
        let opts = BagplotOptions {
            bootstrap: fast_bootstrap(1),
            ..Default::default()
        };
        let run = run_bagplot(&sample, &opts).unwrap();
        let mean = sample.mean_curve();
        for (c, mu) in run.summary.center_curve.iter().zip(&mean) {
            assert!((c - mu).abs() < 1e-6, "center {c} vs mean {mu}");
        }
        check_summary_invariants(&run.summary, &sample);
    }

    #[test]
    fn bagplot_gaussian_depth_fence_keeps_everything() {
        let sample = synthetic::transient_ensemble(80, 30, 11);
        let opts = BagplotOptions {
            bootstrap: fast_bootstrap(2),
            ..Default::default()
        };
        let run = run_bagplot(&sample, &opts).unwrap();
        assert!(run.summary.outlier_indices().is_empty());
        check_summary_invariants(&run.summary, &sample);
    }

    #[test]
    fn bagplot_geometric_fence_flags_planted() {
        let base = synthetic::transient_ensemble(60, 30, 13);
        let (sample, planted) = synthetic::plant_gross_outliers(&base, 2, 10.0);
        let opts = BagplotOptions {
            fence: FenceKind::Geometric,
            bootstrap: fast_bootstrap(3),
            ..Default::default()
        };
        let run = run_bagplot(&sample, &opts).unwrap();
        let outliers = run.summary.outlier_indices();
        for &i in &planted {
            assert!(outliers.contains(&i), "planted {i} not flagged");
        }
    }

    #[test]
    fn band_depth_worked_example_center() {
        let grid = vec![0.0, 1.0];
        let sample = FunctionalSample::new(
            grid,
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.25],
                vec![2.0, 2.0],
                vec![3.0, 0.5],
            ],
            None,
        )
        .unwrap();
        let opts = BandDepthOptions {
            bootstrap: fast_bootstrap(4),
            ..Default::default()
        };
        let run = run_band_depth(&sample, &opts).unwrap();
        assert_eq!(run.summary.center_curve, vec![1.0, 0.25]);
    }

    #[test]
    fn band_depth_two_curves_all_central() {
        let grid = vec![0.0, 1.0, 2.0];
        let sample = FunctionalSample::new(
            grid,
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]],
            None,
        )
        .unwrap();
        let opts = BandDepthOptions {
            bootstrap: fast_bootstrap(5),
            ..Default::default()
        };
        let run = run_band_depth(&sample, &opts).unwrap();
        assert!(run
            .summary
            .classes
            .iter()
            .all(|c| *c == CurveClass::Central));
        assert!(run.summary.outlier_indices().is_empty());
    }

    #[test]
    fn band_depth_outliers_below_median_depth() {
        let base = synthetic::transient_ensemble(40, 25, 17);
        let (sample, _) = synthetic::plant_gross_outliers(&base, 3, 10.0);
        let opts = BandDepthOptions {
            bootstrap: fast_bootstrap(6),
            ..Default::default()
        };
        let run = run_band_depth(&sample, &opts).unwrap();
        check_summary_invariants(&run.summary, &sample);
        let k = (0.5 * sample.n() as f64).ceil() as usize;
        let cut = run.depths.counts[run.depths.ranking[k - 1]];
        for i in run.summary.outlier_indices() {
            assert!(run.depths.counts[i] < cut);
        }
    }

    #[test]
    fn all_methods_flag_unambiguous_plants() {
        // n divisible by 20 so the 0.95 quantile rule can flag all 3 plants
        let base = synthetic::transient_ensemble(60, 30, 21);
        let (sample, planted) = synthetic::plant_gross_outliers(&base, 3, 10.0);
        let hdr = run_hdr(&sample, &HdrOptions::default()).unwrap();
        let bag = run_bagplot(
            &sample,
            &BagplotOptions {
                fence: FenceKind::Geometric,
                bootstrap: fast_bootstrap(7),
                ..Default::default()
            },
        )
        .unwrap();
        let fb = run_band_depth(
            &sample,
            &BandDepthOptions {
                bootstrap: fast_bootstrap(8),
                ..Default::default()
            },
        )
        .unwrap();
        for &i in &planted {
            assert_eq!(hdr.summary.classes[i], CurveClass::Outlier, "hdr {i}");
            assert_eq!(bag.summary.classes[i], CurveClass::Outlier, "bagplot {i}");
            assert_eq!(fb.summary.classes[i], CurveClass::Outlier, "fbplot {i}");
        }
    }

    #[test]
    fn classes_partition_for_all_methods() {
        let sample = synthetic::transient_ensemble(35, 20, 25);
        let runs: Vec<Vec<CurveClass>> = vec![
            run_hdr(&sample, &HdrOptions::default()).unwrap().summary.classes,
            run_bagplot(
                &sample,
                &BagplotOptions {
                    bootstrap: fast_bootstrap(9),
                    ..Default::default()
                },
            )
            .unwrap()
            .summary
            .classes,
            run_band_depth(
                &sample,
                &BandDepthOptions {
                    bootstrap: fast_bootstrap(10),
                    ..Default::default()
                },
            )
            .unwrap()
            .summary
            .classes,
        ];
        for classes in runs {
            assert_eq!(classes.len(), sample.n());
        }
    }

    #[test]
    fn robust_reduction_requires_seed() {
        let sample = synthetic::transient_ensemble(20, 15, 2);
        let opts = HdrOptions {
            reduction: ReductionOptions {
                robust: true,
                seed: None,
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(matches!(
            run_hdr(&sample, &opts).unwrap_err(),
            PipelineError::InvalidOptions(_)
        ));
    }
}
