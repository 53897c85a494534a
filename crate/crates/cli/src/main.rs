//! `fundepth` — depth-based ranking, envelopes and outlier detection for
//! ensembles of curves on a shared time grid.
//!
//! Subcommands select the method: `hdr` and `bagplot` analyze the ensemble
//! in a 2D principal-component score space (kernel density / Tukey depth),
//! `fbplot` ranks curves directly by band depth, `pca` reports the
//! reduction alone and `depth` the band-depth ranking alone. Outputs are
//! JSON reports, CSV exports and SVG plots; identical inputs, flags and
//! seeds produce byte-identical files.

mod config;
mod report;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fundepth_core::banddepth::BandDepthResult;
use fundepth_core::curves::{load_curves, truncate, CurveClass, CurveError, FunctionalSample};
use fundepth_core::density::{HdrResult, OutlierRule};
use fundepth_core::geom::{convex_hull, Point2};
use fundepth_core::halfspace::Bagplot;
use fundepth_core::pipeline::{
    run_bagplot, run_band_depth, run_hdr, BagplotOptions, BandDepthOptions, BootstrapOptions,
    EnsembleSummary, HdrOptions, PipelineError, ReductionOptions,
};
use fundepth_core::reduction::{self, PcaModel, PointCloud2D};
use fundepth_core::render::{
    render_cloud, render_curves, render_functional, FilledRegion, PlotSpec,
};

use config::EffectiveConfig;
use report::Report;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config file (exit 64).
    Usage(String),
    /// Input file or format problem (exit 1).
    Input(String),
    /// Failure writing an output file (exit 1).
    OutputIo { path: String, message: String },
    /// Numerical failure: degenerate sample, singular bandwidth, ... (exit 2).
    Numeric(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Input(m) => write!(f, "{m}"),
            CliError::OutputIo { path, message } => write!(f, "{path}: {message}"),
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Input(_) | CliError::OutputIo { .. } => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "fundepth",
    version,
    about = "Rank curve ensembles by statistical depth: median curves, central envelopes, outlier transients",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel-density highest-density regions in the 2D score space
    Hdr(MethodArgs),
    /// Tukey-depth bagplot in the 2D score space
    Bagplot(MethodArgs),
    /// Band-depth functional boxplot, no reduction step
    Fbplot(MethodArgs),
    /// Fit and report the principal-component reduction only
    Pca(MethodArgs),
    /// Band-depth ranking only
    Depth(MethodArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    /// Input CSV: first data line is the time grid, then one curve per line
    /// (optional leading label field)
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Keep only the first K grid points before analysis
    #[arg(long, value_name = "K")]
    truncate: Option<usize>,
    /// Number of reduction components [default: 2]
    #[arg(long, value_name = "P")]
    components: Option<usize>,
    /// Robust (median-absolute-deviation) reduction instead of classical PCA
    #[arg(long)]
    robust: bool,
    /// Central-region proportion for fbplot [default: 0.5]
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    /// Fence expansion factor for fbplot [default: 1.5]
    #[arg(long, value_name = "F")]
    factor: Option<f64>,
    /// Bagplot fence coefficient [default: 3]
    #[arg(long, value_name = "C")]
    coef: Option<f64>,
    /// Bagplot fence rule [default: depth]
    #[arg(long, value_parser = ["depth", "geometric"])]
    fence: Option<String>,
    /// HDR outlier coverage level [default: 0.95]
    #[arg(long, value_name = "A")]
    outlier_alpha: Option<f64>,
    /// Flag exactly K lowest-density points instead of using --outlier-alpha
    #[arg(long, value_name = "K")]
    n_outliers: Option<usize>,
    /// Bootstrap resamples for confidence bands [default: 500]
    #[arg(long, value_name = "B")]
    bootstrap: Option<usize>,
    /// Bootstrap smoothing fraction [default: 0.05]
    #[arg(long, value_name = "G")]
    gamma: Option<f64>,
    /// RNG seed; required for bagplot, fbplot and --robust
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Full KDE bandwidth matrix as h11,h12,h22 [default: diagonal rule]
    #[arg(long, value_name = "H11,H12,H22")]
    bandwidth: Option<String>,
    /// Use the highest-density sample curve as the HDR center curve
    #[arg(long)]
    snap_to_sample: bool,
    /// Write the functional-space SVG here
    #[arg(long, value_name = "PATH")]
    svg: Option<PathBuf>,
    /// Write the score-space SVG here (hdr, bagplot, pca)
    #[arg(long, value_name = "PATH")]
    score_svg: Option<PathBuf>,
    /// Write the JSON report here
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
    /// Write the CSV export here
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// TOML config file; flags take precedence over its keys
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker thread cap (FUNDEPTH_THREADS is the fallback) [default: all cores]
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// SVG width in pixels [default: 900]
    #[arg(long, value_name = "PX")]
    svg_width: Option<f64>,
    /// SVG height in pixels [default: 600]
    #[arg(long, value_name = "PX")]
    svg_height: Option<f64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(&cli) {
        Ok(line) => {
            println!("{line}");
        }
        Err(e) => {
            eprintln!("fundepth: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let (method, args) = match &cli.command {
        Command::Hdr(a) => ("hdr", a),
        Command::Bagplot(a) => ("bagplot", a),
        Command::Fbplot(a) => ("fbplot", a),
        Command::Pca(a) => ("pca", a),
        Command::Depth(a) => ("depth", a),
    };
    let file_cfg = match &args.config {
        Some(path) => config::load_file_config(path)?,
        None => config::FileConfig::default(),
    };
    let cfg = config::resolve(method, args, file_cfg)?;
    if let Some(t) = cfg.threads {
        // ignore "already initialized": only possible in-process, not from main
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let sample = load_curves(&cfg.input)?;
    let sample = match cfg.truncate {
        Some(k) => truncate(&sample, k)?,
        None => sample,
    };
    match method {
        "hdr" => run_hdr_cmd(&cfg, &sample),
        "bagplot" => run_bagplot_cmd(&cfg, &sample),
        "fbplot" => run_fbplot_cmd(&cfg, &sample),
        "pca" => run_pca_cmd(&cfg, &sample),
        "depth" => run_depth_cmd(&cfg, &sample),
        _ => unreachable!(),
    }
}

fn functional_spec(cfg: &EffectiveConfig) -> PlotSpec {
    PlotSpec {
        width: cfg.svg_width,
        height: cfg.svg_height,
        ..Default::default()
    }
}

fn score_spec(cfg: &EffectiveConfig) -> PlotSpec {
    PlotSpec {
        width: cfg.svg_width,
        height: cfg.svg_height,
        x_label: "component 1".into(),
        y_label: "component 2".into(),
        ..Default::default()
    }
}

fn reduction_options(cfg: &EffectiveConfig) -> ReductionOptions {
    ReductionOptions {
        components: cfg.components.max(2),
        robust: cfg.robust,
        seed: cfg.seed,
    }
}

fn bootstrap_options(cfg: &EffectiveConfig) -> BootstrapOptions {
    BootstrapOptions {
        resamples: cfg.bootstrap,
        gamma: cfg.gamma,
        seed: cfg.seed.unwrap_or(0),
    }
}

fn class_hulls(cloud: &PointCloud2D, keep: impl Fn(usize) -> bool) -> Vec<Point2> {
    cloud
        .points()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, p)| *p)
        .collect()
}

fn outlier_labels<'a>(sample: &'a FunctionalSample, summary: &EnsembleSummary) -> Vec<&'a str> {
    summary
        .outlier_indices()
        .into_iter()
        .map(|i| sample.labels()[i].as_str())
        .collect()
}

fn write_common_outputs(
    cfg: &EffectiveConfig,
    sample: &FunctionalSample,
    summary: &EnsembleSummary,
) -> Result<(), CliError> {
    if let Some(path) = &cfg.svg {
        let svg = render_functional(sample, summary, &functional_spec(cfg))
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    if let Some(path) = &cfg.csv {
        report::write_text(path, &report::envelope_csv(sample, summary))?;
    }
    Ok(())
}

fn summary_line(
    cfg: &EffectiveConfig,
    sample: &FunctionalSample,
    outliers: Option<usize>,
    explained: Option<f64>,
) -> String {
    let mut line = format!(
        "fundepth {}: n={} m={}",
        cfg.method,
        sample.n(),
        sample.m()
    );
    if let Some(k) = outliers {
        line.push_str(&format!(" outliers={k}"));
    }
    if let Some(ev) = explained {
        line.push_str(&format!(" explained_variance={ev:.4}"));
    }
    line
}

fn explained_first_two(model: &PcaModel) -> f64 {
    model.var_ratios.iter().take(2).sum()
}

fn run_hdr_cmd(cfg: &EffectiveConfig, sample: &FunctionalSample) -> Result<String, CliError> {
    let opts = HdrOptions {
        reduction: reduction_options(cfg),
        bandwidth: cfg.bandwidth_matrix()?,
        rule: Some(match cfg.n_outliers {
            Some(k) => OutlierRule::LowestK(k),
            None => OutlierRule::Quantile(cfg.outlier_alpha),
        }),
        snap_to_sample: cfg.snap_to_sample,
    };
    let run = run_hdr(sample, &opts)?;

    #[derive(Serialize)]
    struct HdrDetail<'a> {
        model: &'a PcaModel,
        hdr: &'a HdrResult,
        outlier_labels: Vec<&'a str>,
    }
    if let Some(path) = &cfg.json {
        report::write_json(
            path,
            &Report {
                schema_version: report::SCHEMA_VERSION,
                config: cfg,
                summary: Some(&run.summary),
                detail: HdrDetail {
                    model: &run.model,
                    hdr: &run.hdr,
                    outlier_labels: outlier_labels(sample, &run.summary),
                },
            },
        )?;
    }
    if let Some(path) = &cfg.score_svg {
        let classes = &run.summary.classes;
        let wide = convex_hull(&class_hulls(&run.cloud, |i| {
            classes[i] != CurveClass::Outlier
        }));
        let central = convex_hull(&class_hulls(&run.cloud, |i| {
            classes[i] == CurveClass::Central
        }));
        let spec = score_spec(cfg);
        let regions = vec![
            FilledRegion {
                polygon: wide,
                fill: spec.palette.outer.clone(),
                opacity: 0.6,
                label: format!("coverage {}", cfg.outlier_alpha),
            },
            FilledRegion {
                polygon: central,
                fill: spec.palette.central.clone(),
                opacity: 0.6,
                label: "coverage 0.5".into(),
            },
        ];
        let svg = render_cloud(&run.cloud, &regions, classes, Some((run.hdr.mode, "mode")), &spec)
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    write_common_outputs(cfg, sample, &run.summary)?;
    Ok(summary_line(
        cfg,
        sample,
        Some(run.summary.outlier_indices().len()),
        Some(explained_first_two(&run.model)),
    ))
}

fn run_bagplot_cmd(cfg: &EffectiveConfig, sample: &FunctionalSample) -> Result<String, CliError> {
    let opts = BagplotOptions {
        reduction: reduction_options(cfg),
        coef: cfg.coef,
        fence: cfg.fence_kind(),
        bootstrap: bootstrap_options(cfg),
    };
    let run = run_bagplot(sample, &opts)?;
    if run.multimodal_hint {
        eprintln!(
            "fundepth: warning: the score density looks multimodal; the bagplot assumes a unimodal cloud"
        );
    }

    #[derive(Serialize)]
    struct BagplotDetail<'a> {
        model: &'a PcaModel,
        bagplot: &'a Bagplot,
        multimodal_hint: bool,
        outlier_labels: Vec<&'a str>,
    }
    if let Some(path) = &cfg.json {
        report::write_json(
            path,
            &Report {
                schema_version: report::SCHEMA_VERSION,
                config: cfg,
                summary: Some(&run.summary),
                detail: BagplotDetail {
                    model: &run.model,
                    bagplot: &run.bagplot,
                    multimodal_hint: run.multimodal_hint,
                    outlier_labels: outlier_labels(sample, &run.summary),
                },
            },
        )?;
    }
    if let Some(path) = &cfg.score_svg {
        let classes = &run.summary.classes;
        let loop_hull = convex_hull(&class_hulls(&run.cloud, |i| {
            classes[i] != CurveClass::Outlier
        }));
        let spec = score_spec(cfg);
        let regions = vec![
            FilledRegion {
                polygon: loop_hull,
                fill: spec.palette.outer.clone(),
                opacity: 0.6,
                label: "loop".into(),
            },
            FilledRegion {
                polygon: run.bagplot.bag.clone(),
                fill: spec.palette.central.clone(),
                opacity: 0.6,
                label: "bag".into(),
            },
        ];
        let svg = render_cloud(
            &run.cloud,
            &regions,
            classes,
            Some((run.bagplot.median, "median")),
            &spec,
        )
        .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    write_common_outputs(cfg, sample, &run.summary)?;
    Ok(summary_line(
        cfg,
        sample,
        Some(run.summary.outlier_indices().len()),
        Some(explained_first_two(&run.model)),
    ))
}

fn run_fbplot_cmd(cfg: &EffectiveConfig, sample: &FunctionalSample) -> Result<String, CliError> {
    if cfg.score_svg.is_some() {
        return Err(CliError::Usage(
            "fbplot has no score space; --score-svg applies to hdr, bagplot and pca".into(),
        ));
    }
    let opts = BandDepthOptions {
        alpha: cfg.alpha,
        factor: cfg.factor,
        bootstrap: bootstrap_options(cfg),
    };
    let run = run_band_depth(sample, &opts)?;

    #[derive(Serialize)]
    struct FbplotDetail<'a> {
        depths: &'a BandDepthResult,
        boxplot: &'a fundepth_core::banddepth::FunctionalBoxplot,
        outlier_labels: Vec<&'a str>,
    }
    if let Some(path) = &cfg.json {
        report::write_json(
            path,
            &Report {
                schema_version: report::SCHEMA_VERSION,
                config: cfg,
                summary: Some(&run.summary),
                detail: FbplotDetail {
                    depths: &run.depths,
                    boxplot: &run.boxplot,
                    outlier_labels: outlier_labels(sample, &run.summary),
                },
            },
        )?;
    }
    write_common_outputs(cfg, sample, &run.summary)?;
    Ok(summary_line(
        cfg,
        sample,
        Some(run.summary.outlier_indices().len()),
        None,
    ))
}

fn run_pca_cmd(cfg: &EffectiveConfig, sample: &FunctionalSample) -> Result<String, CliError> {
    let model = if cfg.robust {
        let seed = cfg
            .seed
            .ok_or_else(|| CliError::Usage("--seed is required for --robust".into()))?;
        reduction::fit_robust_pca(sample, cfg.components, seed)
            .map_err(|e| CliError::Numeric(e.to_string()))?
    } else {
        reduction::fit_pca(sample, cfg.components).map_err(|e| CliError::Numeric(e.to_string()))?
    };
    let scores =
        reduction::scores_matrix(&model, sample).map_err(|e| CliError::Numeric(e.to_string()))?;

    #[derive(Serialize)]
    struct PcaDetail<'a> {
        model: &'a PcaModel,
        cumulative_explained: Vec<f64>,
    }
    if let Some(path) = &cfg.json {
        let mut cum = Vec::with_capacity(model.var_ratios.len());
        let mut acc = 0.0;
        for r in &model.var_ratios {
            acc += r;
            cum.push(acc);
        }
        report::write_json(
            path,
            &Report {
                schema_version: report::SCHEMA_VERSION,
                config: cfg,
                summary: None,
                detail: PcaDetail {
                    model: &model,
                    cumulative_explained: cum,
                },
            },
        )?;
    }
    if let Some(path) = &cfg.csv {
        report::write_text(path, &report::scores_csv(sample, &scores))?;
    }
    if let Some(path) = &cfg.score_svg {
        let cloud =
            reduction::project(&model, sample).map_err(|e| CliError::Numeric(e.to_string()))?;
        let classes = vec![CurveClass::Central; sample.n()];
        let svg = render_cloud(&cloud, &[], &classes, None, &score_spec(cfg))
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    if let Some(path) = &cfg.svg {
        let cloud =
            reduction::project(&model, sample).map_err(|e| CliError::Numeric(e.to_string()))?;
        let classes = vec![CurveClass::Central; sample.n()];
        let svg = render_cloud(&cloud, &[], &classes, None, &score_spec(cfg))
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    Ok(summary_line(
        cfg,
        sample,
        None,
        Some(model.var_ratios.iter().sum()),
    ))
}

fn run_depth_cmd(cfg: &EffectiveConfig, sample: &FunctionalSample) -> Result<String, CliError> {
    if cfg.score_svg.is_some() {
        return Err(CliError::Usage(
            "depth has no score space; --score-svg applies to hdr, bagplot and pca".into(),
        ));
    }
    let depths =
        fundepth_core::banddepth::bd2_all(sample).map_err(|e| CliError::Numeric(e.to_string()))?;
    let median = fundepth_core::banddepth::median_curve(sample, &depths);

    #[derive(Serialize)]
    struct DepthDetail<'a> {
        depths: &'a BandDepthResult,
        deepest_labels: Vec<&'a str>,
    }
    if let Some(path) = &cfg.json {
        report::write_json(
            path,
            &Report {
                schema_version: report::SCHEMA_VERSION,
                config: cfg,
                summary: None,
                detail: DepthDetail {
                    depths: &depths,
                    deepest_labels: depths
                        .deepest()
                        .into_iter()
                        .map(|i| sample.labels()[i].as_str())
                        .collect(),
                },
            },
        )?;
    }
    if let Some(path) = &cfg.csv {
        report::write_text(path, &report::depths_csv(sample, &depths))?;
    }
    if let Some(path) = &cfg.svg {
        let svg = render_curves(sample, Some(&median), &functional_spec(cfg))
            .map_err(|e| CliError::Numeric(e.to_string()))?;
        report::write_text(path, &svg)?;
    }
    let deepest = depths.ranking[0];
    Ok(format!(
        "{} deepest={}",
        summary_line(cfg, sample, None, None),
        sample.labels()[deepest]
    ))
}
