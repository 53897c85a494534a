//! Configuration resolution: command-line flags take precedence over an
//! optional TOML config file, which takes precedence over built-in
//! defaults. The resolved configuration is echoed into the JSON report.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use fundepth_core::density::Bandwidth;
use fundepth_core::halfspace::FenceKind;

use crate::CliError;

pub const DEFAULT_COMPONENTS: usize = 2;
pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_FACTOR: f64 = 1.5;
pub const DEFAULT_COEF: f64 = 3.0;
pub const DEFAULT_OUTLIER_ALPHA: f64 = 0.95;
pub const DEFAULT_BOOTSTRAP: usize = 500;
pub const DEFAULT_GAMMA: f64 = 0.05;
pub const DEFAULT_SVG_WIDTH: f64 = 900.0;
pub const DEFAULT_SVG_HEIGHT: f64 = 600.0;

/// Optional config file contents; every key mirrors a long flag.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub truncate: Option<usize>,
    pub components: Option<usize>,
    pub robust: Option<bool>,
    pub alpha: Option<f64>,
    pub factor: Option<f64>,
    pub coef: Option<f64>,
    pub fence: Option<String>,
    pub outlier_alpha: Option<f64>,
    pub n_outliers: Option<usize>,
    pub bootstrap: Option<usize>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub bandwidth: Option<Vec<f64>>,
    pub snap_to_sample: Option<bool>,
    pub svg: Option<PathBuf>,
    pub score_svg: Option<PathBuf>,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub threads: Option<usize>,
    pub svg_width: Option<f64>,
    pub svg_height: Option<f64>,
}

pub fn load_file_config(path: &PathBuf) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!(
        "cannot read config file {}: {e}",
        path.display()
    )))?;
    toml::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
}

/// Fully resolved run configuration, serialized into the report for
/// reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub method: String,
    pub input: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncate: Option<usize>,
    pub components: usize,
    pub robust: bool,
    pub alpha: f64,
    pub factor: f64,
    pub coef: f64,
    pub fence: String,
    pub outlier_alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_outliers: Option<usize>,
    pub bootstrap: usize,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<[f64; 3]>,
    pub snap_to_sample: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score_svg: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    pub svg_width: f64,
    pub svg_height: f64,
}

impl EffectiveConfig {
    pub fn fence_kind(&self) -> FenceKind {
        match self.fence.as_str() {
            "geometric" => FenceKind::Geometric,
            _ => FenceKind::Depth,
        }
    }

    pub fn bandwidth_matrix(&self) -> Result<Option<Bandwidth>, CliError> {
        match self.bandwidth {
            None => Ok(None),
            Some([h11, h12, h22]) => Bandwidth::new(h11, h12, h22)
                .map(Some)
                .map_err(|e| CliError::Numeric(e.to_string())),
        }
    }
}

/// Merge flags over the config file over defaults.
pub fn resolve(
    method: &str,
    args: &crate::MethodArgs,
    file: FileConfig,
) -> Result<EffectiveConfig, CliError> {
    let input = args
        .input
        .clone()
        .or(file.input)
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let bandwidth = match (&args.bandwidth, file.bandwidth) {
        (Some(text), _) => Some(parse_bandwidth_triple(text)?),
        (None, Some(v)) => {
            if v.len() != 3 {
                return Err(CliError::Usage(format!(
                    "config bandwidth needs 3 entries (h11, h12, h22), found {}",
                    v.len()
                )));
            }
            Some([v[0], v[1], v[2]])
        }
        (None, None) => None,
    };
    let fence = args
        .fence
        .clone()
        .or(file.fence)
        .unwrap_or_else(|| "depth".into());
    if fence != "depth" && fence != "geometric" {
        return Err(CliError::Usage(format!(
            "unknown fence rule `{fence}` (expected depth or geometric)"
        )));
    }
    let threads = args
        .threads
        .or(file.threads)
        .or_else(|| {
            std::env::var("FUNDEPTH_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .filter(|t| *t > 0);
    let cfg = EffectiveConfig {
        method: method.to_string(),
        input: input.display().to_string(),
        truncate: args.truncate.or(file.truncate),
        components: args
            .components
            .or(file.components)
            .unwrap_or(DEFAULT_COMPONENTS),
        robust: args.robust || file.robust.unwrap_or(false),
        alpha: args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
        factor: args.factor.or(file.factor).unwrap_or(DEFAULT_FACTOR),
        coef: args.coef.or(file.coef).unwrap_or(DEFAULT_COEF),
        fence,
        outlier_alpha: args
            .outlier_alpha
            .or(file.outlier_alpha)
            .unwrap_or(DEFAULT_OUTLIER_ALPHA),
        n_outliers: args.n_outliers.or(file.n_outliers),
        bootstrap: args.bootstrap.or(file.bootstrap).unwrap_or(DEFAULT_BOOTSTRAP),
        gamma: args.gamma.or(file.gamma).unwrap_or(DEFAULT_GAMMA),
        seed: args.seed.or(file.seed),
        bandwidth,
        snap_to_sample: args.snap_to_sample || file.snap_to_sample.unwrap_or(false),
        threads,
        svg: path_string(args.svg.clone().or(file.svg)),
        score_svg: path_string(args.score_svg.clone().or(file.score_svg)),
        json: path_string(args.json.clone().or(file.json)),
        csv: path_string(args.csv.clone().or(file.csv)),
        svg_width: args.svg_width.or(file.svg_width).unwrap_or(DEFAULT_SVG_WIDTH),
        svg_height: args
            .svg_height
            .or(file.svg_height)
            .unwrap_or(DEFAULT_SVG_HEIGHT),
    };

    let needs_seed = cfg.robust
        || matches!(method, "bagplot" | "fbplot");
    if needs_seed && cfg.seed.is_none() {
        return Err(CliError::Usage(format!(
            "--seed is required for {} (randomized path)",
            if cfg.robust && !matches!(method, "bagplot" | "fbplot") {
                "--robust"
            } else {
                method
            }
        )));
    }
    Ok(cfg)
}

fn parse_bandwidth_triple(text: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "--bandwidth expects h11,h12,h22, got `{text}`"
        )));
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .parse()
            .map_err(|_| CliError::Usage(format!("cannot parse bandwidth entry `{p}`")))?;
    }
    Ok(out)
}

fn path_string(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}
