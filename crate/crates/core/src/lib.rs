//! Depth-based analysis of curve ensembles.
//!
//! Given an ensemble of curves sampled on a shared time grid, this crate
//! ranks the curves by statistical depth, extracts a median/center curve,
//! central and non-outlier envelopes, and flags outlying transients. Three
//! method families are provided:
//!
//! * [`pipeline::run_hdr`] — reduce to a 2D principal-component score space,
//!   estimate a Gaussian kernel density and classify by highest-density
//!   regions;
//! * [`pipeline::run_bagplot`] — reduce to score space and build a bagplot
//!   from bivariate Tukey (halfspace) depth;
//! * [`pipeline::run_band_depth`] — rank curves directly by band depth and
//!   build a functional boxplot, no reduction step.
//!
//! Lower-level building blocks (PCA, Tukey depth and depth regions, KDE,
//! band depth, bootstrap confidence bands, SVG rendering) are exposed in
//! the individual modules.
//!
//! All entry points are pure functions of their inputs plus explicit seeds;
//! repeated runs produce identical results, including under internal
//! parallelism.

pub mod banddepth;
pub mod curves;
pub mod density;
pub mod geom;
pub mod halfspace;
pub mod pipeline;
pub mod reduction;
pub mod render;
pub mod synthetic;

pub use curves::{load_curves, truncate, write_curves, CurveClass, CurveError, FunctionalSample};
pub use reduction::{fit_pca, fit_robust_pca, project, reconstruct, PcaModel, PointCloud2D};
