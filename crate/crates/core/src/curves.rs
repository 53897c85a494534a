//! Curve ensembles on a shared time grid: ingestion, validation, truncation.
//!
//! The on-disk format is plain CSV text (UTF-8, `.` decimal separator,
//! `#` starts a comment line):
//!
//! ```text
//! # time grid, strictly increasing
//! 0,1,2
//! run-a,410.0,412.5,415.1
//! 409.8,411.9,414.6
//! ```
//!
//! The first data line is the time grid; every following line is one curve,
//! optionally prefixed with a label field. Unlabelled curves get generated
//! labels (`c0001`, `c0002`, ...). Any NaN or infinity is a hard error:
//! depth ranking and density estimation are undefined on missing data, so
//! nothing is imputed.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("{origin}: no data rows found")]
    EmptyFile { origin: String },
    #[error("{origin}:{line}: row has {found} fields, expected {expected} values with an optional leading label")]
    RowLengthMismatch {
        origin: String,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{origin}: grid is not strictly increasing at column {column}")]
    NonMonotoneGrid { origin: String, column: usize },
    #[error("{origin}:{line}: non-finite value at column {column}")]
    NonFiniteValue {
        origin: String,
        line: usize,
        column: usize,
    },
    #[error("{origin}:{line}: cannot parse `{token}` at column {column}")]
    InvalidNumber {
        origin: String,
        line: usize,
        column: usize,
        token: String,
    },
    #[error("{origin}:{line}: duplicate curve label `{label}`")]
    DuplicateLabel {
        origin: String,
        line: usize,
        label: String,
    },
    #[error("{origin}: grid must have at least 2 points, found {found}")]
    GridTooShort { origin: String, found: usize },
    #[error("expected {expected} labels, found {found}")]
    LabelCountMismatch { expected: usize, found: usize },
    #[error("truncation length {k} outside [2, {m}]")]
    KOutOfRange { k: usize, m: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Per-curve classification shared by all three analysis methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveClass {
    Central,
    Outer,
    Outlier,
}

impl fmt::Display for CurveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveClass::Central => write!(f, "central"),
            CurveClass::Outer => write!(f, "outer"),
            CurveClass::Outlier => write!(f, "outlier"),
        }
    }
}

/// `n` curves sampled on one shared, strictly increasing time grid of `m`
/// points. Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSample {
    grid: Vec<f64>,
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl FunctionalSample {
    /// Build a validated sample. `labels: None` auto-generates
    /// `c0001`, `c0002`, ...; explicit labels must be unique.
    pub fn new(
        grid: Vec<f64>,
        values: Vec<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self, CurveError> {
        let origin = "<memory>".to_string();
        if grid.len() < 2 {
            return Err(CurveError::GridTooShort {
                origin,
                found: grid.len(),
            });
        }
        if values.is_empty() {
            return Err(CurveError::EmptyFile { origin });
        }
        for (c, t) in grid.iter().enumerate() {
            if !t.is_finite() {
                return Err(CurveError::NonFiniteValue {
                    origin,
                    line: 1,
                    column: c + 1,
                });
            }
            if c > 0 && grid[c] <= grid[c - 1] {
                return Err(CurveError::NonMonotoneGrid {
                    origin,
                    column: c + 1,
                });
            }
        }
        let m = grid.len();
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(CurveError::RowLengthMismatch {
                    origin,
                    line: i + 2,
                    expected: m,
                    found: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(CurveError::NonFiniteValue {
                        origin,
                        line: i + 2,
                        column: c + 1,
                    });
                }
            }
        }
        let labels = match labels {
            Some(l) => {
                if l.len() != values.len() {
                    return Err(CurveError::LabelCountMismatch {
                        expected: values.len(),
                        found: l.len(),
                    });
                }
                l
            }
            None => (1..=values.len()).map(|i| format!("c{i:04}")).collect(),
        };
        check_unique(&labels, "<memory>", None)?;
        Ok(FunctionalSample {
            grid,
            values,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Pointwise mean curve.
    pub fn mean_curve(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut mean = vec![0.0; self.m()];
        for row in &self.values {
            for (acc, v) in mean.iter_mut().zip(row) {
                *acc += v;
            }
        }
        for v in &mut mean {
            *v /= n;
        }
        mean
    }

    /// Pointwise sample standard deviation (n-1 divisor); zeros when n < 2.
    pub fn pointwise_std(&self) -> Vec<f64> {
        let n = self.n();
        if n < 2 {
            return vec![0.0; self.m()];
        }
        let mean = self.mean_curve();
        let mut var = vec![0.0; self.m()];
        for row in &self.values {
            for ((acc, v), mu) in var.iter_mut().zip(row).zip(&mean) {
                let d = v - mu;
                *acc += d * d;
            }
        }
        var.iter().map(|v| (v / (n - 1) as f64).sqrt()).collect()
    }
}

fn check_unique(labels: &[String], origin: &str, lines: Option<&[usize]>) -> Result<(), CurveError> {
    let mut seen = std::collections::HashSet::new();
    for (i, l) in labels.iter().enumerate() {
        if !seen.insert(l.as_str()) {
            return Err(CurveError::DuplicateLabel {
                origin: origin.to_string(),
                line: lines.map(|ls| ls[i]).unwrap_or(i + 1),
                label: l.clone(),
            });
        }
    }
    Ok(())
}

/// Load and validate a curve ensemble from a CSV file.
pub fn load_curves<P: AsRef<Path>>(path: P) -> Result<FunctionalSample, CurveError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| CurveError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_curves(&text, &path.display().to_string())
}

/// Parse the CSV curve format from a string; `origin` names the source in
/// error messages (a path, or e.g. `<stdin>`).
pub fn parse_curves(text: &str, origin: &str) -> Result<FunctionalSample, CurveError> {
    let mut grid: Option<Vec<f64>> = None;
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut line_of_row: Vec<usize> = Vec::new();

    for (lineno0, raw) in text.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match grid {
            None => {
                let mut g = Vec::with_capacity(fields.len());
                for (c, tok) in fields.iter().enumerate() {
                    g.push(parse_value(tok, origin, lineno, c + 1)?);
                }
                if g.len() < 2 {
                    return Err(CurveError::GridTooShort {
                        origin: origin.to_string(),
                        found: g.len(),
                    });
                }
                for c in 1..g.len() {
                    if g[c] <= g[c - 1] {
                        return Err(CurveError::NonMonotoneGrid {
                            origin: origin.to_string(),
                            column: c + 1,
                        });
                    }
                }
                grid = Some(g);
            }
            Some(ref g) => {
                let m = g.len();
                let (label, value_fields, col0) = if fields.len() == m {
                    (None, &fields[..], 1)
                } else if fields.len() == m + 1 {
                    if fields[0].is_empty() {
                        return Err(CurveError::InvalidNumber {
                            origin: origin.to_string(),
                            line: lineno,
                            column: 1,
                            token: String::new(),
                        });
                    }
                    (Some(fields[0].to_string()), &fields[1..], 2)
                } else {
                    return Err(CurveError::RowLengthMismatch {
                        origin: origin.to_string(),
                        line: lineno,
                        expected: m,
                        found: fields.len(),
                    });
                };
                let mut row = Vec::with_capacity(m);
                for (c, tok) in value_fields.iter().enumerate() {
                    row.push(parse_value(tok, origin, lineno, c + col0)?);
                }
                values.push(row);
                labels.push(label);
                line_of_row.push(lineno);
            }
        }
    }

    let grid = grid.ok_or_else(|| CurveError::EmptyFile {
        origin: origin.to_string(),
    })?;
    if values.is_empty() {
        return Err(CurveError::EmptyFile {
            origin: origin.to_string(),
        });
    }
    let labels: Vec<String> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.unwrap_or_else(|| format!("c{:04}", i + 1)))
        .collect();
    check_unique(&labels, origin, Some(&line_of_row))?;
    Ok(FunctionalSample {
        grid,
        values,
        labels,
    })
}

fn parse_value(tok: &str, origin: &str, line: usize, column: usize) -> Result<f64, CurveError> {
    let v: f64 = tok.parse().map_err(|_| CurveError::InvalidNumber {
        origin: origin.to_string(),
        line,
        column,
        token: tok.to_string(),
    })?;
    if !v.is_finite() {
        return Err(CurveError::NonFiniteValue {
            origin: origin.to_string(),
            line,
            column,
        });
    }
    Ok(v)
}

/// Render a sample in the input CSV format with 17 significant digits,
/// enough to round-trip every f64 bit-exactly.
pub fn curves_to_string(sample: &FunctionalSample) -> String {
    let fmt_row = |row: &[f64]| -> String {
        row.iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut out = String::new();
    out.push_str(&fmt_row(sample.grid()));
    out.push('\n');
    for (label, row) in sample.labels().iter().zip(sample.values()) {
        out.push_str(label);
        out.push(',');
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out
}

/// Write a sample to disk; inverse of [`load_curves`] on valid samples.
pub fn write_curves<P: AsRef<Path>>(sample: &FunctionalSample, path: P) -> Result<(), CurveError> {
    let path = path.as_ref();
    fs::write(path, curves_to_string(sample)).map_err(|source| CurveError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Restrict a sample to its first `k` grid points. The input is unchanged.
pub fn truncate(sample: &FunctionalSample, k: usize) -> Result<FunctionalSample, CurveError> {
    let m = sample.m();
    if k < 2 || k > m {
        return Err(CurveError::KOutOfRange { k, m });
    }
    Ok(FunctionalSample {
        grid: sample.grid[..k].to_vec(),
        values: sample.values.iter().map(|row| row[..k].to_vec()).collect(),
        labels: sample.labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let s = parse_curves("0,1,2\n1,2,3\n4,5,6\n", "t").unwrap();
        assert_eq!(s.n(), 2);
        assert_eq!(s.m(), 3);
        assert_eq!(s.labels(), &["c0001".to_string(), "c0002".to_string()]);
    }

    #[test]
    fn parses_labels_and_comments() {
        let s = parse_curves("# grid\n0,1\nfirst, 1.5, 2.5\n2.5,3.5\n", "t").unwrap();
        assert_eq!(s.labels()[0], "first");
        assert_eq!(s.labels()[1], "c0002");
        assert_eq!(s.curve(0), &[1.5, 2.5]);
    }

    #[test]
    fn row_length_mismatch_names_line() {
        let err = parse_curves("0,1,2\n1,2,3\n4,5\n", "t").unwrap_err();
        match err {
            CurveError::RowLengthMismatch { line, expected, found, .. } => {
                assert_eq!(line, 3);
                assert_eq!(expected, 3);
                assert_eq!(found, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let err = parse_curves("0,2,1\n1,2,3\n", "t").unwrap_err();
        assert!(matches!(err, CurveError::NonMonotoneGrid { column: 3, .. }));
    }

    #[test]
    fn non_finite_value_rejected() {
        let err = parse_curves("0,1\na,1.0,inf\n", "t").unwrap_err();
        assert!(matches!(
            err,
            CurveError::NonFiniteValue { line: 2, column: 3, .. }
        ));
        let err = parse_curves("0,1\nNaN,1.0\n", "t").unwrap_err();
        assert!(matches!(err, CurveError::NonFiniteValue { line: 2, .. }));
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(
            parse_curves("", "t").unwrap_err(),
            CurveError::EmptyFile { .. }
        ));
        assert!(matches!(
            parse_curves("# only comments\n", "t").unwrap_err(),
            CurveError::EmptyFile { .. }
        ));
        // grid but no curves
        assert!(matches!(
            parse_curves("0,1,2\n", "t").unwrap_err(),
            CurveError::EmptyFile { .. }
        ));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let err = parse_curves("0,1\nx,1,2\nx,3,4\n", "t").unwrap_err();
        assert!(matches!(err, CurveError::DuplicateLabel { line: 3, .. }));
    }

    #[test]
    fn bad_token_names_position() {
        let err = parse_curves("0,1\nlabel,1.0,abc\n", "t").unwrap_err();
        match err {
            CurveError::InvalidNumber { line, column, token, .. } => {
                assert_eq!((line, column), (2, 3));
                assert_eq!(token, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncate_basics() {
        let s = parse_curves("0,1,2,3\n1,2,3,4\n", "t").unwrap();
        let t = truncate(&s, 2).unwrap();
        assert_eq!(t.m(), 2);
        assert_eq!(t.curve(0), &[1.0, 2.0]);
        assert_eq!(truncate(&s, 4).unwrap(), s);
        assert!(matches!(
            truncate(&s, 1).unwrap_err(),
            CurveError::KOutOfRange { k: 1, m: 4 }
        ));
        assert!(matches!(
            truncate(&s, 5).unwrap_err(),
            CurveError::KOutOfRange { k: 5, m: 4 }
        ));
    }

    #[test]
    fn truncate_composes() {
        let s = parse_curves("0,1,2,3,4\n5,6,7,8,9\n", "t").unwrap();
        let a = truncate(&truncate(&s, 4).unwrap(), 3).unwrap();
        let b = truncate(&s, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let s = parse_curves("0,0.1,0.2\nrun-1,1.0000000000000002,2.5,-3e-300\n4,5,6\n", "t")
            .unwrap();
        let text = curves_to_string(&s);
        let back = parse_curves(&text, "t").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn large_shape_parses() {
        let mut text = String::new();
        text.push_str(
            &(0..237)
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        text.push('\n');
        for i in 0..100 {
            let row: Vec<String> = (0..237).map(|j| format!("{}", (i * j) as f64 * 0.5)).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let s = parse_curves(&text, "t").unwrap();
        assert_eq!((s.n(), s.m()), (100, 237));
        let t = truncate(&s, 150).unwrap();
        assert_eq!(t.m(), 150);
    }
}
