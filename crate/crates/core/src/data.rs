//! Multi-view datasets: ingestion from a JSON manifest plus delimited-text
//! matrices, per-view normalization, and bias augmentation.
//!
//! A view is stored features × instances, so every view of a dataset has the
//! same number of columns.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `V` views over the same `N` instances, with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<DMatrix<f64>>,
    labels: Option<Vec<usize>>,
    names: Option<Vec<String>>,
}

impl MultiViewDataset {
    pub fn new(
        views: Vec<DMatrix<f64>>,
        labels: Option<Vec<usize>>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::InvalidDataset(
                "at least one view is required".into(),
            ));
        }
        let n = views[0].ncols();
        if n == 0 {
            return Err(Error::InvalidDataset("views have no instances".into()));
        }
        for (v, x) in views.iter().enumerate() {
            if x.nrows() == 0 {
                return Err(Error::InvalidDataset(format!("view {v} has no features")));
            }
            if x.ncols() != n {
                return Err(Error::InvalidDataset(format!(
                    "column count mismatch: view {v} has {} instances, view 0 has {n}",
                    x.ncols()
                )));
            }
            if x.iter().any(|e| !e.is_finite()) {
                return Err(Error::InvalidDataset(format!(
                    "view {v} contains NaN or Inf"
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "{} labels for {n} instances",
                    l.len()
                )));
            }
        }
        if let Some(nm) = &names {
            if nm.len() != views.len() {
                return Err(Error::InvalidDataset(format!(
                    "{} view names for {} views",
                    nm.len(),
                    views.len()
                )));
            }
        }
        Ok(Self {
            views,
            labels,
            names,
        })
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.views
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn num_instances(&self) -> usize {
        self.views[0].ncols()
    }

    /// Feature count `D_v` of every view.
    pub fn dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    pub fn with_labels(mut self, labels: Option<Vec<usize>>) -> Result<Self> {
        self.labels = labels;
        Self::new(self.views, self.labels, self.names)
    }
}

/// Views with a constant feature appended as the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedViews {
    z_views: Vec<DMatrix<f64>>,
}

impl AugmentedViews {
    /// Wrap pre-augmented matrices. The last row of each must be all ones.
    pub fn from_matrices(z_views: Vec<DMatrix<f64>>) -> Result<Self> {
        if z_views.is_empty() {
            return Err(Error::Shape("no views".into()));
        }
        let n = z_views[0].ncols();
        for (v, z) in z_views.iter().enumerate() {
            if z.ncols() != n || z.nrows() < 2 {
                return Err(Error::Shape(format!(
                    "augmented view {v} has shape {}x{}",
                    z.nrows(),
                    z.ncols()
                )));
            }
            if z.row(z.nrows() - 1).iter().any(|&e| e != 1.0) {
                return Err(Error::Shape(format!(
                    "augmented view {v} does not end in a constant row"
                )));
            }
        }
        Ok(Self { z_views })
    }

    pub fn views(&self) -> &[DMatrix<f64>] {
        &self.z_views
    }

    pub fn num_views(&self) -> usize {
        self.z_views.len()
    }

    pub fn num_instances(&self) -> usize {
        self.z_views[0].ncols()
    }

    /// Row count `D_v + 1` of every augmented view.
    pub fn dims(&self) -> Vec<usize> {
        self.z_views.iter().map(|z| z.nrows()).collect()
    }
}

/// Scale each view by a single scalar so that its squared entries sum to one.
pub fn normalize_views(d: &MultiViewDataset) -> Result<MultiViewDataset> {
    let mut views = Vec::with_capacity(d.num_views());
    for (v, x) in d.views().iter().enumerate() {
        let norm = x.norm();
        if norm == 0.0 {
            return Err(Error::DegenerateView { view: v });
        }
        views.push(x / norm);
    }
    Ok(MultiViewDataset {
        views,
        labels: d.labels.clone(),
        names: d.names.clone(),
    })
}

/// Append the constant feature to every view: `z_n = [x_n; 1]`.
pub fn augment(d: &MultiViewDataset) -> AugmentedViews {
    let z_views = d
        .views()
        .iter()
        .map(|x| {
            let dv = x.nrows();
            let mut z = x.clone().insert_row(dv, 1.0);
            z.row_mut(dv).fill(1.0);
            z
        })
        .collect();
    AugmentedViews { z_views }
}

/// On-disk description of a dataset. Paths are relative to the manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub views: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

/// Parse a delimited-text matrix: one row per line, fields separated by
/// commas and/or whitespace. Blank lines are skipped.
pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = read(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (j, tok) in fields(line).enumerate() {
            let value = tok.parse::<f64>().ok().filter(|x| x.is_finite());
            match value {
                Some(x) => row.push(x),
                None => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        field: j + 1,
                        token: tok.to_string(),
                    })
                }
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Ragged {
                    path: path.to_path_buf(),
                    line: i + 1,
                    expected: first.len(),
                    found: row.len(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyMatrix {
            path: path.to_path_buf(),
        });
    }
    let ncols = rows[0].len();
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.into_iter().flatten(),
    ))
}

/// One non-negative integer per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let label = tok.parse::<usize>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            field: 1,
            token: tok.to_string(),
        })?;
        labels.push(label);
    }
    Ok(labels)
}

pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<MultiViewDataset> {
    let manifest_path = manifest_path.as_ref();
    let manifest: Manifest =
        serde_json::from_str(&read(manifest_path)?).map_err(|e| Error::Manifest {
            path: manifest_path.to_path_buf(),
            message: e.to_string(),
        })?;
    if manifest.views.is_empty() {
        return Err(Error::Manifest {
            path: manifest_path.to_path_buf(),
            message: "no views listed".into(),
        });
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));

    let mut views = Vec::with_capacity(manifest.views.len());
    let mut n = None;
    for rel in &manifest.views {
        let path = resolve(base, rel);
        let x = read_matrix(&path)?;
        match n {
            None => n = Some(x.ncols()),
            Some(expected) if expected != x.ncols() => {
                return Err(Error::ColumnMismatch {
                    path,
                    expected,
                    found: x.ncols(),
                })
            }
            _ => {}
        }
        views.push(x);
    }

    let labels = match &manifest.labels {
        Some(rel) => {
            let path = resolve(base, rel);
            let labels = read_labels(&path)?;
            let expected = n.unwrap_or(0);
            if labels.len() != expected {
                return Err(Error::ColumnMismatch {
                    path,
                    expected,
                    found: labels.len(),
                });
            }
            Some(labels)
        }
        None => None,
    };

    MultiViewDataset::new(views, labels, manifest.names)
}

pub fn write_matrix(path: &Path, x: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for row in x.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write(path, &out)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 2);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    write(path, &out)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write every view as `view{v}.csv`, labels as `labels.csv`, and a
/// `manifest.json` tying them together. Returns the manifest path.
pub fn save_dataset(dir: &Path, d: &MultiViewDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut views = Vec::new();
    for (v, x) in d.views().iter().enumerate() {
        let name = format!("view{v}.csv");
        write_matrix(&dir.join(&name), x)?;
        views.push(name);
    }
    let labels = match d.labels() {
        Some(l) => {
            write_labels(&dir.join("labels.csv"), l)?;
            Some("labels.csv".to_string())
        }
        None => None,
    };
    let manifest = Manifest {
        views,
        labels,
        names: d.names().map(|n| n.to_vec()),
    };
    let path = dir.join("manifest.json");
    write(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn write_file(dir: &Path, name: &str, contents: &str) {
        fs::write(dir.join(name), contents).unwrap();
    }

    #[test]
    fn loads_two_views_without_labels() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2,3\n4,5,6\n");
        write_file(dir.path(), "b.csv", "1 0 1\n0 1 0\n");
        write_file(dir.path(), "m.json", r#"{"views": ["a.csv", "b.csv"]}"#);
        let d = load_dataset(dir.path().join("m.json")).unwrap();
        assert_eq!(d.num_views(), 2);
        assert_eq!(d.num_instances(), 3);
        assert_eq!(d.dims(), vec![2, 2]);
        assert!(d.labels().is_none());
        assert_eq!(d.views()[0], dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0]);
    }

    #[test]
    fn loads_labels_and_names() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2,3\n");
        write_file(dir.path(), "y.csv", "0\n1\n0\n");
        write_file(
            dir.path(),
            "m.json",
            r#"{"views": ["a.csv"], "labels": "y.csv", "names": ["text"]}"#,
        );
        let d = load_dataset(dir.path().join("m.json")).unwrap();
        assert_eq!(d.labels(), Some(&[0, 1, 0][..]));
        assert_eq!(d.names().unwrap(), ["text".to_string()]);
    }

    #[test]
    fn rejects_column_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2,3\n");
        write_file(dir.path(), "b.csv", "1,2,3,4\n");
        write_file(dir.path(), "m.json", r#"{"views": ["a.csv", "b.csv"]}"#);
        let err = load_dataset(dir.path().join("m.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("column count mismatch"), "{msg}");
        assert!(msg.contains("b.csv"), "{msg}");
    }

    #[test]
    fn rejects_ragged_rows_with_location() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2,3\n4,5\n");
        let err = read_matrix(&dir.path().join("a.csv")).unwrap_err();
        assert!(matches!(
            err,
            Error::Ragged {
                line: 2,
                expected: 3,
                found: 2,
                ..
            }
        ));
        assert!(err.to_string().contains("a.csv:2"));
    }

    #[test]
    fn rejects_non_numeric_token() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2\n3,abc\n");
        let err = read_matrix(&dir.path().join("a.csv")).unwrap_err();
        assert!(matches!(
            err,
            Error::Parse {
                line: 2,
                field: 2,
                ..
            }
        ));

        write_file(dir.path(), "b.csv", "1,nan\n");
        assert!(read_matrix(&dir.path().join("b.csv")).is_err());
    }

    #[test]
    fn rejects_missing_file() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "m.json", r#"{"views": ["nope.csv"]}"#);
        let err = load_dataset(dir.path().join("m.json")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("nope.csv"));
    }

    #[test]
    fn rejects_label_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_file(dir.path(), "a.csv", "1,2,3\n");
        write_file(dir.path(), "y.csv", "0\n1\n");
        write_file(
            dir.path(),
            "m.json",
            r#"{"views": ["a.csv"], "labels": "y.csv"}"#,
        );
        assert!(load_dataset(dir.path().join("m.json")).is_err());
    }

    #[test]
    fn normalize_three_four_five() {
        let d = MultiViewDataset::new(vec![dmatrix![3.0, 4.0]], None, None).unwrap();
        let n = normalize_views(&d).unwrap();
        assert!((n.views()[0][(0, 0)] - 0.6).abs() < 1e-15);
        assert!((n.views()[0][(0, 1)] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_each_view_independently() {
        let d = MultiViewDataset::new(
            vec![
                dmatrix![1.0, -2.0, 0.5; 7.0, 0.0, 3.0],
                dmatrix![100.0, 200.0, 300.0],
            ],
            None,
            None,
        )
        .unwrap();
        let n = normalize_views(&d).unwrap();
        for x in n.views() {
            let sum: f64 = x.iter().map(|e| e * e).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        // One scalar per view: ratios between entries survive.
        let ratio = n.views()[1][(0, 2)] / n.views()[1][(0, 0)];
        assert!((ratio - 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent() {
        let d = MultiViewDataset::new(vec![dmatrix![0.6, 0.8]], None, None).unwrap();
        let once = normalize_views(&d).unwrap();
        let twice = normalize_views(&once).unwrap();
        assert!((&once.views()[0] - &twice.views()[0]).amax() < 1e-12);
        assert!((&once.views()[0] - &d.views()[0]).amax() < 1e-12);
    }

    #[test]
    fn normalize_rejects_zero_view() {
        let d = MultiViewDataset::new(vec![DMatrix::zeros(2, 3)], None, None).unwrap();
        let err = normalize_views(&d).unwrap_err();
        assert!(err.to_string().contains("degenerate view"));
    }

    #[test]
    fn augment_appends_constant_row() {
        let d = MultiViewDataset::new(vec![dmatrix![2.0; 5.0]], None, None).unwrap();
        let z = augment(&d);
        assert_eq!(z.views()[0], dmatrix![2.0; 5.0; 1.0]);
    }

    #[test]
    fn empty_dataset_rejected() {
        assert!(MultiViewDataset::new(vec![DMatrix::zeros(2, 0)], None, None).is_err());
        assert!(MultiViewDataset::new(vec![], None, None).is_err());
        assert!(MultiViewDataset::new(vec![dmatrix![f64::NAN, 1.0]], None, None).is_err());
    }

    #[test]
    fn save_then_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let d = MultiViewDataset::new(
            vec![
                dmatrix![0.1, -2.5e-7, 3.0],
                dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0],
            ],
            Some(vec![0, 1, 0]),
            Some(vec!["a".into(), "b".into()]),
        )
        .unwrap();
        let path = save_dataset(dir.path(), &d).unwrap();
        assert_eq!(load_dataset(path).unwrap(), d);
    }
}
