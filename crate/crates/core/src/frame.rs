//! Datasets, projection frames and the linear algebra that connects them.
//!
//! A [`ProjectionFrame`] is a `p x d` matrix with orthonormal columns. Frames
//! are kept in a canonical form (first clearly nonzero entry of each column
//! positive) so that the same column space built the same way always yields
//! the same bits.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|<a_i, a_j> - delta_ij|` for a matrix to count as a frame.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative residual below which a column is considered dependent on its predecessors.
const RANK_TOL: f64 = 1e-10;

/// Entries of a unit column smaller than this are skipped when picking the sign.
const SIGN_EPS: f64 = 1e-12;

/// An `n x p` table of finite observations with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Vec<String>,
    label_name: Option<String>,
    row_labels: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let (n, p) = values.shape();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!("matrix must be non-empty, got {n}x{p}")));
        }
        if column_names.len() != p {
            return Err(Error::DimensionMismatch {
                context: "column names",
                expected: p,
                found: column_names.len(),
            });
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(Error::InvalidData(format!("duplicate column name `{name}`")));
            }
        }
        for c in 0..p {
            for r in 0..n {
                if !values[(r, c)].is_finite() {
                    return Err(Error::NonFiniteValue { row: r, column: c });
                }
            }
        }
        Ok(DataMatrix {
            values,
            column_names,
            label_name: None,
            row_labels: None,
        })
    }

    /// Builds a matrix from row slices, naming columns `x1..xp`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                context: "row length",
                expected: p,
                found: bad.len(),
            });
        }
        let values = DMatrix::from_fn(n, p, |r, c| rows[r][c]);
        Self::new(values, default_column_names(p))
    }

    pub fn with_labels(mut self, label_name: impl Into<String>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.nrows() {
            return Err(Error::DimensionMismatch {
                context: "row labels",
                expected: self.nrows(),
                found: labels.len(),
            });
        }
        self.label_name = Some(label_name.into());
        self.row_labels = Some(labels);
        Ok(self)
    }

    pub fn without_labels(mut self) -> Self {
        self.label_name = None;
        self.row_labels = None;
        self
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Selects observations, keeping labels aligned. Indices are deduplicated
    /// and emitted in their original order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let rows = normalize_selection(rows, self.nrows())?;
        let values = DMatrix::from_fn(rows.len(), self.ncols(), |r, c| self.values[(rows[r], c)]);
        let row_labels = self
            .row_labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r].clone()).collect());
        Ok(DataMatrix {
            values,
            column_names: self.column_names.clone(),
            label_name: self.label_name.clone(),
            row_labels,
        })
    }

    /// Selects variables.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        let cols = normalize_selection(cols, self.ncols())?;
        let values = DMatrix::from_fn(self.nrows(), cols.len(), |r, c| self.values[(r, cols[c])]);
        Ok(DataMatrix {
            values,
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            label_name: self.label_name.clone(),
            row_labels: self.row_labels.clone(),
        })
    }
}

pub fn default_column_names(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("x{i}")).collect()
}

fn normalize_selection(idx: &[usize], len: usize) -> Result<Vec<usize>> {
    if idx.is_empty() {
        return Err(Error::EmptySelection);
    }
    if let Some(&bad) = idx.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    let mut out = idx.to_vec();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Row subset of a dataset (observations).
pub fn subset_rows(data: &DataMatrix, rows: &[usize]) -> Result<DataMatrix> {
    data.select_rows(rows)
}

/// A `p x d` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameRepr", into = "FrameRepr")]
pub struct ProjectionFrame {
    matrix: DMatrix<f64>,
}

impl ProjectionFrame {
    /// Wraps a matrix that already satisfies the orthonormality invariant.
    pub fn from_orthonormal(matrix: DMatrix<f64>) -> Result<Self> {
        let (p, d) = matrix.shape();
        if d == 0 || d > p {
            return Err(Error::InvalidConfig(format!(
                "frame must have 1 <= d <= p, got p={p}, d={d}"
            )));
        }
        let err = orthonormality_error(&matrix);
        if err.is_nan() || err > ORTHONORMAL_TOL {
            return Err(Error::InvalidData(format!(
                "frame columns are not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(ProjectionFrame { matrix })
    }

    /// The first `d` coordinate axes of `R^p`.
    pub fn leading_axes(p: usize, d: usize) -> Result<Self> {
        Self::from_orthonormal(DMatrix::identity(p, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn d(&self) -> usize {
        self.matrix.ncols()
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.p())
            .map(|r| self.matrix.row(r).iter().copied().collect())
            .collect()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.p()).map(|r| self.matrix.row(r).norm()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct FrameRepr {
    p: usize,
    d: usize,
    rows: Vec<Vec<f64>>,
}

impl From<ProjectionFrame> for FrameRepr {
    fn from(f: ProjectionFrame) -> Self {
        FrameRepr {
            p: f.p(),
            d: f.d(),
            rows: f.to_rows(),
        }
    }
}

impl TryFrom<FrameRepr> for ProjectionFrame {
    type Error = Error;

    fn try_from(r: FrameRepr) -> Result<Self> {
        if r.rows.len() != r.p || r.rows.iter().any(|row| row.len() != r.d) {
            return Err(Error::InvalidData("frame rows do not match declared shape".into()));
        }
        ProjectionFrame::from_orthonormal(DMatrix::from_fn(r.p, r.d, |i, j| r.rows[i][j]))
    }
}

/// `max_ij |(A^T A - I)_ij|`.
pub fn orthonormality_error(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

fn leading_sign(col: impl Iterator<Item = f64>) -> f64 {
    for x in col {
        if x.abs() > SIGN_EPS {
            return x.signum();
        }
    }
    1.0
}

fn is_canonical_frame(m: &DMatrix<f64>) -> bool {
    orthonormality_error(m) <= ORTHONORMAL_TOL
        && m.column_iter().all(|c| leading_sign(c.iter().copied()) > 0.0)
}

/// Orthonormalizes the columns of `raw` by modified Gram-Schmidt with one
/// reorthogonalization pass, then flips each column so that its first clearly
/// nonzero entry is positive. Canonical frames are returned unchanged.
pub fn orthonormalize(raw: &DMatrix<f64>) -> Result<ProjectionFrame> {
    let (p, d) = raw.shape();
    if d == 0 || d > p {
        return Err(Error::InvalidConfig(format!(
            "frame must have 1 <= d <= p, got p={p}, d={d}"
        )));
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidData("non-finite entry in frame".into()));
    }
    if is_canonical_frame(raw) {
        return Ok(ProjectionFrame { matrix: raw.clone() });
    }

    let mut q = DMatrix::<f64>::zeros(p, d);
    for j in 0..d {
        let mut v: Vec<f64> = raw.column(j).iter().copied().collect();
        let norm0 = l2(&v);
        if norm0 == 0.0 {
            return Err(Error::RankDeficient { column: j });
        }
        for _pass in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let dot: f64 = qi.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vk, qk) in v.iter_mut().zip(qi.iter()) {
                    *vk -= dot * qk;
                }
            }
        }
        let nv = l2(&v);
        if nv <= RANK_TOL * norm0 {
            return Err(Error::RankDeficient { column: j });
        }
        let s = leading_sign(v.iter().copied()) / nv;
        for (k, vk) in v.iter().enumerate() {
            q[(k, j)] = vk * s;
        }
    }
    Ok(ProjectionFrame { matrix: q })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new(coords: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0, "point dimension must be positive");
        assert_eq!(coords.len() % dim, 0, "coordinate buffer is not a multiple of dim");
        PointSet { coords, dim }
    }

    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(1, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            assert_eq!(p.len(), dim, "ragged point set");
            coords.extend_from_slice(p);
        }
        PointSet::new(coords, dim)
    }

    pub fn empty(dim: usize) -> Self {
        PointSet::new(Vec::new(), dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Concatenation of two sets of the same dimension.
    pub fn pooled(a: &PointSet, b: &PointSet) -> PointSet {
        assert_eq!(a.dim, b.dim);
        let mut coords = Vec::with_capacity(a.coords.len() + b.coords.len());
        coords.extend_from_slice(&a.coords);
        coords.extend_from_slice(&b.coords);
        PointSet::new(coords, a.dim)
    }

    /// Same points, rows sorted lexicographically by `f64::total_cmp`.
    pub fn sorted(&self) -> PointSet {
        let mut rows: Vec<&[f64]> = self.iter().collect();
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        PointSet::new(rows.concat(), self.dim)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Data,
    Benchmark,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Data => "data",
            Source::Benchmark => "benchmark",
        }
    }
}

/// A projected point cloud together with where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedSample {
    pub points: PointSet,
    pub source: Source,
}

/// `X A` for any conformable `p x d` matrix (frames or row sub-frames).
pub fn project_matrix(data: &DataMatrix, a: &DMatrix<f64>) -> Result<PointSet> {
    if data.ncols() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "project",
            expected: a.nrows(),
            found: data.ncols(),
        });
    }
    let prod = data.values() * a;
    let (n, d) = prod.shape();
    let mut coords = Vec::with_capacity(n * d);
    for r in 0..n {
        coords.extend(prod.row(r).iter().copied());
    }
    Ok(PointSet::new(coords, d))
}

pub fn project(data: &DataMatrix, frame: &ProjectionFrame) -> Result<ProjectedSample> {
    Ok(ProjectedSample {
        points: project_matrix(data, frame.matrix())?,
        source: Source::Data,
    })
}

/// Partition of frame rows (ambient axes) by Euclidean row norm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSplit {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

/// Expected row norm of a `p x d` frame with entries of magnitude `1/sqrt(p)`.
pub fn default_row_norm_threshold(p: usize, d: usize) -> f64 {
    (d as f64 / p as f64).sqrt()
}

/// Rows with norm `>= threshold` go to `high`, the rest to `low`.
pub fn split_by_row_norm(frame: &ProjectionFrame, threshold: f64) -> RowSplit {
    let mut split = RowSplit {
        low: Vec::new(),
        high: Vec::new(),
    };
    for (i, norm) in frame.row_norms().into_iter().enumerate() {
        if norm >= threshold {
            split.high.push(i);
        } else {
            split.low.push(i);
        }
    }
    split
}

/// The rows of a frame matrix selected by `rows`, in original order. The
/// result is generally not orthonormal and is not re-orthonormalized.
pub fn frame_rows(frame: &ProjectionFrame, rows: &[usize]) -> Result<DMatrix<f64>> {
    let rows = normalize_selection(rows, frame.p())?;
    Ok(DMatrix::from_fn(rows.len(), frame.d(), |r, c| frame.matrix()[(rows[r], c)]))
}

/// Per-column affine standardization `(x - mean) / sd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and sample standard deviations. Constant columns get
    /// scale 1 so they are only centered.
    pub fn fit(data: &DataMatrix) -> Self {
        let n = data.nrows();
        let mut means = Vec::with_capacity(data.ncols());
        let mut scales = Vec::with_capacity(data.ncols());
        for col in data.values().column_iter() {
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            let sd = var.sqrt();
            means.push(mean);
            scales.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Standardizer { means, scales }
    }

    pub fn apply(&self, data: &DataMatrix) -> Result<DataMatrix> {
        if data.ncols() != self.means.len() {
            return Err(Error::DimensionMismatch {
                context: "standardize",
                expected: self.means.len(),
                found: data.ncols(),
            });
        }
        let mut out = data.clone();
        for (c, mut col) in out.values.column_iter_mut().enumerate() {
            for x in col.iter_mut() {
                *x = (*x - self.means[c]) / self.scales[c];
            }
        }
        Ok(out)
    }
}
