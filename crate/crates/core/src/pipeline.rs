//! End-to-end runs: ingest, benchmark, search, refine and write outputs.
//!
//! A run writes into its output directory:
//!
//! - `report.json`: the manifest (minus the output directory), every
//!   solution with its frame and index values, and relative file names;
//! - `solution_NN_frame.csv`: the `p x d` frame, one row per variable;
//! - `solution_NN_coords.csv`: projected data and benchmark points, tagged
//!   by a `source` column;
//! - `solution_NN_data.svg` and `solution_NN_both.svg`: scatterplots of the
//!   data alone and of data plus benchmark.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::benchmark::{build_benchmark, BenchmarkSpec};
use crate::csvio::{self, fmt_f64};
use crate::error::{Error, Result};
use crate::frame::{
    default_row_norm_threshold, frame_rows, project, project_matrix, split_by_row_norm, DataMatrix,
    ProjectedSample, RowSplit, Source, Standardizer,
};
use crate::index::{refine_index, IndexConfig};
use crate::optimize::{run_search, RestartFailure, SearchConfig, SolutionProjection};
use crate::svg::{emit_svg, SvgStyle};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    pub benchmark: BenchmarkSpec,
    pub dim: usize,
    #[serde(default)]
    pub index: IndexConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub standardize: bool,
    pub out: PathBuf,
}

impl RunManifest {
    /// Reads a JSON manifest. Relative paths inside it are taken relative to
    /// the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: RunManifest =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.data = base.join(&m.data);
        m.out = base.join(&m.out);
        if let BenchmarkSpec::External { path } = &mut m.benchmark {
            *path = base.join(&*path);
        }
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.index.validate()?;
        self.search.validate()?;
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        Ok(())
    }
}

/// The manifest as recorded in a report. The output directory is left out so
/// that identical runs into different directories produce identical reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEcho {
    pub data: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    pub benchmark: BenchmarkSpec,
    pub dim: usize,
    pub index: IndexConfig,
    pub search: SearchConfig,
    pub standardize: bool,
}

impl From<&RunManifest> for ManifestEcho {
    fn from(m: &RunManifest) -> Self {
        ManifestEcho {
            data: m.data.clone(),
            label_column: m.label_column.clone(),
            benchmark: m.benchmark.clone(),
            dim: m.dim,
            index: m.index.clone(),
            search: m.search.clone(),
            standardize: m.standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFiles {
    pub frame: String,
    pub coordinates: String,
    pub plot_data: String,
    pub plot_both: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportedSolution {
    pub rank: usize,
    #[serde(flatten)]
    pub solution: SolutionProjection,
    pub files: SolutionFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub manifest: ManifestEcho,
    pub variables: Vec<String>,
    pub n_data: usize,
    pub n_benchmark: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    /// Every index value is zero: data and benchmark are indistinguishable.
    pub degenerate: bool,
    /// Some spatial median hit its iteration cap.
    pub median_nonconvergence: bool,
    pub solutions: Vec<ReportedSolution>,
    pub failures: Vec<RestartFailure>,
}

impl SolutionReport {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Reads the data file named by the manifest. A class-split column is held
/// as row labels when no other label column is named.
pub fn load_data(manifest: &RunManifest) -> Result<DataMatrix> {
    let label = match (&manifest.label_column, &manifest.benchmark) {
        (Some(l), _) => return csvio::ingest_csv(&manifest.data, Some(l)),
        (None, BenchmarkSpec::ClassSplit { column, .. }) => Some(column.as_str()),
        _ => None,
    };
    csvio::ingest_csv_with_optional_label(&manifest.data, label)
}

/// Executes `manifest` and writes its outputs. A run where every restart
/// failed writes its report and then returns an error.
pub fn run(manifest: &RunManifest) -> Result<SolutionReport> {
    manifest.validate()?;
    let x = load_data(manifest).map_err(|e| e.at_stage("ingest"))?;
    let (data, bench) = build_benchmark(&manifest.benchmark, &x).map_err(|e| e.at_stage("benchmark"))?;
    let (data, bench, standardizer) = if manifest.standardize {
        let s = Standardizer::fit(&x);
        let d = s.apply(&data).map_err(|e| e.at_stage("standardize"))?;
        let b = s.apply(&bench).map_err(|e| e.at_stage("standardize"))?;
        (d, b, Some(s))
    } else {
        (data, bench, None)
    };

    let result =
        run_search(&data, &bench, manifest.dim, &manifest.index, &manifest.search).map_err(|e| e.at_stage("search"))?;
    let mut solutions = result.solutions;
    for s in &mut solutions {
        s.refined_index = Some(refine_index(&s.frame, &data, &bench, &manifest.index).map_err(|e| e.at_stage("refine"))?);
    }

    let degenerate = !solutions.is_empty()
        && solutions.iter().all(|s| {
            s.search_index.value == 0.0 && s.refined_index.as_ref().is_none_or(|r| r.value == 0.0)
        });
    let median_nonconvergence = solutions.iter().any(|s| {
        !s.search_index.median_converged || s.refined_index.as_ref().is_some_and(|r| !r.median_converged)
    });

    fs::create_dir_all(&manifest.out).map_err(|e| Error::io(&manifest.out, e))?;
    let mut reported = Vec::with_capacity(solutions.len());
    for (rank, solution) in solutions.into_iter().enumerate() {
        let files = write_solution(&manifest.out, rank, &solution, &data, &bench).map_err(|e| e.at_stage("write"))?;
        reported.push(ReportedSolution { rank, solution, files });
    }

    let report = SolutionReport {
        manifest: ManifestEcho::from(manifest),
        variables: data.column_names().to_vec(),
        n_data: data.nrows(),
        n_benchmark: bench.nrows(),
        standardizer,
        degenerate,
        median_nonconvergence,
        solutions: reported,
        failures: result.failures,
    };
    write_json(&report, &manifest.out.join(REPORT_FILE)).map_err(|e| e.at_stage("write"))?;

    if report.solutions.is_empty() {
        let msg = report.failures.first().map_or("no restarts were run".to_string(), |f| f.message.clone());
        return Err(Error::InvalidData(format!("every restart failed: {msg}")).at_stage("search"));
    }
    Ok(report)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn axis_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("A{i}")).collect()
}

fn write_solution(
    out: &Path,
    rank: usize,
    solution: &SolutionProjection,
    data: &DataMatrix,
    bench: &DataMatrix,
) -> Result<SolutionFiles> {
    let stem = format!("solution_{rank:02}");
    let files = SolutionFiles {
        frame: format!("{stem}_frame.csv"),
        coordinates: format!("{stem}_coords.csv"),
        plot_data: format!("{stem}_data.svg"),
        plot_both: format!("{stem}_both.svg"),
    };
    let frame = &solution.frame;
    write_frame_csv(&out.join(&files.frame), frame.matrix(), data.column_names())?;

    let px = project(data, frame)?;
    let py = ProjectedSample {
        points: project_matrix(bench, frame.matrix())?,
        source: Source::Benchmark,
    };
    write_coords_csv(&out.join(&files.coordinates), &[(&px, data.row_labels()), (&py, bench.row_labels())], data.row_labels().is_some())?;

    let value = solution.refined_index.as_ref().unwrap_or(&solution.search_index).value;
    let style = SvgStyle {
        title: Some(format!("solution {rank}: index {value:.6}")),
        axis_labels: Some(axis_names(frame.d())),
    };
    write_text(&out.join(&files.plot_data), &emit_svg(&[&px], &style)?)?;
    write_text(&out.join(&files.plot_both), &emit_svg(&[&px, &py], &style)?)?;
    Ok(files)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_frame_csv(path: &Path, m: &nalgebra::DMatrix<f64>, variables: &[String]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["variable".to_string()];
    header.extend(axis_names(m.ncols()));
    w.write_record(&header)?;
    for (r, name) in variables.iter().enumerate() {
        let mut rec = vec![name.clone()];
        rec.extend(m.row(r).iter().map(|&v| fmt_f64(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_coords_csv(path: &Path, parts: &[(&ProjectedSample, Option<&[String]>)], with_labels: bool) -> Result<()> {
    let d = parts.first().map_or(0, |(s, _)| s.points.dim());
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["source".to_string()];
    if with_labels {
        header.push("label".to_string());
    }
    header.extend(axis_names(d));
    w.write_record(&header)?;
    for (sample, labels) in parts {
        for (i, p) in sample.points.iter().enumerate() {
            let mut rec = vec![sample.source.as_str().to_string()];
            if with_labels {
                rec.push(labels.map_or(String::new(), |l| l[i].clone()));
            }
            rec.extend(p.iter().map(|&v| fmt_f64(v)));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One side of a row-norm split: the variables involved, the corresponding
/// rows of the frame and the data projected through them.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPart {
    pub variables: Vec<String>,
    pub sub_frame: nalgebra::DMatrix<f64>,
    pub projection: ProjectedSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitProjection {
    pub solution_id: usize,
    pub threshold: f64,
    pub rows: RowSplit,
    /// `None` when no frame row falls on that side of the threshold.
    pub high: Option<SplitPart>,
    pub low: Option<SplitPart>,
}

/// Splits the frame of solution `solution_id` by row norm (default threshold
/// `sqrt(d/p)`) and projects the matching variable subsets of `data`.
pub fn split_and_project(
    report: &SolutionReport,
    solution_id: usize,
    data: &DataMatrix,
    threshold: Option<f64>,
) -> Result<SplitProjection> {
    let sol = report.solutions.get(solution_id).ok_or(Error::IndexOutOfRange {
        index: solution_id,
        len: report.solutions.len(),
    })?;
    let frame = &sol.solution.frame;
    if data.ncols() != frame.p() {
        return Err(Error::DimensionMismatch {
            context: "split data columns",
            expected: frame.p(),
            found: data.ncols(),
        });
    }
    let threshold = threshold.unwrap_or_else(|| default_row_norm_threshold(frame.p(), frame.d()));
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::InvalidConfig(format!("row-norm threshold must be finite and >= 0, got {threshold}")));
    }
    let rows = split_by_row_norm(frame, threshold);
    let part = |idx: &[usize]| -> Result<Option<SplitPart>> {
        if idx.is_empty() {
            return Ok(None);
        }
        let sub_frame = frame_rows(frame, idx)?;
        let sub_data = data.select_columns(idx)?;
        Ok(Some(SplitPart {
            variables: sub_data.column_names().to_vec(),
            projection: ProjectedSample {
                points: project_matrix(&sub_data, &sub_frame)?,
                source: Source::Data,
            },
            sub_frame,
        }))
    };
    Ok(SplitProjection {
        solution_id,
        threshold,
        high: part(&rows.high)?,
        low: part(&rows.low)?,
        rows,
    })
}

#[derive(Serialize)]
struct SplitSummary<'a> {
    solution_id: usize,
    threshold: f64,
    high_variables: &'a [String],
    low_variables: &'a [String],
    files: Vec<String>,
}

/// Writes sub-frames, coordinates and plots of a split into `out`. Returns
/// the written file names.
pub fn write_split(split: &SplitProjection, data: &DataMatrix, out: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut files = Vec::new();
    for (tag, part) in [("high", &split.high), ("low", &split.low)] {
        let Some(part) = part else { continue };
        let stem = format!("split_{:02}_{tag}", split.solution_id);
        let frame_file = format!("{stem}_frame.csv");
        write_frame_csv(&out.join(&frame_file), &part.sub_frame, &part.variables)?;
        let coords_file = format!("{stem}_coords.csv");
        write_coords_csv(&out.join(&coords_file), &[(&part.projection, data.row_labels())], data.row_labels().is_some())?;
        files.extend([frame_file, coords_file]);
        let d = part.projection.points.dim();
        if d == 2 || d == 3 {
            let plot = format!("{stem}.svg");
            let style = SvgStyle {
                title: Some(format!("solution {}: {tag} row-norm variables ({})", split.solution_id, part.variables.len())),
                axis_labels: Some(axis_names(d)),
            };
            write_text(&out.join(&plot), &emit_svg(&[&part.projection], &style)?)?;
            files.push(plot);
        }
    }
    let empty: &[String] = &[];
    let summary = SplitSummary {
        solution_id: split.solution_id,
        threshold: split.threshold,
        high_variables: split.high.as_ref().map_or(empty, |p| &p.variables),
        low_variables: split.low.as_ref().map_or(empty, |p| &p.variables),
        files: files.clone(),
    };
    let name = format!("split_{:02}.json", split.solution_id);
    write_json(&summary, &out.join(&name))?;
    files.push(name);
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowSelection {
    Labels(Vec<String>),
    /// 0-based row indices.
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Keep,
    Remove,
}

impl std::str::FromStr for FilterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep" => Ok(FilterMode::Keep),
            "remove" => Ok(FilterMode::Remove),
            _ => Err(Error::InvalidConfig(format!("unknown filter mode `{s}` (keep|remove)"))),
        }
    }
}

/// Keeps or removes the selected rows. Labels must all occur in the data.
pub fn filter_rows(data: &DataMatrix, selection: &RowSelection, mode: FilterMode) -> Result<DataMatrix> {
    let n = data.nrows();
    let mut selected = vec![false; n];
    match selection {
        RowSelection::Labels(wanted) => {
            if wanted.is_empty() {
                return Err(Error::EmptySelection);
            }
            let labels = data
                .row_labels()
                .ok_or_else(|| Error::InvalidData("data has no label column to filter on".into()))?;
            for w in wanted {
                let mut found = false;
                for (i, l) in labels.iter().enumerate() {
                    if l == w {
                        selected[i] = true;
                        found = true;
                    }
                }
                if !found {
                    return Err(Error::UnknownLabel(w.clone()));
                }
            }
        }
        RowSelection::Indices(idx) => {
            if idx.is_empty() {
                return Err(Error::EmptySelection);
            }
            for &i in idx {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                selected[i] = true;
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| selected[i] == (mode == FilterMode::Keep)).collect();
    if keep.is_empty() {
        return Err(Error::EmptyResult);
    }
    data.select_rows(&keep)
}

/// Reads 1-based row numbers separated by whitespace or commas.
pub fn read_index_file(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        for (col, tok) in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).enumerate() {
            let v: usize = tok.parse().map_err(|_| Error::Parse {
                row: line_no + 1,
                column: col + 1,
                message: format!("`{tok}` is not a row number"),
            })?;
            if v == 0 {
                return Err(Error::Parse {
                    row: line_no + 1,
                    column: col + 1,
                    message: "row numbers start at 1".into(),
                });
            }
            out.push(v - 1);
        }
    }
    Ok(out)
}

/// Writes `data` as CSV to `path`, creating parent directories.
pub fn write_dataset(data: &DataMatrix, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut buf = Vec::new();
    csvio::write_csv(data, &mut buf)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled() -> DataMatrix {
        DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]])
            .unwrap()
            .with_labels("region", vec!["a".into(), "b".into(), "a".into()])
            .unwrap()
    }

    #[test]
    fn filter_remove_and_keep() {
        let x = labelled();
        let sel = RowSelection::Labels(vec!["a".into()]);
        let r = filter_rows(&x, &sel, FilterMode::Remove).unwrap();
        assert_eq!(r.nrows(), 1);
        assert_eq!(r.row(0), vec![3.0, 4.0]);
        let k = filter_rows(&x, &sel, FilterMode::Keep).unwrap();
        assert_eq!(k.nrows(), 2);
    }

    #[test]
    fn keep_all_labels_is_identity() {
        let x = labelled();
        let sel = RowSelection::Labels(vec!["a".into(), "b".into()]);
        assert_eq!(filter_rows(&x, &sel, FilterMode::Keep).unwrap(), x);
        assert!(matches!(filter_rows(&x, &sel, FilterMode::Remove), Err(Error::EmptyResult)));
    }

    #[test]
    fn unknown_label_is_reported() {
        let sel = RowSelection::Labels(vec!["z".into()]);
        assert!(matches!(filter_rows(&labelled(), &sel, FilterMode::Remove), Err(Error::UnknownLabel(l)) if l == "z"));
    }

    #[test]
    fn index_selection() {
        let x = labelled();
        let r = filter_rows(&x, &RowSelection::Indices(vec![0, 2]), FilterMode::Remove).unwrap();
        assert_eq!(r.row_labels().unwrap(), &["b".to_string()]);
        assert!(matches!(
            filter_rows(&x, &RowSelection::Indices(vec![3]), FilterMode::Keep),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn index_file_is_one_based() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rows.txt");
        fs::write(&p, "1, 3\n2\n").unwrap();
        assert_eq!(read_index_file(&p).unwrap(), vec![0, 2, 1]);
        fs::write(&p, "0\n").unwrap();
        assert!(matches!(read_index_file(&p), Err(Error::Parse { row: 1, column: 1, .. })));
    }
}
