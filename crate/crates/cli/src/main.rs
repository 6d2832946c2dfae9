use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sdfpp_core::benchmark::{build_benchmark, lcg_triplets, BenchmarkSpec, LcgGenerator};
use sdfpp_core::error::{Error, ErrorClass, Result};
use sdfpp_core::index::IndexConfig;
use sdfpp_core::optimize::{OptimizerKind, SearchConfig};
use sdfpp_core::pipeline::{
    self, filter_rows, read_index_file, split_and_project, write_dataset, write_split, FilterMode, RowSelection,
    RunManifest, SolutionReport, REPORT_FILE,
};

#[derive(Parser)]
#[command(name = "sdfpp", version, about = "Benchmark-guided projection pursuit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for projections that separate the data from a benchmark.
    Run(RunArgs),
    /// Split a solution frame by row norm and project each variable subset.
    Split(SplitArgs),
    /// Keep or remove rows by label or row number.
    Filter(FilterArgs),
    /// Write linear congruential generator output as a 3-column CSV.
    Lcg(LcgArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON manifest; the flags below override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// file:PATH | permute:SEED | class:COL=LEVEL | lcg:NAME,SEED[,N]
    #[arg(long)]
    benchmark: Option<BenchmarkSpec>,
    #[arg(long)]
    dim: Option<usize>,
    /// Radius multiplier of the integration region.
    #[arg(long)]
    k: Option<f64>,
    /// QMC nodes during the search.
    #[arg(long)]
    qmc_points: Option<usize>,
    /// QMC nodes for the refined index of each solution.
    #[arg(long)]
    qmc_refine: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// anneal | geodesic
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    /// A run's output directory or its report.json.
    #[arg(long)]
    report: PathBuf,
    /// Rank of the solution in the report.
    #[arg(long, default_value_t = 0)]
    solution: usize,
    /// Data to project; defaults to the data of the run.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<String>,
    /// Row-norm threshold; defaults to sqrt(d/p).
    #[arg(long)]
    threshold: Option<f64>,
    /// Output directory; defaults to the report's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    label_column: Option<String>,
    /// Labels to select, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "index_file", required_unless_present = "index_file")]
    labels: Vec<String>,
    /// File of 1-based row numbers to select.
    #[arg(long)]
    index_file: Option<PathBuf>,
    /// keep | remove
    #[arg(long, default_value = "remove")]
    mode: FilterMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LcgArgs {
    /// randu | minstd
    #[arg(long)]
    generator: LcgGenerator,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of triplets.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Split(a) => cmd_split(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Lcg(a) => cmd_lcg(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}

fn exit_code(class: ErrorClass) -> ExitCode {
    ExitCode::from(match class {
        ErrorClass::Config => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    })
}

fn missing(flag: &str) -> Error {
    Error::InvalidConfig(format!("--{flag} is required without --manifest"))
}

fn build_manifest(a: RunArgs) -> Result<RunManifest> {
    let mut m = match &a.manifest {
        Some(path) => RunManifest::load(path)?,
        None => RunManifest {
            data: a.data.clone().ok_or_else(|| missing("data"))?,
            label_column: None,
            benchmark: a.benchmark.clone().ok_or_else(|| missing("benchmark"))?,
            dim: a.dim.ok_or_else(|| missing("dim"))?,
            index: IndexConfig::default(),
            search: SearchConfig::default(),
            standardize: false,
            out: a.out.clone().ok_or_else(|| missing("out"))?,
        },
    };
    if let Some(v) = a.data {
        m.data = v;
    }
    if let Some(v) = a.label_column {
        m.label_column = Some(v);
    }
    if let Some(v) = a.benchmark {
        m.benchmark = v;
    }
    if let Some(v) = a.dim {
        m.dim = v;
    }
    if let Some(v) = a.k {
        m.index.k = v;
    }
    if let Some(v) = a.qmc_points {
        m.index.n_nodes = v;
    }
    if let Some(v) = a.qmc_refine {
        m.index.n_nodes_refine = v;
    }
    if let Some(v) = a.restarts {
        m.search.restarts = v;
    }
    if let Some(v) = a.iterations {
        m.search.max_iterations = v;
    }
    if let Some(v) = a.optimizer {
        m.search.optimizer = v;
    }
    if let Some(v) = a.seed {
        m.search.rng_seed = v;
    }
    if let Some(v) = a.standardize {
        m.standardize = v;
    }
    if let Some(v) = a.out {
        m.out = v;
    }
    Ok(m)
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let manifest = build_manifest(a)?;
    let report = pipeline::run(&manifest)?;
    println!(
        "{} solutions ({} failed restarts) written to {}",
        report.solutions.len(),
        report.failures.len(),
        manifest.out.display()
    );
    for s in &report.solutions {
        let refined = s.solution.refined_index.as_ref().map_or(f64::NAN, |r| r.value);
        let dup = s.solution.duplicate_of.map_or(String::new(), |j| format!("  (duplicate of {j})"));
        println!(
            "  #{:<2} restart {:<3} search {:.6}  refined {:.6}{dup}",
            s.rank, s.solution.restart_id, s.solution.search_index.value, refined
        );
    }
    if report.degenerate {
        println!("warning: every index is zero; data and benchmark are indistinguishable");
    }
    if report.median_nonconvergence {
        eprintln!("error: a spatial median did not converge; outputs were written but are unreliable");
        return Ok(exit_code(ErrorClass::Numerical));
    }
    Ok(ExitCode::SUCCESS)
}

fn report_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(REPORT_FILE)
    } else {
        p.to_path_buf()
    }
}

fn cmd_split(a: SplitArgs) -> Result<ExitCode> {
    let path = report_path(&a.report);
    let report = SolutionReport::load(&path)?;
    let data = match &a.data {
        Some(p) => sdfpp_core::csvio::ingest_csv(p, a.label_column.as_deref())?,
        None => {
            let echo = &report.manifest;
            let m = RunManifest {
                data: echo.data.clone(),
                label_column: echo.label_column.clone(),
                benchmark: echo.benchmark.clone(),
                dim: echo.dim,
                index: echo.index.clone(),
                search: echo.search.clone(),
                standardize: echo.standardize,
                out: PathBuf::new(),
            };
            let x = pipeline::load_data(&m)?;
            build_benchmark(&m.benchmark, &x)?.0
        }
    };
    let data = match &report.standardizer {
        Some(s) => s.apply(&data)?,
        None => data,
    };
    let split = split_and_project(&report, a.solution, &data, a.threshold)?;
    let out = a.out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
    let files = write_split(&split, &data, &out)?;
    println!(
        "threshold {:.6}: {} high-norm and {} low-norm variables",
        split.threshold,
        split.rows.high.len(),
        split.rows.low.len()
    );
    for f in files {
        println!("  {}", out.join(f).display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_filter(a: FilterArgs) -> Result<ExitCode> {
    let data = sdfpp_core::csvio::ingest_csv(&a.data, a.label_column.as_deref())?;
    let selection = match &a.index_file {
        Some(p) => RowSelection::Indices(read_index_file(p)?),
        None => RowSelection::Labels(a.labels),
    };
    let reduced = filter_rows(&data, &selection, a.mode)?;
    write_dataset(&reduced, &a.out)?;
    println!("{} of {} rows written to {}", reduced.nrows(), data.nrows(), a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_lcg(a: LcgArgs) -> Result<ExitCode> {
    if a.n == 0 {
        return Err(Error::InvalidConfig("--n must be at least 1".into()));
    }
    let t = lcg_triplets(a.generator, a.seed, a.n)?;
    write_dataset(&t, &a.out)?;
    println!("{} {} triplets written to {}", a.n, a.generator, a.out.display());
    Ok(ExitCode::SUCCESS)
}
