//! Benchmark datasets: external files, class splits, column permutations and
//! linear congruential generator output.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::frame::{default_column_names, DataMatrix};

/// Recipe for the benchmark dataset `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchmarkSpec {
    External { path: PathBuf },
    ClassSplit { column: String, level: String },
    Permutation { seed: u64 },
    Lcg {
        generator: LcgGenerator,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
}

impl FromStr for BenchmarkSpec {
    type Err = Error;

    /// `file:PATH`, `permute:SEED`, `class:COL=LEVEL` or `lcg:NAME,SEED[,N]`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse benchmark spec `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "file" if !rest.is_empty() => Ok(BenchmarkSpec::External { path: rest.into() }),
            "permute" => Ok(BenchmarkSpec::Permutation {
                seed: rest.trim().parse().map_err(|_| bad())?,
            }),
            "class" => {
                let (column, level) = rest.split_once('=').ok_or_else(bad)?;
                if column.is_empty() {
                    return Err(bad());
                }
                Ok(BenchmarkSpec::ClassSplit {
                    column: column.to_string(),
                    level: level.to_string(),
                })
            }
            "lcg" => {
                let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
                if !(2..=3).contains(&parts.len()) {
                    return Err(bad());
                }
                Ok(BenchmarkSpec::Lcg {
                    generator: parts[0].parse()?,
                    seed: parts[1].parse().map_err(|_| bad())?,
                    n: match parts.get(2) {
                        Some(n) => Some(n.parse().map_err(|_| bad())?),
                        None => None,
                    },
                })
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for BenchmarkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkSpec::External { path } => write!(f, "file:{}", path.display()),
            BenchmarkSpec::ClassSplit { column, level } => write!(f, "class:{column}={level}"),
            BenchmarkSpec::Permutation { seed } => write!(f, "permute:{seed}"),
            BenchmarkSpec::Lcg { generator, seed, n: None } => write!(f, "lcg:{generator},{seed}"),
            BenchmarkSpec::Lcg {
                generator,
                seed,
                n: Some(n),
            } => write!(f, "lcg:{generator},{seed},{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LcgGenerator {
    /// `x <- 65539 x mod 2^31`
    Randu,
    /// `x <- 16807 x mod (2^31 - 1)`
    Minstd,
}

impl LcgGenerator {
    pub fn modulus(self) -> u64 {
        match self {
            LcgGenerator::Randu => 1 << 31,
            LcgGenerator::Minstd => (1 << 31) - 1,
        }
    }

    pub fn multiplier(self) -> u64 {
        match self {
            LcgGenerator::Randu => 65539,
            LcgGenerator::Minstd => 16807,
        }
    }
}

impl FromStr for LcgGenerator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "randu" => Ok(LcgGenerator::Randu),
            "minstd" => Ok(LcgGenerator::Minstd),
            _ => Err(Error::InvalidConfig(format!("unknown generator `{s}` (randu|minstd)"))),
        }
    }
}

impl fmt::Display for LcgGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LcgGenerator::Randu => "randu",
            LcgGenerator::Minstd => "minstd",
        })
    }
}

/// Multiplicative congruential generator state. Products fit in `u64`
/// (multiplier < 2^17, state < 2^31).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LcgState {
    pub modulus: u64,
    pub multiplier: u64,
    pub state: u64,
}

impl LcgState {
    pub fn new(generator: LcgGenerator, seed: u64) -> Result<Self> {
        let modulus = generator.modulus();
        if seed == 0 || seed >= modulus {
            return Err(Error::InvalidConfig(format!(
                "{generator} seed must lie in [1, {modulus}), got {seed}"
            )));
        }
        Ok(LcgState {
            modulus,
            multiplier: generator.multiplier(),
            state: seed,
        })
    }

    pub fn next_value(&mut self) -> u64 {
        self.state = self.multiplier * self.state % self.modulus;
        self.state
    }
}

pub fn lcg_next(state: LcgState) -> (u64, LcgState) {
    let mut s = state;
    let v = s.next_value();
    (v, s)
}

/// `3n` successive raw values arranged as non-overlapping triples.
pub fn lcg_triplet_integers(generator: LcgGenerator, seed: u64, n: usize) -> Result<Vec<[u64; 3]>> {
    let mut s = LcgState::new(generator, seed)?;
    Ok((0..n)
        .map(|_| [s.next_value(), s.next_value(), s.next_value()])
        .collect())
}

/// `n x 3` matrix of successive generator outputs scaled into `(0, 1)`.
pub fn lcg_triplets(generator: LcgGenerator, seed: u64, n: usize) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one triplet".into()));
    }
    let m = generator.modulus() as f64;
    let ints = lcg_triplet_integers(generator, seed, n)?;
    let values = DMatrix::from_fn(n, 3, |r, c| ints[r][c] as f64 / m);
    DataMatrix::new(values, default_column_names(3))
}

/// Independently shuffles every column with Fisher-Yates driven by a
/// ChaCha8 stream seeded from `seed`; columns are shuffled left to right from
/// the same stream. Row labels are dropped.
pub fn permutation_benchmark(x: &DataMatrix, seed: u64) -> DataMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = x.values().clone();
    let n = values.nrows();
    for mut col in values.column_iter_mut() {
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            col.swap_rows(i, j);
        }
    }
    DataMatrix::new(values, x.column_names().to_vec()).expect("permutation preserves validity")
}

/// Splits rows into those whose label equals `level` (data) and the rest
/// (benchmark). `label_column` may name the matrix's label column or a
/// numeric column, which is then dropped from both parts.
pub fn class_split(x: &DataMatrix, label_column: &str, level: &str) -> Result<(DataMatrix, DataMatrix)> {
    let (selected, rest, stripped): (Vec<usize>, Vec<usize>, DataMatrix) = if x.label_name() == Some(label_column) {
        let labels = x.row_labels().expect("label name implies labels");
        let (a, b) = (0..x.nrows()).partition(|&i| labels[i] == level);
        (a, b, x.clone())
    } else if let Some(c) = x.column_index(label_column) {
        let target: f64 = level
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("level `{level}` is not numeric")))?;
        let (a, b) = (0..x.nrows()).partition(|&i| x.values()[(i, c)] == target);
        if x.ncols() == 1 {
            return Err(Error::InvalidData("removing the class column leaves no variables".into()));
        }
        let keep: Vec<usize> = (0..x.ncols()).filter(|&j| j != c).collect();
        (a, b, x.select_columns(&keep)?)
    } else {
        return Err(Error::UnknownColumn(label_column.to_string()));
    };
    if selected.is_empty() || rest.is_empty() {
        return Err(Error::EmptyPartition {
            level: level.to_string(),
        });
    }
    Ok((
        stripped.select_rows(&selected)?.without_labels(),
        stripped.select_rows(&rest)?.without_labels(),
    ))
}

/// Builds the `(data, benchmark)` pair described by `spec`. `x` is not modified.
pub fn build_benchmark(spec: &BenchmarkSpec, x: &DataMatrix) -> Result<(DataMatrix, DataMatrix)> {
    match spec {
        BenchmarkSpec::External { path } => {
            let y = csvio::ingest_csv_with_optional_label(path, x.label_name())?;
            if y.ncols() != x.ncols() {
                return Err(Error::DimensionMismatch {
                    context: "external benchmark columns",
                    expected: x.ncols(),
                    found: y.ncols(),
                });
            }
            Ok((x.clone(), y))
        }
        BenchmarkSpec::Permutation { seed } => Ok((x.clone(), permutation_benchmark(x, *seed))),
        BenchmarkSpec::ClassSplit { column, level } => class_split(x, column, level),
        BenchmarkSpec::Lcg { generator, seed, n } => {
            if x.ncols() != 3 {
                return Err(Error::DimensionMismatch {
                    context: "lcg benchmark needs 3-column data",
                    expected: 3,
                    found: x.ncols(),
                });
            }
            let y = lcg_triplets(*generator, *seed, n.unwrap_or(x.nrows()))?;
            let y = DataMatrix::new(y.values().clone(), x.column_names().to_vec())?;
            Ok((x.clone(), y))
        }
    }
}
