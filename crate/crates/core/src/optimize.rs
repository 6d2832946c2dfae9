//! Maximization of a projection index over orthonormal frames.
//!
//! Two derivative-free optimizers are provided: simulated annealing with
//! Gaussian perturbations re-orthonormalized onto the frame manifold, and a
//! guided-tour style hill climb along geodesics towards random target frames.
//! [`run_search`] runs independent restarts of either and orders the winners.

use std::f64::consts::{FRAC_PI_4, PI};
use std::str::FromStr;

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{orthonormalize, DataMatrix, ProjectionFrame};
use crate::index::{index, IndexConfig, IndexValue};

/// Largest principal angle (radians) below which two solutions are duplicates.
pub const DUPLICATE_ANGLE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Anneal,
    Geodesic,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anneal" => Ok(OptimizerKind::Anneal),
            "geodesic" => Ok(OptimizerKind::Geodesic),
            _ => Err(Error::InvalidConfig(format!("unknown optimizer `{s}` (anneal|geodesic)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealConfig {
    pub t0: f64,
    pub cooling: f64,
    pub step_scale0: f64,
    pub step_decay: f64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            t0: 0.1,
            cooling: 0.95,
            step_scale0: 0.5,
            step_decay: 0.98,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeodesicConfig {
    pub max_angle: f64,
    pub shrink: f64,
    pub min_angle: f64,
    pub probes: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            max_angle: FRAC_PI_4,
            shrink: 0.7,
            min_angle: 0.001,
            probes: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub optimizer: OptimizerKind,
    pub restarts: usize,
    pub max_iterations: usize,
    pub rng_seed: u64,
    pub anneal: AnnealConfig,
    pub geodesic: GeodesicConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            optimizer: OptimizerKind::Anneal,
            restarts: 10,
            max_iterations: 200,
            rng_seed: 1,
            anneal: AnnealConfig::default(),
            geodesic: GeodesicConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        let a = &self.anneal;
        if !(a.t0 > 0.0 && a.step_scale0 > 0.0) {
            return bad("anneal t0 and step_scale0 must be positive");
        }
        if !(a.cooling > 0.0 && a.cooling < 1.0 && a.step_decay > 0.0 && a.step_decay < 1.0) {
            return bad("anneal cooling and step_decay must lie in (0, 1)");
        }
        let g = &self.geodesic;
        if !(g.max_angle > 0.0 && g.min_angle > 0.0 && g.shrink > 0.0 && g.shrink < 1.0 && g.probes >= 1) {
            return bad("geodesic parameters out of range");
        }
        Ok(())
    }
}

/// Result of one optimizer run on an arbitrary objective.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Best frame seen, not the last iterate.
    pub frame: ProjectionFrame,
    pub value: f64,
    pub iterations: usize,
    /// Best-so-far objective after each iteration (entry 0 is the start).
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProjection {
    pub frame: ProjectionFrame,
    pub search_index: IndexValue,
    pub refined_index: Option<IndexValue>,
    pub restart_id: usize,
    pub iterations_used: usize,
    pub seed: u64,
    /// Position (in the sorted list) of an earlier solution spanning nearly the same space.
    pub duplicate_of: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartFailure {
    pub restart_id: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Sorted by descending search index, ties by restart id.
    pub solutions: Vec<SolutionProjection>,
    pub failures: Vec<RestartFailure>,
}

fn gaussian_matrix<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    // Column-major fill order, fixed for reproducibility.
    let mut m = DMatrix::zeros(p, d);
    for c in 0..d {
        for r in 0..p {
            m[(r, c)] = rng.sample(StandardNormal);
        }
    }
    m
}

/// Haar-distributed frame: orthonormalized iid standard normal matrix.
pub fn random_frame<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Result<ProjectionFrame> {
    if d == 0 || d >= p {
        return Err(Error::InvalidConfig(format!("random frame needs 1 <= d < p, got p={p}, d={d}")));
    }
    loop {
        match orthonormalize(&gaussian_matrix(p, d, rng)) {
            Ok(f) => return Ok(f),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Principal angles between the column spaces of two frames, ascending.
pub fn principal_angles(a: &ProjectionFrame, b: &ProjectionFrame) -> Vec<f64> {
    assert_eq!(a.p(), b.p(), "frames live in different ambient spaces");
    let m = a.matrix().transpose() * b.matrix();
    let sv = m.singular_values();
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(-1.0, 1.0).acos()).collect();
    // Frames of different rank: the unmatched directions are orthogonal.
    angles.extend(std::iter::repeat_n(PI / 2.0, a.d().max(b.d()) - sv.len()));
    angles.sort_by(f64::total_cmp);
    angles
}

/// Largest principal angle.
pub fn subspace_distance(a: &ProjectionFrame, b: &ProjectionFrame) -> f64 {
    principal_angles(a, b).last().copied().unwrap_or(0.0)
}

/// Interpolation from one frame to another: the column space moves along the
/// Grassmann geodesic given by the principal-angle decomposition of `A^T B`
/// while the basis inside it rotates so that the path ends at the target
/// (up to column signs, which the frame sign convention removes).
#[derive(Debug, Clone)]
pub struct GeodesicPath {
    /// `A U`
    from_aligned: DMatrix<f64>,
    /// Unit directions orthogonal to `span(A)` completing each rotation plane.
    normals: DMatrix<f64>,
    angles: Vec<f64>,
    u_t: DMatrix<f64>,
    twist: Option<(DMatrix<f64>, Vec<TwistBlock>)>,
    start: ProjectionFrame,
}

#[derive(Debug, Clone, Copy)]
enum TwistBlock {
    Fixed(usize),
    Plane(usize, usize, f64),
}

impl GeodesicPath {
    pub fn new(from: &ProjectionFrame, to: &ProjectionFrame) -> Result<Self> {
        if from.p() != to.p() || from.d() != to.d() {
            return Err(Error::DimensionMismatch {
                context: "geodesic endpoints",
                expected: from.p() * from.d(),
                found: to.p() * to.d(),
            });
        }
        let (p, d) = (from.p(), from.d());
        let a = from.matrix();
        let b = to.matrix();
        let svd = (a.transpose() * b).svd(true, true);
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v_t requested").transpose();
        let a_al = a * &u;
        let b_al = b * &v;

        let mut normals = DMatrix::zeros(p, d);
        let mut angles = Vec::with_capacity(d);
        for i in 0..d {
            let sigma = svd.singular_values[i].clamp(0.0, 1.0);
            let mut g = b_al.column(i) - a_al.column(i) * sigma;
            let gn = g.norm();
            if gn > 1e-12 {
                g /= gn;
                angles.push(sigma.acos());
            } else {
                g.fill(0.0);
                angles.push(0.0);
            }
            normals.set_column(i, &g);
        }

        // Within-span rotation from U^T (start basis) to V^T D (target basis
        // up to column signs), with D chosen so the rotation is proper.
        let mut flips = DMatrix::<f64>::identity(d, d);
        if u.determinant() * v.determinant() < 0.0 {
            flips[(d - 1, d - 1)] = -1.0;
        }
        let phi = &u * v.transpose() * &flips;
        let twist = rotation_log(&phi);

        Ok(GeodesicPath {
            from_aligned: a_al,
            normals,
            angles,
            u_t: u.transpose(),
            twist,
            start: from.clone(),
        })
    }

    /// Largest rotation angle along the path (span or in-plane part).
    pub fn length(&self) -> f64 {
        let span = self.angles.iter().copied().fold(0.0, f64::max);
        let twist = self
            .twist
            .as_ref()
            .map(|(_, blocks)| {
                blocks
                    .iter()
                    .map(|b| match b {
                        TwistBlock::Plane(_, _, t) => t.abs(),
                        TwistBlock::Fixed(_) => 0.0,
                    })
                    .fold(0.0, f64::max)
            })
            .unwrap_or(0.0);
        span.max(twist)
    }

    /// Frame at parameter `s`; `s == 0` returns the start frame and `s == 1`
    /// the target up to column signs. Negative `s` continues the geodesic
    /// backwards. Column signs vary continuously along the path.
    pub fn at(&self, s: f64) -> Result<ProjectionFrame> {
        if s == 0.0 {
            return Ok(self.start.clone());
        }
        let d = self.angles.len();
        let mut m = self.from_aligned.clone();
        for i in 0..d {
            let (sn, cs) = (s * self.angles[i]).sin_cos();
            let col = self.from_aligned.column(i) * cs + self.normals.column(i) * sn;
            m.set_column(i, &col);
        }
        let rot = match &self.twist {
            Some((q, blocks)) => &self.u_t * rotation_power(q, blocks, s),
            None => self.u_t.clone(),
        };
        let m = m * rot;
        match ProjectionFrame::from_orthonormal(m.clone()) {
            Ok(f) => Ok(f),
            Err(_) => orthonormalize(&m),
        }
    }
}

/// Real Schur form of a proper rotation as `(Q, blocks)` with
/// `phi = Q diag(blocks) Q^T`.
fn rotation_log(phi: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<TwistBlock>)> {
    let d = phi.nrows();
    let (q, t) = Schur::try_new(phi.clone(), 1e-14, 10_000)?.unpack();
    let mut blocks = Vec::new();
    let mut negatives = Vec::new();
    let mut i = 0;
    while i < d {
        if i + 1 < d && t[(i + 1, i)].abs() > 1e-12 {
            blocks.push(TwistBlock::Plane(i, i + 1, t[(i + 1, i)].atan2(t[(i, i)])));
            i += 2;
        } else {
            if t[(i, i)] < 0.0 {
                negatives.push(i);
            } else {
                blocks.push(TwistBlock::Fixed(i));
            }
            i += 1;
        }
    }
    // det = +1 so eigenvalues -1 pair up into half turns.
    if negatives.len() % 2 == 1 {
        return None;
    }
    for pair in negatives.chunks_exact(2) {
        blocks.push(TwistBlock::Plane(pair[0], pair[1], PI));
    }
    Some((q, blocks))
}

fn rotation_power(q: &DMatrix<f64>, blocks: &[TwistBlock], s: f64) -> DMatrix<f64> {
    let d = q.nrows();
    let mut t = DMatrix::<f64>::zeros(d, d);
    for b in blocks {
        match *b {
            TwistBlock::Fixed(i) => t[(i, i)] = 1.0,
            TwistBlock::Plane(i, j, angle) => {
                let (sn, cs) = (s * angle).sin_cos();
                t[(i, i)] = cs;
                t[(j, j)] = cs;
                t[(i, j)] = -sn;
                t[(j, i)] = sn;
            }
        }
    }
    q * t * q.transpose()
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Simulated annealing. Step `i` proposes `orthonormalize(A + sigma_i G)` with
/// `G` iid standard normal and `sigma_i = step_scale0 * step_decay^i`, and
/// accepts by the Metropolis rule at temperature `t0 * cooling^i`.
pub fn anneal_search<F, R>(objective: &mut F, start: &ProjectionFrame, cfg: &SearchConfig, rng: &mut R) -> SearchOutcome
where
    F: FnMut(&ProjectionFrame) -> f64,
    R: Rng + ?Sized,
{
    let a = &cfg.anneal;
    let (p, d) = (start.p(), start.d());
    let mut current = start.clone();
    let mut f_cur = finite_or_worst(objective(&current));
    let mut best = current.clone();
    let mut f_best = f_cur;
    let mut trace = Vec::with_capacity(cfg.max_iterations + 1);
    trace.push(f_best);

    let mut sigma = a.step_scale0;
    let mut temp = a.t0;
    for _ in 0..cfg.max_iterations {
        let noise = gaussian_matrix(p, d, rng);
        if let Ok(cand) = orthonormalize(&(current.matrix() + noise * sigma)) {
            let f = finite_or_worst(objective(&cand));
            let accept = f >= f_cur || rng.random::<f64>() < ((f - f_cur) / temp).exp();
            if accept {
                current = cand;
                f_cur = f;
                if f_cur > f_best {
                    best = current.clone();
                    f_best = f_cur;
                }
            }
        }
        trace.push(f_best);
        sigma *= a.step_decay;
        temp *= a.cooling;
    }
    SearchOutcome {
        frame: best,
        value: f_best,
        iterations: cfg.max_iterations,
        trace,
    }
}

/// Guided-tour hill climb: draw a random target frame, probe the geodesic
/// through it within the current angle budget (`probes` points towards the
/// target and `probes` points on the extension away from it), move to the
/// best probe if it improves, otherwise shrink the budget. Stops when the
/// budget falls below `min_angle` or after `max_iterations` targets.
pub fn geodesic_search<F, R>(
    objective: &mut F,
    start: &ProjectionFrame,
    cfg: &SearchConfig,
    rng: &mut R,
) -> SearchOutcome
where
    F: FnMut(&ProjectionFrame) -> f64,
    R: Rng + ?Sized,
{
    let g = &cfg.geodesic;
    let (p, d) = (start.p(), start.d());
    let mut current = start.clone();
    let mut f_cur = finite_or_worst(objective(&current));
    let mut trace = vec![f_cur];
    let mut budget = g.max_angle;
    let mut iterations = 0;

    while iterations < cfg.max_iterations && budget >= g.min_angle {
        iterations += 1;
        let target = match random_frame(p, d, rng) {
            Ok(t) => t,
            Err(_) => break,
        };
        let mut improved = None;
        if let Ok(path) = GeodesicPath::new(&current, &target) {
            let len = path.length();
            if len > 1e-12 {
                let s_max = (budget / len).min(1.0);
                let mut best_probe: Option<(ProjectionFrame, f64)> = None;
                let steps = (1..=g.probes).flat_map(|j| {
                    let s = s_max * j as f64 / g.probes as f64;
                    [s, -s]
                });
                for s in steps {
                    if let Ok(cand) = path.at(s) {
                        let f = finite_or_worst(objective(&cand));
                        if best_probe.as_ref().is_none_or(|(_, bf)| f > *bf) {
                            best_probe = Some((cand, f));
                        }
                    }
                }
                improved = best_probe.filter(|(_, f)| *f > f_cur);
            }
        }
        match improved {
            Some((frame, f)) => {
                current = frame;
                f_cur = f;
            }
            None => budget *= g.shrink,
        }
        trace.push(f_cur);
    }
    SearchOutcome {
        frame: current,
        value: f_cur,
        iterations,
        trace,
    }
}

/// Seed for restart `restart_id`.
pub fn restart_seed(rng_seed: u64, restart_id: usize) -> u64 {
    rng_seed.wrapping_add(restart_id as u64)
}

/// Runs `restarts` independent searches of the index from random frames.
/// Failed restarts are reported, not fatal.
pub fn run_search(
    x: &DataMatrix,
    y: &DataMatrix,
    d: usize,
    idx_cfg: &IndexConfig,
    search_cfg: &SearchConfig,
) -> Result<SearchResult> {
    idx_cfg.validate()?;
    search_cfg.validate()?;
    let p = x.ncols();
    if y.ncols() != p {
        return Err(Error::DimensionMismatch {
            context: "benchmark columns",
            expected: p,
            found: y.ncols(),
        });
    }
    if d == 0 || d >= p {
        return Err(Error::InvalidConfig(format!("target dimension must satisfy 1 <= d < p, got d={d}, p={p}")));
    }
    if d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }

    let outcomes: Vec<std::result::Result<SolutionProjection, RestartFailure>> = (0..search_cfg.restarts)
        .into_par_iter()
        .map(|restart_id| {
            let seed = restart_seed(search_cfg.rng_seed, restart_id);
            single_restart(x, y, d, idx_cfg, search_cfg, restart_id, seed).map_err(|e| RestartFailure {
                restart_id,
                seed,
                message: e.to_string(),
            })
        })
        .collect();

    let mut solutions = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) => solutions.push(s),
            Err(f) => failures.push(f),
        }
    }
    sort_solutions(&mut solutions);
    flag_duplicates(&mut solutions);
    Ok(SearchResult { solutions, failures })
}

fn single_restart(
    x: &DataMatrix,
    y: &DataMatrix,
    d: usize,
    idx_cfg: &IndexConfig,
    search_cfg: &SearchConfig,
    restart_id: usize,
    seed: u64,
) -> Result<SolutionProjection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_frame(x.ncols(), d, &mut rng)?;
    // Surface data problems before the search swallows them as -inf.
    index(&start, x, y, idx_cfg)?;
    let mut objective = |f: &ProjectionFrame| index(f, x, y, idx_cfg).map_or(f64::NEG_INFINITY, |v| v.value);
    let outcome = match search_cfg.optimizer {
        OptimizerKind::Anneal => anneal_search(&mut objective, &start, search_cfg, &mut rng),
        OptimizerKind::Geodesic => geodesic_search(&mut objective, &start, search_cfg, &mut rng),
    };
    let search_index = index(&outcome.frame, x, y, idx_cfg)?;
    Ok(SolutionProjection {
        frame: outcome.frame,
        search_index,
        refined_index: None,
        restart_id,
        iterations_used: outcome.iterations,
        seed,
        duplicate_of: None,
    })
}

pub fn sort_solutions(solutions: &mut [SolutionProjection]) {
    solutions.sort_by(|a, b| {
        b.search_index
            .value
            .total_cmp(&a.search_index.value)
            .then(a.restart_id.cmp(&b.restart_id))
    });
}

/// Marks each solution whose column space is within [`DUPLICATE_ANGLE`] of
/// an earlier one.
pub fn flag_duplicates(solutions: &mut [SolutionProjection]) {
    for i in 0..solutions.len() {
        solutions[i].duplicate_of = (0..i)
            .find(|&j| solutions[j].duplicate_of.is_none() && subspace_distance(&solutions[i].frame, &solutions[j].frame) < DUPLICATE_ANGLE);
    }
}
