//! Spatial distribution function, spatial median and the integration region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{PointSet, ProjectedSample};

pub const DEFAULT_MEDIAN_TOL: f64 = 1e-8;
pub const MEDIAN_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMedianResult {
    pub location: Vec<f64>,
    /// Norm of the (generalized) gradient of the mean distance at `location`.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Ball of radius `multiplier * base_radius` about `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub center: Vec<f64>,
    pub base_radius: f64,
    pub multiplier: f64,
}

impl RegionSpec {
    pub fn radius(&self) -> f64 {
        self.multiplier * self.base_radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// Adds `sum_i (x_i - t) / |x_i - t|` into `acc` and returns the number of
/// sample points coinciding with `t` (these contribute nothing).
pub(crate) fn accumulate_unit_vectors(sample: &PointSet, t: &[f64], acc: &mut [f64]) -> usize {
    let dim = sample.dim();
    debug_assert_eq!(t.len(), dim);
    let mut coincident = 0;
    match dim {
        2 => {
            let (t0, t1) = (t[0], t[1]);
            let (mut s0, mut s1) = (0.0, 0.0);
            for x in sample.iter() {
                let (a, b) = (x[0] - t0, x[1] - t1);
                let n = (a * a + b * b).sqrt();
                if n > 0.0 {
                    s0 += a / n;
                    s1 += b / n;
                } else {
                    coincident += 1;
                }
            }
            acc[0] += s0;
            acc[1] += s1;
        }
        _ => {
            let mut diff = vec![0.0; dim];
            for x in sample.iter() {
                let mut n2 = 0.0;
                for k in 0..dim {
                    diff[k] = x[k] - t[k];
                    n2 += diff[k] * diff[k];
                }
                let n = n2.sqrt();
                if n > 0.0 {
                    for k in 0..dim {
                        acc[k] += diff[k] / n;
                    }
                } else {
                    coincident += 1;
                }
            }
        }
    }
    coincident
}

/// Plug-in spatial distribution function `(1/m) sum_i (x_i - t)/|x_i - t|`.
///
/// Points exactly at `t` contribute the zero vector.
pub fn estimate_sdf(sample: &PointSet, t: &[f64]) -> Vec<f64> {
    assert!(!sample.is_empty(), "estimate_sdf needs at least one point");
    assert_eq!(t.len(), sample.dim(), "evaluation point has wrong dimension");
    let mut acc = vec![0.0; sample.dim()];
    accumulate_unit_vectors(sample, t, &mut acc);
    let m = sample.len() as f64;
    acc.iter_mut().for_each(|a| *a /= m);
    acc
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn coordinate_median(sample: &PointSet) -> Vec<f64> {
    let m = sample.len();
    (0..sample.dim())
        .map(|k| {
            let mut col: Vec<f64> = sample.iter().map(|x| x[k]).collect();
            col.sort_by(f64::total_cmp);
            if m % 2 == 1 {
                col[m / 2]
            } else {
                0.5 * (col[m / 2 - 1] + col[m / 2])
            }
        })
        .collect()
}

/// Spatial (geometric) median by Weiszfeld iteration with the Vardi-Zhang
/// correction for iterates that land on sample points.
///
/// Convergence is declared when the generalized gradient of the mean distance,
/// `max(0, |R| - eta) / m` with `R` the sum of unit vectors from non-coincident
/// points and `eta` the multiplicity of the iterate, drops to `tol`. Hitting
/// the iteration cap yields `converged == false` rather than an error.
pub fn spatial_median(sample: &PointSet, tol: f64) -> Result<SpatialMedianResult> {
    spatial_median_with_cap(sample, tol, MEDIAN_MAX_ITERATIONS)
}

pub fn spatial_median_with_cap(
    sample: &PointSet,
    tol: f64,
    max_iterations: usize,
) -> Result<SpatialMedianResult> {
    if sample.is_empty() {
        return Err(Error::InvalidData("spatial median of an empty sample".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidConfig(format!("median tolerance must be positive, got {tol}")));
    }
    let dim = sample.dim();
    let m = sample.len() as f64;
    let mut y = coordinate_median(sample);
    let mut resultant = vec![0.0; dim];
    let mut weighted = vec![0.0; dim];
    let mut iterations = 0;

    loop {
        resultant.iter_mut().for_each(|v| *v = 0.0);
        weighted.iter_mut().for_each(|v| *v = 0.0);
        let mut weight = 0.0;
        let mut eta = 0usize;
        let (mut nearest, mut nearest_w) = (0, 0.0);
        for (i, x) in sample.iter().enumerate() {
            let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist > 0.0 {
                let w = 1.0 / dist;
                weight += w;
                if w > nearest_w {
                    (nearest, nearest_w) = (i, w);
                }
                for k in 0..dim {
                    resultant[k] += (x[k] - y[k]) * w;
                    weighted[k] += x[k] * w;
                }
            } else {
                eta += 1;
            }
        }
        let r = norm(&resultant);
        let gradient_norm = (r - eta as f64).max(0.0) / m;
        if gradient_norm <= tol {
            return Ok(SpatialMedianResult {
                location: y,
                gradient_norm,
                iterations,
                converged: true,
            });
        }
        if iterations >= max_iterations {
            return Ok(SpatialMedianResult {
                location: y,
                gradient_norm,
                iterations,
                converged: false,
            });
        }
        iterations += 1;

        // Weiszfeld creeps towards a median that sits on a sample point; test
        // that point directly once it dominates the weights.
        if eta == 0 && nearest_w > 0.5 * weight {
            let candidate = sample.point(nearest).to_vec();
            let g = vertex_gradient(sample, &candidate);
            if g <= tol {
                return Ok(SpatialMedianResult {
                    location: candidate,
                    gradient_norm: g,
                    iterations,
                    converged: true,
                });
            }
        }

        // weight > 0 here: if every point coincided with y, r would be 0.
        let gamma = if eta == 0 { 0.0 } else { (eta as f64 / r).min(1.0) };
        let next: Vec<f64> = (0..dim)
            .map(|k| (1.0 - gamma) * weighted[k] / weight + gamma * y[k])
            .collect();
        if next == y {
            // Numerically stationary but above tolerance; further steps are no-ops.
            return Ok(SpatialMedianResult {
                location: y,
                gradient_norm,
                iterations,
                converged: false,
            });
        }
        y = next;
    }
}

/// Generalized gradient norm of the mean distance at `t`.
fn vertex_gradient(sample: &PointSet, t: &[f64]) -> f64 {
    let mut acc = vec![0.0; t.len()];
    let eta = accumulate_unit_vectors(sample, t, &mut acc);
    (norm(&acc) - eta as f64).max(0.0) / sample.len() as f64
}

/// Largest Euclidean distance from `center` to a sample point.
pub fn data_radius(sample: &PointSet, center: &[f64]) -> f64 {
    sample
        .iter()
        .map(|x| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Region centred at the spatial median of the pooled projected samples.
///
/// The pooled points are sorted before the median is computed so that the
/// result does not depend on which sample is passed first.
pub fn combined_region(
    proj_x: &ProjectedSample,
    proj_y: &ProjectedSample,
    k: f64,
    tol: f64,
) -> Result<(RegionSpec, SpatialMedianResult)> {
    combined_region_points(&proj_x.points, &proj_y.points, k, tol)
}

pub(crate) fn combined_region_points(
    px: &PointSet,
    py: &PointSet,
    k: f64,
    tol: f64,
) -> Result<(RegionSpec, SpatialMedianResult)> {
    if px.is_empty() || py.is_empty() {
        return Err(Error::InvalidData("combined region needs two non-empty samples".into()));
    }
    if px.dim() != py.dim() {
        return Err(Error::DimensionMismatch {
            context: "combined region",
            expected: px.dim(),
            found: py.dim(),
        });
    }
    if k.is_nan() || k <= 0.0 {
        return Err(Error::InvalidConfig(format!("radius multiplier must be positive, got {k}")));
    }
    let pooled = PointSet::pooled(px, py).sorted();
    let median = spatial_median(&pooled, tol)?;
    let base_radius = data_radius(&pooled, &median.location);
    Ok((
        RegionSpec {
            center: median.location.clone(),
            base_radius,
            multiplier: k,
        },
        median,
    ))
}
