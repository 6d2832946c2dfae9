//! Quasi-Monte Carlo evaluation of the two-sample projection index
//!
//! ```text
//! I(A) = integral over S(k) of |G_AX(t) - G_AY(t)| dt
//! ```
//!
//! where `G` is the plug-in spatial distribution function of a projected
//! sample and `S(k)` is the ball of radius `k r` about the pooled spatial
//! median (`r` = distance to the farthest pooled point). The integral is
//! approximated by the ball volume times the mean of the integrand over
//! Sobol nodes pushed into the ball.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{project_matrix, DataMatrix, PointSet, ProjectionFrame};
use crate::sobol::SobolStream;
use crate::spatial::{accumulate_unit_vectors, combined_region_points, RegionSpec, DEFAULT_MEDIAN_TOL};

/// Node counts at or above this are evaluated on the rayon pool.
const PARALLEL_THRESHOLD: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexConfig {
    /// Radius multiplier.
    pub k: f64,
    /// QMC nodes for the search phase.
    pub n_nodes: usize,
    /// QMC nodes for refinement.
    pub n_nodes_refine: usize,
    pub sobol_skip: u64,
    pub median_tol: f64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            k: 1.0,
            n_nodes: 50,
            n_nodes_refine: 5000,
            sobol_skip: 0,
            median_tol: DEFAULT_MEDIAN_TOL,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!("k must be positive, got {}", self.k)));
        }
        if self.n_nodes == 0 || self.n_nodes_refine == 0 {
            return Err(Error::InvalidConfig("QMC node counts must be at least 1".into()));
        }
        if self.median_tol.is_nan() || self.median_tol <= 0.0 {
            return Err(Error::InvalidConfig("median tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexValue {
    pub value: f64,
    pub n_nodes_used: usize,
    pub region: RegionSpec,
    pub median_converged: bool,
    pub median_gradient_norm: f64,
}

/// Volume of the `d`-ball of radius `r`, for `d` in 1..=3.
pub fn ball_volume(d: usize, r: f64) -> Result<f64> {
    match d {
        1 => Ok(2.0 * r),
        2 => Ok(PI * r * r),
        3 => Ok(4.0 / 3.0 * PI * r * r * r),
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

/// Pushes a point of the unit cube forward to the ball `region`, carrying the
/// uniform measure to the uniform measure (polar factorization).
pub fn map_to_ball(u: &[f64], region: &RegionSpec) -> Result<Vec<f64>> {
    let d = u.len();
    if region.center.len() != d {
        return Err(Error::DimensionMismatch {
            context: "map_to_ball",
            expected: region.center.len(),
            found: d,
        });
    }
    let big_r = region.radius();
    let c = &region.center;
    match d {
        1 => Ok(vec![c[0] + 2.0 * big_r * u[0] - big_r]),
        2 => {
            let rho = big_r * u[0].sqrt();
            let theta = 2.0 * PI * u[1];
            Ok(vec![c[0] + rho * theta.cos(), c[1] + rho * theta.sin()])
        }
        3 => {
            let rho = big_r * u[0].cbrt();
            let cos_phi = 1.0 - 2.0 * u[1];
            let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
            let theta = 2.0 * PI * u[2];
            Ok(vec![
                c[0] + rho * sin_phi * theta.cos(),
                c[1] + rho * sin_phi * theta.sin(),
                c[2] + rho * cos_phi,
            ])
        }
        _ => Err(Error::UnsupportedDimension(d)),
    }
}

fn check_shapes(frame: &ProjectionFrame, x: &DataMatrix, y: &DataMatrix) -> Result<()> {
    for (m, ctx) in [(x, "index: data columns"), (y, "index: benchmark columns")] {
        if m.ncols() != frame.p() {
            return Err(Error::DimensionMismatch {
                context: ctx,
                expected: frame.p(),
                found: m.ncols(),
            });
        }
    }
    Ok(())
}

/// Search-phase index with `cfg.n_nodes` nodes.
pub fn index(frame: &ProjectionFrame, x: &DataMatrix, y: &DataMatrix, cfg: &IndexConfig) -> Result<IndexValue> {
    index_with_nodes(frame, x, y, cfg, cfg.n_nodes)
}

/// The same statistic with `cfg.n_nodes_refine` nodes.
pub fn refine_index(
    frame: &ProjectionFrame,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &IndexConfig,
) -> Result<IndexValue> {
    index_with_nodes(frame, x, y, cfg, cfg.n_nodes_refine)
}

pub fn index_with_nodes(
    frame: &ProjectionFrame,
    x: &DataMatrix,
    y: &DataMatrix,
    cfg: &IndexConfig,
    n_nodes: usize,
) -> Result<IndexValue> {
    check_shapes(frame, x, y)?;
    let px = project_matrix(x, frame.matrix())?;
    let py = project_matrix(y, frame.matrix())?;
    index_of_points(&px, &py, cfg, n_nodes)
}

/// Index of two already-projected point clouds.
pub fn index_of_points(px: &PointSet, py: &PointSet, cfg: &IndexConfig, n_nodes: usize) -> Result<IndexValue> {
    cfg.validate()?;
    if n_nodes == 0 {
        return Err(Error::InvalidConfig("QMC node count must be at least 1".into()));
    }
    let d = px.dim();
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    let (region, median) = combined_region_points(px, py, cfg.k, cfg.median_tol)?;

    let cube = SobolStream::new(d, cfg.sobol_skip).take_block(n_nodes);
    let mut nodes = Vec::with_capacity(cube.len());
    for u in cube.chunks_exact(d) {
        nodes.extend(map_to_ball(u, &region)?);
    }

    let (mx, my) = (px.len() as f64, py.len() as f64);
    let integrand = |t: &[f64]| -> f64 {
        let mut gx = [0.0; 3];
        let mut gy = [0.0; 3];
        accumulate_unit_vectors(px, t, &mut gx[..d]);
        accumulate_unit_vectors(py, t, &mut gy[..d]);
        (0..d)
            .map(|k| {
                let diff = gx[k] / mx - gy[k] / my;
                diff * diff
            })
            .sum::<f64>()
            .sqrt()
    };
    let values: Vec<f64> = if n_nodes >= PARALLEL_THRESHOLD {
        nodes.par_chunks_exact(d).map(integrand).collect()
    } else {
        nodes.chunks_exact(d).map(integrand).collect()
    };
    // Sequential reduction in node order keeps the result bit-reproducible.
    let mean = values.iter().sum::<f64>() / n_nodes as f64;
    let value = ball_volume(d, region.radius())? * mean;

    Ok(IndexValue {
        value,
        n_nodes_used: n_nodes,
        region,
        median_converged: median.converged,
        median_gradient_norm: median.gradient_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn region(center: Vec<f64>, r: f64) -> RegionSpec {
        RegionSpec {
            center,
            base_radius: r,
            multiplier: 1.0,
        }
    }

    #[test]
    fn ball_map_two_dims() {
        let reg = region(vec![0.0, 0.0], 2.0);
        assert_eq!(map_to_ball(&[0.0, 0.7], &reg).unwrap(), vec![0.0, 0.0]);
        let p = map_to_ball(&[0.25, 0.5], &reg).unwrap();
        assert!((p[0] + 1.0).abs() < 1e-15 && p[1].abs() < 1e-15);
        let edge = map_to_ball(&[1.0 - 1e-12, 0.0], &reg).unwrap();
        assert!((edge[0] - 2.0).abs() < 1e-11 && edge[1] == 0.0);
    }

    #[test]
    fn ball_map_one_dim_affine() {
        let reg = region(vec![0.0], 2.0);
        assert_eq!(map_to_ball(&[0.75], &reg).unwrap(), vec![1.0]);
    }

    #[test]
    fn ball_map_three_dims_inside() {
        let reg = RegionSpec {
            center: vec![1.0, -1.0, 0.5],
            base_radius: 1.5,
            multiplier: 2.0,
        };
        for u in SobolStream::new(3, 0).take(500) {
            let p = map_to_ball(&u, &reg).unwrap();
            let r: f64 = p.iter().zip(&reg.center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(r <= 3.0 + 1e-12);
        }
    }

    #[test]
    fn ball_map_rejects_four_dims() {
        let reg = region(vec![0.0; 4], 1.0);
        assert!(matches!(map_to_ball(&[0.1; 4], &reg), Err(Error::UnsupportedDimension(4))));
    }

    #[test]
    fn ball_map_is_uniform_in_two_dims() {
        // Fraction of nodes inside half the radius approaches 1/4.
        let reg = region(vec![0.0, 0.0], 1.0);
        let n = 4096;
        let inside = SobolStream::new(2, 0)
            .take(n)
            .filter(|u| {
                let p = map_to_ball(u, &reg).unwrap();
                p[0].hypot(p[1]) < 0.5
            })
            .count();
        assert!((inside as f64 / n as f64 - 0.25).abs() < 1e-3);
    }

    #[test]
    fn identical_samples_give_zero() {
        let x = DataMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![3.0, -1.0, 0.5], vec![1.0, 1.0, 1.0]]).unwrap();
        let f = ProjectionFrame::leading_axes(3, 2).unwrap();
        let v = index(&f, &x, &x.clone(), &IndexConfig::default()).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn shape_errors() {
        let x = DataMatrix::from_rows(&[vec![0.0, 1.0, 2.0]]).unwrap();
        let y = DataMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let f = ProjectionFrame::leading_axes(3, 2).unwrap();
        assert!(matches!(
            index(&f, &x, &y, &IndexConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        let f4 = ProjectionFrame::leading_axes(5, 4).unwrap();
        let x5 = DataMatrix::from_rows(&[vec![0.0; 5], vec![1.0; 5]]).unwrap();
        assert!(matches!(
            index(&f4, &x5, &x5, &IndexConfig::default()),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn parallel_and_sequential_paths_agree() {
        let x = DataMatrix::from_rows(&[vec![-1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let y = DataMatrix::from_rows(&[vec![0.0, -1.0], vec![0.0, 1.0]]).unwrap();
        let f = ProjectionFrame::leading_axes(2, 2).unwrap();
        let cfg = IndexConfig::default();
        let a = index_with_nodes(&f, &x, &y, &cfg, PARALLEL_THRESHOLD).unwrap();
        let px = project_matrix(&x, f.matrix()).unwrap();
        let py = project_matrix(&y, f.matrix()).unwrap();
        let (reg, _) = combined_region_points(&px, &py, 1.0, cfg.median_tol).unwrap();
        let mut acc = 0.0;
        for u in SobolStream::new(2, 0).take(PARALLEL_THRESHOLD) {
            let t = map_to_ball(&u, &reg).unwrap();
            let gx = crate::spatial::estimate_sdf(&px, &t);
            let gy = crate::spatial::estimate_sdf(&py, &t);
            acc += ((gx[0] - gy[0]).powi(2) + (gx[1] - gy[1]).powi(2)).sqrt();
        }
        let expect = PI * reg.radius().powi(2) * acc / PARALLEL_THRESHOLD as f64;
        assert!((a.value - expect).abs() <= 1e-12 * expect);
    }
}
