//! Reference computations written independently of the library.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

pub type P2 = [f64; 2];

/// Plug-in spatial distribution function, straight from its definition.
pub fn sdf(sample: &[P2], t: P2) -> P2 {
    let mut s = [0.0, 0.0];
    for x in sample {
        let (dx, dy) = (x[0] - t[0], x[1] - t[1]);
        let r = dx.hypot(dy);
        if r > 0.0 {
            s[0] += dx / r;
            s[1] += dy / r;
        }
    }
    [s[0] / sample.len() as f64, s[1] / sample.len() as f64]
}

pub fn l1_objective(sample: &[P2], c: P2) -> f64 {
    sample.iter().map(|x| (x[0] - c[0]).hypot(x[1] - c[1])).sum()
}

/// Plain Weiszfeld iteration from the centroid, run to a fixed point.
/// Returns the data point itself if an iterate lands on one.
pub fn naive_median(sample: &[P2]) -> P2 {
    let n = sample.len() as f64;
    let mut c = [
        sample.iter().map(|p| p[0]).sum::<f64>() / n,
        sample.iter().map(|p| p[1]).sum::<f64>() / n,
    ];
    for _ in 0..200_000 {
        let (mut wx, mut wy, mut w) = (0.0, 0.0, 0.0);
        for x in sample {
            let r = (x[0] - c[0]).hypot(x[1] - c[1]);
            if r == 0.0 {
                return c;
            }
            wx += x[0] / r;
            wy += x[1] / r;
            w += 1.0 / r;
        }
        let next = [wx / w, wy / w];
        if next == c {
            break;
        }
        c = next;
    }
    c
}

/// The better of the naive Weiszfeld point and every data point.
pub fn reference_median(sample: &[P2]) -> P2 {
    let mut best = naive_median(sample);
    let mut best_f = l1_objective(sample, best);
    for &x in sample {
        let f = l1_objective(sample, x);
        if f < best_f {
            best = x;
            best_f = f;
        }
    }
    best
}

/// Midpoint-rule integral of `||G_X - G_Y||` over the ball of radius `k r`
/// about the pooled median, on a `cells x cells` grid over its bounding box.
pub fn grid_index(x: &[P2], y: &[P2], k: f64, cells: usize) -> f64 {
    let pooled: Vec<P2> = x.iter().chain(y).copied().collect();
    let c = reference_median(&pooled);
    let r = pooled.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).fold(0.0, f64::max);
    let rad = k * r;
    let h = 2.0 * rad / cells as f64;
    let mut total = 0.0;
    for i in 0..cells {
        let u = -rad + (i as f64 + 0.5) * h;
        let mut row = 0.0;
        for j in 0..cells {
            let v = -rad + (j as f64 + 0.5) * h;
            if u * u + v * v > rad * rad {
                continue;
            }
            let t = [c[0] + u, c[1] + v];
            let (gx, gy) = (sdf(x, t), sdf(y, t));
            row += (gx[0] - gy[0]).hypot(gx[1] - gy[1]);
        }
        total += row;
    }
    total * h * h
}

pub fn gaussian_points<R: Rng>(rng: &mut R, n: usize, mean: P2, scale: f64) -> Vec<P2> {
    (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [mean[0] + scale * a, mean[1] + scale * b]
        })
        .collect()
}

pub fn rows(points: &[P2]) -> Vec<Vec<f64>> {
    points.iter().map(|p| p.to_vec()).collect()
}
