mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{gaussian_points, grid_index, rows};
use sdfpp_core::frame::{DataMatrix, ProjectionFrame};
use sdfpp_core::index::{index, index_with_nodes, refine_index, IndexConfig};

fn instance(seed: u64) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = rng.random_range(5..=10);
    let ny = rng.random_range(5..=10);
    let x = gaussian_points(&mut rng, nx, [0.0, 0.0], 1.0);
    let shift = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let y = gaussian_points(&mut rng, ny, shift, 1.5);
    (x, y)
}

fn dm(p: &[[f64; 2]]) -> DataMatrix {
    DataMatrix::from_rows(&rows(p)).unwrap()
}

#[test]
fn refinement_error_shrinks_relative_to_search_phase() {
    let frame = ProjectionFrame::leading_axes(2, 2).unwrap();
    let cfg = IndexConfig { n_nodes_refine: 150, ..Default::default() };
    let (mut fine_gap, mut coarse_gap) = (0.0, 0.0);
    let mut holds = 0;
    for seed in 0..20 {
        let (x, y) = instance(seed);
        let (x, y) = (dm(&x), dm(&y));
        let search = index(&frame, &x, &y, &cfg).unwrap().value;
        let r150 = refine_index(&frame, &x, &y, &cfg).unwrap().value;
        let r5000 = index_with_nodes(&frame, &x, &y, &cfg, 5000).unwrap().value;
        let (f, c) = ((r5000 - r150).abs(), (r150 - search).abs());
        fine_gap += f;
        coarse_gap += c;
        holds += usize::from(f <= c);
    }
    assert!(fine_gap <= coarse_gap, "mean gaps: fine {fine_gap}, coarse {coarse_gap}");
    assert!(holds >= 10, "ordering held on {holds} of 20 instances");
}

#[test]
fn error_against_grid_oracle_decreases_with_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let x = gaussian_points(&mut rng, 40, [0.0, 0.0], 1.0);
    let y = gaussian_points(&mut rng, 40, [0.8, -0.4], 1.3);
    let oracle = grid_index(&x, &y, 1.0, 1000);
    let frame = ProjectionFrame::leading_axes(2, 2).unwrap();
    let cfg = IndexConfig::default();
    let (x, y) = (dm(&x), dm(&y));
    // Running RMS of the error over a geometric sweep of node counts.
    let mut sum_sq = 0.0;
    let mut rms = Vec::new();
    let mut last_err = 0.0;
    for (i, n) in (0..=56).map(|j| (64.0 * 2f64.powf(j as f64 / 8.0)).round() as usize).enumerate() {
        last_err = index_with_nodes(&frame, &x, &y, &cfg, n).unwrap().value - oracle;
        sum_sq += last_err * last_err;
        rms.push((sum_sq / (i + 1) as f64).sqrt());
    }
    for w in rms.windows(2) {
        assert!(w[1] <= w[0], "running RMS errors: {rms:?}");
    }
    assert!(last_err.abs() / oracle < 0.01, "final relative error {}", last_err / oracle);
}
