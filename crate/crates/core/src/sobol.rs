//! Sobol low-discrepancy sequence in up to eight dimensions.
//!
//! Points are emitted in Gray-code order using the Joe-Kuo direction numbers
//! (new-joe-kuo-6.21201). Point 0 is the origin.

pub const MAX_DIMENSION: usize = 8;

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=8; dimension 1 uses `m_k = 1`.
const DIRECTION_TABLE: [(u32, u32, &[u32]); MAX_DIMENSION - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

fn direction_numbers(dim_index: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim_index == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (31 - k);
        }
        return v;
    }
    let (s, a, m) = DIRECTION_TABLE[dim_index - 1];
    let s = s as usize;
    for k in 0..s {
        v[k] = m[k] << (31 - k);
    }
    for k in s..BITS {
        let mut x = v[k - s] ^ (v[k - s] >> s);
        for j in 0..s - 1 {
            if (a >> j) & 1 == 1 {
                x ^= v[k - s + 1 + j];
            }
        }
        v[k] = x;
    }
    v
}

/// A stateful Sobol generator.
#[derive(Debug, Clone)]
pub struct SobolStream {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    next_index: u64,
    skip: u64,
}

impl SobolStream {
    /// Panics if `dimension` is outside `1..=8`.
    pub fn new(dimension: usize, skip: u64) -> Self {
        assert!(
            (1..=MAX_DIMENSION).contains(&dimension),
            "Sobol dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
        );
        let mut s = SobolStream {
            directions: (0..dimension).map(direction_numbers).collect(),
            state: vec![0; dimension],
            next_index: 0,
            skip,
        };
        for _ in 0..skip {
            s.advance();
        }
        s
    }

    pub fn dimension(&self) -> usize {
        self.state.len()
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn skip(&self) -> u64 {
        self.skip
    }

    fn advance(&mut self) -> Option<()> {
        if self.next_index >= 1 << BITS {
            return None;
        }
        if self.next_index > 0 {
            let c = (self.next_index - 1).trailing_ones() as usize;
            for (x, v) in self.state.iter_mut().zip(&self.directions) {
                *x ^= v[c];
            }
        }
        self.next_index += 1;
        Some(())
    }

    /// Writes the next point into `out`. Returns `false` once the 2^32 points
    /// of the sequence are exhausted.
    pub fn next_into(&mut self, out: &mut [f64]) -> bool {
        debug_assert_eq!(out.len(), self.dimension());
        if self.advance().is_none() {
            return false;
        }
        const SCALE: f64 = 1.0 / (1u64 << BITS) as f64;
        for (o, &x) in out.iter_mut().zip(&self.state) {
            *o = x as f64 * SCALE;
        }
        true
    }

    /// The next `n` points, row-major.
    pub fn take_block(&mut self, n: usize) -> Vec<f64> {
        let d = self.dimension();
        let mut out = vec![0.0; n * d];
        for chunk in out.chunks_exact_mut(d) {
            assert!(self.next_into(chunk), "Sobol sequence exhausted");
        }
        out
    }
}

impl Iterator for SobolStream {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let mut p = vec![0.0; self.dimension()];
        self.next_into(&mut p).then_some(p)
    }
}

/// Next point of the stream, or `None` when exhausted.
pub fn sobol_next(stream: &mut SobolStream) -> Option<Vec<f64>> {
    stream.next()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_two_dims() {
        let pts: Vec<_> = SobolStream::new(2, 0).take(3).collect();
        assert_eq!(pts, vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![0.75, 0.25]]);
    }

    #[test]
    fn one_dim_second_point() {
        let mut s = SobolStream::new(1, 1);
        assert_eq!(sobol_next(&mut s), Some(vec![0.5]));
    }

    #[test]
    fn origin_for_every_dimension() {
        for d in 1..=MAX_DIMENSION {
            assert_eq!(SobolStream::new(d, 0).next().unwrap(), vec![0.0; d]);
        }
    }

    #[test]
    fn points_stay_in_unit_cube() {
        for p in SobolStream::new(8, 0).take(4096) {
            assert!(p.iter().all(|&x| (0.0..1.0).contains(&x)));
        }
    }

    #[test]
    fn first_power_of_two_block_is_stratified() {
        // Every dimension of the first 2^m points hits each 1/2^m cell once.
        let n = 256;
        let pts: Vec<_> = SobolStream::new(8, 0).take(n).collect();
        for k in 0..8 {
            let mut cells: Vec<usize> = pts.iter().map(|p| (p[k] * n as f64) as usize).collect();
            cells.sort_unstable();
            assert_eq!(cells, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn skip_discards_prefix() {
        let all: Vec<_> = SobolStream::new(3, 0).take(10).collect();
        let skipped: Vec<_> = SobolStream::new(3, 4).take(6).collect();
        assert_eq!(&all[4..], &skipped[..]);
    }
}
