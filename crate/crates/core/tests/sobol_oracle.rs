//! Sobol points against two independent references: frozen values from an
//! unscrambled Joe-Kuo generator, and the closed form
//! `x_n = XOR of v_k over the set bits of gray(n)`.

use sdfpp_core::sobol::SobolStream;

const SCALE: f64 = 4294967296.0;

/// `(n, 2^32 * x_n)` for the 8-dimensional sequence.
const FROZEN: [(usize, [u64; 8]); 15] = [
    (0, [0, 0, 0, 0, 0, 0, 0, 0]),
    (1, [2147483648; 8]),
    (2, [3221225472, 1073741824, 1073741824, 1073741824, 3221225472, 3221225472, 1073741824, 3221225472]),
    (3, [1073741824, 3221225472, 3221225472, 3221225472, 1073741824, 1073741824, 3221225472, 1073741824]),
    (4, [1610612736, 1610612736, 2684354560, 3758096384, 1610612736, 536870912, 1610612736, 3758096384]),
    (5, [3758096384, 3758096384, 536870912, 1610612736, 3758096384, 2684354560, 3758096384, 1610612736]),
    (6, [2684354560, 536870912, 3758096384, 2684354560, 2684354560, 3758096384, 536870912, 536870912]),
    (7, [536870912, 2684354560, 1610612736, 536870912, 536870912, 1610612736, 2684354560, 2684354560]),
    (8, [805306368, 1342177280, 4026531840, 1879048192, 2415919104, 1342177280, 1879048192, 4026531840]),
    (9, [2952790016, 3489660928, 1879048192, 4026531840, 268435456, 3489660928, 4026531840, 1879048192]),
    (10, [4026531840, 268435456, 2952790016, 805306368, 1342177280, 2415919104, 805306368, 805306368]),
    (11, [1879048192, 2415919104, 805306368, 2952790016, 3489660928, 268435456, 2952790016, 2952790016]),
    (100, [1778384896, 1107296256, 3321888768, 3120562176, 3791650816, 3187671040, 100663296, 2046820352]),
    (511, [8388608, 2155872256, 1753219072, 3632267264, 1518338048, 3766484992, 3196059648, 1988100096]),
    (1023, [4194304, 3233808384, 2629828608, 624951296, 801112064, 1883242496, 599785472, 2654994432]),
];

#[test]
fn matches_frozen_reference_points() {
    let pts: Vec<Vec<f64>> = SobolStream::new(8, 0).take(1024).collect();
    for (n, expected) in FROZEN {
        let got: Vec<u64> = pts[n].iter().map(|&x| (x * SCALE) as u64).collect();
        assert_eq!(got, expected, "point {n}");
    }
}

/// Polynomial degree `s`, coefficient bits `a` and initial `m_1..m_s`.
const POLYS: [(usize, u64, &[u64]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

/// Odd integers `m_k` from the recurrence
/// `m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}`.
fn m_sequence(dim: usize, count: usize) -> Vec<u64> {
    if dim == 0 {
        return vec![1; count];
    }
    let (s, a, init) = POLYS[dim - 1];
    let mut m: Vec<u64> = init.to_vec();
    while m.len() < count {
        let k = m.len();
        let mut next = m[k - s] ^ (m[k - s] << s);
        for j in 1..s {
            let bit = (a >> (s - 1 - j)) & 1;
            if bit == 1 {
                next ^= m[k - j] << j;
            }
        }
        m.push(next);
    }
    m
}

fn closed_form(n: u64, dim: usize) -> f64 {
    let m = m_sequence(dim, 32);
    let gray = n ^ (n >> 1);
    let mut x = 0u64;
    for (k, mk) in m.iter().enumerate() {
        if (gray >> k) & 1 == 1 {
            // v_{k+1} = m_{k+1} / 2^{k+1}, stored as a 32-bit fraction.
            x ^= mk << (31 - k);
        }
    }
    x as f64 / SCALE
}

#[test]
fn matches_gray_code_closed_form() {
    let pts: Vec<Vec<f64>> = SobolStream::new(8, 0).take(5000).collect();
    for (n, p) in pts.iter().enumerate() {
        for (dim, &x) in p.iter().enumerate() {
            assert_eq!(x, closed_form(n as u64, dim), "point {n}, dimension {dim}");
        }
    }
    let far: Vec<f64> = SobolStream::new(8, 123_456).next().unwrap();
    for (dim, &x) in far.iter().enumerate() {
        assert_eq!(x, closed_form(123_456, dim));
    }
}
