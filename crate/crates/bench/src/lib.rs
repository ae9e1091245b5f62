//! Fixtures shared by the criterion benches in `benches/`.

use ppgpr_core::designs::halton;
use ppgpr_core::ppgpr::init_weights;
use ppgpr_core::{Benchmark, Matrix};

/// Halton design of size `n` for `f`, its responses, and seeded `M x d` weights.
pub struct Problem {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub w: Matrix,
}

pub fn problem(f: Benchmark, n: usize, m: usize) -> Problem {
    let x = halton(n, f.dim()).expect("valid size").into_points();
    let y = f.eval_unit_rows(&x).expect("unit-cube design");
    let w = init_weights(f.dim(), m, 0).expect("positive sizes");
    Problem { x, y, w }
}

/// Evenly spaced lags on `[0, max)`.
pub fn lags(count: usize, max: f64) -> Vec<f64> {
    (0..count).map(|i| i as f64 * max / count as f64).collect()
}
