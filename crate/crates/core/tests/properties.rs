use ppgpr_core::linalg::{cholesky_with_jitter, logdet};
use ppgpr_core::{gp, GpConfig, Kernel1d, Matrix, MultivariateKernel, Structure};
use proptest::prelude::*;

/// log|det A| by Gaussian elimination with partial pivoting.
fn logdet_lu(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut acc = 0.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        m.swap(c, p);
        let piv = m[c][c];
        acc += piv.abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / piv;
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    acc
}

fn structure() -> impl Strategy<Value = Structure> {
    prop_oneof![
        Just(Structure::Isotropic),
        Just(Structure::Product),
        Just(Structure::Additive)
    ]
}

fn base_kernel() -> impl Strategy<Value = Kernel1d> {
    prop_oneof![
        (0.5f64..3.0, 1.0f64..3.0).prop_map(|(nu, phi)| Kernel1d::matern(nu, phi).unwrap()),
        (0.05f64..0.2).prop_map(|phi| Kernel1d::gaussian(phi).unwrap()),
    ]
}

/// Latin-hypercube points kept away from stratum edges, so every pair is at
/// least `0.5 / n` apart in each coordinate.
fn design(n: usize, d: usize) -> impl Strategy<Value = Matrix> {
    let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
    (
        proptest::collection::vec(perm, d),
        proptest::collection::vec(0.25f64..0.75, n * d),
    )
        .prop_map(move |(perms, u)| {
            Matrix::from_fn(n, d, |i, j| (perms[j][i] as f64 + u[i * d + j]) / n as f64)
        })
}

/// `sum_k a_k sin(b_k . x + c_k)` at the design rows, or its coordinatewise
/// split `sum_k sum_j a_k sin(b_kj x_j + c_k)` for the additive kernel, whose
/// span holds additive functions only.
fn responses(x: &Matrix, waves: &[(f64, Vec<f64>, f64)], s: Structure) -> Vec<f64> {
    x.row_iter()
        .map(|r| {
            waves
                .iter()
                .map(|(a, b, c)| match s {
                    Structure::Additive => {
                        a * b.iter().zip(r).map(|(u, v)| (u * v + c).sin()).sum::<f64>()
                    }
                    _ => a * (b.iter().zip(r).map(|(u, v)| u * v).sum::<f64>() + c).sin(),
                })
                .sum()
        })
        .collect()
}

fn case() -> impl Strategy<Value = (Matrix, Vec<f64>, Kernel1d, Structure)> {
    (2usize..51, 1usize..4)
        .prop_flat_map(|(n, d)| {
            let wave = (
                -10.0f64..10.0,
                proptest::collection::vec(-4.0f64..4.0, d),
                0.0f64..std::f64::consts::TAU,
            );
            (
                design(n, d),
                proptest::collection::vec(wave, 1..4),
                base_kernel(),
                structure(),
            )
        })
        .prop_map(|(x, waves, k, s)| {
            let y = responses(&x, &waves, s);
            (x, y, k, s)
        })
}

const DELTA: f64 = 1e-6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gram_factors_with_jitter((x, _y, k, s) in case()) {
        let mk = MultivariateKernel::new(k, s, x.cols()).unwrap();
        let g = mk.gram(&x).unwrap();
        let f = cholesky_with_jitter(&g, DELTA).unwrap();
        prop_assert!(f.jitter_used() <= 1e-2);
        let l = f.lower();
        prop_assert!((0..x.rows()).all(|i| l[(i, i)] > 0.0));
    }

    #[test]
    fn logdet_matches_elimination((x, _y, k, s) in case()) {
        let mk = MultivariateKernel::new(k, s, x.cols()).unwrap();
        let g = mk.gram(&x).unwrap();
        let f = cholesky_with_jitter(&g, DELTA).unwrap();
        let oracle = logdet_lu(&g.add_diag(f.jitter_used()));
        prop_assert!((logdet(&f) - oracle).abs() <= 1e-8 * oracle.abs().max(1.0),
            "{} vs {}", logdet(&f), oracle);
    }

    #[test]
    fn interpolates_training_responses((x, y, k, s) in case(), center in any::<bool>()) {
        let mk = MultivariateKernel::new(k, s, x.cols()).unwrap();
        let cfg = GpConfig { nugget: DELTA, center, require_unit_cube: true };
        let m = gp::fit(&x, &y, mk, cfg).unwrap();
        // the bound is stated for the base nugget; a raised jitter smooths instead
        prop_assume!(m.jitter_used() <= DELTA);
        let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (i, yi) in y.iter().enumerate() {
            let p = m.predict_mean(x.row(i)).unwrap();
            prop_assert!((p - yi).abs() <= 1e-3 * scale.max(1e-12), "{p} vs {yi}");
        }
    }

    #[test]
    fn power_function_bounds(
        (x, y, k, s) in case(),
        probe in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        let d = x.cols();
        let mk = MultivariateKernel::new(k, s, d).unwrap();
        let m = gp::fit(&x, &y, mk, GpConfig::default()).unwrap();
        let delta = m.nugget() + m.jitter_used();
        let p2 = m.power_sq(&probe[..d]).unwrap();
        prop_assert!(p2 >= 0.0 && p2 <= 1.0 + 10.0 * delta, "{p2}");
        for i in 0..x.rows() {
            let p2 = m.power_sq(x.row(i)).unwrap();
            prop_assert!(p2 <= 10.0 * delta.max(1e-12), "{p2} at site {i}");
        }
    }
}
