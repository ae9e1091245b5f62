//! Empirical convergence rates for additive and isotropic GP interpolation.
//!
//! For each design size `n` a randomized Latin hypercube design is drawn and
//! two quantities are measured on a tensor grid over `[0,1]^d`:
//! - the maximum of `P(x) = sqrt(1 - r(x)^T K^{-1} r(x))`, which depends
//!   only on the design;
//! - the sup-norm interpolation error `max |Z - Z_hat|`, averaged over
//!   prior sample paths drawn exactly through the joint Gram of design and grid.
//!
//! Slopes of the log-log curves are then fitted by least squares.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::designs::randomized_lhs;
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig, GpModel};
use crate::kernels::{Kernel1d, MultivariateKernel, Structure};
use crate::linalg::{cholesky_with_jitter, CholFactor, Matrix};
use crate::{derive_seed, seeded_rng};

/// Largest sample grid accepted for the joint factorization.
pub const MAX_GRID_POINTS: usize = 4096;

/// `per_dim^d` points, spacing `1 / (per_dim - 1)`, last coordinate fastest.
pub fn unit_grid(per_dim: usize, d: usize) -> Result<Matrix> {
    if per_dim < 2 || d == 0 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 points per dimension and d >= 1, got {per_dim}, {d}"
        )));
    }
    let total = per_dim
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidInput("grid too large".into()))?;
    let step = 1.0 / (per_dim - 1) as f64;
    Ok(Matrix::from_fn(total, d, |i, j| {
        let digit = (i / per_dim.pow((d - 1 - j) as u32)) % per_dim;
        digit as f64 * step
    }))
}

/// Draws from the zero-mean unit-variance prior at `sites`, one per row.
pub fn prior_draws(
    kernel: &MultivariateKernel,
    sites: &Matrix,
    draws: usize,
    seed: u64,
    jitter: f64,
) -> Result<Matrix> {
    let chol = joint_factor(kernel, sites, jitter)?;
    let mut rng = seeded_rng(seed);
    let m = sites.rows();
    let mut out = Matrix::zeros(draws, m);
    for r in 0..draws {
        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        out.row_mut(r).copy_from_slice(&lower_times(&chol, &z));
    }
    Ok(out)
}

fn joint_factor(kernel: &MultivariateKernel, sites: &Matrix, jitter: f64) -> Result<CholFactor> {
    let gram = kernel.gram(sites)?;
    cholesky_with_jitter(&gram, jitter).map_err(|e| match e {
        Error::Singular { .. } => Error::InvalidInput(format!(
            "joint Gram over {} sites could not be factored ({e}); reduce the grid",
            sites.rows()
        )),
        other => other,
    })
}

fn lower_times(chol: &CholFactor, z: &[f64]) -> Vec<f64> {
    let l = chol.lower();
    (0..z.len())
        .map(|i| l.row(i)[..=i].iter().zip(z).map(|(a, b)| a * b).sum())
        .collect()
}

/// Maximum of `P(x)` over `grid`.
pub fn max_power(model: &GpModel, grid: &Matrix) -> Result<f64> {
    let mut best = 0.0f64;
    for x in grid.row_iter() {
        best = best.max(model.power_sq(x)?.sqrt());
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    pub structure: Structure,
    pub nu: f64,
    pub phi: f64,
    pub d: usize,
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Points per dimension of the grid carrying the sample paths.
    pub sample_grid: usize,
    /// Points per dimension of the grid on which `P` is maximized.
    pub power_grid: usize,
    pub nugget: f64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            structure: Structure::Additive,
            nu: 2.5,
            phi: 1.0,
            d: 2,
            n_list: vec![10, 20, 40, 80],
            trials: 20,
            seed: 0,
            sample_grid: 32,
            power_grid: 64,
            nugget: 1e-12,
        }
    }
}

impl TheoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d > 3 {
            return Err(Error::InvalidInput(format!(
                "theory checks support 1 <= d <= 3, got {}",
                self.d
            )));
        }
        if self.n_list.len() < 2 || self.n_list.iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(
                "need at least two design sizes, each >= 2".into(),
            ));
        }
        for g in [self.sample_grid, self.power_grid] {
            let total = (g as f64).powi(self.d as i32);
            if g < 2 || total > MAX_GRID_POINTS as f64 {
                return Err(Error::InvalidInput(format!(
                    "grid of {g}^{} points exceeds {MAX_GRID_POINTS}; reduce the grid",
                    self.d
                )));
            }
        }
        Ok(())
    }

    fn kernel(&self) -> Result<MultivariateKernel> {
        MultivariateKernel::new(Kernel1d::matern(self.nu, self.phi)?, self.structure, self.d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub n: usize,
    /// Mean over trials of the grid maximum of `|Z - Z_hat|`; NaN with no trials.
    pub sup_error: f64,
    pub max_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub config: TheoryConfig,
    pub rows: Vec<CurveRow>,
}

pub fn sup_error_curve(cfg: &TheoryConfig) -> Result<Vec<CurveRow>> {
    cfg.validate()?;
    let kernel = cfg.kernel()?;
    let power_grid = unit_grid(cfg.power_grid, cfg.d)?;
    let sample_grid = unit_grid(cfg.sample_grid, cfg.d)?;
    let gp_cfg = GpConfig {
        nugget: cfg.nugget,
        center: false,
        require_unit_cube: true,
    };
    let mut rows = Vec::with_capacity(cfg.n_list.len());
    for &n in &cfg.n_list {
        let n_seed = derive_seed(cfg.seed, n as u64);
        let design = randomized_lhs(n, cfg.d, n_seed)?;
        let zeros = vec![0.0; n];
        let base = gp::fit_design(&design, &zeros, kernel, gp_cfg)?;
        let mp = max_power(&base, &power_grid)?;

        let sup_error = if cfg.trials == 0 {
            f64::NAN
        } else {
            let joint = design.extended(&sample_grid)?;
            let chol = joint_factor(&kernel, joint.points(), cfg.nugget)?;
            let errs: Vec<f64> = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = seeded_rng(derive_seed(n_seed, t as u64 + 1));
                    let z: Vec<f64> = (0..joint.n())
                        .map(|_| StandardNormal.sample(&mut rng))
                        .collect();
                    let path = lower_times(&chol, &z);
                    let model = gp::fit_design(&design, &path[..n], kernel, gp_cfg)?;
                    let mut worst = 0.0f64;
                    for (x, zv) in sample_grid.row_iter().zip(&path[n..]) {
                        worst = worst.max((model.predict_mean(x)? - zv).abs());
                    }
                    Ok(worst)
                })
                .collect::<Result<_>>()?;
            errs.iter().sum::<f64>() / errs.len() as f64
        };
        rows.push(CurveRow {
            n,
            sup_error,
            max_power: mp,
        });
    }
    Ok(rows)
}

pub fn run(cfg: &TheoryConfig) -> Result<Curve> {
    Ok(Curve {
        config: cfg.clone(),
        rows: sup_error_curve(cfg)?,
    })
}

impl Curve {
    pub fn power_fit(&self) -> Result<RateFit> {
        let (n, v): (Vec<f64>, Vec<f64>) =
            self.rows.iter().map(|r| (r.n as f64, r.max_power)).unzip();
        rate_fit(&n, &v)
    }

    pub fn error_fit(&self) -> Result<RateFit> {
        let (n, v): (Vec<f64>, Vec<f64>) =
            self.rows.iter().map(|r| (r.n as f64, r.sup_error)).unzip();
        rate_fit(&n, &v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("structure,nu,d,n,sup_error,max_power\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6e},{:.6e}",
                self.config.structure, self.config.nu, self.config.d, r.n, r.sup_error, r.max_power
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares line through `(ln n, ln err)`.
pub fn rate_fit(n: &[f64], err: &[f64]) -> Result<RateFit> {
    if n.len() != err.len() {
        return Err(Error::DimensionMismatch {
            expected: n.len(),
            got: err.len(),
        });
    }
    if n.len() < 2 {
        return Err(Error::InvalidInput(
            "rate fit needs at least two points".into(),
        ));
    }
    if n.iter().chain(err).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "rate fit needs finite positive values".into(),
        ));
    }
    let xs: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "rate fit needs distinct n values".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_fit_examples() {
        let n = [10.0, 20.0, 40.0, 80.0];
        let f = rate_fit(&n, &n.map(|v: f64| v.powi(-2))).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-10);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let c = rate_fit(&n, &[0.3; 4]).unwrap();
        assert!(c.slope.abs() < 1e-12);
        let g = rate_fit(&n, &n.map(|v: f64| 3.0 * v.powf(-1.5))).unwrap();
        assert!((g.slope + 1.5).abs() < 1e-10);
        assert!((g.intercept - 3.0f64.ln()).abs() < 1e-10);
        assert!(rate_fit(&[1.0], &[1.0]).is_err());
        assert!(rate_fit(&[1.0, 2.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = unit_grid(3, 2).unwrap();
        assert_eq!(g.rows(), 9);
        assert_eq!(g.row(0), &[0.0, 0.0]);
        assert_eq!(g.row(1), &[0.0, 0.5]);
        assert_eq!(g.row(8), &[1.0, 1.0]);
        assert!(unit_grid(1, 2).is_err());
    }

    #[test]
    fn prior_draw_covariance_matches_gram() {
        let k =
            MultivariateKernel::new(Kernel1d::matern(2.5, 1.0).unwrap(), Structure::Isotropic, 2)
                .unwrap();
        let sites = Matrix::from_rows(&[
            vec![0.1, 0.2],
            vec![0.4, 0.2],
            vec![0.5, 0.9],
            vec![0.8, 0.3],
            vec![0.15, 0.25],
        ])
        .unwrap();
        let draws = prior_draws(&k, &sites, 10_000, 5, 1e-10).unwrap();
        let gram = k.gram(&sites).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let cov: f64 = draws.row_iter().map(|r| r[a] * r[b]).sum::<f64>() / 10_000.0;
                assert!((cov - gram[(a, b)]).abs() <= 0.05, "{a},{b}: {cov}");
            }
        }
    }

    #[test]
    fn power_vanishes_at_design_sites() {
        let k =
            MultivariateKernel::new(Kernel1d::matern(2.5, 1.0).unwrap(), Structure::Additive, 2)
                .unwrap();
        let delta = 1e-6;
        for seed in 0..5 {
            let d = randomized_lhs(12, 2, seed).unwrap();
            let m = gp::fit_design(
                &d,
                &[0.0; 12],
                k,
                GpConfig {
                    nugget: delta,
                    ..Default::default()
                },
            )
            .unwrap();
            for x in d.points().row_iter() {
                assert!(m.power_sq(x).unwrap() <= 10.0 * delta);
            }
        }
    }

    #[test]
    fn max_power_is_deterministic() {
        let cfg = TheoryConfig {
            n_list: vec![8, 16],
            trials: 0,
            power_grid: 20,
            ..Default::default()
        };
        let a = sup_error_curve(&cfg).unwrap();
        let b = sup_error_curve(&cfg).unwrap();
        assert_eq!(a[0].max_power.to_bits(), b[0].max_power.to_bits());
        assert!(a[1].max_power < a[0].max_power);
    }

    #[test]
    fn config_limits() {
        let big = TheoryConfig {
            power_grid: 65,
            ..Default::default()
        };
        assert!(big.validate().is_err());
        let high = TheoryConfig {
            d: 4,
            ..Default::default()
        };
        assert!(high.validate().is_err());
        let short = TheoryConfig {
            n_list: vec![10],
            ..Default::default()
        };
        assert!(short.validate().is_err());
    }
}
