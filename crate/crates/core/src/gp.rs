//! Plain Gaussian process regression with a mean-zero prior.
//!
//! The predictor is `mean + r(x)^T (K + delta I)^{-1} (Y - mean)` where `mean`
//! is the sample mean of the responses when centering is on and zero
//! otherwise. The predictive variance is `sigma2_hat * P^2(x)` with
//! `P^2(x) = 1 - r(x)^T (K + delta I)^{-1} r(x)`.

use crate::benchmarks::UnitMap;
use crate::designs::Design;
use crate::error::{Error, Result};
use crate::kernels::MultivariateKernel;
use crate::linalg::{self, cholesky_with_jitter, dot, CholFactor, Matrix, DEFAULT_NUGGET};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpConfig {
    /// Starting diagonal nugget; the jitter ladder may raise it.
    pub nugget: f64,
    /// Subtract the sample mean of the responses before fitting.
    pub center: bool,
    /// Reject design rows outside `[0, 1]^d`. Projected inputs turn this off.
    pub require_unit_cube: bool,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            nugget: DEFAULT_NUGGET,
            center: true,
            require_unit_cube: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    design: Matrix,
    responses: Vec<f64>,
    offset: f64,
    config: GpConfig,
    kernel: MultivariateKernel,
    chol: CholFactor,
    alpha: Vec<f64>,
    sigma2_hat: f64,
    input_map: Option<UnitMap>,
}

/// Fits a GP on the rows of `x`.
pub fn fit(
    x: &Matrix,
    responses: &[f64],
    kernel: MultivariateKernel,
    config: GpConfig,
) -> Result<GpModel> {
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "GP fit needs at least 2 points, got {n}"
        )));
    }
    if responses.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: responses.len(),
        });
    }
    if x.cols() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: x.cols(),
        });
    }
    if responses.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("responses must be finite".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("design entries must be finite".into()));
    }
    if config.require_unit_cube {
        if let Some(v) = x.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "design entry {v} lies outside [0, 1]; rescale inputs or disable the unit-cube check"
            )));
        }
    }

    let offset = if config.center {
        responses.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let centered: Vec<f64> = responses.iter().map(|y| y - offset).collect();
    let gram = kernel.gram(x)?;
    let chol = cholesky_with_jitter(&gram, config.nugget)?;
    let alpha = linalg::solve_spd(&chol, &centered)?;
    let sigma2_hat = (dot(&centered, &alpha) / n as f64).max(0.0);

    Ok(GpModel {
        design: x.clone(),
        responses: responses.to_vec(),
        offset,
        config,
        kernel,
        chol,
        alpha,
        sigma2_hat,
        input_map: None,
    })
}

/// Fits on a [`Design`]; the unit-cube check is implied by the design itself.
pub fn fit_design(
    design: &Design,
    responses: &[f64],
    kernel: MultivariateKernel,
    config: GpConfig,
) -> Result<GpModel> {
    fit(design.points(), responses, kernel, config)
}

impl GpModel {
    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn kernel(&self) -> &MultivariateKernel {
        &self.kernel
    }

    pub fn config(&self) -> &GpConfig {
        &self.config
    }

    /// Value added back to every prediction (the training mean when centered).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Requested nugget; see [`GpModel::jitter_used`] for the applied one.
    pub fn nugget(&self) -> f64 {
        self.config.nugget
    }

    pub fn jitter_used(&self) -> f64 {
        self.chol.jitter_used()
    }

    pub fn chol(&self) -> &CholFactor {
        &self.chol
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sigma2_hat(&self) -> f64 {
        self.sigma2_hat
    }

    pub fn n(&self) -> usize {
        self.design.rows()
    }

    pub fn dim(&self) -> usize {
        self.design.cols()
    }

    pub fn input_map(&self) -> Option<&UnitMap> {
        self.input_map.as_ref()
    }

    /// Attaches the physical-to-unit map used to build the design.
    pub fn with_input_map(mut self, map: UnitMap) -> Result<Self> {
        if map.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: map.dim(),
            });
        }
        self.input_map = Some(map);
        Ok(self)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("prediction input must be finite".into()));
        }
        Ok(())
    }

    pub fn cross(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        self.kernel.cross(&self.design, x)
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        let r = self.cross(x)?;
        Ok(self.offset + dot(&r, &self.alpha))
    }

    pub fn predict_many(&self, xs: &Matrix) -> Result<Vec<f64>> {
        xs.row_iter().map(|x| self.predict_mean(x)).collect()
    }

    /// Maps a physical point through the stored input map, then predicts.
    pub fn predict_physical(&self, x: &[f64]) -> Result<f64> {
        match &self.input_map {
            Some(map) => self.predict_mean(&map.to_unit(x)?),
            None => self.predict_mean(x),
        }
    }

    /// Normalized predictive variance `P^2(x)`, clamped below at zero.
    pub fn power_sq(&self, x: &[f64]) -> Result<f64> {
        let r = self.cross(x)?;
        let q = linalg::quad_form(&self.chol, &r)?;
        Ok((1.0 - q).max(0.0))
    }

    /// `sigma2_hat * P^2(x)`.
    pub fn predictive_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.sigma2_hat * self.power_sq(x)?)
    }

    /// `Y^T (K + delta I)^{-1} Y + log det(K + delta I)` on the fitted
    /// (centered, if enabled) responses; lower is better.
    pub fn log_likelihood(&self) -> f64 {
        let centered: Vec<f64> = self.responses.iter().map(|y| y - self.offset).collect();
        dot(&centered, &self.alpha) + linalg::logdet(&self.chol)
    }
}
