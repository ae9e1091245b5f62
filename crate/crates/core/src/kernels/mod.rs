//! One-dimensional correlation functions and their multivariate compositions.
//!
//! A [`Kernel1d`] is a stationary correlation of a scalar lag `t`:
//!
//! * Matern: `Phi(t) = s^nu K_nu(s) / (Gamma(nu) 2^(nu-1))` with `s = 2 sqrt(nu) phi |t|`;
//! * Gaussian: `Phi(t) = exp(-t^2 / (2 phi^2))`.
//!
//! A [`MultivariateKernel`] applies the base kernel to a difference vector
//! either through its Euclidean norm (isotropic), coordinatewise product, or
//! coordinatewise average (additive).

pub mod bessel;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Matern,
    Gaussian,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Matern => "matern",
            KernelFamily::Gaussian => "gaussian",
        })
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "matern" => Ok(KernelFamily::Matern),
            "gaussian" => Ok(KernelFamily::Gaussian),
            other => Err(Error::Parse(format!(
                "unknown kernel family `{other}` (expected matern or gaussian)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    Isotropic,
    Product,
    Additive,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Structure::Isotropic => "isotropic",
            Structure::Product => "product",
            Structure::Additive => "additive",
        })
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "isotropic" | "iso" => Ok(Structure::Isotropic),
            "product" | "pro" => Ok(Structure::Product),
            "additive" | "add" => Ok(Structure::Additive),
            other => Err(Error::Parse(format!(
                "unknown kernel structure `{other}` (expected isotropic, product or additive)"
            ))),
        }
    }
}

/// Matern orders with an exact `exp(-s) * polynomial(s)` form.
fn half_integer_matern(nu: f64, s: f64) -> Option<f64> {
    let poly = if nu == 0.5 {
        1.0
    } else if nu == 1.5 {
        1.0 + s
    } else if nu == 2.5 {
        1.0 + s + s * s / 3.0
    } else if nu == 3.5 {
        1.0 + s + 0.4 * s * s + s * s * s / 15.0
    } else {
        return None;
    };
    Some(poly * (-s).exp())
}

fn ln_matern_norm(nu: f64) -> f64 {
    statrs::function::gamma::ln_gamma(nu) + (nu - 1.0) * std::f64::consts::LN_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel1d {
    family: KernelFamily,
    nu: f64,
    phi: f64,
    // ln(Gamma(nu) 2^(nu-1)) for nu and nu - 1
    ln_norm: f64,
    ln_norm_shifted: f64,
}

/// `matern:NU:PHI` or `gaussian:PHI`.
impl fmt::Display for Kernel1d {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            KernelFamily::Matern => write!(f, "matern:{}:{}", self.nu, self.phi),
            KernelFamily::Gaussian => write!(f, "gaussian:{}", self.phi),
        }
    }
}

impl Kernel1d {
    pub fn matern(nu: f64, phi: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "Matern smoothness must be positive, got {nu}"
            )));
        }
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "scale must be positive, got {phi}"
            )));
        }
        Ok(Self {
            family: KernelFamily::Matern,
            nu,
            phi,
            ln_norm: ln_matern_norm(nu),
            ln_norm_shifted: if nu > 1.0 {
                ln_matern_norm(nu - 1.0)
            } else {
                f64::NAN
            },
        })
    }

    pub fn gaussian(phi: f64) -> Result<Self> {
        if !(phi > 0.0) || !phi.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "scale must be positive, got {phi}"
            )));
        }
        Ok(Self {
            family: KernelFamily::Gaussian,
            nu: f64::NAN,
            phi,
            ln_norm: f64::NAN,
            ln_norm_shifted: f64::NAN,
        })
    }

    /// `nu` is ignored for the Gaussian family.
    pub fn new(family: KernelFamily, nu: f64, phi: f64) -> Result<Self> {
        match family {
            KernelFamily::Matern => Self::matern(nu, phi),
            KernelFamily::Gaussian => Self::gaussian(phi),
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Smoothness; `NaN` for the Gaussian family.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn is_differentiable(&self) -> bool {
        match self.family {
            KernelFamily::Matern => self.nu > 1.0,
            KernelFamily::Gaussian => true,
        }
    }

    pub fn check_differentiable(&self) -> Result<()> {
        if self.is_differentiable() {
            Ok(())
        } else {
            Err(Error::UnsupportedSmoothness { nu: self.nu })
        }
    }

    /// Correlation at lag `t`, unchecked. Non-finite lags propagate as `NaN`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => (-t * t / (2.0 * self.phi * self.phi)).exp(),
            KernelFamily::Matern => {
                if t.is_nan() {
                    return f64::NAN;
                }
                let s = 2.0 * self.nu.sqrt() * self.phi * t.abs();
                matern_of_s(self.nu, self.ln_norm, s)
            }
        }
    }

    /// Derivative in the lag, unchecked; callers must have verified
    /// [`Kernel1d::is_differentiable`].
    ///
    /// For Matern, `d/dt Phi(t; nu, phi) = -(2 nu phi^2 t / (nu - 1)) Phi(sqrt(nu/(nu-1)) t; nu-1, phi)`.
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => {
                let p2 = self.phi * self.phi;
                -(t / p2) * (-t * t / (2.0 * p2)).exp()
            }
            KernelFamily::Matern => {
                if t == 0.0 {
                    return 0.0;
                }
                let nu = self.nu;
                // the shifted kernel sees the same s = 2 sqrt(nu) phi |t|
                let s = 2.0 * nu.sqrt() * self.phi * t.abs();
                let shifted = matern_of_s(nu - 1.0, self.ln_norm_shifted, s);
                -(2.0 * nu * self.phi * self.phi * t / (nu - 1.0)) * shifted
            }
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("kernel lag must be finite, got {t}")));
        }
        Ok(self.value(t))
    }

    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_differentiable()?;
        if !t.is_finite() {
            return Err(Error::Domain(format!("kernel lag must be finite, got {t}")));
        }
        Ok(self.slope(t))
    }
}

/// Matern correlation written in terms of `s = 2 sqrt(nu) phi |t|`.
#[inline]
fn matern_of_s(nu: f64, ln_norm: f64, s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    if let Some(v) = half_integer_matern(nu, s) {
        return v;
    }
    let v = (nu * s.ln() + bessel::ln_bessel_k(nu, s) - ln_norm).exp();
    if v.is_finite() {
        v.min(1.0)
    } else {
        // s underflowed far enough that K_nu overflowed; Phi -> 1
        1.0
    }
}

/// Sums after sorting so that the result does not depend on term order.
#[inline]
pub(crate) fn order_free_sum(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

#[inline]
pub(crate) fn order_free_product(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultivariateKernel {
    base: Kernel1d,
    structure: Structure,
    dim: usize,
}

impl MultivariateKernel {
    pub fn new(base: Kernel1d, structure: Structure, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be positive".into()));
        }
        Ok(Self {
            base,
            structure,
            dim,
        })
    }

    pub fn base(&self) -> &Kernel1d {
        &self.base
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Correlation of two points. Both slices must have length `dim`.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for v in [x, y] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::Domain("kernel inputs must be finite".into()));
        }
        let mut buf = vec![0.0; self.dim];
        Ok(self.value_with(x, y, &mut buf))
    }

    /// Unchecked evaluation using `buf` (length `dim`) as scratch space.
    #[inline]
    pub(crate) fn value_with(&self, x: &[f64], y: &[f64], buf: &mut [f64]) -> f64 {
        match self.structure {
            Structure::Isotropic => {
                let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                self.base.value(r2.sqrt())
            }
            Structure::Product => {
                for ((o, a), b) in buf.iter_mut().zip(x).zip(y) {
                    *o = self.base.value(a - b);
                }
                order_free_product(buf)
            }
            Structure::Additive => {
                for ((o, a), b) in buf.iter_mut().zip(x).zip(y) {
                    *o = self.base.value(a - b);
                }
                order_free_sum(buf) / self.dim as f64
            }
        }
    }

    /// Gram matrix `(Phi(x_i - x_j))_ij` over the rows of `x` (no nugget).
    pub fn gram(&self, x: &Matrix) -> Result<Matrix> {
        self.check_cols(x)?;
        let n = x.rows();
        let mut k = Matrix::zeros(n, n);
        let mut buf = vec![0.0; self.dim];
        for i in 0..n {
            k[(i, i)] = 1.0;
            for j in 0..i {
                let v = self.value_with(x.row(i), x.row(j), &mut buf);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }

    /// Cross-correlation vector `r(x) = (Phi(x - x_i))_i`.
    pub fn cross(&self, design: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
        self.check_cols(design)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut buf = vec![0.0; self.dim];
        Ok(design
            .row_iter()
            .map(|row| self.value_with(x, row, &mut buf))
            .collect())
    }

    fn check_cols(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.cols(),
            });
        }
        Ok(())
    }
}

/// Declarative kernel description as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub structure: Structure,
    pub nu: f64,
    pub phi: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            family: KernelFamily::Matern,
            structure: Structure::Additive,
            nu: 2.5,
            phi: 1.0,
        }
    }
}

impl KernelSpec {
    pub fn base(&self) -> Result<Kernel1d> {
        Kernel1d::new(self.family, self.nu, self.phi)
    }

    pub fn build(&self, dim: usize) -> Result<MultivariateKernel> {
        MultivariateKernel::new(self.base()?, self.structure, dim)
    }
}
