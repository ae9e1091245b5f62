//! Test functions for computer-experiment surrogates.
//!
//! Physical-space definitions:
//!
//! * Borehole (d = 8), inputs `(r_w, r, T_u, H_u, T_l, H_l, L, K_w)`:
//!   `2 pi T_u (H_u - H_l) / (ln(r/r_w) [1 + 2 L T_u / (ln(r/r_w) r_w^2 K_w) + T_u/T_l])`.
//! * OTL circuit (d = 6), inputs `(R_b1, R_b2, R_f, R_c1, R_c2, beta)`:
//!   `V_b1 = 12 R_b2 / (R_b1 + R_b2)`, `D = beta (R_c2 + 9) + R_f`,
//!   `V_m = (V_b1 + 0.74) beta (R_c2 + 9) / D + 11.35 R_f / D + 0.74 R_f beta (R_c2 + 9) / (D R_c1)`.
//! * Wing weight (d = 10), inputs `(S_w, W_fw, A, Lambda [deg], q, lambda, t_c, N_z, W_dg, W_p)`:
//!   `0.036 S_w^0.758 W_fw^0.0035 (A / cos^2 Lambda)^0.6 q^0.006 lambda^0.04
//!    (100 t_c / cos Lambda)^-0.3 (N_z W_dg)^0.49 + S_w W_p`.
//! * `xy + x^2` on `[-1, 1]^2`, a simple non-additive surface.
//! * `sum_j sin(2 pi x_j)` on `[0, 1]^d`, exactly additive.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const BOREHOLE_RANGES: [(f64, f64); 8] = [
    (0.05, 0.15),
    (100.0, 50_000.0),
    (63_070.0, 115_600.0),
    (900.0, 1_110.0),
    (63.1, 116.0),
    (700.0, 820.0),
    (1_120.0, 1_680.0),
    (9_855.0, 12_045.0),
];

const OTL_RANGES: [(f64, f64); 6] = [
    (50.0, 150.0),
    (25.0, 70.0),
    (0.5, 3.0),
    (1.2, 2.5),
    (0.25, 1.2),
    (50.0, 300.0),
];

const WING_RANGES: [(f64, f64); 10] = [
    (150.0, 200.0),
    (220.0, 300.0),
    (6.0, 10.0),
    (-10.0, 10.0),
    (16.0, 45.0),
    (0.5, 1.0),
    (0.08, 0.18),
    (2.5, 6.0),
    (1_700.0, 2_500.0),
    (0.025, 0.08),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Borehole,
    OtlCircuit,
    WingWeight,
    XyPlusX2,
    AdditiveSine { dim: usize },
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Benchmark::Borehole => f.write_str("borehole"),
            Benchmark::OtlCircuit => f.write_str("otl"),
            Benchmark::WingWeight => f.write_str("wingweight"),
            Benchmark::XyPlusX2 => f.write_str("xy-plus-x2"),
            Benchmark::AdditiveSine { dim } => write!(f, "additive-sine{dim}"),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    /// Accepts the display names; `additive-sine` alone means five dimensions.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase();
        match s.as_str() {
            "borehole" => return Ok(Benchmark::Borehole),
            "otl" | "otl-circuit" => return Ok(Benchmark::OtlCircuit),
            "wingweight" | "wing-weight" => return Ok(Benchmark::WingWeight),
            "xy-plus-x2" | "xy+x2" => return Ok(Benchmark::XyPlusX2),
            "additive-sine" => return Ok(Benchmark::AdditiveSine { dim: 5 }),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("additive-sine") {
            if let Ok(dim) = rest.parse::<usize>() {
                if dim > 0 {
                    return Ok(Benchmark::AdditiveSine { dim });
                }
            }
        }
        Err(Error::Parse(format!(
            "unknown benchmark `{s}` (expected borehole, otl, wingweight, xy-plus-x2 or additive-sine<d>)"
        )))
    }
}

impl Benchmark {
    pub fn dim(&self) -> usize {
        match self {
            Benchmark::Borehole => 8,
            Benchmark::OtlCircuit => 6,
            Benchmark::WingWeight => 10,
            Benchmark::XyPlusX2 => 2,
            Benchmark::AdditiveSine { dim } => *dim,
        }
    }

    pub fn input_names(&self) -> Vec<String> {
        let fixed: &[&str] = match self {
            Benchmark::Borehole => &["rw", "r", "Tu", "Hu", "Tl", "Hl", "L", "Kw"],
            Benchmark::OtlCircuit => &["Rb1", "Rb2", "Rf", "Rc1", "Rc2", "beta"],
            Benchmark::WingWeight => &[
                "Sw", "Wfw", "A", "Lambda", "q", "lambda", "tc", "Nz", "Wdg", "Wp",
            ],
            Benchmark::XyPlusX2 => &["x", "y"],
            Benchmark::AdditiveSine { dim } => {
                return (1..=*dim).map(|j| format!("x{j}")).collect();
            }
        };
        fixed.iter().map(|s| s.to_string()).collect()
    }

    /// Physical input box as `(lo, hi)` pairs.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        match self {
            Benchmark::Borehole => BOREHOLE_RANGES.to_vec(),
            Benchmark::OtlCircuit => OTL_RANGES.to_vec(),
            Benchmark::WingWeight => WING_RANGES.to_vec(),
            Benchmark::XyPlusX2 => vec![(-1.0, 1.0); 2],
            Benchmark::AdditiveSine { dim } => vec![(0.0, 1.0); *dim],
        }
    }

    pub fn unit_map(&self) -> UnitMap {
        UnitMap::new(self.ranges()).expect("benchmark ranges are ordered")
    }

    /// Evaluates at a physical point strictly inside the open input box.
    pub fn eval_physical(&self, x: &[f64]) -> Result<f64> {
        self.check(x, true)?;
        Ok(self.formula(x))
    }

    /// Like [`Benchmark::eval_physical`] but accepts boundary values.
    pub fn eval_physical_permissive(&self, x: &[f64]) -> Result<f64> {
        self.check(x, false)?;
        Ok(self.formula(x))
    }

    /// Evaluates at `u` in `[0, 1]^d` through the affine range map.
    pub fn eval_unit(&self, u: &[f64]) -> Result<f64> {
        let x = self.unit_map().to_physical(u)?;
        self.eval_physical_permissive(&x)
    }

    /// Evaluates every row of a unit-cube matrix.
    pub fn eval_unit_rows(&self, u: &Matrix) -> Result<Vec<f64>> {
        u.row_iter().map(|r| self.eval_unit(r)).collect()
    }

    fn check(&self, x: &[f64], strict: bool) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let names = self.input_names();
        for (j, (&v, (lo, hi))) in x.iter().zip(self.ranges()).enumerate() {
            let ok = if strict {
                v > lo && v < hi
            } else {
                v >= lo && v <= hi
            };
            if !ok {
                return Err(Error::Domain(format!(
                    "{self}: input {} = {v} is outside ({lo}, {hi})",
                    names[j]
                )));
            }
        }
        Ok(())
    }

    fn formula(&self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Borehole => {
                let (rw, r, tu, hu, tl, hl, l, kw) =
                    (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
                let lr = (r / rw).ln();
                2.0 * PI * tu * (hu - hl)
                    / (lr * (1.0 + 2.0 * l * tu / (lr * rw * rw * kw) + tu / tl))
            }
            Benchmark::OtlCircuit => {
                let (rb1, rb2, rf, rc1, rc2, beta) = (x[0], x[1], x[2], x[3], x[4], x[5]);
                let vb1 = 12.0 * rb2 / (rb1 + rb2);
                let br = beta * (rc2 + 9.0);
                let den = br + rf;
                (vb1 + 0.74) * br / den + 11.35 * rf / den + 0.74 * rf * br / (den * rc1)
            }
            Benchmark::WingWeight => {
                let (sw, wfw, a, lam_deg, q, taper, tc, nz, wdg, wp) =
                    (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8], x[9]);
                let c = lam_deg.to_radians().cos();
                0.036
                    * sw.powf(0.758)
                    * wfw.powf(0.0035)
                    * (a / (c * c)).powf(0.6)
                    * q.powf(0.006)
                    * taper.powf(0.04)
                    * (100.0 * tc / c).powf(-0.3)
                    * (nz * wdg).powf(0.49)
                    + sw * wp
            }
            Benchmark::XyPlusX2 => x[0] * x[1] + x[0] * x[0],
            Benchmark::AdditiveSine { .. } => x.iter().map(|v| (2.0 * PI * v).sin()).sum(),
        }
    }
}

/// Affine map between a physical box and the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitMap {
    ranges: Vec<(f64, f64)>,
}

impl UnitMap {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((lo, hi)) = ranges.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(Error::InvalidInput(format!(
                "range ({lo}, {hi}) is not strictly ordered"
            )));
        }
        Ok(Self { ranges })
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn to_physical(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok(u.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| lo + v * (hi - lo))
            .collect())
    }

    pub fn to_unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        Ok(x.iter()
            .zip(&self.ranges)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect())
    }

    pub fn rows_to_physical(&self, u: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(u.rows(), u.cols());
        for i in 0..u.rows() {
            out.row_mut(i).copy_from_slice(&self.to_physical(u.row(i))?);
        }
        Ok(out)
    }

    pub fn rows_to_unit(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(x.rows(), x.cols());
        for i in 0..x.rows() {
            out.row_mut(i).copy_from_slice(&self.to_unit(x.row(i))?);
        }
        Ok(out)
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }
}
