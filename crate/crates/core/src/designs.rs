//! Experimental designs on the unit cube and their projection diagnostics.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::seeded_rng;

/// Prime bases for Halton coordinates; `d` is capped at the table length.
pub const HALTON_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Default number of evaluation points for [`marginal_fill_distance`].
pub const DEFAULT_FILL_GRID: usize = 10_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    Halton,
    RandomizedLhs,
    UniformRandom,
    /// Points supplied by the caller.
    Provided,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Halton => "halton",
            Generator::RandomizedLhs => "lhs",
            Generator::UniformRandom => "uniform",
            Generator::Provided => "provided",
        })
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "halton" => Ok(Generator::Halton),
            "lhs" | "randomized-lhs" => Ok(Generator::RandomizedLhs),
            "uniform" | "random" => Ok(Generator::UniformRandom),
            "provided" => Ok(Generator::Provided),
            other => Err(Error::Parse(format!(
                "unknown design generator `{other}` (expected halton, lhs or uniform)"
            ))),
        }
    }
}

/// An `n x d` set of sites in `[0, 1]^d` together with how it was made.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    points: Matrix,
    generator: Generator,
    seed: Option<u64>,
}

impl Design {
    /// Wraps caller-supplied points; every entry must lie in `[0, 1]`.
    pub fn from_points(points: Matrix) -> Result<Self> {
        if points.rows() == 0 || points.cols() == 0 {
            return Err(Error::InvalidInput("design must be non-empty".into()));
        }
        if let Some(v) = points.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain(format!(
                "design entry {v} lies outside [0, 1]"
            )));
        }
        Ok(Self {
            points,
            generator: Generator::Provided,
            seed: None,
        })
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn into_points(self) -> Matrix {
        self.points
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.points.rows()
    }

    pub fn d(&self) -> usize {
        self.points.cols()
    }

    /// The `j`-th coordinate of every point.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.points.row_iter().map(|r| r[j]).collect()
    }

    /// Returns a design with `extra` appended; provenance becomes `Provided`.
    pub fn extended(&self, extra: &Matrix) -> Result<Self> {
        if extra.cols() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: extra.cols(),
            });
        }
        let mut data = self.points.as_slice().to_vec();
        data.extend_from_slice(extra.as_slice());
        Self::from_points(Matrix::from_vec(self.n() + extra.rows(), self.d(), data)?)
    }
}

fn check_size(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput(format!(
            "design size must be positive, got n = {n}, d = {d}"
        )));
    }
    Ok(())
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Halton points `1..=n` (no burn-in, no scrambling) in the first `d` prime bases.
pub fn halton(n: usize, d: usize) -> Result<Design> {
    check_size(n, d)?;
    if d > HALTON_PRIMES.len() {
        return Err(Error::InvalidInput(format!(
            "Halton designs support at most {} dimensions, got {d}",
            HALTON_PRIMES.len()
        )));
    }
    let points = Matrix::from_fn(n, d, |i, j| radical_inverse(i as u64 + 1, HALTON_PRIMES[j]));
    Ok(Design {
        points,
        generator: Generator::Halton,
        seed: None,
    })
}

/// Latin hypercube with each point drawn uniformly inside its cell.
pub fn randomized_lhs(n: usize, d: usize, seed: u64) -> Result<Design> {
    check_size(n, d)?;
    let mut rng = seeded_rng(seed);
    let mut points = Matrix::zeros(n, d);
    let mut perm: Vec<usize> = (0..n).collect();
    let nf = n as f64;
    for j in 0..d {
        perm.shuffle(&mut rng);
        for (i, &stratum) in perm.iter().enumerate() {
            // k + u can round up to k + 1 when u is within an ulp of 1
            let x = loop {
                let u: f64 = rng.random();
                let x = (stratum as f64 + u) / nf;
                if (x * nf).floor() as usize == stratum {
                    break x;
                }
            };
            points[(i, j)] = x;
        }
    }
    Ok(Design {
        points,
        generator: Generator::RandomizedLhs,
        seed: Some(seed),
    })
}

pub fn uniform_random(n: usize, d: usize, seed: u64) -> Result<Design> {
    check_size(n, d)?;
    let mut rng = seeded_rng(seed);
    let points = Matrix::from_fn(n, d, |_, _| rng.random::<f64>());
    Ok(Design {
        points,
        generator: Generator::UniformRandom,
        seed: Some(seed),
    })
}

/// Grid approximation of the `j`-th marginal fill distance
/// `sup_{t in [0,1]} min_k |t - x_k(j)|`, accurate to `1 / (2 (grid - 1))`.
pub fn marginal_fill_distance(design: &Design, j: usize, grid: usize) -> Result<f64> {
    if j >= design.d() {
        return Err(Error::DimensionMismatch {
            expected: design.d(),
            got: j + 1,
        });
    }
    if grid < 2 {
        return Err(Error::InvalidInput(
            "fill-distance grid needs at least 2 points".into(),
        ));
    }
    let mut coords = design.column(j);
    coords.sort_unstable_by(f64::total_cmp);
    let step = 1.0 / (grid - 1) as f64;
    let mut worst = 0.0f64;
    for g in 0..grid {
        let t = g as f64 * step;
        let idx = coords.partition_point(|&c| c < t);
        let mut best = f64::INFINITY;
        if idx < coords.len() {
            best = best.min(coords[idx] - t);
        }
        if idx > 0 {
            best = best.min(t - coords[idx - 1]);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Exact marginal fill distance from the sorted gaps of the `j`-th coordinate.
pub fn exact_marginal_fill_distance(design: &Design, j: usize) -> Result<f64> {
    if j >= design.d() {
        return Err(Error::DimensionMismatch {
            expected: design.d(),
            got: j + 1,
        });
    }
    let mut coords = design.column(j);
    coords.sort_unstable_by(f64::total_cmp);
    let first = coords[0];
    let last = 1.0 - coords[coords.len() - 1];
    let interior = coords
        .windows(2)
        .map(|w| 0.5 * (w[1] - w[0]))
        .fold(0.0f64, f64::max);
    Ok(first.max(last).max(interior))
}

/// `max_j h_j` using the exact computation.
pub fn max_marginal_fill_distance(design: &Design) -> f64 {
    (0..design.d())
        .map(|j| exact_marginal_fill_distance(design, j).expect("j in range"))
        .fold(0.0, f64::max)
}

/// Whether every point's coordinate in each dimension falls in a distinct
/// stratum `[(i-1)/n, i/n)`.
pub fn is_latin(design: &Design) -> bool {
    let n = design.n();
    (0..design.d()).all(|j| {
        let mut seen = vec![false; n];
        design.column(j).into_iter().all(|x| {
            let k = ((x * n as f64).floor() as usize).min(n - 1);
            !std::mem::replace(&mut seen[k], true)
        })
    })
}

/// No two points share a value in any single dimension.
pub fn distinct_per_dimension(design: &Design) -> bool {
    (0..design.d()).all(|j| {
        let mut c = design.column(j);
        c.sort_unstable_by(f64::total_cmp);
        c.windows(2).all(|w| w[0] != w[1])
    })
}

/// Within every point, the `d` coordinates are pairwise distinct.
pub fn distinct_within_points(design: &Design) -> bool {
    design.points().row_iter().all(|r| {
        let mut c = r.to_vec();
        c.sort_unstable_by(f64::total_cmp);
        c.windows(2).all(|w| w[0] != w[1])
    })
}

/// Moment vector `(1, x_1, ..., x_1^m, x_2, ..., x_d^m)` of length `m d + 1`.
pub fn moment_vector(x: &[f64], m: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(m * x.len() + 1);
    v.push(1.0);
    for &xi in x {
        let mut p = 1.0;
        for _ in 0..m {
            p *= xi;
            v.push(p);
        }
    }
    v
}

/// Whether the `(m d + 1) x n` moment matrix has full row rank.
///
/// Rank is measured by twice-orthogonalized Gram-Schmidt on the rows; a row
/// counts as independent when its residual exceeds `1e-10` times the largest
/// column norm.
pub fn regularity_order(design: &Design, m: usize) -> bool {
    let n = design.n();
    let rows = m * design.d() + 1;
    if n < rows {
        return false;
    }
    let cols: Vec<Vec<f64>> = design
        .points()
        .row_iter()
        .map(|x| moment_vector(x, m))
        .collect();
    let scale = cols.iter().map(|c| dot(c, c).sqrt()).fold(0.0f64, f64::max);
    let tol = 1e-10 * scale;

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for r in 0..rows {
        let mut v: Vec<f64> = cols.iter().map(|c| c[r]).collect();
        for _ in 0..2 {
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= p * bi);
            }
        }
        let nv = dot(&v, &v).sqrt();
        if nv <= tol {
            return false;
        }
        v.iter_mut().for_each(|vi| *vi /= nv);
        basis.push(v);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID_ERR: f64 = 1.0 / (2.0 * (DEFAULT_FILL_GRID - 1) as f64);

    #[test]
    fn halton_base_two() {
        let d = halton(4, 1).unwrap();
        assert_eq!(d.column(0), vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn halton_two_dims() {
        let d = halton(2, 2).unwrap();
        assert_eq!(d.points().row(0)[0], 0.5);
        assert!((d.points().row(0)[1] - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(d.points().row(1)[0], 0.25);
        assert!((d.points().row(1)[1] - 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn halton_open_interval_and_deterministic() {
        let a = halton(200, 25).unwrap();
        assert!(a.points().as_slice().iter().all(|&v| v > 0.0 && v < 1.0));
        assert_eq!(a, halton(200, 25).unwrap());
        assert!(halton(10, 26).is_err());
        assert!(halton(0, 2).is_err());
    }

    #[test]
    fn lhs_strata_and_reproducibility() {
        let a = randomized_lhs(37, 4, 5).unwrap();
        assert!(is_latin(&a));
        assert!(distinct_per_dimension(&a));
        assert_eq!(a, randomized_lhs(37, 4, 5).unwrap());
        assert_ne!(a, randomized_lhs(37, 4, 6).unwrap());
        assert_eq!(a.seed(), Some(5));
    }

    #[test]
    fn lhs_fill_distance_bound_over_seeds() {
        for seed in 0..100 {
            let d = randomized_lhs(20, 5, seed).unwrap();
            assert!(is_latin(&d));
            for j in 0..5 {
                assert!(exact_marginal_fill_distance(&d, j).unwrap() <= 2.0 / 20.0);
            }
        }
    }

    #[test]
    fn fill_distance_single_point() {
        let d = Design::from_points(Matrix::from_rows(&[vec![0.5]]).unwrap()).unwrap();
        let h = marginal_fill_distance(&d, 0, DEFAULT_FILL_GRID).unwrap();
        assert!((h - 0.5).abs() <= GRID_ERR);
        assert_eq!(exact_marginal_fill_distance(&d, 0).unwrap(), 0.5);
    }

    #[test]
    fn fill_distance_equispaced() {
        let n = 7;
        let rows: Vec<Vec<f64>> = (1..=n)
            .map(|i| vec![(2 * i - 1) as f64 / (2 * n) as f64])
            .collect();
        let d = Design::from_points(Matrix::from_rows(&rows).unwrap()).unwrap();
        let want = 1.0 / (2 * n) as f64;
        let h = marginal_fill_distance(&d, 0, DEFAULT_FILL_GRID).unwrap();
        assert!((h - want).abs() <= GRID_ERR);
        assert!((exact_marginal_fill_distance(&d, 0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn grid_and_exact_fill_distance_agree() {
        for seed in 0..20 {
            let d = uniform_random(15, 3, seed).unwrap();
            for j in 0..3 {
                let g = marginal_fill_distance(&d, j, DEFAULT_FILL_GRID).unwrap();
                let e = exact_marginal_fill_distance(&d, j).unwrap();
                assert!(g <= e + 1e-15 && e - g <= GRID_ERR, "{g} {e}");
            }
        }
    }

    #[test]
    fn fill_distance_monotone_when_adding_points() {
        let base = uniform_random(5, 2, 1).unwrap();
        let mut cur = base.clone();
        let mut prev = max_marginal_fill_distance(&cur);
        for seed in 0..10 {
            let extra = uniform_random(3, 2, 100 + seed).unwrap();
            cur = cur.extended(extra.points()).unwrap();
            let h = max_marginal_fill_distance(&cur);
            assert!(h <= prev);
            let hg = marginal_fill_distance(&cur, 0, 1001).unwrap();
            assert!(hg <= marginal_fill_distance(&base, 0, 1001).unwrap());
            prev = h;
        }
    }

    #[test]
    fn regularity_needs_enough_points() {
        let (m, d) = (2, 3);
        let small = uniform_random(m * d, d, 3).unwrap();
        assert!(!regularity_order(&small, m));
        let enough = uniform_random(m * d + 1, d, 3).unwrap();
        assert!(regularity_order(&enough, m));
    }

    #[test]
    fn regularity_random_designs_almost_surely() {
        for seed in 0..20 {
            let d = randomized_lhs(7, 2, seed).unwrap();
            assert!(regularity_order(&d, 3));
        }
    }

    #[test]
    fn regularity_fails_with_duplicate_point() {
        let (m, d) = (2, 2);
        let base = uniform_random(m * d, d, 8).unwrap();
        let dup = Matrix::from_rows(&[base.points().row(0).to_vec()]).unwrap();
        let with_dup = base.extended(&dup).unwrap();
        assert_eq!(with_dup.n(), m * d + 1);
        assert!(!regularity_order(&with_dup, m));
    }

    #[test]
    fn distinctness_diagnostics() {
        let d = Design::from_points(Matrix::from_rows(&[vec![0.1, 0.1], vec![0.2, 0.3]]).unwrap())
            .unwrap();
        assert!(!distinct_within_points(&d));
        assert!(distinct_per_dimension(&d));
        let d = Design::from_points(Matrix::from_rows(&[vec![0.1, 0.2], vec![0.1, 0.3]]).unwrap())
            .unwrap();
        assert!(distinct_within_points(&d));
        assert!(!distinct_per_dimension(&d));
    }

    #[test]
    fn provided_points_must_be_in_unit_cube() {
        assert!(Design::from_points(Matrix::from_rows(&[vec![1.5]]).unwrap()).is_err());
        assert!(Design::from_points(Matrix::zeros(0, 2)).is_err());
    }
}
