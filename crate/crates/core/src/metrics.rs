//! Prediction error metrics, the train/test experiment runner, and k-fold
//! cross-validation over PPGPR hyperparameters.
//!
//! The headline metric is the relative RMSE
//! `sqrt(mean(((pred - truth) / truth)^2))`; the absolute RMSE is reported
//! alongside since the relative one is undefined whenever a truth value is 0.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::benchmarks::Benchmark;
use crate::designs::{halton, uniform_random};
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig};
use crate::kernels::{Kernel1d, MultivariateKernel, Structure};
use crate::linalg::Matrix;
use crate::ppgpr::{self, default_nodes, StopReason, TrainConfig};
use crate::{derive_seed, seeded_rng};

const TEST_STREAM: u64 = 1;
const FOLD_STREAM: u64 = 2;
const INIT_STREAM: u64 = 3;

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("RMSE of an empty set".into()));
    }
    Ok(())
}

/// Relative RMSE. Fails with [`Error::MetricUndefined`] on any zero truth.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    if let Some(index) = truth.iter().position(|t| *t == 0.0) {
        return Err(Error::MetricUndefined { index });
    }
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| ((p - t) / t).powi(2))
        .sum();
    Ok((sum / truth.len() as f64).sqrt())
}

pub fn abs_rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let sum: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sum / truth.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Metric {
    #[default]
    Relative,
    Absolute,
}

impl Metric {
    pub fn eval(&self, pred: &[f64], truth: &[f64]) -> Result<f64> {
        match self {
            Metric::Relative => rmse(pred, truth),
            Metric::Absolute => abs_rmse(pred, truth),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Relative => "relative",
            Metric::Absolute => "absolute",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relative" | "rel" => Ok(Metric::Relative),
            "absolute" | "abs" => Ok(Metric::Absolute),
            other => Err(Error::Parse(format!(
                "unknown metric '{other}' (expected relative or absolute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GpIso,
    GpProduct,
    GpAdditive,
    Ppgpr,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::GpIso,
        Method::GpProduct,
        Method::GpAdditive,
        Method::Ppgpr,
    ];

    /// Kernel structure for the plain GP methods.
    pub fn structure(&self) -> Option<Structure> {
        match self {
            Method::GpIso => Some(Structure::Isotropic),
            Method::GpProduct => Some(Structure::Product),
            Method::GpAdditive => Some(Structure::Additive),
            Method::Ppgpr => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::GpIso => "gp-iso",
            Method::GpProduct => "gp-pro",
            Method::GpAdditive => "gp-add",
            Method::Ppgpr => "ppgpr",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gp-iso" | "iso" | "isotropic" => Ok(Method::GpIso),
            "gp-pro" | "gp-product" | "pro" | "product" => Ok(Method::GpProduct),
            "gp-add" | "gp-additive" | "add" | "additive" => Ok(Method::GpAdditive),
            "ppgpr" => Ok(Method::Ppgpr),
            other => Err(Error::Parse(format!(
                "unknown method '{other}' (expected gp-iso, gp-pro, gp-add or ppgpr)"
            ))),
        }
    }
}

/// Node counts used for the published comparison; other functions fall back
/// to [`default_nodes`].
pub fn reference_nodes(function: Benchmark, n_train: usize) -> usize {
    match function {
        Benchmark::OtlCircuit => 42,
        Benchmark::Borehole | Benchmark::WingWeight => 35,
        _ => default_nodes(n_train, function.dim()),
    }
}

/// Training design, responses and a seeded uniform test set in the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub x_test: Matrix,
    pub y_test: Vec<f64>,
}

pub fn experiment_data(
    function: Benchmark,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<ExperimentData> {
    let d = function.dim();
    let x_train = halton(n_train, d)?.into_points();
    let x_test = uniform_random(n_test, d, derive_seed(seed, TEST_STREAM))?.into_points();
    Ok(ExperimentData {
        y_train: function.eval_unit_rows(&x_train)?,
        y_test: function.eval_unit_rows(&x_test)?,
        x_train,
        x_test,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub function: Benchmark,
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub kernel: Kernel1d,
    /// PPGPR training settings; `seed` is replaced by one derived from `seed`.
    pub train: TrainConfig,
    /// When set, PPGPR hyperparameters come from cross-validation instead of `train`.
    pub tune: Option<TuneGrid>,
    pub center: bool,
    pub nugget: f64,
    pub seed: u64,
}

impl ExperimentSpec {
    /// `5 d` Halton training points, 500 test points, Matérn 2.5 with phi = 1,
    /// 150 epochs at a fixed step.
    pub fn new(function: Benchmark, method: Method, seed: u64) -> Self {
        let n_train = 5 * function.dim();
        let kernel = Kernel1d::matern(2.5, 1.0).expect("valid kernel");
        let train = TrainConfig {
            epochs: 150,
            early_stop_rel: 0.0,
            ..TrainConfig::new(reference_nodes(function, n_train))
        };
        Self {
            function,
            method,
            n_train,
            n_test: 500,
            kernel,
            train,
            tune: None,
            center: true,
            nugget: train.nugget,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpgprSummary {
    pub eta: f64,
    pub nodes: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub function: Benchmark,
    pub method: Method,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub kernel: Kernel1d,
    pub ppgpr: Option<PpgprSummary>,
    /// Relative RMSE; `None` when some test truth is exactly zero.
    pub rmse: Option<f64>,
    pub abs_rmse: f64,
    pub centered: bool,
    pub wall_ms: f64,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let data = experiment_data(spec.function, spec.n_train, spec.n_test, spec.seed)?;
    run_on(spec, &data)
}

/// Like [`run_experiment`] on caller-supplied data.
pub fn run_on(spec: &ExperimentSpec, data: &ExperimentData) -> Result<ExperimentReport> {
    let start = Instant::now();
    let d = data.x_train.cols();
    let (pred, kernel, summary) = match spec.method.structure() {
        Some(structure) => {
            let model = gp::fit(
                &data.x_train,
                &data.y_train,
                MultivariateKernel::new(spec.kernel, structure, d)?,
                GpConfig {
                    nugget: spec.nugget,
                    center: spec.center,
                    require_unit_cube: true,
                },
            )?;
            (model.predict_many(&data.x_test)?, spec.kernel, None)
        }
        None => {
            let mut cfg = TrainConfig {
                seed: derive_seed(spec.seed, INIT_STREAM),
                nugget: spec.nugget,
                center: spec.center,
                ..spec.train
            };
            let mut kernel = spec.kernel;
            if let Some(grid) = &spec.tune {
                let cv = cross_validate(
                    &data.x_train,
                    &data.y_train,
                    grid,
                    &cfg,
                    derive_seed(spec.seed, FOLD_STREAM),
                )?;
                cfg.eta = cv.best.eta;
                cfg.nodes = cv.best.nodes;
                kernel = cv.best.kernel;
            }
            let model = ppgpr::train(&data.x_train, &data.y_train, &kernel, &cfg)?;
            let summary = PpgprSummary {
                eta: cfg.eta,
                nodes: cfg.nodes,
                epochs: model.trace().len() - 1,
                best_epoch: model.best_epoch(),
                stop: model.stop_reason(),
            };
            (model.predict_many(&data.x_test)?, kernel, Some(summary))
        }
    };
    let rel = match rmse(&pred, &data.y_test) {
        Ok(v) => Some(v),
        Err(Error::MetricUndefined { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ExperimentReport {
        function: spec.function,
        method: spec.method,
        n_train: data.x_train.rows(),
        n_test: data.x_test.rows(),
        seed: spec.seed,
        kernel,
        ppgpr: summary,
        rmse: rel,
        abs_rmse: abs_rmse(&pred, &data.y_test)?,
        centered: spec.center,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

pub const BENCH_HEADER: &str = "function,method,centered,n_train,n_test,seed,family,nu,phi,nodes,eta,epochs,best_epoch,stop,rmse,abs_rmse";

/// CSV body, one row per report. Wall-clock time is left out so identical
/// runs render identically.
/// Empty for the Gaussian family, which has no smoothness parameter.
fn nu_field(k: &Kernel1d) -> String {
    match k.family() {
        crate::kernels::KernelFamily::Matern => format!("{}", k.nu()),
        crate::kernels::KernelFamily::Gaussian => String::new(),
    }
}

pub fn render_bench_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in reports {
        let k = &r.kernel;
        let nu = nu_field(k);
        let (nodes, eta, epochs, best, stop) = match &r.ppgpr {
            Some(p) => (
                p.nodes.to_string(),
                format!("{:e}", p.eta),
                p.epochs.to_string(),
                p.best_epoch.to_string(),
                p.stop.to_string(),
            ),
            None => Default::default(),
        };
        let rel = r
            .rmse
            .map(|v| format!("{v:.6e}"))
            .unwrap_or_else(|| "NA".into());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6e}",
            r.function,
            r.method,
            r.centered,
            r.n_train,
            r.n_test,
            r.seed,
            k.family(),
            nu,
            k.phi(),
            nodes,
            eta,
            epochs,
            best,
            stop,
            rel,
            r.abs_rmse
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneGrid {
    pub etas: Vec<f64>,
    pub nodes: Vec<usize>,
    pub kernels: Vec<Kernel1d>,
    pub folds: usize,
    pub metric: Metric,
}

/// One candidate in grid order (kernel, then nodes, then eta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub kernel_index: usize,
    pub eta_index: usize,
    pub kernel: Kernel1d,
    pub nodes: usize,
    pub eta: f64,
}

impl TuneGrid {
    pub fn new(etas: Vec<f64>, nodes: Vec<usize>, kernels: Vec<Kernel1d>) -> Self {
        Self {
            etas,
            nodes,
            kernels,
            folds: 5,
            metric: Metric::Relative,
        }
    }

    pub fn validate(&self, n_train: usize) -> Result<()> {
        if self.etas.is_empty() || self.nodes.is_empty() || self.kernels.is_empty() {
            return Err(Error::InvalidInput(
                "tuning grid needs at least one eta, one node count and one kernel".into(),
            ));
        }
        if self.folds < 2 || self.folds > n_train {
            return Err(Error::InvalidInput(format!(
                "fold count must lie in [2, {n_train}], got {}",
                self.folds
            )));
        }
        if let Some(k) = self.kernels.iter().find(|k| !k.is_differentiable()) {
            return Err(Error::UnsupportedSmoothness { nu: k.nu() });
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for (kernel_index, kernel) in self.kernels.iter().enumerate() {
            for &nodes in &self.nodes {
                for (eta_index, &eta) in self.etas.iter().enumerate() {
                    out.push(GridPoint {
                        index: out.len(),
                        kernel_index,
                        eta_index,
                        kernel: *kernel,
                        nodes,
                        eta,
                    });
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.etas.len() * self.nodes.len() * self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shuffled index partition into `folds` groups, each sorted.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidInput(format!(
            "fold count must lie in [2, {n}], got {folds}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed));
    let mut out = vec![Vec::new(); folds];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn select_rows(x: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), x.cols(), |i, j| x[(rows[i], j)])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldRow {
    pub point: usize,
    pub fold: usize,
    /// Infinite when training failed outright.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: GridPoint,
    pub points: Vec<GridPoint>,
    pub mean_scores: Vec<f64>,
    /// `folds x |grid|` rows, grid-major.
    pub table: Vec<FoldRow>,
    pub metric: Metric,
}

impl CvOutcome {
    pub fn table_csv(&self) -> String {
        let mut out = String::from("point,fold,family,nu,phi,nodes,eta,score\n");
        for row in &self.table {
            let p = &self.points[row.point];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:.6e}",
                p.index,
                row.fold,
                p.kernel.family(),
                nu_field(&p.kernel),
                p.kernel.phi(),
                p.nodes,
                p.eta,
                row.score
            );
        }
        out
    }
}

fn fold_score(
    x: &Matrix,
    y: &[f64],
    held_out: &[usize],
    point: &GridPoint,
    base: &TrainConfig,
    metric: Metric,
) -> Result<f64> {
    let mut keep = vec![true; x.rows()];
    for &i in held_out {
        keep[i] = false;
    }
    let train_idx: Vec<usize> = (0..x.rows()).filter(|&i| keep[i]).collect();
    let xt = select_rows(x, &train_idx);
    let yt: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
    let xv = select_rows(x, held_out);
    let yv: Vec<f64> = held_out.iter().map(|&i| y[i]).collect();
    let cfg = TrainConfig {
        eta: point.eta,
        nodes: point.nodes,
        ..*base
    };
    let model = match ppgpr::train(&xt, &yt, &point.kernel, &cfg) {
        Ok(m) => m,
        Err(Error::Diverged | Error::Singular { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let score = metric.eval(&model.predict_many(&xv)?, &yv)?;
    Ok(if score.is_nan() { f64::INFINITY } else { score })
}

/// Smallest score; ties go to the smaller node count, then the earlier eta,
/// then the earlier kernel.
fn pick_best(points: &[GridPoint], scores: &[f64]) -> GridPoint {
    *points
        .iter()
        .min_by(|a, b| {
            scores[a.index]
                .total_cmp(&scores[b.index])
                .then(a.nodes.cmp(&b.nodes))
                .then(a.eta_index.cmp(&b.eta_index))
                .then(a.kernel_index.cmp(&b.kernel_index))
        })
        .expect("non-empty grid")
}

/// Picks the grid point with the smallest mean fold score.
pub fn cross_validate(
    x: &Matrix,
    y: &[f64],
    grid: &TuneGrid,
    base: &TrainConfig,
    seed: u64,
) -> Result<CvOutcome> {
    grid.validate(x.rows())?;
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            got: y.len(),
        });
    }
    let folds = fold_assignment(x.rows(), grid.folds, seed)?;
    let points = grid.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..folds.len()).map(move |f| (p, f)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(p, f)| fold_score(x, y, &folds[f], &points[p], base, grid.metric))
        .collect::<Result<_>>()?;

    let table: Vec<FoldRow> = jobs
        .iter()
        .zip(&scores)
        .map(|(&(point, fold), &score)| FoldRow { point, fold, score })
        .collect();
    let mean_scores: Vec<f64> = scores
        .chunks(folds.len())
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let best = pick_best(&points, &mean_scores);
    Ok(CvOutcome {
        best,
        points,
        mean_scores,
        table,
        metric: grid.metric,
    })
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
