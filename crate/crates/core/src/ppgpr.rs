//! Projection pursuit Gaussian process regression.
//!
//! Inputs are projected onto `M` directions, `x -> (w_1^T x, ..., w_M^T x)`,
//! and an additive GP is fitted in the projected space. The directions are
//! learned by full-batch gradient descent on
//!
//! ```text
//! l(W) = Y^T (K_W + delta I)^{-1} Y + log det(K_W + delta I),
//! (K_W)_ij = (1/M) sum_k Phi(w_k^T (x_i - x_j)).
//! ```
//!
//! With `A = (K_W + delta I)^{-1}` and `alpha = A Y`, the gradient is
//!
//! ```text
//! dl/dw_k = sum_ij (A - alpha alpha^T)_ij (1/M) Phi'(w_k^T (x_i - x_j)) (x_i - x_j).
//! ```
//!
//! Every direction is updated from the same epoch-start `K_W`.

use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};

use crate::benchmarks::UnitMap;
use crate::error::{Error, Result};
use crate::gp::{self, GpConfig, GpModel};
use crate::kernels::{Kernel1d, MultivariateKernel, Structure};
use crate::linalg::{self, cholesky_with_jitter, dot, Matrix, DEFAULT_NUGGET};
use crate::seeded_rng;

/// Relative loss improvement below which training stops.
pub const DEFAULT_EARLY_STOP_REL: f64 = 0.04;
/// Number of epochs the improvement is measured over.
pub const DEFAULT_EARLY_STOP_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Learning rate.
    pub eta: f64,
    /// Maximum number of gradient steps.
    pub epochs: usize,
    /// Number of projection directions `M`.
    pub nodes: usize,
    /// Stop when `(l[t - window] - l[t]) / |l[t - window]|` drops below this.
    /// Zero disables early stopping.
    pub early_stop_rel: f64,
    pub early_stop_window: usize,
    pub seed: u64,
    pub nugget: f64,
    pub center: bool,
}

impl TrainConfig {
    pub fn new(nodes: usize) -> Self {
        Self {
            eta: 1e-6,
            epochs: 150,
            nodes,
            early_stop_rel: DEFAULT_EARLY_STOP_REL,
            early_stop_window: DEFAULT_EARLY_STOP_WINDOW,
            seed: 0,
            nugget: DEFAULT_NUGGET,
            center: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "learning rate must be finite and non-negative, got {}",
                self.eta
            )));
        }
        if self.nodes == 0 {
            return Err(Error::InvalidInput(
                "node count M must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidInput("epochs must be at least 1".into()));
        }
        if !(self.early_stop_rel >= 0.0) {
            return Err(Error::InvalidInput(
                "early-stop threshold must be non-negative".into(),
            ));
        }
        if self.early_stop_rel > 0.0 && self.early_stop_window == 0 {
            return Err(Error::InvalidInput(
                "early-stop window must be positive".into(),
            ));
        }
        if !(self.nugget >= 0.0) {
            return Err(Error::InvalidInput("nugget must be non-negative".into()));
        }
        Ok(())
    }
}

/// Fallback node count `min(n - 5, 5 d)`, at least 1.
pub fn default_nodes(n: usize, d: usize) -> usize {
    n.saturating_sub(5).min(5 * d).max(1)
}

/// `M x d` matrix with i.i.d. `N(0, 1/d)` entries.
pub fn init_weights(d: usize, m: usize, seed: u64) -> Result<Matrix> {
    if d == 0 || m == 0 {
        return Err(Error::InvalidInput(format!(
            "weight matrix needs positive sizes, got M = {m}, d = {d}"
        )));
    }
    let normal = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("positive std");
    let mut rng = seeded_rng(seed);
    Ok(Matrix::from_fn(m, d, |_, _| normal.sample(&mut rng)))
}

/// Row `i`, column `k` of the result is `w_k^T x_i`.
pub fn transform(w: &Matrix, x: &Matrix) -> Result<Matrix> {
    if w.cols() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: w.cols(),
            got: x.cols(),
        });
    }
    Ok(Matrix::from_fn(x.rows(), w.rows(), |i, k| {
        dot(w.row(k), x.row(i))
    }))
}

fn project_point(w: &Matrix, x: &[f64]) -> Vec<f64> {
    w.row_iter().map(|wk| dot(wk, x)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// `M x d`, row `k` is `dl/dw_k`.
    pub grad: Matrix,
    pub jitter_used: f64,
}

fn additive_kernel(base: &Kernel1d, m: usize) -> Result<MultivariateKernel> {
    MultivariateKernel::new(*base, Structure::Additive, m)
}

/// Objective and its exact gradient in `W`.
pub fn loss_and_gradient(
    w: &Matrix,
    x: &Matrix,
    y: &[f64],
    kernel: &Kernel1d,
    nugget: f64,
) -> Result<LossGrad> {
    kernel.check_differentiable()?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let (m, d) = (w.rows(), w.cols());
    let proj = transform(w, x)?;
    let gram = additive_kernel(kernel, m)?.gram(&proj)?;
    let chol = cholesky_with_jitter(&gram, nugget)?;
    let alpha = linalg::solve_spd(&chol, y)?;
    let loss = dot(y, &alpha) + linalg::logdet(&chol);

    // B = A - alpha alpha^T
    let mut b = chol.inverse();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] -= alpha[i] * alpha[j];
        }
    }

    // Terms (i, j) and (j, i) are equal (B symmetric, Phi' odd, x_i - x_j odd)
    // and i = j contributes nothing.
    let scale = 2.0 / m as f64;
    let mut grad = Matrix::zeros(m, d);
    let mut diff = vec![0.0; d];
    for i in 0..n {
        for j in 0..i {
            let bij = b[(i, j)];
            for (dv, (a, c)) in diff.iter_mut().zip(x.row(i).iter().zip(x.row(j))) {
                *dv = a - c;
            }
            let (pi, pj) = (proj.row(i), proj.row(j));
            for k in 0..m {
                let coef = scale * bij * kernel.slope(pi[k] - pj[k]);
                if coef == 0.0 {
                    continue;
                }
                for (g, dv) in grad.row_mut(k).iter_mut().zip(&diff) {
                    *g += coef * dv;
                }
            }
        }
    }
    Ok(LossGrad {
        loss,
        grad,
        jitter_used: chol.jitter_used(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub epoch: usize,
    pub loss: f64,
}

/// Why the training loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
    /// A non-finite loss or failed factorization; the best earlier state is kept.
    Diverged,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StopReason::MaxEpochs => "max-epochs",
            StopReason::EarlyStop => "early-stop",
            StopReason::Diverged => "diverged",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpgprModel {
    design: Matrix,
    weights: Matrix,
    inner: GpModel,
    trace: Vec<TraceEntry>,
    best_epoch: usize,
    stop: StopReason,
    config: TrainConfig,
    input_map: Option<UnitMap>,
}

/// Trains from [`init_weights`] drawn with `cfg.seed`.
pub fn train(x: &Matrix, y: &[f64], kernel: &Kernel1d, cfg: &TrainConfig) -> Result<PpgprModel> {
    cfg.validate()?;
    let w0 = init_weights(x.cols(), cfg.nodes, cfg.seed)?;
    train_from(x, y, kernel, cfg, w0)
}

/// Trains from caller-supplied initial weights (`cfg.nodes` is taken from `w0`).
pub fn train_from(
    x: &Matrix,
    y: &[f64],
    kernel: &Kernel1d,
    cfg: &TrainConfig,
    w0: Matrix,
) -> Result<PpgprModel> {
    let cfg = TrainConfig {
        nodes: w0.rows(),
        ..*cfg
    };
    cfg.validate()?;
    kernel.check_differentiable()?;
    let n = x.rows();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "training needs at least 2 points, got {n}"
        )));
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if w0.cols() != x.cols() {
        return Err(Error::DimensionMismatch {
            expected: x.cols(),
            got: w0.cols(),
        });
    }
    if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("training data must be finite".into()));
    }

    let offset = if cfg.center {
        y.iter().sum::<f64>() / n as f64
    } else {
        0.0
    };
    let yc: Vec<f64> = y.iter().map(|v| v - offset).collect();

    let mut w = w0;
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best: Option<(usize, f64, Matrix)> = None;
    let mut stop = StopReason::MaxEpochs;

    for epoch in 0..=cfg.epochs {
        let step = match loss_and_gradient(&w, x, &yc, kernel, cfg.nugget) {
            Ok(lg) if lg.loss.is_finite() => lg,
            Ok(_) | Err(Error::Singular { .. }) if best.is_some() => {
                stop = StopReason::Diverged;
                break;
            }
            Ok(_) => return Err(Error::Diverged),
            Err(e) => return Err(e),
        };
        trace.push(TraceEntry {
            epoch,
            loss: step.loss,
        });
        if best.as_ref().is_none_or(|(_, l, _)| step.loss < *l) {
            best = Some((epoch, step.loss, w.clone()));
        }
        if cfg.early_stop_rel > 0.0 && epoch >= cfg.early_stop_window {
            let past = trace[epoch - cfg.early_stop_window].loss;
            let rel = (past - step.loss) / past.abs();
            if !(rel >= cfg.early_stop_rel) {
                stop = StopReason::EarlyStop;
                break;
            }
        }
        if epoch == cfg.epochs {
            break;
        }
        if step.grad.as_slice().iter().any(|g| !g.is_finite()) {
            stop = StopReason::Diverged;
            break;
        }
        let mut next = w.clone();
        for k in 0..next.rows() {
            for (wv, g) in next.row_mut(k).iter_mut().zip(step.grad.row(k)) {
                *wv -= cfg.eta * g;
            }
        }
        w = next;
    }

    let (best_epoch, _, best_w) = best.expect("epoch 0 succeeded");
    let proj = transform(&best_w, x)?;
    let inner = gp::fit(
        &proj,
        y,
        additive_kernel(kernel, cfg.nodes)?,
        GpConfig {
            nugget: cfg.nugget,
            center: cfg.center,
            require_unit_cube: false,
        },
    )?;
    Ok(PpgprModel {
        design: x.clone(),
        weights: best_w,
        inner,
        trace,
        best_epoch,
        stop,
        config: cfg,
        input_map: None,
    })
}

impl PpgprModel {
    /// Reassembles a model from stored weights, refitting the inner GP.
    pub fn from_weights(
        x: &Matrix,
        y: &[f64],
        kernel: &Kernel1d,
        weights: Matrix,
        config: TrainConfig,
    ) -> Result<Self> {
        let proj = transform(&weights, x)?;
        let inner = gp::fit(
            &proj,
            y,
            additive_kernel(kernel, weights.rows())?,
            GpConfig {
                nugget: config.nugget,
                center: config.center,
                require_unit_cube: false,
            },
        )?;
        Ok(Self {
            design: x.clone(),
            weights,
            inner,
            trace: Vec::new(),
            best_epoch: 0,
            stop: StopReason::MaxEpochs,
            config,
            input_map: None,
        })
    }

    /// Training inputs in the original space.
    pub fn design(&self) -> &Matrix {
        &self.design
    }

    pub fn responses(&self) -> &[f64] {
        self.inner.responses()
    }

    pub fn kernel(&self) -> &Kernel1d {
        self.inner.kernel().base()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn inner(&self) -> &GpModel {
        &self.inner
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop
    }

    pub fn diverged(&self) -> bool {
        self.stop == StopReason::Diverged
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn nodes(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn input_map(&self) -> Option<&UnitMap> {
        self.input_map.as_ref()
    }

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

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.inner.predict_mean(&project_point(&self.weights, x))
    }

    pub fn predict_many(&self, xs: &Matrix) -> Result<Vec<f64>> {
        xs.row_iter().map(|x| self.predict(x)).collect()
    }

    pub fn predict_physical(&self, x: &[f64]) -> Result<f64> {
        match &self.input_map {
            Some(map) => self.predict(&map.to_unit(x)?),
            None => self.predict(x),
        }
    }

    /// `epoch,loss` rows with a header line.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("epoch,loss\n");
        for t in &self.trace {
            let _ = writeln!(out, "{},{:?}", t.epoch, t.loss);
        }
        out
    }
}
