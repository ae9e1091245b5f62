//! Command-line and config-file options.
//!
//! Every subcommand has one options struct that clap fills from flags and
//! serde fills from the TOML config; flags win, then the file, then defaults.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "ppgpr",
    version,
    about = "Gaussian process surrogates with additive and projection pursuit kernels"
)]
pub struct Cli {
    /// TOML file with option values for the chosen subcommand
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Write the report to FILE instead of stdout
    #[arg(long, short, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an experimental design in the unit cube
    Design(DesignOpts),
    /// Fit a GP or PPGPR model and save it
    Fit(FitOpts),
    /// Predict with a saved model
    Predict(PredictOpts),
    /// Evaluate a 2-d function (and optionally a model) on a regular grid
    EvalGrid(EvalGridOpts),
    /// Compare methods on benchmark functions
    BenchTable(BenchTableOpts),
    /// Cross-validate PPGPR hyperparameters
    Tune(TuneOpts),
    /// Measure convergence rates of additive and isotropic GPs
    TheoryCheck(TheoryOpts),
    /// Benchmark function utilities
    Benchmark {
        #[command(subcommand)]
        command: BenchmarkCommand,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Fit(_) => "fit",
            Command::Predict(_) => "predict",
            Command::EvalGrid(_) => "eval-grid",
            Command::BenchTable(_) => "bench-table",
            Command::Tune(_) => "tune",
            Command::TheoryCheck(_) => "theory-check",
            Command::Benchmark { .. } => "benchmark eval",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum BenchmarkCommand {
    /// Evaluate a benchmark function at the points of a CSV file
    Eval(BenchEvalOpts),
}

/// Field-wise `self.or(other)`.
pub trait Merge {
    fn merge(self, other: Self) -> Self;
}

macro_rules! merge_fields {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Merge for $t {
            fn merge(self, other: Self) -> Self {
                Self { $($f: self.$f.or(other.$f)),* }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DesignOpts {
    /// halton, lhs or uniform [default: halton]
    #[arg(long)]
    pub generator: Option<String>,
    /// Number of points
    #[arg(long)]
    pub n: Option<usize>,
    /// Dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// Seed for the random generators [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}
merge_fields!(DesignOpts {
    generator,
    n,
    d,
    seed
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FitOpts {
    /// Benchmark function supplying training data
    #[arg(long)]
    pub function: Option<String>,
    /// CSV of training data, inputs in [0,1]^d then the response column
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Training design size when using --function [default: 5 d]
    #[arg(long)]
    pub n: Option<usize>,
    /// gp-iso, gp-pro, gp-add or ppgpr [default: ppgpr]
    #[arg(long)]
    pub method: Option<String>,
    /// matern or gaussian [default: matern]
    #[arg(long)]
    pub family: Option<String>,
    /// Matérn smoothness [default: 2.5]
    #[arg(long)]
    pub nu: Option<f64>,
    /// Kernel scale [default: 1]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Diagonal nugget [default: 1e-6]
    #[arg(long)]
    pub nugget: Option<f64>,
    /// Subtract the response mean before fitting [default: true]
    #[arg(long)]
    pub center: Option<bool>,
    /// Learning rate [default: 1e-6]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Projection node count M [default: per function, else min(n - 5, 5 d)]
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Maximum epochs [default: 150]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Relative loss improvement over 10 epochs below which training stops; 0 disables [default: 0.04]
    #[arg(long)]
    pub early_stop: Option<f64>,
    /// Weight initialization seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to save the model
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// Where to write the training loss trace (PPGPR only)
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
}
merge_fields!(FitOpts {
    function,
    data,
    n,
    method,
    family,
    nu,
    phi,
    nugget,
    center,
    eta,
    nodes,
    epochs,
    early_stop,
    seed,
    model,
    trace,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PredictOpts {
    /// Saved model file
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// CSV of points, one per row
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Points are in the model's original input ranges [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub physical: Option<bool>,
}
merge_fields!(PredictOpts {
    model,
    input,
    physical
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct EvalGridOpts {
    /// Two-dimensional benchmark function
    #[arg(long)]
    pub function: Option<String>,
    /// Points per axis [default: 101]
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Also evaluate this saved model on the grid
    #[arg(long, value_name = "FILE")]
    pub model: Option<PathBuf>,
}
merge_fields!(EvalGridOpts {
    function,
    resolution,
    model
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchTableOpts {
    /// Benchmark functions, comma separated
    #[arg(long, value_delimiter = ',')]
    pub functions: Option<Vec<String>>,
    /// Methods, comma separated [default: gp-iso,gp-pro,gp-add,ppgpr]
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    /// Master seeds, comma separated; one row per seed [default: 0]
    #[arg(long, value_delimiter = ',')]
    pub seed: Option<Vec<u64>>,
    /// on, off or both [default: on]
    #[arg(long)]
    pub center: Option<String>,
    /// Training size [default: 5 d]
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Test size [default: 500]
    #[arg(long)]
    pub n_test: Option<usize>,
    /// matern or gaussian [default: matern]
    #[arg(long)]
    pub family: Option<String>,
    /// [default: 2.5]
    #[arg(long)]
    pub nu: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub phi: Option<f64>,
    /// [default: 1e-6]
    #[arg(long)]
    pub nugget: Option<f64>,
    /// PPGPR epochs [default: 150]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// PPGPR early-stop threshold; 0 disables [default: 0]
    #[arg(long)]
    pub early_stop: Option<f64>,
    /// Candidate learning rates; more than one enables cross-validation [default: 1e-3,...,1e-8]
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Candidate node counts [default: per function]
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    /// Cross-validation folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Cross-validation metric: relative, absolute, or auto (absolute when a training response is 0) [default: auto]
    #[arg(long)]
    pub metric: Option<String>,
}
merge_fields!(BenchTableOpts {
    functions,
    methods,
    seed,
    center,
    n_train,
    n_test,
    family,
    nu,
    phi,
    nugget,
    epochs,
    early_stop,
    etas,
    nodes,
    folds,
    metric,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TuneOpts {
    /// Benchmark function supplying training data
    #[arg(long)]
    pub function: Option<String>,
    /// CSV of training data, inputs in [0,1]^d then the response column
    #[arg(long, value_name = "FILE")]
    pub data: Option<PathBuf>,
    /// Training design size when using --function [default: 5 d]
    #[arg(long)]
    pub n: Option<usize>,
    /// Candidate learning rates [default: 1e-3,...,1e-8]
    #[arg(long, value_delimiter = ',')]
    pub etas: Option<Vec<f64>>,
    /// Candidate node counts [default: per function, else min(n - 5, 5 d)]
    #[arg(long, value_delimiter = ',')]
    pub nodes: Option<Vec<usize>>,
    /// Candidate kernels such as matern:2.5:1 or gaussian:0.5 [default: matern:2.5:1]
    #[arg(long, value_delimiter = ',')]
    pub kernels: Option<Vec<String>>,
    /// [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// relative or absolute [default: relative]
    #[arg(long)]
    pub metric: Option<String>,
    /// [default: 150]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub early_stop: Option<f64>,
    /// [default: 1e-6]
    #[arg(long)]
    pub nugget: Option<f64>,
    /// [default: true]
    #[arg(long)]
    pub center: Option<bool>,
    /// Seeds folds and weight initialization [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}
merge_fields!(TuneOpts {
    function,
    data,
    n,
    etas,
    nodes,
    kernels,
    folds,
    metric,
    epochs,
    early_stop,
    nugget,
    center,
    seed,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TheoryOpts {
    /// additive, isotropic or both [default: both]
    #[arg(long)]
    pub structure: Option<String>,
    /// [default: 2.5]
    #[arg(long)]
    pub nu: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    pub phi: Option<f64>,
    /// Dimension, at most 3 [default: 2]
    #[arg(long)]
    pub d: Option<usize>,
    /// Design sizes [default: 10,20,40,80]
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Prior sample paths per design size [default: 20]
    #[arg(long)]
    pub trials: Option<usize>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Points per axis carrying sample paths [default: 32]
    #[arg(long)]
    pub sample_grid: Option<usize>,
    /// Points per axis for the maximum of P [default: 64]
    #[arg(long)]
    pub power_grid: Option<usize>,
    /// [default: 1e-12]
    #[arg(long)]
    pub nugget: Option<f64>,
}
merge_fields!(TheoryOpts {
    structure,
    nu,
    phi,
    d,
    n_list,
    trials,
    seed,
    sample_grid,
    power_grid,
    nugget,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BenchEvalOpts {
    /// Benchmark function
    #[arg(long)]
    pub function: Option<String>,
    /// CSV of points, one per row
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Points are in [0,1]^d rather than the physical ranges [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unit: Option<bool>,
    /// Accept points on the range boundary [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub permissive: Option<bool>,
}
merge_fields!(BenchEvalOpts {
    function,
    input,
    unit,
    permissive
});
