use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use ppgpr_core::designs::{halton, randomized_lhs, uniform_random};
use ppgpr_core::gp::{self, GpConfig};
use ppgpr_core::metrics::{
    self, experiment_data, reference_nodes, render_bench_csv, ExperimentSpec, Method, Metric,
    TuneGrid,
};
use ppgpr_core::model_io::{self, SavedModel};
use ppgpr_core::ppgpr::{self, default_nodes, TrainConfig};
use ppgpr_core::theory::{self, TheoryConfig};
use ppgpr_core::{
    Benchmark, Generator, Kernel1d, KernelFamily, Matrix, MultivariateKernel, Structure,
};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::table::{self, column_names, num, read_matrix, read_training, row};

const DEFAULT_ETAS: [f64; 6] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

fn header(command: &str, resolved: &impl Serialize) -> CliResult<String> {
    let body = toml::to_string(resolved)
        .map_err(|e| CliError::usage(format!("cannot render configuration: {e}")))?;
    let mut out = format!("# ppgpr {command} {}\n", env!("CARGO_PKG_VERSION"));
    for line in body.lines().filter(|l| !l.is_empty()) {
        let _ = writeln!(out, "# {line}");
    }
    Ok(out)
}

fn required<T>(v: Option<T>, key: &str, example: &str) -> CliResult<T> {
    v.ok_or_else(|| {
        CliError::usage(format!(
            "missing required option '{key}'; pass --{key} or set it in the config file, e.g.\n    {example}"
        ))
    })
}

fn parse<T: FromStr>(s: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| CliError::usage(e.to_string()))
}

fn kernel(family: &str, nu: f64, phi: f64) -> CliResult<Kernel1d> {
    Ok(Kernel1d::new(parse::<KernelFamily>(family)?, nu, phi)?)
}

/// `matern:NU[:PHI]` or `gaussian:PHI`.
fn parse_kernel(spec: &str) -> CliResult<Kernel1d> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || {
        CliError::usage(format!(
            "bad kernel '{spec}' (expected matern:NU[:PHI] or gaussian:PHI)"
        ))
    };
    let f = |s: &str| s.parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [fam, nu] if fam.eq_ignore_ascii_case("matern") => Ok(Kernel1d::matern(f(nu)?, 1.0)?),
        [fam, nu, phi] if fam.eq_ignore_ascii_case("matern") => {
            Ok(Kernel1d::matern(f(nu)?, f(phi)?)?)
        }
        [fam, phi] if fam.eq_ignore_ascii_case("gaussian") => Ok(Kernel1d::gaussian(f(phi)?)?),
        _ => Err(bad()),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

pub fn design(o: DesignOpts) -> CliResult<String> {
    let o = DesignOpts {
        generator: o.generator.or(Some("halton".into())),
        seed: o.seed.or(Some(0)),
        ..o
    };
    let n = required(o.n, "n", "n = 20")?;
    let d = required(o.d, "d", "d = 2")?;
    let generator: Generator = parse(o.generator.as_deref().unwrap_or_default())?;
    let seed = o.seed.unwrap_or_default();
    let design = match generator {
        Generator::Halton => halton(n, d)?,
        Generator::RandomizedLhs => randomized_lhs(n, d, seed)?,
        Generator::UniformRandom => uniform_random(n, d, seed)?,
        Generator::Provided => {
            return Err(CliError::usage("'provided' is not a generator"));
        }
    };
    let mut out = header("design", &o)?;
    match design.seed() {
        Some(s) => {
            let _ = writeln!(out, "# generator {generator}, seed {s}");
        }
        None => {
            let _ = writeln!(out, "# generator {generator}, seed unused");
        }
    }
    out.push_str(&column_names("x", d));
    out.push('\n');
    for r in design.points().row_iter() {
        out.push_str(&row(r));
        out.push('\n');
    }
    Ok(out)
}

/// Training data from a benchmark (Halton design in the unit cube) or a CSV file.
struct TrainingData {
    x: Matrix,
    y: Vec<f64>,
    function: Option<Benchmark>,
}

fn training_data(
    function: Option<&str>,
    data: Option<&Path>,
    n: Option<usize>,
) -> CliResult<TrainingData> {
    match (function, data) {
        (Some(_), Some(_)) => Err(CliError::usage(
            "give either 'function' or 'data', not both",
        )),
        (None, None) => Err(CliError::usage(
            "missing training data; pass --function or --data, e.g.\n    function = \"borehole\"",
        )),
        (Some(name), None) => {
            let b: Benchmark = parse(name)?;
            let n = n.unwrap_or(5 * b.dim());
            let x = halton(n, b.dim())?.into_points();
            let y = b.eval_unit_rows(&x)?;
            Ok(TrainingData {
                x,
                y,
                function: Some(b),
            })
        }
        (None, Some(path)) => {
            let (x, y) = read_training(path)?;
            if let Some(n) = n {
                if n != x.rows() {
                    return Err(CliError::usage(format!(
                        "n = {n} but {} has {} rows",
                        path.display(),
                        x.rows()
                    )));
                }
            }
            Ok(TrainingData {
                x,
                y,
                function: None,
            })
        }
    }
}

fn nodes_for(data: &TrainingData) -> usize {
    match data.function {
        Some(b) => reference_nodes(b, data.x.rows()),
        None => default_nodes(data.x.rows(), data.x.cols()),
    }
}

pub fn fit(o: FitOpts) -> CliResult<String> {
    let model_path = required(o.model.clone(), "model", "model = \"borehole.model\"")?;
    let data = training_data(o.function.as_deref(), o.data.as_deref(), o.n)?;
    let (n, d) = (data.x.rows(), data.x.cols());
    let o = FitOpts {
        n: Some(n),
        method: o.method.or(Some("ppgpr".into())),
        family: o.family.or(Some("matern".into())),
        nu: o.nu.or(Some(2.5)),
        phi: o.phi.or(Some(1.0)),
        nugget: o.nugget.or(Some(ppgpr_core::linalg::DEFAULT_NUGGET)),
        center: o.center.or(Some(true)),
        eta: o.eta.or(Some(1e-6)),
        nodes: o.nodes.or(Some(nodes_for(&data))),
        epochs: o.epochs.or(Some(150)),
        early_stop: o.early_stop.or(Some(ppgpr::DEFAULT_EARLY_STOP_REL)),
        seed: o.seed.or(Some(0)),
        ..o
    };
    let method: Method = parse(o.method.as_deref().unwrap_or_default())?;
    let k = kernel(
        o.family.as_deref().unwrap_or_default(),
        o.nu.unwrap_or_default(),
        o.phi.unwrap_or_default(),
    )?;
    let nugget = o.nugget.unwrap_or_default();
    let center = o.center.unwrap_or_default();
    let map = data.function.map(|b| b.unit_map());

    let mut out = header("fit", &o)?;
    out.push_str("method,n,d,nodes,eta,epochs,best_epoch,stop,loss\n");
    let text = match method.structure() {
        Some(structure) => {
            let mut m = gp::fit(
                &data.x,
                &data.y,
                MultivariateKernel::new(k, structure, d)?,
                GpConfig {
                    nugget,
                    center,
                    require_unit_cube: true,
                },
            )?;
            if let Some(map) = map {
                m = m.with_input_map(map)?;
            }
            let _ = writeln!(out, "{method},{n},{d},,,,,,{}", num(m.log_likelihood()));
            model_io::write_gp(&m)
        }
        None => {
            let cfg = TrainConfig {
                eta: o.eta.unwrap_or_default(),
                epochs: o.epochs.unwrap_or_default(),
                nodes: o.nodes.unwrap_or_default(),
                early_stop_rel: o.early_stop.unwrap_or_default(),
                seed: o.seed.unwrap_or_default(),
                nugget,
                center,
                ..TrainConfig::new(1)
            };
            let mut m = ppgpr::train(&data.x, &data.y, &k, &cfg)?;
            if let Some(map) = map {
                m = m.with_input_map(map)?;
            }
            if let Some(path) = &o.trace {
                write_file(path, &m.trace_csv())?;
            }
            let _ = writeln!(
                out,
                "{method},{n},{d},{},{},{},{},{},{}",
                m.nodes(),
                num(cfg.eta),
                m.trace().len() - 1,
                m.best_epoch(),
                m.stop_reason(),
                num(m.trace()[m.best_epoch()].loss)
            );
            if m.diverged() {
                let _ = writeln!(
                    out,
                    "# training diverged; kept epoch {} (consider a smaller eta)",
                    m.best_epoch()
                );
            }
            model_io::write_ppgpr(&m)
        }
    };
    write_file(&model_path, &text)?;
    Ok(out)
}

fn load_model(path: &Path) -> CliResult<SavedModel> {
    let text = table::read_text(path)?;
    model_io::read_model(&text).map_err(|e| match e {
        ppgpr_core::Error::Parse(m) => CliError::usage(format!("{}: {m}", path.display())),
        other => other.into(),
    })
}

pub fn predict(o: PredictOpts) -> CliResult<String> {
    let o = PredictOpts {
        physical: o.physical.or(Some(false)),
        ..o
    };
    let model_path = required(o.model.clone(), "model", "model = \"borehole.model\"")?;
    let input = required(o.input.clone(), "input", "input = \"points.csv\"")?;
    let model = load_model(&model_path)?;
    let x = read_matrix(&input)?;
    if x.cols() != model.dim() {
        return Err(CliError::usage(format!(
            "{} has {} columns but the model expects {}",
            input.display(),
            x.cols(),
            model.dim()
        )));
    }
    let physical = o.physical.unwrap_or_default();
    if physical && model.input_map().is_none() {
        return Err(CliError::usage(
            "model has no stored input ranges; drop --physical and pass unit-cube points",
        ));
    }
    let mut out = header("predict", &o)?;
    out.push_str("prediction\n");
    for r in x.row_iter() {
        let p = if physical {
            model.predict_physical(r)?
        } else {
            model.predict(r)?
        };
        out.push_str(&num(p));
        out.push('\n');
    }
    Ok(out)
}

pub fn eval_grid(o: EvalGridOpts) -> CliResult<String> {
    let o = EvalGridOpts {
        resolution: o.resolution.or(Some(101)),
        ..o
    };
    let name = required(o.function.clone(), "function", "function = \"xy-plus-x2\"")?;
    let b: Benchmark = parse(&name)?;
    if b.dim() != 2 {
        return Err(CliError::usage(format!(
            "eval-grid needs a 2-d function; {b} has d = {}",
            b.dim()
        )));
    }
    let res = o.resolution.unwrap_or_default();
    if res < 2 {
        return Err(CliError::usage("resolution must be at least 2"));
    }
    let model = match &o.model {
        Some(p) => Some(load_model(p)?),
        None => None,
    };
    if let Some(m) = &model {
        if m.dim() != 2 {
            return Err(CliError::usage("eval-grid model must be 2-d"));
        }
    }
    let map = b.unit_map();
    let mut out = header("eval-grid", &o)?;
    out.push_str("x1,x2,value");
    if model.is_some() {
        out.push_str(",prediction");
    }
    out.push('\n');
    let step = 1.0 / (res - 1) as f64;
    for i in 0..res {
        for j in 0..res {
            let u = [i as f64 * step, j as f64 * step];
            let x = map.to_physical(&u)?;
            let _ = write!(out, "{},{}", row(&x), num(b.eval_unit(&u)?));
            if let Some(m) = &model {
                let _ = write!(out, ",{}", num(m.predict(&u)?));
            }
            out.push('\n');
        }
    }
    Ok(out)
}

pub fn bench_table(o: BenchTableOpts) -> CliResult<String> {
    let o = BenchTableOpts {
        methods: o
            .methods
            .or_else(|| Some(Method::ALL.iter().map(|m| m.to_string()).collect())),
        seed: o.seed.or(Some(vec![0])),
        center: o.center.or(Some("on".into())),
        n_test: o.n_test.or(Some(500)),
        family: o.family.or(Some("matern".into())),
        nu: o.nu.or(Some(2.5)),
        phi: o.phi.or(Some(1.0)),
        nugget: o.nugget.or(Some(ppgpr_core::linalg::DEFAULT_NUGGET)),
        epochs: o.epochs.or(Some(150)),
        early_stop: o.early_stop.or(Some(0.0)),
        etas: o.etas.or(Some(DEFAULT_ETAS.to_vec())),
        folds: o.folds.or(Some(5)),
        metric: o.metric.or(Some("auto".into())),
        ..o
    };
    let functions: Vec<Benchmark> = required(
        o.functions.clone(),
        "functions",
        "functions = [\"borehole\", \"otl\"]",
    )?
    .iter()
    .map(|s| parse(s))
    .collect::<CliResult<_>>()?;
    let methods: Vec<Method> = o
        .methods
        .iter()
        .flatten()
        .map(|s| parse(s))
        .collect::<CliResult<_>>()?;
    let centers: Vec<bool> = match o.center.as_deref().unwrap_or_default() {
        "on" | "true" => vec![true],
        "off" | "false" => vec![false],
        "both" => vec![true, false],
        other => {
            return Err(CliError::usage(format!(
                "center must be on, off or both, got '{other}'"
            )))
        }
    };
    let metric_choice = o.metric.as_deref().unwrap_or_default();
    let fixed_metric = match metric_choice {
        "auto" => None,
        other => Some(parse::<Metric>(other)?),
    };
    let k = kernel(
        o.family.as_deref().unwrap_or_default(),
        o.nu.unwrap_or_default(),
        o.phi.unwrap_or_default(),
    )?;
    let etas = o.etas.clone().unwrap_or_default();
    if etas.is_empty() {
        return Err(CliError::usage("etas must not be empty"));
    }

    let mut reports = Vec::new();
    for &f in &functions {
        let n_train = o.n_train.unwrap_or(5 * f.dim());
        let nodes = o
            .nodes
            .clone()
            .unwrap_or_else(|| vec![reference_nodes(f, n_train)]);
        if nodes.is_empty() {
            return Err(CliError::usage("nodes must not be empty"));
        }
        for &seed in o.seed.iter().flatten() {
            let data = experiment_data(f, n_train, o.n_test.unwrap_or_default(), seed)?;
            let metric = fixed_metric.unwrap_or(if data.y_train.contains(&0.0) {
                Metric::Absolute
            } else {
                Metric::Relative
            });
            for &method in &methods {
                for &center in &centers {
                    let mut spec = ExperimentSpec::new(f, method, seed);
                    spec.n_train = n_train;
                    spec.n_test = o.n_test.unwrap_or_default();
                    spec.kernel = k;
                    spec.center = center;
                    spec.nugget = o.nugget.unwrap_or_default();
                    spec.train.epochs = o.epochs.unwrap_or_default();
                    spec.train.early_stop_rel = o.early_stop.unwrap_or_default();
                    spec.train.eta = etas[0];
                    spec.train.nodes = nodes[0];
                    if etas.len() > 1 || nodes.len() > 1 {
                        let mut grid = TuneGrid::new(etas.clone(), nodes.clone(), vec![k]);
                        grid.folds = o.folds.unwrap_or_default();
                        grid.metric = metric;
                        spec.tune = Some(grid);
                    }
                    reports.push(metrics::run_on(&spec, &data)?);
                }
            }
        }
    }
    let mut out = header("bench-table", &o)?;
    out.push_str(&render_bench_csv(&reports));
    for r in &reports {
        let _ = writeln!(
            out,
            "# wall_ms {} {} seed={} centered={} {:.1}",
            r.function, r.method, r.seed, r.centered, r.wall_ms
        );
    }
    Ok(out)
}

pub fn tune(o: TuneOpts) -> CliResult<String> {
    let data = training_data(o.function.as_deref(), o.data.as_deref(), o.n)?;
    let o = TuneOpts {
        n: Some(data.x.rows()),
        etas: o.etas.or(Some(DEFAULT_ETAS.to_vec())),
        nodes: o.nodes.or(Some(vec![nodes_for(&data)])),
        kernels: o.kernels.or(Some(vec!["matern:2.5:1".into()])),
        folds: o.folds.or(Some(5)),
        metric: o.metric.or(Some("relative".into())),
        epochs: o.epochs.or(Some(150)),
        early_stop: o.early_stop.or(Some(0.0)),
        nugget: o.nugget.or(Some(ppgpr_core::linalg::DEFAULT_NUGGET)),
        center: o.center.or(Some(true)),
        seed: o.seed.or(Some(0)),
        ..o
    };
    let kernels = o
        .kernels
        .iter()
        .flatten()
        .map(|s| parse_kernel(s))
        .collect::<CliResult<Vec<_>>>()?;
    let mut grid = TuneGrid::new(
        o.etas.clone().unwrap_or_default(),
        o.nodes.clone().unwrap_or_default(),
        kernels,
    );
    grid.folds = o.folds.unwrap_or_default();
    grid.metric = parse(o.metric.as_deref().unwrap_or_default())?;
    let seed = o.seed.unwrap_or_default();
    let base = TrainConfig {
        epochs: o.epochs.unwrap_or_default(),
        early_stop_rel: o.early_stop.unwrap_or_default(),
        nugget: o.nugget.unwrap_or_default(),
        center: o.center.unwrap_or_default(),
        seed,
        ..TrainConfig::new(1)
    };
    let cv = metrics::cross_validate(&data.x, &data.y, &grid, &base, seed)?;
    let mut out = header("tune", &o)?;
    out.push_str(&cv.table_csv());
    for p in &cv.points {
        let _ = writeln!(
            out,
            "# mean point={} kernel={} nodes={} eta={:e} score={:.6e}",
            p.index, p.kernel, p.nodes, p.eta, cv.mean_scores[p.index]
        );
    }
    let b = &cv.best;
    let _ = writeln!(
        out,
        "# best point={} kernel={} nodes={} eta={:e}",
        b.index, b.kernel, b.nodes, b.eta
    );
    Ok(out)
}

pub fn theory_check(o: TheoryOpts) -> CliResult<String> {
    let defaults = TheoryConfig::default();
    let o = TheoryOpts {
        structure: o.structure.or(Some("both".into())),
        nu: o.nu.or(Some(defaults.nu)),
        phi: o.phi.or(Some(defaults.phi)),
        d: o.d.or(Some(defaults.d)),
        n_list: o.n_list.or(Some(defaults.n_list.clone())),
        trials: o.trials.or(Some(defaults.trials)),
        seed: o.seed.or(Some(defaults.seed)),
        sample_grid: o.sample_grid.or(Some(defaults.sample_grid)),
        power_grid: o.power_grid.or(Some(defaults.power_grid)),
        nugget: o.nugget.or(Some(defaults.nugget)),
    };
    let structures = match o.structure.as_deref().unwrap_or_default() {
        "both" => vec![Structure::Additive, Structure::Isotropic],
        s => vec![parse::<Structure>(s)?],
    };
    let mut out = header("theory-check", &o)?;
    let mut fits = String::new();
    let mut first = true;
    for s in structures {
        let cfg = TheoryConfig {
            structure: s,
            nu: o.nu.unwrap_or_default(),
            phi: o.phi.unwrap_or_default(),
            d: o.d.unwrap_or_default(),
            n_list: o.n_list.clone().unwrap_or_default(),
            trials: o.trials.unwrap_or_default(),
            seed: o.seed.unwrap_or_default(),
            sample_grid: o.sample_grid.unwrap_or_default(),
            power_grid: o.power_grid.unwrap_or_default(),
            nugget: o.nugget.unwrap_or_default(),
        };
        let curve = theory::run(&cfg)?;
        let csv = curve.to_csv();
        let body = if first {
            csv.as_str()
        } else {
            csv.split_once('\n').map_or("", |p| p.1)
        };
        out.push_str(body);
        first = false;
        let fit = curve.power_fit()?;
        let _ = writeln!(
            fits,
            "# fit {s} max_power slope={:.4} intercept={:.4} r2={:.4}",
            fit.slope, fit.intercept, fit.r_squared
        );
        if cfg.trials > 0 {
            let fit = curve.error_fit()?;
            let _ = writeln!(
                fits,
                "# fit {s} sup_error slope={:.4} intercept={:.4} r2={:.4}",
                fit.slope, fit.intercept, fit.r_squared
            );
        }
    }
    let _ = writeln!(
        fits,
        "# sample grid {0}^{2}, power grid {1}^{2}",
        o.sample_grid.unwrap_or_default(),
        o.power_grid.unwrap_or_default(),
        o.d.unwrap_or_default()
    );
    out.push_str(&fits);
    Ok(out)
}

pub fn benchmark_eval(o: BenchEvalOpts) -> CliResult<String> {
    let o = BenchEvalOpts {
        unit: o.unit.or(Some(false)),
        permissive: o.permissive.or(Some(false)),
        ..o
    };
    let name = required(o.function.clone(), "function", "function = \"borehole\"")?;
    let input = required(o.input.clone(), "input", "input = \"points.csv\"")?;
    let b: Benchmark = parse(&name)?;
    let x = read_matrix(&input)?;
    if x.cols() != b.dim() {
        return Err(CliError::usage(format!(
            "{} has {} columns but {b} takes {}",
            input.display(),
            x.cols(),
            b.dim()
        )));
    }
    let unit = o.unit.unwrap_or_default();
    let permissive = o.permissive.unwrap_or_default();
    let mut out = header("benchmark eval", &o)?;
    out.push_str("value\n");
    for (i, r) in x.row_iter().enumerate() {
        let v = if unit {
            b.eval_unit(r)
        } else if permissive {
            b.eval_physical_permissive(r)
        } else {
            b.eval_physical(r)
        }
        .map_err(|e| CliError::usage(format!("row {}: {e}", i + 1)))?;
        out.push_str(&num(v));
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_specs() {
        let show = |s: &str| parse_kernel(s).unwrap().to_string();
        assert_eq!(show("matern:2.5"), "matern:2.5:1");
        assert_eq!(show("Matern:1.5:0.5"), "matern:1.5:0.5");
        assert_eq!(show("gaussian:0.5"), "gaussian:0.5");
        assert!(parse_kernel("gaussian").is_err());
        assert!(parse_kernel("cubic:1").is_err());
    }

    #[test]
    fn missing_key_names_example() {
        let e = design(DesignOpts::default()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("'n'") && msg.contains("n = 20"), "{msg}");
    }

    #[test]
    fn header_lists_resolved_values() {
        let text = design(DesignOpts {
            n: Some(3),
            d: Some(2),
            ..Default::default()
        })
        .unwrap();
        assert!(text.contains("# generator = \"halton\""));
        assert!(text.contains("# seed = 0"));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body[0], "x1,x2");
        assert_eq!(body[1], "0.5,0.3333333333333333");
        assert_eq!(body.len(), 4);
    }
}
