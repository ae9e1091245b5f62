use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ppgpr_bench::{lags, problem};
use ppgpr_core::linalg::cholesky_with_jitter;
use ppgpr_core::ppgpr::loss_and_gradient;
use ppgpr_core::{gp, Benchmark, GpConfig, Kernel1d, MultivariateKernel, Structure};

fn kernel_eval(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernel_1d");
    let lags = lags(1000, 3.0);
    for (name, k) in [
        ("matern_2.5", Kernel1d::matern(2.5, 1.0).unwrap()),
        ("matern_1.7", Kernel1d::matern(1.7, 1.0).unwrap()),
        ("gaussian", Kernel1d::gaussian(0.5).unwrap()),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| lags.iter().map(|t| k.value(black_box(*t))).sum::<f64>())
        });
    }
    g.finish();
}

fn cholesky(c: &mut Criterion) {
    let mut g = c.benchmark_group("cholesky");
    let k = Kernel1d::matern(2.5, 1.0).unwrap();
    for n in [20, 50, 100] {
        let x = problem(Benchmark::Borehole, n, 1).x;
        let gram = MultivariateKernel::new(k, Structure::Additive, 8)
            .unwrap()
            .gram(&x)
            .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &gram, |b, a| {
            b.iter(|| cholesky_with_jitter(black_box(a), 1e-6).unwrap())
        });
    }
    g.finish();
}

fn gradient(c: &mut Criterion) {
    let mut g = c.benchmark_group("loss_and_gradient");
    let f = Benchmark::Borehole;
    let k = Kernel1d::matern(2.5, 1.0).unwrap();
    for (n, m) in [(40, 35), (80, 35)] {
        let p = problem(f, n, m);
        g.bench_function(format!("borehole_n{n}_m{m}"), |b| {
            b.iter(|| loss_and_gradient(black_box(&p.w), &p.x, &p.y, &k, 1e-6).unwrap())
        });
    }
    g.finish();
}

fn gp_fit(c: &mut Criterion) {
    let f = Benchmark::OtlCircuit;
    let p = problem(f, 30, 1);
    let k = Kernel1d::matern(2.5, 1.0).unwrap();
    let mut g = c.benchmark_group("gp_fit");
    for s in [
        Structure::Isotropic,
        Structure::Product,
        Structure::Additive,
    ] {
        let mk = MultivariateKernel::new(k, s, f.dim()).unwrap();
        g.bench_function(s.to_string(), |b| {
            b.iter(|| gp::fit(black_box(&p.x), &p.y, mk, GpConfig::default()).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, kernel_eval, cholesky, gradient, gp_fit);
criterion_main!(benches);
