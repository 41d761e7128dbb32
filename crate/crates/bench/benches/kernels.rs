use criterion::{black_box, criterion_group, criterion_main, Criterion};

use jumpform::forms::{eta, FormQuadrature};
use jumpform::operators::{apply_triplet, killing_term, symbol_check};
use jumpform::quadrature::default_eps_sequence;
use jumpform::{AlphaFunction, AnnulusScheme};
use jumpform_bench::{bump, line, tanh_kernel, tanh_split};

fn operators(c: &mut Criterion) {
    let s = AnnulusScheme::default();
    let k = tanh_kernel();
    let u = bump(0.0, 1.0);
    let pts = line(9, -1.0, 1.0);
    c.bench_function("triplet_9_points", |b| b.iter(|| apply_triplet(&k, &u, black_box(&pts), &s).unwrap()));
    let eps = default_eps_sequence();
    c.bench_function("kappa_9_points", |b| b.iter(|| killing_term(&k, black_box(&pts), &eps, &s).unwrap()));
    let af = AlphaFunction::constant(1.0).unwrap();
    c.bench_function("symbol_alpha_1", |b| {
        b.iter(|| symbol_check(&af, 1, black_box(&[1.0, 0.0]), &[0.0, 0.0], &s).unwrap())
    });
}

fn forms(c: &mut Criterion) {
    let sk = tanh_split();
    let u = bump(0.0, 1.0);
    let v = bump(0.3, 0.8);
    let q = FormQuadrature { per_cell: 3, ..FormQuadrature::default() };
    let mut g = c.benchmark_group("forms");
    g.sample_size(10);
    g.bench_function("eta_bumps", |b| b.iter(|| eta(black_box(&u), &v, &sk, &q).unwrap()));
    g.finish();
}

criterion_group!(benches, operators, forms);
criterion_main!(benches);
