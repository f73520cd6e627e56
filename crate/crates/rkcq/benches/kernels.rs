//! Criterion benches of the data-parallel kernels. The group names carry
//! the build flavor so `cargo bench` and
//! `cargo bench --no-default-features` produce comparable, distinct runs.

use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use rkcq::bem::{assemble_operators, TraceSpaces};
use rkcq::cq::{cq_weights, CqContext, ScalarSymbol, SymbolMode};
use rkcq::fem::{assemble_tet, build_box_mesh};
use rkcq::linalg::CMatrix;
use rkcq::tableau::{builtin_tableau, TableauKind};

fn flavor() -> &'static str {
    if rkcq::par::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn bench_assembly(c: &mut Criterion) {
    let mesh = build_box_mesh([0.0; 3], 2.0, 4).unwrap().surface;
    let spaces = TraceSpaces::new(&mesh);
    let s = Complex64::new(1.5, 2.0);
    let mut g = c.benchmark_group(format!("bem_assembly_{}", flavor()));
    g.sample_size(10);
    g.bench_function("cube_n4_all_operators", |b| {
        b.iter(|| assemble_operators(&mesh, &spaces, s).unwrap())
    });
    g.finish();
}

fn bench_lu(c: &mut Criterion) {
    let n = 600;
    let a = CMatrix::from_fn(n, n, |i, j| {
        let base = ((i * 31 + j * 17) % 97) as f64 / 97.0 - 0.5;
        Complex64::new(base + if i == j { 8.0 } else { 0.0 }, -base * 0.5)
    });
    let mut g = c.benchmark_group(format!("dense_lu_{}", flavor()));
    g.sample_size(10);
    g.bench_function("factor_600", |b| b.iter(|| a.lu().unwrap()));
    g.finish();
}

fn bench_weights(c: &mut Criterion) {
    let t = builtin_tableau(TableauKind::RadauIIA2).unwrap();
    let ctx = CqContext::new(t, 0.05, 128, None, 0.0).unwrap();
    let sym = ScalarSymbol::new("wavenumber", |s| s);
    let mut g = c.benchmark_group(format!("cq_weights_{}", flavor()));
    g.bench_function("radau2_n128_composed", |b| {
        b.iter(|| cq_weights(&ctx, &sym, SymbolMode::ComposedWithWavenumber).unwrap())
    });
    g.finish();
}

fn bench_fem(c: &mut Criterion) {
    let mesh = build_box_mesh([0.0; 3], 4.0, 10).unwrap();
    let mut g = c.benchmark_group(format!("fem_assembly_{}", flavor()));
    g.sample_size(10);
    g.bench_function("box_n10_forms", |b| {
        b.iter(|| assemble_tet(&mesh, &|x| x[0].cos()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_assembly, bench_lu, bench_weights, bench_fem);
criterion_main!(benches);
