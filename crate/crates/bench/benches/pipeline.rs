use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vertexset::bifurcation::FamilyContext;
use vertexset::poly::int;
use vertexset::surface::SurfaceFamily;
use vertexset::tracer::{trace_zero_set, PolyField, TraceConfig};
use vertexset::vertexfn::VertexFunction;
use vertexset::vertices::{count_transition_kstar, vertices_on_level, CensusConfig};

fn vertex_function(c: &mut Criterion) {
    let family = SurfaceFamily::canonical(int(1), int(0), int(2)).unwrap();
    c.bench_function("vertex_function_build", |b| {
        b.iter(|| VertexFunction::build(black_box(&family)))
    });
}

fn tracing(c: &mut Criterion) {
    let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
    let v = ctx.vertex_poly_at((0.02, 0.01)).unwrap();
    let field = PolyField::new(&v);
    let cfg = TraceConfig::default();
    c.bench_function("trace_vertex_set", |b| b.iter(|| trace_zero_set(&field, &cfg).unwrap()));
}

fn census(c: &mut Criterion) {
    let ctx = FamilyContext::canonical(int(1), int(0), int(2)).unwrap();
    let s = ctx.level_surface((0.02, 0.01)).unwrap();
    let cfg = CensusConfig::default();
    c.bench_function("level_census", |b| b.iter(|| vertices_on_level(&s, black_box(1e-4), &cfg).unwrap()));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("count_transition_kstar", |b| b.iter(|| count_transition_kstar(&s, &cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, vertex_function, tracing, census);
criterion_main!(benches);
