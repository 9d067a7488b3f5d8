use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use distlab::energy;
use distlab::pointset::gen_random;
use distlab::spectral::{self, SpectrumMethod, VertexMultiset};
use distlab::{Execution, FieldSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn multiplicities(c: &mut Criterion) {
    let f = FieldSpec::parse("101", None).unwrap();
    let e = gen_random(&f, 2, 782, 1).unwrap();
    let mut g = c.benchmark_group("distance_multiplicities");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| energy::distance_multiplicities_with(black_box(&e), &e, exec).unwrap())
        });
    }
    g.finish();
}

fn convolution(c: &mut Criterion) {
    let f = FieldSpec::parse("3^6", None).unwrap();
    let e = gen_random(&f, 2, 400, 2).unwrap();
    let nu = energy::distance_multiplicities(&e, &e).unwrap();
    let mut g = c.benchmark_group("convolution_power_k3");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| energy::convolution_power(black_box(&nu), 3, exec).unwrap())
        });
    }
    g.finish();
}

fn spectrum(c: &mut Criterion) {
    let f = FieldSpec::parse("13", None).unwrap();
    let mut g = c.benchmark_group("sp_spectrum_13_2");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| {
                let graph = spectral::build_sp_graph_with(&f, 2, exec).unwrap();
                spectral::spectrum_with(&graph, SpectrumMethod::OrbitReduced, exec).unwrap()
            })
        });
    }
    g.finish();
}

fn edge_count(c: &mut Criterion) {
    let f = FieldSpec::parse("3", None).unwrap();
    let graph = spectral::build_sp_graph(&f, 6).unwrap();
    let all = VertexMultiset::all_vertices(&graph);
    let mut g = c.benchmark_group("edges_between_multisets");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| spectral::edges_between_multisets_with(&graph, black_box(&all), &all, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, multiplicities, convolution, spectrum, edge_count);
criterion_main!(benches);
