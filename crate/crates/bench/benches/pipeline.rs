use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morph_bench as gen;
use morph_core::{
    brute_force_synthesize, mcp_exact, mcp_greedy, outranking_graph, sensor_model, set_median, synthesize,
    SynthesisConfig, Thresholds, DEFAULT_BRUTE_CAP,
};
use std::hint::black_box;

fn sensor(c: &mut Criterion) {
    let ds = sensor_model();
    let cfg = SynthesisConfig::default();
    c.bench_function("sensor/synthesize", |b| b.iter(|| synthesize(black_box(&ds.model), &cfg).unwrap()));
    c.bench_function("sensor/brute_force", |b| {
        b.iter(|| brute_force_synthesize(black_box(&ds.model), DEFAULT_BRUTE_CAP).unwrap())
    });
    let th = Thresholds::default();
    let table = ds.estimate_table(&"R".into()).unwrap();
    c.bench_function("sensor/outranking_R", |b| b.iter(|| outranking_graph(black_box(&table), &th).unwrap()));
}

fn layered(c: &mut Criterion) {
    let mut group = c.benchmark_group("layered/synthesize");
    for subsystems in [2, 3, 4] {
        let model = gen::layered_model(&mut gen::rng(7), subsystems, 3, 4, 3, 3);
        group.bench_with_input(BenchmarkId::from_parameter(subsystems), &model, |b, m| {
            b.iter(|| synthesize(m, &SynthesisConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn flat(c: &mut Criterion) {
    let mut group = c.benchmark_group("flat");
    let model = gen::flat_model_with(&mut gen::rng(11), &[6, 6, 6, 6, 6], 3, 3, 0.1);
    group.bench_function("synthesize", |b| b.iter(|| synthesize(&model, &SynthesisConfig::default())));
    group.bench_function("brute_force", |b| b.iter(|| brute_force_synthesize(&model, DEFAULT_BRUTE_CAP)));
    group.finish();
}

fn knapsack(c: &mut Criterion) {
    let mut rng = gen::rng(13);
    let instances: Vec<_> = (0..64).map(|_| gen::mcp_instance(&mut rng, 8, 8, 50)).collect();
    let mut group = c.benchmark_group("mcp");
    group.bench_function("greedy", |b| {
        b.iter(|| instances.iter().map(|i| mcp_greedy(i).is_ok() as usize).sum::<usize>())
    });
    group.bench_function("exact", |b| {
        b.iter(|| instances.iter().map(|i| mcp_exact(i).is_ok() as usize).sum::<usize>())
    });
    group.finish();
}

fn median(c: &mut Criterion) {
    let mut rng = gen::rng(17);
    let sols: Vec<_> = (0..64).map(|i| (format!("S{i}"), gen::profile(&mut rng, 12, 4))).collect();
    c.bench_function("set_median/64x12", |b| b.iter(|| set_median(black_box(&sols)).unwrap()));
}

criterion_group!(benches, sensor, layered, flat, knapsack, median);
criterion_main!(benches);
