use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use meshtopo::bpt::{decode, encode};
use meshtopo::mdpo::synthetic::periodic_corpus;
use meshtopo::mdpo::{nll_grad, ConditionEmbedding, ModelConfig, ToyARModel};
use meshtopo::metrics::{boundary_edge_ratio, hausdorff_points, topology_score};
use meshtopo::mesh::sample_surface;
use meshtopo::seam::{cut_mesh, flatten_all, sample_structural};
use meshtopo::BptConfig;
use meshtopo_bench::{tube, tube_seam, wavy_quad_grid};

fn codec(c: &mut Criterion) {
    let cfg = BptConfig::default();
    let mut g = c.benchmark_group("bpt");
    for n in [8, 32] {
        let mesh = wavy_quad_grid(n);
        let seq = encode(&mesh, &cfg).unwrap();
        g.bench_with_input(BenchmarkId::new("encode", n), &mesh, |b, m| b.iter(|| encode(black_box(m), &cfg)));
        g.bench_with_input(BenchmarkId::new("decode", n), &seq, |b, s| b.iter(|| decode(black_box(s), &cfg)));
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mesh = wavy_quad_grid(32);
    let a = sample_surface(&mesh, 4096, 1).unwrap().points;
    let b = sample_surface(&mesh, 4096, 2).unwrap().points;
    let mut g = c.benchmark_group("metrics");
    g.bench_function("ber", |bch| bch.iter(|| boundary_edge_ratio(black_box(&mesh))));
    g.bench_function("topology_score", |bch| bch.iter(|| topology_score(black_box(&mesh))));
    g.bench_function("hausdorff_4096", |bch| bch.iter(|| hausdorff_points(black_box(&a), black_box(&b))));
    g.finish();
}

fn training(c: &mut Criterion) {
    let cfg = ModelConfig {
        vocab_size: 32,
        embed_dim: 16,
        context: 32,
        layers: 2,
        cond_dim: 8,
    };
    let model = ToyARModel::random(cfg, 1, 0.1).unwrap();
    let seq = periodic_corpus(1, 64, 32, 3).remove(0);
    let cond = ConditionEmbedding::zeros(8);
    c.bench_function("mdpo/nll_grad_64", |b| b.iter(|| nll_grad(&model, black_box(&seq), &cond)));
}

fn seam(c: &mut Criterion) {
    let (around, rings) = (48, 24);
    let mesh = tube(around, rings);
    let (cut, _) = cut_mesh(&mesh, &[tube_seam(around, rings)]).unwrap();
    let mut g = c.benchmark_group("seam");
    g.sample_size(20);
    g.bench_function("cut", |b| b.iter(|| cut_mesh(black_box(&mesh), &[tube_seam(around, rings)])));
    g.bench_function("flatten", |b| b.iter(|| flatten_all(black_box(&cut))));
    g.bench_function("structural_sample", |b| b.iter(|| sample_structural(black_box(&mesh), 7)));
    g.finish();
}

criterion_group!(benches, codec, metrics, training, seam);
criterion_main!(benches);
