//! Microbenchmarks for the hot paths: query encoding, similarity scoring,
//! and exact top-k search.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use distret::encoder::{cosine, TextEncoder};
use distret::index::{build_index, search};
use distret_bench::{bench_corpus, bench_encoder, fused_queries};

fn bench_encode(c: &mut Criterion) {
    let encoder = bench_encoder();
    let corpus = bench_corpus(64);
    let queries = fused_queries(&corpus, 2);
    c.bench_function("encode_fused_query", |b| {
        let mut i = 0;
        b.iter(|| {
            let text = &queries[i % queries.len()];
            i += 1;
            black_box(encoder.encode_text(black_box(text)).unwrap())
        })
    });
}

fn bench_cosine(c: &mut Criterion) {
    let encoder = bench_encoder();
    let corpus = bench_corpus(64);
    let queries = fused_queries(&corpus, 1);
    let a = encoder.encode_text(&queries[0]).unwrap();
    let b_emb = encoder.encode_text(&queries[1]).unwrap();
    c.bench_function("cosine_64d", |b| {
        b.iter(|| black_box(cosine(black_box(&a), black_box(&b_emb)).unwrap()))
    });
}

fn bench_search(c: &mut Criterion) {
    let encoder = bench_encoder();
    let corpus = bench_corpus(2000);
    let store = build_index(&corpus, &encoder).unwrap();
    let queries = fused_queries(&corpus, 1);
    let embedding = encoder.encode_text(&queries[0]).unwrap();
    c.bench_function("search_top10_of_2000", |b| {
        b.iter(|| black_box(search(black_box(&store), black_box(&embedding), 10).unwrap()))
    });
}

fn bench_index_build(c: &mut Criterion) {
    let encoder = bench_encoder();
    let corpus = bench_corpus(256);
    c.bench_function("build_index_256", |b| {
        b.iter_batched(
            || (),
            |_| black_box(build_index(black_box(&corpus), &encoder).unwrap()),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_encode, bench_cosine, bench_search, bench_index_build
);
criterion_main!(benches);
