use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use tlink_core::{
    generate_synthetic, post_filter, prefilter, solve_map, train_local_ap, InferenceConfig, SynthConfig,
    TrainConfig, TrainLog,
};

fn bench_inference(c: &mut Criterion) {
    let inf = InferenceConfig::default();
    let mut group = c.benchmark_group("solve_map");
    let mut filter_case = None;
    for events in [8usize, 12, 16] {
        let cfg = SynthConfig {
            n_docs: 20,
            events_per_doc: (events, events),
            seed: 5,
            ..SynthConfig::default()
        };
        let corpus = generate_synthetic(&cfg).expect("valid generator config");
        let model = train_local_ap(
            &corpus.documents,
            corpus.feature_dimension,
            &TrainConfig::default(),
            &inf,
            &mut TrainLog::default(),
        )
        .expect("training succeeds");
        let instances: Vec<_> = corpus
            .documents
            .iter()
            .map(|d| {
                let pairs = prefilter(d, &inf);
                let scores = model.score_pairs(d, pairs.pairs()).expect("features fit");
                (pairs, scores)
            })
            .collect();
        group.bench_with_input(BenchmarkId::new("corpus_of_20", events), &instances, |b, inst| {
            b.iter(|| {
                for (pairs, scores) in inst {
                    black_box(solve_map(scores, pairs, &inf).expect("solvable"));
                }
            })
        });
        if events == 12 {
            let (pairs, scores) = &instances[0];
            let a = solve_map(scores, pairs, &inf).expect("solvable");
            filter_case = Some((scores.clone(), a));
        }
    }
    group.finish();
    if let Some((scores, a)) = filter_case {
        c.bench_function("post_filter/12_events", |b| b.iter(|| black_box(post_filter(&scores, &a, &inf))));
    }
}

fn bench_graph(c: &mut Criterion) {
    let cfg = SynthConfig {
        n_docs: 1,
        events_per_doc: (30, 30),
        sentences_per_doc: (10, 10),
        seed: 9,
        ..SynthConfig::default()
    };
    let corpus = generate_synthetic(&cfg).expect("valid generator config");
    let doc = &corpus.documents[0];
    let gold = doc.gold_graph().expect("generated gold is consistent");
    // Sparse input makes closure do real work.
    let reduced = gold.reduce().expect("consistent");
    c.bench_function("closure/30_events_reduced", |b| b.iter(|| black_box(reduced.closure().expect("consistent"))));
    c.bench_function("reduce/30_events", |b| b.iter(|| black_box(gold.reduce().expect("consistent"))));
}

criterion_group!(benches, bench_inference, bench_graph);
criterion_main!(benches);
