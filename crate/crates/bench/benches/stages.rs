use criterion::{criterion_group, criterion_main, Criterion};
use csisense_bench::{action_trace, random_matrix};
use csisense_core::denoise::{remove_background, svd};
use csisense_core::features::{gabor_features, sift_descriptors, to_image, GaborBank, GaborParams, SiftParams};
use csisense_core::learn::{train_svm, SvmParams};
use csisense_core::preprocess;
use csisense_core::{Extractor, PipelineConfig, PreprocessConfig, Resolution, SvdMode};
use std::hint::black_box;

fn model_and_preprocess(c: &mut Criterion) {
    let specs = csisense_core::Scenario::cross_room(1, 1, 0).traces().unwrap();
    c.bench_function("generate 5 s trace", |b| b.iter(|| specs[0].generate().unwrap()));
    let trace = action_trace();
    c.bench_function("preprocess 5 s trace", |b| b.iter(|| preprocess::run(black_box(&trace), &PreprocessConfig::default())));
}

fn denoise(c: &mut Criterion) {
    let h = random_matrix(5000, 120, 1);
    c.bench_function("svd 5000x120", |b| b.iter(|| svd(black_box(&h)).unwrap()));
    let m = preprocess::run(&action_trace(), &PreprocessConfig::default()).unwrap();
    c.bench_function("remove background stacked", |b| b.iter(|| remove_background(&m, SvdMode::stacked()).unwrap()));
    c.bench_function("remove background per pair", |b| b.iter(|| remove_background(&m, SvdMode::per_pair()).unwrap()));
}

fn features(c: &mut Criterion) {
    let m = preprocess::run(&action_trace(), &PreprocessConfig::default()).unwrap();
    let pair = m.pair_matrix(0);
    c.bench_function("to_image 54x72", |b| b.iter(|| to_image(&pair, 54, 72).unwrap()));
    let fast = GaborBank::new(GaborParams::fast()).unwrap();
    let small = to_image(&pair, 54, 72).unwrap();
    c.bench_function("gabor fast 54x72", |b| b.iter(|| gabor_features(&small, &fast).unwrap()));
    let full = GaborBank::new(GaborParams::full()).unwrap();
    let large = to_image(&pair, 432, 576).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("gabor full 432x576", |b| b.iter(|| gabor_features(&large, &full).unwrap()));
    g.finish();
    c.bench_function("dense sift 54x72", |b| b.iter(|| sift_descriptors(&small, &SiftParams::default()).unwrap()));
}

fn learn(c: &mut Criterion) {
    let x = random_matrix(480, 384, 2);
    let y: Vec<usize> = (0..480).map(|i| i % 6).collect();
    let names: Vec<String> = (0..6).map(|i| i.to_string()).collect();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("svm 480x384, 6 classes", |b| b.iter(|| train_svm(&x, &y, &names, &SvmParams::default()).unwrap()));
    let ex = Extractor::new(PipelineConfig::preset("svd120-1svm", Resolution::Fast).unwrap()).unwrap();
    let trace = action_trace();
    g.bench_function("extract svd120 fast", |b| b.iter(|| ex.extract(&trace).unwrap()));
    g.finish();
}

criterion_group!(benches, model_and_preprocess, denoise, features, learn);
criterion_main!(benches);
