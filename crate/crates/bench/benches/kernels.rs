use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use multinorm::calderon::{MultiNormFamily, Profile};
use multinorm::grid::{Grid, SampledFunction};
use multinorm::hardy::Decomposer;
use multinorm::journe::{complete_string, random_open_set, string_enlarge, Model};
use multinorm::matrix::{StandardMatrix, Structure};
use multinorm::scales::ScaleLattice;
use multinorm::squarefn::{strong_maximal, Analyzer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lattice(c: &mut Criterion) {
    let lat = ScaleLattice::from_matrix(&StandardMatrix::figure1());
    c.bench_function("enumerate_scales_16", |b| b.iter(|| lat.enumerate(black_box(16))));
    let strict = StandardMatrix::from_integers(&[&[1, 2, 2], &[2, 1, 2], &[2, 2, 1]]).unwrap();
    let lat3 = ScaleLattice::from_matrix(&strict);
    c.bench_function("enumerate_scales_n3_6", |b| b.iter(|| lat3.enumerate(black_box(6))));
}

fn square_functions(c: &mut Criterion) {
    let s = Structure::isotropic(StandardMatrix::figure1());
    let g = Grid::uniform(2, 128, 2.0).unwrap();
    let an = Analyzer::new(MultiNormFamily::tensor(&s, Profile::default(), 4, 4).unwrap(), &g).unwrap();
    let f = SampledFunction::from_real_fn(&g, |x| (-(x[0] * x[0] + 4.0 * x[1] * x[1]) * 20.0).exp());
    c.bench_function("s_tensor_128", |b| b.iter(|| an.s_tensor(black_box(&f), 4).unwrap()));
    c.bench_function("s_pp_128", |b| b.iter(|| an.s_pp(black_box(&f), 4).unwrap()));
    let small = Grid::uniform(2, 32, 2.0).unwrap();
    let h = SampledFunction::from_real_fn(&small, |x| x[0].sin() * x[1].cos());
    c.bench_function("strong_maximal_32", |b| b.iter(|| strong_maximal(&s, black_box(&h))));
}

fn hardy(c: &mut Criterion) {
    let s = Structure::isotropic(StandardMatrix::from_integers(&[&[1, 2], &[2, 1]]).unwrap());
    let g = Grid::uniform(2, 128, 4.0).unwrap();
    let d = Decomposer::new(&s, &g, 2.0, 1).unwrap();
    let f = SampledFunction::from_real_fn(&g, |x| {
        let r2 = (x[0] * x[0] + x[1] * x[1]) / 0.09;
        if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 }
    });
    let mut group = c.benchmark_group("hardy");
    group.sample_size(10);
    group.bench_function("decompose_bump_128", |b| b.iter(|| d.decompose(black_box(&f), 1).unwrap()));
    group.finish();
}

fn journe(c: &mut Criterion) {
    let m = Model::new(3, 5).unwrap();
    let omega = random_open_set(m, 4, 3, &mut ChaCha8Rng::seed_from_u64(1));
    let family = omega.dyadic_family();
    let string = complete_string(3);
    let mut group = c.benchmark_group("journe");
    group.sample_size(10);
    group.bench_function("string_enlarge_s3_d5", |b| b.iter(|| string_enlarge(black_box(&omega), &family, &string).unwrap()));
    group.finish();
}

criterion_group!(benches, lattice, square_functions, hardy, journe);
criterion_main!(benches);
