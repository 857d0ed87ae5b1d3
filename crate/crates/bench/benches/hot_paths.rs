use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use viewplan_core::geometry::{shortest_hamiltonian_path, PathGraph};
use viewplan_core::sampling::ObjectCase;
use viewplan_core::set_cover::{solve_exact, CoverInstance, DEFAULT_NODE_BUDGET};
use viewplan_core::simulation::{load_object, SimConfig, SimScene};
use viewplan_core::voxel::virtual_imaging;

fn random_instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CoverInstance {
    let mut sets: Vec<Vec<u32>> = (0..m)
        .map(|_| (0..n as u32).filter(|_| rng.gen_bool(0.2)).collect())
        .collect();
    for e in 0..n as u32 {
        let j = rng.gen_range(0..m);
        if !sets[j].contains(&e) {
            sets[j].push(e);
        }
    }
    CoverInstance::new(n, sets).expect("valid instance")
}

fn set_cover(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = random_instance(&mut rng, 400, 32);
    c.bench_function("solve_exact 32 sets x 400 elements", |b| {
        b.iter(|| solve_exact(black_box(&inst), DEFAULT_NODE_BUDGET))
    });
}

fn held_karp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 16;
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let w: Vec<Vec<f64>> = pts
        .iter()
        .map(|a| {
            pts.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    c.bench_function("held-karp n=16", |b| {
        b.iter_batched(
            || PathGraph::from_weights(w.clone(), 0).expect("valid graph"),
            |g| shortest_hamiltonian_path(&g),
            BatchSize::SmallInput,
        )
    });
}

fn imaging(c: &mut Criterion) {
    let cfg = SimConfig {
        min_surface_samples: 20_000,
        ..SimConfig::default()
    };
    let mesh = load_object("prim:sphere", None).expect("primitive");
    let scene = SimScene::build(ObjectCase::new(0, 0), &mesh, &cfg).expect("scene");
    let view = scene.views.view(0).clone();
    let mut g = c.benchmark_group("imaging");
    g.sample_size(10);
    g.bench_function("virtual_imaging one view", |b| {
        b.iter(|| {
            virtual_imaging(
                &scene.world,
                black_box(&view),
                &scene.camera,
                &scene.imaging,
            )
        })
    });
    g.finish();
}

criterion_group!(benches, set_cover, held_karp, imaging);
criterion_main!(benches);
