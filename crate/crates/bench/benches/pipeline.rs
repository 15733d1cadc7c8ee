use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use sonify_bench::{controller_reply, label_case, scene_state};
use sonify_core::acquisition::dsp::{mock_generate, mock_transfer};
use sonify_core::controller::parse_commands;
use sonify_core::engine::DEFAULT_DT;
use sonify_core::material::assign_plane_materials;

fn controller(c: &mut Criterion) {
    let reply = controller_reply();
    c.bench_function("parse_commands", |b| b.iter(|| parse_commands(black_box(&reply)).unwrap()));
}

fn materials(c: &mut Criterion) {
    let (image, masks) = label_case();
    c.bench_function("assign_plane_materials_64x64", |b| {
        b.iter(|| assign_plane_materials(black_box(&image), black_box(&masks)).unwrap())
    });
}

fn physics(c: &mut Criterion) {
    for name in ["slope", "drop_ball"] {
        let state = scene_state(name);
        c.bench_function(&format!("step_physics_{name}_1s"), |b| {
            b.iter_batched(
                || state.clone(),
                |mut s| {
                    let mut n = 0;
                    for _ in 0..60 {
                        n += s.step_physics(DEFAULT_DT).len();
                    }
                    n
                },
                BatchSize::SmallInput,
            )
        });
    }
}

fn acquisition(c: &mut Criterion) {
    let prompt = "collide toy robot wood metal";
    c.bench_function("mock_generate", |b| b.iter(|| mock_generate(black_box(prompt))));
    let seed = mock_generate("neutral impact");
    c.bench_function("mock_transfer", |b| b.iter(|| mock_transfer(black_box(&seed), black_box(prompt))));
}

criterion_group!(benches, controller, materials, physics, acquisition);
criterion_main!(benches);
