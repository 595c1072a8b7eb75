//! Sequential against parallel: weight construction and decomposition.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bubblex::exec::Exec;
use bubblex::io::read_mesh;
use bubblex::mesh::Mesh;
use bubblex::random::random_form;
use bubblex::transform::Transform;
use bubblex::weights::WeightSystem;

fn fixture(name: &str) -> Mesh {
    read_mesh(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).expect("fixture")
}

fn executors() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::with_jobs(1)), ("parallel", Exec::with_jobs(0))]
}

fn bench_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("weights");
    for name in ["diamond2d.json", "twotet3d.json", "diamond2d_r1.json"] {
        let mesh = fixture(name);
        for (label, exec) in executors() {
            group.bench_with_input(BenchmarkId::new(label, name), &mesh, |b, mesh| {
                b.iter(|| WeightSystem::build_with(mesh, &exec).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_decompose(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    group.sample_size(10);
    for (name, k, r) in [("diamond2d_r1.json", 1, 3), ("twotet3d.json", 1, 2), ("twotet3d.json", 2, 3)] {
        let mesh = fixture(name);
        let ws = WeightSystem::build(&mesh).unwrap();
        let u = random_form(&mesh, k, r, false, 1);
        for (label, exec) in executors() {
            let t = Transform::with_exec(&mesh, &ws, exec);
            group.bench_with_input(BenchmarkId::new(label, format!("{name} k={k} r={r}")), &u, |b, u| {
                b.iter(|| t.decompose(u).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_weights, bench_decompose);
criterion_main!(benches);
