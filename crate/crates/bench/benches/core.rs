use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use escape_core::constants::epsilon_p;
use escape_core::lattice::{systole_sq, LatticeBasis};
use escape_core::laws::{trial_rng, MatrixLawSpec, ScalarLawSpec};
use escape_core::ratmat::random_unimodular;
use escape_core::walk::{run_exact_walk, run_ledger_walk, ExactOptions};

fn systole(c: &mut Criterion) {
    for dim in [2usize, 3, 4] {
        let bases: Vec<LatticeBasis> = (0..16)
            .map(|k| LatticeBasis::new(random_unimodular(&mut trial_rng(7, k), dim, 50)).unwrap())
            .collect();
        c.bench_function(&format!("systole_d{dim}_x16"), |b| {
            b.iter(|| {
                for basis in &bases {
                    black_box(systole_sq(basis).unwrap());
                }
            })
        });
    }
}

fn walks(c: &mut Criterion) {
    let ledger = MatrixLawSpec::mixed(2, ScalarLawSpec::heavy_record_exp());
    c.bench_function("ledger_walk_n10000", |b| {
        b.iter(|| black_box(run_ledger_walk(&ledger, 10_000, &mut trial_rng(1, 0)).unwrap()))
    });
    let capped = MatrixLawSpec::mixed(
        2,
        ScalarLawSpec::heavy_record_exp().with_t_min((1.0 / 1024f64.ln().sqrt()).next_up()),
    );
    let base = LatticeBasis::standard(2);
    c.bench_function("exact_walk_n50", |b| {
        b.iter(|| {
            black_box(
                run_exact_walk(
                    &capped,
                    50,
                    &base,
                    &mut trial_rng(1, 0),
                    ExactOptions::default(),
                )
                .unwrap(),
            )
        })
    });
}

fn constants(c: &mut Criterion) {
    c.bench_function("epsilon_2_prec128", |b| {
        b.iter(|| black_box(epsilon_p(2.0, 128).unwrap()))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = systole, walks, constants
}
criterion_main!(benches);
