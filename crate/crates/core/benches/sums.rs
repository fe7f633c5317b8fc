use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ppcharsum::characters::DirichletCharacter;
use ppcharsum::expsums::{run_corpus, seeded_corpus};
use ppcharsum::multiplicity::{audit_sweep, SweepScope};
use ppcharsum::pipeline::{sum_sq, QuadraticForm, SumParams};
use ppcharsum::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_sum_sq(c: &mut Criterion) {
    let chi = DirichletCharacter::primitive(5, 9, 1).unwrap();
    chi.value_table();
    let q = QuadraticForm::new(1, 1, 3);
    let mut group = c.benchmark_group("sum_sq");
    group.sample_size(10);
    for n in [500u64, 2000] {
        let params = SumParams::new(0, 0, n, n).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &params, |b, params| {
                b.iter(|| sum_sq(&q, params, &chi, exec))
            });
        }
    }
    group.finish();
}

fn bench_clz_corpus(c: &mut Criterion) {
    let corpus = seeded_corpus(7, 100, &[5, 7, 11]);
    let mut group = c.benchmark_group("clz_corpus");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| run_corpus(&corpus, 5, exec).unwrap()));
    }
    group.finish();
}

fn bench_audit(c: &mut Criterion) {
    let scope = SweepScope::exhaustive(5);
    let mut group = c.benchmark_group("audit_p5");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| audit_sweep(&scope, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_sum_sq, bench_clz_corpus, bench_audit);
criterion_main!(benches);
