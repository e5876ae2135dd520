//! Sequential vs rayon execution of the three data-parallel kernels:
//! recursion assembly, spectral stepping and batched trajectories.
//!
//! Build with `--no-default-features` to see the pure sequential fallback;
//! both policies then report the same numbers.

use std::f64::consts::TAU;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use trajexp::engine::compute_expansion_with;
use trajexp::field::{FieldExpansion, FieldKind, Monomial, PolyField, SpatialField};
use trajexp::fixtures;
use trajexp::oracle::{integrate_many, log_grid, IntegratorOptions};
use trajexp::spectral2d::{InitialCondition, Spectral2d};
use trajexp::{build_semigroup, Execution, Rational};

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn q(p: i64, d: i64) -> Rational {
    Rational::new(p.into(), d.into())
}

/// Three-dimensional quadratic field on the semigroup {1, 3/2}.
fn dense_field(cap: usize) -> FieldExpansion<Rational> {
    let sg = build_semigroup(&[q(1, 1), q(3, 2)], q(1, 1), cap).unwrap();
    let mut fe = FieldExpansion::new(3, FieldKind::Poly, None, sg, vec![q(0, 1); 3]).unwrap();
    for n in 1..=cap {
        let mut terms = Vec::new();
        for (i, exps) in [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0], [0, 1, 1], [2, 0, 1]].iter().enumerate() {
            let c = (n + i) as i64;
            terms.push(Monomial {
                exps: exps.to_vec(),
                coeffs: vec![q(c, 3), q(-1, c + 1), q(1, 2 * c)],
            });
        }
        let f: Arc<dyn SpatialField<Rational>> = Arc::new(PolyField::new(3, terms).unwrap());
        fe.add_term(n, vec![f]).unwrap();
    }
    fe
}

fn engine(c: &mut Criterion) {
    let fe = dense_field(9);
    let x = [q(1, 3), q(-1, 4), q(1, 5)];
    let mut g = c.benchmark_group("engine_exact_order8");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| compute_expansion_with(&fe, black_box(&x), 8, exec).unwrap()));
    }
    g.finish();
}

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral_step");
    for m in [64usize, 128] {
        for (name, exec) in POLICIES {
            let solver = Spectral2d::new(m, [TAU, TAU], 0.01, exec).unwrap();
            let ic = InitialCondition::Random {
                seed: 2,
                amplitude: 1.0,
                k_max: m as i64 / 8,
            };
            let s0 = solver.state(0.0, [0.0, 0.0], ic.omega_hat(&solver).unwrap()).unwrap();
            g.bench_with_input(BenchmarkId::new(name, m), &s0, |b, s| b.iter(|| solver.step(s, 1e-3).unwrap()));
        }
    }
    g.finish();
}

fn trajectories(c: &mut Criterion) {
    let fe = fixtures::galilean_2d::<f64>(4).unwrap();
    let starts: Vec<Vec<f64>> = (0..64).map(|i| vec![0.01 * i as f64, 0.5 - 0.005 * i as f64]).collect();
    let times = log_grid(0.0, 30.0, 200);
    let mut g = c.benchmark_group("oracle_batch_64");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| {
            b.iter(|| integrate_many(&fe, &starts, 0.0, &times, IntegratorOptions::new(1e-10), exec))
        });
    }
    g.finish();
}

criterion_group!(benches, engine, spectral, trajectories);
criterion_main!(benches);
