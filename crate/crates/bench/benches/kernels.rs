use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use egscfo_bench::{sample_pairs, sample_trust_set};
use egscfo_core::fuzzy::type_reduce;
use egscfo_core::game::ess_probability;
use egscfo_core::sim::{Mode, ScenarioConfig, Simulation};
use egscfo_core::{FuzzyTrustEvaluator, GameContext, OutlierState};

fn fuzzy(c: &mut Criterion) {
    let fls = FuzzyTrustEvaluator::default();
    c.bench_function("evaluate_trust", |b| {
        b.iter(|| fls.evaluate_trust(black_box(0.17), black_box(0.21)).unwrap())
    });
    let pairs = sample_pairs();
    c.bench_function("type_reduce", |b| b.iter(|| type_reduce(black_box(&pairs)).unwrap()));
}

fn outlier(c: &mut Criterion) {
    let ts = sample_trust_set(100);
    c.bench_function("lloyd_round_100", |b| {
        b.iter(|| {
            let mut draws = [0.1, 0.9].into_iter();
            let mut state = OutlierState::activate(&ts, ts.len(), || draws.next().unwrap_or(0.5)).unwrap();
            state.iterate_round(black_box(&ts))
        })
    });
}

fn game(c: &mut Criterion) {
    let ctx = GameContext {
        players: 12,
        energy_ratio: 6.0,
        suspicious_trust: 0.4,
    };
    c.bench_function("ess_probability", |b| b.iter(|| ess_probability(black_box(&ctx)).unwrap()));
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for mode in Mode::ALL {
        let config = ScenarioConfig {
            mode,
            ..ScenarioConfig::default()
        };
        group.bench_function(format!("200_rounds_{mode}"), |b| {
            b.iter(|| {
                let mut sim = Simulation::new(config.clone(), FuzzyTrustEvaluator::default()).unwrap();
                for _ in 0..200 {
                    sim.step().unwrap();
                }
                sim.round()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, fuzzy, outlier, game, simulation);
criterion_main!(benches);
