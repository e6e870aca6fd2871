//! Population evaluation on the calling thread versus the rayon pool.
//!
//! `cargo bench -p duelevo-core --bench evaluation`

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use duelevo_core::controller::{Neural, Scripted};
use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::engine::DEFAULT_TICK_LIMIT;
use duelevo_core::evaluation::{match_fitness, run_match, Algorithm, FitnessWeights, MatchSetup, Optimizer};
use duelevo_core::ga::GaConfig;
use duelevo_core::neat::NeatConfig;
use duelevo_core::par::{map_indexed, Execution};

fn evaluate(optimizer: &Optimizer, setup: &MatchSetup, exec: Execution) -> Vec<f64> {
    let brains = optimizer.brains().expect("valid genomes");
    map_indexed(exec, brains.len(), |i| {
        let r = run_match(&mut Neural::new(brains[i].clone()), &mut Scripted, setup, false);
        match_fitness(&r.player, &FitnessWeights::PLAYER).expect("non-empty match")
    })
}

fn population_evaluation(c: &mut Criterion) {
    let table = ArchetypeTable::builtin();
    let setup = MatchSetup::for_archetype(table.get(3).unwrap(), 11, DEFAULT_TICK_LIMIT).unwrap();
    let mut group = c.benchmark_group("evaluate_population");
    group.sample_size(10);
    for algorithm in [Algorithm::Ga, Algorithm::Neat] {
        let ga = GaConfig { population_size: 50, ..GaConfig::default() };
        let neat = NeatConfig { population_size: 50, ..NeatConfig::default() };
        let optimizer = Optimizer::new(algorithm, &ga, &neat, 7).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(algorithm.name(), format!("{exec:?}").to_lowercase());
            group.bench_function(id, |b| b.iter(|| evaluate(&optimizer, &setup, exec)));
        }
    }
    group.finish();
}

criterion_group!(benches, population_evaluation);
criterion_main!(benches);
