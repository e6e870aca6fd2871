//! Evolves players against single archetypes and reports final outcomes.
//!
//! `cargo run --release -p duelevo-core --example probe -- <ga|neat> <enemy> [seeds] [generations] [pop]`

use std::time::Instant;

use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::engine::DEFAULT_TICK_LIMIT;
use duelevo_core::evaluation::{player_won, Algorithm, BaselineRun, BaselineSettings, FitnessWeights};
use duelevo_core::ga::GaConfig;
use duelevo_core::neat::NeatConfig;
use duelevo_core::par::Execution;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let algorithm = if args.first().map(String::as_str) == Some("ga") { Algorithm::Ga } else { Algorithm::Neat };
    let enemy: u32 = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(5);
    let seeds: u64 = args.get(2).and_then(|a| a.parse().ok()).unwrap_or(5);
    let generations: u32 = args.get(3).and_then(|a| a.parse().ok()).unwrap_or(50);
    let pop: usize = args.get(4).and_then(|a| a.parse().ok()).unwrap_or(50);
    let table = ArchetypeTable::builtin();
    let mut wins = 0;
    for seed in 1..=seeds {
        let start = Instant::now();
        let mut run = BaselineRun::new(BaselineSettings {
            algorithm,
            enemy_id: enemy,
            seed,
            generations,
            ga: GaConfig { population_size: pop, ..GaConfig::default() },
            neat: NeatConfig { population_size: pop, ..NeatConfig::default() },
            weights: FitnessWeights::PLAYER,
            tick_limit: DEFAULT_TICK_LIMIT,
        })
        .expect("valid settings");
        run.run_to_end(&table, Execution::Parallel).expect("run completes");
        let record = run.champion_match(&table).expect("replayable").expect("champion");
        let won = player_won(&record);
        wins += won as usize;
        let first_win = run.rows.iter().position(|r| r.enemy_energy <= 0.0);
        let last = run.rows.last().expect("rows");
        println!(
            "seed {seed}: won={won} player={:.0} enemy={:.0} ticks={} fitness={:.1} first_win_gen={first_win:?} {:.1}s",
            last.best_player_energy,
            last.enemy_energy,
            last.duration,
            last.best_fitness,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} vs {enemy}: {wins}/{seeds} wins", algorithm.name());
}
