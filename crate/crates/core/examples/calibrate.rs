//! Prints how the baseline controllers fare against each archetype.
//!
//! `cargo run --release -p duelevo-core --example calibrate [matches]`

use std::time::Instant;

use duelevo_core::controller::{Idle, RandomActions, Scripted};
use duelevo_core::enemies::ArchetypeTable;
use duelevo_core::engine::{Outcome, DEFAULT_TICK_LIMIT};
use duelevo_core::evaluation::{run_match, MatchSetup};
use duelevo_core::rng::{derive_indexed, Stream};

fn main() {
    let matches: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let table = ArchetypeTable::builtin();
    println!("id  random_losses  mean_ticks  mean_enemy_energy  idle_outcome  idle_ticks  ms");
    for archetype in table.iter() {
        let start = Instant::now();
        let mut losses = 0;
        let mut ticks = 0u64;
        let mut enemy_energy = 0.0;
        for s in 0..matches {
            let setup = MatchSetup::for_archetype(archetype.clone(), derive_indexed(7, Stream::Match, s), DEFAULT_TICK_LIMIT)
                .expect("builtin stage");
            let mut player = RandomActions::new(derive_indexed(7, Stream::RandomActions, s));
            let r = run_match(&mut player, &mut Scripted, &setup, false);
            if r.outcome == Outcome::Enemy {
                losses += 1;
            }
            ticks += r.player.duration as u64;
            enemy_energy += r.enemy.self_energy;
        }
        let setup = MatchSetup::for_archetype(archetype.clone(), 1, DEFAULT_TICK_LIMIT).expect("builtin stage");
        let idle = run_match(&mut Idle, &mut Scripted, &setup, false);
        println!(
            "{:<3} {:>6}/{:<6} {:>10.1} {:>18.1} {:>13?} {:>10} {:>5}",
            archetype.id,
            losses,
            matches,
            ticks as f64 / matches as f64,
            enemy_energy / matches as f64,
            idle.outcome,
            idle.player.duration,
            start.elapsed().as_millis()
        );
    }
}
