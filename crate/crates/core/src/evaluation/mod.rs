//! Matches, the energy-based fitness, opponent sampling, and the baseline and
//! coevolution campaigns built on them.

mod baseline;
mod coevolution;
mod optimizer;

pub use baseline::{player_won, summarize_baseline, BaselineRow, BaselineRun, BaselineSettings, BaselineSummary};
pub use coevolution::{Coevolution, CoevolutionRow, CoevolutionSchedule, CoevolutionSettings};
pub use optimizer::{Algorithm, Optimizer};

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::Controller;
use crate::enemies::EnemyArchetype;
use crate::engine::{ActionSet, GameState, Outcome, Side, StageLayout};
use crate::network::NetworkError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("match result has zero duration")]
    ZeroDuration,
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Archetype(#[from] crate::enemies::ArchetypeError),
    #[error("no stage with id {0}")]
    UnknownStage(u32),
    #[error("optimizer: {0}")]
    Optimizer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    #[serde(rename = "self")]
    SelfSide,
    Opponent,
    Timeout,
}

/// One side's view of a finished match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub self_energy: f64,
    pub opponent_energy: f64,
    pub duration: u32,
    /// Own energy after hit resolution on every tick.
    pub self_energy_trace: Vec<f64>,
    pub winner: Winner,
}

/// Both mirrored results plus, when requested, the applied actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub player: MatchResult,
    pub enemy: MatchResult,
    pub outcome: Outcome,
    /// Side whose controller produced a non-finite output, ending the match as its loss.
    pub aborted: Option<Side>,
    pub actions: Vec<(ActionSet, ActionSet)>,
}

/// Everything besides the controllers that determines a match.
#[derive(Debug, Clone)]
pub struct MatchSetup {
    pub stage: StageLayout,
    pub archetype: Arc<EnemyArchetype>,
    pub seed: u64,
    pub tick_limit: u32,
}

impl MatchSetup {
    /// Setup on the archetype's own stage.
    pub fn for_archetype(archetype: Arc<EnemyArchetype>, seed: u64, tick_limit: u32) -> Result<Self, EvalError> {
        let stage = StageLayout::builtin(archetype.stage).ok_or(EvalError::UnknownStage(archetype.stage))?;
        Ok(Self {
            stage,
            archetype,
            seed,
            tick_limit,
        })
    }

    pub fn initial_state(&self) -> GameState {
        GameState::new(self.stage.clone(), Arc::clone(&self.archetype), self.seed, self.tick_limit)
    }
}

fn winner_for(side: Side, outcome: Outcome) -> Winner {
    match (side, outcome) {
        (_, Outcome::Timeout) => Winner::Timeout,
        (Side::Player, Outcome::Player) | (Side::Enemy, Outcome::Enemy) => Winner::SelfSide,
        _ => Winner::Opponent,
    }
}

/// Sense, act and step until the match ends.
pub fn run_match(
    player: &mut dyn Controller,
    enemy: &mut dyn Controller,
    setup: &MatchSetup,
    record: bool,
) -> MatchRecord {
    let mut state = setup.initial_state();
    run_from(&mut state, player, enemy, record)
}

/// [`run_match`] from an already built initial state.
pub fn run_from(
    state: &mut GameState,
    player: &mut dyn Controller,
    enemy: &mut dyn Controller,
    record: bool,
) -> MatchRecord {
    let mut player_trace = Vec::new();
    let mut enemy_trace = Vec::new();
    let mut actions = Vec::new();
    let mut aborted = None;
    let outcome = loop {
        if let Some(o) = state.is_terminal() {
            break o;
        }
        let pa = match player.act(state, Side::Player) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("player controller failed at tick {}: {e}", state.tick);
                aborted = Some(Side::Player);
                break Outcome::Enemy;
            }
        };
        let ea = match enemy.act(state, Side::Enemy) {
            Ok(a) => a,
            Err(e) => {
                log::warn!("enemy controller failed at tick {}: {e}", state.tick);
                aborted = Some(Side::Enemy);
                break Outcome::Player;
            }
        };
        state.step(&pa, &ea).expect("loop only steps live states");
        if record {
            actions.push((pa.player_subset(), ea));
        }
        player_trace.push(state.player.energy);
        enemy_trace.push(state.enemy.energy);
    };
    // An abort on the first tick still needs a one-sample trace.
    if player_trace.is_empty() {
        player_trace.push(state.player.energy);
        enemy_trace.push(state.enemy.energy);
    }
    let duration = player_trace.len() as u32;
    MatchRecord {
        player: MatchResult {
            self_energy: state.player.energy,
            opponent_energy: state.enemy.energy,
            duration,
            self_energy_trace: player_trace,
            winner: winner_for(Side::Player, outcome),
        },
        enemy: MatchResult {
            self_energy: state.enemy.energy,
            opponent_energy: state.player.energy,
            duration,
            self_energy_trace: enemy_trace,
            winner: winner_for(Side::Enemy, outcome),
        },
        outcome,
        aborted,
        actions,
    }
}

/// Exponents of the three fitness terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitnessWeights {
    pub gamma: f64,
    pub beta: f64,
    pub alpha: f64,
}

impl FitnessWeights {
    pub const PLAYER: FitnessWeights = FitnessWeights {
        gamma: 1.0,
        beta: 2.0,
        alpha: 2.0,
    };
    pub const ENEMY: FitnessWeights = FitnessWeights {
        gamma: 1.0,
        beta: 2.0,
        alpha: 3.0,
    };

    pub fn is_valid(&self) -> bool {
        [self.gamma, self.beta, self.alpha].iter().all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// `(100 − e)^γ − (100 − p)^β − (Σ(100 − p_i) / t)^α` from the result's own perspective.
pub fn match_fitness(r: &MatchResult, w: &FitnessWeights) -> Result<f64, EvalError> {
    if r.duration == 0 || r.self_energy_trace.is_empty() {
        return Err(EvalError::ZeroDuration);
    }
    let t = r.self_energy_trace.len() as f64;
    let exposure = r.self_energy_trace.iter().map(|p| 100.0 - p).sum::<f64>() / t;
    Ok((100.0 - r.opponent_energy).powf(w.gamma) - (100.0 - r.self_energy).powf(w.beta) - exposure.powf(w.alpha))
}

/// Opponent indices for one generation: `best` followed by up to four
/// distinct others drawn uniformly. Populations smaller than five are used whole.
pub fn sample_opponents(population_size: usize, best: usize, rng: &mut impl Rng) -> Vec<usize> {
    if population_size <= 5 {
        let mut all = vec![best];
        all.extend((0..population_size).filter(|i| *i != best));
        return all;
    }
    let mut out = vec![best];
    // Sample from the population minus `best`, then map back to indices.
    out.extend(
        sample(rng, population_size - 1, 4)
            .into_iter()
            .map(|k| if k >= best { k + 1 } else { k }),
    );
    out
}

/// Mean fitness over the sampled opponents.
pub fn generalization_fitness(
    opponents: &[usize],
    mut fitness_against: impl FnMut(usize) -> Result<f64, EvalError>,
) -> Result<f64, EvalError> {
    let mut total = 0.0;
    for &o in opponents {
        total += fitness_against(o)?;
    }
    Ok(total / opponents.len().max(1) as f64)
}
