//! Anything that picks an [`ActionSet`] each tick: neural networks, scripted
//! archetypes, idle and random baselines, and recorded action logs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ActionSet, GameState, Side};
use crate::enemies::enemy_policy;
use crate::network::{Brain, NetworkError};
use crate::sensors::sense;

pub trait Controller {
    /// Action for `side` at the current tick of `state`.
    fn act(&mut self, state: &GameState, side: Side) -> Result<ActionSet, NetworkError>;
}

/// Network controller. Sensors are read from the controlled side's perspective;
/// on the enemy side `shoot` fires the archetype's primary pattern.
pub struct Neural {
    brain: Brain,
    scratch: Vec<f64>,
}

impl Neural {
    pub fn new(brain: Brain) -> Self {
        Self {
            brain,
            scratch: Vec::new(),
        }
    }
}

impl Controller for Neural {
    fn act(&mut self, state: &GameState, side: Side) -> Result<ActionSet, NetworkError> {
        let sensors = sense(state, side);
        self.brain.act(sensors.values(), &mut self.scratch)
    }
}

/// The archetype's rule-based script ("static enemy").
#[derive(Debug, Clone, Copy, Default)]
pub struct Scripted;

impl Controller for Scripted {
    fn act(&mut self, state: &GameState, _side: Side) -> Result<ActionSet, NetworkError> {
        Ok(enemy_policy(state, &state.archetype))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Idle;

impl Controller for Idle {
    fn act(&mut self, _state: &GameState, _side: Side) -> Result<ActionSet, NetworkError> {
        Ok(ActionSet::IDLE)
    }
}

/// Each of the five player actions is pressed independently with probability 1/2.
pub struct RandomActions {
    rng: ChaCha8Rng,
}

impl RandomActions {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Controller for RandomActions {
    fn act(&mut self, _state: &GameState, _side: Side) -> Result<ActionSet, NetworkError> {
        let bits: u8 = self.rng.random();
        Ok(ActionSet {
            left: bits & 1 != 0,
            right: bits & 2 != 0,
            jump: bits & 4 != 0,
            shoot: bits & 8 != 0,
            release: bits & 16 != 0,
            ..ActionSet::IDLE
        })
    }
}

/// Plays back a fixed action sequence, idling once it runs out.
#[derive(Debug, Clone)]
pub struct Recorded {
    actions: Vec<ActionSet>,
    cursor: usize,
}

impl Recorded {
    pub fn new(actions: Vec<ActionSet>) -> Self {
        Self { actions, cursor: 0 }
    }
}

impl Controller for Recorded {
    fn act(&mut self, _state: &GameState, _side: Side) -> Result<ActionSet, NetworkError> {
        let a = self.actions.get(self.cursor).copied().unwrap_or(ActionSet::IDLE);
        self.cursor += 1;
        Ok(a)
    }
}
