use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    match_fitness, generalization_fitness, run_match, sample_opponents, Algorithm, EvalError, FitnessWeights,
    MatchRecord, MatchSetup, Optimizer,
};
use crate::controller::Neural;
use crate::enemies::ArchetypeTable;
use crate::engine::Side;
use crate::ga::{ranking, GaConfig};
use crate::neat::{GenerationReport, NeatConfig};
use crate::network::{Brain, Genome};
use crate::par::{map_indexed, Execution};
use crate::rng::{derive_indexed, derive_seed, Stream};

/// Alternating evolution turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoevolutionSchedule {
    pub turn_length: u32,
    /// Generations per side.
    pub total_generations: u32,
    pub starting_side: Side,
}

impl Default for CoevolutionSchedule {
    fn default() -> Self {
        Self {
            turn_length: 3,
            total_generations: 100,
            starting_side: Side::Player,
        }
    }
}

impl CoevolutionSchedule {
    pub fn is_valid(&self) -> bool {
        self.turn_length >= 1
    }

    /// Evolving side for every generation of the run, in order. Turns
    /// alternate; a side whose budget is spent yields to the other.
    pub fn unroll(&self) -> Vec<Side> {
        let turn = self.turn_length.max(1);
        let mut left = [self.total_generations; 2];
        let slot = |s: Side| if s == Side::Player { 0 } else { 1 };
        let mut side = self.starting_side;
        let mut out = Vec::with_capacity(2 * self.total_generations as usize);
        while left[0] + left[1] > 0 {
            let n = turn.min(left[slot(side)]);
            out.extend(std::iter::repeat_n(side, n as usize));
            left[slot(side)] -= n;
            side = side.opponent();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoevolutionSettings {
    pub algorithm: Algorithm,
    /// Archetype supplying the enemy's body, stage, shot patterns and phase clock.
    pub enemy_id: u32,
    pub seed: u64,
    pub schedule: CoevolutionSchedule,
    pub ga: GaConfig,
    pub neat: NeatConfig,
    pub player_weights: FitnessWeights,
    pub enemy_weights: FitnessWeights,
    pub tick_limit: u32,
}

/// Best-vs-best energies after one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoevolutionRow {
    pub generation: u32,
    pub evolving_side: Side,
    pub best_player_energy: f64,
    pub best_enemy_energy: f64,
}

/// Two populations taking turns. A population is bred lazily, at the start
/// of its next evaluated generation, so while frozen it stays exactly the
/// population that was last evaluated and whose champion is known.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coevolution {
    pub settings: CoevolutionSettings,
    pub player: Optimizer,
    pub enemy: Optimizer,
    /// Index of each side's best genome in its current population.
    pub champions: [usize; 2],
    /// Fitness values from each side's last evaluation, not yet used for breeding.
    pending: [Option<Vec<f64>>; 2],
    pub rows: Vec<CoevolutionRow>,
}

fn slot(side: Side) -> usize {
    match side {
        Side::Player => 0,
        Side::Enemy => 1,
    }
}

impl Coevolution {
    pub fn new(settings: CoevolutionSettings) -> Result<Self, EvalError> {
        let player = Optimizer::new(
            settings.algorithm,
            &settings.ga,
            &settings.neat,
            derive_seed(settings.seed, Stream::PlayerOptimizer),
        )?;
        let enemy = Optimizer::new(
            settings.algorithm,
            &settings.ga,
            &settings.neat,
            derive_seed(settings.seed, Stream::EnemyOptimizer),
        )?;
        Ok(Self {
            settings,
            player,
            enemy,
            champions: [0, 0],
            pending: [None, None],
            rows: Vec::new(),
        })
    }

    pub fn population(&self, side: Side) -> &Optimizer {
        match side {
            Side::Player => &self.player,
            Side::Enemy => &self.enemy,
        }
    }

    fn population_mut(&mut self, side: Side) -> &mut Optimizer {
        match side {
            Side::Player => &mut self.player,
            Side::Enemy => &mut self.enemy,
        }
    }

    pub fn total_steps(&self) -> usize {
        2 * self.settings.schedule.total_generations as usize
    }

    pub fn is_finished(&self) -> bool {
        self.rows.len() >= self.total_steps()
    }

    /// Side evolving at the next step, if any remain.
    pub fn next_side(&self) -> Option<Side> {
        self.settings.schedule.unroll().get(self.rows.len()).copied()
    }

    pub fn champion(&self, side: Side) -> Genome {
        self.population(side).genome(self.champions[slot(side)])
    }

    pub fn match_setup(&self, table: &ArchetypeTable) -> Result<MatchSetup, EvalError> {
        let s = &self.settings;
        MatchSetup::for_archetype(table.get(s.enemy_id)?, derive_seed(s.seed, Stream::Match), s.tick_limit)
    }

    /// Runs one generation of the side whose turn it is.
    pub fn step(
        &mut self,
        table: &ArchetypeTable,
        exec: Execution,
    ) -> Result<(CoevolutionRow, Option<GenerationReport>), EvalError> {
        let side = self.next_side().ok_or_else(|| EvalError::Optimizer("run already finished".into()))?;
        let generation = self.rows.len() as u32;
        let mut report = None;
        if let Some(f) = self.pending[slot(side)].take() {
            report = self.population_mut(side).advance(&f)?;
        }
        let setup = self.match_setup(table)?;
        let frozen_side = side.opponent();
        let frozen = self.population(frozen_side);
        let mut sampler = ChaCha8Rng::seed_from_u64(derive_indexed(
            self.settings.seed,
            Stream::OpponentSampling,
            generation as u64,
        ));
        let opponents = sample_opponents(frozen.len(), self.champions[slot(frozen_side)], &mut sampler);
        let opponent_brains: Vec<Brain> = opponents
            .iter()
            .map(|o| Ok(frozen.genome(*o).brain()?))
            .collect::<Result<_, EvalError>>()?;
        let brains = self.population(side).brains()?;
        let weights = match side {
            Side::Player => self.settings.player_weights,
            Side::Enemy => self.settings.enemy_weights,
        };
        let evaluated = map_indexed(exec, brains.len(), |i| -> Result<(f64, MatchRecord), EvalError> {
            let mut first = None;
            let fitness = generalization_fitness(&(0..opponents.len()).collect::<Vec<_>>(), |k| {
                let record = play(side, &brains[i], &opponent_brains[k], &setup);
                let own = match side {
                    Side::Player => &record.player,
                    Side::Enemy => &record.enemy,
                };
                let f = match_fitness(own, &weights)?;
                if k == 0 {
                    first = Some(record);
                }
                Ok(f)
            })?;
            Ok((fitness, first.expect("the sample always holds the champion")))
        });
        let mut fitnesses = Vec::with_capacity(evaluated.len());
        let mut vs_champion = Vec::with_capacity(evaluated.len());
        for e in evaluated {
            let (f, r) = e?;
            fitnesses.push(f);
            vs_champion.push(r);
        }
        let best = ranking(&fitnesses)[0];
        self.champions[slot(side)] = best;
        let record = &vs_champion[best];
        let row = CoevolutionRow {
            generation,
            evolving_side: side,
            best_player_energy: record.player.self_energy,
            best_enemy_energy: record.enemy.self_energy,
        };
        self.pending[slot(side)] = Some(fitnesses);
        self.rows.push(row.clone());
        Ok((row, report))
    }

    pub fn run_to_end(&mut self, table: &ArchetypeTable, exec: Execution) -> Result<(), EvalError> {
        while !self.is_finished() {
            self.step(table, exec)?;
        }
        Ok(())
    }

    /// Current champions against each other, with the action log. After the
    /// last step this is the match behind the final log row.
    pub fn champion_match(&self, table: &ArchetypeTable) -> Result<MatchRecord, EvalError> {
        let setup = self.match_setup(table)?;
        let p = self.champion(Side::Player).brain()?;
        let e = self.champion(Side::Enemy).brain()?;
        Ok(run_match(&mut Neural::new(p), &mut Neural::new(e), &setup, true))
    }
}

fn play(side: Side, own: &Brain, opponent: &Brain, setup: &MatchSetup) -> MatchRecord {
    let mut a = Neural::new(own.clone());
    let mut b = Neural::new(opponent.clone());
    match side {
        Side::Player => run_match(&mut a, &mut b, setup, false),
        Side::Enemy => run_match(&mut b, &mut a, setup, false),
    }
}
