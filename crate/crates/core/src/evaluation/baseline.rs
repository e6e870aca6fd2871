use serde::{Deserialize, Serialize};

use super::{match_fitness, run_match, Algorithm, EvalError, FitnessWeights, MatchRecord, MatchSetup, Optimizer, Winner};
use crate::controller::{Neural, Scripted};
use crate::enemies::ArchetypeTable;
use crate::ga::{ranking, GaConfig};
use crate::neat::{GenerationReport, NeatConfig};
use crate::network::Genome;
use crate::par::{map_indexed, Execution};
use crate::rng::{derive_indexed, Stream};

/// One player population evolved against one scripted archetype.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    pub algorithm: Algorithm,
    pub enemy_id: u32,
    pub seed: u64,
    pub generations: u32,
    pub ga: GaConfig,
    pub neat: NeatConfig,
    pub weights: FitnessWeights,
    pub tick_limit: u32,
}

/// Best-of-generation line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub algorithm: Algorithm,
    pub enemy_id: u32,
    pub seed: u64,
    pub generation: u32,
    pub best_fitness: f64,
    pub best_player_energy: f64,
    pub enemy_energy: f64,
    pub duration: u32,
}

/// Resumable baseline run: serialize it between generations to checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineRun {
    pub settings: BaselineSettings,
    pub optimizer: Optimizer,
    pub rows: Vec<BaselineRow>,
    /// Best genome of the most recently evaluated generation.
    pub champion: Option<Genome>,
}

impl BaselineRun {
    pub fn new(settings: BaselineSettings) -> Result<Self, EvalError> {
        let seed = derive_indexed(settings.seed, Stream::PlayerOptimizer, settings.enemy_id as u64);
        let optimizer = Optimizer::new(settings.algorithm, &settings.ga, &settings.neat, seed)?;
        Ok(Self {
            settings,
            optimizer,
            rows: Vec::new(),
            champion: None,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.rows.len() as u32 >= self.settings.generations
    }

    pub fn match_setup(&self, table: &ArchetypeTable) -> Result<MatchSetup, EvalError> {
        let s = &self.settings;
        let seed = derive_indexed(s.seed, Stream::Match, s.enemy_id as u64);
        MatchSetup::for_archetype(table.get(s.enemy_id)?, seed, s.tick_limit)
    }

    /// Evaluates the current generation, records its best, then breeds the next.
    pub fn step(
        &mut self,
        table: &ArchetypeTable,
        exec: Execution,
    ) -> Result<(BaselineRow, Option<GenerationReport>), EvalError> {
        let setup = self.match_setup(table)?;
        let brains = self.optimizer.brains()?;
        let weights = self.settings.weights;
        let results = map_indexed(exec, brains.len(), |i| {
            let record = run_match(&mut Neural::new(brains[i].clone()), &mut Scripted, &setup, false);
            let fitness = match_fitness(&record.player, &weights);
            (fitness, record)
        });
        let mut fitnesses = Vec::with_capacity(results.len());
        for (f, _) in &results {
            fitnesses.push(*f.as_ref().map_err(|_| EvalError::ZeroDuration)?);
        }
        let best = ranking(&fitnesses)[0];
        let record = &results[best].1;
        let row = BaselineRow {
            algorithm: self.settings.algorithm,
            enemy_id: self.settings.enemy_id,
            seed: self.settings.seed,
            generation: self.rows.len() as u32,
            best_fitness: fitnesses[best],
            best_player_energy: record.player.self_energy,
            enemy_energy: record.player.opponent_energy,
            duration: record.player.duration,
        };
        self.champion = Some(self.optimizer.genome(best));
        self.rows.push(row.clone());
        let report = self.optimizer.advance(&fitnesses)?;
        Ok((row, report))
    }

    /// Steps until the configured number of generations has been evaluated.
    pub fn run_to_end(&mut self, table: &ArchetypeTable, exec: Execution) -> Result<(), EvalError> {
        while !self.is_finished() {
            self.step(table, exec)?;
        }
        Ok(())
    }

    /// The champion's match against the archetype, with the action log.
    pub fn champion_match(&self, table: &ArchetypeTable) -> Result<Option<MatchRecord>, EvalError> {
        let Some(g) = &self.champion else { return Ok(None) };
        let setup = self.match_setup(table)?;
        Ok(Some(run_match(&mut Neural::new(g.brain()?), &mut Scripted, &setup, true)))
    }
}

/// Final-generation outcome averaged over seeds, per enemy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub algorithm: Algorithm,
    pub enemy_id: u32,
    pub runs: usize,
    pub mean_player_energy: f64,
    pub mean_enemy_energy: f64,
    pub wins: usize,
}

/// Groups final rows (one per run) by algorithm and enemy.
pub fn summarize_baseline(final_rows: &[BaselineRow]) -> Vec<BaselineSummary> {
    let mut keys: Vec<(Algorithm, u32)> = final_rows.iter().map(|r| (r.algorithm, r.enemy_id)).collect();
    keys.sort_by_key(|(a, e)| (a.name(), *e));
    keys.dedup();
    keys.into_iter()
        .map(|(algorithm, enemy_id)| {
            let rows: Vec<&BaselineRow> = final_rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.enemy_id == enemy_id)
                .collect();
            let n = rows.len() as f64;
            BaselineSummary {
                algorithm,
                enemy_id,
                runs: rows.len(),
                mean_player_energy: rows.iter().map(|r| r.best_player_energy).sum::<f64>() / n,
                mean_enemy_energy: rows.iter().map(|r| r.enemy_energy).sum::<f64>() / n,
                wins: rows.iter().filter(|r| r.enemy_energy <= 0.0 && r.best_player_energy > 0.0).count(),
            }
        })
        .collect()
}

/// Did the player win this match outright?
pub fn player_won(record: &MatchRecord) -> bool {
    record.player.winner == Winner::SelfSide && record.player.self_energy > 0.0
}
