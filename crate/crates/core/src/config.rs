//! Experiment files: TOML with named blocks for the optimizer, fitness
//! weights and coevolution schedule.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::DEFAULT_TICK_LIMIT;
use crate::evaluation::{Algorithm, CoevolutionSchedule, FitnessWeights};
use crate::ga::GaConfig;
use crate::neat::NeatConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Campaign {
    Baseline,
    Coevolution,
    SingleMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessBlock {
    pub player: FitnessWeights,
    pub enemy: FitnessWeights,
}

impl Default for FitnessBlock {
    fn default() -> Self {
        Self {
            player: FitnessWeights::PLAYER,
            enemy: FitnessWeights::ENEMY,
        }
    }
}

/// Genomes for a `single_match` campaign. Without an enemy genome the
/// archetype's script plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleMatchBlock {
    pub player_genome: PathBuf,
    #[serde(default)]
    pub enemy_genome: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub campaign: Campaign,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub enemies: Vec<u32>,
    pub seeds: Vec<u64>,
    /// Generations per baseline run.
    #[serde(default = "default_generations")]
    pub generations: u32,
    #[serde(default = "default_tick_limit")]
    pub tick_limit: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neat: Option<NeatConfig>,
    #[serde(default)]
    pub fitness: FitnessBlock,
    #[serde(default)]
    pub schedule: CoevolutionSchedule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single_match: Option<SingleMatchBlock>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Ga
}

fn default_generations() -> u32 {
    100
}

fn default_tick_limit() -> u32 {
    DEFAULT_TICK_LIMIT
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, message: String },
}

/// First 1-based line whose trimmed text starts with `needle`.
fn line_of(text: &str, needle: &str) -> Option<usize> {
    text.lines().position(|l| l.trim_start().starts_with(needle)).map(|i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates, pointing diagnostics at the offending line where possible.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate_with(|key| line_of(text, key))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(|_| None)
    }

    fn validate_with(&self, line: impl Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError::Invalid { line: line(key), message };
        if self.seeds.is_empty() {
            return Err(err("seeds", "seeds must not be empty".into()));
        }
        if self.enemies.is_empty() {
            return Err(err("enemies", "enemies must not be empty".into()));
        }
        if let Some(bad) = self.enemies.iter().find(|e| !(1..=8).contains(*e)) {
            return Err(err("enemies", format!("enemy id {bad} is outside 1..=8")));
        }
        if self.tick_limit == 0 {
            return Err(err("tick_limit", "tick_limit must be positive".into()));
        }
        for (name, w) in [("[fitness.player]", self.fitness.player), ("[fitness.enemy]", self.fitness.enemy)] {
            if !w.is_valid() {
                return Err(err(name, format!("{name} weights must be finite and non-negative")));
            }
        }
        match self.campaign {
            Campaign::Baseline | Campaign::Coevolution => {
                match self.algorithm {
                    Algorithm::Ga => {
                        let ga = self
                            .ga
                            .as_ref()
                            .ok_or_else(|| err("algorithm", "algorithm = \"ga\" requires a [ga] block".into()))?;
                        ga.validate().map_err(|e| err("[ga]", e.to_string()))?;
                    }
                    Algorithm::Neat => {
                        let neat = self
                            .neat
                            .as_ref()
                            .ok_or_else(|| err("algorithm", "algorithm = \"neat\" requires a [neat] block".into()))?;
                        neat.validate().map_err(|e| err("[neat]", e.to_string()))?;
                    }
                }
                if self.campaign == Campaign::Baseline && self.generations == 0 {
                    return Err(err("generations", "generations must be positive".into()));
                }
                if self.campaign == Campaign::Coevolution {
                    if !self.schedule.is_valid() {
                        return Err(err("turn_length", "turn_length must be at least 1".into()));
                    }
                    if self.schedule.total_generations == 0 {
                        return Err(err("total_generations", "total_generations must be positive".into()));
                    }
                }
            }
            Campaign::SingleMatch => {
                if self.single_match.is_none() {
                    return Err(err(
                        "campaign",
                        "campaign = \"single_match\" requires a [single_match] block".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Short digest of everything that affects results (the output directory does not).
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_string(&canonical).expect("configs serialize");
        let digest = Sha256::digest(json.as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASELINE: &str = r#"
campaign = "baseline"
algorithm = "neat"
enemies = [2, 5]
seeds = [1, 2]
generations = 3

[neat]
population_size = 20
"#;

    #[test]
    fn defaults_fill_unstated_blocks() {
        let c = ExperimentConfig::parse(BASELINE).unwrap();
        assert_eq!(c.fitness.player, FitnessWeights::PLAYER);
        assert_eq!(c.fitness.enemy, FitnessWeights::ENEMY);
        assert_eq!(c.schedule, CoevolutionSchedule::default());
        assert_eq!(c.neat.as_ref().unwrap().population_size, 20);
        assert_eq!(c.neat.as_ref().unwrap().compat_threshold, 3.0);
        assert_eq!(c.tick_limit, 3000);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = ExperimentConfig::parse(BASELINE).unwrap();
        c.ga = Some(GaConfig::default());
        c.output_dir = Some("out".into());
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn missing_neat_block_is_named() {
        let text = BASELINE.replace("[neat]\npopulation_size = 20\n", "");
        let e = ExperimentConfig::parse(&text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("[neat]"), "{msg}");
        assert!(msg.starts_with("line 3:"), "{msg}");
    }

    #[test]
    fn empty_seeds_rejected() {
        let text = BASELINE.replace("seeds = [1, 2]", "seeds = []");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("seeds"));
    }

    #[test]
    fn unknown_keys_fail_to_parse() {
        let text = format!("{BASELINE}mutation_strength = 3\n");
        assert!(matches!(ExperimentConfig::parse(&text), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = ExperimentConfig::parse(BASELINE).unwrap();
        let mut b = a.clone();
        b.output_dir = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.seeds.push(9);
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }

    #[test]
    fn documented_example_parses_to_defaults() {
        let doc = include_str!("../../../docs/experiments.md");
        let block = doc.split("```toml\n").nth(1).and_then(|b| b.split("```").next()).unwrap();
        let cfg = ExperimentConfig::parse(block).unwrap();
        assert_eq!(cfg.ga, Some(GaConfig::default()));
        assert_eq!(cfg.neat, Some(NeatConfig::default()));
        assert_eq!(cfg.fitness, FitnessBlock::default());
        assert_eq!(cfg.schedule, CoevolutionSchedule::default());
        assert_eq!((cfg.generations, cfg.tick_limit), (100, DEFAULT_TICK_LIMIT));
    }
}
