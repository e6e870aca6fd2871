use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ga::{GaConfig, GaPopulation};
use crate::neat::{GenerationReport, NeatConfig, NeatPopulation};
use crate::network::{Brain, Genome, OUTPUT_COUNT};
use crate::sensors::SENSOR_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ga,
    Neat,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ga => "ga",
            Algorithm::Neat => "neat",
        }
    }
}

/// A population of controllers under either algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Ga(GaPopulation),
    Neat(NeatPopulation),
}

impl Optimizer {
    pub fn new(algorithm: Algorithm, ga: &GaConfig, neat: &NeatConfig, seed: u64) -> Result<Self, EvalError> {
        Ok(match algorithm {
            Algorithm::Ga => Optimizer::Ga(GaPopulation::new(ga.clone(), seed).map_err(|e| EvalError::Optimizer(e.to_string()))?),
            Algorithm::Neat => Optimizer::Neat(
                NeatPopulation::new(neat.clone(), SENSOR_COUNT, OUTPUT_COUNT, seed)
                    .map_err(|e| EvalError::Optimizer(e.to_string()))?,
            ),
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Optimizer::Ga(_) => Algorithm::Ga,
            Optimizer::Neat(_) => Algorithm::Neat,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Optimizer::Ga(p) => p.genomes.len(),
            Optimizer::Neat(p) => p.genomes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn generation(&self) -> u32 {
        match self {
            Optimizer::Ga(p) => p.generation,
            Optimizer::Neat(p) => p.generation,
        }
    }

    pub fn genome(&self, i: usize) -> Genome {
        match self {
            Optimizer::Ga(p) => Genome::Fixed(p.genomes[i].clone()),
            Optimizer::Neat(p) => Genome::Neat(p.genomes[i].clone()),
        }
    }

    /// Decoded networks for the whole population, in index order.
    pub fn brains(&self) -> Result<Vec<Brain>, EvalError> {
        (0..self.len()).map(|i| Ok(self.genome(i).brain()?)).collect()
    }

    /// Breeds the next generation. NEAT returns its species summary.
    pub fn advance(&mut self, fitnesses: &[f64]) -> Result<Option<GenerationReport>, EvalError> {
        match self {
            Optimizer::Ga(p) => {
                p.advance(fitnesses).map_err(|e| EvalError::Optimizer(e.to_string()))?;
                Ok(None)
            }
            Optimizer::Neat(p) => p
                .advance(fitnesses)
                .map(Some)
                .map_err(|e| EvalError::Optimizer(e.to_string())),
        }
    }
}
