//! Generational genetic algorithm over fixed-length weight vectors.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::network::{FixedGenome, FIXED_GENOME_LEN};

pub const WEIGHT_CLAMP: f64 = 30.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GaError {
    #[error("empty population")]
    EmptyPopulation,
    #[error("population and fitness lengths differ ({0} vs {1})")]
    FitnessLength(usize, usize),
    #[error("genome lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid GA config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub mutation_sigma: f64,
    pub elitism: usize,
    /// Standard deviation of the initial random weights.
    pub init_sigma: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.05,
            mutation_sigma: 0.5,
            elitism: 1,
            init_sigma: 1.0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::Config(m.to_string()));
        if self.population_size == 0 {
            return bad("population_size must be positive");
        }
        if self.tournament_size < 2 {
            return bad("tournament_size must be at least 2");
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(GaError::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if [self.mutation_sigma, self.init_sigma].iter().any(|s| s.is_nan() || *s < 0.0) {
            return bad("sigmas must be non-negative");
        }
        if self.elitism >= self.population_size {
            return bad("elitism must be smaller than population_size");
        }
        Ok(())
    }
}

/// Source of tournament entrant indices. The default draws uniformly with
/// replacement; tests script the draws.
pub trait IndexSource {
    fn next_index(&mut self, len: usize) -> usize;
}

impl<R: Rng> IndexSource for R {
    fn next_index(&mut self, len: usize) -> usize {
        self.random_range(0..len)
    }
}

/// Index of the best of `k` uniform draws; ties go to the lowest index.
pub fn tournament_select(fitnesses: &[f64], k: usize, src: &mut impl IndexSource) -> Result<usize, GaError> {
    if fitnesses.is_empty() {
        return Err(GaError::EmptyPopulation);
    }
    let mut best = src.next_index(fitnesses.len());
    for _ in 1..k.max(1) {
        let i = src.next_index(fitnesses.len());
        if fitnesses[i] > fitnesses[best] || (fitnesses[i] == fitnesses[best] && i < best) {
            best = i;
        }
    }
    Ok(best)
}

/// Uniform crossover.
pub fn crossover_fixed(a: &FixedGenome, b: &FixedGenome, rng: &mut impl Rng) -> Result<FixedGenome, GaError> {
    if a.weights.len() != b.weights.len() {
        return Err(GaError::LengthMismatch(a.weights.len(), b.weights.len()));
    }
    let weights = a
        .weights
        .iter()
        .zip(&b.weights)
        .map(|(x, y)| if rng.random_bool(0.5) { *x } else { *y })
        .collect();
    Ok(FixedGenome { weights })
}

/// Per-gene Gaussian perturbation with probability `rate`, clamped to ±30.
pub fn mutate_fixed(g: &FixedGenome, rate: f64, sigma: f64, rng: &mut impl Rng) -> FixedGenome {
    let mut out = g.clone();
    if rate <= 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("sigma is finite and non-negative");
    for w in out.weights.iter_mut() {
        if rng.random_bool(rate.min(1.0)) {
            *w = (*w + normal.sample(rng)).clamp(-WEIGHT_CLAMP, WEIGHT_CLAMP);
        }
    }
    out
}

pub fn random_fixed(sigma: f64, len: usize, rng: &mut impl Rng) -> FixedGenome {
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    FixedGenome {
        weights: (0..len)
            .map(|_| normal.sample(rng).clamp(-WEIGHT_CLAMP, WEIGHT_CLAMP))
            .collect(),
    }
}

/// Indices sorted by descending fitness, ties by ascending index.
pub fn ranking(fitnesses: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitnesses.len()).collect();
    idx.sort_by(|a, b| fitnesses[*b].total_cmp(&fitnesses[*a]).then(a.cmp(b)));
    idx
}

/// Elites carried over unchanged, the rest bred by tournament, crossover and mutation.
pub fn evolve_generation_ga(
    population: &[FixedGenome],
    fitnesses: &[f64],
    config: &GaConfig,
    rng: &mut impl Rng,
) -> Result<Vec<FixedGenome>, GaError> {
    config.validate()?;
    if population.is_empty() {
        return Err(GaError::EmptyPopulation);
    }
    if population.len() != fitnesses.len() {
        return Err(GaError::FitnessLength(population.len(), fitnesses.len()));
    }
    let mut next: Vec<FixedGenome> = ranking(fitnesses)
        .into_iter()
        .take(config.elitism)
        .map(|i| population[i].clone())
        .collect();
    while next.len() < config.population_size {
        let a = tournament_select(fitnesses, config.tournament_size, rng)?;
        let child = if rng.random_bool(config.crossover_rate) {
            let b = tournament_select(fitnesses, config.tournament_size, rng)?;
            crossover_fixed(&population[a], &population[b], rng)?
        } else {
            population[a].clone()
        };
        next.push(mutate_fixed(&child, config.mutation_rate, config.mutation_sigma, rng));
    }
    Ok(next)
}

/// GA population with its own random stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaPopulation {
    pub config: GaConfig,
    pub genomes: Vec<FixedGenome>,
    pub generation: u32,
    rng: rand_chacha::ChaCha8Rng,
}

impl GaPopulation {
    pub fn new(config: GaConfig, seed: u64) -> Result<Self, GaError> {
        Self::with_genome_len(config, seed, FIXED_GENOME_LEN)
    }

    pub fn with_genome_len(config: GaConfig, seed: u64, len: usize) -> Result<Self, GaError> {
        use rand::SeedableRng;
        config.validate()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let genomes = (0..config.population_size)
            .map(|_| random_fixed(config.init_sigma, len, &mut rng))
            .collect();
        Ok(Self {
            config,
            genomes,
            generation: 0,
            rng,
        })
    }

    pub fn advance(&mut self, fitnesses: &[f64]) -> Result<(), GaError> {
        self.genomes = evolve_generation_ga(&self.genomes, fitnesses, &self.config, &mut self.rng)?;
        self.generation += 1;
        Ok(())
    }
}
