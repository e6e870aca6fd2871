//! NEAT: innovation tracking, speciation, fitness sharing, offspring
//! allocation, aligned crossover and structural/weight mutation.

mod ops;
mod registry;
mod species;

pub use ops::{
    align, compatibility_distance, crossover_neat, from_fixed, mutate_add_connection, mutate_add_node,
    mutate_weights_neat, random_initial, reaches, single_layer, Alignment, ADD_CONNECTION_TRIES,
};
pub use registry::InnovationRegistry;
pub use species::{allocate_offspring, apportion, fitness_sharing, speciate, update_staleness, Species};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ga::ranking;
use crate::network::NeatGenome;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NeatError {
    #[error("invalid NEAT config: {0}")]
    Config(String),
    #[error("expected {expected} fitness values, got {got}")]
    FitnessLength { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatConfig {
    pub population_size: usize,
    pub compat_threshold: f64,
    pub c_excess: f64,
    pub c_disjoint: f64,
    pub c_weight: f64,
    pub weight_mutate_rate: f64,
    pub weight_perturb_prob: f64,
    pub perturb_sigma: f64,
    pub replace_range: f64,
    pub add_node_rate: f64,
    pub add_connection_rate: f64,
    pub crossover_rate: f64,
    pub interspecies_rate: f64,
    pub disabled_inherit_prob: f64,
    pub survival_fraction: f64,
    pub stale_species_limit: u32,
    pub elitism_per_species: usize,
    pub init_sigma: f64,
}

impl Default for NeatConfig {
    fn default() -> Self {
        Self {
            population_size: 150,
            compat_threshold: 3.0,
            c_excess: 1.0,
            c_disjoint: 1.0,
            c_weight: 0.4,
            weight_mutate_rate: 0.8,
            weight_perturb_prob: 0.9,
            perturb_sigma: 0.5,
            replace_range: 2.0,
            add_node_rate: 0.03,
            add_connection_rate: 0.05,
            crossover_rate: 0.75,
            interspecies_rate: 0.001,
            disabled_inherit_prob: 0.75,
            survival_fraction: 0.2,
            stale_species_limit: 15,
            elitism_per_species: 1,
            init_sigma: 1.0,
        }
    }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<(), NeatError> {
        if self.population_size == 0 {
            return Err(NeatError::Config("population_size must be positive".into()));
        }
        let probabilities = [
            ("weight_mutate_rate", self.weight_mutate_rate),
            ("weight_perturb_prob", self.weight_perturb_prob),
            ("add_node_rate", self.add_node_rate),
            ("add_connection_rate", self.add_connection_rate),
            ("crossover_rate", self.crossover_rate),
            ("interspecies_rate", self.interspecies_rate),
            ("disabled_inherit_prob", self.disabled_inherit_prob),
        ];
        for (name, p) in probabilities {
            if !(0.0..=1.0).contains(&p) {
                return Err(NeatError::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if !(self.survival_fraction > 0.0 && self.survival_fraction <= 1.0) {
            return Err(NeatError::Config("survival_fraction must be in (0, 1]".into()));
        }
        for (name, v) in [
            ("compat_threshold", self.compat_threshold),
            ("c_excess", self.c_excess),
            ("c_disjoint", self.c_disjoint),
            ("c_weight", self.c_weight),
            ("perturb_sigma", self.perturb_sigma),
            ("replace_range", self.replace_range),
            ("init_sigma", self.init_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(NeatError::Config(format!("{name} must be finite and non-negative")));
            }
        }
        Ok(())
    }
}

/// Per-generation species summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesStat {
    pub id: u32,
    pub size: usize,
    pub best_fitness: f64,
    pub offspring: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub generation: u32,
    pub species: Vec<SpeciesStat>,
    /// Innovation numbers first issued during this generation's reproduction.
    pub new_innovations: u64,
}

/// A NEAT population together with its species, registry and random stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeatPopulation {
    pub config: NeatConfig,
    pub genomes: Vec<NeatGenome>,
    pub species: Vec<Species>,
    pub registry: InnovationRegistry,
    pub generation: u32,
    pub next_species_id: u32,
    rng: ChaCha8Rng,
}

impl NeatPopulation {
    pub fn new(config: NeatConfig, n_inputs: usize, n_outputs: usize, seed: u64) -> Result<Self, NeatError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut registry = InnovationRegistry::new((n_inputs + n_outputs) as u32);
        let genomes = (0..config.population_size)
            .map(|_| random_initial(n_inputs, n_outputs, config.init_sigma, &mut registry, &mut rng))
            .collect();
        Ok(Self {
            config,
            genomes,
            species: Vec::new(),
            registry,
            generation: 0,
            next_species_id: 0,
            rng,
        })
    }

    /// Consumes this generation's fitness values and breeds the next generation.
    pub fn advance(&mut self, fitnesses: &[f64]) -> Result<GenerationReport, NeatError> {
        if fitnesses.len() != self.genomes.len() {
            return Err(NeatError::FitnessLength {
                expected: self.genomes.len(),
                got: fitnesses.len(),
            });
        }
        for (g, f) in self.genomes.iter_mut().zip(fitnesses) {
            g.fitness = *f;
        }
        let report = evolve_generation_neat(
            &mut self.genomes,
            &mut self.species,
            &mut self.registry,
            &mut self.next_species_id,
            &self.config,
            self.generation,
            &mut self.rng,
        )?;
        self.generation += 1;
        Ok(report)
    }
}

/// One NEAT generation: speciate, share, allocate, reproduce. Fitness must
/// already be stored on the genomes. Replaces `population` with offspring of
/// identical size and `species` with this generation's species.
pub fn evolve_generation_neat(
    population: &mut Vec<NeatGenome>,
    species: &mut Vec<Species>,
    registry: &mut InnovationRegistry,
    next_species_id: &mut u32,
    cfg: &NeatConfig,
    generation: u32,
    rng: &mut impl Rng,
) -> Result<GenerationReport, NeatError> {
    cfg.validate()?;
    let size = population.len();
    let mut current = speciate(population, species, next_species_id, cfg, rng);
    update_staleness(&mut current, population);
    fitness_sharing(&current, population);
    let mut counts = allocate_offspring(&current, population, size, cfg.stale_species_limit);

    // The species holding the global best always reproduces, so its champion survives.
    let fitnesses: Vec<f64> = population.iter().map(|g| g.fitness).collect();
    let best = ranking(&fitnesses)[0];
    let home = current
        .iter()
        .position(|s| s.members.contains(&best))
        .expect("speciation is a partition");
    if counts[home] == 0 {
        let donor = (0..counts.len()).max_by_key(|k| (counts[*k], usize::MAX - k)).expect("species exist");
        counts[donor] -= 1;
        counts[home] += 1;
    }

    let pools: Vec<Vec<usize>> = current
        .iter()
        .map(|s| {
            let mut m = s.members.clone();
            m.sort_by(|a, b| fitnesses[*b].total_cmp(&fitnesses[*a]).then(a.cmp(b)));
            let keep = ((m.len() as f64 * cfg.survival_fraction).ceil() as usize).clamp(1, m.len());
            m.truncate(keep);
            m
        })
        .collect();

    let innovations_before = registry.next_innovation;
    let mut next = Vec::with_capacity(size);
    for (k, s) in current.iter().enumerate() {
        let quota = counts[k];
        if quota == 0 {
            continue;
        }
        let mut ranked = s.members.clone();
        ranked.sort_by(|a, b| fitnesses[*b].total_cmp(&fitnesses[*a]).then(a.cmp(b)));
        let elites = cfg.elitism_per_species.min(quota).min(ranked.len());
        for &i in ranked.iter().take(elites) {
            next.push(population[i].clone());
        }
        let pool = &pools[k];
        for _ in elites..quota {
            let mut child = if pool.len() >= 2 && rng.random_bool(cfg.crossover_rate) {
                let a = *pool.choose(rng).expect("pool non-empty");
                let b = if current.len() > 1 && rng.random_bool(cfg.interspecies_rate) {
                    let other = loop {
                        let o = rng.random_range(0..current.len());
                        if o != k {
                            break o;
                        }
                    };
                    *pools[other].choose(rng).expect("pool non-empty")
                } else {
                    *pool.choose(rng).expect("pool non-empty")
                };
                crossover_neat(&population[a], &population[b], cfg, rng)
            } else {
                let mut c = population[*pool.choose(rng).expect("pool non-empty")].clone();
                c.fitness = 0.0;
                c.adjusted_fitness = 0.0;
                c
            };
            if rng.random_bool(cfg.add_node_rate) {
                mutate_add_node(&mut child, registry, rng);
            }
            if rng.random_bool(cfg.add_connection_rate) {
                mutate_add_connection(&mut child, registry, rng);
            }
            mutate_weights_neat(&mut child, cfg, rng);
            next.push(child);
        }
    }
    debug_assert_eq!(next.len(), size);

    let report = GenerationReport {
        generation,
        species: current
            .iter()
            .enumerate()
            .map(|(k, s)| SpeciesStat {
                id: s.id,
                size: s.members.len(),
                best_fitness: s.members.iter().map(|i| fitnesses[*i]).fold(f64::NEG_INFINITY, f64::max),
                offspring: counts[k],
            })
            .collect(),
        new_innovations: registry.next_innovation - innovations_before,
    };
    *population = next;
    *species = current;
    Ok(report)
}

#[cfg(test)]
mod tests;
