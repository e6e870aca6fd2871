use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::compatibility_distance;
use super::NeatConfig;
use crate::network::NeatGenome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub id: u32,
    pub representative: NeatGenome,
    /// Indices into the population this species was built from.
    pub members: Vec<usize>,
    pub best_fitness_ever: f64,
    pub staleness: u32,
}

impl Species {
    pub fn best_member(&self, population: &[NeatGenome]) -> Option<usize> {
        self.members
            .iter()
            .copied()
            .max_by(|a, b| population[*a].fitness.total_cmp(&population[*b].fitness).then(b.cmp(a)))
    }
}

/// Assigns each genome to the first species whose representative lies within
/// the compatibility threshold, founding new species as needed. Empty species
/// are dropped and every survivor gets a fresh representative drawn
/// uniformly from its members.
pub fn speciate(
    population: &[NeatGenome],
    previous: &[Species],
    next_species_id: &mut u32,
    cfg: &NeatConfig,
    rng: &mut impl Rng,
) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .iter()
        .map(|s| Species {
            members: Vec::new(),
            ..s.clone()
        })
        .collect();
    for (i, g) in population.iter().enumerate() {
        let home = species
            .iter()
            .position(|s| compatibility_distance(g, &s.representative, cfg) < cfg.compat_threshold);
        match home {
            Some(k) => species[k].members.push(i),
            None => {
                species.push(Species {
                    id: *next_species_id,
                    representative: g.clone(),
                    members: vec![i],
                    best_fitness_ever: f64::NEG_INFINITY,
                    staleness: 0,
                });
                *next_species_id += 1;
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    for s in species.iter_mut() {
        let pick = *s.members.choose(rng).expect("non-empty species");
        s.representative = population[pick].clone();
    }
    species
}

/// `adjusted = fitness / species size` for every member.
pub fn fitness_sharing(species: &[Species], population: &mut [NeatGenome]) {
    for s in species {
        let size = s.members.len() as f64;
        for &i in &s.members {
            population[i].adjusted_fitness = population[i].fitness / size;
        }
    }
}

/// Refreshes best-ever fitness and staleness counters.
pub fn update_staleness(species: &mut [Species], population: &[NeatGenome]) {
    for s in species.iter_mut() {
        let best = s
            .members
            .iter()
            .map(|i| population[*i].fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        if best > s.best_fitness_ever {
            s.best_fitness_ever = best;
            s.staleness = 0;
        } else {
            s.staleness += 1;
        }
    }
}

/// Hamilton (largest remainder) apportionment of `total` seats over
/// non-negative `masses`; only `eligible` entries receive seats. An all-zero
/// eligible mass is apportioned uniformly.
pub fn apportion(masses: &[f64], eligible: &[bool], total: usize) -> Vec<usize> {
    let weights: Vec<f64> = masses
        .iter()
        .zip(eligible)
        .map(|(m, e)| if *e { m.max(0.0) } else { 0.0 })
        .collect();
    let sum: f64 = weights.iter().sum();
    let weights: Vec<f64> = if sum > 0.0 && sum.is_finite() {
        weights
    } else {
        eligible.iter().map(|e| if *e { 1.0 } else { 0.0 }).collect()
    };
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return vec![0; masses.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..masses.len()).filter(|i| weights[*i] > 0.0).collect();
    order.sort_by(|a, b| {
        let fa = quotas[*a] - quotas[*a].floor();
        let fb = quotas[*b] - quotas[*b].floor();
        fb.total_cmp(&fa).then(a.cmp(b))
    });
    let mut left = total.saturating_sub(assigned);
    for i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[*i] += 1;
        left -= 1;
    }
    counts
}

/// Offspring per species, proportional to the species' summed adjusted
/// fitness after shifting all adjusted fitnesses to be non-negative. Species
/// staler than the limit get nothing unless they hold the global best.
pub fn allocate_offspring(
    species: &[Species],
    population: &[NeatGenome],
    population_size: usize,
    stale_limit: u32,
) -> Vec<usize> {
    let min_adjusted = population
        .iter()
        .map(|g| g.adjusted_fitness)
        .fold(f64::INFINITY, f64::min);
    let shift = if min_adjusted < 0.0 { -min_adjusted } else { 0.0 };
    let global_best = (0..population.len()).max_by(|a, b| {
        population[*a]
            .fitness
            .total_cmp(&population[*b].fitness)
            .then(b.cmp(a))
    });
    let masses: Vec<f64> = species
        .iter()
        .map(|s| s.members.iter().map(|i| population[*i].adjusted_fitness + shift).sum())
        .collect();
    let eligible: Vec<bool> = species
        .iter()
        .map(|s| s.staleness <= stale_limit || global_best.is_some_and(|b| s.members.contains(&b)))
        .collect();
    apportion(&masses, &eligible, population_size)
}
