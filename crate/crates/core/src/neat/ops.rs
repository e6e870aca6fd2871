use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{InnovationRegistry, NeatConfig};
use crate::ga::WEIGHT_CLAMP;
use crate::network::{ConnectionGene, FixedGenome, NeatGenome, NodeGene, NodeKind, OUTPUT_COUNT};
use crate::sensors::SENSOR_COUNT;

/// Attempts made by [`mutate_add_connection`] before giving up.
pub const ADD_CONNECTION_TRIES: usize = 20;

/// Fully connected single-layer genome. Inputs get ids `0..n_in`, outputs
/// `n_in..n_in + n_out`; `weight(i, j)` supplies each link and `bias(j)` each output bias.
pub fn single_layer(
    n_in: usize,
    n_out: usize,
    registry: &mut InnovationRegistry,
    mut weight: impl FnMut(usize, usize) -> f64,
    mut bias: impl FnMut(usize) -> f64,
) -> NeatGenome {
    let mut nodes = Vec::with_capacity(n_in + n_out);
    for i in 0..n_in {
        nodes.push(NodeGene {
            id: i as u32,
            kind: NodeKind::Input,
            active: true,
            bias: 0.0,
        });
    }
    for j in 0..n_out {
        nodes.push(NodeGene {
            id: (n_in + j) as u32,
            kind: NodeKind::Output,
            active: true,
            bias: bias(j),
        });
    }
    let mut connections = Vec::with_capacity(n_in * n_out);
    for j in 0..n_out {
        for i in 0..n_in {
            let (from, to) = (i as u32, (n_in + j) as u32);
            connections.push(ConnectionGene {
                from,
                to,
                weight: weight(i, j),
                active: true,
                innovation: registry.innovation(from, to),
            });
        }
    }
    let mut g = NeatGenome {
        nodes,
        connections,
        fitness: 0.0,
        adjusted_fitness: 0.0,
    };
    g.normalize_order();
    g
}

/// Initial-topology genome carrying the weights of a fixed single-layer genome.
pub fn from_fixed(fixed: &FixedGenome, registry: &mut InnovationRegistry) -> NeatGenome {
    single_layer(
        SENSOR_COUNT,
        OUTPUT_COUNT,
        registry,
        |i, j| fixed.weight(i, j),
        |j| fixed.bias(j),
    )
}

pub fn random_initial(
    n_in: usize,
    n_out: usize,
    sigma: f64,
    registry: &mut InnovationRegistry,
    rng: &mut impl Rng,
) -> NeatGenome {
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    let weights: Vec<f64> = (0..n_in * n_out).map(|_| normal.sample(rng)).collect();
    let biases: Vec<f64> = (0..n_out).map(|_| normal.sample(rng)).collect();
    single_layer(n_in, n_out, registry, |i, j| weights[j * n_in + i], |j| biases[j])
}

/// Excess, disjoint and matching-gene statistics between two genomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub excess: usize,
    pub disjoint: usize,
    pub matching: usize,
    pub weight_diff_sum: f64,
}

pub fn align(a: &NeatGenome, b: &NeatGenome) -> Alignment {
    let (ca, cb) = (&a.connections, &b.connections);
    let max_a = ca.last().map(|c| c.innovation);
    let max_b = cb.last().map(|c| c.innovation);
    let (mut i, mut j) = (0, 0);
    let mut out = Alignment {
        excess: 0,
        disjoint: 0,
        matching: 0,
        weight_diff_sum: 0.0,
    };
    // A gene is excess when its innovation lies beyond the other genome's range.
    let beyond = |innov: u64, other_max: Option<u64>| other_max.is_none_or(|m| innov > m);
    while i < ca.len() || j < cb.len() {
        match (ca.get(i), cb.get(j)) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                out.matching += 1;
                out.weight_diff_sum += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.innovation < y.innovation => {
                if beyond(x.innovation, max_b) {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                i += 1;
            }
            (Some(_), Some(y)) => {
                if beyond(y.innovation, max_a) {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                j += 1;
            }
            (Some(x), None) => {
                if beyond(x.innovation, max_b) {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                i += 1;
            }
            (None, Some(y)) => {
                if beyond(y.innovation, max_a) {
                    out.excess += 1;
                } else {
                    out.disjoint += 1;
                }
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// `c_e·E/N + c_d·D/N + c_w·W̄`, with `N = 1` when both genomes have fewer than 20 genes.
pub fn compatibility_distance(a: &NeatGenome, b: &NeatGenome, cfg: &NeatConfig) -> f64 {
    let al = align(a, b);
    let longest = a.connections.len().max(b.connections.len());
    let n = if a.connections.len() < 20 && b.connections.len() < 20 {
        1.0
    } else {
        longest as f64
    };
    let mean_w = if al.matching > 0 {
        al.weight_diff_sum / al.matching as f64
    } else {
        0.0
    };
    cfg.c_excess * al.excess as f64 / n + cfg.c_disjoint * al.disjoint as f64 / n + cfg.c_weight * mean_w
}

/// Aligned crossover. Matching genes come from either parent at random,
/// unmatched genes from the fitter parent (`a` on ties).
pub fn crossover_neat(a: &NeatGenome, b: &NeatGenome, cfg: &NeatConfig, rng: &mut impl Rng) -> NeatGenome {
    let (fit, other) = if b.fitness > a.fitness { (b, a) } else { (a, b) };
    let mut connections = Vec::with_capacity(fit.connections.len());
    let mut j = 0;
    for g in &fit.connections {
        while j < other.connections.len() && other.connections[j].innovation < g.innovation {
            j += 1;
        }
        let matched = other.connections.get(j).filter(|o| o.innovation == g.innovation);
        let mut child = match matched {
            Some(o) if rng.random_bool(0.5) => o.clone(),
            _ => g.clone(),
        };
        if let Some(o) = matched {
            if !g.active || !o.active {
                child.active = !rng.random_bool(cfg.disabled_inherit_prob);
            }
        }
        connections.push(child);
    }
    let nodes = fit
        .nodes
        .iter()
        .map(|n| match other.node(n.id) {
            Some(o) if n.kind != NodeKind::Input && rng.random_bool(0.5) => NodeGene {
                bias: o.bias,
                ..n.clone()
            },
            _ => n.clone(),
        })
        .collect();
    NeatGenome {
        nodes,
        connections,
        fitness: 0.0,
        adjusted_fitness: 0.0,
    }
}

/// Splits a uniformly chosen active connection. Returns false when there is none.
pub fn mutate_add_node(g: &mut NeatGenome, registry: &mut InnovationRegistry, rng: &mut impl Rng) -> bool {
    let candidates: Vec<usize> = (0..g.connections.len()).filter(|i| g.connections[*i].active).collect();
    let Some(&pick) = candidates.choose(rng) else {
        return false;
    };
    let old = g.connections[pick].clone();
    g.connections[pick].active = false;
    let node = registry.split_node(old.innovation, |id| g.has_node(id));
    g.nodes.push(NodeGene {
        id: node,
        kind: NodeKind::Hidden,
        active: true,
        bias: 0.0,
    });
    g.connections.push(ConnectionGene {
        from: old.from,
        to: node,
        weight: 1.0,
        active: true,
        innovation: registry.innovation(old.from, node),
    });
    g.connections.push(ConnectionGene {
        from: node,
        to: old.to,
        weight: old.weight,
        active: true,
        innovation: registry.innovation(node, old.to),
    });
    g.normalize_order();
    true
}

/// True when `target` is reachable from `start` over all connection genes.
pub fn reaches(g: &NeatGenome, start: u32, target: u32) -> bool {
    let mut stack = vec![start];
    let mut seen = BTreeSet::new();
    while let Some(n) = stack.pop() {
        if n == target {
            return true;
        }
        if seen.insert(n) {
            stack.extend(g.connections.iter().filter(|c| c.from == n).map(|c| c.to));
        }
    }
    false
}

/// Adds one new feed-forward connection, trying up to 20 random pairs.
pub fn mutate_add_connection(g: &mut NeatGenome, registry: &mut InnovationRegistry, rng: &mut impl Rng) -> bool {
    let sources: Vec<u32> = g
        .nodes
        .iter()
        .filter(|n| n.kind != NodeKind::Output && n.active)
        .map(|n| n.id)
        .collect();
    let targets: Vec<u32> = g
        .nodes
        .iter()
        .filter(|n| n.kind != NodeKind::Input && n.active)
        .map(|n| n.id)
        .collect();
    if sources.is_empty() || targets.is_empty() {
        return false;
    }
    for _ in 0..ADD_CONNECTION_TRIES {
        let from = *sources.choose(rng).expect("non-empty");
        let to = *targets.choose(rng).expect("non-empty");
        if from == to || g.connection(from, to).is_some() || reaches(g, to, from) {
            continue;
        }
        let weight: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
        g.connections.push(ConnectionGene {
            from,
            to,
            weight: weight.clamp(-WEIGHT_CLAMP, WEIGHT_CLAMP),
            active: true,
            innovation: registry.innovation(from, to),
        });
        g.normalize_order();
        return true;
    }
    false
}

/// With probability `weight_mutate_rate`, perturbs every connection weight and
/// non-input bias (Normal(0, σ) with probability `weight_perturb_prob`, else a
/// fresh Uniform(−r, r) value), clamped to ±30.
pub fn mutate_weights_neat(g: &mut NeatGenome, cfg: &NeatConfig, rng: &mut impl Rng) -> bool {
    if !rng.random_bool(cfg.weight_mutate_rate) {
        return false;
    }
    let normal = Normal::new(0.0, cfg.perturb_sigma).expect("valid sigma");
    let r = cfg.replace_range;
    let nudge = |w: &mut f64, rng: &mut dyn rand::RngCore| {
        let v = if rng.random_bool(cfg.weight_perturb_prob) {
            *w + normal.sample(rng)
        } else {
            rng.random_range(-r..=r)
        };
        *w = v.clamp(-WEIGHT_CLAMP, WEIGHT_CLAMP);
    };
    for c in g.connections.iter_mut() {
        nudge(&mut c.weight, rng);
    }
    for n in g.nodes.iter_mut().filter(|n| n.kind != NodeKind::Input) {
        nudge(&mut n.bias, rng);
    }
    true
}
