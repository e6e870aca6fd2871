use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::network::{decode_neat, ConnectionGene, NeatGenome, NodeGene, NodeKind};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn toy(n_in: usize, n_out: usize, w: f64) -> (NeatGenome, InnovationRegistry) {
    let mut reg = InnovationRegistry::new((n_in + n_out) as u32);
    let g = single_layer(n_in, n_out, &mut reg, |_, _| w, |_| 0.0);
    (g, reg)
}

/// Genome holding exactly the given innovations as links between
/// synthetic node pairs; only the alignment fields matter here.
fn with_innovations(innovs: &[u64], w: f64) -> NeatGenome {
    NeatGenome {
        nodes: Vec::new(),
        connections: innovs
            .iter()
            .map(|i| ConnectionGene {
                from: *i as u32,
                to: 1000 + *i as u32,
                weight: w,
                active: true,
                innovation: *i,
            })
            .collect(),
        fitness: 0.0,
        adjusted_fitness: 0.0,
    }
}

fn innovation_set(g: &NeatGenome) -> BTreeSet<u64> {
    g.connections.iter().map(|c| c.innovation).collect()
}

#[test]
fn distance_to_self_is_zero() {
    let (g, _) = toy(3, 2, 0.7);
    assert_eq!(compatibility_distance(&g, &g, &NeatConfig::default()), 0.0);
}

#[test]
fn uniform_half_weight_offset_gives_point_two() {
    let (a, _) = toy(3, 2, 0.25);
    let (b, _) = toy(3, 2, 0.75);
    let d = compatibility_distance(&a, &b, &NeatConfig::default());
    assert!((d - 0.2).abs() < 1e-12, "{d}");
}

#[test]
fn disjoint_innovation_sets_match_brute_force() {
    let cfg = NeatConfig::default();
    let mut r = rng(1);
    for _ in 0..200 {
        // Two 5-gene toys with no shared innovation.
        let mut pool: Vec<u64> = (0..30).collect();
        let mut pick = |n: usize| -> Vec<u64> {
            let mut out = Vec::new();
            for _ in 0..n {
                let k = r.random_range(0..pool.len());
                out.push(pool.swap_remove(k));
            }
            out.sort();
            out
        };
        let ia = pick(5);
        let ib = pick(5);
        let a = with_innovations(&ia, 1.0);
        let b = with_innovations(&ib, -1.0);
        let (max_a, max_b) = (*ia.last().unwrap(), *ib.last().unwrap());
        let excess = ia.iter().filter(|i| **i > max_b).count() + ib.iter().filter(|i| **i > max_a).count();
        let disjoint = 10 - excess;
        let expected = cfg.c_excess * excess as f64 + cfg.c_disjoint * disjoint as f64;
        assert_eq!(compatibility_distance(&a, &b, &cfg), expected);
    }
}

#[test]
fn large_genomes_normalise_by_gene_count() {
    let cfg = NeatConfig::default();
    let a = with_innovations(&(0..20).collect::<Vec<_>>(), 0.0);
    let b = with_innovations(&(0..25).collect::<Vec<_>>(), 0.0);
    let d = compatibility_distance(&a, &b, &cfg);
    assert!((d - 5.0 / 25.0).abs() < 1e-12);
}

#[test]
fn clones_form_one_species() {
    let (g, _) = toy(3, 2, 0.5);
    let pop = vec![g; 10];
    let mut next_id = 0;
    let s = speciate(&pop, &[], &mut next_id, &NeatConfig::default(), &mut rng(0));
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].members, (0..10).collect::<Vec<_>>());
}

#[test]
fn two_far_clusters_form_two_species() {
    let cfg = NeatConfig::default();
    let (a, _) = toy(3, 2, 0.0);
    let (b, _) = toy(3, 2, 10.0);
    let pop: Vec<NeatGenome> = (0..12).map(|i| if i % 3 == 0 { b.clone() } else { a.clone() }).collect();
    // Oracle: the pairwise distance matrix has exactly two zero-distance blocks.
    for x in &pop {
        for y in &pop {
            let d = compatibility_distance(x, y, &cfg);
            assert!(d == 0.0 || d > cfg.compat_threshold);
        }
    }
    let mut next_id = 0;
    let s = speciate(&pop, &[], &mut next_id, &cfg, &mut rng(3));
    assert_eq!(s.len(), 2);
    assert_eq!(s[0].members, vec![0, 3, 6, 9]);
}

#[test]
fn speciation_is_a_partition_and_keeps_previous_ids() {
    let cfg = NeatConfig {
        compat_threshold: 1.0,
        ..NeatConfig::default()
    };
    let mut r = rng(9);
    let mut reg = InnovationRegistry::new(5);
    let pop: Vec<NeatGenome> = (0..40).map(|_| random_initial(3, 2, 1.0, &mut reg, &mut r)).collect();
    let mut next_id = 0;
    let first = speciate(&pop, &[], &mut next_id, &cfg, &mut r);
    let second = speciate(&pop, &first, &mut next_id, &cfg, &mut r);
    for s in [&first, &second] {
        let mut all: Vec<usize> = s.iter().flat_map(|x| x.members.clone()).collect();
        all.sort();
        assert_eq!(all, (0..40).collect::<Vec<_>>());
    }
    let first_ids: BTreeSet<u32> = first.iter().map(|s| s.id).collect();
    assert!(second.iter().take(1).all(|s| first_ids.contains(&s.id)));
    for s in &second {
        assert!(s.members.iter().any(|m| pop[*m] == s.representative));
    }
}

#[test]
fn sharing_divides_by_species_size() {
    let (g, _) = toy(1, 1, 0.0);
    let mut pop = vec![g; 5];
    for (i, p) in pop.iter_mut().enumerate() {
        p.fitness = if i < 4 { 8.0 } else { 3.0 };
    }
    let s = vec![
        Species {
            id: 0,
            representative: pop[0].clone(),
            members: vec![0, 1, 2, 3],
            best_fitness_ever: 0.0,
            staleness: 0,
        },
        Species {
            id: 1,
            representative: pop[4].clone(),
            members: vec![4],
            best_fitness_ever: 0.0,
            staleness: 0,
        },
    ];
    fitness_sharing(&s, &mut pop);
    assert!(pop[..4].iter().all(|p| p.adjusted_fitness == 2.0));
    assert_eq!(pop[4].adjusted_fitness, 3.0);
}

#[test]
fn sharing_sums_to_species_mean_and_keeps_argmax() {
    let mut r = rng(4);
    let (g, _) = toy(1, 1, 0.0);
    for _ in 0..100 {
        let n = r.random_range(1..20);
        let mut pop = vec![g.clone(); n];
        for p in pop.iter_mut() {
            p.fitness = r.random_range(-50.0..50.0);
        }
        let s = vec![Species {
            id: 0,
            representative: g.clone(),
            members: (0..n).collect(),
            best_fitness_ever: 0.0,
            staleness: 0,
        }];
        let before = s[0].best_member(&pop);
        fitness_sharing(&s, &mut pop);
        let raw: f64 = pop.iter().map(|p| p.fitness).sum();
        let adj: f64 = pop.iter().map(|p| p.adjusted_fitness).sum();
        assert!((adj - raw / n as f64).abs() < 1e-9);
        let after = (0..n).max_by(|a, b| pop[*a].adjusted_fitness.total_cmp(&pop[*b].adjusted_fitness).then(b.cmp(a)));
        assert_eq!(before, after);
    }
}

#[test]
fn allocation_is_exactly_proportional() {
    assert_eq!(apportion(&[30.0, 10.0], &[true, true], 40), vec![30, 10]);
    assert_eq!(apportion(&[7.0], &[true], 40), vec![40]);
    assert_eq!(apportion(&[0.0, 0.0], &[true, true], 5), vec![3, 2]);
    assert_eq!(apportion(&[5.0, 5.0], &[false, true], 10), vec![0, 10]);
}

#[test]
fn allocation_conserves_population() {
    let mut r = rng(5);
    for _ in 0..1000 {
        let k = r.random_range(1..12);
        let masses: Vec<f64> = (0..k).map(|_| r.random_range(0.0..100.0)).collect();
        let mut eligible: Vec<bool> = (0..k).map(|_| r.random_bool(0.8)).collect();
        eligible[0] = true;
        let total = r.random_range(1..300);
        let c = apportion(&masses, &eligible, total);
        assert_eq!(c.iter().sum::<usize>(), total);
        assert!(c.iter().zip(&eligible).all(|(n, e)| *e || *n == 0));
    }
}

#[test]
fn allocation_shifts_negative_fitness_and_culls_stale() {
    let (g, _) = toy(1, 1, 0.0);
    let mut pop = vec![g; 3];
    pop[0].fitness = -10.0;
    pop[1].fitness = -30.0;
    pop[2].fitness = 5.0;
    let mut s: Vec<Species> = (0..3)
        .map(|i| Species {
            id: i as u32,
            representative: pop[i].clone(),
            members: vec![i],
            best_fitness_ever: 0.0,
            staleness: 0,
        })
        .collect();
    fitness_sharing(&s, &mut pop);
    // Shifted masses 20, 0, 35.
    assert_eq!(allocate_offspring(&s, &pop, 55, 15), vec![20, 0, 35]);
    s[0].staleness = 16;
    s[2].staleness = 16;
    assert_eq!(allocate_offspring(&s, &pop, 55, 15), vec![0, 0, 55]);
}

#[test]
fn crossover_of_identical_parents_is_structurally_identical() {
    let (a, _) = toy(3, 2, 0.3);
    let child = crossover_neat(&a, &a, &NeatConfig::default(), &mut rng(0));
    assert_eq!(child.nodes, a.nodes);
    assert_eq!(child.connections, a.connections);
}

#[test]
fn crossover_takes_fitter_structure() {
    let (small, mut reg) = toy(3, 2, 0.3);
    let mut r = rng(6);
    let mut big = small.clone();
    mutate_add_node(&mut big, &mut reg, &mut r);
    mutate_add_node(&mut big, &mut reg, &mut r);
    big.fitness = 5.0;
    let cfg = NeatConfig::default();
    for _ in 0..50 {
        for (x, y) in [(&big, &small), (&small, &big)] {
            let child = crossover_neat(x, y, &cfg, &mut r);
            assert_eq!(innovation_set(&child), innovation_set(&big));
            assert_eq!(child.connections.len(), innovation_set(&child).len());
            child.validate().unwrap();
        }
    }
}

#[test]
fn crossover_tie_takes_structure_from_first() {
    let (small, mut reg) = toy(2, 1, 0.3);
    let mut big = small.clone();
    mutate_add_node(&mut big, &mut reg, &mut rng(0));
    let child = crossover_neat(&small, &big, &NeatConfig::default(), &mut rng(1));
    assert_eq!(innovation_set(&child), innovation_set(&small));
}

#[test]
fn disabled_genes_stay_disabled_three_quarters_of_the_time() {
    let (a, _) = toy(1, 1, 0.3);
    let mut b = a.clone();
    b.connections[0].active = false;
    let cfg = NeatConfig::default();
    let mut r = rng(7);
    let n = 20_000;
    let off = (0..n).filter(|_| !crossover_neat(&a, &b, &cfg, &mut r).connections[0].active).count();
    assert!((off as f64 / n as f64 - 0.75).abs() < 0.02);
}

#[test]
fn add_node_changes_counts_and_disables_split() {
    let mut r = rng(8);
    let mut reg = InnovationRegistry::new(73);
    let mut g = single_layer(68, 5, &mut reg, |_, _| r.random_range(-1.0..1.0), |_| 0.0);
    let (nodes, conns) = (g.nodes.len(), g.connections.len());
    assert!(mutate_add_node(&mut g, &mut reg, &mut r));
    assert_eq!(g.nodes.len(), nodes + 1);
    assert_eq!(g.connections.len(), conns + 2);
    assert_eq!(g.connections.iter().filter(|c| !c.active).count(), 1);
    g.validate().unwrap();
    decode_neat(&g).unwrap();
}

#[test]
fn same_split_in_two_genomes_shares_innovations() {
    let (g, mut reg) = toy(1, 1, 0.5);
    let mut a = g.clone();
    let mut b = g.clone();
    mutate_add_node(&mut a, &mut reg, &mut rng(1));
    mutate_add_node(&mut b, &mut reg, &mut rng(2));
    assert_eq!(a, b);
    assert_eq!(innovation_set(&a), BTreeSet::from([0, 1, 2]));
}

#[test]
fn add_node_never_splits_disabled_links() {
    let (mut g, mut reg) = toy(2, 1, 0.5);
    g.connections[0].active = false;
    let mut r = rng(3);
    for _ in 0..20 {
        let mut h = g.clone();
        mutate_add_node(&mut h, &mut reg, &mut r);
        let split = h.connections.iter().filter(|c| !c.active).count();
        assert_eq!(split, 2);
        assert!(!h.connection(0, 2).unwrap().active);
    }
    let mut none = g.clone();
    for c in none.connections.iter_mut() {
        c.active = false;
    }
    let before = none.clone();
    assert!(!mutate_add_node(&mut none, &mut reg, &mut r));
    assert_eq!(none, before);
}

#[test]
fn add_connection_on_saturated_genome_is_noop() {
    let (mut g, mut reg) = toy(68, 5, 0.1);
    let before = g.clone();
    assert!(!mutate_add_connection(&mut g, &mut reg, &mut rng(0)));
    assert_eq!(g, before);
}

/// Independent cycle check: repeatedly strip nodes with no incoming edges.
fn acyclic(g: &NeatGenome) -> bool {
    let mut edges: Vec<(u32, u32)> = g.connections.iter().map(|c| (c.from, c.to)).collect();
    let mut nodes: BTreeSet<u32> = g.nodes.iter().map(|n| n.id).collect();
    loop {
        let sources: Vec<u32> = nodes.iter().copied().filter(|n| !edges.iter().any(|e| e.1 == *n)).collect();
        if sources.is_empty() {
            return nodes.is_empty();
        }
        for s in sources {
            nodes.remove(&s);
            edges.retain(|e| e.0 != s);
        }
    }
}

#[test]
fn structural_mutations_never_create_cycles_or_duplicates() {
    let mut r = rng(10);
    let (mut g, mut reg) = toy(4, 2, 0.5);
    for _ in 0..1000 {
        if r.random_bool(0.3) {
            mutate_add_node(&mut g, &mut reg, &mut r);
        } else {
            mutate_add_connection(&mut g, &mut reg, &mut r);
        }
        assert!(acyclic(&g));
        let pairs: BTreeSet<(u32, u32)> = g.connections.iter().map(|c| (c.from, c.to)).collect();
        assert_eq!(pairs.len(), g.connections.len());
    }
    g.validate().unwrap();
}

#[test]
fn weight_mutation_rate_zero_is_identity() {
    let (mut g, _) = toy(3, 2, 0.5);
    let before = g.clone();
    let cfg = NeatConfig {
        weight_mutate_rate: 0.0,
        ..NeatConfig::default()
    };
    assert!(!mutate_weights_neat(&mut g, &cfg, &mut rng(0)));
    assert_eq!(g, before);
}

#[test]
fn weight_mutation_matches_mixture_spread() {
    let cfg = NeatConfig {
        weight_mutate_rate: 1.0,
        ..NeatConfig::default()
    };
    let (g, _) = toy(50, 1, 0.0);
    let mut r = rng(11);
    let mut deltas = Vec::new();
    for _ in 0..200 {
        let mut h = g.clone();
        mutate_weights_neat(&mut h, &cfg, &mut r);
        deltas.extend(h.connections.iter().map(|c| c.weight));
    }
    let n = deltas.len() as f64;
    let mean = deltas.iter().sum::<f64>() / n;
    let var = deltas.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    // 0.9·0.5² + 0.1·(2²/3) for a start weight of zero.
    let expected = (0.9 * 0.25 + 0.1 * 4.0 / 3.0_f64).sqrt();
    assert!((var.sqrt() - expected).abs() < 0.02, "{} vs {expected}", var.sqrt());
}

#[test]
fn weight_mutation_respects_clamp() {
    let cfg = NeatConfig {
        weight_mutate_rate: 1.0,
        weight_perturb_prob: 1.0,
        perturb_sigma: 100.0,
        ..NeatConfig::default()
    };
    let (mut g, _) = toy(10, 2, 29.0);
    let mut r = rng(12);
    for _ in 0..50 {
        mutate_weights_neat(&mut g, &cfg, &mut r);
        assert!(g.connections.iter().all(|c| c.weight.abs() <= 30.0));
        assert!(g.nodes.iter().all(|n| n.bias.abs() <= 30.0));
    }
}

#[test]
fn config_validation() {
    assert!(NeatConfig::default().validate().is_ok());
    let bad = NeatConfig {
        survival_fraction: 0.0,
        ..NeatConfig::default()
    };
    assert!(bad.validate().is_err());
    let bad = NeatConfig {
        add_node_rate: 1.5,
        ..NeatConfig::default()
    };
    assert!(bad.validate().is_err());
}

#[test]
fn generation_conserves_size_and_keeps_champion() {
    let cfg = NeatConfig {
        population_size: 60,
        add_node_rate: 0.2,
        add_connection_rate: 0.3,
        ..NeatConfig::default()
    };
    let mut pop = NeatPopulation::new(cfg, 3, 2, 42).unwrap();
    let mut r = rng(13);
    for _ in 0..30 {
        let fit: Vec<f64> = (0..60).map(|_| r.random_range(-100.0..100.0)).collect();
        let best = crate::ga::ranking(&fit)[0];
        let mut champion = pop.genomes[best].clone();
        champion.fitness = fit[best];
        let report = pop.advance(&fit).unwrap();
        assert_eq!(pop.genomes.len(), 60);
        assert_eq!(report.species.iter().map(|s| s.offspring).sum::<usize>(), 60);
        assert!(pop
            .genomes
            .iter()
            .any(|g| g.nodes == champion.nodes && g.connections == champion.connections));
        for g in &pop.genomes {
            g.validate().unwrap();
            assert!(acyclic(g));
        }
    }
}

#[test]
fn population_rejects_wrong_fitness_length() {
    let mut pop = NeatPopulation::new(
        NeatConfig {
            population_size: 5,
            ..NeatConfig::default()
        },
        2,
        1,
        0,
    )
    .unwrap();
    assert!(matches!(pop.advance(&[0.0; 4]), Err(NeatError::FitnessLength { .. })));
}

#[test]
fn hidden_nodes_get_ids_past_io() {
    let (mut g, mut reg) = toy(2, 1, 1.0);
    mutate_add_node(&mut g, &mut reg, &mut rng(0));
    let hidden: Vec<&NodeGene> = g.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).collect();
    assert_eq!(hidden.len(), 1);
    assert_eq!(hidden[0].id, 3);
}
