//! Neural controllers: genome encodings, decoding into evaluation plans, and
//! the logistic activation with a strict 0.5 firing threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::ActionSet;
use crate::sensors::SENSOR_COUNT;

pub const OUTPUT_COUNT: usize = 5;
pub const FIXED_GENOME_LEN: usize = SENSOR_COUNT * OUTPUT_COUNT + OUTPUT_COUNT;
pub const GENOME_FORMAT_VERSION: u32 = 1;
/// Output neuron order.
pub const OUTPUT_NAMES: [&str; OUTPUT_COUNT] = ["left", "right", "jump", "shoot", "release"];
pub const FIRING_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NetworkError {
    #[error("fixed genome must have {FIXED_GENOME_LEN} genes, got {0}")]
    FixedLength(usize),
    #[error("genome contains a non-finite weight")]
    NonFinite,
    #[error("connection {innovation} references missing node {node}")]
    DanglingConnection { innovation: u64, node: u32 },
    #[error("connection {0} targets an input node")]
    IntoInput(u64),
    #[error("duplicate node id {0}")]
    DuplicateNode(u32),
    #[error("active connections form a cycle")]
    Cycle,
    #[error("expected {expected} inputs, got {got}")]
    InputLength { expected: usize, got: usize },
    #[error("network produced a non-finite output")]
    NonFiniteOutput,
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Single-layer controller: `weights[j * 68 + i]` links sensor `i` to output
/// `j`; the last five genes are the output biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedGenome {
    pub weights: Vec<f64>,
}

impl FixedGenome {
    pub fn new(weights: Vec<f64>) -> Result<Self, NetworkError> {
        if weights.len() != FIXED_GENOME_LEN {
            return Err(NetworkError::FixedLength(weights.len()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(NetworkError::NonFinite);
        }
        Ok(Self { weights })
    }

    pub fn zeros() -> Self {
        Self {
            weights: vec![0.0; FIXED_GENOME_LEN],
        }
    }

    pub fn weight(&self, input: usize, output: usize) -> f64 {
        self.weights[output * SENSOR_COUNT + input]
    }

    pub fn bias(&self, output: usize) -> f64 {
        self.weights[SENSOR_COUNT * OUTPUT_COUNT + output]
    }

    pub fn set_bias(&mut self, output: usize, value: f64) {
        self.weights[SENSOR_COUNT * OUTPUT_COUNT + output] = value;
    }

    /// Raw logistic outputs.
    pub fn outputs(&self, sensors: &[f64]) -> Result<[f64; OUTPUT_COUNT], NetworkError> {
        if sensors.len() != SENSOR_COUNT {
            return Err(NetworkError::InputLength {
                expected: SENSOR_COUNT,
                got: sensors.len(),
            });
        }
        let mut out = [0.0; OUTPUT_COUNT];
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * SENSOR_COUNT..(j + 1) * SENSOR_COUNT];
            let pre = self.bias(j) + row.iter().zip(sensors).map(|(w, s)| w * s).sum::<f64>();
            *o = logistic(pre);
        }
        Ok(out)
    }
}

/// Thresholded action mapping for the single-layer controller.
pub fn activate_fixed(genome: &FixedGenome, sensors: &[f64]) -> Result<ActionSet, NetworkError> {
    outputs_to_actions(&genome.outputs(sensors)?)
}

/// Maps five outputs in (left, right, jump, shoot, release) order.
pub fn outputs_to_actions(outputs: &[f64]) -> Result<ActionSet, NetworkError> {
    if outputs.iter().any(|o| !o.is_finite()) {
        return Err(NetworkError::NonFiniteOutput);
    }
    let fire = |j: usize| outputs.get(j).is_some_and(|o| *o > FIRING_THRESHOLD);
    Ok(ActionSet {
        left: fire(0),
        right: fire(1),
        jump: fire(2),
        shoot: fire(3),
        release: fire(4),
        ..ActionSet::IDLE
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Output,
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub kind: NodeKind,
    pub active: bool,
    /// Ignored for input nodes.
    #[serde(default)]
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub from: u32,
    pub to: u32,
    pub weight: f64,
    pub active: bool,
    pub innovation: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeatGenome {
    /// Sorted by id.
    pub nodes: Vec<NodeGene>,
    /// Sorted by innovation.
    pub connections: Vec<ConnectionGene>,
    #[serde(default)]
    pub fitness: f64,
    #[serde(default)]
    pub adjusted_fitness: f64,
}

impl NeatGenome {
    pub fn node(&self, id: u32) -> Option<&NodeGene> {
        self.nodes.binary_search_by_key(&id, |n| n.id).ok().map(|i| &self.nodes[i])
    }

    pub fn has_node(&self, id: u32) -> bool {
        self.node(id).is_some()
    }

    pub fn input_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Input).map(|n| n.id)
    }

    pub fn output_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Output).map(|n| n.id)
    }

    pub fn connection(&self, from: u32, to: u32) -> Option<&ConnectionGene> {
        self.connections.iter().find(|c| c.from == from && c.to == to)
    }

    pub fn normalize_order(&mut self) {
        self.nodes.sort_by_key(|n| n.id);
        self.connections.sort_by_key(|c| c.innovation);
    }

    pub fn hidden_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    /// Structural checks: unique ids, existing endpoints, no links into inputs.
    pub fn validate(&self) -> Result<(), NetworkError> {
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(NetworkError::DuplicateNode(n.id));
            }
            if !n.bias.is_finite() {
                return Err(NetworkError::NonFinite);
            }
        }
        for c in &self.connections {
            for end in [c.from, c.to] {
                if !seen.contains(&end) {
                    return Err(NetworkError::DanglingConnection {
                        innovation: c.innovation,
                        node: end,
                    });
                }
            }
            if self.node(c.to).map(|n| n.kind) == Some(NodeKind::Input) {
                return Err(NetworkError::IntoInput(c.innovation));
            }
            if !c.weight.is_finite() {
                return Err(NetworkError::NonFinite);
            }
        }
        Ok(())
    }

    /// True when the graph over *all* connection genes (active or not) has a cycle.
    pub fn has_cycle_any(&self) -> bool {
        let edges: Vec<(u32, u32)> = self.connections.iter().map(|c| (c.from, c.to)).collect();
        topological_order(self.nodes.iter().map(|n| n.id), &edges).is_none()
    }
}

/// Kahn's algorithm with smallest-id-first tie breaking. `None` on a cycle.
pub fn topological_order(nodes: impl IntoIterator<Item = u32>, edges: &[(u32, u32)]) -> Option<Vec<u32>> {
    let mut indegree: BTreeMap<u32, usize> = nodes.into_iter().map(|n| (n, 0)).collect();
    let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in edges {
        *indegree.entry(b).or_insert(0) += 1;
        indegree.entry(a).or_insert(0);
        out.entry(a).or_default().push(b);
    }
    let mut ready: BTreeSet<u32> = indegree.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(n) = ready.pop_first() {
        order.push(n);
        if let Some(next) = out.get(&n) {
            for m in next {
                let d = indegree.get_mut(m).expect("edge endpoint registered");
                *d -= 1;
                if *d == 0 {
                    ready.insert(*m);
                }
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

#[derive(Debug, Clone, PartialEq)]
struct NodeStep {
    slot: usize,
    bias: f64,
    links: Vec<(usize, f64)>,
}

/// Topologically ordered evaluation plan over active genes.
#[derive(Debug, Clone, PartialEq)]
pub struct Phenotype {
    input_slots: Vec<usize>,
    output_slots: Vec<usize>,
    steps: Vec<NodeStep>,
    slots: usize,
}

/// Builds the evaluation plan. Inactive connections and connections touching
/// inactive nodes are left out.
pub fn decode_neat(genome: &NeatGenome) -> Result<Phenotype, NetworkError> {
    genome.validate()?;
    let slot_of: BTreeMap<u32, usize> = genome.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let live = |id: u32| genome.node(id).is_some_and(|n| n.active || n.kind != NodeKind::Hidden);
    let edges: Vec<&ConnectionGene> = genome
        .connections
        .iter()
        .filter(|c| c.active && live(c.from) && live(c.to))
        .collect();
    let pairs: Vec<(u32, u32)> = edges.iter().map(|c| (c.from, c.to)).collect();
    let order = topological_order(genome.nodes.iter().map(|n| n.id), &pairs).ok_or(NetworkError::Cycle)?;

    let mut incoming: BTreeMap<u32, Vec<(usize, f64)>> = BTreeMap::new();
    for c in &edges {
        incoming.entry(c.to).or_default().push((slot_of[&c.from], c.weight));
    }
    let mut steps = Vec::new();
    for id in order {
        let node = genome.node(id).expect("ordered node exists");
        if node.kind == NodeKind::Input {
            continue;
        }
        steps.push(NodeStep {
            slot: slot_of[&id],
            bias: node.bias,
            links: incoming.remove(&id).unwrap_or_default(),
        });
    }
    Ok(Phenotype {
        input_slots: genome.input_ids().map(|id| slot_of[&id]).collect(),
        output_slots: genome.output_ids().map(|id| slot_of[&id]).collect(),
        steps,
        slots: genome.nodes.len(),
    })
}

impl Phenotype {
    pub fn input_count(&self) -> usize {
        self.input_slots.len()
    }

    pub fn output_count(&self) -> usize {
        self.output_slots.len()
    }

    /// Raw outputs, using `scratch` as the node-value buffer.
    pub fn outputs_with(&self, inputs: &[f64], scratch: &mut Vec<f64>) -> Result<Vec<f64>, NetworkError> {
        if inputs.len() != self.input_slots.len() {
            return Err(NetworkError::InputLength {
                expected: self.input_slots.len(),
                got: inputs.len(),
            });
        }
        scratch.clear();
        scratch.resize(self.slots, 0.0);
        for (slot, v) in self.input_slots.iter().zip(inputs) {
            scratch[*slot] = *v;
        }
        for step in &self.steps {
            let mut pre = step.bias;
            for (src, w) in &step.links {
                pre += w * scratch[*src];
            }
            scratch[step.slot] = logistic(pre);
        }
        Ok(self.output_slots.iter().map(|s| scratch[*s]).collect())
    }

    pub fn outputs(&self, inputs: &[f64]) -> Result<Vec<f64>, NetworkError> {
        self.outputs_with(inputs, &mut Vec::new())
    }
}

pub fn activate_neat(phenotype: &Phenotype, sensors: &[f64]) -> Result<ActionSet, NetworkError> {
    outputs_to_actions(&phenotype.outputs(sensors)?)
}

/// Either genome kind, serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Genome {
    Fixed(FixedGenome),
    Neat(NeatGenome),
}

impl Genome {
    pub fn brain(&self) -> Result<Brain, NetworkError> {
        match self {
            Genome::Fixed(g) => {
                FixedGenome::new(g.weights.clone())?;
                Ok(Brain::Fixed(g.clone()))
            }
            Genome::Neat(g) => {
                let p = decode_neat(g)?;
                if p.input_count() != SENSOR_COUNT || p.output_count() != OUTPUT_COUNT {
                    return Err(NetworkError::InputLength {
                        expected: SENSOR_COUNT,
                        got: p.input_count(),
                    });
                }
                Ok(Brain::Neat(p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
    #[serde(default)]
    pub label: String,
}

/// On-disk genome document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    pub format_version: u32,
    #[serde(default)]
    pub provenance: Option<Provenance>,
    pub genome: Genome,
}

#[derive(Debug, thiserror::Error)]
pub enum GenomeFileError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{path}: unsupported genome format version {found}")]
    Version { path: String, found: u32 },
    #[error("{path}: {source}")]
    Invalid { path: String, source: NetworkError },
}

impl GenomeFile {
    pub fn new(genome: Genome, provenance: Option<Provenance>) -> Self {
        Self {
            format_version: GENOME_FORMAT_VERSION,
            provenance,
            genome,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("genome documents serialize")
    }

    pub fn from_json(text: &str, path: &str) -> Result<Self, GenomeFileError> {
        let file: GenomeFile = serde_json::from_str(text).map_err(|source| GenomeFileError::Parse {
            path: path.to_string(),
            source,
        })?;
        if file.format_version != GENOME_FORMAT_VERSION {
            return Err(GenomeFileError::Version {
                path: path.to_string(),
                found: file.format_version,
            });
        }
        file.genome.brain().map_err(|source| GenomeFileError::Invalid {
            path: path.to_string(),
            source,
        })?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, GenomeFileError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| GenomeFileError::Io { path: p.clone(), source })?;
        Self::from_json(&text, &p)
    }

    pub fn save(&self, path: &Path) -> Result<(), std::io::Error> {
        std::fs::write(path, self.to_json())
    }
}

/// A decoded controller network.
#[derive(Debug, Clone, PartialEq)]
pub enum Brain {
    Fixed(FixedGenome),
    Neat(Phenotype),
}

impl Brain {
    pub fn outputs_with(&self, sensors: &[f64], scratch: &mut Vec<f64>) -> Result<Vec<f64>, NetworkError> {
        match self {
            Brain::Fixed(g) => Ok(g.outputs(sensors)?.to_vec()),
            Brain::Neat(p) => p.outputs_with(sensors, scratch),
        }
    }

    pub fn act(&self, sensors: &[f64], scratch: &mut Vec<f64>) -> Result<ActionSet, NetworkError> {
        outputs_to_actions(&self.outputs_with(sensors, scratch)?)
    }
}
