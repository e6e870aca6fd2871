//! Runs an experiment file: baseline campaigns against scripted archetypes,
//! coevolution runs, or single evaluation matches. Every run checkpoints
//! after each generation and resumes from its checkpoint when rerun.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Campaign, ConfigError, ExperimentConfig};
use crate::controller::{Controller, Neural, Scripted};
use crate::enemies::ArchetypeTable;
use crate::engine::Side;
use crate::evaluation::{
    match_fitness, run_match, summarize_baseline, BaselineRow, BaselineRun, BaselineSettings, Coevolution,
    CoevolutionSettings, EvalError, MatchRecord, MatchSetup,
};
use crate::ga::GaConfig;
use crate::neat::{GenerationReport, NeatConfig};
use crate::network::{Genome, GenomeFile, GenomeFileError, Provenance};
use crate::par::Execution;
use crate::replay::{Replay, ReplayError};
use crate::rng::{derive_indexed, Stream};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Genome(#[from] GenomeFileError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
}

impl ExperimentError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes through a temporary file so readers never see partial content.
fn write_atomic(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub output_dir: PathBuf,
    pub execution: Execution,
    pub archetypes: ArchetypeTable,
}

impl RunOptions {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            output_dir: output_dir.into(),
            execution: Execution::default(),
            archetypes: ArchetypeTable::builtin(),
        }
    }
}

/// Files written by a run, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
}

/// Species statistics of one NEAT generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRow {
    pub side: Side,
    pub generation: u32,
    pub species_id: u32,
    pub size: usize,
    pub best_fitness: f64,
    pub offspring: usize,
}

fn species_rows(side: Side, report: &GenerationReport, generation: u32) -> Vec<SpeciesRow> {
    report
        .species
        .iter()
        .map(|s| SpeciesRow {
            side,
            generation,
            species_id: s.id,
            size: s.size,
            best_fitness: s.best_fitness,
            offspring: s.offspring,
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct Checkpoint<T> {
    config_hash: String,
    state: T,
    species: Vec<SpeciesRow>,
}

fn load_checkpoint<T: DeserializeOwned>(path: &Path, hash: &str) -> Result<Option<Checkpoint<T>>, ExperimentError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let cp: Checkpoint<T> = serde_json::from_str(&text).map_err(|e| ExperimentError::Checkpoint {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    if cp.config_hash != hash {
        log::info!("ignoring checkpoint {} from a different config", path.display());
        return Ok(None);
    }
    Ok(Some(cp))
}

fn save_checkpoint<T: Serialize>(path: &Path, cp: &Checkpoint<T>) -> Result<(), ExperimentError> {
    write_atomic(path, &serde_json::to_string(cp).expect("checkpoints serialize"))
}

fn provenance_line(hash: &str, seeds: &[u64]) -> String {
    let seeds: Vec<String> = seeds.iter().map(|s| s.to_string()).collect();
    format!("# config_hash={hash} master_seeds={}\n", seeds.join(";"))
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    opts: &'a RunOptions,
    hash: String,
    report: ExperimentReport,
}

impl Context<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.opts.output_dir.join(rel)
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<(), ExperimentError> {
        write_atomic(&self.path(rel), contents)?;
        self.report.files.push(PathBuf::from(rel));
        Ok(())
    }

    fn write_genome(&mut self, rel: &str, genome: Genome, seed: u64, label: &str) -> Result<(), ExperimentError> {
        let file = GenomeFile::new(
            genome,
            Some(Provenance {
                config_hash: self.hash.clone(),
                master_seed: seed,
                label: label.to_string(),
            }),
        );
        self.write(rel, &file.to_json())
    }

    fn write_replay(&mut self, rel: &str, record: &MatchRecord, setup: &MatchSetup, seed: u64) -> Result<(), ExperimentError> {
        let replay = Replay::from_record(
            record,
            setup.stage.id,
            setup.archetype.id as u32,
            setup.seed,
            setup.tick_limit,
            &self.hash,
            seed,
        );
        self.write(rel, &replay.to_text())
    }

    fn ga(&self) -> GaConfig {
        self.cfg.ga.clone().unwrap_or_default()
    }

    fn neat(&self) -> NeatConfig {
        self.cfg.neat.clone().unwrap_or_default()
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentReport, ExperimentError> {
    cfg.validate()?;
    std::fs::create_dir_all(&opts.output_dir).map_err(io_err(&opts.output_dir))?;
    let mut ctx = Context {
        cfg,
        opts,
        hash: cfg.hash(),
        report: ExperimentReport::default(),
    };
    ctx.write("config.toml", &cfg.to_toml())?;
    match cfg.campaign {
        Campaign::Baseline => run_baseline(&mut ctx)?,
        Campaign::Coevolution => run_coevolution(&mut ctx)?,
        Campaign::SingleMatch => run_single(&mut ctx)?,
    }
    Ok(ctx.report)
}

fn run_baseline(ctx: &mut Context) -> Result<(), ExperimentError> {
    let cfg = ctx.cfg;
    let alg = cfg.algorithm.name();
    let mut all_rows: Vec<BaselineRow> = Vec::new();
    let mut final_rows = Vec::new();
    let mut species = String::new();
    for &enemy in &cfg.enemies {
        for &seed in &cfg.seeds {
            let name = format!("baseline-{alg}-enemy{enemy}-seed{seed}");
            let cp_path = ctx.path(&format!("checkpoints/{name}.json"));
            let (mut run, mut sp) = match load_checkpoint::<BaselineRun>(&cp_path, &ctx.hash)? {
                Some(cp) => {
                    log::info!("{name}: resuming after generation {}", cp.state.rows.len());
                    (cp.state, cp.species)
                }
                None => (
                    BaselineRun::new(BaselineSettings {
                        algorithm: cfg.algorithm,
                        enemy_id: enemy,
                        seed,
                        generations: cfg.generations,
                        ga: ctx.ga(),
                        neat: ctx.neat(),
                        weights: cfg.fitness.player,
                        tick_limit: cfg.tick_limit,
                    })?,
                    Vec::new(),
                ),
            };
            while !run.is_finished() {
                let (row, report) = run.step(&ctx.opts.archetypes, ctx.opts.execution)?;
                log::info!(
                    "{name} gen {}: fitness {:.2} player {} enemy {}",
                    row.generation,
                    row.best_fitness,
                    row.best_player_energy,
                    row.enemy_energy
                );
                if let Some(r) = report {
                    sp.extend(species_rows(Side::Player, &r, row.generation));
                }
                save_checkpoint(
                    &cp_path,
                    &Checkpoint {
                        config_hash: ctx.hash.clone(),
                        state: run.clone(),
                        species: sp.clone(),
                    },
                )?;
            }
            let record = run.champion_match(&ctx.opts.archetypes)?.expect("finished runs have a champion");
            let setup = run.match_setup(&ctx.opts.archetypes)?;
            let champion = run.champion.clone().expect("finished runs have a champion");
            ctx.write_genome(&format!("genomes/{name}.json"), champion, seed, &name)?;
            ctx.write_replay(&format!("replays/{name}.replay"), &record, &setup, seed)?;
            for s in &sp {
                let _ = writeln!(
                    species,
                    "{enemy},{seed},{},{},{},{},{}",
                    s.generation, s.species_id, s.size, s.best_fitness, s.offspring
                );
            }
            final_rows.push(run.rows.last().expect("finished runs have rows").clone());
            all_rows.extend(run.rows);
        }
    }
    let head = provenance_line(&ctx.hash, &cfg.seeds);
    let mut csv = head.clone();
    csv.push_str("algorithm,enemy_id,seed,generation,best_fitness,best_player_energy,enemy_energy,duration\n");
    for r in &all_rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.algorithm.name(),
            r.enemy_id,
            r.seed,
            r.generation,
            r.best_fitness,
            r.best_player_energy,
            r.enemy_energy,
            r.duration
        );
    }
    ctx.write("baseline.csv", &csv)?;
    let mut summary = head.clone();
    summary.push_str("algorithm,enemy_id,runs,mean_player_energy,mean_enemy_energy,wins\n");
    for s in summarize_baseline(&final_rows) {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            s.algorithm.name(),
            s.enemy_id,
            s.runs,
            s.mean_player_energy,
            s.mean_enemy_energy,
            s.wins
        );
    }
    ctx.write("summary.csv", &summary)?;
    if !species.is_empty() {
        let text = format!("{head}enemy_id,seed,generation,species_id,size,best_fitness,offspring\n{species}");
        ctx.write("species.csv", &text)?;
    }
    Ok(())
}

fn run_coevolution(ctx: &mut Context) -> Result<(), ExperimentError> {
    let cfg = ctx.cfg;
    let alg = cfg.algorithm.name();
    for &enemy in &cfg.enemies {
        for &seed in &cfg.seeds {
            let name = format!("coevolution-{alg}-enemy{enemy}-seed{seed}");
            let cp_path = ctx.path(&format!("checkpoints/{name}.json"));
            let (mut run, mut sp) = match load_checkpoint::<Coevolution>(&cp_path, &ctx.hash)? {
                Some(cp) => (cp.state, cp.species),
                None => (
                    Coevolution::new(CoevolutionSettings {
                        algorithm: cfg.algorithm,
                        enemy_id: enemy,
                        seed,
                        schedule: cfg.schedule,
                        ga: ctx.ga(),
                        neat: ctx.neat(),
                        player_weights: cfg.fitness.player,
                        enemy_weights: cfg.fitness.enemy,
                        tick_limit: cfg.tick_limit,
                    })?,
                    Vec::new(),
                ),
            };
            while !run.is_finished() {
                let (row, report) = run.step(&ctx.opts.archetypes, ctx.opts.execution)?;
                log::info!(
                    "{name} gen {} ({:?}): player {} enemy {}",
                    row.generation,
                    row.evolving_side,
                    row.best_player_energy,
                    row.best_enemy_energy
                );
                if let Some(r) = report {
                    sp.extend(species_rows(row.evolving_side, &r, row.generation));
                }
                save_checkpoint(
                    &cp_path,
                    &Checkpoint {
                        config_hash: ctx.hash.clone(),
                        state: run.clone(),
                        species: sp.clone(),
                    },
                )?;
            }
            let head = provenance_line(&ctx.hash, &[seed]);
            let mut csv = head.clone();
            csv.push_str("generation,evolving_side,best_player_energy,best_enemy_energy\n");
            for r in &run.rows {
                let side = match r.evolving_side {
                    Side::Player => "player",
                    Side::Enemy => "enemy",
                };
                let _ = writeln!(csv, "{},{side},{},{}", r.generation, r.best_player_energy, r.best_enemy_energy);
            }
            ctx.write(&format!("{name}.csv"), &csv)?;
            if !sp.is_empty() {
                let mut text = head.clone();
                text.push_str("side,generation,species_id,size,best_fitness,offspring\n");
                for s in &sp {
                    let side = if s.side == Side::Player { "player" } else { "enemy" };
                    let _ = writeln!(
                        text,
                        "{side},{},{},{},{},{}",
                        s.generation, s.species_id, s.size, s.best_fitness, s.offspring
                    );
                }
                ctx.write(&format!("{name}-species.csv"), &text)?;
            }
            let record = run.champion_match(&ctx.opts.archetypes)?;
            let setup = run.match_setup(&ctx.opts.archetypes)?;
            ctx.write_genome(&format!("genomes/{name}-player.json"), run.champion(Side::Player), seed, &name)?;
            ctx.write_genome(&format!("genomes/{name}-enemy.json"), run.champion(Side::Enemy), seed, &name)?;
            ctx.write_replay(&format!("replays/{name}.replay"), &record, &setup, seed)?;
        }
    }
    Ok(())
}

fn run_single(ctx: &mut Context) -> Result<(), ExperimentError> {
    let cfg = ctx.cfg;
    let block = cfg.single_match.as_ref().expect("validated");
    let player = GenomeFile::load(&block.player_genome)?.genome.brain().map_err(EvalError::from)?;
    let enemy_brain = match &block.enemy_genome {
        Some(p) => Some(GenomeFile::load(p)?.genome.brain().map_err(EvalError::from)?),
        None => None,
    };
    let mut csv = provenance_line(&ctx.hash, &cfg.seeds);
    csv.push_str("enemy_id,seed,winner,player_energy,enemy_energy,duration,player_fitness,enemy_fitness\n");
    for &enemy in &cfg.enemies {
        for &seed in &cfg.seeds {
            let setup = MatchSetup::for_archetype(
                ctx.opts.archetypes.get(enemy).map_err(EvalError::from)?,
                derive_indexed(seed, Stream::Match, enemy as u64),
                cfg.tick_limit,
            )?;
            let mut p = Neural::new(player.clone());
            let mut e: Box<dyn Controller> = match &enemy_brain {
                Some(b) => Box::new(Neural::new(b.clone())),
                None => Box::new(Scripted),
            };
            let record = run_match(&mut p, e.as_mut(), &setup, true);
            let pf = match_fitness(&record.player, &cfg.fitness.player)?;
            let ef = match_fitness(&record.enemy, &cfg.fitness.enemy)?;
            let winner = match record.outcome {
                crate::engine::Outcome::Player => "player",
                crate::engine::Outcome::Enemy => "enemy",
                crate::engine::Outcome::Timeout => "timeout",
            };
            let _ = writeln!(
                csv,
                "{enemy},{seed},{winner},{},{},{},{pf},{ef}",
                record.player.self_energy, record.enemy.self_energy, record.player.duration
            );
            ctx.write_replay(&format!("replays/match-enemy{enemy}-seed{seed}.replay"), &record, &setup, seed)?;
        }
    }
    ctx.write("matches.csv", &csv)
}
