//! Replay files: a one-line JSON header followed by one line per tick holding
//! both action sets as bit strings. Re-simulation is the decoder.
//!
//! Each action set is eleven `0`/`1` characters in the order
//! `left right jump release shoot shoot1 … shoot6`; the player's and the
//! enemy's sets are separated by one space.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::controller::Recorded;
use crate::enemies::ArchetypeTable;
use crate::engine::{ActionSet, GameState, Outcome, StageLayout, ENEMY_SHOT_KINDS};
use crate::evaluation::{run_from, MatchRecord};

pub const REPLAY_FORMAT_VERSION: u32 = 1;
const BITS: usize = 5 + ENEMY_SHOT_KINDS;

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("replay is empty")]
    Empty,
    #[error("bad replay header: {0}")]
    Header(String),
    #[error("unsupported replay format version {found} (expected {REPLAY_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("replay truncated: header promises {expected} ticks, found {found}")]
    Truncated { expected: u32, found: u32 },
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("unknown stage {0}")]
    Stage(u32),
    #[error(transparent)]
    Archetype(#[from] crate::enemies::ArchetypeError),
    #[error("re-simulation diverged: {0}")]
    Diverged(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Final energies as recorded when the replay was written.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayOutcome {
    pub player_energy: f64,
    pub enemy_energy: f64,
    pub duration: u32,
    pub winner: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayHeader {
    pub format_version: u32,
    pub stage_id: u32,
    pub enemy_id: u32,
    /// Seed the match state was built from.
    pub seed: u64,
    pub tick_limit: u32,
    pub ticks: u32,
    #[serde(default)]
    pub config_hash: String,
    #[serde(default)]
    pub master_seed: u64,
    pub outcome: ReplayOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub header: ReplayHeader,
    pub actions: Vec<(ActionSet, ActionSet)>,
}

fn encode(a: &ActionSet) -> String {
    let flags = [a.left, a.right, a.jump, a.release, a.shoot];
    flags
        .iter()
        .chain(a.shoot_n.iter())
        .map(|b| if *b { '1' } else { '0' })
        .collect()
}

fn decode(s: &str) -> Option<ActionSet> {
    let bits: Vec<bool> = s
        .chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect::<Option<_>>()?;
    if bits.len() != BITS {
        return None;
    }
    let mut a = ActionSet {
        left: bits[0],
        right: bits[1],
        jump: bits[2],
        release: bits[3],
        shoot: bits[4],
        ..ActionSet::IDLE
    };
    a.shoot_n.copy_from_slice(&bits[5..]);
    Some(a)
}

impl Replay {
    /// Builds a replay from a recorded match. `record.actions` must be populated.
    pub fn from_record(
        record: &MatchRecord,
        stage_id: u32,
        enemy_id: u32,
        seed: u64,
        tick_limit: u32,
        config_hash: &str,
        master_seed: u64,
    ) -> Self {
        Self {
            header: ReplayHeader {
                format_version: REPLAY_FORMAT_VERSION,
                stage_id,
                enemy_id,
                seed,
                tick_limit,
                ticks: record.actions.len() as u32,
                config_hash: config_hash.to_string(),
                master_seed,
                outcome: ReplayOutcome {
                    player_energy: record.player.self_energy,
                    enemy_energy: record.enemy.self_energy,
                    duration: record.player.duration,
                    winner: record.outcome,
                },
            },
            actions: record.actions.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for (p, e) in &self.actions {
            out.push_str(&encode(p));
            out.push(' ');
            out.push_str(&encode(e));
            out.push('\n');
        }
        out
    }

    /// Parses and checks the whole file before anything is simulated.
    pub fn parse(text: &str) -> Result<Self, ReplayError> {
        let mut lines = text.lines();
        let head = lines.next().filter(|l| !l.trim().is_empty()).ok_or(ReplayError::Empty)?;
        let version: serde_json::Value = serde_json::from_str(head).map_err(|e| ReplayError::Header(e.to_string()))?;
        let found = version
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| ReplayError::Header("missing format_version".into()))?;
        if found != REPLAY_FORMAT_VERSION as u64 {
            return Err(ReplayError::Version { found: found as u32 });
        }
        let header: ReplayHeader = serde_json::from_value(version).map_err(|e| ReplayError::Header(e.to_string()))?;
        let mut actions = Vec::with_capacity(header.ticks as usize);
        for (k, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let line_no = k + 2;
            let bad = |reason: &str| ReplayError::Record {
                line: line_no,
                reason: reason.to_string(),
            };
            let (p, e) = line.split_once(' ').ok_or_else(|| bad("expected two action sets"))?;
            let p = decode(p).ok_or_else(|| bad("malformed player actions"))?;
            let e = decode(e).ok_or_else(|| bad("malformed enemy actions"))?;
            if !p.is_player_legal() {
                return Err(bad("player actions use enemy-only flags"));
            }
            actions.push((p, e));
        }
        if actions.len() as u32 != header.ticks {
            return Err(ReplayError::Truncated {
                expected: header.ticks,
                found: actions.len() as u32,
            });
        }
        Ok(Self { header, actions })
    }

    pub fn load(path: &Path) -> Result<Self, ReplayError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReplayError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), ReplayError> {
        std::fs::write(path, self.to_text()).map_err(|source| ReplayError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn initial_state(&self, table: &ArchetypeTable) -> Result<GameState, ReplayError> {
        let h = &self.header;
        let stage = StageLayout::builtin(h.stage_id).ok_or(ReplayError::Stage(h.stage_id))?;
        let archetype = table.get(h.enemy_id)?;
        Ok(GameState::new(stage, Arc::clone(&archetype), h.seed, h.tick_limit))
    }

    /// Re-simulates the match and checks it against the recorded outcome.
    pub fn simulate(&self, table: &ArchetypeTable) -> Result<MatchRecord, ReplayError> {
        let mut state = self.initial_state(table)?;
        let mut player = Recorded::new(self.actions.iter().map(|a| a.0).collect());
        let mut enemy = Recorded::new(self.actions.iter().map(|a| a.1).collect());
        let record = run_from(&mut state, &mut player, &mut enemy, true);
        let o = &self.header.outcome;
        if record.actions.len() != self.actions.len() {
            return Err(ReplayError::Diverged(format!(
                "match ended after {} ticks, replay holds {}",
                record.actions.len(),
                self.actions.len()
            )));
        }
        if record.player.self_energy != o.player_energy
            || record.enemy.self_energy != o.enemy_energy
            || record.outcome != o.winner
        {
            return Err(ReplayError::Diverged(format!(
                "got player {} enemy {} ({:?}), recorded player {} enemy {} ({:?})",
                record.player.self_energy,
                record.enemy.self_energy,
                record.outcome,
                o.player_energy,
                o.enemy_energy,
                o.winner
            )));
        }
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{RandomActions, Scripted};
    use crate::engine::DEFAULT_TICK_LIMIT;
    use crate::evaluation::{run_match, MatchSetup};

    fn recorded(id: u32) -> Replay {
        let table = ArchetypeTable::builtin();
        let setup = MatchSetup::for_archetype(table.get(id).unwrap(), 77, DEFAULT_TICK_LIMIT).unwrap();
        let r = run_match(&mut RandomActions::new(5), &mut Scripted, &setup, true);
        Replay::from_record(&r, setup.stage.id, id, 77, DEFAULT_TICK_LIMIT, "abc", 1)
    }

    #[test]
    fn bits_round_trip() {
        let mut a = ActionSet {
            left: true,
            release: true,
            ..ActionSet::IDLE
        };
        a.shoot_n[5] = true;
        assert_eq!(encode(&a), "10010000001");
        assert_eq!(decode(&encode(&a)), Some(a));
        assert_eq!(decode("1001"), None);
        assert_eq!(decode("1001000000x"), None);
    }

    #[test]
    fn text_round_trip_and_closure() {
        let table = ArchetypeTable::builtin();
        for id in 1..=8 {
            let r = recorded(id);
            let parsed = Replay::parse(&r.to_text()).unwrap();
            assert_eq!(parsed, r);
            let sim = parsed.simulate(&table).unwrap();
            assert_eq!(sim.player.self_energy, r.header.outcome.player_energy);
            assert_eq!(sim.actions, r.actions);
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = recorded(2).to_text();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(matches!(Replay::parse(&cut), Err(ReplayError::Truncated { .. })));
        let half_header = &text[..20];
        assert!(matches!(Replay::parse(half_header), Err(ReplayError::Header(_))));
        assert!(matches!(Replay::parse(""), Err(ReplayError::Empty)));
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let text = recorded(1).to_text().replacen("\"format_version\":1", "\"format_version\":9", 1);
        assert!(matches!(Replay::parse(&text), Err(ReplayError::Version { found: 9 })));
    }

    #[test]
    fn tampered_actions_diverge() {
        let table = ArchetypeTable::builtin();
        let mut r = recorded(4);
        r.header.outcome.enemy_energy -= 10.0;
        assert!(matches!(r.simulate(&table), Err(ReplayError::Diverged(_))));
    }
}
