//! Rule-based enemy archetypes.
//!
//! Each archetype is a cyclic phase machine keyed on the tick counter, so the
//! policy is a pure function of the game state. Archetype documents are TOML;
//! the eight built-ins live in `crates/core/archetypes/` and the schema is
//! described in `docs/archetypes.md`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{ActionSet, GameState, ENEMY_SHOT_KINDS, PLAYER_SHOT_DAMAGE};

pub const ARCHETYPE_FORMAT_VERSION: u32 = 1;
pub const ARCHETYPE_COUNT: u8 = 8;

#[derive(Debug, thiserror::Error)]
pub enum ArchetypeError {
    #[error("unknown enemy archetype id {0} (expected 1..=8)")]
    UnknownId(u32),
    #[error("archetype document {origin}: {source}")]
    Parse {
        origin: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("archetype {id}: {reason}")]
    Invalid { id: u8, reason: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySize {
    pub width: f64,
    pub height: f64,
}

/// Projectile launched by one `shootN` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSpec {
    /// Speed along the launch direction (px/tick).
    pub speed_x: f64,
    #[serde(default)]
    pub speed_y: f64,
    pub width: f64,
    pub height: f64,
    pub damage: f64,
    #[serde(default)]
    pub gravity: f64,
    /// Launch straight at the player's center with speed `hypot(speed_x, speed_y)`.
    #[serde(default)]
    pub aimed: bool,
    #[serde(default)]
    pub lifetime: u32,
    #[serde(default)]
    pub return_after: u32,
    /// Vertical launch point as a fraction of body height from the top.
    #[serde(default = "half")]
    pub launch_height: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Hold,
    Pursue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub duration: u32,
    pub movement: Movement,
    /// Pursuit stops once the horizontal gap between centers is below this.
    #[serde(default)]
    pub min_distance: f64,
    #[serde(default)]
    pub jump: bool,
    /// `shootN` numbers (1-based) held down during the phase.
    #[serde(default)]
    pub shoot: Vec<u8>,
    #[serde(default)]
    pub immune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyArchetype {
    pub version: u32,
    pub id: u8,
    pub name: String,
    #[serde(default)]
    pub summary: String,
    pub stage: u32,
    pub body: BodySize,
    pub walk_speed: f64,
    pub jump_impulse: f64,
    #[serde(default = "one")]
    pub gravity_scale: f64,
    pub cooldown: u32,
    /// Shots fired by the generic `shoot` action (used by neural enemies).
    pub primary: Vec<u8>,
    pub shots: Vec<ShotSpec>,
    pub phases: Vec<Phase>,
}

fn one() -> f64 {
    1.0
}

impl EnemyArchetype {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ArchetypeError> {
        let a: EnemyArchetype = toml::from_str(text).map_err(|source| ArchetypeError::Parse {
            origin: origin.to_string(),
            source,
        })?;
        a.validate()?;
        Ok(a)
    }

    pub fn cycle_length(&self) -> u32 {
        self.phases.iter().map(|p| p.duration).sum()
    }

    /// Phase index and the tick offset inside it.
    pub fn phase_index_at(&self, tick: u32) -> (usize, u32) {
        let mut t = tick % self.cycle_length().max(1);
        for (i, p) in self.phases.iter().enumerate() {
            if t < p.duration {
                return (i, t);
            }
            t -= p.duration;
        }
        (0, 0)
    }

    pub fn phase_at(&self, tick: u32) -> &Phase {
        &self.phases[self.phase_index_at(tick).0]
    }

    pub fn has_immunity(&self) -> bool {
        self.phases.iter().any(|p| p.immune)
    }

    pub fn validate(&self) -> Result<(), ArchetypeError> {
        let invalid = |reason: String| ArchetypeError::Invalid { id: self.id, reason };
        if self.version != ARCHETYPE_FORMAT_VERSION {
            return Err(invalid(format!("unsupported version {}", self.version)));
        }
        if !(1..=ARCHETYPE_COUNT).contains(&self.id) {
            return Err(ArchetypeError::UnknownId(self.id as u32));
        }
        if self.phases.is_empty() {
            return Err(invalid("no phases".into()));
        }
        if let Some(p) = self.phases.iter().find(|p| p.duration == 0) {
            return Err(invalid(format!("phase '{}' has zero duration", p.name)));
        }
        if !self.phases.iter().any(|p| !p.shoot.is_empty()) {
            return Err(invalid("no phase emits an attack".into()));
        }
        if self.shots.is_empty() || self.shots.len() > ENEMY_SHOT_KINDS {
            return Err(invalid(format!("expected 1..=6 shots, got {}", self.shots.len())));
        }
        let shot_ok = |n: &u8| *n >= 1 && (*n as usize) <= self.shots.len();
        for p in &self.phases {
            if let Some(n) = p.shoot.iter().find(|n| !shot_ok(n)) {
                return Err(invalid(format!("phase '{}' references undefined shoot{n}", p.name)));
            }
        }
        if let Some(n) = self.primary.iter().find(|n| !shot_ok(n)) {
            return Err(invalid(format!("primary attack references undefined shoot{n}")));
        }
        if self.primary.is_empty() {
            return Err(invalid("empty primary attack".into()));
        }
        if let Some(s) = self.shots.iter().find(|s| s.damage <= PLAYER_SHOT_DAMAGE) {
            return Err(invalid(format!(
                "shot damage {} does not exceed the player's {}",
                s.damage, PLAYER_SHOT_DAMAGE
            )));
        }
        if self.body.width <= 0.0 || self.body.height <= 0.0 || self.walk_speed < 0.0 || self.gravity_scale <= 0.0 {
            return Err(invalid("non-positive body or movement parameter".into()));
        }
        Ok(())
    }
}

const BUILTIN_DOCUMENTS: [(&str, &str); 8] = [
    ("01-flash.toml", include_str!("../archetypes/01-flash.toml")),
    ("02-air.toml", include_str!("../archetypes/02-air.toml")),
    ("03-wood.toml", include_str!("../archetypes/03-wood.toml")),
    ("04-heat.toml", include_str!("../archetypes/04-heat.toml")),
    ("05-metal.toml", include_str!("../archetypes/05-metal.toml")),
    ("06-crash.toml", include_str!("../archetypes/06-crash.toml")),
    ("07-bubble.toml", include_str!("../archetypes/07-bubble.toml")),
    ("08-quick.toml", include_str!("../archetypes/08-quick.toml")),
];

/// The set of archetypes available to a run, keyed by id.
#[derive(Debug, Clone)]
pub struct ArchetypeTable {
    by_id: BTreeMap<u8, Arc<EnemyArchetype>>,
}

impl ArchetypeTable {
    pub fn builtin() -> Self {
        let docs = BUILTIN_DOCUMENTS
            .iter()
            .map(|(name, text)| (name.to_string(), text.to_string()));
        Self::from_documents(docs).expect("built-in archetype documents are valid")
    }

    /// Loads every `*.toml` in `dir`, on top of the built-ins.
    pub fn load_dir(dir: &Path) -> Result<Self, ArchetypeError> {
        let io = |source| ArchetypeError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut docs = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir).map_err(io)?.collect::<Result<_, _>>().map_err(io)?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) == Some("toml") {
                let text = std::fs::read_to_string(&path).map_err(|source| ArchetypeError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                docs.push((path.display().to_string(), text));
            }
        }
        let mut table = Self::builtin();
        for (origin, text) in docs {
            let a = EnemyArchetype::from_toml(&text, &origin)?;
            table.by_id.insert(a.id, Arc::new(a));
        }
        table.check_immunity_rule()?;
        Ok(table)
    }

    fn from_documents(docs: impl IntoIterator<Item = (String, String)>) -> Result<Self, ArchetypeError> {
        let mut by_id = BTreeMap::new();
        for (origin, text) in docs {
            let a = EnemyArchetype::from_toml(&text, &origin)?;
            by_id.insert(a.id, Arc::new(a));
        }
        let table = Self { by_id };
        table.check_immunity_rule()?;
        Ok(table)
    }

    /// Only archetype 1 may declare immunity windows.
    fn check_immunity_rule(&self) -> Result<(), ArchetypeError> {
        for a in self.by_id.values() {
            if a.id != 1 && a.has_immunity() {
                return Err(ArchetypeError::Invalid {
                    id: a.id,
                    reason: "only archetype 1 may have immunity windows".into(),
                });
            }
        }
        Ok(())
    }

    pub fn get(&self, id: u32) -> Result<Arc<EnemyArchetype>, ArchetypeError> {
        u8::try_from(id)
            .ok()
            .and_then(|k| self.by_id.get(&k))
            .cloned()
            .ok_or(ArchetypeError::UnknownId(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<EnemyArchetype>> {
        self.by_id.values()
    }
}

impl Default for ArchetypeTable {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Scripted action choice for the current tick.
pub fn enemy_policy(state: &GameState, archetype: &EnemyArchetype) -> ActionSet {
    let phase = archetype.phase_at(state.tick);
    let mut actions = ActionSet::IDLE;
    let dx = state.player.body.center().x - state.enemy.body.center().x;
    if phase.movement == Movement::Pursue && dx.abs() >= phase.min_distance.max(f64::MIN_POSITIVE) {
        if dx < 0.0 {
            actions.left = true;
        } else {
            actions.right = true;
        }
    }
    actions.jump = phase.jump;
    for &n in &phase.shoot {
        actions.shoot_n[(n - 1) as usize] = true;
    }
    actions
}

/// [`enemy_policy`] looked up by archetype id.
pub fn enemy_policy_by_id(state: &GameState, table: &ArchetypeTable, id: u32) -> Result<ActionSet, ArchetypeError> {
    let a = table.get(id)?;
    Ok(enemy_policy(state, &a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::{Controller, RandomActions};
    use crate::engine::{Facing, Side, StageLayout, DEFAULT_TICK_LIMIT};
    use crate::sensors::{index, sense};

    fn state(table: &ArchetypeTable, id: u32, seed: u64) -> GameState {
        let a = table.get(id).unwrap();
        GameState::new(StageLayout::builtin(a.stage).unwrap(), a, seed, DEFAULT_TICK_LIMIT)
    }

    #[test]
    fn fan_volley_matches_the_archetype_document() {
        let table = ArchetypeTable::builtin();
        let mut s = state(&table, 2, 1);
        let actions = enemy_policy(&s, &s.archetype.clone());
        assert_eq!(actions.shoot_n, [true; 6]);
        assert!(!actions.left && !actions.right && !actions.jump);
        s.step(&ActionSet::IDLE, &actions).unwrap();
        // The player is to the left, so horizontal speeds are negated.
        let expected = [(-5.0, 0.0), (-4.5, -0.6), (-4.0, -1.2), (-3.5, 0.6), (-3.0, -0.3), (-6.0, -2.0)];
        let fired: Vec<_> = s.enemy_projectiles.iter().filter(|p| p.active).collect();
        assert_eq!(fired.len(), 6);
        for (p, (vx, vy)) in fired.iter().zip(expected) {
            assert_eq!((p.velocity.x, p.velocity.y), (vx, vy));
            assert_eq!(p.damage, 20.0);
        }
        assert_eq!(s.enemy.facing, Facing::Left);
        assert_eq!(s.enemy.shoot_cooldown, 30);
    }

    #[test]
    fn immunity_window_shows_in_state_and_sensor() {
        let table = ArchetypeTable::builtin();
        let a = table.get(1).unwrap();
        let (freeze, _) = a.phases.iter().enumerate().find(|(_, p)| p.immune).unwrap();
        let start: u32 = a.phases[..freeze].iter().map(|p| p.duration).sum();
        for (tick, immune) in [(0, false), (start, true), (start + a.phases[freeze].duration, false)] {
            let mut s = state(&table, 1, 3);
            s.tick = tick;
            s.step(&ActionSet::IDLE, &ActionSet::IDLE).unwrap();
            assert_eq!(s.enemy.immune, immune, "tick {tick}");
            let expected = if immune { 1.0 } else { -1.0 };
            assert_eq!(sense(&s, Side::Player).0[index::IMMUNITY], expected);
        }
    }

    #[test]
    fn pursuers_face_the_player() {
        let table = ArchetypeTable::builtin();
        for a in table.iter() {
            let Some(tick) = (0..a.cycle_length()).find(|t| a.phase_at(*t).movement == Movement::Pursue) else {
                continue;
            };
            let mut s = state(&table, a.id as u32, 2);
            s.tick = tick;
            let actions = enemy_policy(&s, a);
            assert!(actions.left && !actions.right, "archetype {}", a.id);
            s.step(&ActionSet::IDLE, &actions).unwrap();
            assert_eq!(s.enemy.facing, Facing::Left, "archetype {}", a.id);
        }
    }

    #[test]
    fn policy_is_a_function_of_the_state() {
        let table = ArchetypeTable::builtin();
        for a in table.iter() {
            let mut s = state(&table, a.id as u32, 9);
            let mut player = RandomActions::new(a.id as u64);
            let mut recorded = Vec::new();
            while s.is_terminal().is_none() && s.tick < 600 {
                let ea = enemy_policy(&s, a);
                recorded.push((s.clone(), ea));
                let pa = player.act(&s, Side::Player).unwrap();
                s.step(&pa, &ea).unwrap();
            }
            for (state, actions) in recorded.iter().rev() {
                assert_eq!(enemy_policy(state, a), *actions);
            }
        }
    }

    #[test]
    fn every_shot_outhits_the_player() {
        for a in ArchetypeTable::builtin().iter() {
            assert!(a.shots.iter().all(|s| s.damage > PLAYER_SHOT_DAMAGE), "archetype {}", a.id);
        }
    }

    #[test]
    fn archetypes_behave_distinctly_against_an_idle_player() {
        let table = ArchetypeTable::builtin();
        let traces: Vec<Vec<ActionSet>> = table
            .iter()
            .map(|a| {
                let mut s = state(&table, a.id as u32, 4);
                let mut trace = Vec::new();
                for _ in 0..300 {
                    if s.is_terminal().is_some() {
                        break;
                    }
                    let ea = enemy_policy(&s, a);
                    trace.push(ea);
                    s.step(&ActionSet::IDLE, &ea).unwrap();
                }
                trace
            })
            .collect();
        assert_eq!(traces.len(), 8);
        for i in 0..8 {
            for j in i + 1..8 {
                assert_ne!(traces[i], traces[j], "archetypes {} and {}", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn only_archetype_one_is_ever_immune() {
        for a in ArchetypeTable::builtin().iter() {
            assert_eq!(a.has_immunity(), a.id == 1);
        }
    }

    fn document(id: u8) -> String {
        BUILTIN_DOCUMENTS[(id - 1) as usize].1.to_string()
    }

    #[test]
    fn invalid_documents_are_rejected() {
        let zero = document(3).replacen("duration = ", "duration = 0 #", 1);
        assert!(matches!(EnemyArchetype::from_toml(&zero, "x"), Err(ArchetypeError::Invalid { .. })));
        let weak = document(3).replace("damage = ", "damage = 5.0 #");
        assert!(matches!(EnemyArchetype::from_toml(&weak, "x"), Err(ArchetypeError::Invalid { .. })));
        let unknown = document(3).replace("id = 3", "id = 9");
        assert!(matches!(EnemyArchetype::from_toml(&unknown, "x"), Err(ArchetypeError::UnknownId(9))));
        let bad_ref = document(2).replace("shoot = [1, 2, 3, 4, 5, 6]", "shoot = [7]");
        assert!(matches!(EnemyArchetype::from_toml(&bad_ref, "x"), Err(ArchetypeError::Invalid { .. })));
        assert!(matches!(EnemyArchetype::from_toml("id = ", "x"), Err(ArchetypeError::Parse { .. })));
    }

    #[test]
    fn immunity_outside_archetype_one_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let text = document(1).replace("id = 1", "id = 3");
        std::fs::write(dir.path().join("03-frozen.toml"), text).unwrap();
        assert!(matches!(ArchetypeTable::load_dir(dir.path()), Err(ArchetypeError::Invalid { id: 3, .. })));
    }

    #[test]
    fn directory_documents_override_builtins() {
        let dir = tempfile::tempdir().unwrap();
        let text = document(5).replace("name = \"metal\"", "name = \"tin\"");
        std::fs::write(dir.path().join("05.toml"), text).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let table = ArchetypeTable::load_dir(dir.path()).unwrap();
        assert_eq!(table.get(5).unwrap().name, "tin");
        assert_eq!(table.get(4).unwrap().name, ArchetypeTable::builtin().get(4).unwrap().name);
        assert!(matches!(table.get(0), Err(ArchetypeError::UnknownId(0))));
    }
}
