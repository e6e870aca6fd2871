//! Live game sessions for human play and spectating, and the line-oriented
//! message protocol spoken over the socket. Pacing and transport live in the
//! server; a session here advances one tick per [`Session::tick`] call.

use serde::{Deserialize, Serialize};

use crate::controller::{Controller, Neural, Recorded, Scripted};
use crate::enemies::ArchetypeTable;
use crate::engine::{ActionSet, Facing, GameState, Outcome, Side, StageLayout, DEFAULT_TICK_LIMIT};
use crate::geom::Rect;
use crate::network::{Genome, NetworkError};
use crate::replay::Replay;

pub const PROTOCOL_VERSION: u32 = 1;
/// Ticks per second of realtime sessions.
pub const REALTIME_TPS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    HumanVsStatic,
    HumanVsAi,
    AiVsStatic,
    AiVsAi,
}

impl SessionMode {
    pub fn human_player(self) -> bool {
        matches!(self, SessionMode::HumanVsStatic | SessionMode::HumanVsAi)
    }

    pub fn ai_player(self) -> bool {
        !self.human_player()
    }

    pub fn ai_enemy(self) -> bool {
        matches!(self, SessionMode::HumanVsAi | SessionMode::AiVsAi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pace {
    #[serde(rename = "realtime_30tps")]
    Realtime30Tps,
    #[serde(rename = "headless")]
    Headless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub mode: SessionMode,
    pub enemy_archetype: u32,
    #[serde(default)]
    pub player_genome: Option<String>,
    #[serde(default)]
    pub enemy_genome: Option<String>,
    pub seed: u64,
    pub pace: Pace,
    #[serde(default)]
    pub tick_limit: Option<u32>,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: &str| Err(SessionError::Invalid(m.to_string()));
        if self.mode.human_player() && self.pace != Pace::Realtime30Tps {
            return bad("human modes require pace realtime_30tps");
        }
        if self.mode.ai_player() && self.player_genome.is_none() {
            return bad("an AI player needs player_genome");
        }
        if self.mode.ai_enemy() && self.enemy_genome.is_none() {
            return bad("an AI enemy needs enemy_genome");
        }
        if self.tick_limit == Some(0) {
            return bad("tick_limit must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Invalid(String),
    #[error("genome {reference}: {reason}")]
    Genome { reference: String, reason: String },
    #[error("unknown enemy archetype {0}")]
    Archetype(u32),
    #[error("the {0:?} side is not controlled by a human")]
    NotHuman(Side),
    #[error("human input may not set shoot1..shoot6")]
    EnemyOnlyAction,
    #[error("session has ended")]
    Ended,
}

/// Human input for the next tick boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputMessage {
    /// Tick the client last saw; informational.
    #[serde(default)]
    pub tick: u32,
    pub actions: ActionSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterFrame {
    pub rect: Rect,
    pub energy: f64,
    pub facing: Facing,
    pub attacking: bool,
    pub immune: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectileFrame {
    pub owner: Side,
    pub rect: Rect,
}

/// Render-ready snapshot of one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMessage {
    pub tick: u32,
    pub player: CharacterFrame,
    pub enemy: CharacterFrame,
    pub projectiles: Vec<ProjectileFrame>,
    pub terminal: bool,
    pub winner: Option<Outcome>,
}

impl FrameMessage {
    pub fn snapshot(state: &GameState) -> Self {
        let character = |side: Side| {
            let c = state.character(side);
            CharacterFrame {
                rect: c.body,
                energy: c.energy,
                facing: c.facing,
                attacking: c.attacking,
                immune: c.immune,
            }
        };
        let winner = state.is_terminal();
        Self {
            tick: state.tick,
            player: character(Side::Player),
            enemy: character(Side::Enemy),
            projectiles: state
                .player_projectiles
                .iter()
                .chain(state.enemy_projectiles.iter())
                .filter(|p| p.active)
                .map(|p| ProjectileFrame {
                    owner: p.owner,
                    rect: p.body,
                })
                .collect(),
            terminal: winner.is_some(),
            winner,
        }
    }
}

/// Messages from a client, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello { format_version: u32 },
    Open { config: SessionConfig },
    Input { session: u64, input: InputMessage },
}

/// Messages from the server, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        format_version: u32,
        server: String,
    },
    Opened {
        session: u64,
        format_version: u32,
        stage: StageLayout,
        enemy_name: String,
        frame: FrameMessage,
    },
    Frame {
        session: u64,
        frame: FrameMessage,
    },
    End {
        session: u64,
        winner: Outcome,
        player_energy: f64,
        enemy_energy: f64,
        duration: u32,
    },
    Error {
        message: String,
    },
}

impl ClientMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

impl ServerMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

enum PlayerControl {
    Human { pending: Option<ActionSet> },
    Ai(Neural),
    Recorded(Recorded),
}

enum EnemyControl {
    Scripted,
    Ai(Neural),
    Recorded(Recorded),
}

/// One running duel. Owns its engine state exclusively.
pub struct Session {
    pub config: SessionConfig,
    state: GameState,
    player: PlayerControl,
    enemy: EnemyControl,
    log: Vec<(ActionSet, ActionSet)>,
}

impl Session {
    /// Builds a session; `resolve` turns a genome reference into a genome.
    pub fn open(
        config: SessionConfig,
        table: &ArchetypeTable,
        resolve: impl Fn(&str) -> Result<Genome, String>,
    ) -> Result<Self, SessionError> {
        config.validate()?;
        let archetype = table
            .get(config.enemy_archetype)
            .map_err(|_| SessionError::Archetype(config.enemy_archetype))?;
        let stage = StageLayout::builtin(archetype.stage).ok_or(SessionError::Archetype(config.enemy_archetype))?;
        let brain = |reference: &Option<String>| -> Result<Neural, SessionError> {
            let reference = reference.clone().unwrap_or_default();
            let genome = resolve(&reference).map_err(|reason| SessionError::Genome {
                reference: reference.clone(),
                reason,
            })?;
            let brain = genome.brain().map_err(|e: NetworkError| SessionError::Genome {
                reference: reference.clone(),
                reason: e.to_string(),
            })?;
            Ok(Neural::new(brain))
        };
        let player = if config.mode.human_player() {
            PlayerControl::Human { pending: None }
        } else {
            PlayerControl::Ai(brain(&config.player_genome)?)
        };
        let enemy = if config.mode.ai_enemy() {
            EnemyControl::Ai(brain(&config.enemy_genome)?)
        } else {
            EnemyControl::Scripted
        };
        let state = GameState::new(
            stage,
            archetype,
            config.seed,
            config.tick_limit.unwrap_or(DEFAULT_TICK_LIMIT),
        );
        Ok(Self {
            config,
            state,
            player,
            enemy,
            log: Vec::new(),
        })
    }

    /// Spectator session that plays a replay back tick by tick.
    pub fn from_replay(replay: &Replay, table: &ArchetypeTable, pace: Pace) -> Result<Self, SessionError> {
        let h = &replay.header;
        let state = replay
            .initial_state(table)
            .map_err(|e| SessionError::Invalid(e.to_string()))?;
        Ok(Self {
            config: SessionConfig {
                mode: SessionMode::AiVsAi,
                enemy_archetype: h.enemy_id,
                player_genome: None,
                enemy_genome: None,
                seed: h.seed,
                pace,
                tick_limit: Some(h.tick_limit),
            },
            state,
            player: PlayerControl::Recorded(Recorded::new(replay.actions.iter().map(|a| a.0).collect())),
            enemy: EnemyControl::Recorded(Recorded::new(replay.actions.iter().map(|a| a.1).collect())),
            log: Vec::new(),
        })
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn frame(&self) -> FrameMessage {
        FrameMessage::snapshot(&self.state)
    }

    pub fn is_over(&self) -> bool {
        self.state.is_terminal().is_some()
    }

    /// Queues human input for the next tick; a later call before the tick replaces it.
    pub fn submit_input(&mut self, input: &InputMessage) -> Result<(), SessionError> {
        if !input.actions.is_player_legal() {
            return Err(SessionError::EnemyOnlyAction);
        }
        if self.is_over() {
            return Err(SessionError::Ended);
        }
        match &mut self.player {
            PlayerControl::Human { pending } => {
                *pending = Some(input.actions);
                Ok(())
            }
            _ => Err(SessionError::NotHuman(Side::Player)),
        }
    }

    /// Advances one tick and returns its frame. Pending human input is
    /// consumed; without input the player idles.
    pub fn tick(&mut self) -> Result<FrameMessage, SessionError> {
        if self.is_over() {
            return Err(SessionError::Ended);
        }
        let state = &self.state;
        // A failing network idles for the tick; sessions are for watching, not scoring.
        let pa = match &mut self.player {
            PlayerControl::Human { pending } => pending.take().unwrap_or(ActionSet::IDLE),
            PlayerControl::Ai(n) => n.act(state, Side::Player).unwrap_or(ActionSet::IDLE),
            PlayerControl::Recorded(r) => r.act(state, Side::Player).unwrap_or(ActionSet::IDLE),
        };
        let ea = match &mut self.enemy {
            EnemyControl::Scripted => Scripted.act(state, Side::Enemy).unwrap_or(ActionSet::IDLE),
            EnemyControl::Ai(n) => n.act(state, Side::Enemy).unwrap_or(ActionSet::IDLE),
            EnemyControl::Recorded(r) => r.act(state, Side::Enemy).unwrap_or(ActionSet::IDLE),
        };
        self.state.step(&pa, &ea).map_err(|_| SessionError::Ended)?;
        self.log.push((pa.player_subset(), ea));
        Ok(self.frame())
    }

    /// Actions applied so far, one pair per tick.
    pub fn action_log(&self) -> &[(ActionSet, ActionSet)] {
        &self.log
    }

    /// The end-of-session message, once the match is over.
    pub fn end_message(&self, session: u64) -> Option<ServerMessage> {
        let winner = self.state.is_terminal()?;
        Some(ServerMessage::End {
            session,
            winner,
            player_energy: self.state.player.energy,
            enemy_energy: self.state.enemy.energy,
            duration: self.state.tick,
        })
    }

    /// Replay of the session so far (complete once the match is over).
    pub fn to_replay(&self, config_hash: &str) -> Replay {
        let winner = self.state.is_terminal().unwrap_or(Outcome::Timeout);
        let mut replay = Replay {
            header: crate::replay::ReplayHeader {
                format_version: crate::replay::REPLAY_FORMAT_VERSION,
                stage_id: self.state.stage.id,
                enemy_id: self.config.enemy_archetype,
                seed: self.config.seed,
                tick_limit: self.state.tick_limit,
                ticks: self.log.len() as u32,
                config_hash: config_hash.to_string(),
                master_seed: self.config.seed,
                outcome: crate::replay::ReplayOutcome {
                    player_energy: self.state.player.energy,
                    enemy_energy: self.state.enemy.energy,
                    duration: self.state.tick,
                    winner,
                },
            },
            actions: Vec::new(),
        };
        replay.actions = self.log.clone();
        replay
    }
}
