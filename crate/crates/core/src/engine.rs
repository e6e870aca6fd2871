//! Fixed-timestep simulation of a single duel.
//!
//! A tick applies, in order: intent, horizontal movement, gravity and jump
//! integration, surface/wall clamping, projectile spawning, projectile
//! motion, hit resolution, and timer decrements.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::enemies::{EnemyArchetype, ShotSpec};
use crate::geom::{Rect, Vec2};
use crate::rng::{derive_seed, Stream};

pub const ARENA_WIDTH: f64 = 736.0;
pub const ARENA_HEIGHT: f64 = 512.0;
pub const WALK_SPEED: f64 = 5.0;
pub const JUMP_IMPULSE: f64 = -15.0;
pub const GRAVITY: f64 = 0.9;
pub const TERMINAL_FALL_SPEED: f64 = 10.0;

pub const MAX_ENERGY: f64 = 100.0;
pub const PLAYER_SHOT_DAMAGE: f64 = 10.0;
pub const CONTACT_DAMAGE: f64 = 20.0;
/// Ticks after a contact hit during which further contact does no damage.
pub const CONTACT_GRACE_TICKS: u32 = 30;

pub const PLAYER_WIDTH: f64 = 32.0;
pub const PLAYER_HEIGHT: f64 = 48.0;
pub const PLAYER_SHOOT_COOLDOWN: u32 = 13;
pub const PLAYER_SHOT_SPEED: f64 = 12.0;
pub const PLAYER_SHOT_WIDTH: f64 = 14.0;
pub const PLAYER_SHOT_HEIGHT: f64 = 8.0;

pub const PLAYER_PROJECTILES: usize = 3;
pub const ENEMY_PROJECTILES: usize = 8;
pub const ENEMY_SHOT_KINDS: usize = 6;

pub const DEFAULT_TICK_LIMIT: u32 = 3000;
/// Horizontal spawn jitter, drawn once from the engine stream.
pub const SPAWN_JITTER: f64 = 16.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EngineError {
    #[error("match already terminal ({0:?})")]
    Terminal(Outcome),
    #[error("tick limit {0} reached")]
    TickLimit(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Player,
    Enemy,
}

impl Side {
    pub fn opponent(self) -> Side {
        match self {
            Side::Player => Side::Enemy,
            Side::Enemy => Side::Player,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Facing {
    Left,
    Right,
}

impl Facing {
    pub fn sign(self) -> f64 {
        match self {
            Facing::Left => -1.0,
            Facing::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Player,
    Enemy,
    Timeout,
}

/// One tick of controller intent. `shoot_n[k]` is the enemy-only `shoot{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct ActionSet {
    pub left: bool,
    pub right: bool,
    pub jump: bool,
    pub release: bool,
    pub shoot: bool,
    #[serde(default)]
    pub shoot_n: [bool; ENEMY_SHOT_KINDS],
}

impl ActionSet {
    pub const IDLE: ActionSet = ActionSet {
        left: false,
        right: false,
        jump: false,
        release: false,
        shoot: false,
        shoot_n: [false; ENEMY_SHOT_KINDS],
    };

    /// True when no enemy-only flag is set.
    pub fn is_player_legal(&self) -> bool {
        self.shoot_n.iter().all(|f| !f)
    }

    /// Drops the enemy-only flags.
    pub fn player_subset(mut self) -> ActionSet {
        self.shoot_n = [false; ENEMY_SHOT_KINDS];
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterState {
    pub body: Rect,
    pub energy: f64,
    pub facing: Facing,
    pub velocity: Vec2,
    pub on_surface: bool,
    pub shoot_cooldown: u32,
    /// A projectile was launched this tick.
    pub shooting: bool,
    /// At least one of this character's projectiles is in flight.
    pub attacking: bool,
    pub immune: bool,
    pub contact_grace: u32,
}

impl CharacterState {
    fn spawn(foot: Vec2, w: f64, h: f64, facing: Facing) -> Self {
        Self {
            body: Rect::standing_at(foot, w, h),
            energy: MAX_ENERGY,
            facing,
            velocity: Vec2::ZERO,
            on_surface: true,
            shoot_cooldown: 0,
            shooting: false,
            attacking: false,
            immune: false,
            contact_grace: 0,
        }
    }

    fn take_damage(&mut self, amount: f64) {
        self.energy = (self.energy - amount).max(0.0);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projectile {
    pub body: Rect,
    pub velocity: Vec2,
    pub owner: Side,
    pub active: bool,
    pub damage: f64,
    /// Downward acceleration in px/tick².
    pub gravity: f64,
    pub age: u32,
    /// Zero means unlimited.
    pub lifetime: u32,
    /// Horizontal velocity flips once when `age` reaches this value; zero disables.
    pub return_after: u32,
}

impl Projectile {
    pub fn inactive(owner: Side) -> Self {
        Self {
            body: Rect::default(),
            velocity: Vec2::ZERO,
            owner,
            active: false,
            damage: 0.0,
            gravity: 0.0,
            age: 0,
            lifetime: 0,
            return_after: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLayout {
    pub id: u32,
    pub arena: Rect,
    /// One-way platforms: characters land on their top edge when falling.
    pub platforms: Vec<Rect>,
    /// Foot positions (bottom-center of the body).
    pub spawn_player: Vec2,
    pub spawn_enemy: Vec2,
}

impl StageLayout {
    pub const COUNT: u32 = 8;

    /// Built-in stages 1–8. Stages 3, 6 and 7 carry platforms.
    pub fn builtin(id: u32) -> Option<StageLayout> {
        if !(1..=Self::COUNT).contains(&id) {
            return None;
        }
        let arena = Rect::from_xywh(0.0, 0.0, ARENA_WIDTH, ARENA_HEIGHT);
        let platforms = match id {
            3 => vec![Rect::from_xywh(304.0, 400.0, 128.0, 12.0)],
            6 => vec![
                Rect::from_xywh(96.0, 392.0, 112.0, 12.0),
                Rect::from_xywh(528.0, 392.0, 112.0, 12.0),
            ],
            7 => vec![Rect::from_xywh(256.0, 360.0, 224.0, 12.0)],
            _ => Vec::new(),
        };
        Some(StageLayout {
            id,
            arena,
            platforms,
            spawn_player: Vec2::new(120.0, ARENA_HEIGHT),
            spawn_enemy: Vec2::new(ARENA_WIDTH - 120.0, ARENA_HEIGHT),
        })
    }

    pub fn floor(&self) -> f64 {
        self.arena.max.y
    }

    /// Spawns lie in the arena, on opposite horizontal halves.
    pub fn is_valid(&self) -> bool {
        let mid = self.arena.center().x;
        self.arena.is_valid()
            && self.arena.contains_point(self.spawn_player)
            && self.arena.contains_point(self.spawn_enemy)
            && (self.spawn_player.x - mid) * (self.spawn_enemy.x - mid) < 0.0
            && self.platforms.iter().all(Rect::is_valid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickOutcome {
    pub terminal: Option<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub tick: u32,
    pub tick_limit: u32,
    pub player: CharacterState,
    pub enemy: CharacterState,
    pub player_projectiles: [Projectile; PLAYER_PROJECTILES],
    pub enemy_projectiles: [Projectile; ENEMY_PROJECTILES],
    pub stage: StageLayout,
    pub archetype: Arc<EnemyArchetype>,
    pub seed: u64,
    pub rng: ChaCha8Rng,
}

/// Per-character movement parameters.
#[derive(Debug, Clone, Copy)]
struct Mobility {
    speed: f64,
    jump_impulse: f64,
    gravity_scale: f64,
}

const PLAYER_MOBILITY: Mobility = Mobility {
    speed: WALK_SPEED,
    jump_impulse: JUMP_IMPULSE,
    gravity_scale: 1.0,
};

impl GameState {
    pub fn new(stage: StageLayout, archetype: Arc<EnemyArchetype>, seed: u64, tick_limit: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::Engine));
        let jp = rng.random_range(-SPAWN_JITTER..=SPAWN_JITTER);
        let je = rng.random_range(-SPAWN_JITTER..=SPAWN_JITTER);
        let pf = Vec2::new(stage.spawn_player.x + jp, stage.spawn_player.y);
        let ef = Vec2::new(stage.spawn_enemy.x + je, stage.spawn_enemy.y);
        let player_faces = if ef.x >= pf.x { Facing::Right } else { Facing::Left };
        let enemy_faces = if player_faces == Facing::Right { Facing::Left } else { Facing::Right };
        let player = CharacterState::spawn(pf, PLAYER_WIDTH, PLAYER_HEIGHT, player_faces);
        let enemy = CharacterState::spawn(ef, archetype.body.width, archetype.body.height, enemy_faces);
        let mut state = Self {
            tick: 0,
            tick_limit,
            player,
            enemy,
            player_projectiles: std::array::from_fn(|_| Projectile::inactive(Side::Player)),
            enemy_projectiles: std::array::from_fn(|_| Projectile::inactive(Side::Enemy)),
            stage,
            archetype,
            seed,
            rng,
        };
        // Spawn feet are on the floor; clamp once in case a stage places them otherwise.
        let stage = state.stage.clone();
        clamp_to_stage(&mut state.player, &stage, f64::NEG_INFINITY);
        clamp_to_stage(&mut state.enemy, &stage, f64::NEG_INFINITY);
        state.enemy.immune = state.archetype.phase_at(0).immune;
        state
    }

    pub fn character(&self, side: Side) -> &CharacterState {
        match side {
            Side::Player => &self.player,
            Side::Enemy => &self.enemy,
        }
    }

    pub fn projectiles(&self, side: Side) -> &[Projectile] {
        match side {
            Side::Player => &self.player_projectiles,
            Side::Enemy => &self.enemy_projectiles,
        }
    }

    pub fn is_terminal(&self) -> Option<Outcome> {
        is_terminal(self, self.tick_limit)
    }

    /// Advances one tick.
    pub fn step(&mut self, player_actions: &ActionSet, enemy_actions: &ActionSet) -> Result<TickOutcome, EngineError> {
        if let Some(outcome) = self.is_terminal() {
            return Err(match outcome {
                Outcome::Timeout => EngineError::TickLimit(self.tick_limit),
                other => EngineError::Terminal(other),
            });
        }
        let player_actions = player_actions.player_subset();
        let archetype = Arc::clone(&self.archetype);
        let phase = archetype.phase_at(self.tick);
        self.enemy.immune = phase.immune;
        self.player.shooting = false;
        self.enemy.shooting = false;

        let enemy_mobility = Mobility {
            speed: archetype.walk_speed,
            jump_impulse: archetype.jump_impulse,
            gravity_scale: archetype.gravity_scale,
        };

        // intent, horizontal movement, gravity/jump, clamp
        move_character(&mut self.player, &player_actions, PLAYER_MOBILITY, &self.stage);
        move_character(&mut self.enemy, enemy_actions, enemy_mobility, &self.stage);

        // spawn
        let player_fired = self.spawn_player_shot(&player_actions);
        let enemy_fired = self.spawn_enemy_shots(enemy_actions, &archetype);

        // motion
        for p in self.player_projectiles.iter_mut().chain(self.enemy_projectiles.iter_mut()) {
            advance_projectile(p, &self.stage);
        }

        resolve_hits(self);

        // timers
        if !player_fired {
            self.player.shoot_cooldown = self.player.shoot_cooldown.saturating_sub(1);
        }
        if !enemy_fired {
            self.enemy.shoot_cooldown = self.enemy.shoot_cooldown.saturating_sub(1);
        }
        for c in [&mut self.player, &mut self.enemy] {
            c.contact_grace = c.contact_grace.saturating_sub(1);
        }
        self.player.attacking = self.player_projectiles.iter().any(|p| p.active);
        self.enemy.attacking = self.enemy_projectiles.iter().any(|p| p.active);

        self.tick += 1;
        Ok(TickOutcome { terminal: self.is_terminal() })
    }

    fn spawn_player_shot(&mut self, actions: &ActionSet) -> bool {
        if !actions.shoot || self.player.shoot_cooldown > 0 {
            return false;
        }
        let Some(slot) = self.player_projectiles.iter_mut().find(|p| !p.active) else {
            return false;
        };
        let body = self.player.body;
        let dir = self.player.facing.sign();
        let x = if dir > 0.0 { body.max.x } else { body.min.x - PLAYER_SHOT_WIDTH };
        let y = body.center().y - PLAYER_SHOT_HEIGHT / 2.0;
        *slot = Projectile {
            body: Rect::from_xywh(x, y, PLAYER_SHOT_WIDTH, PLAYER_SHOT_HEIGHT),
            velocity: Vec2::new(dir * PLAYER_SHOT_SPEED, 0.0),
            owner: Side::Player,
            active: true,
            damage: PLAYER_SHOT_DAMAGE,
            gravity: 0.0,
            age: 0,
            lifetime: 0,
            return_after: 0,
        };
        self.player.shoot_cooldown = PLAYER_SHOOT_COOLDOWN;
        self.player.shooting = true;
        true
    }

    fn spawn_enemy_shots(&mut self, actions: &ActionSet, archetype: &EnemyArchetype) -> bool {
        if self.enemy.shoot_cooldown > 0 {
            return false;
        }
        let mut kinds = [false; ENEMY_SHOT_KINDS];
        for (k, flag) in actions.shoot_n.iter().enumerate() {
            kinds[k] |= *flag;
        }
        if actions.shoot {
            for &n in &archetype.primary {
                if (1..=ENEMY_SHOT_KINDS as u8).contains(&n) {
                    kinds[(n - 1) as usize] = true;
                }
            }
        }
        if !kinds.iter().any(|k| *k) {
            return false;
        }
        // Enemy attacks are launched toward the player.
        let toward = if self.player.body.center().x < self.enemy.body.center().x {
            Facing::Left
        } else {
            Facing::Right
        };
        self.enemy.facing = toward;
        let mut fired = false;
        for (k, _) in kinds.iter().enumerate().filter(|(_, on)| **on) {
            let Some(spec) = archetype.shots.get(k) else { continue };
            let Some(slot) = self.enemy_projectiles.iter_mut().find(|p| !p.active) else {
                break;
            };
            *slot = launch(spec, &self.enemy.body, toward, &self.player.body);
            fired = true;
        }
        if fired {
            self.enemy.shoot_cooldown = archetype.cooldown;
            self.enemy.shooting = true;
        }
        fired
    }
}

fn launch(spec: &ShotSpec, shooter: &Rect, toward: Facing, target: &Rect) -> Projectile {
    let dir = toward.sign();
    let x = if dir > 0.0 { shooter.max.x } else { shooter.min.x - spec.width };
    let cy = shooter.min.y + spec.launch_height.clamp(0.0, 1.0) * shooter.height();
    let y = (cy - spec.height / 2.0).min(shooter.max.y - spec.height);
    let body = Rect::from_xywh(x, y, spec.width, spec.height);
    let velocity = if spec.aimed {
        let speed = spec.speed_x.hypot(spec.speed_y);
        let d = target.center() - body.center();
        let len = d.length();
        if len > 0.0 {
            Vec2::new(d.x / len * speed, d.y / len * speed)
        } else {
            Vec2::new(dir * speed, 0.0)
        }
    } else {
        Vec2::new(dir * spec.speed_x, spec.speed_y)
    };
    Projectile {
        body,
        velocity,
        owner: Side::Enemy,
        active: true,
        damage: spec.damage,
        gravity: spec.gravity,
        age: 0,
        lifetime: spec.lifetime,
        return_after: spec.return_after,
    }
}

fn move_character(c: &mut CharacterState, a: &ActionSet, m: Mobility, stage: &StageLayout) {
    // intent
    match (a.left, a.right) {
        (true, false) => {
            c.facing = Facing::Left;
            c.velocity.x = -m.speed;
        }
        (false, true) => {
            c.facing = Facing::Right;
            c.velocity.x = m.speed;
        }
        _ => c.velocity.x = 0.0,
    }
    if a.jump && c.on_surface {
        c.velocity.y = m.jump_impulse;
        c.on_surface = false;
    }
    if a.release && c.velocity.y < 0.0 {
        c.velocity.y = 0.0;
    }

    // horizontal movement
    c.body.translate(Vec2::new(c.velocity.x, 0.0));
    if c.body.min.x < stage.arena.min.x {
        c.body.set_left(stage.arena.min.x);
        c.velocity.x = 0.0;
    } else if c.body.max.x > stage.arena.max.x {
        c.body.set_right(stage.arena.max.x);
        c.velocity.x = 0.0;
    }

    // walking off a platform edge
    if c.on_surface && !supported(&c.body, stage) {
        c.on_surface = false;
    }

    // gravity and jump integration
    let previous_bottom = c.body.max.y;
    if !c.on_surface {
        c.velocity.y = (c.velocity.y + GRAVITY * m.gravity_scale).min(TERMINAL_FALL_SPEED);
        c.body.translate(Vec2::new(0.0, c.velocity.y));
    }

    clamp_to_stage(c, stage, previous_bottom);
}

fn supported(body: &Rect, stage: &StageLayout) -> bool {
    if body.max.y >= stage.floor() {
        return true;
    }
    stage
        .platforms
        .iter()
        .any(|p| body.max.y == p.min.y && body.max.x > p.min.x && body.min.x < p.max.x)
}

/// Floor, ceiling, and one-way platform landing.
fn clamp_to_stage(c: &mut CharacterState, stage: &StageLayout, previous_bottom: f64) {
    if c.body.min.y < stage.arena.min.y {
        c.body.set_top(stage.arena.min.y);
        c.velocity.y = c.velocity.y.max(0.0);
    }
    if c.velocity.y >= 0.0 {
        for p in &stage.platforms {
            let crossing = previous_bottom <= p.min.y && c.body.max.y >= p.min.y;
            let horizontal = c.body.max.x > p.min.x && c.body.min.x < p.max.x;
            if crossing && horizontal {
                c.body.set_bottom(p.min.y);
                c.velocity.y = 0.0;
                c.on_surface = true;
            }
        }
    }
    if c.body.max.y >= stage.floor() {
        c.body.set_bottom(stage.floor());
        c.velocity.y = 0.0;
        c.on_surface = true;
    }
}

fn advance_projectile(p: &mut Projectile, stage: &StageLayout) {
    if !p.active {
        return;
    }
    p.age += 1;
    if p.return_after > 0 && p.age == p.return_after {
        p.velocity.x = -p.velocity.x;
    }
    p.velocity.y += p.gravity;
    p.body.translate(p.velocity);
    let a = &stage.arena;
    let gone_sideways = p.body.max.x <= a.min.x || p.body.min.x >= a.max.x;
    let gone_below = p.body.min.y >= a.max.y || (p.gravity > 0.0 && p.body.max.y >= a.max.y);
    let gone_above = p.gravity <= 0.0 && p.body.max.y <= a.min.y;
    let expired = p.lifetime > 0 && p.age >= p.lifetime;
    if gone_sideways || gone_below || gone_above || expired {
        p.active = false;
    }
}

/// Projectile and contact hits. Projectiles that touch their target are spent
/// even when the target is immune.
pub fn resolve_hits(state: &mut GameState) {
    for p in state.player_projectiles.iter_mut().filter(|p| p.active) {
        if p.body.overlaps(&state.enemy.body) {
            p.active = false;
            if !state.enemy.immune {
                state.enemy.take_damage(p.damage);
            }
        }
    }
    for p in state.enemy_projectiles.iter_mut().filter(|p| p.active) {
        if p.body.overlaps(&state.player.body) {
            p.active = false;
            state.player.take_damage(p.damage);
        }
    }
    if state.player.contact_grace == 0 && state.player.body.overlaps(&state.enemy.body) {
        state.player.take_damage(CONTACT_DAMAGE);
        state.player.contact_grace = CONTACT_GRACE_TICKS;
    }
}

/// Winner if the duel is over. Simultaneous knock-outs go to the enemy.
pub fn is_terminal(state: &GameState, tick_limit: u32) -> Option<Outcome> {
    let p = state.player.energy;
    let e = state.enemy.energy;
    if p <= 0.0 {
        Some(Outcome::Enemy)
    } else if e <= 0.0 {
        Some(Outcome::Player)
    } else if state.tick >= tick_limit {
        Some(Outcome::Timeout)
    } else {
        None
    }
}
