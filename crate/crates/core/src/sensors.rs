//! The 68-value observation vector.
//!
//! Rectangles are encoded as `(center_x, center_y, width, height)`, each
//! linearly mapped from its arena range onto `[-1, 1]`. Booleans map to
//! `-1`/`+1`, facing left/right to `-1`/`+1`. Inactive projectile slots
//! emit `0` in all four coordinates.

use serde::Serialize;

use crate::engine::{
    CharacterState, Facing, GameState, Projectile, Side, ARENA_HEIGHT, ARENA_WIDTH, ENEMY_PROJECTILES,
    PLAYER_PROJECTILES,
};
use crate::geom::Rect;

pub const SENSOR_COUNT: usize = 68;
/// Velocity components are divided by this (px/tick).
pub const VELOCITY_RANGE: f64 = 16.0;
/// Shoot timers are divided by this (ticks).
pub const COOLDOWN_RANGE: f64 = 60.0;

/// A sensor group: name and number of entries.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SensorGroup {
    pub number: usize,
    pub name: &'static str,
    pub size: usize,
}

pub const GROUPS: [SensorGroup; 11] = [
    SensorGroup { number: 1, name: "character rectangles", size: 8 },
    SensorGroup { number: 2, name: "on-surface flags", size: 2 },
    SensorGroup { number: 3, name: "shoot timers", size: 2 },
    SensorGroup { number: 4, name: "shooting flags", size: 2 },
    SensorGroup { number: 5, name: "velocities", size: 4 },
    SensorGroup { number: 6, name: "facing directions", size: 2 },
    SensorGroup { number: 7, name: "attacking flags", size: 2 },
    SensorGroup { number: 8, name: "player projectile rectangles", size: 12 },
    SensorGroup { number: 9, name: "enemy projectile rectangles", size: 32 },
    SensorGroup { number: 10, name: "enemy immunity flag", size: 1 },
    SensorGroup { number: 11, name: "time-step counter", size: 1 },
];

pub mod index {
    pub const SELF_RECT: usize = 0;
    pub const OPPONENT_RECT: usize = 4;
    pub const SELF_ON_SURFACE: usize = 8;
    pub const OPPONENT_ON_SURFACE: usize = 9;
    pub const SELF_COOLDOWN: usize = 10;
    pub const OPPONENT_COOLDOWN: usize = 11;
    pub const SELF_SHOOTING: usize = 12;
    pub const OPPONENT_SHOOTING: usize = 13;
    pub const SELF_VELOCITY: usize = 14;
    pub const OPPONENT_VELOCITY: usize = 16;
    pub const SELF_FACING: usize = 18;
    pub const OPPONENT_FACING: usize = 19;
    pub const SELF_ATTACKING: usize = 20;
    pub const OPPONENT_ATTACKING: usize = 21;
    pub const PLAYER_PROJECTILES: usize = 22;
    pub const ENEMY_PROJECTILES: usize = 34;
    pub const IMMUNITY: usize = 66;
    pub const TICK: usize = 67;
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorVector(pub [f64; SENSOR_COUNT]);

impl SensorVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for SensorVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Linear map of `v` from `[lo, hi]` onto `[-1, 1]`, clamped.
pub fn normalize(v: f64, lo: f64, hi: f64) -> f64 {
    (2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

fn rect_values(r: &Rect) -> [f64; 4] {
    let c = r.center();
    [
        normalize(c.x, 0.0, ARENA_WIDTH),
        normalize(c.y, 0.0, ARENA_HEIGHT),
        normalize(r.width(), 0.0, ARENA_WIDTH),
        normalize(r.height(), 0.0, ARENA_HEIGHT),
    ]
}

fn projectile_values(p: &Projectile) -> [f64; 4] {
    if p.active {
        rect_values(&p.body)
    } else {
        [0.0; 4]
    }
}

/// Observation from `perspective`: the observing character's scalar groups
/// come first; projectile groups keep their absolute player/enemy layout.
pub fn sense(state: &GameState, perspective: Side) -> SensorVector {
    let (me, them): (&CharacterState, &CharacterState) = match perspective {
        Side::Player => (&state.player, &state.enemy),
        Side::Enemy => (&state.enemy, &state.player),
    };
    let mut v = [0.0; SENSOR_COUNT];
    v[0..4].copy_from_slice(&rect_values(&me.body));
    v[4..8].copy_from_slice(&rect_values(&them.body));
    v[8] = flag(me.on_surface);
    v[9] = flag(them.on_surface);
    v[10] = normalize(me.shoot_cooldown as f64, 0.0, COOLDOWN_RANGE);
    v[11] = normalize(them.shoot_cooldown as f64, 0.0, COOLDOWN_RANGE);
    v[12] = flag(me.shooting);
    v[13] = flag(them.shooting);
    v[14] = normalize(me.velocity.x, -VELOCITY_RANGE, VELOCITY_RANGE);
    v[15] = normalize(me.velocity.y, -VELOCITY_RANGE, VELOCITY_RANGE);
    v[16] = normalize(them.velocity.x, -VELOCITY_RANGE, VELOCITY_RANGE);
    v[17] = normalize(them.velocity.y, -VELOCITY_RANGE, VELOCITY_RANGE);
    v[18] = facing(me.facing);
    v[19] = facing(them.facing);
    v[20] = flag(me.attacking);
    v[21] = flag(them.attacking);
    for (k, p) in state.player_projectiles.iter().enumerate() {
        let at = index::PLAYER_PROJECTILES + 4 * k;
        v[at..at + 4].copy_from_slice(&projectile_values(p));
    }
    for (k, p) in state.enemy_projectiles.iter().enumerate() {
        let at = index::ENEMY_PROJECTILES + 4 * k;
        v[at..at + 4].copy_from_slice(&projectile_values(p));
    }
    v[index::IMMUNITY] = flag(state.enemy.immune);
    v[index::TICK] = normalize(state.tick as f64, 0.0, state.tick_limit.max(1) as f64);
    SensorVector(v)
}

fn facing(f: Facing) -> f64 {
    f.sign()
}

/// One row of the sensor index table.
#[derive(Debug, Clone, Serialize)]
pub struct SensorDescriptor {
    pub index: usize,
    pub group: usize,
    pub name: String,
    pub range: &'static str,
}

/// Sensor index table (index, group, name, raw range).
pub fn describe() -> Vec<SensorDescriptor> {
    let mut rows = Vec::with_capacity(SENSOR_COUNT);
    let mut push = |group: usize, name: String, range: &'static str| {
        rows.push(SensorDescriptor {
            index: rows.len(),
            group,
            name,
            range,
        })
    };
    let coords = [
        ("center_x", "0..736 px"),
        ("center_y", "0..512 px"),
        ("width", "0..736 px"),
        ("height", "0..512 px"),
    ];
    for who in ["self", "opponent"] {
        for (c, r) in coords {
            push(1, format!("{who}.rect.{c}"), r);
        }
    }
    for who in ["self", "opponent"] {
        push(2, format!("{who}.on_surface"), "bool");
    }
    for who in ["self", "opponent"] {
        push(3, format!("{who}.shoot_cooldown"), "0..60 ticks");
    }
    for who in ["self", "opponent"] {
        push(4, format!("{who}.shooting"), "bool");
    }
    for who in ["self", "opponent"] {
        push(5, format!("{who}.velocity.x"), "-16..16 px/tick");
        push(5, format!("{who}.velocity.y"), "-16..16 px/tick");
    }
    for who in ["self", "opponent"] {
        push(6, format!("{who}.facing"), "left=-1, right=+1");
    }
    for who in ["self", "opponent"] {
        push(7, format!("{who}.attacking"), "bool");
    }
    for k in 0..PLAYER_PROJECTILES {
        for (c, r) in coords {
            push(8, format!("player_projectile[{k}].{c}"), r);
        }
    }
    for k in 0..ENEMY_PROJECTILES {
        for (c, r) in coords {
            push(9, format!("enemy_projectile[{k}].{c}"), r);
        }
    }
    push(10, "enemy.immune".into(), "bool");
    push(11, "tick".into(), "0..tick_limit");
    rows
}

/// Markdown rendering of [`describe`].
pub fn describe_markdown() -> String {
    let mut out = String::from("| index | group | sensor | raw range |\n|---:|---:|---|---|\n");
    for d in describe() {
        out.push_str(&format!("| {} | {} | `{}` | {} |\n", d.index, d.group, d.name, d.range));
    }
    out
}
