use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Sequential agent identifier; doubles as the index into `GameState::agents`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub x: u32,
    pub y: u32,
}

impl Pos {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// One orthogonal step, or `None` when it would leave a `width` x `height` grid.
    pub fn step(self, dir: Direction, width: u32, height: u32) -> Option<Pos> {
        let (x, y) = (self.x, self.y);
        match dir {
            Direction::N if y > 0 => Some(Pos::new(x, y - 1)),
            Direction::S if y + 1 < height => Some(Pos::new(x, y + 1)),
            Direction::E if x + 1 < width => Some(Pos::new(x + 1, y)),
            Direction::W if x > 0 => Some(Pos::new(x - 1, y)),
            _ => None,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Grid directions. North is towards `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    /// Tie-break order used by scripted movement.
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn letter(self) -> &'static str {
        match self {
            Direction::N => "N",
            Direction::E => "E",
            Direction::S => "S",
            Direction::W => "W",
        }
    }
}

impl FromStr for Direction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_uppercase().as_str() {
            "N" | "NORTH" => Ok(Direction::N),
            "E" | "EAST" => Ok(Direction::E),
            "S" | "SOUTH" => Ok(Direction::S),
            "W" | "WEST" => Ok(Direction::W),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attr {
    #[serde(rename = "STR")]
    Str,
    #[serde(rename = "SPD")]
    Spd,
    #[serde(rename = "INT")]
    Int,
    #[serde(rename = "SOC")]
    Soc,
    #[serde(rename = "END")]
    End,
    #[serde(rename = "CHA")]
    Cha,
}

impl Attr {
    pub const ALL: [Attr; 6] = [
        Attr::Str,
        Attr::Spd,
        Attr::Int,
        Attr::Soc,
        Attr::End,
        Attr::Cha,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attr::Str => "STR",
            Attr::Spd => "SPD",
            Attr::Int => "INT",
            Attr::Soc => "SOC",
            Attr::End => "END",
            Attr::Cha => "CHA",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Attr {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let up = s.to_ascii_uppercase();
        Attr::ALL.into_iter().find(|a| a.name() == up).ok_or(())
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const ATTRIBUTE_BUDGET: u32 = 30;
pub const INITIAL_ATTR_MAX: u8 = 8;
pub const ATTR_MIN: u8 = 1;
pub const ATTR_MAX: u8 = 10;

/// The six point scores, indexed by [`Attr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Attributes(pub [u8; 6]);

impl Attributes {
    pub fn uniform(v: u8) -> Self {
        Attributes([v; 6])
    }

    pub fn get(&self, attr: Attr) -> u8 {
        self.0[attr.index()]
    }

    pub fn set(&mut self, attr: Attr, value: u8) {
        self.0[attr.index()] = value;
    }

    pub fn sum(&self) -> u32 {
        self.0.iter().map(|&v| u32::from(v)).sum()
    }
}

impl fmt::Display for Attributes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, attr) in Attr::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}={}", attr.name(), self.get(*attr))?;
        }
        Ok(())
    }
}

/// Draws a fresh attribute vector: all six start at 1, then the remaining
/// 24 points go one at a time to a uniformly chosen attribute still below 8.
pub fn generate_attributes<R: Rng + ?Sized>(rng: &mut R) -> Attributes {
    let mut values = [ATTR_MIN; 6];
    let mut remaining = ATTRIBUTE_BUDGET - 6 * u32::from(ATTR_MIN);
    let mut open: Vec<usize> = (0..6).collect();
    while remaining > 0 {
        let pick = rng.random_range(0..open.len());
        let slot = open[pick];
        values[slot] += 1;
        if values[slot] == INITIAL_ATTR_MAX {
            open.swap_remove(pick);
        }
        remaining -= 1;
    }
    Attributes(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    None,
    Provider,
    Chooser,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::None => "none",
            Role::Provider => "provider",
            Role::Chooser => "chooser",
        })
    }
}

pub const VITALITY_MIN: u8 = 1;
pub const VITALITY_MAX: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VitalityBand {
    Frail,
    Average,
    Robust,
    Radiant,
}

impl VitalityBand {
    pub fn of(vitality: u8) -> Self {
        match vitality {
            0..=2 => VitalityBand::Frail,
            3..=5 => VitalityBand::Average,
            6..=8 => VitalityBand::Robust,
            _ => VitalityBand::Radiant,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VitalityBand::Frail => "frail",
            VitalityBand::Average => "average",
            VitalityBand::Robust => "robust",
            VitalityBand::Radiant => "radiant",
        }
    }
}

pub const TRAIN_THRESHOLD: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Pos,
    pub attrs: Attributes,
    pub food: u32,
    pub tokens: u32,
    pub health: u32,
    pub alive: bool,
    pub role: Role,
    pub vitality: u8,
    /// Last turn on which full stats are visible to others; 0 means never.
    pub revealed_until: u32,
    pub train_progress: [u32; 6],
}

impl AgentState {
    pub fn new(
        id: AgentId,
        position: Pos,
        attrs: Attributes,
        food: u32,
        tokens: u32,
        role: Role,
        vitality: u8,
    ) -> Self {
        let mut agent = Self {
            id,
            position,
            attrs,
            food,
            tokens,
            health: 0,
            alive: true,
            role,
            vitality,
            revealed_until: 0,
            train_progress: [0; 6],
        };
        agent.health = agent.max_health();
        agent
    }

    pub fn max_health(&self) -> u32 {
        max_health_for(self.attrs.get(Attr::End))
    }

    pub fn is_revealed_at(&self, turn: u32) -> bool {
        self.revealed_until != 0 && turn <= self.revealed_until
    }
}

/// Maximum health as a function of END.
pub fn max_health_for(end: u8) -> u32 {
    10 + 2 * u32::from(end)
}
