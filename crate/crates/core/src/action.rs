//! The action vocabulary, its canonical text form, and the free-text parser.
//!
//! Grammar (keywords case-insensitive, one action per line):
//!
//! ```text
//! GATHER
//! MOVE <N|E|S|W>[ <N|E|S|W>]
//! ATTACK <id>
//! TRADE <id> <food>f<tokens>t <food>f<tokens>t
//! REST
//! TRAIN <STR|SPD|INT|SOC|END|CHA>
//! COMMUNICATE <free text>
//! REPRODUCE <id>
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentId, Attr, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bundle {
    pub food: u32,
    pub tokens: u32,
}

impl Bundle {
    pub const fn new(food: u32, tokens: u32) -> Self {
        Self { food, tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.food == 0 && self.tokens == 0
    }
}

impl fmt::Display for Bundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}f{}t", self.food, self.tokens)
    }
}

impl FromStr for Bundle {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        let lower = s.to_ascii_lowercase();
        let (food, rest) = lower.split_once('f').ok_or(())?;
        let tokens = rest.strip_suffix('t').ok_or(())?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(food) || !digits(tokens) {
            return Err(());
        }
        Ok(Bundle::new(
            food.parse().map_err(|_| ())?,
            tokens.parse().map_err(|_| ())?,
        ))
    }
}

/// One or two orthogonal steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MovePath {
    pub first: Direction,
    pub second: Option<Direction>,
}

impl MovePath {
    pub fn one(dir: Direction) -> Self {
        Self {
            first: dir,
            second: None,
        }
    }

    pub fn two(first: Direction, second: Direction) -> Self {
        Self {
            first,
            second: Some(second),
        }
    }

    pub fn steps(&self) -> impl Iterator<Item = Direction> {
        std::iter::once(self.first).chain(self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Gather,
    Move(MovePath),
    Attack(AgentId),
    Trade {
        target: AgentId,
        offer: Bundle,
        request: Bundle,
    },
    Rest,
    Train(Attr),
    Communicate(String),
    Reproduce(AgentId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Gather,
    Move,
    Attack,
    Trade,
    Rest,
    Train,
    Communicate,
    Reproduce,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::Gather,
        ActionKind::Move,
        ActionKind::Attack,
        ActionKind::Trade,
        ActionKind::Rest,
        ActionKind::Train,
        ActionKind::Communicate,
        ActionKind::Reproduce,
    ];

    /// Actions available in the survival engine.
    pub const SURVIVAL: [ActionKind; 6] = [
        ActionKind::Gather,
        ActionKind::Move,
        ActionKind::Attack,
        ActionKind::Trade,
        ActionKind::Rest,
        ActionKind::Train,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            ActionKind::Gather => "GATHER",
            ActionKind::Move => "MOVE",
            ActionKind::Attack => "ATTACK",
            ActionKind::Trade => "TRADE",
            ActionKind::Rest => "REST",
            ActionKind::Train => "TRAIN",
            ActionKind::Communicate => "COMMUNICATE",
            ActionKind::Reproduce => "REPRODUCE",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        let up = word.to_ascii_uppercase();
        ActionKind::ALL.into_iter().find(|k| k.keyword() == up)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Gather => ActionKind::Gather,
            Action::Move(_) => ActionKind::Move,
            Action::Attack(_) => ActionKind::Attack,
            Action::Trade { .. } => ActionKind::Trade,
            Action::Rest => ActionKind::Rest,
            Action::Train(_) => ActionKind::Train,
            Action::Communicate(_) => ActionKind::Communicate,
            Action::Reproduce(_) => ActionKind::Reproduce,
        }
    }
}

/// Canonical rendering; `parse_action` inverts it.
impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Gather => f.write_str("GATHER"),
            Action::Move(path) => {
                write!(f, "MOVE {}", path.first.letter())?;
                if let Some(second) = path.second {
                    write!(f, " {}", second.letter())?;
                }
                Ok(())
            }
            Action::Attack(id) => write!(f, "ATTACK {id}"),
            Action::Trade {
                target,
                offer,
                request,
            } => write!(f, "TRADE {target} {offer} {request}"),
            Action::Rest => f.write_str("REST"),
            Action::Train(attr) => write!(f, "TRAIN {attr}"),
            Action::Communicate(text) => write!(f, "COMMUNICATE {}", single_line(text)),
            Action::Reproduce(id) => write!(f, "REPRODUCE {id}"),
        }
    }
}

/// Collapses whitespace runs (including newlines) to single spaces.
pub fn single_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_line(&text).ok_or_else(|| serde::de::Error::custom(format!("bad action `{text}`")))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no line of the response is a valid action")]
pub struct ParseError;

/// Returns the first line of `text` that is a complete action.
pub fn parse_action(text: &str) -> Result<Action, ParseError> {
    text.lines().find_map(parse_line).ok_or(ParseError)
}

fn parse_id(tok: &str) -> Option<AgentId> {
    if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    tok.parse().ok().map(AgentId)
}

/// Strips markdown emphasis, quotes and a trailing period around a response line.
fn strip_decoration(line: &str) -> &str {
    let decor: &[char] = &['*', '`', '"', '\''];
    let mut s = line.trim().trim_matches(decor).trim();
    if let Some(rest) = s.strip_suffix('.') {
        s = rest.trim_end();
    }
    s
}

fn parse_line(line: &str) -> Option<Action> {
    let line = strip_decoration(line);
    let (head, rest) = match line.split_once(char::is_whitespace) {
        Some((h, r)) => (h, r.trim()),
        None => (line, ""),
    };
    let kind = ActionKind::from_keyword(head)?;
    let args: Vec<&str> = rest.split_whitespace().collect();
    match kind {
        ActionKind::Gather if args.is_empty() => Some(Action::Gather),
        ActionKind::Rest if args.is_empty() => Some(Action::Rest),
        ActionKind::Move => {
            let dirs: Vec<Direction> = args
                .iter()
                .map(|a| a.parse::<Direction>().ok())
                .collect::<Option<_>>()?;
            match dirs.as_slice() {
                [d] => Some(Action::Move(MovePath::one(*d))),
                [a, b] => Some(Action::Move(MovePath::two(*a, *b))),
                _ => None,
            }
        }
        ActionKind::Attack => match args.as_slice() {
            [id] => parse_id(id).map(Action::Attack),
            _ => None,
        },
        ActionKind::Reproduce => match args.as_slice() {
            [id] => parse_id(id).map(Action::Reproduce),
            _ => None,
        },
        ActionKind::Trade => match args.as_slice() {
            [id, offer, request] => {
                let target = parse_id(id)?;
                let offer: Bundle = offer.parse().ok()?;
                let request: Bundle = request.parse().ok()?;
                if offer.is_empty() && request.is_empty() {
                    return None;
                }
                Some(Action::Trade {
                    target,
                    offer,
                    request,
                })
            }
            _ => None,
        },
        ActionKind::Train => match args.as_slice() {
            [attr] => attr.parse().ok().map(Action::Train),
            _ => None,
        },
        ActionKind::Communicate if !rest.is_empty() => Some(Action::Communicate(single_line(rest))),
        _ => None,
    }
}
