//! Deterministic single-battle state machine.
//!
//! The engine is a pure function of `(state, actions)`: the RNG stream position is
//! part of [`BattleState`], so resolving the same turn twice yields byte-identical
//! successor states and event lists.

mod damage;
mod rng;
mod turn;
mod view;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dex::{MoveDef, Species, StatusKind, TypeId, Weather};

pub use damage::{compute_damage, DamageContext, DamageOutcome};
pub use rng::RngCursor;
pub use turn::resolve_turn;
pub use view::{view_for, BattleView, OpponentActiveView, OpponentView, OwnView};

pub const LEVEL: u8 = 50;
pub const TEAM_SIZE: usize = 6;
pub const DEFAULT_TURN_CAP: u32 = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SideId {
    A,
    B,
}

impl SideId {
    pub const BOTH: [SideId; 2] = [SideId::A, SideId::B];

    pub fn index(self) -> usize {
        match self {
            SideId::A => 0,
            SideId::B => 1,
        }
    }

    pub fn opponent(self) -> SideId {
        match self {
            SideId::A => SideId::B,
            SideId::B => SideId::A,
        }
    }
}

impl fmt::Display for SideId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SideId::A => "A",
            SideId::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Stats {
    pub atk: u16,
    pub def: u16,
    pub spa: u16,
    pub spd: u16,
    pub spe: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Burn,
    Poison,
    Paralysis,
    Sleep { turns_left: u8 },
    Freeze,
}

impl Status {
    pub fn kind(self) -> StatusKind {
        match self {
            Status::Burn => StatusKind::Burn,
            Status::Poison => StatusKind::Poison,
            Status::Paralysis => StatusKind::Paralysis,
            Status::Sleep { .. } => StatusKind::Sleep,
            Status::Freeze => StatusKind::Freeze,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Burn => "Burned",
            Status::Poison => "Poisoned",
            Status::Paralysis => "Paralyzed",
            Status::Sleep { .. } => "Asleep",
            Status::Freeze => "Frozen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattlerState {
    pub species: String,
    pub types: Vec<TypeId>,
    pub level: u8,
    pub max_hp: u16,
    pub current_hp: u16,
    pub stats: Stats,
    pub moves: [MoveDef; 4],
    pub auto_weather: Option<Weather>,
    pub status: Option<Status>,
}

impl BattlerState {
    pub fn fainted(&self) -> bool {
        self.current_hp == 0
    }

    /// Speed after the paralysis quartering.
    pub fn effective_speed(&self) -> u16 {
        match self.status {
            Some(Status::Paralysis) => self.stats.spe / 4,
            _ => self.stats.spe,
        }
    }

    /// Floor of 100 * current / max.
    pub fn hp_percent(&self) -> u8 {
        (u32::from(self.current_hp) * 100 / u32::from(self.max_hp)) as u8
    }

    pub fn has_type(&self, t: TypeId) -> bool {
        self.types.contains(&t)
    }
}

/// Level-50 stats with no IVs, EVs or nature: hp = base + 60, others = base + 5.
pub fn compute_stats(species: &Species) -> BattlerState {
    let b = &species.base_stats;
    let max_hp = b.hp + 60;
    BattlerState {
        species: species.name.clone(),
        types: species.types.clone(),
        level: LEVEL,
        max_hp,
        current_hp: max_hp,
        stats: Stats {
            atk: b.atk + 5,
            def: b.def + 5,
            spa: b.spa + 5,
            spd: b.spd + 5,
            spe: b.spe + 5,
        },
        moves: species.moves.clone(),
        auto_weather: species.auto_weather,
        status: None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideState {
    pub team: Vec<BattlerState>,
    pub active: usize,
    /// Team slots the opponent has seen.
    pub revealed: BTreeSet<usize>,
}

impl SideState {
    pub fn active_battler(&self) -> &BattlerState {
        &self.team[self.active]
    }

    pub fn active_battler_mut(&mut self) -> &mut BattlerState {
        &mut self.team[self.active]
    }

    pub fn all_fainted(&self) -> bool {
        self.team.iter().all(BattlerState::fainted)
    }

    pub fn needs_replacement(&self) -> bool {
        self.active_battler().fainted() && !self.all_fainted()
    }

    pub fn remaining_hp_fraction(&self) -> (u32, u32) {
        self.team.iter().fold((0, 0), |(cur, max), b| {
            (cur + u32::from(b.current_hp), max + u32::from(b.max_hp))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WeatherTurns {
    Turns(u32),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeatherState {
    pub current: Option<Weather>,
    pub remaining: WeatherTurns,
}

impl WeatherState {
    pub const CLEAR: WeatherState = WeatherState {
        current: None,
        remaining: WeatherTurns::Turns(0),
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndReason {
    AllFainted,
    TurnCapTieBreak,
    /// Assigned by the league when an agent is disqualified; never produced by the engine.
    Forfeit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Outcome {
    pub winner: SideId,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattleState {
    pub sides: [SideState; 2],
    pub weather: WeatherState,
    /// The turn about to be resolved; starts at 1.
    pub turn_number: u32,
    pub turn_cap: u32,
    pub rng: RngCursor,
    pub outcome: Option<Outcome>,
}

impl BattleState {
    pub fn side(&self, side: SideId) -> &SideState {
        &self.sides[side.index()]
    }

    pub fn side_mut(&mut self, side: SideId) -> &mut SideState {
        &mut self.sides[side.index()]
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn turns_resolved(&self) -> u32 {
        self.turn_number - 1
    }

    pub fn digest(&self) -> u64 {
        crate::digest::digest_of(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Action {
    Attack { move_index: u8 },
    Switch { team_index: u8 },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Attack { move_index } => write!(f, "attack move_index={move_index}"),
            Action::Switch { team_index } => write!(f, "switch team_index={team_index}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SkipReason {
    Asleep,
    Frozen,
    Paralyzed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum Event {
    SwitchIn {
        side: SideId,
        slot: usize,
        species: String,
    },
    CantMove {
        side: SideId,
        reason: SkipReason,
    },
    MoveUsed {
        side: SideId,
        move_name: String,
    },
    Missed {
        side: SideId,
    },
    NoEffect {
        target: SideId,
    },
    Damage {
        target: SideId,
        slot: usize,
        amount: u16,
        effectiveness: crate::dex::Multiplier,
        crit: bool,
        stab: bool,
    },
    StatusInflicted {
        target: SideId,
        status: Status,
    },
    StatusCured {
        side: SideId,
        status: StatusKind,
    },
    StatusDamage {
        side: SideId,
        slot: usize,
        status: StatusKind,
        amount: u16,
    },
    WeatherDamage {
        side: SideId,
        slot: usize,
        weather: Weather,
        amount: u16,
    },
    WeatherStarted {
        weather: Weather,
    },
    WeatherEnded {
        weather: Weather,
    },
    Fainted {
        side: SideId,
        slot: usize,
    },
    BattleEnded {
        winner: SideId,
        reason: EndReason,
    },
}

pub type TurnEvents = Vec<Event>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("battle already ended")]
    BattleAlreadyEnded,
    #[error("illegal action for side {side}: {action}")]
    IllegalAction { side: SideId, action: Action },
    #[error("move '{0}' is not a damaging move")]
    NotADamagingMove(String),
    #[error("a team must have exactly {TEAM_SIZE} battlers, got {0}")]
    InvalidTeamSize(usize),
}

/// Builds the opening state with slot 0 of each team active and runs switch-in effects.
pub fn start_battle(
    team_a: &[&Species],
    team_b: &[&Species],
    seed: u64,
    turn_cap: u32,
) -> Result<(BattleState, TurnEvents), EngineError> {
    for team in [team_a, team_b] {
        if team.len() != TEAM_SIZE {
            return Err(EngineError::InvalidTeamSize(team.len()));
        }
    }
    let side = |team: &[&Species]| SideState {
        team: team.iter().map(|s| compute_stats(s)).collect(),
        active: 0,
        revealed: BTreeSet::from([0]),
    };
    let mut state = BattleState {
        sides: [side(team_a), side(team_b)],
        weather: WeatherState::CLEAR,
        turn_number: 1,
        turn_cap,
        rng: RngCursor::new(seed),
        outcome: None,
    };
    let mut events = Vec::new();
    let mut rng = state.rng.open();
    let order = turn::speed_order(&state, &mut rng);
    for side in order {
        turn::switch_in(&mut state, side, 0, &mut events);
    }
    state.rng.save(&rng);
    Ok((state, events))
}

/// Every action the side may submit this turn, attacks by index then switches by index.
pub fn legal_actions(state: &BattleState, side: SideId) -> Result<Vec<Action>, EngineError> {
    if state.is_over() {
        return Err(EngineError::BattleAlreadyEnded);
    }
    let own = state.side(side);
    let mut actions = Vec::with_capacity(4 + TEAM_SIZE);
    if !own.active_battler().fainted() {
        actions.extend((0..4).map(|i| Action::Attack { move_index: i }));
    }
    actions.extend(
        own.team
            .iter()
            .enumerate()
            .filter(|(i, b)| *i != own.active && !b.fainted())
            .map(|(i, _)| Action::Switch {
                team_index: i as u8,
            }),
    );
    Ok(actions)
}
