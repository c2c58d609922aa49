use serde::{Deserialize, Serialize};

use super::{BattleState, BattlerState, SideId};
use crate::dex::{StatusKind, TypeId, Weather};

/// What one side is allowed to see of the battle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BattleView {
    pub side: SideId,
    pub turn: u32,
    pub weather: Option<Weather>,
    pub own: OwnView,
    pub opponent: OpponentView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnView {
    pub active: usize,
    pub team: Vec<BattlerState>,
    pub forced_replacement: bool,
}

impl OwnView {
    pub fn active_battler(&self) -> &BattlerState {
        &self.team[self.active]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentActiveView {
    pub species: String,
    pub types: Vec<TypeId>,
    /// Floor of 100 * hp / max_hp.
    pub hp_percent: u8,
    /// Sleep counters stay hidden; only the kind is shown.
    pub status: Option<StatusKind>,
    pub fainted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentView {
    pub active: OpponentActiveView,
    /// Species seen so far, in team-slot order.
    pub revealed: Vec<String>,
}

pub fn view_for(state: &BattleState, side: SideId) -> BattleView {
    let own = state.side(side);
    let opp = state.side(side.opponent());
    let opp_active = opp.active_battler();
    BattleView {
        side,
        turn: state.turn_number,
        weather: state.weather.current,
        own: OwnView {
            active: own.active,
            team: own.team.clone(),
            forced_replacement: own.active_battler().fainted(),
        },
        opponent: OpponentView {
            active: OpponentActiveView {
                species: opp_active.species.clone(),
                types: opp_active.types.clone(),
                hp_percent: opp_active.hp_percent(),
                status: opp_active.status.map(|s| s.kind()),
                fainted: opp_active.fainted(),
            },
            revealed: opp
                .revealed
                .iter()
                .map(|&slot| opp.team[slot].species.clone())
                .collect(),
        },
    }
}
