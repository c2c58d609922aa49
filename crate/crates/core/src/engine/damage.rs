use serde::{Deserialize, Serialize};

use super::{BattlerState, EngineError, Status};
use crate::dex::{MoveCategory, MoveDef, Multiplier, TypeChart, TypeId, Weather};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DamageContext {
    pub weather: Option<Weather>,
    pub crit: bool,
    /// Random factor in 85..=100.
    pub roll: u8,
}

impl DamageContext {
    /// No crit, maximum roll: the figure agents and metrics use as "expected" damage.
    pub fn max_roll(weather: Option<Weather>) -> Self {
        DamageContext {
            weather,
            crit: false,
            roll: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageOutcome {
    pub damage: u64,
    pub effectiveness: Multiplier,
    pub stab: bool,
}

/// Level-50 damage with sequential floored modifiers:
/// STAB, type effectiveness, weather, crit, random roll.
pub fn compute_damage(
    attacker: &BattlerState,
    defender: &BattlerState,
    mv: &MoveDef,
    ctx: DamageContext,
    chart: &TypeChart,
) -> Result<DamageOutcome, EngineError> {
    let (attack, defense) = match mv.category {
        MoveCategory::Physical => {
            let atk = u64::from(attacker.stats.atk);
            let atk = if attacker.status == Some(Status::Burn) {
                atk / 2
            } else {
                atk
            };
            (atk, u64::from(defender.stats.def))
        }
        MoveCategory::Special => (u64::from(attacker.stats.spa), u64::from(defender.stats.spd)),
        MoveCategory::Status => return Err(EngineError::NotADamagingMove(mv.name.clone())),
    };
    let effectiveness = chart.multiplier(mv.move_type, &defender.types);
    let stab = attacker.has_type(mv.move_type);
    if effectiveness.is_immune() {
        return Ok(DamageOutcome {
            damage: 0,
            effectiveness,
            stab,
        });
    }

    let level_factor = u64::from(super::LEVEL) * 2 / 5 + 2;
    let defense = defense.max(1);
    let mut damage = level_factor * u64::from(mv.power) * attack / defense / 50 + 2;
    if stab {
        damage = damage * 3 / 2;
    }
    damage = effectiveness.apply(damage);
    damage = match (ctx.weather, mv.move_type) {
        (Some(Weather::Rain), TypeId::Water) | (Some(Weather::Sun), TypeId::Fire) => damage * 3 / 2,
        (Some(Weather::Rain), TypeId::Fire) | (Some(Weather::Sun), TypeId::Water) => damage / 2,
        _ => damage,
    };
    if ctx.crit {
        damage *= 2;
    }
    damage = damage * u64::from(ctx.roll) / 100;
    Ok(DamageOutcome {
        damage: damage.max(1),
        effectiveness,
        stab,
    })
}
