use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::damage::{compute_damage, DamageContext};
use super::{
    legal_actions, Action, BattleState, BattlerState, EndReason, EngineError, Event, Outcome,
    SideId, SkipReason, Status, TurnEvents, WeatherState, WeatherTurns,
};
use crate::dex::{MoveDef, StatusKind, TypeChart, TypeId, Weather};

const CRIT_ODDS: u32 = 16;
const FREEZE_THAW_ODDS: u32 = 5;
const PARALYSIS_SKIP_ODDS: u32 = 4;

/// Resolves one turn. Both actions must be members of the sides' legal sets.
pub fn resolve_turn(
    state: &BattleState,
    action_a: Action,
    action_b: Action,
    chart: &TypeChart,
) -> Result<(BattleState, TurnEvents), EngineError> {
    if state.is_over() {
        return Err(EngineError::BattleAlreadyEnded);
    }
    for (side, action) in [(SideId::A, action_a), (SideId::B, action_b)] {
        if !legal_actions(state, side)?.contains(&action) {
            return Err(EngineError::IllegalAction { side, action });
        }
    }

    let mut next = state.clone();
    let mut rng = next.rng.open();
    let mut events = Vec::new();
    let actions = [action_a, action_b];

    // Switches first, faster active first.
    for side in speed_order(&next, &mut rng) {
        if let Action::Switch { team_index } = actions[side.index()] {
            switch_in(&mut next, side, usize::from(team_index), &mut events);
        }
    }

    // Attacks by priority, then effective speed.
    let mut attackers: Vec<(SideId, u8)> = SideId::BOTH
        .into_iter()
        .filter_map(|side| match actions[side.index()] {
            Action::Attack { move_index } => Some((side, move_index)),
            Action::Switch { .. } => None,
        })
        .collect();
    if attackers.len() == 2 {
        let priority = |(side, idx): (SideId, u8)| {
            next.side(side).active_battler().moves[usize::from(idx)].priority
        };
        let (first, second) = (attackers[0], attackers[1]);
        let first_goes_first = match priority(first).cmp(&priority(second)) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => faster_or_coin(&next, first.0, second.0, &mut rng),
        };
        if !first_goes_first {
            attackers.swap(0, 1);
        }
    }
    for (side, move_index) in attackers {
        execute_attack(
            &mut next,
            side,
            usize::from(move_index),
            chart,
            &mut rng,
            &mut events,
        );
    }

    end_of_turn(&mut next, &mut events);

    let a_out = next.side(SideId::A).all_fainted();
    let b_out = next.side(SideId::B).all_fainted();
    let winner = match (a_out, b_out) {
        (true, true) => Some(later_final_faint(&events)),
        (true, false) => Some(SideId::B),
        (false, true) => Some(SideId::A),
        (false, false) => None,
    };
    next.turn_number += 1;
    if let Some(winner) = winner {
        finish(&mut next, winner, EndReason::AllFainted, &mut events);
    } else if next.turns_resolved() >= next.turn_cap {
        let winner = tie_break(&next, &mut rng);
        finish(&mut next, winner, EndReason::TurnCapTieBreak, &mut events);
    }

    next.rng.save(&rng);
    Ok((next, events))
}

fn finish(state: &mut BattleState, winner: SideId, reason: EndReason, events: &mut TurnEvents) {
    state.outcome = Some(Outcome { winner, reason });
    events.push(Event::BattleEnded { winner, reason });
}

/// Sides ordered by active effective speed, ties broken by a coin flip.
pub(super) fn speed_order(state: &BattleState, rng: &mut ChaCha8Rng) -> [SideId; 2] {
    if faster_or_coin(state, SideId::A, SideId::B, rng) {
        [SideId::A, SideId::B]
    } else {
        [SideId::B, SideId::A]
    }
}

/// True when `x` acts before `y`. Only draws from the RNG on a speed tie.
fn faster_or_coin(state: &BattleState, x: SideId, y: SideId, rng: &mut ChaCha8Rng) -> bool {
    let sx = state.side(x).active_battler().effective_speed();
    let sy = state.side(y).active_battler().effective_speed();
    match sx.cmp(&sy) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => rng.gen::<bool>(),
    }
}

pub(super) fn switch_in(
    state: &mut BattleState,
    side: SideId,
    slot: usize,
    events: &mut TurnEvents,
) {
    let own = state.side_mut(side);
    own.active = slot;
    own.revealed.insert(slot);
    let battler = own.active_battler();
    events.push(Event::SwitchIn {
        side,
        slot,
        species: battler.species.clone(),
    });
    if let Some(weather) = battler.auto_weather {
        let changed = state.weather.current != Some(weather);
        state.weather = WeatherState {
            current: Some(weather),
            remaining: WeatherTurns::Infinite,
        };
        if changed {
            events.push(Event::WeatherStarted { weather });
        }
    }
}

fn execute_attack(
    state: &mut BattleState,
    side: SideId,
    move_index: usize,
    chart: &TypeChart,
    rng: &mut ChaCha8Rng,
    events: &mut TurnEvents,
) {
    let target = side.opponent();
    if state.side(side).active_battler().fainted() || state.side(target).active_battler().fainted()
    {
        return;
    }
    if !passes_status_gate(state.side_mut(side).active_battler_mut(), side, rng, events) {
        return;
    }

    let mv = state.side(side).active_battler().moves[move_index].clone();
    events.push(Event::MoveUsed {
        side,
        move_name: mv.name.clone(),
    });
    if let crate::dex::Accuracy::Percent(p) = mv.accuracy {
        if rng.gen_range(1..=100u8) > p {
            events.push(Event::Missed { side });
            return;
        }
    }

    if mv.is_damaging() {
        let crit = rng.gen_range(0..CRIT_ODDS) == 0;
        let roll = rng.gen_range(85..=100u8);
        let ctx = DamageContext {
            weather: state.weather.current,
            crit,
            roll,
        };
        let outcome = compute_damage(
            state.side(side).active_battler(),
            state.side(target).active_battler(),
            &mv,
            ctx,
            chart,
        )
        .expect("damaging move");
        let slot = state.side(target).active;
        let defender = state.side_mut(target).active_battler_mut();
        let amount = outcome.damage.min(u64::from(defender.current_hp)) as u16;
        defender.current_hp -= amount;
        events.push(Event::Damage {
            target,
            slot,
            amount,
            effectiveness: outcome.effectiveness,
            crit,
            stab: outcome.stab,
        });
        if defender.fainted() {
            events.push(Event::Fainted { side: target, slot });
            return;
        }
        if !outcome.effectiveness.is_immune() {
            try_secondary(
                state.side_mut(target).active_battler_mut(),
                target,
                &mv,
                rng,
                events,
            );
        }
    } else {
        let defender = state.side_mut(target).active_battler_mut();
        let blocked = chart.multiplier(mv.move_type, &defender.types).is_immune()
            || defender.status.is_some()
            || mv
                .effect
                .is_some_and(|e| immune_to_status(&defender.types, e.status));
        if blocked || !try_secondary(defender, target, &mv, rng, events) {
            events.push(Event::NoEffect { target });
        }
    }
}

/// Returns false when the battler loses its turn.
fn passes_status_gate(
    battler: &mut BattlerState,
    side: SideId,
    rng: &mut ChaCha8Rng,
    events: &mut TurnEvents,
) -> bool {
    match battler.status {
        Some(Status::Sleep { turns_left }) if turns_left > 0 => {
            battler.status = Some(Status::Sleep {
                turns_left: turns_left - 1,
            });
            events.push(Event::CantMove {
                side,
                reason: SkipReason::Asleep,
            });
            false
        }
        Some(Status::Sleep { .. }) => {
            battler.status = None;
            events.push(Event::StatusCured {
                side,
                status: StatusKind::Sleep,
            });
            true
        }
        Some(Status::Freeze) => {
            if rng.gen_range(0..FREEZE_THAW_ODDS) == 0 {
                battler.status = None;
                events.push(Event::StatusCured {
                    side,
                    status: StatusKind::Freeze,
                });
                true
            } else {
                events.push(Event::CantMove {
                    side,
                    reason: SkipReason::Frozen,
                });
                false
            }
        }
        Some(Status::Paralysis) if rng.gen_range(0..PARALYSIS_SKIP_ODDS) == 0 => {
            events.push(Event::CantMove {
                side,
                reason: SkipReason::Paralyzed,
            });
            false
        }
        _ => true,
    }
}

fn immune_to_status(types: &[TypeId], status: StatusKind) -> bool {
    let has = |t| types.contains(&t);
    match status {
        StatusKind::Burn => has(TypeId::Fire),
        StatusKind::Poison => has(TypeId::Poison) || has(TypeId::Steel),
        StatusKind::Paralysis => has(TypeId::Electric),
        StatusKind::Freeze => has(TypeId::Ice),
        StatusKind::Sleep => false,
    }
}

/// Rolls the move's status effect against the defender. Returns true if it landed.
fn try_secondary(
    defender: &mut BattlerState,
    target: SideId,
    mv: &MoveDef,
    rng: &mut ChaCha8Rng,
    events: &mut TurnEvents,
) -> bool {
    let Some(effect) = mv.effect else {
        return false;
    };
    if defender.status.is_some() || immune_to_status(&defender.types, effect.status) {
        return false;
    }
    if rng.gen::<f64>() >= effect.chance {
        return false;
    }
    let status = match effect.status {
        StatusKind::Burn => Status::Burn,
        StatusKind::Poison => Status::Poison,
        StatusKind::Paralysis => Status::Paralysis,
        StatusKind::Freeze => Status::Freeze,
        StatusKind::Sleep => Status::Sleep {
            turns_left: rng.gen_range(1..=4),
        },
    };
    defender.status = Some(status);
    events.push(Event::StatusInflicted { target, status });
    true
}

fn end_of_turn(state: &mut BattleState, events: &mut TurnEvents) {
    for side in SideId::BOTH {
        let slot = state.side(side).active;
        let battler = state.side_mut(side).active_battler_mut();
        if battler.fainted() {
            continue;
        }
        let kind = match battler.status {
            Some(Status::Burn) => StatusKind::Burn,
            Some(Status::Poison) => StatusKind::Poison,
            _ => continue,
        };
        let amount = (battler.max_hp / 8).min(battler.current_hp);
        battler.current_hp -= amount;
        events.push(Event::StatusDamage {
            side,
            slot,
            status: kind,
            amount,
        });
        if battler.fainted() {
            events.push(Event::Fainted { side, slot });
        }
    }

    if state.weather.current == Some(Weather::Sand) {
        for side in SideId::BOTH {
            let slot = state.side(side).active;
            let battler = state.side_mut(side).active_battler_mut();
            if battler.fainted()
                || [TypeId::Rock, TypeId::Ground, TypeId::Steel]
                    .iter()
                    .any(|&t| battler.has_type(t))
            {
                continue;
            }
            let amount = (battler.max_hp / 16).min(battler.current_hp);
            battler.current_hp -= amount;
            events.push(Event::WeatherDamage {
                side,
                slot,
                weather: Weather::Sand,
                amount,
            });
            if battler.fainted() {
                events.push(Event::Fainted { side, slot });
            }
        }
    }

    if let (Some(weather), WeatherTurns::Turns(n)) =
        (state.weather.current, state.weather.remaining)
    {
        let left = n.saturating_sub(1);
        if left == 0 {
            state.weather = WeatherState::CLEAR;
            events.push(Event::WeatherEnded { weather });
        } else {
            state.weather.remaining = WeatherTurns::Turns(left);
        }
    }
}

fn later_final_faint(events: &TurnEvents) -> SideId {
    events
        .iter()
        .rev()
        .find_map(|e| match e {
            Event::Fainted { side, .. } => Some(*side),
            _ => None,
        })
        .expect("both sides fainted this turn")
}

/// Higher remaining HP fraction wins; equal fractions go to a coin flip.
fn tie_break(state: &BattleState, rng: &mut ChaCha8Rng) -> SideId {
    let (ca, ma) = state.side(SideId::A).remaining_hp_fraction();
    let (cb, mb) = state.side(SideId::B).remaining_hp_fraction();
    let lhs = u64::from(ca) * u64::from(mb);
    let rhs = u64::from(cb) * u64::from(ma);
    match lhs.cmp(&rhs) {
        std::cmp::Ordering::Greater => SideId::A,
        std::cmp::Ordering::Less => SideId::B,
        std::cmp::Ordering::Equal => {
            if rng.gen::<bool>() {
                SideId::A
            } else {
                SideId::B
            }
        }
    }
}
