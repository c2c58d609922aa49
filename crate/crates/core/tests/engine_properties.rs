use pokeleague::dex::{Dex, Multiplier, Species, TypeId};
use pokeleague::engine::{
    legal_actions, resolve_turn, start_battle, Action, BattleState, EndReason, Event, SideId,
    Status, WeatherTurns,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dex() -> &'static Dex {
    static DEX: std::sync::OnceLock<Dex> = std::sync::OnceLock::new();
    DEX.get_or_init(Dex::bundled)
}

fn random_teams(rng: &mut ChaCha8Rng) -> (Vec<&'static Species>, Vec<&'static Species>) {
    let pool = dex().pool();
    let a = pool.choose_multiple(rng, 6).copied().collect();
    let b = pool.choose_multiple(rng, 6).copied().collect();
    (a, b)
}

fn pick(state: &BattleState, side: SideId, rng: &mut ChaCha8Rng) -> Action {
    let legal = legal_actions(state, side).unwrap();
    assert!(
        !legal.is_empty(),
        "no legal action for {side} on turn {}",
        state.turn_number
    );
    *legal.choose(rng).unwrap()
}

fn hp_lost(events: &[Event], side: SideId, slot: usize) -> u32 {
    events
        .iter()
        .filter_map(|e| match *e {
            Event::Damage {
                target,
                slot: s,
                amount,
                ..
            } if target == side && s == slot => Some(amount),
            Event::StatusDamage {
                side: t,
                slot: s,
                amount,
                ..
            } if t == side && s == slot => Some(amount),
            Event::WeatherDamage {
                side: t,
                slot: s,
                amount,
                ..
            } if t == side && s == slot => Some(amount),
            _ => None,
        })
        .map(u32::from)
        .sum()
}

fn check_state(state: &BattleState) -> Result<(), TestCaseError> {
    for side in [SideId::A, SideId::B] {
        let s = state.side(side);
        for b in &s.team {
            prop_assert!(b.current_hp <= b.max_hp);
            if let Some(Status::Sleep { turns_left }) = b.status {
                prop_assert!(turns_left <= 4);
            }
        }
        prop_assert!(s.revealed.contains(&s.active));
        if !state.is_over() && s.active_battler().fainted() {
            prop_assert!(s.needs_replacement());
        }
    }
    let w = state.weather;
    prop_assert_eq!(w.current.is_none(), w.remaining == WeatherTurns::Turns(0));
    Ok(())
}

/// An immune target takes nothing from that move, including its secondary status.
fn check_immunity(events: &[Event]) -> Result<(), TestCaseError> {
    let mut blocked = None;
    for e in events {
        match e {
            Event::MoveUsed { .. } => blocked = None,
            Event::NoEffect { target } => blocked = Some(*target),
            Event::Damage {
                target,
                amount,
                effectiveness,
                ..
            } if *effectiveness == Multiplier::IMMUNE => {
                prop_assert_eq!(*amount, 0);
                blocked = Some(*target);
            }
            Event::StatusInflicted { target, .. } => prop_assert_ne!(blocked, Some(*target)),
            _ => {}
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_battles_keep_invariants(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_teams(&mut rng);
        let (mut state, _) = start_battle(&a, &b, rng.gen(), 500).unwrap();
        let mut lost = [[0u32; 6]; 2];
        check_state(&state)?;
        while !state.is_over() {
            let (action_a, action_b) = (pick(&state, SideId::A, &mut rng), pick(&state, SideId::B, &mut rng));
            let (next, events) = resolve_turn(&state, action_a, action_b, dex().chart()).unwrap();
            prop_assert_eq!(next.turn_number, state.turn_number + 1);
            check_state(&next)?;
            check_immunity(&events)?;
            for side in [SideId::A, SideId::B] {
                for (slot, total) in lost[side.index()].iter_mut().enumerate() {
                    *total += hp_lost(&events, side, slot);
                }
            }
            state = next;
        }
        prop_assert!(state.turns_resolved() <= 500);
        for side in [SideId::A, SideId::B] {
            for (slot, b) in state.side(side).team.iter().enumerate() {
                prop_assert_eq!(u32::from(b.max_hp - b.current_hp), lost[side.index()][slot]);
            }
        }
        prop_assert!(legal_actions(&state, SideId::A).is_err());
    }

    #[test]
    fn resolve_turn_is_deterministic(seed: u64, steps in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_teams(&mut rng);
        let (mut state, _) = start_battle(&a, &b, rng.gen(), 500).unwrap();
        for _ in 0..steps {
            if state.is_over() {
                break;
            }
            let (x, y) = (pick(&state, SideId::A, &mut rng), pick(&state, SideId::B, &mut rng));
            let first = resolve_turn(&state, x, y, dex().chart()).unwrap();
            let second = resolve_turn(&state, x, y, dex().chart()).unwrap();
            prop_assert_eq!(
                serde_json::to_string(&first).unwrap(),
                serde_json::to_string(&second).unwrap()
            );
            state = first.0;
        }
    }

    #[test]
    fn turn_cap_always_ends_the_battle(seed: u64, cap in 1u32..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = random_teams(&mut rng);
        let (mut state, _) = start_battle(&a, &b, rng.gen(), cap).unwrap();
        let mut fainted = false;
        while !state.is_over() {
            let (x, y) = (pick(&state, SideId::A, &mut rng), pick(&state, SideId::B, &mut rng));
            let (next, events) = resolve_turn(&state, x, y, dex().chart()).unwrap();
            fainted |= events.iter().any(|e| matches!(e, Event::Fainted { .. }));
            state = next;
        }
        prop_assert!(state.turns_resolved() <= cap);
        let outcome = state.outcome.unwrap();
        if !fainted {
            prop_assert_eq!(outcome.reason, EndReason::TurnCapTieBreak);
            prop_assert_eq!(state.turns_resolved(), cap);
        }
    }

    #[test]
    fn dual_type_multiplier_is_the_product_of_cells(a in 0usize..18, d1 in 0usize..18, d2 in 0usize..18) {
        prop_assume!(d1 != d2);
        let chart = dex().chart();
        let (a, d1, d2) = (TypeId::ALL[a], TypeId::ALL[d1], TypeId::ALL[d2]);
        let m = chart.multiplier(a, &[d1, d2]);
        prop_assert_eq!(m, chart.multiplier(a, &[d2, d1]));
        prop_assert_eq!(m.as_f64(), chart.cell(a, d1).as_f64() * chart.cell(a, d2).as_f64());
        prop_assert!([0.0, 0.25, 0.5, 1.0, 2.0, 4.0].contains(&m.as_f64()));
        prop_assert_eq!(m.is_immune(), chart.cell(a, d1).is_immune() || chart.cell(a, d2).is_immune());
    }
}

#[test]
fn type_names_round_trip() {
    let distinct: std::collections::BTreeSet<_> = TypeId::ALL.iter().collect();
    assert_eq!(distinct.len(), 18);
    for t in TypeId::ALL {
        assert_eq!(t.name().parse::<TypeId>().unwrap(), t);
    }
}

#[test]
fn loading_is_deterministic() {
    let text = pokeleague::dex::BUNDLED_DEX_JSON;
    let a = Dex::from_json_str(text).unwrap();
    let b = Dex::from_json_str(text).unwrap();
    assert_eq!(a.content_hash(), b.content_hash());
    assert_eq!(a, b);
}
