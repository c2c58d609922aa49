use std::fmt::Write;

use crate::dex::{Species, StatusKind, TypeId};
use crate::engine::{Action, BattleView, BattlerState};

pub const SYSTEM_PREAMBLE: &str =
    "You are a Pokémon trainer competing in a turn-based battle tournament. \
Answer every request with the JSON object it asks for.";

pub const TEAM_PROMPT_HEAD: &str = "Select ";
pub const BATTLE_PROMPT_HEAD: &str = "You are in a battle.";

fn type_list(types: &[TypeId]) -> String {
    types.iter().map(|t| t.name()).collect::<Vec<_>>().join("/")
}

fn status_text(status: Option<StatusKind>, fainted: bool) -> &'static str {
    if fainted {
        return "Fainted";
    }
    match status {
        None => "Healthy",
        Some(StatusKind::Burn) => "Burned",
        Some(StatusKind::Poison) => "Poisoned",
        Some(StatusKind::Paralysis) => "Paralyzed",
        Some(StatusKind::Sleep) => "Asleep",
        Some(StatusKind::Freeze) => "Frozen",
    }
}

fn own_status(b: &BattlerState) -> &'static str {
    status_text(b.status.map(|s| s.kind()), b.fainted())
}

pub fn build_team_prompt(pool: &[&Species], team_size: usize) -> String {
    let mut out = format!(
        "{TEAM_PROMPT_HEAD}{team_size} Pokémon from the list below. Consider type coverage, \
weaknesses, and synergy. Provide a brief explanation for your team composition.\n"
    );
    for (i, s) in pool.iter().enumerate() {
        let b = &s.base_stats;
        let moves: Vec<&str> = s.moves.iter().map(|m| m.name.as_str()).collect();
        let _ = writeln!(
            out,
            "{i}. {} ({}) | HP {}, Atk {}, Def {}, SpA {}, SpD {}, Spe {} | Moves: {}",
            s.name,
            type_list(&s.types),
            b.hp,
            b.atk,
            b.def,
            b.spa,
            b.spd,
            b.spe,
            moves.join(", ")
        );
    }
    let example: Vec<String> = (0..team_size).map(|i| i.to_string()).collect();
    let _ = write!(
        out,
        "Respond with a JSON object with the keys \"team\" (a list of {team_size} distinct indices \
from the list above) and \"reasoning\" (your explanation), for example: \
{{\"team\": [{}], \"reasoning\": \"...\"}}",
        example.join(", ")
    );
    out
}

pub fn build_battle_prompt(view: &BattleView, legal: &[Action]) -> String {
    let own = view.own.active_battler();
    let opp = &view.opponent.active;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{BATTLE_PROMPT_HEAD} Your active Pokémon: {} (HP: {}%, Status: {}).",
        own.species,
        own.hp_percent(),
        own_status(own)
    );
    let _ = writeln!(
        out,
        "Opponent's active Pokémon: {} (HP: {}%, Status: {}).",
        opp.species,
        opp.hp_percent,
        status_text(opp.status, opp.fainted)
    );
    let _ = writeln!(
        out,
        "Your {} is {}-type. The opponent's {} is {}-type.",
        own.species,
        type_list(&own.types),
        opp.species,
        type_list(&opp.types)
    );
    let weather = view.weather.map_or("None".to_string(), |w| w.to_string());
    let _ = writeln!(out, "Turn: {}. Weather: {weather}.", view.turn);
    let _ = writeln!(
        out,
        "Opponent Pokémon seen so far: {}.",
        view.opponent.revealed.join(", ")
    );
    if view.own.forced_replacement {
        let _ = writeln!(
            out,
            "Your {} has fainted and must be replaced.",
            own.species
        );
    }

    let attacks: Vec<u8> = legal
        .iter()
        .filter_map(|a| match a {
            Action::Attack { move_index } => Some(*move_index),
            _ => None,
        })
        .collect();
    let switches: Vec<u8> = legal
        .iter()
        .filter_map(|a| match a {
            Action::Switch { team_index } => Some(*team_index),
            _ => None,
        })
        .collect();

    out.push_str("Available attacks:");
    if attacks.is_empty() {
        out.push_str(" none\n");
    } else {
        out.push('\n');
        for i in attacks {
            let m = &own.moves[usize::from(i)];
            let _ = writeln!(
                out,
                "- move_index {i}: {} ({}, {:?}, power {}, accuracy {})",
                m.name, m.move_type, m.category, m.power, m.accuracy
            );
        }
    }
    out.push_str("Available switches:");
    if switches.is_empty() {
        out.push_str(" none\n");
    } else {
        out.push('\n');
        for i in switches {
            let mate = &view.own.team[usize::from(i)];
            let _ = writeln!(
                out,
                "- team_index {i}: {} ({}, HP: {}%, Status: {})",
                mate.species,
                type_list(&mate.types),
                mate.hp_percent(),
                own_status(mate)
            );
        }
    }
    out.push_str("What do you do? Choose a move or switch, and explain your reasoning.\n");
    out.push_str(
        "Respond with a JSON object with the keys \"action\" and \"reasoning\", where \"action\" is \
{\"type\": \"attack\", \"move_index\": <index>} or {\"type\": \"switch\", \"team_index\": <index>}.",
    );
    out
}

/// The original prompt followed by the machine-readable error.
pub fn repair_prompt(original: &str, error: &str) -> String {
    format!(
        "{original}\n\nYour previous response could not be used: {error}. \
Respond with only the JSON object."
    )
}
