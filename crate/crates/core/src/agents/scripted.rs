use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentDecision, AgentError, AgentProfile, Decided};
use crate::dex::{Dex, Multiplier, Species};
use crate::digest::derive_seed;
use crate::engine::{compute_damage, compute_stats, Action, BattleView, DamageContext};

/// Damage the active battler's move would deal at max roll without a crit.
/// Status moves score 0.
pub fn expected_damage(view: &BattleView, move_index: usize, dex: &Dex) -> u64 {
    let attacker = view.own.active_battler();
    let mv = &attacker.moves[move_index];
    if !mv.is_damaging() {
        return 0;
    }
    let mut defender = match dex.species(&view.opponent.active.species) {
        Some(species) => compute_stats(species),
        None => attacker.clone(),
    };
    defender.types = view.opponent.active.types.clone();
    compute_damage(
        attacker,
        &defender,
        mv,
        DamageContext::max_roll(view.weather),
        dex.chart(),
    )
    .map(|o| o.damage)
    .unwrap_or(0)
}

/// Among legal switches, the teammate whose best damaging-move multiplier against the
/// opponent's active is highest; ties go to the lower team index.
pub fn best_switch(view: &BattleView, legal: &[Action], dex: &Dex) -> Option<Action> {
    let opp_types = &view.opponent.active.types;
    let mut best: Option<(Multiplier, u8)> = None;
    for action in legal {
        let Action::Switch { team_index } = *action else {
            continue;
        };
        let mate = &view.own.team[usize::from(team_index)];
        let score = mate
            .moves
            .iter()
            .filter(|m| m.is_damaging())
            .map(|m| dex.chart().multiplier(m.move_type, opp_types))
            .max()
            .unwrap_or(Multiplier::IMMUNE);
        let better = match best {
            None => true,
            Some((s, i)) => score > s || (score == s && team_index < i),
        };
        if better {
            best = Some((score, team_index));
        }
    }
    best.map(|(_, team_index)| Action::Switch { team_index })
}

/// Drafts by base-stat total with distinct primary types; attacks with the
/// highest-damage move and switches out only when every move would deal nothing.
pub struct GreedyAgent {
    profile: AgentProfile,
    dex: Arc<Dex>,
}

impl GreedyAgent {
    pub fn new(profile: AgentProfile, dex: Arc<Dex>) -> Self {
        GreedyAgent { profile, dex }
    }

    /// Top picks by base-stat total, skipping repeated primary types; ties by lower
    /// index. Returned in pool-index order.
    pub fn draft(pool: &[&Species], team_size: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(pool[i].base_stats.total()), i));
        let mut picked = Vec::with_capacity(team_size);
        let mut primaries = Vec::new();
        for &i in &order {
            if picked.len() == team_size {
                break;
            }
            let primary = pool[i].types[0];
            if !primaries.contains(&primary) {
                primaries.push(primary);
                picked.push(i);
            }
        }
        // Fewer distinct primary types than slots: fill by the same ordering.
        for &i in &order {
            if picked.len() == team_size {
                break;
            }
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        picked.sort_unstable();
        picked
    }
}

impl Agent for GreedyAgent {
    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn select_team(&mut self, pool: &[&Species], team_size: usize) -> Result<Decided, AgentError> {
        let picks = Self::draft(pool, team_size);
        let names: Vec<&str> = picks.iter().map(|&i| pool[i].name.as_str()).collect();
        Ok(AgentDecision::team(
            picks,
            format!(
                "Highest base-stat totals with distinct primary types: {}.",
                names.join(", ")
            ),
        )
        .into())
    }

    fn choose_action(
        &mut self,
        view: &BattleView,
        legal: &[Action],
    ) -> Result<Decided, AgentError> {
        let attacks: Vec<(u8, u64)> = legal
            .iter()
            .filter_map(|a| match *a {
                Action::Attack { move_index } => Some((
                    move_index,
                    expected_damage(view, usize::from(move_index), &self.dex),
                )),
                Action::Switch { .. } => None,
            })
            .collect();
        let best = attacks.iter().map(|&(_, d)| d).max();

        let decision = match best {
            Some(dmg) if dmg > 0 => {
                let (idx, _) = attacks.iter().find(|&&(_, d)| d == dmg).copied().unwrap();
                let name = &view.own.active_battler().moves[usize::from(idx)].name;
                AgentDecision::action(
                    Action::Attack { move_index: idx },
                    format!("{name} has the highest expected damage ({dmg})."),
                )
            }
            _ => match best_switch(view, legal, &self.dex) {
                Some(action) => AgentDecision::action(
                    action,
                    if attacks.is_empty() {
                        "Replacement with the best type matchup.".to_string()
                    } else {
                        "No move can damage the opponent; switching to the best matchup."
                            .to_string()
                    },
                ),
                None => AgentDecision::action(legal[0], "No useful option; using the first move."),
            },
        };
        Ok(decision.into())
    }
}

/// Uniform over legal options, reseeded per match.
pub struct RandomAgent {
    profile: AgentProfile,
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(profile: AgentProfile, seed: u64) -> Self {
        RandomAgent {
            profile,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn begin_match(&mut self, match_seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &match_seed.to_string()));
    }

    fn select_team(&mut self, pool: &[&Species], team_size: usize) -> Result<Decided, AgentError> {
        let picks = index::sample(&mut self.rng, pool.len(), team_size.min(pool.len())).into_vec();
        Ok(AgentDecision::team(picks, String::new()).into())
    }

    fn choose_action(
        &mut self,
        _view: &BattleView,
        legal: &[Action],
    ) -> Result<Decided, AgentError> {
        let action = *legal
            .choose(&mut self.rng)
            .expect("legal set is never empty");
        Ok(AgentDecision::action(action, String::new()).into())
    }
}
