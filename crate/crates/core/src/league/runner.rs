use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{FailurePolicy, LeagueError, MatchSettings};
use crate::agents::{Agent, AgentDecision, AgentError};
use crate::dex::{Dex, Species};
use crate::digest::derive_seed;
use crate::engine::{
    legal_actions, resolve_turn, start_battle, view_for, Action, EndReason, SideId,
};
use crate::gateway::RawExchange;
use crate::storage::{
    now_ms, DecisionRecord, EventRecord, LogRecord, LogSink, MetaRecord, MetaStage, Phase,
};

/// Everything a match needs besides its two agents and a log.
#[derive(Debug, Clone)]
pub struct MatchContext<'a> {
    pub tournament_id: &'a str,
    pub match_id: &'a str,
    pub seed: u64,
    pub dex: &'a Dex,
    pub settings: MatchSettings,
    /// Teams fixed earlier in the tournament; `None` means draft now.
    pub preset_teams: [Option<AgentDecision>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub match_id: String,
    pub agents: [String; 2],
    pub teams: [Vec<String>; 2],
    pub team_indices: [Vec<usize>; 2],
    pub winner: SideId,
    pub winner_id: String,
    pub game_winners: Vec<SideId>,
    /// Turns resolved across all games.
    pub turns: u32,
    pub reason: EndReason,
    pub seed: u64,
    /// Decisions replaced by the harness, per side.
    pub fallbacks: [u32; 2],
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    #[serde(skip)]
    pub drafts: [Option<AgentDecision>; 2],
}

impl MatchResult {
    pub fn loser_id(&self) -> &str {
        &self.agents[self.winner.opponent().index()]
    }
}

struct Failure {
    reason: String,
    exchanges: Vec<RawExchange>,
}

impl From<AgentError> for Failure {
    fn from(e: AgentError) -> Self {
        Failure {
            reason: e.to_string(),
            exchanges: e.exchanges().to_vec(),
        }
    }
}

fn check_team(indices: &[usize], pool_len: usize, team_size: usize) -> Result<(), String> {
    if indices.len() != team_size {
        return Err(format!(
            "team has {} members, expected {team_size}",
            indices.len()
        ));
    }
    for (k, &i) in indices.iter().enumerate() {
        if i >= pool_len {
            return Err(format!("pool index {i} out of range"));
        }
        if indices[..k].contains(&i) {
            return Err(format!("pool index {i} picked twice"));
        }
    }
    Ok(())
}

struct Recorder<'s, 'c> {
    sink: &'s mut dyn LogSink,
    match_id: &'c str,
}

impl Recorder<'_, '_> {
    fn meta(&mut self, stage: MetaStage) -> Result<(), LeagueError> {
        self.sink.append(&LogRecord::Meta(MetaRecord {
            match_id: self.match_id.to_string(),
            stage,
        }))?;
        Ok(())
    }

    fn record(&mut self, record: DecisionRecord) -> Result<(), LeagueError> {
        self.sink.append(&LogRecord::Decision(Box::new(record)))?;
        Ok(())
    }
}

/// Plays one match (one or more battles) and logs every decision and turn.
pub fn run_match(
    ctx: &MatchContext<'_>,
    agents: [&mut dyn Agent; 2],
    sink: &mut dyn LogSink,
) -> Result<MatchResult, LeagueError> {
    let ids = [
        agents[0].profile().agent_id.clone(),
        agents[1].profile().agent_id.clone(),
    ];
    if ids[0] == ids[1] {
        return Err(LeagueError::Config(format!(
            "agent {} cannot play itself",
            ids[0]
        )));
    }
    let settings = ctx.settings;
    let mut log = Recorder {
        sink,
        match_id: ctx.match_id,
    };
    log.meta(MetaStage::MatchStart {
        tournament_id: ctx.tournament_id.to_string(),
        dex_hash: ctx.dex.content_hash(),
        match_seed: ctx.seed,
        agents: [agents[0].profile().clone(), agents[1].profile().clone()],
        settings: serde_json::to_value(settings).unwrap_or_default(),
    })?;
    for side in SideId::BOTH {
        let label = format!("side-{side:?}");
        agents[side.index()].begin_match(derive_seed(ctx.seed, &label));
    }

    let pool = ctx.dex.pool();
    let mut fallbacks = [0u32; 2];
    let mut team_indices: [Vec<usize>; 2] = Default::default();
    let mut drafts: [Option<AgentDecision>; 2] = Default::default();
    let mut forfeit: Option<SideId> = None;

    for side in SideId::BOTH {
        let s = side.index();
        let started = now_ms();
        let (decision, exchanges, failure) = match &ctx.preset_teams[s] {
            Some(preset) => (preset.clone(), Vec::new(), None),
            None => {
                let outcome = agents[s]
                    .select_team(&pool, settings.team_size)
                    .map_err(Failure::from)
                    .and_then(|d| {
                        let indices = d.decision.as_team().unwrap_or(&[]).to_vec();
                        match check_team(&indices, pool.len(), settings.team_size) {
                            Ok(()) => Ok(d),
                            Err(reason) => Err(Failure {
                                reason,
                                exchanges: d.exchanges,
                            }),
                        }
                    });
                match outcome {
                    Ok(d) => (d.decision, d.exchanges, None),
                    Err(f) => {
                        let fallback = AgentDecision::team((0..settings.team_size).collect(), "");
                        (fallback, f.exchanges, Some(f.reason))
                    }
                }
            }
        };
        let fallback_used = failure.is_some() && settings.failure_policy == FailurePolicy::Fallback;
        if failure.is_some() {
            tracing::warn!(agent = %ids[s], reason = failure.as_deref().unwrap_or(""), "team selection failed");
            if fallback_used {
                fallbacks[s] += 1;
            } else if forfeit.is_none() {
                forfeit = Some(side);
            }
        }
        team_indices[s] = decision.as_team().unwrap_or(&[]).to_vec();
        if failure.is_none() {
            drafts[s] = Some(decision.clone());
        }
        log.record(DecisionRecord {
            match_id: ctx.match_id.to_string(),
            game: 0,
            turn: 0,
            agent_id: ids[s].clone(),
            side,
            phase: Phase::TeamSelect,
            view: None,
            legal: Vec::new(),
            decision,
            exchanges,
            fallback_used,
            error: failure,
            started_at_ms: started,
            finished_at_ms: now_ms(),
        })?;
    }

    let teams: [Vec<&Species>; 2] = [
        team_indices[0].iter().map(|&i| pool[i]).collect(),
        team_indices[1].iter().map(|&i| pool[i]).collect(),
    ];
    let team_names = [
        teams[0].iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
        teams[1].iter().map(|s| s.name.clone()).collect::<Vec<_>>(),
    ];

    let needed = settings.best_of / 2 + 1;
    let mut wins = [0u32; 2];
    let mut game_winners = Vec::new();
    let mut total_turns = 0;
    let mut last_reason = EndReason::Forfeit;
    let mut game = 0u32;

    while forfeit.is_none() && wins[0] < needed && wins[1] < needed {
        let battle_seed = derive_seed(ctx.seed, &format!("game-{game}"));
        let (mut state, events) =
            start_battle(&teams[0], &teams[1], battle_seed, settings.turn_cap)?;
        log.meta(MetaStage::BattleStart {
            game,
            battle_seed,
            turn_cap: settings.turn_cap,
            teams: team_names.clone(),
            initial_digest: state.digest(),
            events,
        })?;

        while !state.is_over() && forfeit.is_none() {
            let mut chosen = [Action::Attack { move_index: 0 }; 2];
            for side in SideId::BOTH {
                let s = side.index();
                let legal = legal_actions(&state, side)?;
                let view = view_for(&state, side);
                let started = now_ms();
                let outcome = agents[s]
                    .choose_action(&view, &legal)
                    .map_err(Failure::from)
                    .and_then(|d| match d.decision.as_action() {
                        Some(a) if legal.contains(&a) => Ok(d),
                        other => Err(Failure {
                            reason: format!("agent returned an illegal action {other:?}"),
                            exchanges: d.exchanges,
                        }),
                    });
                let phase = if view.own.forced_replacement {
                    Phase::ForcedReplace
                } else {
                    Phase::Battle
                };
                let (decision, exchanges, failure) = match outcome {
                    Ok(d) => (d.decision, d.exchanges, None),
                    Err(f) => (
                        AgentDecision::action(legal[0], ""),
                        f.exchanges,
                        Some(f.reason),
                    ),
                };
                let fallback_used =
                    failure.is_some() && settings.failure_policy == FailurePolicy::Fallback;
                if failure.is_some() {
                    tracing::warn!(agent = %ids[s], turn = state.turn_number, "action selection failed");
                    if fallback_used {
                        fallbacks[s] += 1;
                    } else if forfeit.is_none() {
                        forfeit = Some(side);
                    }
                }
                chosen[s] = decision.as_action().unwrap_or(legal[0]);
                log.record(DecisionRecord {
                    match_id: ctx.match_id.to_string(),
                    game,
                    turn: state.turn_number,
                    agent_id: ids[s].clone(),
                    side,
                    phase,
                    view: Some(view),
                    legal,
                    decision,
                    exchanges,
                    fallback_used,
                    error: failure,
                    started_at_ms: started,
                    finished_at_ms: now_ms(),
                })?;
            }
            if forfeit.is_some() {
                break;
            }
            let pre_digest = state.digest();
            let turn = state.turn_number;
            let (next, events) = resolve_turn(&state, chosen[0], chosen[1], ctx.dex.chart())?;
            tracing::trace!(match_id = ctx.match_id, turn, ?events, "turn resolved");
            log.sink.append(&LogRecord::Events(EventRecord {
                match_id: ctx.match_id.to_string(),
                game,
                turn,
                actions: chosen,
                events,
                pre_digest,
                post_digest: next.digest(),
            }))?;
            state = next;
        }

        let (winner, reason) = match (forfeit, state.outcome) {
            (Some(loser), _) => (loser.opponent(), EndReason::Forfeit),
            (None, Some(o)) => (o.winner, o.reason),
            (None, None) => unreachable!("battle loop exits only on outcome or forfeit"),
        };
        log.meta(MetaStage::BattleEnd {
            game,
            winner,
            reason,
            turns: state.turns_resolved(),
        })?;
        total_turns += state.turns_resolved();
        wins[winner.index()] += 1;
        game_winners.push(winner);
        last_reason = reason;
        game += 1;
    }

    let winner = match forfeit {
        Some(loser) => loser.opponent(),
        None if wins[0] > wins[1] => SideId::A,
        None => SideId::B,
    };
    if forfeit.is_some() {
        last_reason = EndReason::Forfeit;
    }
    log.meta(MetaStage::MatchEnd {
        winner,
        winner_id: ids[winner.index()].clone(),
        reason: last_reason,
        games: game,
    })?;

    Ok(MatchResult {
        match_id: ctx.match_id.to_string(),
        winner_id: ids[winner.index()].clone(),
        agents: ids,
        teams: team_names,
        team_indices,
        winner,
        game_winners,
        turns: total_turns,
        reason: last_reason,
        seed: ctx.seed,
        fallbacks,
        log_path: None,
        drafts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentProfile, Decided, GreedyAgent, RandomAgent, ScriptedPolicy};
    use crate::engine::BattleView;
    use crate::storage::{replay, MemoryLog};
    use std::sync::Arc;

    fn ctx<'a>(dex: &'a Dex, seed: u64, settings: MatchSettings) -> MatchContext<'a> {
        MatchContext {
            tournament_id: "t",
            match_id: "m",
            seed,
            dex,
            settings,
            preset_teams: [None, None],
        }
    }

    fn greedy(dex: &Arc<Dex>) -> GreedyAgent {
        GreedyAgent::new(
            AgentProfile::scripted("greedy", ScriptedPolicy::Greedy, 0),
            dex.clone(),
        )
    }

    fn random(seed: u64) -> RandomAgent {
        RandomAgent::new(
            AgentProfile::scripted("random", ScriptedPolicy::Random, seed),
            seed,
        )
    }

    struct Broken(AgentProfile);

    impl Agent for Broken {
        fn profile(&self) -> &AgentProfile {
            &self.0
        }
        fn select_team(&mut self, _: &[&Species], _: usize) -> Result<Decided, AgentError> {
            Err(AgentError::InvalidTeam {
                reason: "NoJsonFound".into(),
                exchanges: Vec::new(),
            })
        }
        fn choose_action(&mut self, _: &BattleView, _: &[Action]) -> Result<Decided, AgentError> {
            Err(AgentError::InvalidAction {
                reason: "NoJsonFound".into(),
                exchanges: Vec::new(),
            })
        }
    }

    fn broken() -> Broken {
        Broken(AgentProfile::scripted("broken", ScriptedPolicy::Random, 0))
    }

    #[test]
    fn repeated_runs_are_identical() {
        let dex = Arc::new(Dex::bundled());
        let run = || {
            let mut log = MemoryLog::default();
            let r = run_match(
                &ctx(&dex, 42, MatchSettings::default()),
                [&mut greedy(&dex), &mut random(7)],
                &mut log,
            )
            .unwrap();
            serde_json::to_string(&r).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn invalid_teams_fall_back_to_first_pool_entries() {
        let dex = Arc::new(Dex::bundled());
        let mut log = MemoryLog::default();
        let r = run_match(
            &ctx(&dex, 3, MatchSettings::default()),
            [&mut broken(), &mut greedy(&dex)],
            &mut log,
        )
        .unwrap();
        assert_eq!(r.team_indices[0], vec![0, 1, 2, 3, 4, 5]);
        assert_ne!(r.reason, EndReason::Forfeit);
        assert!(r.fallbacks[0] > 1);
        assert_eq!(r.fallbacks[1], 0);
        let fell_back = log.records.iter().any(|rec| {
            matches!(rec,
            LogRecord::Decision(d) if d.fallback_used && d.error.is_some())
        });
        assert!(fell_back);
        assert_eq!(replay(&log.records, &dex).unwrap().winner, r.winner);
    }

    #[test]
    fn disqualification_forfeits() {
        let dex = Arc::new(Dex::bundled());
        let settings = MatchSettings {
            failure_policy: FailurePolicy::Disqualify,
            ..MatchSettings::default()
        };
        let mut log = MemoryLog::default();
        let r = run_match(
            &ctx(&dex, 3, settings),
            [&mut greedy(&dex), &mut broken()],
            &mut log,
        )
        .unwrap();
        assert_eq!(r.winner, SideId::A);
        assert_eq!(r.reason, EndReason::Forfeit);
        assert_eq!(r.turns, 0);
        assert_eq!(replay(&log.records, &dex).unwrap().winner, SideId::A);
    }

    #[test]
    fn turn_cap_tie_break_is_reported() {
        let dex = Arc::new(Dex::bundled());
        let settings = MatchSettings {
            turn_cap: 1,
            ..MatchSettings::default()
        };
        let mut log = MemoryLog::default();
        let r = run_match(
            &ctx(&dex, 11, settings),
            [&mut greedy(&dex), &mut random(2)],
            &mut log,
        )
        .unwrap();
        assert_eq!(r.turns, 1);
        assert_eq!(r.reason, EndReason::TurnCapTieBreak);
    }

    #[test]
    fn an_agent_cannot_play_itself() {
        let dex = Arc::new(Dex::bundled());
        let mut log = MemoryLog::default();
        let r = run_match(
            &ctx(&dex, 1, MatchSettings::default()),
            [&mut random(1), &mut random(2)],
            &mut log,
        );
        assert!(matches!(r, Err(LeagueError::Config(_))));
    }

    #[test]
    fn best_of_three_needs_two_wins() {
        let dex = Arc::new(Dex::bundled());
        let settings = MatchSettings {
            best_of: 3,
            ..MatchSettings::default()
        };
        let mut log = MemoryLog::default();
        let r = run_match(
            &ctx(&dex, 5, settings),
            [&mut greedy(&dex), &mut random(3)],
            &mut log,
        )
        .unwrap();
        let won = r.game_winners.iter().filter(|&&w| w == r.winner).count();
        assert_eq!(won, 2);
        assert!(r.game_winners.len() <= 3);
        assert_eq!(replay(&log.records, &dex).unwrap().winner, r.winner);
    }

    #[test]
    fn preset_teams_skip_drafting() {
        let dex = Arc::new(Dex::bundled());
        let mut c = ctx(&dex, 5, MatchSettings::default());
        c.preset_teams[0] = Some(AgentDecision::team(vec![10, 11, 12, 13, 14, 15], "earlier"));
        let mut log = MemoryLog::default();
        let r = run_match(&c, [&mut broken(), &mut greedy(&dex)], &mut log).unwrap();
        assert_eq!(r.team_indices[0], vec![10, 11, 12, 13, 14, 15]);
    }
}
