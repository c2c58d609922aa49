use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_agent, run_match, AgentOptions, DraftMode, LeagueError, MatchContext, MatchResult,
    RateLimiters, TournamentConfig,
};
use crate::agents::AgentDecision;
use crate::dex::Dex;
use crate::digest::derive_seed;
use crate::storage::{JsonlWriter, LogRecord, MemoryLog};

/// Where match logs go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogTarget {
    /// `{dir}/{tournament_id}/{match_id}.jsonl`
    Directory(PathBuf),
    /// Kept on the result, keyed by match id.
    Memory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub entrants: Vec<String>,
    /// Round 0 first; match `i` of round `r` is `r{r}-m{i}`.
    pub rounds: Vec<Vec<MatchResult>>,
}

impl Bracket {
    pub fn matches(&self) -> impl Iterator<Item = &MatchResult> {
        self.rounds.iter().flatten()
    }

    pub fn final_match(&self) -> Option<&MatchResult> {
        self.rounds.last().and_then(|r| r.first())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standing {
    pub agent_id: String,
    pub display_name: String,
    pub wins: u32,
    pub losses: u32,
    /// Round the agent lost in; `None` for the champion.
    pub exit_round: Option<u32>,
    pub placement: String,
}

impl Standing {
    pub fn record(&self) -> String {
        format!("{}-{}", self.wins, self.losses)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub tournament_id: String,
    pub master_seed: u64,
    pub seeding: String,
    pub bracket: Bracket,
    pub standings: Vec<Standing>,
    pub champion: String,
    #[serde(skip)]
    pub logs: BTreeMap<String, Vec<LogRecord>>,
}

/// Label for an agent eliminated in `exit_round` of a bracket with `rounds` rounds.
pub fn placement_label(exit_round: Option<u32>, rounds: u32) -> String {
    let Some(r) = exit_round else {
        return "Champion".into();
    };
    match rounds - r {
        1 => "Runner-up".into(),
        2 => "Semi-finalist".into(),
        3 => "Quarter-finalist".into(),
        remaining => format!("Round of {}", 1u64 << remaining),
    }
}

fn match_id(round: usize, index: usize) -> String {
    format!("r{round}-m{index}")
}

pub fn run_tournament(
    config: &TournamentConfig,
    dex: Arc<Dex>,
    target: LogTarget,
) -> Result<TournamentResult, LeagueError> {
    config.validate()?;
    let settings = config.settings();
    let options = AgentOptions {
        max_repair_attempts: config.max_repair_attempts,
        include_history: config.include_history,
    };
    let limiters = RateLimiters::default();
    let drafts: Mutex<HashMap<String, AgentDecision>> = Mutex::new(HashMap::new());
    let mut threads = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = config.jobs {
        threads = threads.num_threads(jobs);
    }
    let threads = threads
        .build()
        .map_err(|e| LeagueError::Config(format!("thread pool: {e}")))?;

    let entrants = &config.entrants;
    let mut alive: Vec<usize> = (0..entrants.len()).collect();
    let mut rounds: Vec<Vec<MatchResult>> = Vec::new();
    let mut logs = BTreeMap::new();

    while alive.len() > 1 {
        let round = rounds.len();
        let pairs: Vec<(usize, usize)> = alive.chunks(2).map(|p| (p[0], p[1])).collect();
        let play = |(index, &(a, b)): (usize, &(usize, usize))| -> Result<(MatchResult, Option<Vec<LogRecord>>), LeagueError> {
            let id = match_id(round, index);
            let seed = derive_seed(config.master_seed, &id);
            let mut agent_a = build_agent(&entrants[a], &dex, options, &limiters)?;
            let mut agent_b = build_agent(&entrants[b], &dex, options, &limiters)?;
            let preset_teams = if config.draft == DraftMode::PerTournament {
                let known = drafts.lock().unwrap_or_else(|e| e.into_inner());
                [
                    known.get(&entrants[a].agent_id).cloned(),
                    known.get(&entrants[b].agent_id).cloned(),
                ]
            } else {
                [None, None]
            };
            let ctx = MatchContext {
                tournament_id: &config.tournament_id,
                match_id: &id,
                seed,
                dex: &dex,
                settings,
                preset_teams,
            };
            let (mut result, records) = match &target {
                LogTarget::Directory(dir) => {
                    let path = dir.join(&config.tournament_id).join(format!("{id}.jsonl"));
                    let mut writer = JsonlWriter::create(&path)?;
                    let mut result = run_match(&ctx, [agent_a.as_mut(), agent_b.as_mut()], &mut writer)?;
                    writer.close()?;
                    result.log_path = Some(path);
                    (result, None)
                }
                LogTarget::Memory => {
                    let mut log = MemoryLog::default();
                    let result = run_match(&ctx, [agent_a.as_mut(), agent_b.as_mut()], &mut log)?;
                    (result, Some(log.records))
                }
            };
            if config.draft == DraftMode::PerTournament {
                let mut known = drafts.lock().unwrap_or_else(|e| e.into_inner());
                for (slot, agent) in [a, b].into_iter().enumerate() {
                    if let Some(d) = result.drafts[slot].take() {
                        known.entry(entrants[agent].agent_id.clone()).or_insert(d);
                    }
                }
            }
            tracing::info!(match_id = %id, winner = %result.winner_id, turns = result.turns, "match finished");
            Ok((result, records))
        };
        let outcomes: Vec<_> = threads.install(|| pairs.par_iter().enumerate().map(play).collect());

        let mut results = Vec::with_capacity(pairs.len());
        let mut next = Vec::with_capacity(pairs.len());
        for ((a, b), outcome) in pairs.iter().zip(outcomes) {
            let (result, records) = outcome?;
            next.push(if result.winner_id == entrants[*a].agent_id {
                *a
            } else {
                *b
            });
            if let Some(records) = records {
                logs.insert(result.match_id.clone(), records);
            }
            results.push(result);
        }
        rounds.push(results);
        alive = next;
    }

    let total_rounds = rounds.len() as u32;
    let mut standings: Vec<Standing> = entrants
        .iter()
        .map(|e| Standing {
            agent_id: e.agent_id.clone(),
            display_name: e.name().to_string(),
            wins: 0,
            losses: 0,
            exit_round: None,
            placement: String::new(),
        })
        .collect();
    let position: HashMap<&str, usize> = entrants
        .iter()
        .enumerate()
        .map(|(i, e)| (e.agent_id.as_str(), i))
        .collect();
    for (r, round) in rounds.iter().enumerate() {
        for m in round {
            standings[position[m.winner_id.as_str()]].wins += 1;
            let loser = &mut standings[position[m.loser_id()]];
            loser.losses += 1;
            loser.exit_round = Some(r as u32);
        }
    }
    for s in &mut standings {
        s.placement = placement_label(s.exit_round, total_rounds);
    }
    // Stable sort keeps seeding order within a placement.
    standings.sort_by_key(|s| std::cmp::Reverse(s.exit_round.map_or(u32::MAX, |r| r)));
    let champion = standings[0].agent_id.clone();

    Ok(TournamentResult {
        tournament_id: config.tournament_id.clone(),
        master_seed: config.master_seed,
        seeding: "config order".into(),
        bracket: Bracket {
            entrants: entrants.iter().map(|e| e.agent_id.clone()).collect(),
            rounds,
        },
        standings,
        champion,
        logs,
    })
}

pub fn standings_table(result: &TournamentResult) -> String {
    let name_width = result
        .standings
        .iter()
        .map(|s| s.display_name.chars().count())
        .max()
        .unwrap_or(0)
        .max("Agent".len());
    let mut out = format!(
        "{:<name_width$}  {:<6}  Final Standing\n",
        "Agent", "Record"
    );
    for s in &result.standings {
        out.push_str(&format!(
            "{:<name_width$}  {:<6}  {}\n",
            s.display_name,
            s.record(),
            s.placement
        ));
    }
    out
}
