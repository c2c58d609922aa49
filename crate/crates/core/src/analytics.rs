//! Evaluation metrics computed from match logs.
//!
//! All functions are pure over their inputs. Decisions the harness substituted
//! (fallbacks, forfeits) are excluded from per-decision metrics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::expected_damage;
use crate::dex::Dex;
use crate::engine::Action;
use crate::storage::{read_log, DecisionRecord, LogRecord, MetaStage, Phase, StorageError};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("no matches recorded for this agent")]
    NoMatches,
    #[error("no attack decisions to score")]
    NoAttackDecisions,
    #[error("no match logs found under {0}")]
    NoLogs(PathBuf),
    #[error(transparent)]
    Storage(#[from] StorageError),
}

/// The records of one match file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchLog {
    pub source: Option<PathBuf>,
    pub records: Vec<LogRecord>,
}

impl MatchLog {
    pub fn new(records: Vec<LogRecord>) -> Self {
        MatchLog {
            source: None,
            records,
        }
    }

    pub fn agents(&self) -> Option<[String; 2]> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Meta(m) => match &m.stage {
                MetaStage::MatchStart { agents, .. } => {
                    Some([agents[0].agent_id.clone(), agents[1].agent_id.clone()])
                }
                _ => None,
            },
            _ => None,
        })
    }

    pub fn winner_id(&self) -> Option<&str> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Meta(m) => match &m.stage {
                MetaStage::MatchEnd { winner_id, .. } => Some(winner_id.as_str()),
                _ => None,
            },
            _ => None,
        })
    }

    /// Teams of the first battle, by side.
    pub fn teams(&self) -> Option<[Vec<String>; 2]> {
        self.records.iter().find_map(|r| match r {
            LogRecord::Meta(m) => match &m.stage {
                MetaStage::BattleStart { teams, .. } => Some(teams.clone()),
                _ => None,
            },
            _ => None,
        })
    }

    pub fn decisions(&self) -> impl Iterator<Item = &DecisionRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Decision(d) => Some(d.as_ref()),
            _ => None,
        })
    }
}

/// Every `*.jsonl` file below `dir`, in path order.
pub fn load_logs(dir: impl AsRef<Path>) -> Result<Vec<MatchLog>, AnalyticsError> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "jsonl"))
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(AnalyticsError::NoLogs(dir.to_path_buf()));
    }
    paths
        .into_iter()
        .map(|p| {
            Ok(MatchLog {
                records: read_log(&p)?,
                source: Some(p),
            })
        })
        .collect()
}

fn agent_authored(d: &DecisionRecord) -> bool {
    d.error.is_none() && !d.fallback_used
}

fn battle_phase(d: &DecisionRecord) -> bool {
    matches!(d.phase, Phase::Battle | Phase::ForcedReplace)
}

pub fn win_rate(logs: &[MatchLog], agent_id: &str) -> Result<f64, AnalyticsError> {
    let mut played = 0u32;
    let mut won = 0u32;
    for log in logs {
        let Some(agents) = log.agents() else { continue };
        if !agents.iter().any(|a| a == agent_id) {
            continue;
        }
        let Some(winner) = log.winner_id() else {
            continue;
        };
        played += 1;
        if winner == agent_id {
            won += 1;
        }
    }
    if played == 0 {
        return Err(AnalyticsError::NoMatches);
    }
    Ok(f64::from(won) / f64::from(played))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveEfficiency {
    pub attack_decisions: u32,
    pub effective: u32,
    pub optimal: u32,
    pub effective_move_rate: f64,
    pub optimal_move_rate: f64,
}

/// Share of attacks that were super effective, and share that maximised expected damage.
pub fn move_efficiency<'a>(
    decisions: impl IntoIterator<Item = &'a DecisionRecord>,
    dex: &Dex,
) -> Result<MoveEfficiency, AnalyticsError> {
    let mut attacks = 0u32;
    let mut effective = 0u32;
    let mut optimal = 0u32;
    for d in decisions {
        if !agent_authored(d) || !battle_phase(d) {
            continue;
        }
        let (Some(view), Some(Action::Attack { move_index })) = (&d.view, d.decision.as_action())
        else {
            continue;
        };
        attacks += 1;
        let own = view.own.active_battler();
        let chosen = &own.moves[usize::from(move_index)];
        if chosen.is_damaging()
            && dex
                .chart()
                .multiplier(chosen.move_type, &view.opponent.active.types)
                .is_super_effective()
        {
            effective += 1;
        }
        let best = d
            .legal
            .iter()
            .filter_map(|a| match a {
                Action::Attack { move_index } => {
                    Some(expected_damage(view, usize::from(*move_index), dex))
                }
                Action::Switch { .. } => None,
            })
            .max()
            .unwrap_or(0);
        if expected_damage(view, usize::from(move_index), dex) == best {
            optimal += 1;
        }
    }
    if attacks == 0 {
        return Err(AnalyticsError::NoAttackDecisions);
    }
    Ok(MoveEfficiency {
        attack_decisions: attacks,
        effective,
        optimal,
        effective_move_rate: f64::from(effective) / f64::from(attacks),
        optimal_move_rate: f64::from(optimal) / f64::from(attacks),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchMetrics {
    pub decision_turns: u32,
    pub voluntary_switches: u32,
    pub switch_rate: f64,
    /// Mean own active HP percent when switching voluntarily; absent with no such switch.
    pub mean_hp_percent_at_voluntary_switch: Option<f64>,
}

pub fn switch_metrics<'a>(
    decisions: impl IntoIterator<Item = &'a DecisionRecord>,
) -> SwitchMetrics {
    let mut turns = 0u32;
    let mut switches = 0u32;
    let mut hp_total = 0f64;
    for d in decisions {
        if !agent_authored(d) || !battle_phase(d) {
            continue;
        }
        turns += 1;
        let voluntary = d.phase == Phase::Battle
            && matches!(d.decision.as_action(), Some(Action::Switch { .. }));
        if let (true, Some(view)) = (voluntary, &d.view) {
            switches += 1;
            hp_total += f64::from(view.own.active_battler().hp_percent());
        }
    }
    SwitchMetrics {
        decision_turns: turns,
        voluntary_switches: switches,
        switch_rate: if turns == 0 {
            0.0
        } else {
            f64::from(switches) / f64::from(turns)
        },
        mean_hp_percent_at_voluntary_switch: (switches > 0).then(|| hp_total / f64::from(switches)),
    }
}

/// Number of teams containing each species.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickFrequency(pub BTreeMap<String, usize>);

impl PickFrequency {
    pub fn count(&self, species: &str) -> usize {
        self.0.get(species).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    /// Most picked first; ties by name.
    pub fn ranked(&self) -> Vec<(&str, usize)> {
        let mut v: Vec<(&str, usize)> = self.0.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("species,count\n");
        for (name, count) in self.ranked() {
            let _ = writeln!(out, "{name},{count}");
        }
        out
    }
}

pub fn pick_frequency<S: AsRef<str>>(teams: &[Vec<S>]) -> PickFrequency {
    let mut counts = BTreeMap::new();
    for team in teams {
        let distinct: BTreeSet<&str> = team.iter().map(AsRef::as_ref).collect();
        for name in distinct {
            *counts.entry(name.to_string()).or_insert(0) += 1;
        }
    }
    PickFrequency(counts)
}

/// Distinct species used divided by total team slots; `None` with no teams.
pub fn team_diversity<S: AsRef<str>>(teams: &[Vec<S>]) -> Option<f64> {
    let slots: usize = teams.iter().map(Vec::len).sum();
    if slots == 0 {
        return None;
    }
    let distinct: BTreeSet<&str> = teams.iter().flatten().map(AsRef::as_ref).collect();
    Some(distinct.len() as f64 / slots as f64)
}

pub fn jaccard<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

pub fn jaccard_matrix<S: AsRef<str>>(teams: &[Vec<S>]) -> Vec<Vec<f64>> {
    teams
        .iter()
        .map(|a| teams.iter().map(|b| jaccard(a, b)).collect())
        .collect()
}

/// Mean whitespace-separated words per stated rationale. Descriptive only.
pub fn mean_rationale_words<'a>(
    decisions: impl IntoIterator<Item = &'a DecisionRecord>,
) -> Option<f64> {
    let mut n = 0u32;
    let mut words = 0usize;
    for d in decisions {
        if !agent_authored(d) {
            continue;
        }
        n += 1;
        words += d.decision.reasoning.split_whitespace().count();
    }
    (n > 0).then(|| words as f64 / f64::from(n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub matches: u32,
    pub wins: u32,
    pub win_rate: f64,
    pub attack_decisions: u32,
    pub effective_move_rate: Option<f64>,
    pub optimal_move_rate: Option<f64>,
    pub decision_turns: u32,
    pub voluntary_switches: u32,
    pub switch_rate: f64,
    pub mean_hp_percent_at_voluntary_switch: Option<f64>,
    pub teams_drafted: u32,
    pub team_diversity: Option<f64>,
    pub pick_frequency: PickFrequency,
    pub fallback_decisions: u32,
    /// Descriptive statistic; rationales are not scored.
    pub mean_rationale_words: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JaccardMatrix {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub matches: usize,
    pub agents: BTreeMap<String, AgentMetrics>,
    pub pick_frequency: PickFrequency,
    pub team_diversity: Option<f64>,
    /// Pairwise similarity of each agent's first drafted team.
    pub team_similarity: JaccardMatrix,
}

pub fn build_report(logs: &[MatchLog], dex: &Dex) -> Result<MetricsReport, AnalyticsError> {
    let mut agent_ids: BTreeSet<String> = BTreeSet::new();
    let mut teams_by_agent: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut matches = 0;
    for log in logs {
        let Some(agents) = log.agents() else { continue };
        matches += 1;
        if let Some(teams) = log.teams() {
            for (agent, team) in agents.iter().zip(teams) {
                teams_by_agent.entry(agent.clone()).or_default().push(team);
            }
        }
        agent_ids.extend(agents);
    }
    if matches == 0 {
        return Err(AnalyticsError::NoMatches);
    }

    let mut agents = BTreeMap::new();
    for id in &agent_ids {
        let decisions: Vec<&DecisionRecord> = logs
            .iter()
            .flat_map(MatchLog::decisions)
            .filter(|d| &d.agent_id == id)
            .collect();
        let played = logs
            .iter()
            .filter(|l| l.agents().is_some_and(|a| a.contains(id)) && l.winner_id().is_some())
            .count() as u32;
        let wins = logs
            .iter()
            .filter(|l| l.winner_id() == Some(id.as_str()))
            .count() as u32;
        let efficiency = match move_efficiency(decisions.iter().copied(), dex) {
            Ok(e) => Some(e),
            Err(AnalyticsError::NoAttackDecisions) => None,
            Err(e) => return Err(e),
        };
        let switching = switch_metrics(decisions.iter().copied());
        let teams = teams_by_agent.get(id).cloned().unwrap_or_default();
        agents.insert(
            id.clone(),
            AgentMetrics {
                matches: played,
                wins,
                win_rate: win_rate(logs, id).unwrap_or(0.0),
                attack_decisions: efficiency.map_or(0, |e| e.attack_decisions),
                effective_move_rate: efficiency.map(|e| e.effective_move_rate),
                optimal_move_rate: efficiency.map(|e| e.optimal_move_rate),
                decision_turns: switching.decision_turns,
                voluntary_switches: switching.voluntary_switches,
                switch_rate: switching.switch_rate,
                mean_hp_percent_at_voluntary_switch: switching.mean_hp_percent_at_voluntary_switch,
                teams_drafted: teams.len() as u32,
                team_diversity: team_diversity(&teams),
                pick_frequency: pick_frequency(&teams),
                fallback_decisions: decisions.iter().filter(|d| d.fallback_used).count() as u32,
                mean_rationale_words: mean_rationale_words(decisions.iter().copied()),
            },
        );
    }

    let all_teams: Vec<Vec<String>> = teams_by_agent.values().flatten().cloned().collect();
    let (labels, firsts): (Vec<String>, Vec<Vec<String>>) = teams_by_agent
        .iter()
        .filter_map(|(id, t)| t.first().map(|team| (id.clone(), team.clone())))
        .unzip();
    Ok(MetricsReport {
        matches,
        agents,
        pick_frequency: pick_frequency(&all_teams),
        team_diversity: team_diversity(&all_teams),
        team_similarity: JaccardMatrix {
            matrix: jaccard_matrix(&firsts),
            labels,
        },
    })
}

fn opt(v: Option<f64>, precision: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.precision$}"))
}

impl MetricsReport {
    pub fn to_text_table(&self) -> String {
        let width = self
            .agents
            .keys()
            .map(|k| k.chars().count())
            .max()
            .unwrap_or(0)
            .max("Agent".len());
        let mut out = format!(
            "{:<width$}  {:>7}  {:>4}  {:>8}  {:>9}  {:>7}  {:>10}  {:>9}  {:>9}  {:>9}\n",
            "Agent",
            "Matches",
            "Wins",
            "Win rate",
            "Effective",
            "Optimal",
            "Switch rate",
            "HP@switch",
            "Diversity",
            "Words*"
        );
        for (id, m) in &self.agents {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>4}  {:>8.3}  {:>9}  {:>7}  {:>10.3}  {:>9}  {:>9}  {:>9}",
                id,
                m.matches,
                m.wins,
                m.win_rate,
                opt(m.effective_move_rate, 3),
                opt(m.optimal_move_rate, 3),
                m.switch_rate,
                opt(m.mean_hp_percent_at_voluntary_switch, 1),
                opt(m.team_diversity, 3),
                opt(m.mean_rationale_words, 1),
            );
        }
        out.push_str("* mean words per rationale; descriptive, not a quality score\n");
        out
    }
}
