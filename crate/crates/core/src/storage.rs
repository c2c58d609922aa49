//! Append-only JSONL match logs and replay verification.
//!
//! Every line is one [`LogRecord`] with a top-level `"kind"` of `meta`, `decision` or
//! `events`, plus a `schema_version`. Readers reject unknown major versions.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agents::{AgentDecision, AgentProfile};
use crate::dex::{Dex, Species};
use crate::engine::{
    resolve_turn, start_battle, Action, BattleState, BattleView, EndReason, SideId, TurnEvents,
};
use crate::gateway::RawExchange;

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u32 = 1;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("unsupported log schema version {0}")]
    UnsupportedSchema(String),
    #[error("replay diverged from the log at game {game}, turn {turn}")]
    DigestMismatch { game: u32, turn: u32 },
    #[error("log is incomplete: {0}")]
    IncompleteLog(String),
    #[error("log references unknown species {0}")]
    UnknownSpecies(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    TeamSelect,
    Battle,
    ForcedReplace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum MetaStage {
    MatchStart {
        tournament_id: String,
        dex_hash: u64,
        match_seed: u64,
        agents: [AgentProfile; 2],
        settings: Value,
    },
    BattleStart {
        game: u32,
        battle_seed: u64,
        turn_cap: u32,
        teams: [Vec<String>; 2],
        initial_digest: u64,
        events: TurnEvents,
    },
    BattleEnd {
        game: u32,
        winner: SideId,
        reason: EndReason,
        turns: u32,
    },
    MatchEnd {
        winner: SideId,
        winner_id: String,
        reason: EndReason,
        games: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub match_id: String,
    #[serde(flatten)]
    pub stage: MetaStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub match_id: String,
    pub game: u32,
    /// Battle turn number; 0 during team selection.
    pub turn: u32,
    pub agent_id: String,
    pub side: SideId,
    pub phase: Phase,
    #[serde(default)]
    pub view: Option<BattleView>,
    #[serde(default)]
    pub legal: Vec<Action>,
    pub decision: AgentDecision,
    pub exchanges: Vec<RawExchange>,
    pub fallback_used: bool,
    #[serde(default)]
    pub error: Option<String>,
    pub started_at_ms: u64,
    pub finished_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub match_id: String,
    pub game: u32,
    pub turn: u32,
    pub actions: [Action; 2],
    pub events: TurnEvents,
    pub pre_digest: u64,
    pub post_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LogRecord {
    Meta(MetaRecord),
    Decision(Box<DecisionRecord>),
    Events(EventRecord),
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

pub fn encode_record(record: &LogRecord) -> String {
    let mut value = serde_json::to_value(record).expect("log records always serialize");
    if let Value::Object(map) = &mut value {
        map.insert(
            "schema_version".into(),
            Value::String(SCHEMA_VERSION.into()),
        );
    }
    value.to_string()
}

fn check_version(value: &Value) -> Result<(), StorageError> {
    let version = value
        .get("schema_version")
        .and_then(Value::as_str)
        .unwrap_or("");
    let major = version
        .split('.')
        .next()
        .and_then(|m| m.parse::<u32>().ok());
    if major == Some(SCHEMA_MAJOR) {
        Ok(())
    } else {
        Err(StorageError::UnsupportedSchema(version.to_string()))
    }
}

pub fn decode_record(line: &str, line_no: usize) -> Result<LogRecord, StorageError> {
    let malformed = |detail: String| StorageError::Malformed {
        line: line_no,
        detail,
    };
    let value: Value = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
    check_version(&value)?;
    serde_json::from_value(value).map_err(|e| malformed(e.to_string()))
}

/// Destination for the records of one match.
pub trait LogSink {
    fn append(&mut self, record: &LogRecord) -> Result<(), StorageError>;
}

/// One JSON object per line, flushed after every append.
#[derive(Debug)]
pub struct JsonlWriter {
    path: PathBuf,
    out: Option<BufWriter<File>>,
}

impl JsonlWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, StorageError> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)?;
        Ok(JsonlWriter {
            path,
            out: Some(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn close(&mut self) -> Result<(), StorageError> {
        if let Some(mut out) = self.out.take() {
            out.flush()?;
        }
        Ok(())
    }
}

impl LogSink for JsonlWriter {
    fn append(&mut self, record: &LogRecord) -> Result<(), StorageError> {
        let out = self.out.as_mut().ok_or_else(|| {
            std::io::Error::new(std::io::ErrorKind::BrokenPipe, "log already closed")
        })?;
        writeln!(out, "{}", encode_record(record))?;
        out.flush()?;
        Ok(())
    }
}

impl Drop for JsonlWriter {
    fn drop(&mut self) {
        let _ = self.close();
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryLog {
    pub records: Vec<LogRecord>,
}

impl LogSink for MemoryLog {
    fn append(&mut self, record: &LogRecord) -> Result<(), StorageError> {
        self.records.push(record.clone());
        Ok(())
    }
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<LogRecord>, StorageError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(decode_record(&line, i + 1)?);
    }
    Ok(records)
}

/// Recomputed result of one battle.
#[derive(Debug, Clone, PartialEq)]
pub struct GameReplay {
    pub game: u32,
    pub final_state: BattleState,
    pub winner: SideId,
    pub reason: EndReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub games: Vec<GameReplay>,
    pub winner: SideId,
}

fn team_species<'d>(dex: &'d Dex, names: &[String]) -> Result<Vec<&'d Species>, StorageError> {
    names
        .iter()
        .map(|n| {
            dex.species(n)
                .ok_or_else(|| StorageError::UnknownSpecies(n.clone()))
        })
        .collect()
}

/// Re-runs every logged battle through the engine and checks each digest and event list.
pub fn replay(records: &[LogRecord], dex: &Dex) -> Result<ReplayOutcome, StorageError> {
    let mut games = Vec::new();
    let mut current: Option<(u32, BattleState)> = None;
    let mut match_winner = None;

    for record in records {
        match record {
            LogRecord::Meta(meta) => match &meta.stage {
                MetaStage::BattleStart {
                    game,
                    battle_seed,
                    turn_cap,
                    teams,
                    initial_digest,
                    events,
                } => {
                    let a = team_species(dex, &teams[0])?;
                    let b = team_species(dex, &teams[1])?;
                    let (state, start_events) = start_battle(&a, &b, *battle_seed, *turn_cap)
                        .map_err(|e| StorageError::IncompleteLog(e.to_string()))?;
                    if state.digest() != *initial_digest || &start_events != events {
                        return Err(StorageError::DigestMismatch {
                            game: *game,
                            turn: 0,
                        });
                    }
                    current = Some((*game, state));
                }
                MetaStage::BattleEnd {
                    game,
                    winner,
                    reason,
                    ..
                } => {
                    let (g, state) = current.take().ok_or_else(|| {
                        StorageError::IncompleteLog(format!(
                            "battle end for game {game} without start"
                        ))
                    })?;
                    let (winner, reason) = if *reason == EndReason::Forfeit {
                        (*winner, *reason)
                    } else {
                        let outcome = state.outcome.ok_or_else(|| {
                            StorageError::IncompleteLog(format!(
                                "game {g} ended before its final turn"
                            ))
                        })?;
                        (outcome.winner, outcome.reason)
                    };
                    games.push(GameReplay {
                        game: g,
                        final_state: state,
                        winner,
                        reason,
                    });
                }
                MetaStage::MatchEnd { winner, .. } => match_winner = Some(*winner),
                MetaStage::MatchStart { .. } => {}
            },
            LogRecord::Events(ev) => {
                let (game, state) = current.as_mut().ok_or_else(|| {
                    StorageError::IncompleteLog(format!("turn {} outside a battle", ev.turn))
                })?;
                let mismatch = StorageError::DigestMismatch {
                    game: *game,
                    turn: ev.turn,
                };
                if state.digest() != ev.pre_digest {
                    return Err(mismatch);
                }
                let (next, events) = resolve_turn(state, ev.actions[0], ev.actions[1], dex.chart())
                    .map_err(|_| StorageError::DigestMismatch {
                        game: *game,
                        turn: ev.turn,
                    })?;
                if events != ev.events || next.digest() != ev.post_digest {
                    return Err(mismatch);
                }
                *state = next;
            }
            LogRecord::Decision(_) => {}
        }
    }

    if current.is_some() {
        return Err(StorageError::IncompleteLog(
            "battle has no end record".into(),
        ));
    }
    let Some(winner) = match_winner else {
        return Err(StorageError::IncompleteLog(
            "match has no end record".into(),
        ));
    };
    let Some(last) = games.last() else {
        if winner_needs_games(records) {
            return Err(StorageError::IncompleteLog("no battles recorded".into()));
        }
        return Ok(ReplayOutcome { games, winner });
    };
    let wins_a = games.iter().filter(|g| g.winner == SideId::A).count();
    let wins_b = games.len() - wins_a;
    let recomputed = if wins_a > wins_b {
        SideId::A
    } else {
        SideId::B
    };
    if wins_a == wins_b || recomputed != winner {
        return Err(StorageError::DigestMismatch {
            game: last.game,
            turn: last.final_state.turn_number,
        });
    }
    Ok(ReplayOutcome {
        games,
        winner: recomputed,
    })
}

/// A match decided without any battle can only be a team-selection forfeit.
fn winner_needs_games(records: &[LogRecord]) -> bool {
    !records.iter().any(|r| {
        matches!(
            r,
            LogRecord::Meta(MetaRecord {
                stage: MetaStage::MatchEnd {
                    reason: EndReason::Forfeit,
                    games: 0,
                    ..
                },
                ..
            })
        )
    })
}

pub fn replay_file(path: impl AsRef<Path>, dex: &Dex) -> Result<ReplayOutcome, StorageError> {
    replay(&read_log(path)?, dex)
}
