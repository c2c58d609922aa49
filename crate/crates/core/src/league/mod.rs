//! Single-elimination tournaments: configuration, match execution and standings.

mod bracket;
mod runner;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentKind, AgentProfile, GreedyAgent, RandomAgent, ScriptedPolicy};
use crate::dex::{Dex, DexError};
use crate::engine::{EngineError, DEFAULT_TURN_CAP};
use crate::gateway::{
    LlmAgent, MockBackend, MockScript, ProviderClient, ProviderKind, TokenBucket,
    DEFAULT_MAX_REPAIR_ATTEMPTS,
};
use crate::storage::StorageError;

pub use bracket::{
    placement_label, run_tournament, standings_table, Bracket, LogTarget, Standing,
    TournamentResult,
};
pub use runner::{run_match, MatchContext, MatchResult};

#[derive(Debug, Error)]
pub enum LeagueError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("could not build agent {agent}: {reason}")]
    Agent { agent: String, reason: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Dex(#[from] DexError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    /// Substitute the first pool indices or the first legal action.
    #[default]
    Fallback,
    /// The failing agent forfeits the match.
    Disqualify,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftMode {
    #[default]
    PerMatch,
    PerTournament,
}

/// Knobs that shape every match of a tournament.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSettings {
    pub best_of: u32,
    pub turn_cap: u32,
    pub failure_policy: FailurePolicy,
    pub team_size: usize,
}

impl Default for MatchSettings {
    fn default() -> Self {
        MatchSettings {
            best_of: 1,
            turn_cap: DEFAULT_TURN_CAP,
            failure_policy: FailurePolicy::Fallback,
            team_size: crate::engine::TEAM_SIZE,
        }
    }
}

fn default_best_of() -> u32 {
    1
}

fn default_turn_cap() -> u32 {
    DEFAULT_TURN_CAP
}

fn default_repairs() -> u32 {
    DEFAULT_MAX_REPAIR_ATTEMPTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentConfig {
    pub tournament_id: String,
    /// Seeding order is the order given here.
    pub entrants: Vec<AgentProfile>,
    #[serde(default)]
    pub dex_path: Option<PathBuf>,
    /// Species names replacing the dex's draft pool.
    #[serde(default)]
    pub pool: Option<Vec<String>>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_best_of")]
    pub best_of: u32,
    #[serde(default = "default_turn_cap")]
    pub turn_cap: u32,
    #[serde(default)]
    pub failure_policy: FailurePolicy,
    #[serde(default = "default_repairs")]
    pub max_repair_attempts: u32,
    #[serde(default)]
    pub draft: DraftMode,
    /// Adds each LLM agent's earlier actions to its battle prompts.
    #[serde(default)]
    pub include_history: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl TournamentConfig {
    pub fn new(
        tournament_id: impl Into<String>,
        entrants: Vec<AgentProfile>,
        master_seed: u64,
    ) -> Self {
        TournamentConfig {
            tournament_id: tournament_id.into(),
            entrants,
            dex_path: None,
            pool: None,
            master_seed,
            best_of: 1,
            turn_cap: DEFAULT_TURN_CAP,
            failure_policy: FailurePolicy::Fallback,
            max_repair_attempts: DEFAULT_MAX_REPAIR_ATTEMPTS,
            draft: DraftMode::PerMatch,
            include_history: false,
            output_dir: None,
            jobs: None,
        }
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LeagueError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LeagueError::Config(format!("{}: {e}", path.display())))?;
        let mut config: TournamentConfig = serde_json::from_str(&text)
            .map_err(|e| LeagueError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.dex_path.as_mut() {
            fix(p);
        }
        if let Some(p) = self.output_dir.as_mut() {
            fix(p);
        }
        for entrant in &mut self.entrants {
            if let AgentKind::Mock { script } = &mut entrant.kind {
                fix(script);
            }
        }
    }

    pub fn settings(&self) -> MatchSettings {
        MatchSettings {
            best_of: self.best_of,
            turn_cap: self.turn_cap,
            failure_policy: self.failure_policy,
            team_size: crate::engine::TEAM_SIZE,
        }
    }

    pub fn validate(&self) -> Result<(), LeagueError> {
        let n = self.entrants.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(LeagueError::Config(format!(
                "entrant count must be a power of two and at least 2, got {n}"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.entrants {
            if !seen.insert(e.agent_id.as_str()) {
                return Err(LeagueError::Config(format!(
                    "duplicate agent_id {}",
                    e.agent_id
                )));
            }
            if let AgentKind::Llm(cfg) = &e.kind {
                cfg.validate().map_err(|reason| LeagueError::Agent {
                    agent: e.agent_id.clone(),
                    reason,
                })?;
            }
        }
        if self.best_of == 0 || self.best_of.is_multiple_of(2) {
            return Err(LeagueError::Config("best_of must be odd".into()));
        }
        if self.turn_cap == 0 {
            return Err(LeagueError::Config("turn_cap must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(LeagueError::Config("jobs must be positive".into()));
        }
        Ok(())
    }

    /// The dex named by the config, narrowed to the pool override if any.
    pub fn load_dex(&self) -> Result<Dex, LeagueError> {
        let dex = match &self.dex_path {
            Some(p) => crate::dex::load_dex(p)?,
            None => Dex::bundled(),
        };
        match &self.pool {
            Some(names) => Ok(dex.with_pool(names)?),
            None => Ok(dex),
        }
    }
}

/// Shared per-provider token buckets.
#[derive(Debug, Default)]
pub struct RateLimiters {
    buckets: Mutex<HashMap<ProviderKind, Arc<TokenBucket>>>,
}

impl RateLimiters {
    fn bucket(&self, provider: ProviderKind, limit: crate::gateway::RateLimit) -> Arc<TokenBucket> {
        let mut map = self.buckets.lock().unwrap_or_else(|e| e.into_inner());
        Arc::clone(
            map.entry(provider)
                .or_insert_with(|| Arc::new(TokenBucket::new(limit))),
        )
    }
}

/// Options that apply when constructing LLM-backed agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentOptions {
    pub max_repair_attempts: u32,
    pub include_history: bool,
}

impl Default for AgentOptions {
    fn default() -> Self {
        AgentOptions {
            max_repair_attempts: DEFAULT_MAX_REPAIR_ATTEMPTS,
            include_history: false,
        }
    }
}

pub fn build_agent(
    profile: &AgentProfile,
    dex: &Arc<Dex>,
    options: AgentOptions,
    limiters: &RateLimiters,
) -> Result<Box<dyn Agent>, LeagueError> {
    let agent: Box<dyn Agent> = match &profile.kind {
        AgentKind::Scripted {
            policy: ScriptedPolicy::Greedy,
            ..
        } => Box::new(GreedyAgent::new(profile.clone(), Arc::clone(dex))),
        AgentKind::Scripted {
            policy: ScriptedPolicy::Random,
            seed,
        } => Box::new(RandomAgent::new(profile.clone(), *seed)),
        AgentKind::Llm(cfg) => {
            let mut client = ProviderClient::new(cfg.clone());
            if let Some(limit) = cfg.rate_limit {
                client = client.with_limiter(limiters.bucket(cfg.provider, limit));
            }
            Box::new(
                LlmAgent::new(
                    profile.clone(),
                    Box::new(client),
                    options.max_repair_attempts,
                )
                .with_history(options.include_history),
            )
        }
        AgentKind::Mock { script } => {
            let script = MockScript::load(script).map_err(|e| LeagueError::Agent {
                agent: profile.agent_id.clone(),
                reason: format!("mock script {}: {e}", script.display()),
            })?;
            Box::new(
                LlmAgent::new(
                    profile.clone(),
                    Box::new(MockBackend::new(script)),
                    options.max_repair_attempts,
                )
                .with_history(options.include_history),
            )
        }
    };
    Ok(agent)
}
