//! The decision interface every competitor implements, plus scripted baselines.

mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dex::Species;
use crate::engine::{Action, BattleView};
use crate::gateway::{ProviderConfig, RawExchange};

pub use scripted::{best_switch, expected_damage, GreedyAgent, RandomAgent};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Decision {
    Action { action: Action },
    TeamPick { indices: Vec<usize> },
}

/// A choice paired with the agent's stated rationale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub decision: Decision,
    pub reasoning: String,
}

impl AgentDecision {
    pub fn action(action: Action, reasoning: impl Into<String>) -> Self {
        AgentDecision {
            decision: Decision::Action { action },
            reasoning: reasoning.into(),
        }
    }

    pub fn team(indices: Vec<usize>, reasoning: impl Into<String>) -> Self {
        AgentDecision {
            decision: Decision::TeamPick { indices },
            reasoning: reasoning.into(),
        }
    }

    pub fn as_action(&self) -> Option<Action> {
        match self.decision {
            Decision::Action { action } => Some(action),
            Decision::TeamPick { .. } => None,
        }
    }

    pub fn as_team(&self) -> Option<&[usize]> {
        match &self.decision {
            Decision::TeamPick { indices } => Some(indices),
            Decision::Action { .. } => None,
        }
    }
}

/// A decision together with every provider exchange it took to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decided {
    pub decision: AgentDecision,
    pub exchanges: Vec<RawExchange>,
}

impl From<AgentDecision> for Decided {
    fn from(decision: AgentDecision) -> Self {
        Decided {
            decision,
            exchanges: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("invalid team after repair attempts: {reason}")]
    InvalidTeam {
        reason: String,
        exchanges: Vec<RawExchange>,
    },
    #[error("invalid action after repair attempts: {reason}")]
    InvalidAction {
        reason: String,
        exchanges: Vec<RawExchange>,
    },
    #[error("provider failure: {reason}")]
    Provider {
        reason: String,
        exchanges: Vec<RawExchange>,
    },
}

impl AgentError {
    pub fn exchanges(&self) -> &[RawExchange] {
        match self {
            AgentError::InvalidTeam { exchanges, .. }
            | AgentError::InvalidAction { exchanges, .. }
            | AgentError::Provider { exchanges, .. } => exchanges,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptedPolicy {
    Greedy,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentKind {
    Scripted {
        policy: ScriptedPolicy,
        #[serde(default)]
        seed: u64,
    },
    Llm(ProviderConfig),
    /// Canned responses read from a script file; never touches the network.
    Mock {
        script: std::path::PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub agent_id: String,
    #[serde(default)]
    pub display_name: Option<String>,
    pub kind: AgentKind,
}

impl AgentProfile {
    pub fn scripted(agent_id: impl Into<String>, policy: ScriptedPolicy, seed: u64) -> Self {
        AgentProfile {
            agent_id: agent_id.into(),
            display_name: None,
            kind: AgentKind::Scripted { policy, seed },
        }
    }

    pub fn name(&self) -> &str {
        self.display_name.as_deref().unwrap_or(&self.agent_id)
    }
}

/// A competitor. One instance plays one battle at a time.
pub trait Agent: Send {
    fn profile(&self) -> &AgentProfile;

    /// Called before each match with that match's derived seed.
    fn begin_match(&mut self, _match_seed: u64) {}

    fn select_team(&mut self, pool: &[&Species], team_size: usize) -> Result<Decided, AgentError>;

    /// Must return a member of `legal`.
    fn choose_action(&mut self, view: &BattleView, legal: &[Action])
        -> Result<Decided, AgentError>;
}
