use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_battle_prompt, build_team_prompt, parse_action_response, parse_team_response,
    repair_prompt, ParseError, ParseOutcome, ProviderClient, RawExchange, SYSTEM_PREAMBLE,
    TEAM_PROMPT_HEAD,
};
use crate::agents::{Agent, AgentDecision, AgentError, AgentProfile, Decided};
use crate::dex::Species;
use crate::engine::{Action, BattleView};

/// Anything that turns a (system, user) prompt pair into a recorded exchange.
pub trait ChatBackend: Send {
    fn chat(&mut self, system: &str, prompt: &str) -> RawExchange;
}

impl ChatBackend for ProviderClient {
    fn chat(&mut self, system: &str, prompt: &str) -> RawExchange {
        self.complete(system, prompt)
    }
}

/// Canned replies for offline runs. Each list is replayed in order and cycles.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub team: Vec<String>,
    #[serde(default)]
    pub battle: Vec<String>,
}

impl MockScript {
    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    script: MockScript,
    team_cursor: usize,
    battle_cursor: usize,
    calls: usize,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        MockBackend {
            script,
            team_cursor: 0,
            battle_cursor: 0,
            calls: 0,
        }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

fn next_cycled(list: &[String], cursor: &mut usize) -> String {
    if list.is_empty() {
        return String::new();
    }
    let reply = list[*cursor % list.len()].clone();
    *cursor += 1;
    reply
}

impl ChatBackend for MockBackend {
    fn chat(&mut self, system: &str, prompt: &str) -> RawExchange {
        self.calls += 1;
        let raw_response = if prompt.starts_with(TEAM_PROMPT_HEAD) {
            next_cycled(&self.script.team, &mut self.team_cursor)
        } else {
            next_cycled(&self.script.battle, &mut self.battle_cursor)
        };
        RawExchange {
            system: system.to_string(),
            prompt: prompt.to_string(),
            raw_response,
            latency_ms: 0,
            attempt: 1,
            repair_round: 0,
            parse_outcome: ParseOutcome::NotParsed,
            error: None,
        }
    }
}

/// An agent whose decisions come from a chat model, with bounded self-repair.
pub struct LlmAgent {
    profile: AgentProfile,
    backend: Box<dyn ChatBackend>,
    max_repair_attempts: u32,
    include_history: bool,
    history: Vec<String>,
}

impl LlmAgent {
    pub fn new(
        profile: AgentProfile,
        backend: Box<dyn ChatBackend>,
        max_repair_attempts: u32,
    ) -> Self {
        LlmAgent {
            profile,
            backend,
            max_repair_attempts,
            include_history: false,
            history: Vec::new(),
        }
    }

    /// Adds this agent's earlier actions in the current battle to each battle prompt.
    pub fn with_history(mut self, include: bool) -> Self {
        self.include_history = include;
        self
    }

    fn run<F>(
        &mut self,
        prompt: &str,
        mut parse: F,
    ) -> Result<Decided, (String, Vec<RawExchange>, bool)>
    where
        F: FnMut(&str) -> Result<AgentDecision, ParseError>,
    {
        let mut exchanges = Vec::new();
        let mut current = prompt.to_string();
        for round in 0..=self.max_repair_attempts {
            let mut exchange = self.backend.chat(SYSTEM_PREAMBLE, &current);
            exchange.repair_round = round;
            if let Some(err) = exchange.error.clone() {
                exchanges.push(exchange);
                return Err((err.to_string(), exchanges, true));
            }
            match parse(&exchange.raw_response) {
                Ok(decision) => {
                    exchange.parse_outcome = ParseOutcome::Success;
                    exchanges.push(exchange);
                    return Ok(Decided {
                        decision,
                        exchanges,
                    });
                }
                Err(e) => {
                    let message = e.to_string();
                    tracing::debug!(agent = %self.profile.agent_id, round, %message, "unusable response");
                    exchange.parse_outcome = ParseOutcome::Failed {
                        error: message.clone(),
                    };
                    exchanges.push(exchange);
                    current = repair_prompt(prompt, &message);
                }
            }
        }
        let last = match exchanges.last().map(|e| &e.parse_outcome) {
            Some(ParseOutcome::Failed { error }) => error.clone(),
            _ => "no usable response".to_string(),
        };
        Err((last, exchanges, false))
    }

    fn history_block(&self) -> String {
        let mut block = String::from("Your previous actions this battle:\n");
        for line in &self.history {
            block.push_str("- ");
            block.push_str(line);
            block.push('\n');
        }
        block
    }
}

impl Agent for LlmAgent {
    fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn begin_match(&mut self, _match_seed: u64) {
        self.history.clear();
    }

    fn select_team(&mut self, pool: &[&Species], team_size: usize) -> Result<Decided, AgentError> {
        let prompt = build_team_prompt(pool, team_size);
        let pool_size = pool.len();
        self.run(&prompt, |raw| {
            parse_team_response(raw, pool_size, team_size)
        })
        .map_err(|(reason, exchanges, provider)| {
            if provider {
                AgentError::Provider { reason, exchanges }
            } else {
                AgentError::InvalidTeam { reason, exchanges }
            }
        })
    }

    fn choose_action(
        &mut self,
        view: &BattleView,
        legal: &[Action],
    ) -> Result<Decided, AgentError> {
        let mut prompt = build_battle_prompt(view, legal);
        if self.include_history && !self.history.is_empty() {
            let closing = "What do you do?";
            if let Some(pos) = prompt.find(closing) {
                prompt.insert_str(pos, &self.history_block());
            }
        }
        let result = self
            .run(&prompt, |raw| parse_action_response(raw, legal))
            .map_err(|(reason, exchanges, provider)| {
                if provider {
                    AgentError::Provider { reason, exchanges }
                } else {
                    AgentError::InvalidAction { reason, exchanges }
                }
            });
        if let Ok(decided) = &result {
            if let Some(action) = decided.decision.as_action() {
                self.history.push(format!("Turn {}: {action}", view.turn));
            }
        }
        result
    }
}
