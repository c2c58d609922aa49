//! Bridge between agents and language-model providers.
//!
//! Prompts render a [`BattleView`](crate::engine::BattleView) or draft pool into text,
//! responses are parsed back into decisions, and [`LlmAgent`] runs the bounded repair
//! loop around a [`ChatBackend`].

mod agent;
mod client;
mod config;
mod parse;
mod prompt;
mod ratelimit;

pub use agent::{ChatBackend, LlmAgent, MockBackend, MockScript};
pub use client::{
    complete, CompletionError, HttpRequest, HttpResponse, HttpTransport, ParseOutcome,
    ProviderClient, RawExchange, TransportError, UreqTransport,
};
pub use config::{ProviderConfig, ProviderKind, RateLimit};
pub use parse::{extract_json_object, parse_action_response, parse_team_response, ParseError};
pub use prompt::{
    build_battle_prompt, build_team_prompt, repair_prompt, BATTLE_PROMPT_HEAD, SYSTEM_PREAMBLE,
    TEAM_PROMPT_HEAD,
};
pub use ratelimit::TokenBucket;

/// Re-prompts allowed per decision after the first malformed answer.
pub const DEFAULT_MAX_REPAIR_ATTEMPTS: u32 = 3;
