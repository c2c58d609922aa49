//! Battle engine, agent protocol and single-elimination league harness for
//! studying how language-model agents draft teams and fight turn-based battles.
//!
//! The crate is organised bottom-up:
//!
//! - [`dex`]: static species, move and type-chart data.
//! - [`engine`]: the deterministic battle state machine.
//! - [`agents`]: the decision interface and scripted baselines.
//! - [`gateway`]: prompt rendering, response parsing and provider clients for LLM agents.
//! - [`league`]: match and bracket orchestration.
//! - [`storage`]: JSONL decision/event logs and replay.
//! - [`analytics`]: metrics computed from logs.

pub mod agents;
pub mod analytics;
pub mod dex;
pub mod digest;
pub mod engine;
pub mod gateway;
pub mod league;
pub mod storage;
