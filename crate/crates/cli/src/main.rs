use std::io::IsTerminal;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use pokeleague::agents::{AgentProfile, ScriptedPolicy};
use pokeleague::analytics::{build_report, load_logs};
use pokeleague::dex::{load_dex, Dex, DexError};
use pokeleague::digest::derive_seed;
use pokeleague::engine::{Event, DEFAULT_TURN_CAP};
use pokeleague::league::{
    build_agent, run_match, run_tournament, standings_table, AgentOptions, LeagueError, LogTarget,
    MatchContext, MatchSettings, RateLimiters, TournamentConfig,
};
use pokeleague::storage::{replay_file, JsonlWriter, LogRecord, LogSink, MemoryLog, StorageError};
use tracing_subscriber::EnvFilter;

#[derive(Parser, Debug)]
#[command(
    name = "pokeleague",
    version,
    about = "Seeded battle simulations and single-elimination agent tournaments"
)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug, -vvv trace)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Game data commands
    Dex {
        #[command(subcommand)]
        command: DexCommand,
    },
    /// Run seeded matches between two scripted agents
    Simulate(SimulateArgs),
    /// Run a tournament described by a JSON config file
    Tournament(TournamentArgs),
    /// Re-run a match log through the engine and compare every turn
    Replay(ReplayArgs),
    /// Compute metrics over a directory of match logs
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum DexCommand {
    /// Check a dex file; the bundled dex is used when no path is given
    Validate { path: Option<PathBuf> },
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// greedy, random, or random:SEED
    #[arg(long, default_value = "greedy")]
    agent_a: String,
    /// greedy, random, or random:SEED
    #[arg(long, default_value = "random")]
    agent_b: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long, default_value_t = DEFAULT_TURN_CAP)]
    turn_cap: u32,
    #[arg(long)]
    dex: Option<PathBuf>,
    /// Write one JSONL log per match under this directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print every turn's events
    #[arg(long)]
    trace: bool,
}

#[derive(Args, Debug)]
struct TournamentArgs {
    config: PathBuf,
    /// Overrides the config's output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum matches run concurrently
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    log: PathBuf,
    #[arg(long)]
    dex: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    log_dir: PathBuf,
    #[arg(long)]
    dex: Option<PathBuf>,
    /// Where report.json, report.txt and pick_frequency.csv go; defaults to the log directory
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit code 1: the input was understood but the check or run failed.
/// Exit code 2: bad usage, configuration or unreadable input.
enum Failure {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn domain(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Domain(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(level));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();

    let result = match cli.command {
        Command::Dex {
            command: DexCommand::Validate { path },
        } => cmd_dex_validate(path.as_deref()),
        Command::Simulate(args) => cmd_simulate(&args, cli.verbose > 0),
        Command::Tournament(args) => cmd_tournament(&args),
        Command::Replay(args) => cmd_replay(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn open_dex(path: Option<&Path>) -> Result<Dex, Failure> {
    match path {
        None => Ok(Dex::bundled()),
        Some(p) => load_dex(p).map_err(|e| match e {
            DexError::Invalid(_) => domain(e),
            other => usage(anyhow!(other).context(format!("loading {}", p.display()))),
        }),
    }
}

fn cmd_dex_validate(path: Option<&Path>) -> CmdResult {
    let label = path.map_or_else(|| "bundled dex".to_string(), |p| p.display().to_string());
    match path.map_or_else(|| Ok(Dex::bundled()), load_dex) {
        Ok(dex) => {
            println!(
                "{label}: ok ({} species, {} moves, pool of {}, hash {:016x})",
                dex.all_species().len(),
                dex.moves().count(),
                dex.pool_len(),
                dex.content_hash()
            );
            Ok(())
        }
        Err(DexError::Invalid(issues)) => {
            println!("{label}: {} problem(s)", issues.len());
            for issue in &issues {
                println!("  {issue}");
            }
            Err(domain(anyhow!("{label} failed validation")))
        }
        Err(e) => Err(usage(anyhow!(e).context(label))),
    }
}

fn parse_agent(spec: &str, id: &str) -> Result<AgentProfile, Failure> {
    let (name, seed) = match spec.split_once(':') {
        Some((n, s)) => (
            n,
            s.parse::<u64>()
                .map_err(|_| usage(anyhow!("bad seed in agent spec {spec:?}")))?,
        ),
        None => (spec, 0),
    };
    let policy = match name {
        "greedy" => ScriptedPolicy::Greedy,
        "random" => ScriptedPolicy::Random,
        _ => {
            return Err(usage(anyhow!(
                "unknown agent {spec:?}; expected greedy or random[:SEED]"
            )))
        }
    };
    Ok(AgentProfile {
        agent_id: id.to_string(),
        display_name: Some(format!("{spec} ({id})")),
        kind: pokeleague::agents::AgentKind::Scripted { policy, seed },
    })
}

fn print_trace(match_id: &str, records: &[LogRecord]) {
    for record in records {
        if let LogRecord::Events(ev) = record {
            println!(
                "[{match_id}] turn {}: A {} | B {}",
                ev.turn, ev.actions[0], ev.actions[1]
            );
            for event in &ev.events {
                println!("    {}", describe(event));
            }
        }
    }
}

fn describe(event: &Event) -> String {
    serde_json::to_string(event).unwrap_or_else(|_| format!("{event:?}"))
}

fn cmd_simulate(args: &SimulateArgs, verbose: bool) -> CmdResult {
    if args.count == 0 {
        return Err(usage(anyhow!("--count must be at least 1")));
    }
    if args.turn_cap == 0 {
        return Err(usage(anyhow!("--turn-cap must be at least 1")));
    }
    let dex = Arc::new(open_dex(args.dex.as_deref())?);
    let profiles = [
        parse_agent(&args.agent_a, "a")?,
        parse_agent(&args.agent_b, "b")?,
    ];
    let settings = MatchSettings {
        turn_cap: args.turn_cap,
        ..MatchSettings::default()
    };
    let limiters = RateLimiters::default();
    let mut wins = [0u32; 2];
    let mut turns = 0u64;

    for i in 0..args.count {
        let match_id = format!("sim-{i}");
        let seed = derive_seed(args.seed, &match_id);
        let mut a =
            build_agent(&profiles[0], &dex, AgentOptions::default(), &limiters).map_err(usage)?;
        let mut b =
            build_agent(&profiles[1], &dex, AgentOptions::default(), &limiters).map_err(usage)?;
        let ctx = MatchContext {
            tournament_id: "simulate",
            match_id: &match_id,
            seed,
            dex: &dex,
            settings,
            preset_teams: [None, None],
        };
        let mut memory = MemoryLog::default();
        let result = run_match(&ctx, [a.as_mut(), b.as_mut()], &mut memory).map_err(domain)?;
        if let Some(dir) = &args.out {
            let path = dir.join("simulate").join(format!("{match_id}.jsonl"));
            let mut writer = JsonlWriter::create(&path).map_err(usage)?;
            for record in &memory.records {
                writer.append(record).map_err(domain)?;
            }
            writer.close().map_err(domain)?;
        }
        if args.trace || (verbose && args.count == 1) {
            print_trace(&match_id, &memory.records);
        }
        wins[result.winner.index()] += 1;
        turns += u64::from(result.turns);
    }

    println!("matches: {}", args.count);
    println!("{} wins: {}", args.agent_a, wins[0]);
    println!("{} wins: {}", args.agent_b, wins[1]);
    println!("mean turns: {:.2}", turns as f64 / f64::from(args.count));
    Ok(())
}

fn league_failure(e: LeagueError) -> Failure {
    match e {
        LeagueError::Config(_) | LeagueError::Agent { .. } | LeagueError::Dex(_) => usage(e),
        other => domain(other),
    }
}

fn cmd_tournament(args: &TournamentArgs) -> CmdResult {
    let mut config = TournamentConfig::load(&args.config).map_err(usage)?;
    if let Some(jobs) = args.jobs {
        config.jobs = Some(jobs);
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    config.validate().map_err(league_failure)?;
    let dex = Arc::new(config.load_dex().map_err(league_failure)?);
    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs"));
    let result = run_tournament(&config, dex, LogTarget::Directory(out_dir.clone()))
        .map_err(league_failure)?;

    let run_dir = out_dir.join(&config.tournament_id);
    let table = standings_table(&result);
    let bracket = serde_json::to_string_pretty(&result)
        .context("serializing bracket")
        .map_err(domain)?;
    std::fs::write(run_dir.join("bracket.json"), bracket)
        .context("writing bracket.json")
        .map_err(domain)?;
    std::fs::write(run_dir.join("standings.txt"), &table)
        .context("writing standings.txt")
        .map_err(domain)?;

    println!(
        "tournament {} (seeding: {}, master seed {})",
        result.tournament_id, result.seeding, result.master_seed
    );
    for (r, round) in result.bracket.rounds.iter().enumerate() {
        for m in round {
            println!(
                "  round {r} {}: {} vs {} -> {} ({:?}, {} turns)",
                m.match_id, m.agents[0], m.agents[1], m.winner_id, m.reason, m.turns
            );
        }
    }
    println!();
    print!("{table}");
    println!("logs: {}", run_dir.display());
    Ok(())
}

fn cmd_replay(args: &ReplayArgs) -> CmdResult {
    let dex = open_dex(args.dex.as_deref())?;
    if !args.log.is_file() {
        return Err(usage(anyhow!("{} is not a file", args.log.display())));
    }
    match replay_file(&args.log, &dex) {
        Ok(outcome) => {
            let turns: u32 = outcome
                .games
                .iter()
                .map(|g| g.final_state.turns_resolved())
                .sum();
            println!(
                "replay ok: {} game(s), {turns} turns, winner side {:?}",
                outcome.games.len(),
                outcome.winner
            );
            Ok(())
        }
        Err(StorageError::DigestMismatch { game, turn }) => {
            println!("replay diverged: game {game}, turn {turn}");
            Err(domain(anyhow!(
                "digest mismatch at game {game}, turn {turn}"
            )))
        }
        Err(e @ StorageError::Io(_)) => Err(usage(e)),
        Err(e) => Err(domain(e)),
    }
}

fn cmd_report(args: &ReportArgs) -> CmdResult {
    let dex = open_dex(args.dex.as_deref())?;
    if !args.log_dir.is_dir() {
        return Err(usage(anyhow!(
            "{} is not a directory",
            args.log_dir.display()
        )));
    }
    let logs = load_logs(&args.log_dir).map_err(domain)?;
    let report = build_report(&logs, &dex).map_err(domain)?;
    let out = args.out.clone().unwrap_or_else(|| args.log_dir.clone());
    std::fs::create_dir_all(&out).map_err(usage)?;
    let json = serde_json::to_string_pretty(&report)
        .context("serializing report")
        .map_err(domain)?;
    let table = report.to_text_table();
    std::fs::write(out.join("report.json"), json).map_err(domain)?;
    std::fs::write(out.join("report.txt"), &table).map_err(domain)?;
    std::fs::write(
        out.join("pick_frequency.csv"),
        report.pick_frequency.to_csv(),
    )
    .map_err(domain)?;
    println!("{} match log(s)", report.matches);
    print!("{table}");
    println!("most picked:");
    for (name, count) in report.pick_frequency.ranked().into_iter().take(10) {
        println!("  {name}: {count}");
    }
    println!("written to {}", out.display());
    Ok(())
}
