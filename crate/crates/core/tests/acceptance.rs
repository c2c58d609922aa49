//! Acceptance checks. Runs without the libtest harness and prints one line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use pokeleague::agents::{AgentDecision, AgentKind, AgentProfile, ScriptedPolicy};
use pokeleague::analytics::{build_report, load_logs, move_efficiency, pick_frequency, MatchLog};
use pokeleague::dex::{Accuracy, Dex, MoveCategory, MoveDef, Multiplier, TypeId};
use pokeleague::digest::derive_seed;
use pokeleague::engine::{
    compute_damage, compute_stats, legal_actions, resolve_turn, start_battle, view_for, Action,
    BattleState, DamageContext, Event, SideId, Stats,
};
use pokeleague::gateway::{parse_action_response, parse_team_response};
use pokeleague::league::{
    build_agent, run_match, run_tournament, standings_table, AgentOptions, LogTarget, MatchContext,
    MatchSettings, RateLimiters, TournamentConfig,
};
use pokeleague::storage::{replay, DecisionRecord, LogRecord, MemoryLog, Phase};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// Rows: attacking type; columns: defending type, both in TypeId::ALL order.
// 0 immune, h half, 1 neutral, 2 double.
const CHART: [&str; 18] = [
    "111111111111h011h1",
    "1hh122111112h1h121",
    "12h1h111211121h111",
    "112hh111021111h111",
    "1h21h11h2h1h21h1h1",
    "1hh12h1122111121h1",
    "2111121h1hhh20122h",
    "1111211hh111hh1102",
    "1212h112101h211121",
    "111h21211112h111h1",
    "1111112211h11110h1",
    "1h1121hh1h211h12hh",
    "121112h1h2121111h1",
    "011111111121121h11",
    "1111111111111121h0",
    "111111h11121121h1h",
    "1hhh121111112111h2",
    "1h11112h11111122h1",
];

fn type_chart() -> Result<String, String> {
    let dex = Dex::bundled();
    let chart = dex.chart();
    let mut checked = 0;
    for (a, row) in TypeId::ALL.iter().zip(CHART) {
        for (d, code) in TypeId::ALL.iter().zip(row.chars()) {
            let want = match code {
                '0' => Multiplier::IMMUNE,
                'h' => Multiplier::HALF,
                '1' => Multiplier::NEUTRAL,
                '2' => Multiplier::DOUBLE,
                other => return Err(format!("bad oracle code {other}")),
            };
            let got = chart.cell(*a, *d);
            ensure(got == want, || {
                format!("{a} -> {d}: got {}, want {}", got.as_f64(), want.as_f64())
            })?;
            checked += 1;
        }
    }
    let spot = [
        (TypeId::Electric, vec![TypeId::Water, TypeId::Flying], 4.0),
        (TypeId::Normal, vec![TypeId::Ghost], 0.0),
        (TypeId::Electric, vec![TypeId::Ground], 0.0),
    ];
    for (a, d, want) in spot {
        let got = chart.multiplier(a, &d).as_f64();
        ensure(got == want, || {
            format!("{a} -> {d:?}: got {got}, want {want}")
        })?;
    }
    Ok(format!("{checked} cells and 3 spot checks match"))
}

fn damage_example() -> Result<String, String> {
    let dex = Dex::bundled();
    let base = compute_stats(dex.species("Mewtwo").ok_or("Mewtwo missing")?);
    let mut attacker = base.clone();
    attacker.types = vec![TypeId::Electric];
    attacker.stats = Stats {
        atk: 120,
        def: 80,
        spa: 120,
        spd: 80,
        spe: 100,
    };
    let mut defender = base;
    defender.types = vec![TypeId::Water];
    defender.stats = Stats {
        atk: 80,
        def: 80,
        spa: 80,
        spd: 80,
        spe: 100,
    };
    let mv = MoveDef {
        name: "Worked Example".into(),
        move_type: TypeId::Electric,
        category: MoveCategory::Physical,
        power: 95,
        accuracy: Accuracy::Percent(100),
        priority: 0,
        effect: None,
    };
    // floor(floor(22 * 95 * 120 / 80) / 50) + 2 = 64; x1.5 STAB = 96; x2 type = 192.
    let oracle = ((22u64 * 95 * 120 / 80) / 50 + 2) * 3 / 2 * 2;
    let out = compute_damage(
        &attacker,
        &defender,
        &mv,
        DamageContext::max_roll(None),
        dex.chart(),
    )
    .map_err(|e| e.to_string())?;
    ensure(oracle == 192, || format!("oracle arithmetic gave {oracle}"))?;
    ensure(out.damage == 192, || format!("engine gave {}", out.damage))?;
    Ok("damage 192".into())
}

fn scripted_pair(match_seed: u64) -> [AgentProfile; 2] {
    [
        AgentProfile::scripted("greedy", ScriptedPolicy::Greedy, 0),
        AgentProfile::scripted("random", ScriptedPolicy::Random, match_seed),
    ]
}

fn play(
    dex: &Arc<Dex>,
    profiles: &[AgentProfile; 2],
    match_id: &str,
    seed: u64,
    preset: [Option<AgentDecision>; 2],
) -> Result<(pokeleague::league::MatchResult, Vec<LogRecord>), String> {
    let limiters = RateLimiters::default();
    let mut a = build_agent(&profiles[0], dex, AgentOptions::default(), &limiters)
        .map_err(|e| e.to_string())?;
    let mut b = build_agent(&profiles[1], dex, AgentOptions::default(), &limiters)
        .map_err(|e| e.to_string())?;
    let ctx = MatchContext {
        tournament_id: "acceptance",
        match_id,
        seed,
        dex,
        settings: MatchSettings::default(),
        preset_teams: preset,
    };
    let mut log = MemoryLog::default();
    let result = run_match(&ctx, [a.as_mut(), b.as_mut()], &mut log).map_err(|e| e.to_string())?;
    Ok((result, log.records))
}

fn determinism_and_replay() -> Result<String, String> {
    let dex = Arc::new(Dex::bundled());
    let started = Instant::now();
    let mut turns = 0u64;
    for seed in 1..=1000u64 {
        let id = format!("seed-{seed}");
        let profiles = scripted_pair(seed);
        let (first, records) = play(&dex, &profiles, &id, seed, [None, None])?;
        let replayed = replay(&records, &dex).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(replayed.winner == first.winner, || {
            format!("seed {seed}: replay winner differs")
        })?;
        let (second, _) = play(&dex, &profiles, &id, seed, [None, None])?;
        let a = serde_json::to_string(&first).map_err(|e| e.to_string())?;
        let b = serde_json::to_string(&second).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("seed {seed}: re-run result differs"))?;
        turns += u64::from(first.turns);
    }
    let secs = started.elapsed().as_secs_f64();
    Ok(format!(
        "1000 matches, {turns} turns replayed, re-runs identical ({secs:.1}s, target 60s)"
    ))
}

fn bracket_shape() -> Result<String, String> {
    let entrants = (0..8)
        .map(|i| {
            let policy = if i % 2 == 0 {
                ScriptedPolicy::Greedy
            } else {
                ScriptedPolicy::Random
            };
            AgentProfile::scripted(format!("entrant-{i}"), policy, i)
        })
        .collect();
    let config = TournamentConfig::new("acceptance-bracket", entrants, 42);
    let result = run_tournament(&config, Arc::new(Dex::bundled()), LogTarget::Memory)
        .map_err(|e| e.to_string())?;
    let per_round: Vec<usize> = result.bracket.rounds.iter().map(Vec::len).collect();
    ensure(per_round == [4, 2, 1], || {
        format!("matches per round {per_round:?}")
    })?;
    let champions: Vec<_> = result
        .standings
        .iter()
        .filter(|s| s.placement == "Champion")
        .collect();
    ensure(champions.len() == 1, || {
        format!("{} champions", champions.len())
    })?;
    ensure(champions[0].record() == "3-0", || {
        format!("champion record {}", champions[0].record())
    })?;
    ensure(champions[0].agent_id == result.champion, || {
        "champion field disagrees with standings".into()
    })?;
    let quarter: Vec<_> = result
        .standings
        .iter()
        .filter(|s| s.exit_round == Some(0))
        .collect();
    ensure(quarter.len() == 4, || {
        format!("{} first-round losers", quarter.len())
    })?;
    for s in &quarter {
        ensure(s.record() == "0-1", || {
            format!("{} has record {}", s.agent_id, s.record())
        })?;
    }
    Ok(format!(
        "7 matches, {} 3-0 Champion, 4 losers at 0-1",
        result.champion
    ))
}

const SAMPLE_TEAM: &str = "{\n  \"team\": [0, 3, 5, 8, 11, 14],\n  \"reasoning\": \"I chose Gyarados for \n  Water/Flying coverage, Magnezone for Electric/Steel, \n  and Gliscor to counter Electric threats. \n  The team balances physical and special attacks,\n  while covering common types like Fire,\n  Water, and Ground.\"\n}";
const SAMPLE_ACTION: &str = "{\n  \"action\": \n  { \"type\": \"attack\", \"move_index\": 1 },\n  \"reasoning\": \n  \"Gyarados is Water/Flying-type \n  and weak to Electric. \n  Jolteon\u{2019}s Thunderbolt \n  should be super effective. \n  Since Jolteon \n  outspeeds most threats, \n  I\u{2019}ll go for an \n  attack rather than switch.\"\n}";

fn protocol_golden() -> Result<String, String> {
    let wrappers: [fn(&str) -> String; 3] = [
        |s| s.to_string(),
        |s| format!("```json\n{s}\n```"),
        |s| format!("Here is my choice.\n{s}\nGood luck!"),
    ];
    let legal: Vec<Action> = (0..4)
        .map(|i| Action::Attack { move_index: i })
        .chain((1..6).map(|j| Action::Switch { team_index: j }))
        .collect();
    for wrap in wrappers {
        let team = parse_team_response(&wrap(SAMPLE_TEAM), 30, 6).map_err(|e| e.to_string())?;
        ensure(team.as_team() == Some(&[0, 3, 5, 8, 11, 14][..]), || {
            format!("team {:?}", team.as_team())
        })?;
        let action =
            parse_action_response(&wrap(SAMPLE_ACTION), &legal).map_err(|e| e.to_string())?;
        ensure(
            action.as_action() == Some(Action::Attack { move_index: 1 }),
            || format!("action {:?}", action.as_action()),
        )?;
    }
    Ok("team {0,3,5,8,11,14} and Attack{1}, bare, fenced and prose-wrapped".into())
}

fn metric_fixtures() -> Result<String, String> {
    let dex = Arc::new(Dex::bundled());
    let sp = |n: &str| dex.species(n).ok_or_else(|| format!("{n} missing"));
    let filler = ["Swampert", "Metagross", "Gengar", "Blissey", "Skarmory"];
    let mut team_a = vec![sp("Jolteon")?];
    let mut team_b = vec![sp("Gyarados")?];
    for n in filler {
        team_a.push(sp(n)?);
        team_b.push(sp(n)?);
    }
    let (state, _) = start_battle(&team_a, &team_b, 1, 100).map_err(|e| e.to_string())?;
    let view = view_for(&state, SideId::A);
    let legal = legal_actions(&state, SideId::A).map_err(|e| e.to_string())?;
    // Jolteon: Shadow Ball (0), Thunderbolt (1). Thunderbolt is 4x into Water/Flying.
    let decisions: Vec<DecisionRecord> = (0..10)
        .map(|i| DecisionRecord {
            match_id: "fixture".into(),
            game: 0,
            turn: i + 1,
            agent_id: "fixture-agent".into(),
            side: SideId::A,
            phase: Phase::Battle,
            view: Some(view.clone()),
            legal: legal.clone(),
            decision: AgentDecision::action(
                Action::Attack {
                    move_index: if i < 7 { 1 } else { 0 },
                },
                "",
            ),
            exchanges: Vec::new(),
            fallback_used: false,
            error: None,
            started_at_ms: 0,
            finished_at_ms: 0,
        })
        .collect();
    let eff = move_efficiency(&decisions, &dex).map_err(|e| e.to_string())?;
    ensure(eff.attack_decisions == 10, || {
        format!("{} attack decisions", eff.attack_decisions)
    })?;
    ensure(eff.effective_move_rate == 0.7, || {
        format!("effective_move_rate {}", eff.effective_move_rate)
    })?;

    let mut greedy_decisions = Vec::new();
    for seed in 1..=20u64 {
        let (_, records) = play(
            &dex,
            &scripted_pair(seed),
            &format!("g-{seed}"),
            seed,
            [None, None],
        )?;
        greedy_decisions.extend(
            MatchLog::new(records)
                .decisions()
                .filter(|d| d.agent_id == "greedy")
                .cloned()
                .collect::<Vec<_>>(),
        );
    }
    let greedy = move_efficiency(&greedy_decisions, &dex).map_err(|e| e.to_string())?;
    ensure(greedy.optimal_move_rate == 1.0, || {
        format!("greedy optimal_move_rate {}", greedy.optimal_move_rate)
    })?;

    let teams: Vec<Vec<&str>> = vec![
        vec![
            "Mewtwo",
            "Metagross",
            "Salamence",
            "Swampert",
            "Gengar",
            "Zapdos",
        ],
        vec![
            "Kyogre",
            "Groudon",
            "Rayquaza",
            "Lugia",
            "Magnezone",
            "Ho-Oh",
        ],
        vec![
            "Swampert",
            "Zapdos",
            "Metagross",
            "Blissey",
            "Gengar",
            "Salamence",
        ],
        vec![
            "Mewtwo",
            "Dragonite",
            "Gengar",
            "Zapdos",
            "Tyranitar",
            "Swampert",
        ],
        vec![
            "Tyranitar",
            "Swampert",
            "Zapdos",
            "Blaziken",
            "Metagross",
            "Celebi",
        ],
        vec![
            "Mewtwo",
            "Tyranitar",
            "Swampert",
            "Skarmory",
            "Gengar",
            "Blaziken",
        ],
        vec![
            "Metagross",
            "Swampert",
            "Salamence",
            "Raikou",
            "Skarmory",
            "Blissey",
        ],
        vec![
            "Swampert",
            "Venusaur",
            "Dragonite",
            "Metagross",
            "Jolteon",
            "Gengar",
        ],
    ];
    let picks = pick_frequency(&teams);
    // Swampert is in seven of the eight teams; Metagross in five.
    ensure(picks.count("Metagross") == 5, || {
        format!("Metagross {}", picks.count("Metagross"))
    })?;
    ensure(picks.count("Swampert") == 7, || {
        format!("Swampert {}", picks.count("Swampert"))
    })?;
    Ok(format!(
        "effective 0.7, greedy optimal 1.0 over {} attacks, Metagross 5, Swampert 7",
        greedy.attack_decisions
    ))
}

fn baseline_separation() -> Result<String, String> {
    let dex = Arc::new(Dex::bundled());
    let pool = dex.pool_len();
    let mut greedy_wins = 0u32;
    let matches = 400u64;
    for seed in 1..=matches {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "mirror-team"));
        let mut indices: Vec<usize> = (0..pool).collect();
        indices.shuffle(&mut rng);
        indices.truncate(6);
        let team = AgentDecision::team(indices, "mirror");
        let [greedy, random] = scripted_pair(seed);
        let greedy_first = seed % 2 == 0;
        let profiles = if greedy_first {
            [greedy, random]
        } else {
            [random, greedy]
        };
        let (result, _) = play(
            &dex,
            &profiles,
            &format!("mirror-{seed}"),
            seed,
            [Some(team.clone()), Some(team)],
        )?;
        ensure(result.teams[0] == result.teams[1], || {
            format!("seed {seed}: teams differ")
        })?;
        if result.winner_id == "greedy" {
            greedy_wins += 1;
        }
    }
    let rate = f64::from(greedy_wins) / matches as f64;
    ensure(rate >= 0.6, || {
        format!("greedy won {greedy_wins}/{matches} ({rate:.3}), threshold 0.60")
    })?;
    Ok(format!(
        "greedy won {greedy_wins}/{matches} ({rate:.3}), threshold 0.60"
    ))
}

fn offline_end_to_end() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let scripts = [
        (
            "plain",
            serde_json::json!({
                "team": [SAMPLE_TEAM],
                "battle": [SAMPLE_ACTION, "{\"action\": {\"type\": \"switch\", \"team_index\": 1}, \"reasoning\": \"pivot\"}"],
            }),
        ),
        (
            "fenced",
            serde_json::json!({
                "team": ["```json\n{\"team\": [1, 2, 4, 6, 9, 12], \"reasoning\": \"balance\"}\n```"],
                "battle": ["Sure.\n```json\n{\"action\": {\"type\": \"attack\", \"move_index\": 0}, \"reasoning\": \"hit\"}\n```"],
            }),
        ),
        (
            "sloppy",
            serde_json::json!({
                "team": ["I pick some.", "{\"team\": [2, 7, 10, 13, 16, 19], \"reasoning\": \"after repair\"}"],
                "battle": ["no idea", "{\"action\": {\"type\": \"attack\", \"move_index\": 3}, \"reasoning\": \"ok\"}"],
            }),
        ),
    ];
    let mut script_paths = Vec::new();
    for (name, body) in &scripts {
        let path = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, body.to_string()).map_err(|e| e.to_string())?;
        script_paths.push(path);
    }
    let entrants = (0..8)
        .map(|i| AgentProfile {
            agent_id: format!("mock-{i}"),
            display_name: None,
            kind: AgentKind::Mock {
                script: script_paths[i % script_paths.len()].clone(),
            },
        })
        .collect();
    let mut config = TournamentConfig::new("offline", entrants, 11);
    config.turn_cap = 300;
    let dex = Arc::new(Dex::bundled());
    let logs_root = dir.path().join("runs");
    let result = run_tournament(
        &config,
        Arc::clone(&dex),
        LogTarget::Directory(logs_root.clone()),
    )
    .map_err(|e| e.to_string())?;
    let table = standings_table(&result);
    ensure(table.lines().count() == 9, || {
        format!("standings table:\n{table}")
    })?;
    let logs = load_logs(logs_root.join("offline")).map_err(|e| e.to_string())?;
    ensure(logs.len() == 7, || format!("{} logs", logs.len()))?;
    for log in &logs {
        replay(&log.records, &dex).map_err(|e| format!("{:?}: {e}", log.source))?;
    }
    let report = build_report(&logs, &dex).map_err(|e| e.to_string())?;
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    for (id, m) in &report.agents {
        let rates = [
            Some(m.win_rate),
            m.effective_move_rate,
            m.optimal_move_rate,
            Some(m.switch_rate),
            m.team_diversity,
        ];
        ensure(rates.iter().flatten().all(|r| unit(*r)), || {
            format!("{id} has a rate outside [0,1]: {m:?}")
        })?;
    }
    for row in &report.team_similarity.matrix {
        ensure(row.iter().all(|r| unit(*r)), || {
            "similarity outside [0,1]".into()
        })?;
    }
    Ok(format!(
        "7 logs parsed and replayed, {} agents reported, champion {}",
        report.agents.len(),
        result.champion
    ))
}

fn hp_lost_by_events(events: &[Event]) -> [[u32; 6]; 2] {
    let mut lost = [[0u32; 6]; 2];
    for e in events {
        let (side, slot, amount) = match e {
            Event::Damage {
                target,
                slot,
                amount,
                ..
            } => (*target, *slot, *amount),
            Event::StatusDamage {
                side, slot, amount, ..
            } => (*side, *slot, *amount),
            Event::WeatherDamage {
                side, slot, amount, ..
            } => (*side, *slot, *amount),
            _ => continue,
        };
        lost[side.index()][slot] += u32::from(amount);
    }
    lost
}

fn check_turn(before: &BattleState, after: &BattleState, events: &[Event]) -> Result<(), String> {
    let lost = hp_lost_by_events(events);
    for side in [SideId::A, SideId::B] {
        for (slot, (b, a)) in before
            .side(side)
            .team
            .iter()
            .zip(&after.side(side).team)
            .enumerate()
        {
            ensure(a.current_hp <= a.max_hp, || {
                format!("{side} slot {slot} hp {} > max {}", a.current_hp, a.max_hp)
            })?;
            let delta = u32::from(b.current_hp) - u32::from(a.current_hp.min(b.current_hp));
            ensure(a.current_hp <= b.current_hp, || {
                format!("{side} slot {slot} gained hp")
            })?;
            ensure(delta == lost[side.index()][slot], || {
                format!(
                    "{side} slot {slot} lost {delta} hp but events sum to {}",
                    lost[side.index()][slot]
                )
            })?;
        }
    }
    Ok(())
}

fn engine_properties() -> Result<String, String> {
    let dex = Dex::bundled();
    let pool = dex.pool();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut turns = 0u32;
    let mut battles = 0u32;
    while turns < 10_000 {
        let pick = |rng: &mut ChaCha8Rng| pool.choose_multiple(rng, 6).copied().collect::<Vec<_>>();
        let (team_a, team_b) = (pick(&mut rng), pick(&mut rng));
        let (mut state, _) =
            start_battle(&team_a, &team_b, rng.gen(), 200).map_err(|e| e.to_string())?;
        battles += 1;
        while !state.is_over() && turns < 10_000 {
            let a = legal_actions(&state, SideId::A).map_err(|e| e.to_string())?;
            let b = legal_actions(&state, SideId::B).map_err(|e| e.to_string())?;
            ensure(!a.is_empty() && !b.is_empty(), || {
                format!("empty legal set on turn {}", state.turn_number)
            })?;
            let (next, events) = resolve_turn(
                &state,
                *a.choose(&mut rng).unwrap(),
                *b.choose(&mut rng).unwrap(),
                dex.chart(),
            )
            .map_err(|e| e.to_string())?;
            check_turn(&state, &next, &events)?;
            state = next;
            turns += 1;
        }
    }
    Ok(format!("{turns} turns over {battles} battles"))
}

fn main() {
    let checks: [(&str, Check); 9] = [
        ("type chart oracle", type_chart),
        ("damage worked example", damage_example),
        ("determinism and replay", determinism_and_replay),
        ("bracket invariants", bracket_shape),
        ("protocol golden tests", protocol_golden),
        ("metric fixtures", metric_fixtures),
        ("baseline separation", baseline_separation),
        ("offline end-to-end", offline_end_to_end),
        ("engine properties", engine_properties),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let outcome = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.2}s]", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{secs:.2}s]", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        checks.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
