//! `frontguard`: solve, analyze, simulate, and verify front-running
//! scenarios.
//!
//! Exit codes: 0 success, 1 validation or configuration failure, 2 oracle
//! mismatch from `verify`, 64 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use frontguard::analysis::{
    check_strong_condition, guessing_regime, plan_multi_commit, solve_protocol_equilibrium,
    AnalysisError, Regime, StrongCondition,
};
use frontguard::contest::{commitment_stage, solve_contest, StageEquilibrium};
use frontguard::engine::{commit_digest, ChainState, MessagePolicy, PeriodSchedule};
use frontguard::game::{solve_benchmark, GameSpec};
use frontguard::rng::SimRng;
use frontguard::sim::oracle::{backward_induction, fictitious_play};
use frontguard::sim::sampling::{random_game_spec, GameFamily};
use frontguard::sim::{run_monte_carlo_full, write_episode_csv, ProtocolMode, ScenarioConfig};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "frontguard",
    version,
    about = "Front-running game solvers, commit-reveal analysis, and chain simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Suppress informational output
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the baseline game and classify the interaction
    Solve { scenario: PathBuf },
    /// Blind-guess value, regime, and the multi-commitment plan
    Pi {
        scenario: PathBuf,
        /// Cap on the commitment count (defaults to the message count)
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Contest spends, payoffs, and commitment-stage equilibria
    Contest { scenario: PathBuf },
    /// Run the Monte Carlo simulation
    Simulate {
        scenario: PathBuf,
        /// Override the scenario's episode count
        #[arg(long)]
        episodes: Option<u64>,
        /// Override the scenario's seed (beats FRONTGUARD_SEED)
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON report here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-episode CSV here
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run every oracle-vs-solver check for a scenario
    Verify { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::from(EXIT_OK)
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(EXIT_USAGE)
                }
            };
        }
    };
    ExitCode::from(run(cli))
}

fn load(path: &Path) -> Result<(ScenarioConfig, GameSpec), String> {
    let cfg = ScenarioConfig::from_file(path).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    let spec = cfg.game_spec().map_err(|e| e.to_string())?;
    Ok((cfg, spec))
}

fn run(cli: Cli) -> u8 {
    let result = match &cli.command {
        Command::Solve { scenario } => cmd_solve(scenario, &cli),
        Command::Pi { scenario, k_max } => cmd_pi(scenario, *k_max, &cli),
        Command::Contest { scenario } => cmd_contest(scenario, &cli),
        Command::Simulate {
            scenario,
            episodes,
            seed,
            out,
            csv,
        } => cmd_simulate(
            scenario,
            *episodes,
            *seed,
            out.as_deref(),
            csv.as_deref(),
            &cli,
        ),
        Command::Verify { scenario } => return cmd_verify(scenario, &cli),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}

fn cmd_solve(path: &Path, cli: &Cli) -> Result<(), String> {
    let (_, spec) = load(path)?;
    let outcome = solve_benchmark(&spec).map_err(|e| e.to_string())?;
    if cli.format == Format::Json {
        println!(
            "{}",
            serde_json::to_string_pretty(&outcome).expect("outcome serializes")
        );
        return Ok(());
    }
    println!("classification: {}", outcome.classification);
    let (ea, eb) = outcome.expected_payoffs(&spec);
    println!("expected payoffs: honest {ea:.6}  attacker {eb:.6}");
    if !cli.quiet {
        println!(
            "{:<8} {:<12} {:<12} {:>12} {:>12}",
            "state", "a_action", "b_action", "payoff_a", "payoff_b"
        );
        for s in 0..spec.n_states() {
            let a = outcome.a_action[s]
                .map(|m| spec.message_label(m).to_string())
                .unwrap_or_else(|| "-".into());
            let b = outcome.b_action[s]
                .map(|m| spec.message_label(m).to_string())
                .unwrap_or_else(|| "-".into());
            let (pa, pb) = outcome.per_state_payoffs[s];
            println!(
                "{:<8} {:<12} {:<12} {:>12.6} {:>12.6}",
                spec.state_label(s),
                a,
                b,
                pa,
                pb
            );
        }
    }
    Ok(())
}

fn cmd_pi(path: &Path, k_max: Option<usize>, cli: &Cli) -> Result<(), String> {
    let (_, spec) = load(path)?;
    let regime = guessing_regime(&spec).map_err(|e| e.to_string())?;
    let k_max = k_max.unwrap_or(spec.n_messages()).max(1);
    let plan = plan_multi_commit(&spec, k_max).map_err(|e| e.to_string())?;
    let strong = check_strong_condition(&spec).map_err(|e| e.to_string())?;

    if cli.format == Format::Json {
        let doc = serde_json::json!({
            "guess_value": regime.guess_value,
            "threshold": regime.threshold,
            "regime": regime.regime.to_string(),
            "best_commit": spec.message_label(regime.best_commit),
            "strong_condition": match strong {
                StrongCondition::Holds => "holds".to_string(),
                StrongCondition::ViolatedBy(m) => format!("violated-by:{}", spec.message_label(m)),
            },
            "plan": {
                "k_star": plan.k_star,
                "guess_values": plan.guess_values,
                "chosen_set": plan.chosen_set.iter().map(|&m| spec.message_label(m)).collect::<Vec<_>>(),
                "approximate": plan.approximate,
                "recommend_commit": plan.recommend_commit,
            }
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializes")
        );
        return Ok(());
    }
    println!("guess value: {:.6}", regime.guess_value);
    println!("threshold (c/beta): {:.6}", regime.threshold);
    println!("regime: {}", regime.regime);
    println!(
        "best blind commit: {}",
        spec.message_label(regime.best_commit)
    );
    match strong {
        StrongCondition::Holds => println!("protocol-cost veil condition: holds"),
        StrongCondition::ViolatedBy(m) => println!(
            "protocol-cost veil condition: violated by {}",
            spec.message_label(m)
        ),
    }
    println!("optimal commitment count: {}", plan.k_star);
    if !cli.quiet {
        for (i, v) in plan.guess_values.iter().enumerate() {
            println!("  value of {} commitments: {v:.6}", i + 1);
        }
        let set: Vec<&str> = plan
            .chosen_set
            .iter()
            .map(|&m| spec.message_label(m))
            .collect();
        println!("  chosen set: {{{}}}", set.join(", "));
        if !plan.recommend_commit {
            println!("  (worth nothing; committing is not recommended)");
        }
    }
    Ok(())
}

fn cmd_contest(path: &Path, cli: &Cli) -> Result<(), String> {
    let (cfg, _) = load(path)?;
    let spec = cfg
        .contest_spec()
        .ok_or_else(|| "scenario has no contest section".to_string())?;
    let solution = solve_contest(&spec).map_err(|e| e.to_string())?;
    let stage = commitment_stage(&spec).map_err(|e| e.to_string())?;

    if cli.format == Format::Json {
        let doc = serde_json::json!({
            "solution": solution,
            "commitment_stage": stage,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializes")
        );
        return Ok(());
    }
    println!("regime: {:?}", solution.regime);
    println!(
        "solo-best spends: strong {:.6}  weak {:.6}",
        solution.solo_spend[0], solution.solo_spend[1]
    );
    println!(
        "break-even spends: strong {:.6}  weak {:.6}",
        solution.breakeven_spend[0], solution.breakeven_spend[1]
    );
    println!(
        "contest payoffs: strong {:.6}  weak {:.6}",
        solution.payoff_strong, solution.payoff_weak
    );
    println!(
        "solo values: strong {:.6}  weak {:.6}  contested(strong) {:.6}",
        solution.solo_value[0], solution.solo_value[1], solution.contested_value_strong
    );
    println!("commitment-stage equilibria:");
    for eq in &stage.equilibria {
        match eq {
            StageEquilibrium::Pure { committer } => println!("  pure: only {committer:?} commits"),
            StageEquilibrium::Mixed {
                alpha_strong,
                alpha_weak,
            } => println!(
                "  mixed: strong commits w.p. {alpha_strong:.6}, weak w.p. {alpha_weak:.6}"
            ),
            StageEquilibrium::NoCommitment => println!("  none: nobody commits"),
        }
    }
    if let Some(d) = &stage.degenerate {
        println!("  (degenerate indifference: {d})");
    }
    Ok(())
}

fn cmd_simulate(
    path: &Path,
    episodes: Option<u64>,
    seed: Option<u64>,
    out: Option<&Path>,
    csv: Option<&Path>,
    cli: &Cli,
) -> Result<(), String> {
    let (mut cfg, spec) = load(path)?;
    if let Some(n) = episodes {
        cfg.episodes = n;
    }
    // Seed precedence: file < FRONTGUARD_SEED < --seed.
    if let Ok(env_seed) = std::env::var("FRONTGUARD_SEED") {
        cfg.seed = env_seed
            .parse()
            .map_err(|_| format!("FRONTGUARD_SEED=`{env_seed}` is not a u64"))?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| e.to_string())?;

    let (report, episodes) = run_monte_carlo_full(&cfg).map_err(|e| e.to_string())?;
    let json = report.to_json();
    match out {
        Some(p) => std::fs::write(p, &json).map_err(|e| e.to_string())?,
        None => {
            if cli.format == Format::Json {
                println!("{json}");
            } else {
                println!("episodes: {}  seed: {}", report.episodes, report.seed);
                println!(
                    "honest payoff: {:.6} (stderr {:.6})",
                    report.honest_payoff.mean, report.honest_payoff.stderr
                );
                println!(
                    "attacker payoff: {:.6} (stderr {:.6})",
                    report.attacker_payoff.mean, report.attacker_payoff.stderr
                );
                println!(
                    "attacker spend: {:.6} (stderr {:.6})",
                    report.attacker_spend.mean, report.attacker_spend.stderr
                );
                println!(
                    "attack frequency: {:.4}  front-run frequency: {:.4}",
                    report.attack_frequency, report.front_run_frequency
                );
                if let Some(tau) = report.realized_tau {
                    println!("mean container ratio: {tau:.4}");
                }
                if let Some(r) = &report.analytic.regime {
                    println!("regime: {r}");
                }
            }
        }
    }
    if let Some(p) = csv {
        let file = std::fs::File::create(p).map_err(|e| e.to_string())?;
        write_episode_csv(&spec, &episodes, std::io::BufWriter::new(file))
            .map_err(|e| e.to_string())?;
    }
    if !cli.quiet && out.is_some() {
        println!(
            "simulated {} episodes: attack frequency {:.4}, front-run frequency {:.4}",
            report.episodes, report.attack_frequency, report.front_run_frequency
        );
    }
    Ok(())
}

fn cmd_verify(path: &Path, cli: &Cli) -> u8 {
    let (cfg, spec) = match load(path) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_INVALID;
        }
    };
    let mut failures = 0u32;
    let mut check = |name: &str, ok: bool, detail: String| {
        if !ok {
            failures += 1;
        }
        if !cli.quiet || !ok {
            println!("[{}] {name}{}", if ok { "ok" } else { "FAIL" }, detail);
        }
    };

    // Closed-form solver vs tree-walking oracle on the scenario's game.
    match (solve_benchmark(&spec), backward_induction(&spec)) {
        (Ok(solver), Ok(oracle)) => {
            let same = solver == oracle;
            check("benchmark vs backward induction", same, String::new());
        }
        (s, o) => check(
            "benchmark vs backward induction",
            false,
            format!(" (solver: {s:?}, oracle: {o:?})"),
        ),
    }

    // The same comparison across a randomized family.
    let mut rng = SimRng::new(cfg.seed.wrapping_add(0x5eed));
    let family = GameFamily::default();
    let mut mismatches = 0;
    for _ in 0..50 {
        let random = random_game_spec(&mut rng, &family);
        let solver = solve_benchmark(&random).expect("benchmark-valid random spec");
        let oracle = backward_induction(&random).expect("within oracle size limit");
        if solver != oracle {
            mismatches += 1;
        }
    }
    check(
        "randomized benchmark equivalence (50 draws)",
        mismatches == 0,
        format!(" ({mismatches} mismatches)"),
    );

    // Guess value must equal the size-one commitment plan, and the plan's
    // marginals must shrink.
    match (
        guessing_regime(&spec),
        plan_multi_commit(&spec, spec.n_messages()),
    ) {
        (Ok(regime), Ok(plan)) => {
            check(
                "guess value equals size-one plan",
                regime.guess_value == plan.guess_values[0],
                format!(" ({} vs {})", regime.guess_value, plan.guess_values[0]),
            );
            let mut shrinking = true;
            for w in plan.guess_values.windows(2).collect::<Vec<_>>().windows(2) {
                let m0 = w[0][1] - w[0][0];
                let m1 = w[1][1] - w[1][0];
                if m1 > m0 + 1e-9 {
                    shrinking = false;
                }
            }
            check("plan marginals nonincreasing", shrinking, String::new());
            if let StrongCondition::ViolatedBy(_) =
                check_strong_condition(&spec).expect("valid spec")
            {
                check(
                    "strong-condition violation implies easy guessing",
                    regime.regime == Regime::GuessingEasy,
                    String::new(),
                );
            }
        }
        (Err(AnalysisError::NoParticipation), _) | (_, Err(AnalysisError::NoParticipation)) => {
            check("guess value defined", true, " (no participation)".into());
        }
        (r, p) => check("guess value", false, format!(" ({r:?} / {p:?})")),
    }

    // Two-phase equilibria exist and respect the regime.
    match solve_protocol_equilibrium(&spec) {
        Ok(eq) => {
            let ok = match eq.regime.regime {
                Regime::GuessingHard => {
                    eq.profiles.len() == 1 && eq.profiles[0].b_commit_prob == 0.0
                }
                Regime::GuessingEasy => !eq.profiles.is_empty(),
            };
            check(
                "two-phase equilibria consistent with regime",
                ok,
                format!(" ({} profiles)", eq.profiles.len()),
            );
        }
        Err(AnalysisError::NoParticipation) => {
            check("two-phase equilibria", true, " (no participation)".into());
        }
        Err(e) => check("two-phase equilibria", false, format!(" ({e})")),
    }

    // Digest layer: round-trips accept, replays from other senders reject.
    {
        let mut chain = ChainState::new(PeriodSchedule::AlwaysOpen, 0.0, cfg.seed ^ 0xd1d);
        let target = chain.register_target(MessagePolicy::AllProtocol, PeriodSchedule::AlwaysOpen);
        let mut ok = true;
        for _ in 0..1000 {
            let a = chain.new_address();
            let b = chain.new_address();
            let digest = commit_digest(&a, "m1", None);
            if digest != commit_digest(&a, "m1", None) {
                ok = false;
            }
            if digest == commit_digest(&b, "m1", None) {
                ok = false;
            }
        }
        let _ = target;
        check("digest binding (1000 draws)", ok, String::new());
    }

    // Contest section: fictitious play against the payoff characterization.
    if let Some(contest) = cfg.contest_spec() {
        match (
            solve_contest(&contest),
            fictitious_play(&contest, 60, 100_000),
        ) {
            (Ok(solution), Ok(fp)) => {
                let tol = 0.05 * solution.payoff_strong.abs().max(0.05 * contest.prize);
                let ok = (fp.payoff_strong - solution.payoff_strong).abs() <= tol
                    && fp.payoff_weak.abs() <= 0.05 * contest.prize;
                check(
                    "contest payoffs vs fictitious play",
                    ok,
                    format!(
                        " (analytic {:.4}, play {:.4}; weak {:.4})",
                        solution.payoff_strong, fp.payoff_strong, fp.payoff_weak
                    ),
                );
            }
            (s, f) => check(
                "contest payoffs vs fictitious play",
                false,
                format!(" ({s:?} / {f:?})"),
            ),
        }
        match commitment_stage(&contest) {
            Ok(stage) => {
                let mut ok = true;
                for eq in &stage.equilibria {
                    if let StageEquilibrium::Mixed {
                        alpha_strong,
                        alpha_weak,
                    } = eq
                    {
                        let weak_value =
                            contest.beta * (1.0 - alpha_strong) * stage.value_weak - contest.c;
                        let strong_value = contest.beta
                            * ((1.0 - alpha_weak) * stage.value_strong
                                + alpha_weak * stage.contested_value_strong)
                            - contest.c;
                        if weak_value.abs() > 1e-9 || strong_value.abs() > 1e-9 {
                            ok = false;
                        }
                    }
                }
                check("commitment-stage indifference", ok, String::new());
            }
            Err(e) => check("commitment-stage indifference", false, format!(" ({e})")),
        }
    }

    // Simulation consistency: hard regime must show zero attacks.
    if matches!(cfg.protocol, ProtocolMode::Plain) && cfg.contest.is_none() {
        if let Ok(regime) = guessing_regime(&spec) {
            if regime.regime == Regime::GuessingHard {
                let mut small = cfg.clone();
                small.episodes = small.episodes.min(2000);
                match run_monte_carlo_full(&small) {
                    Ok((report, _)) => check(
                        "hard regime simulates quiet",
                        report.attack_frequency == 0.0,
                        format!(" (attack frequency {})", report.attack_frequency),
                    ),
                    Err(e) => check("hard regime simulates quiet", false, format!(" ({e})")),
                }
            }
        }
    }

    if failures == 0 {
        if !cli.quiet {
            println!("all checks passed");
        }
        EXIT_OK
    } else {
        println!("{failures} check(s) failed");
        EXIT_MISMATCH
    }
}
