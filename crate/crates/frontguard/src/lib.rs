//! Front-running economics: solvers, protocol engine, and simulation.
//!
//! The crate has five layers:
//!
//! - [`game`]: the one-shot front-running game, its validation rules, the
//!   closed-form equilibrium, and the attack vs. legitimate-competition
//!   classifier.
//! - [`analysis`]: everything the commit-reveal protocol changes: the
//!   blind-guess value, the hard/easy regimes, multi-commitment planning,
//!   the obfuscation threshold, and the two-phase game equilibria.
//! - [`contest`]: the two-attacker spending contest and the commitment-stage
//!   equilibria that decide who enters it.
//! - [`engine`]: an executable chain with mempools, fast-message ordering
//!   races, commit records, containers, and period schedules.
//! - [`sim`]: scenario files, agents that play the solved strategies on the
//!   engine, Monte Carlo aggregation, and the independent oracles the
//!   solvers are tested against.
//!
//! The `parallel` feature (on by default) runs Monte Carlo batches and
//! subset scans on rayon. Results are bit-identical with and without it:
//! every episode derives its own seed and aggregation folds in episode
//! order.

pub mod analysis;
pub mod contest;
pub mod engine;
pub mod game;
pub mod nash;
pub mod rng;
pub mod sim;

pub use analysis::{
    assess_hiding, check_strong_condition, guessing_regime, honest_protocol_payoff,
    plan_multi_commit, solve_protocol_equilibrium, HidingAssessment, MultiCommitPlan,
    ProtocolEquilibrium, ProtocolRegime, Regime,
};
pub use contest::{
    commitment_stage, solo_best_spend, solve_contest, zero_profit_spend, Attacker, CommitmentStage,
    ContestSolution, ContestSpec, SuccessCurve,
};
pub use game::{
    classify_interaction, solve_benchmark, CostParams, EquilibriumOutcome, GameSpec, Interaction,
};
pub use sim::{run_episode, run_monte_carlo, AggregateReport, EpisodeResult, ScenarioConfig};
