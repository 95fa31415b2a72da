//! Scenario ingestion, episode simulation, Monte Carlo aggregation, and the
//! independent oracles.

mod episode;
mod monte_carlo;
pub mod oracle;
mod report;
pub mod sampling;
mod scenario;

pub use episode::{
    run_episode, run_prepared, run_prepared_traced, EpisodeResult, EpisodeTrace, PreparedScenario,
    SimError,
};
pub use monte_carlo::{
    run_monte_carlo, run_monte_carlo_full, run_monte_carlo_sequential, AggregateReport,
    AnalyticPrediction, Moments, ZCheck,
};
pub use report::write_episode_csv;
pub use scenario::{ContestConfig, GameConfig, ProtocolMode, ScenarioConfig, ScenarioError};
