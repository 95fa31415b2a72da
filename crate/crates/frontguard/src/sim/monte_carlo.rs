//! Monte Carlo aggregation over episodes, with analytic predictions.

use serde::Serialize;

use crate::analysis::Regime;
use crate::game::Interaction;
use crate::sim::episode::{run_prepared, EpisodeResult, PreparedScenario, SimError};
use crate::sim::scenario::{ProtocolMode, ScenarioConfig};

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub stderr: f64,
}

impl Moments {
    fn from_samples(samples: impl Iterator<Item = f64> + Clone, n: u64) -> Self {
        let nf = n as f64;
        let mean = samples.clone().sum::<f64>() / nf;
        let var = if n > 1 {
            samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / nf).sqrt(),
        }
    }
}

/// Deviation of the empirical mean from an analytic prediction. With a
/// degenerate (zero-variance) sample the z-score is meaningless, so the
/// comparison downgrades to exact equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZCheck {
    pub analytic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
}

impl ZCheck {
    fn new(moments: Moments, analytic: f64) -> Self {
        if moments.stderr > 0.0 {
            Self {
                analytic,
                z: Some((moments.mean - analytic) / moments.stderr),
                exact: None,
            }
        } else {
            Self {
                analytic,
                z: None,
                exact: Some((moments.mean - analytic).abs() < 1e-9),
            }
        }
    }
}

/// Model-side predictions attached to a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticPrediction {
    pub classification: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guess_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Expected per-episode probability that an attacker starts the scheme.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack_rate: Option<f64>,
    /// The observer's conditional commit probability in the played
    /// equilibrium.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commit_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub honest_payoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacker_payoff: Option<f64>,
}

/// Aggregated Monte Carlo results for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    pub episodes: u64,
    pub seed: u64,
    pub honest_payoff: Moments,
    pub attacker_payoff: Moments,
    pub attacker_payoffs: Vec<Moments>,
    pub attacker_spend: Moments,
    pub attack_frequency: f64,
    pub front_run_frequency: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realized_tau: Option<f64>,
    pub analytic: AnalyticPrediction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub honest_check: Option<ZCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacker_check: Option<ZCheck>,
}

impl AggregateReport {
    /// Canonical JSON rendering; identical configurations and seeds yield
    /// identical bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn map_episodes<F>(n: u64, f: F, sequential: bool) -> Vec<EpisodeResult>
where
    F: Fn(u64) -> EpisodeResult + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = sequential;
    (0..n).map(f).collect()
}

/// Run every episode of a scenario and aggregate. Episodes derive their own
/// seeds, run in parallel when the `parallel` feature is on, and fold in
/// episode order, so the report does not depend on thread count.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<AggregateReport, SimError> {
    run_monte_carlo_inner(cfg, false).map(|(r, _)| r)
}

/// Single-threaded reference path; byte-identical to [`run_monte_carlo`].
pub fn run_monte_carlo_sequential(cfg: &ScenarioConfig) -> Result<AggregateReport, SimError> {
    run_monte_carlo_inner(cfg, true).map(|(r, _)| r)
}

/// As [`run_monte_carlo`], but also hands back the per-episode records for
/// CSV export.
pub fn run_monte_carlo_full(
    cfg: &ScenarioConfig,
) -> Result<(AggregateReport, Vec<EpisodeResult>), SimError> {
    run_monte_carlo_inner(cfg, false)
}

fn run_monte_carlo_inner(
    cfg: &ScenarioConfig,
    sequential: bool,
) -> Result<(AggregateReport, Vec<EpisodeResult>), SimError> {
    cfg.validate()?;
    let prepared = PreparedScenario::new(cfg.clone())?;
    let n = cfg.episodes;
    let episodes = map_episodes(n, |i| run_prepared(&prepared, i), sequential);

    let honest_payoff = Moments::from_samples(episodes.iter().map(|e| e.payoff_a), n);
    let attacker_payoff = Moments::from_samples(episodes.iter().map(|e| e.payoff_b), n);
    let n_attackers = episodes
        .first()
        .map(|e| e.attacker_payoffs.len())
        .unwrap_or(1);
    let attacker_payoffs: Vec<Moments> = (0..n_attackers)
        .map(|k| Moments::from_samples(episodes.iter().map(|e| e.attacker_payoffs[k]), n))
        .collect();
    let attacker_spend = Moments::from_samples(episodes.iter().map(|e| e.fees_b), n);
    let attack_frequency = episodes.iter().filter(|e| e.attack).count() as f64 / n as f64;
    let front_run_frequency = episodes.iter().filter(|e| e.front_run).count() as f64 / n as f64;
    let realized_tau = if episodes.iter().any(|e| e.realized_tau.is_some()) {
        Some(episodes.iter().filter_map(|e| e.realized_tau).sum::<f64>() / n as f64)
    } else {
        None
    };

    let analytic = predict(&prepared);
    let honest_check = analytic
        .honest_payoff
        .map(|a| ZCheck::new(honest_payoff, a));
    let attacker_check = analytic
        .attacker_payoff
        .map(|a| ZCheck::new(attacker_payoff, a));

    let report = AggregateReport {
        scenario: cfg.name.clone(),
        episodes: n,
        seed: cfg.seed,
        honest_payoff,
        attacker_payoff,
        attacker_payoffs,
        attacker_spend,
        attack_frequency,
        front_run_frequency,
        realized_tau,
        analytic,
        honest_check,
        attacker_check,
    };
    Ok((report, episodes))
}

fn predict(prep: &PreparedScenario) -> AnalyticPrediction {
    let spec = &prep.spec;
    let classification = match prep.benchmark.classification {
        Interaction::Attack => "attack",
        Interaction::LegitimateCompetition => "legitimate-competition",
        Interaction::NoEngagement => "no-engagement",
    }
    .to_string();

    let mut out = AnalyticPrediction {
        classification,
        regime: None,
        guess_value: None,
        threshold: None,
        attack_rate: None,
        commit_prob: None,
        honest_payoff: None,
        attacker_payoff: None,
    };

    match (&prep.cfg.protocol, &prep.contest) {
        (ProtocolMode::None, None) => {
            let (a, b) = prep.benchmark.expected_payoffs(spec);
            out.honest_payoff = Some(a);
            out.attacker_payoff = Some(b);
            out.attack_rate = Some(
                (0..spec.n_states())
                    .filter(|&s| prep.benchmark.b_action[s].is_some())
                    .map(|s| spec.prior(s))
                    .sum(),
            );
        }
        (ProtocolMode::None, Some(contest)) => {
            // Attack payoffs follow the contest characterization, scaled by
            // the mass of episodes where there is anything to contest; the
            // honest value depends on the mixed spending draws and is not
            // predicted in closed form.
            let mass = engagement_mass(prep);
            out.attacker_payoff =
                Some(mass * (contest.solution.payoff_strong + contest.solution.payoff_weak));
            out.attack_rate = Some(mass);
        }
        (ProtocolMode::Plain, None) => {
            if let Some(p) = &prep.protocol {
                if let Some(r) = &p.regime {
                    out.regime = Some(r.regime.to_string());
                    out.guess_value = Some(r.guess_value);
                    out.threshold = Some(r.threshold);
                }
                if let Some(profile) = &p.played {
                    out.attack_rate = Some(profile.attack_rate);
                    out.commit_prob = Some(profile.b_commit_prob);
                    out.honest_payoff = Some(profile.value_a);
                    out.attacker_payoff = Some(profile.value_b);
                }
                if matches!(
                    p.regime.as_ref().map(|r| r.regime),
                    Some(Regime::GuessingHard)
                ) {
                    // Closed form: participate when the discounted benefit
                    // clears both message costs.
                    let honest = (0..spec.n_states())
                        .map(|s| {
                            spec.prior(s)
                                * crate::analysis::honest_protocol_payoff(spec, s).unwrap_or(0.0)
                        })
                        .sum();
                    out.honest_payoff = Some(honest);
                    out.attacker_payoff = Some(0.0);
                    out.attack_rate = Some(0.0);
                }
            }
        }
        (ProtocolMode::Plain, Some(contest)) => {
            if let Some(p) = &prep.protocol {
                if let Some(r) = &p.regime {
                    out.regime = Some(r.regime.to_string());
                    out.guess_value = Some(r.guess_value);
                    out.threshold = Some(r.threshold);
                }
            }
            let stage_attack = match contest.stage.equilibria.first() {
                Some(crate::contest::StageEquilibrium::Pure { .. }) => 1.0,
                Some(crate::contest::StageEquilibrium::Mixed {
                    alpha_strong,
                    alpha_weak,
                }) => 1.0 - (1.0 - alpha_strong) * (1.0 - alpha_weak),
                _ => 0.0,
            };
            out.attack_rate = Some(participation_mass(prep) * stage_attack);
        }
        (ProtocolMode::Obfuscated { .. }, _) => {
            if let Some(p) = &prep.protocol {
                if let Some(r) = &p.regime {
                    out.regime = Some(r.regime.to_string());
                    out.guess_value = Some(r.guess_value);
                    out.threshold = Some(r.threshold);
                }
            }
        }
    }
    out
}

/// Prior mass of states where the honest player runs the protocol.
fn participation_mass(prep: &PreparedScenario) -> f64 {
    let spec = &prep.spec;
    let costs = spec.costs;
    (0..spec.n_states())
        .filter(|&s| {
            spec.best_message(s)
                .map(|m| -costs.c + costs.beta * (spec.payoff_a(m, s) - costs.c) > 0.0)
                .unwrap_or(false)
        })
        .map(|s| spec.prior(s))
        .sum()
}

/// Prior mass of states where an unprotected sender acts and an informed
/// counter is worth something, i.e. where a contest actually runs.
fn engagement_mass(prep: &PreparedScenario) -> f64 {
    let spec = &prep.spec;
    (0..spec.n_states())
        .filter(|&s| {
            let participates = spec
                .unthreatened_action(s)
                .ok()
                .flatten()
                .is_some();
            let informed = spec.benefit_b(s).map(|v| v > 0.0).unwrap_or(false);
            participates && informed
        })
        .map(|s| spec.prior(s))
        .sum()
}
