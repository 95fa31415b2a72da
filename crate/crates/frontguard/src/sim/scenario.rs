//! Scenario files: a single JSON document with explicit payoff tables.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contest::{ContestError, ContestSpec, SuccessCurve};
use crate::engine::{MessagePolicy, PeriodSchedule};
use crate::game::{CostParams, GameSpec, ShapeError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed game tables: {0}")]
    Shape(#[from] ShapeError),
    #[error("scenario fails validation:\n{0}")]
    Invalid(String),
    #[error("invalid contest section: {0}")]
    Contest(#[from] ContestError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Which defense the scenario runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolMode {
    /// Direct messages only: the unprotected baseline.
    #[default]
    None,
    /// Commit then reveal, commitments publicly attributable.
    Plain,
    /// Commit via anonymous containers across `replicas` parallel
    /// interactions; each informed user acts with `observation_prob`.
    Obfuscated {
        replicas: u64,
        observation_prob: f64,
    },
}

/// The game tables as they appear in the file.
///
/// `payoff_a[state][message]` and `payoff_b[state][a_message][b_message]`,
/// all dense.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameConfig {
    pub states: Vec<String>,
    pub messages: Vec<String>,
    pub prior: Vec<f64>,
    pub payoff_a: Vec<Vec<f64>>,
    pub payoff_b: Vec<Vec<Vec<f64>>>,
    pub costs: CostParams,
}

/// Contest section. Commitment cost and discounting come from the game's
/// cost parameters so the two sections cannot drift apart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContestConfig {
    pub gamma_strong: f64,
    pub gamma_weak: f64,
    pub prize: f64,
    pub curve: SuccessCurve,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub game: GameConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contest: Option<ContestConfig>,
    #[serde(default)]
    pub protocol: ProtocolMode,
    /// Block schedule; defaults to always-open without the protocol and to
    /// a strict one-commit/one-reveal cycle with it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<PeriodSchedule>,
    /// Payloads gated behind the protocol. `None` protects everything when
    /// the protocol is on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_set: Option<Vec<String>>,
    #[serde(default)]
    pub delay_prob: f64,
    pub episodes: u64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Build the game spec (shape checks only; semantic validation is
    /// [`ScenarioConfig::validate`]).
    pub fn game_spec(&self) -> Result<GameSpec, ScenarioError> {
        Ok(GameSpec::new(
            self.game.states.clone(),
            self.game.messages.clone(),
            self.game.prior.clone(),
            self.game.payoff_a.clone(),
            self.game.payoff_b.clone(),
            self.game.costs,
        )?)
    }

    pub fn contest_spec(&self) -> Option<ContestSpec> {
        self.contest.as_ref().map(|c| ContestSpec {
            gamma_strong: c.gamma_strong,
            gamma_weak: c.gamma_weak,
            prize: c.prize,
            curve: c.curve,
            c: self.game.costs.c,
            beta: self.game.costs.beta,
        })
    }

    /// The schedule episodes run under.
    pub fn effective_schedule(&self) -> PeriodSchedule {
        if let Some(s) = self.schedule {
            return s;
        }
        match self.protocol {
            ProtocolMode::None => PeriodSchedule::AlwaysOpen,
            _ => PeriodSchedule::Alternating {
                commit_blocks: 1,
                reveal_blocks: 1,
            },
        }
    }

    /// The message policy target contracts enforce.
    pub fn message_policy(&self) -> MessagePolicy {
        match self.protocol {
            ProtocolMode::None => MessagePolicy::AllDirect,
            _ => match &self.m_set {
                None => MessagePolicy::AllProtocol,
                Some(labels) => {
                    MessagePolicy::Subset(labels.iter().cloned().collect::<BTreeSet<_>>())
                }
            },
        }
    }

    /// Full semantic validation. A parseable scenario must pass this before
    /// anything runs.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let spec = self.game_spec()?;
        let report = spec.validate();
        if !report.is_valid() {
            return Err(ScenarioError::Invalid(report.to_string()));
        }
        if self.episodes == 0 {
            return Err(ScenarioError::Config("episodes must be at least 1".into()));
        }
        if !(0.0..=0.99).contains(&self.delay_prob) {
            return Err(ScenarioError::Config(
                "delay_prob must be in [0, 0.99]".into(),
            ));
        }
        if let Some(labels) = &self.m_set {
            for l in labels {
                if spec.message_index(l).is_none() {
                    return Err(ScenarioError::Config(format!(
                        "m_set message `{l}` is not in the message space"
                    )));
                }
            }
            if matches!(self.protocol, ProtocolMode::None) {
                return Err(ScenarioError::Config(
                    "m_set requires the protocol to be on".into(),
                ));
            }
        }
        if let ProtocolMode::Obfuscated {
            replicas,
            observation_prob,
        } = self.protocol
        {
            if replicas == 0 {
                return Err(ScenarioError::Config("replicas must be positive".into()));
            }
            if !(0.0..=1.0).contains(&observation_prob) {
                return Err(ScenarioError::Config(
                    "observation_prob must be in [0, 1]".into(),
                ));
            }
        }
        if let Some(contest) = self.contest_spec() {
            contest.validate()?;
            // The contest prize must agree with the game tables wherever an
            // informed counter pays off, so the two views of the attack
            // value cannot diverge.
            for s in 0..spec.n_states() {
                let am = spec
                    .best_message(s)
                    .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
                for bm in 0..spec.n_messages() {
                    let v = spec.payoff_b(bm, am, s);
                    if v != 0.0 && (v - contest.prize).abs() > 1e-9 {
                        return Err(ScenarioError::Config(format!(
                            "payoff_b[{s}][{am}][{bm}] = {v} disagrees with contest prize {}",
                            contest.prize
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
