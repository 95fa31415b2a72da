//! Asymmetric two-attacker spending contest.
//!
//! When two observers compete for the same front-running opportunity, each
//! picks a continuous spend and the bigger spender wins the right to attack;
//! the winner then beats the victim with probability `strength * q(spend)`.
//! This module characterizes the contest payoffs and, under the two-phase
//! protocol, the commitment-stage equilibria that decide who enters at all.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ContestError {
    #[error("invalid success curve: {0}")]
    BadCurve(String),
    #[error("invalid contest parameter: {0}")]
    BadParameter(String),
    #[error("root bracket failed: payoff still positive at spend {0}")]
    RootBracketFailure(f64),
    #[error("mixed-stage indifference system is degenerate")]
    DegenerateIndifference,
}

/// Probability-of-success curve over spend, strictly increasing and strictly
/// concave from `q(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SuccessCurve {
    /// `q(f) = q_max * (1 - exp(-lambda * f))`.
    Exponential { q_max: f64, lambda: f64 },
    /// `q(f) = min(1, scale * f^exponent)` with `exponent` in (0, 1).
    ///
    /// The cap introduces a kink where it binds, which steps outside the
    /// differentiability the payoff characterization assumes; the closed
    /// forms below handle it by clamping at the cap.
    Power { scale: f64, exponent: f64 },
}

impl SuccessCurve {
    pub fn validate(&self) -> Result<(), ContestError> {
        match *self {
            Self::Exponential { q_max, lambda } => {
                if !(q_max > 0.0 && q_max <= 1.0) {
                    return Err(ContestError::BadCurve(format!(
                        "q_max = {q_max}, need 0 < q_max <= 1"
                    )));
                }
                if !(lambda > 0.0) {
                    return Err(ContestError::BadCurve(format!(
                        "lambda = {lambda}, need lambda > 0"
                    )));
                }
            }
            Self::Power { scale, exponent } => {
                if !(scale > 0.0) {
                    return Err(ContestError::BadCurve(format!(
                        "scale = {scale}, need scale > 0"
                    )));
                }
                if !(exponent > 0.0 && exponent < 1.0) {
                    return Err(ContestError::BadCurve(format!(
                        "exponent = {exponent}, need 0 < exponent < 1"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `q(spend)`.
    pub fn value(&self, spend: f64) -> f64 {
        match *self {
            Self::Exponential { q_max, lambda } => q_max * (1.0 - (-lambda * spend).exp()),
            Self::Power { scale, exponent } => (scale * spend.powf(exponent)).min(1.0),
        }
    }

    /// `q'(spend)`; zero past the power family's cap.
    pub fn derivative(&self, spend: f64) -> f64 {
        match *self {
            Self::Exponential { q_max, lambda } => q_max * lambda * (-lambda * spend).exp(),
            Self::Power { scale, exponent } => {
                if scale * spend.powf(exponent) >= 1.0 {
                    0.0
                } else if spend == 0.0 {
                    f64::INFINITY
                } else {
                    scale * exponent * spend.powf(exponent - 1.0)
                }
            }
        }
    }

    /// Supremum of `q` over all spends.
    pub fn max_value(&self) -> f64 {
        match *self {
            Self::Exponential { q_max, .. } => q_max,
            Self::Power { .. } => 1.0,
        }
    }
}

/// Which attacker, ordered by strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Attacker {
    Strong,
    Weak,
}

/// Two-attacker contest description. `gamma_strong >= gamma_weak` scale each
/// attacker's success probability; `prize` is the value captured by a
/// successful front-run; `c` and `beta` price the protocol's commitment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContestSpec {
    pub gamma_strong: f64,
    pub gamma_weak: f64,
    pub prize: f64,
    pub curve: SuccessCurve,
    pub c: f64,
    pub beta: f64,
}

impl ContestSpec {
    pub fn validate(&self) -> Result<(), ContestError> {
        self.curve.validate()?;
        if !(self.gamma_strong > 0.0 && self.gamma_weak > 0.0) {
            return Err(ContestError::BadParameter(
                "strengths must be positive".into(),
            ));
        }
        if self.gamma_strong < self.gamma_weak {
            return Err(ContestError::BadParameter(
                "gamma_strong must not be below gamma_weak".into(),
            ));
        }
        if !(self.prize > 0.0) {
            return Err(ContestError::BadParameter("prize must be positive".into()));
        }
        if self.gamma_strong * self.curve.max_value() > 1.0 + 1e-12 {
            return Err(ContestError::BadParameter(format!(
                "gamma_strong * sup q = {} exceeds 1",
                self.gamma_strong * self.curve.max_value()
            )));
        }
        if !(self.c > 0.0) {
            return Err(ContestError::BadParameter("c must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ContestError::BadParameter("beta must be in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn gamma(&self, who: Attacker) -> f64 {
        match who {
            Attacker::Strong => self.gamma_strong,
            Attacker::Weak => self.gamma_weak,
        }
    }

    /// Solo payoff from spending `spend`: `prize * gamma * q(spend) - spend`.
    pub fn solo_payoff(&self, who: Attacker, spend: f64) -> f64 {
        self.prize * self.gamma(who) * self.curve.value(spend) - spend
    }
}

/// Optimizer of the solo payoff: where marginal success value meets the
/// marginal dollar. Zero when even the first dollar does not pay.
pub fn solo_best_spend(spec: &ContestSpec, who: Attacker) -> f64 {
    let gamma = spec.gamma(who);
    let scale = spec.prize * gamma;
    match spec.curve {
        SuccessCurve::Exponential { q_max, lambda } => {
            // FOC: scale * q_max * lambda * exp(-lambda f) = 1
            if scale * q_max * lambda <= 1.0 {
                0.0
            } else {
                (scale * q_max * lambda).ln() / lambda
            }
        }
        SuccessCurve::Power {
            scale: a,
            exponent: b,
        } => {
            // Interior FOC: scale * a * b * f^(b-1) = 1; beyond the cap the
            // payoff only falls, so the spend clamps there.
            let interior = (scale * a * b).powf(1.0 / (1.0 - b));
            let cap = (1.0 / a).powf(1.0 / b);
            interior.min(cap)
        }
    }
}

/// The spend at which the solo payoff crosses zero from above: the largest
/// spend the attacker could ever rationally reach. Zero for an attacker who
/// would not spend at all.
pub fn zero_profit_spend(spec: &ContestSpec, who: Attacker) -> Result<f64, ContestError> {
    let floor = solo_best_spend(spec, who);
    if floor == 0.0 {
        return Ok(0.0);
    }
    // Bracket: q <= sup q gives payoff <= prize * gamma * sup q - f < 0 for
    // f past that product, so start just above it and grow defensively.
    let mut hi = spec.prize * spec.gamma(who).max(1.0) * spec.curve.max_value() + 1.0;
    let cap = (1u64 << 20) as f64 * spec.prize;
    while spec.solo_payoff(who, hi) >= 0.0 {
        hi *= 2.0;
        if hi > cap {
            return Err(ContestError::RootBracketFailure(hi));
        }
    }
    let mut lo = floor;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spec.solo_payoff(who, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Which contest regime applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ContestRegime {
    /// The strong attacker's unconstrained optimum already exceeds anything
    /// the weak attacker could rationally spend: unique pure equilibrium,
    /// weak attacker out.
    PureStrong,
    /// Spending ranges overlap: both randomize, rents dissipate, and only
    /// the payoff levels are pinned down.
    MixedOverlap,
}

/// Payoff characterization of the spending contest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContestSolution {
    /// Solo-optimal spends (strong, weak).
    pub solo_spend: [f64; 2],
    /// Zero-profit spends (strong, weak).
    pub breakeven_spend: [f64; 2],
    pub regime: ContestRegime,
    /// Equilibrium payoff of the strong attacker.
    pub payoff_strong: f64,
    /// Equilibrium payoff of the weak attacker (zero whenever both engage).
    pub payoff_weak: f64,
    /// Solo contest values (strong, weak): what each earns alone.
    pub solo_value: [f64; 2],
    /// Strong attacker's payoff when both have entered (equals
    /// `solo_value[0]` degenerately in the pure regime).
    pub contested_value_strong: f64,
}

/// Solve the spending contest's payoffs.
///
/// In the overlap regime the mixed spending distributions themselves are
/// not computed here; the simulation harness approximates them on demand by
/// discretized fictitious play.
pub fn solve_contest(spec: &ContestSpec) -> Result<ContestSolution, ContestError> {
    spec.validate()?;
    let s_low = solo_best_spend(spec, Attacker::Strong);
    let w_low = solo_best_spend(spec, Attacker::Weak);
    let s_high = zero_profit_spend(spec, Attacker::Strong)?;
    let w_high = zero_profit_spend(spec, Attacker::Weak)?;
    let v_strong = spec.solo_payoff(Attacker::Strong, s_low).max(0.0);
    let v_weak = spec.solo_payoff(Attacker::Weak, w_low).max(0.0);

    if s_low >= w_high {
        Ok(ContestSolution {
            solo_spend: [s_low, w_low],
            breakeven_spend: [s_high, w_high],
            regime: ContestRegime::PureStrong,
            payoff_strong: v_strong,
            payoff_weak: 0.0,
            solo_value: [v_strong, v_weak],
            contested_value_strong: v_strong,
        })
    } else {
        // The strong attacker can always outlast the weak one's largest
        // rational spend, which pins his payoff; the weak attacker's rents
        // dissipate completely.
        let contested = spec.solo_payoff(Attacker::Strong, w_high);
        Ok(ContestSolution {
            solo_spend: [s_low, w_low],
            breakeven_spend: [s_high, w_high],
            regime: ContestRegime::MixedOverlap,
            payoff_strong: contested,
            payoff_weak: 0.0,
            solo_value: [v_strong, v_weak],
            contested_value_strong: contested,
        })
    }
}

/// One equilibrium of the commitment stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum StageEquilibrium {
    /// Exactly one attacker commits.
    Pure { committer: Attacker },
    /// Both mix; `alpha_*` are the commit probabilities making the opponent
    /// indifferent.
    Mixed { alpha_strong: f64, alpha_weak: f64 },
    /// Nobody commits: the protocol's up-front cost deters both.
    NoCommitment,
}

/// Commitment-stage analysis: values and the full equilibrium set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommitmentStage {
    pub value_strong: f64,
    pub value_weak: f64,
    pub contested_value_strong: f64,
    pub equilibria: Vec<StageEquilibrium>,
    /// Set when the mixed indifference system had no interior solution; the
    /// pure equilibria are still reported.
    pub degenerate: Option<String>,
}

/// Solve the commitment stage of the protocol-wrapped contest.
///
/// Paying `c` now buys participation in next block's contest. Since the
/// weak attacker earns nothing once both are in, both never commit with
/// probability one: either the strong attacker commits alone, or entry
/// itself is mixed, or nobody commits.
pub fn commitment_stage(spec: &ContestSpec) -> Result<CommitmentStage, ContestError> {
    let solution = solve_contest(spec)?;
    let v1 = solution.solo_value[0];
    let v2 = solution.solo_value[1];
    let v1_contested = solution.contested_value_strong;
    let c = spec.c;
    let beta = spec.beta;

    let mut equilibria = Vec::new();
    let mut degenerate = None;

    let strong_alone_pays = beta * v1 > c;
    let strong_contested_pays = beta * v1_contested > c;
    let weak_alone_pays = beta * v2 > c;

    if strong_contested_pays || (strong_alone_pays && c > beta * v1_contested && c > beta * v2) {
        equilibria.push(StageEquilibrium::Pure {
            committer: Attacker::Strong,
        });
    } else if strong_alone_pays && c > beta * v1_contested && weak_alone_pays {
        equilibria.push(StageEquilibrium::Pure {
            committer: Attacker::Strong,
        });
        equilibria.push(StageEquilibrium::Pure {
            committer: Attacker::Weak,
        });
        // Weak is indifferent when the strong side's presence dilutes his
        // solo value down to the commitment cost, and symmetrically for the
        // strong side against the contested value.
        let denom = v1 - v1_contested;
        if denom.abs() < 1e-15 {
            degenerate = Some("contested and solo values coincide".to_string());
        } else {
            let alpha_strong = 1.0 - c / (beta * v2);
            let alpha_weak = (beta * v1 - c) / (beta * denom);
            if (0.0..=1.0).contains(&alpha_strong) && (0.0..=1.0).contains(&alpha_weak) {
                equilibria.push(StageEquilibrium::Mixed {
                    alpha_strong,
                    alpha_weak,
                });
            } else {
                degenerate = Some(format!(
                    "indifference probabilities ({alpha_strong}, {alpha_weak}) outside [0, 1]"
                ));
            }
        }
    } else {
        equilibria.push(StageEquilibrium::NoCommitment);
    }

    Ok(CommitmentStage {
        value_strong: v1,
        value_weak: v2,
        contested_value_strong: v1_contested,
        equilibria,
        degenerate,
    })
}
