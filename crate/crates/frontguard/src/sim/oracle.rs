//! Independent oracles the solvers are checked against.
//!
//! [`backward_induction`] re-derives the one-shot equilibrium by walking the
//! game tree node by node instead of evaluating the closed-form conditions.
//! [`fictitious_play`] approximates the spending contest's equilibrium
//! payoffs on a discretized grid with no knowledge of the payoff
//! characterization.

use thiserror::Error;

use crate::contest::{zero_profit_spend, Attacker, ContestError, ContestSpec};
use crate::game::{EquilibriumOutcome, GameError, GameSpec, Interaction};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle limited to 8 states / 8 messages, got {states} x {messages}")]
    SizeLimit { states: usize, messages: usize },
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Contest(#[from] ContestError),
}

/// Exhaustive backward induction over the per-state tree.
///
/// At each node the oracle scans the full action set and keeps the best
/// continuation, with inaction winning ties. It shares no code with the
/// closed-form solver.
pub fn backward_induction(spec: &GameSpec) -> Result<EquilibriumOutcome, OracleError> {
    if spec.n_states() > 8 || spec.n_messages() > 8 {
        return Err(OracleError::SizeLimit {
            states: spec.n_states(),
            messages: spec.n_messages(),
        });
    }
    let c = spec.costs.c;
    let f = spec.costs.f;
    let q = spec.costs.q;
    let ns = spec.n_states();
    let nm = spec.n_messages();

    let mut a_action = vec![None; ns];
    let mut b_action = vec![None; ns];
    let mut per_state_payoffs = vec![(0.0, 0.0); ns];

    for s in 0..ns {
        // A's message, were she to send: scan her benefit column.
        let mut am = 0;
        for m in 1..nm {
            if spec.payoff_a(m, s) > spec.payoff_a(am, s) {
                am = m;
            }
        }
        // B's node after observing `am`: best net continuation vs abstaining.
        let mut best_bm = 0;
        let mut best_net = f64::NEG_INFINITY;
        for bm in 0..nm {
            let net = q * spec.payoff_b(bm, am, s) - f;
            if net > best_net {
                best_net = net;
                best_bm = bm;
            }
        }
        let b_engages = best_net > 0.0;
        // A's root: compare the send leaf against staying out.
        let send_value = if b_engages {
            (1.0 - q) * spec.payoff_a(am, s) - c
        } else {
            spec.payoff_a(am, s) - c
        };
        let a_sends = send_value > 0.0;
        if a_sends {
            a_action[s] = Some(am);
            if b_engages {
                b_action[s] = Some(best_bm);
                per_state_payoffs[s] = (
                    (1.0 - q) * spec.payoff_a(am, s) - c,
                    q * spec.payoff_b(best_bm, am, s) - f,
                );
            } else {
                per_state_payoffs[s] = (spec.payoff_a(am, s) - c, 0.0);
            }
        }
    }

    // Independent classification: evaluate every blind message against the
    // no-interference participation rule.
    let classification = if b_action.iter().all(|x| x.is_none()) {
        Interaction::NoEngagement
    } else {
        let mut any_blind_profit = false;
        for bm in 0..nm {
            let mut expected = 0.0;
            for s in 0..ns {
                let mut am = 0;
                for m in 1..nm {
                    if spec.payoff_a(m, s) > spec.payoff_a(am, s) {
                        am = m;
                    }
                }
                if spec.payoff_a(am, s) >= c {
                    expected += spec.prior(s) * spec.payoff_b(bm, am, s);
                }
            }
            if q * expected > f {
                any_blind_profit = true;
            }
        }
        if any_blind_profit {
            Interaction::LegitimateCompetition
        } else {
            Interaction::Attack
        }
    };

    Ok(EquilibriumOutcome {
        a_action,
        b_action,
        classification,
        per_state_payoffs,
    })
}

/// Outcome of a fictitious-play run on the discretized spending contest.
#[derive(Debug, Clone, PartialEq)]
pub struct FictitiousPlayOutcome {
    pub payoff_strong: f64,
    pub payoff_weak: f64,
    /// Time-averaged mixed strategies over the grid.
    pub strategy_strong: Vec<f64>,
    pub strategy_weak: Vec<f64>,
    pub grid: Vec<f64>,
    /// False when the payoff estimate still moved more than 1% across the
    /// last decile of rounds.
    pub converged: bool,
}

/// Approximate the contest's equilibrium payoffs by fictitious play.
///
/// Spends are discretized on `[0, 1.1 * max breakeven spend]`. Updates
/// alternate (the strong side responds first), ties in the best-response
/// scan break to the lower grid index, and both sides start at zero spend,
/// so the run is deterministic. Payoffs are evaluated on the product of the
/// time-averaged strategies at sixteen checkpoints over the second half of
/// the run and averaged, which irons out best-response cycling.
pub fn fictitious_play(
    spec: &ContestSpec,
    grid_points: usize,
    rounds: u64,
) -> Result<FictitiousPlayOutcome, OracleError> {
    assert!(grid_points >= 40, "need at least 40 grid points");
    assert!(rounds >= 100_000, "need at least 1e5 rounds");
    spec.validate()?;

    let reach_strong = zero_profit_spend(spec, Attacker::Strong)?;
    let reach_weak = zero_profit_spend(spec, Attacker::Weak)?;
    let top = reach_strong.max(reach_weak) * 1.1;
    if top == 0.0 {
        // Neither attacker would ever spend: the contest is degenerate.
        return Ok(FictitiousPlayOutcome {
            payoff_strong: 0.0,
            payoff_weak: 0.0,
            strategy_strong: vec![1.0],
            strategy_weak: vec![1.0],
            grid: vec![0.0],
            converged: true,
        });
    }
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| i as f64 * top / (grid_points - 1) as f64)
        .collect();

    // Payoff of spending grid[own] against grid[other]; a tie halves the
    // winner's success probability.
    let payoff = |who: Attacker, own: usize, other: usize| -> f64 {
        let win = spec.prize * spec.gamma(who) * spec.curve.value(grid[own]);
        if grid[own] > grid[other] {
            win - grid[own]
        } else if grid[own] < grid[other] {
            -grid[own]
        } else {
            0.5 * win - grid[own]
        }
    };

    let n = grid_points;
    let mut counts_strong = vec![0.0f64; n];
    let mut counts_weak = vec![0.0f64; n];
    // score_*[a] accumulates the payoff of action `a` against the opponent's
    // whole history, so best responses are O(n) per round.
    let mut score_strong = vec![0.0f64; n];
    let mut score_weak = vec![0.0f64; n];
    let mut play_weak = 0usize;

    let argmax = |scores: &[f64]| -> usize {
        let mut best = 0;
        for i in 1..scores.len() {
            if scores[i] > scores[best] {
                best = i;
            }
        }
        best
    };

    let n_checkpoints = 16u64;
    let start = rounds / 2;
    let mut checkpoints: Vec<u64> = (0..n_checkpoints)
        .map(|k| start + (rounds - 1 - start) * k / (n_checkpoints - 1))
        .collect();
    checkpoints.dedup();
    let mut checkpoint_vals: Vec<(f64, f64)> = Vec::with_capacity(checkpoints.len());

    let product_payoffs = |cs: &[f64], cw: &[f64]| -> (f64, f64) {
        let ts: f64 = cs.iter().sum();
        let tw: f64 = cw.iter().sum();
        let mut vs = 0.0;
        let mut vw = 0.0;
        for a in 0..n {
            if cs[a] == 0.0 {
                continue;
            }
            let pa = cs[a] / ts;
            for b in 0..n {
                if cw[b] == 0.0 {
                    continue;
                }
                let pb = cw[b] / tw;
                vs += pa * pb * payoff(Attacker::Strong, a, b);
                vw += pa * pb * payoff(Attacker::Weak, b, a);
            }
        }
        (vs, vw)
    };

    let mut next_cp = 0usize;
    for t in 0..rounds {
        // Strong responds to the weak side's history, then the weak side
        // responds with the strong side's fresh play already counted.
        counts_weak[play_weak] += 1.0;
        for a in 0..n {
            score_strong[a] += payoff(Attacker::Strong, a, play_weak);
        }
        let play_strong = argmax(&score_strong);
        counts_strong[play_strong] += 1.0;
        for a in 0..n {
            score_weak[a] += payoff(Attacker::Weak, a, play_strong);
        }
        play_weak = argmax(&score_weak);

        if next_cp < checkpoints.len() && t == checkpoints[next_cp] {
            checkpoint_vals.push(product_payoffs(&counts_strong, &counts_weak));
            next_cp += 1;
        }
    }

    let m = checkpoint_vals.len() as f64;
    let payoff_strong = checkpoint_vals.iter().map(|v| v.0).sum::<f64>() / m;
    let payoff_weak = checkpoint_vals.iter().map(|v| v.1).sum::<f64>() / m;

    // Convergence: spread of the checkpoint estimates inside the last
    // decile, relative to the scale of the answer.
    let decile_start = rounds - rounds / 10;
    let tail: Vec<&(f64, f64)> = checkpoints
        .iter()
        .zip(&checkpoint_vals)
        .filter(|(t, _)| **t >= decile_start)
        .map(|(_, v)| v)
        .collect();
    let converged = if tail.len() < 2 {
        true
    } else {
        let lo = tail.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) <= 0.01 * payoff_strong.abs().max(0.01 * spec.prize)
    };

    let total_s: f64 = counts_strong.iter().sum();
    let total_w: f64 = counts_weak.iter().sum();
    Ok(FictitiousPlayOutcome {
        payoff_strong,
        payoff_weak,
        strategy_strong: counts_strong.iter().map(|x| x / total_s).collect(),
        strategy_weak: counts_weak.iter().map(|x| x / total_w).collect(),
        grid,
        converged,
    })
}
