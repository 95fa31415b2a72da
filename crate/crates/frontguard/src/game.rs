//! The benchmark front-running game.
//!
//! An informed user (A) learns a state of the world and sends the message
//! that maximizes her benefit. An observer (B) sees her pending message in
//! the mempool and may pay for a fast message that, with probability `q`,
//! lands first and captures the interaction. This module holds the game
//! description, its validation rules, the subgame-perfect solution of the
//! one-shot game, and the classifier that separates front-running attacks
//! from legitimate competition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Message costs and ordering technology.
///
/// `c` is the regular (base-fee) message cost, `f > c` the fast-message
/// cost, `q` the probability a fast message overtakes the regular message
/// it targets, and `beta` the per-block discount factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c: f64,
    pub f: f64,
    pub q: f64,
    pub beta: f64,
}

impl CostParams {
    /// The blind-commitment profitability threshold `c / beta`.
    ///
    /// With `beta == 0` this is infinite: a payoff earned one block later is
    /// worthless, so no up-front cost is ever recovered.
    pub fn guess_threshold(&self) -> f64 {
        self.c / self.beta
    }
}

/// A finite two-player interaction: states, messages, a prior, and dense
/// benefit tables for both players.
///
/// `payoff_a(m, s)` is A's benefit from message `m` executing in state `s`.
/// `payoff_b(bm, am, s)` is B's benefit when his message `bm` executes first
/// while A sent `am` in state `s`. Tables are dense over the full domain so
/// a missing entry is a construction error, not a silent zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    states: Vec<String>,
    messages: Vec<String>,
    prior: Vec<f64>,
    payoff_a: Vec<f64>,
    payoff_b: Vec<f64>,
    pub costs: CostParams,
}

/// Structural errors raised while assembling a [`GameSpec`].
#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("states must be non-empty")]
    NoStates,
    #[error("messages must be non-empty")]
    NoMessages,
    #[error("prior has {got} entries, expected {expected}")]
    PriorLength { got: usize, expected: usize },
    #[error("payoff_a row for state {state} has {got} entries, expected {expected}")]
    PayoffARow {
        state: usize,
        got: usize,
        expected: usize,
    },
    #[error("payoff_a has {got} rows, expected {expected}")]
    PayoffARows { got: usize, expected: usize },
    #[error("payoff_b has wrong shape at state {state}")]
    PayoffBShape { state: usize },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
}

/// A single violated invariant, with the offending states/messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecViolation {
    #[error("prior weights sum to {sum}, expected 1 within 1e-12")]
    PriorNotNormalized { sum: f64 },
    #[error("prior weight for state {state} is {weight}, outside [0, 1]")]
    PriorWeightOutOfRange { state: usize, weight: f64 },
    #[error("state {state} has no unique best message (tie among {tied:?})")]
    AmbiguousArgmax { state: usize, tied: Vec<usize> },
    #[error("states {states:?} share best message {message}")]
    BijectionViolation { message: usize, states: Vec<usize> },
    #[error("state {state} has on-path benefit {benefit} inside the excluded band [{lo}, {hi}]")]
    GapAssumptionViolation {
        state: usize,
        benefit: f64,
        lo: f64,
        hi: f64,
    },
    #[error("cost parameter violation: {0}")]
    CostInvariant(String),
}

/// Outcome of [`GameSpec::validate`]: the full list of violated invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<SpecViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Valid for the one-shot benchmark game, which does not rely on the
    /// benefit-band exclusion needed by the two-phase protocol analysis.
    pub fn is_benchmark_valid(&self) -> bool {
        self.violations
            .iter()
            .all(|v| matches!(v, SpecViolation::GapAssumptionViolation { .. }))
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("state {state} has no unique best message")]
    AmbiguousArgmax { state: usize },
    #[error("state index {0} out of range")]
    BadState(usize),
}

impl GameSpec {
    /// Assemble a spec from label lists and nested payoff tables.
    ///
    /// `payoff_a[s][m]` is A's benefit; `payoff_b[s][am][bm]` is B's benefit
    /// when he plays `bm` against A's `am` in state `s`.
    pub fn new(
        states: Vec<String>,
        messages: Vec<String>,
        prior: Vec<f64>,
        payoff_a: Vec<Vec<f64>>,
        payoff_b: Vec<Vec<Vec<f64>>>,
        costs: CostParams,
    ) -> Result<Self, ShapeError> {
        if states.is_empty() {
            return Err(ShapeError::NoStates);
        }
        if messages.is_empty() {
            return Err(ShapeError::NoMessages);
        }
        for labels in [&states, &messages] {
            let mut seen = std::collections::BTreeSet::new();
            for l in labels {
                if !seen.insert(l) {
                    return Err(ShapeError::DuplicateLabel(l.clone()));
                }
            }
        }
        let ns = states.len();
        let nm = messages.len();
        if prior.len() != ns {
            return Err(ShapeError::PriorLength {
                got: prior.len(),
                expected: ns,
            });
        }
        if payoff_a.len() != ns {
            return Err(ShapeError::PayoffARows {
                got: payoff_a.len(),
                expected: ns,
            });
        }
        let mut flat_a = Vec::with_capacity(ns * nm);
        for (s, row) in payoff_a.iter().enumerate() {
            if row.len() != nm {
                return Err(ShapeError::PayoffARow {
                    state: s,
                    got: row.len(),
                    expected: nm,
                });
            }
            flat_a.extend_from_slice(row);
        }
        if payoff_b.len() != ns {
            return Err(ShapeError::PayoffBShape {
                state: payoff_b.len(),
            });
        }
        let mut flat_b = Vec::with_capacity(ns * nm * nm);
        for (s, per_state) in payoff_b.iter().enumerate() {
            if per_state.len() != nm {
                return Err(ShapeError::PayoffBShape { state: s });
            }
            for row in per_state {
                if row.len() != nm {
                    return Err(ShapeError::PayoffBShape { state: s });
                }
                flat_b.extend_from_slice(row);
            }
        }
        Ok(Self {
            states,
            messages,
            prior,
            payoff_a: flat_a,
            payoff_b: flat_b,
            costs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_messages(&self) -> usize {
        self.messages.len()
    }

    pub fn state_label(&self, s: usize) -> &str {
        &self.states[s]
    }

    pub fn message_label(&self, m: usize) -> &str {
        &self.messages[m]
    }

    pub fn message_index(&self, label: &str) -> Option<usize> {
        self.messages.iter().position(|m| m == label)
    }

    pub fn prior(&self, s: usize) -> f64 {
        self.prior[s]
    }

    /// A's benefit from message `m` executing in state `s`.
    #[inline]
    pub fn payoff_a(&self, m: usize, s: usize) -> f64 {
        self.payoff_a[s * self.n_messages() + m]
    }

    /// B's benefit from his message `bm` executing first, given A sent `am`
    /// in state `s`.
    #[inline]
    pub fn payoff_b(&self, bm: usize, am: usize, s: usize) -> f64 {
        let nm = self.n_messages();
        self.payoff_b[(s * nm + am) * nm + bm]
    }

    /// Check every semantic invariant and report all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let CostParams { c, f, q, beta } = self.costs;
        if !(c > 0.0) {
            violations.push(SpecViolation::CostInvariant(format!("c = {c}, need c > 0")));
        }
        if !(f > c) {
            violations.push(SpecViolation::CostInvariant(format!(
                "f = {f}, need f > c = {c}"
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            violations.push(SpecViolation::CostInvariant(format!(
                "q = {q}, need 0 <= q <= 1"
            )));
        }
        if !(0.0..=1.0).contains(&beta) {
            violations.push(SpecViolation::CostInvariant(format!(
                "beta = {beta}, need 0 <= beta <= 1"
            )));
        }

        let sum: f64 = self.prior.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            violations.push(SpecViolation::PriorNotNormalized { sum });
        }
        for (s, &w) in self.prior.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                violations.push(SpecViolation::PriorWeightOutOfRange {
                    state: s,
                    weight: w,
                });
            }
        }

        // Unique argmax per state, and the induced state -> message map must
        // be injective so an observed message pins down the state.
        let mut best_of: Vec<Option<usize>> = vec![None; self.n_states()];
        for s in 0..self.n_states() {
            match self.unique_argmax_a(s) {
                Ok(m) => best_of[s] = Some(m),
                Err(tied) => violations.push(SpecViolation::AmbiguousArgmax { state: s, tied }),
            }
        }
        for m in 0..self.n_messages() {
            let sharing: Vec<usize> = (0..self.n_states())
                .filter(|&s| best_of[s] == Some(m))
                .collect();
            if sharing.len() > 1 {
                violations.push(SpecViolation::BijectionViolation {
                    message: m,
                    states: sharing,
                });
            }
        }

        // No on-path benefit may fall in [c, c + c/beta]: inside that band A
        // would send a direct message but not pay for the two-phase path, so
        // observing protocol activity would itself leak information.
        let hi = c + self.costs.guess_threshold();
        for (s, best) in best_of.iter().enumerate() {
            if let Some(m) = best {
                let benefit = self.payoff_a(*m, s);
                if benefit >= c && benefit <= hi {
                    violations.push(SpecViolation::GapAssumptionViolation {
                        state: s,
                        benefit,
                        lo: c,
                        hi,
                    });
                }
            }
        }

        ValidationReport { violations }
    }

    fn unique_argmax_a(&self, s: usize) -> Result<usize, Vec<usize>> {
        let mut best = 0usize;
        let mut best_val = self.payoff_a(0, s);
        let mut tied = vec![0usize];
        for m in 1..self.n_messages() {
            let v = self.payoff_a(m, s);
            if v > best_val {
                best = m;
                best_val = v;
                tied = vec![m];
            } else if v == best_val {
                tied.push(m);
            }
        }
        if tied.len() == 1 {
            Ok(best)
        } else {
            Err(tied)
        }
    }

    /// The message A sends in state `s`: the unique argmax of her benefit.
    pub fn best_message(&self, s: usize) -> Result<usize, GameError> {
        if s >= self.n_states() {
            return Err(GameError::BadState(s));
        }
        self.unique_argmax_a(s)
            .map_err(|_| GameError::AmbiguousArgmax { state: s })
    }

    /// B's best counter-message after observing A's message in state `s`.
    /// Ties break to the earliest message in declaration order.
    pub fn best_counter(&self, s: usize) -> Result<usize, GameError> {
        let am = self.best_message(s)?;
        let mut best = 0usize;
        let mut best_val = self.payoff_b(0, am, s);
        for bm in 1..self.n_messages() {
            let v = self.payoff_b(bm, am, s);
            if v > best_val {
                best = bm;
                best_val = v;
            }
        }
        Ok(best)
    }

    /// A's on-path benefit `payoff_a(best_message(s), s)`.
    pub fn benefit_a(&self, s: usize) -> Result<f64, GameError> {
        Ok(self.payoff_a(self.best_message(s)?, s))
    }

    /// B's on-path benefit from a successful front-run in state `s`.
    pub fn benefit_b(&self, s: usize) -> Result<f64, GameError> {
        let am = self.best_message(s)?;
        let bm = self.best_counter(s)?;
        Ok(self.payoff_b(bm, am, s))
    }

    /// A's action when she expects no interference: send `best_message(s)`
    /// when the benefit covers the message cost, otherwise stay out.
    ///
    /// The boundary `benefit == c` participates.
    pub fn unthreatened_action(&self, s: usize) -> Result<Option<usize>, GameError> {
        let m = self.best_message(s)?;
        if self.payoff_a(m, s) >= self.costs.c {
            Ok(Some(m))
        } else {
            Ok(None)
        }
    }

    /// States where [`GameSpec::unthreatened_action`] is a send.
    pub fn participating_states(&self) -> Result<Vec<usize>, GameError> {
        let mut out = Vec::new();
        for s in 0..self.n_states() {
            if self.unthreatened_action(s)?.is_some() {
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// How B's equilibrium engagement should be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interaction {
    /// B engages only because observing A's message tells him what to send.
    Attack,
    /// B has a profitable message even without observing A.
    LegitimateCompetition,
    /// B never sends.
    NoEngagement,
}

impl std::fmt::Display for Interaction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Attack => f.write_str("attack"),
            Self::LegitimateCompetition => f.write_str("legitimate-competition"),
            Self::NoEngagement => f.write_str("no-engagement"),
        }
    }
}

/// Subgame-perfect profile of the one-shot game, state by state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumOutcome {
    /// A's action per state (`None` = no message).
    pub a_action: Vec<Option<usize>>,
    /// B's action per state. B can only move when A did.
    pub b_action: Vec<Option<usize>>,
    pub classification: Interaction,
    /// Expected (A, B) payoffs per state under the profile.
    pub per_state_payoffs: Vec<(f64, f64)>,
}

impl EquilibriumOutcome {
    /// Prior-weighted expected payoffs (A, B).
    pub fn expected_payoffs(&self, spec: &GameSpec) -> (f64, f64) {
        let mut a = 0.0;
        let mut b = 0.0;
        for s in 0..spec.n_states() {
            let (pa, pb) = self.per_state_payoffs[s];
            a += spec.prior(s) * pa;
            b += spec.prior(s) * pb;
        }
        (a, b)
    }

    pub fn b_sends_somewhere(&self) -> bool {
        self.b_action.iter().any(|x| x.is_some())
    }
}

/// Solve the one-shot game by backward induction in closed form.
///
/// Per state: B front-runs iff `q * benefit_b > f`; anticipating that, A
/// sends iff her (interference-adjusted) benefit strictly exceeds `c`.
/// Equalities resolve to inaction, so every action requires a strict edge.
pub fn solve_benchmark(spec: &GameSpec) -> Result<EquilibriumOutcome, GameError> {
    let CostParams { c, f, q, .. } = spec.costs;
    let ns = spec.n_states();
    let mut a_action = vec![None; ns];
    let mut b_action = vec![None; ns];
    let mut per_state_payoffs = vec![(0.0, 0.0); ns];

    for s in 0..ns {
        let pa = spec.benefit_a(s)?;
        let pb = spec.benefit_b(s)?;
        let b_would_attack = q * pb > f;
        let a_sends = if b_would_attack {
            (1.0 - q) * pa > c
        } else {
            pa > c
        };
        let b_sends = b_would_attack && a_sends;
        if a_sends {
            a_action[s] = Some(spec.best_message(s)?);
        }
        if b_sends {
            b_action[s] = Some(spec.best_counter(s)?);
        }
        per_state_payoffs[s] = match (a_sends, b_sends) {
            (false, _) => (0.0, 0.0),
            (true, false) => (pa - c, 0.0),
            (true, true) => ((1.0 - q) * pa - c, q * pb - f),
        };
    }

    let classification = classify_profile(spec, &b_action)?;
    Ok(EquilibriumOutcome {
        a_action,
        b_action,
        classification,
        per_state_payoffs,
    })
}

/// B's expected gross gain from message `bm` under a veil of ignorance:
/// `q * E_s[payoff_b(bm, a_msg(s), s)]` over the full prior, counting zero
/// in states where A stays out.
pub fn veil_value(spec: &GameSpec, bm: usize) -> Result<f64, GameError> {
    let mut acc = 0.0;
    for s in 0..spec.n_states() {
        if let Some(am) = spec.unthreatened_action(s)? {
            acc += spec.prior(s) * spec.payoff_b(bm, am, s);
        }
    }
    Ok(spec.costs.q * acc)
}

/// Classify B's equilibrium engagement.
///
/// If no uninformed message would pay for itself (`veil_value <= f` for all
/// of them) yet B engages once informed, his engagement is an attack: it
/// exists only because he observes A. If some uninformed message already
/// pays, B is a legitimate competitor. If B never engages, there is nothing
/// to classify.
pub fn classify_interaction(spec: &GameSpec) -> Result<Interaction, GameError> {
    let outcome = solve_benchmark(spec)?;
    Ok(outcome.classification)
}

fn classify_profile(spec: &GameSpec, b_action: &[Option<usize>]) -> Result<Interaction, GameError> {
    if !b_action.iter().any(|x| x.is_some()) {
        return Ok(Interaction::NoEngagement);
    }
    let mut max_veil = f64::NEG_INFINITY;
    for bm in 0..spec.n_messages() {
        max_veil = max_veil.max(veil_value(spec, bm)?);
    }
    if max_veil <= spec.costs.f {
        Ok(Interaction::Attack)
    } else {
        Ok(Interaction::LegitimateCompetition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two states, two messages, symmetric: A earns 10 for the matching
    /// message, B earns 8 by copying A. Costs c=1, f=2, q=0.5, beta=0.9.
    pub(crate) fn g1() -> GameSpec {
        GameSpec::new(
            vec!["s1".into(), "s2".into()],
            vec!["m1".into(), "m2".into()],
            vec![0.5, 0.5],
            vec![vec![10.0, 0.0], vec![0.0, 10.0]],
            vec![
                // state s1: A's best is m1; copying it pays 8
                vec![vec![8.0, 0.0], vec![0.0, 0.0]],
                // state s2: A's best is m2; copying it pays 8
                vec![vec![0.0, 0.0], vec![0.0, 8.0]],
            ],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap()
    }

    #[test]
    fn g1_is_fully_valid() {
        let report = g1().validate();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn best_messages_follow_the_payoff_table() {
        let spec = g1();
        assert_eq!(spec.best_message(0).unwrap(), 0);
        assert_eq!(spec.best_message(1).unwrap(), 1);
        assert_eq!(spec.best_counter(0).unwrap(), 0);
        assert_eq!(spec.best_counter(1).unwrap(), 1);
    }

    #[test]
    fn single_message_space_is_trivially_best() {
        let spec = GameSpec::new(
            vec!["s".into()],
            vec!["m".into()],
            vec![1.0],
            vec![vec![5.0]],
            vec![vec![vec![3.0]]],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        assert_eq!(spec.best_message(0).unwrap(), 0);
    }

    #[test]
    fn counter_tie_breaks_to_first_message() {
        let spec = GameSpec::new(
            vec!["s1".into(), "s2".into()],
            vec!["m1".into(), "m2".into()],
            vec![0.5, 0.5],
            vec![vec![10.0, 0.0], vec![0.0, 10.0]],
            vec![
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            ],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        assert_eq!(spec.best_counter(0).unwrap(), 0);
        assert_eq!(spec.best_counter(1).unwrap(), 0);
    }

    #[test]
    fn shared_best_message_is_reported() {
        let spec = GameSpec::new(
            vec!["s1".into(), "s2".into()],
            vec!["m1".into(), "m2".into()],
            vec![0.5, 0.5],
            // both states prefer m1
            vec![vec![10.0, 0.0], vec![10.0, 0.0]],
            vec![
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
                vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            ],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        let report = spec.validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SpecViolation::BijectionViolation { message: 0, states } if states == &vec![0, 1])));
    }

    #[test]
    fn benefit_band_violation_is_reported() {
        // c=1, beta=0.9 -> excluded band [1, 2.111...]; benefit 1.5 sits inside.
        let spec = GameSpec::new(
            vec!["s1".into()],
            vec!["m1".into()],
            vec![1.0],
            vec![vec![1.5]],
            vec![vec![vec![0.0]]],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        let report = spec.validate();
        assert!(!report.is_valid());
        assert!(report.is_benchmark_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SpecViolation::GapAssumptionViolation { state: 0, .. })));
    }

    #[test]
    fn g1_equilibrium_has_attack_on_path() {
        let spec = g1();
        let eq = solve_benchmark(&spec).unwrap();
        // q * 8 = 4 > f = 2 and (1-q) * 10 = 5 > c = 1: both engage.
        assert_eq!(eq.a_action, vec![Some(0), Some(1)]);
        assert_eq!(eq.b_action, vec![Some(0), Some(1)]);
        assert_eq!(eq.per_state_payoffs[0], (0.5 * 10.0 - 1.0, 0.5 * 8.0 - 2.0));
        assert_eq!(eq.expected_payoffs(&spec), (4.0, 2.0));
        assert_eq!(eq.classification, Interaction::Attack);
    }

    #[test]
    fn zero_ordering_probability_disarms_b() {
        let mut spec = g1();
        spec.costs.q = 0.0;
        let eq = solve_benchmark(&spec).unwrap();
        assert!(eq.b_action.iter().all(|x| x.is_none()));
        // A sends wherever the benefit beats c.
        assert_eq!(eq.a_action, vec![Some(0), Some(1)]);
        assert_eq!(eq.classification, Interaction::NoEngagement);
    }

    #[test]
    fn a_stays_out_when_benefit_below_cost() {
        let spec = GameSpec::new(
            vec!["s1".into()],
            vec!["m1".into()],
            vec![1.0],
            vec![vec![0.5]],
            vec![vec![vec![0.0]]],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        let eq = solve_benchmark(&spec).unwrap();
        assert_eq!(eq.a_action, vec![None]);
        assert_eq!(eq.per_state_payoffs[0], (0.0, 0.0));
    }

    #[test]
    fn boundary_equalities_resolve_to_inaction() {
        // q * benefit_b == f exactly: B stays out; benefit_a == c exactly: A stays out.
        let spec = GameSpec::new(
            vec!["s1".into()],
            vec!["m1".into()],
            vec![1.0],
            vec![vec![1.0]],
            vec![vec![vec![4.0]]],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        let eq = solve_benchmark(&spec).unwrap();
        assert_eq!(eq.a_action, vec![None]);
        assert_eq!(eq.b_action, vec![None]);
    }

    #[test]
    fn threat_alone_can_silence_a() {
        // benefit_a > c but (1-q) * benefit_a < c while B would attack.
        let spec = GameSpec::new(
            vec!["s1".into()],
            vec!["m1".into()],
            vec![1.0],
            vec![vec![1.5]],
            vec![vec![vec![10.0]]],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        let eq = solve_benchmark(&spec).unwrap();
        // q * 10 = 5 > 2, (1-q) * 1.5 = 0.75 < 1: A silenced, so B has nothing to hit.
        assert_eq!(eq.a_action, vec![None]);
        assert_eq!(eq.b_action, vec![None]);
    }

    #[test]
    fn constant_lucrative_message_marks_legitimate_competition() {
        let spec = GameSpec::new(
            vec!["s1".into(), "s2".into()],
            vec!["m1".into(), "m2".into()],
            vec![0.5, 0.5],
            vec![vec![10.0, 0.0], vec![0.0, 10.0]],
            vec![
                vec![vec![100.0, 0.0], vec![100.0, 0.0]],
                vec![vec![100.0, 0.0], vec![100.0, 0.0]],
            ],
            CostParams {
                c: 1.0,
                f: 2.0,
                q: 0.5,
                beta: 0.9,
            },
        )
        .unwrap();
        // veil value of m1: 0.5 * 100 = 50 > f = 2.
        assert_eq!(
            classify_interaction(&spec).unwrap(),
            Interaction::LegitimateCompetition
        );
    }

    #[test]
    fn g1_veil_values_sit_on_the_attack_side() {
        let spec = g1();
        assert_eq!(veil_value(&spec, 0).unwrap(), 2.0);
        assert_eq!(veil_value(&spec, 1).unwrap(), 2.0);
        assert_eq!(classify_interaction(&spec).unwrap(), Interaction::Attack);
    }

    #[test]
    fn unprofitable_b_means_no_engagement() {
        let mut spec = g1();
        spec.costs.f = 5.0; // q * 8 = 4 < 5 everywhere
        assert_eq!(
            classify_interaction(&spec).unwrap(),
            Interaction::NoEngagement
        );
    }
}
