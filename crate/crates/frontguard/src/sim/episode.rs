//! One simulated episode: draw a state, let agents play their solved
//! strategies on the chain, and account discounted payoffs.

use serde::Serialize;
use thiserror::Error;

use crate::analysis::{
    self, guessing_regime_restricted, solve_protocol_equilibrium, AnalysisError, ProtocolProfile,
    ProtocolRegime, Regime,
};
use crate::contest::{
    commitment_stage, solve_contest, Attacker, CommitmentStage, ContestError, ContestRegime,
    ContestSolution, ContestSpec, StageEquilibrium,
};
use crate::engine::{
    commit_digest, Address, ChainState, EngineError, FastInfo, LogEvent, MessagePolicy,
    PeriodSchedule, TxId,
};
use crate::game::{solve_benchmark, EquilibriumOutcome, GameError, GameSpec};
use crate::rng::{episode_seed, SimRng};
use crate::sim::oracle::{fictitious_play, OracleError};
use crate::sim::scenario::{ProtocolMode, ScenarioConfig, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Contest(#[from] ContestError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Everything episodes need, computed once per scenario.
pub struct PreparedScenario {
    pub cfg: ScenarioConfig,
    pub spec: GameSpec,
    pub benchmark: EquilibriumOutcome,
    pub protocol: Option<PreparedProtocol>,
    pub contest: Option<PreparedContest>,
    pub schedule: PeriodSchedule,
    pub policy: MessagePolicy,
}

/// Solved two-phase strategies. When no state induces participation the
/// equilibrium set is empty and everyone stays quiet.
pub struct PreparedProtocol {
    pub regime: Option<ProtocolRegime>,
    /// The equilibrium episodes play: the solver's first (most aggressive)
    /// profile.
    pub played: Option<ProtocolProfile>,
    pub n_equilibria: usize,
    /// The observer's blind guess when only part of the message space is
    /// protected.
    pub restricted: Option<ProtocolRegime>,
}

/// Solved contest objects plus sampled mixed spending distributions.
pub struct PreparedContest {
    pub spec: ContestSpec,
    pub solution: ContestSolution,
    pub stage: CommitmentStage,
    /// Spend grid and time-averaged mixed strategies from fictitious play;
    /// present only in the overlap regime.
    pub grid: Vec<f64>,
    pub dist_strong: Vec<f64>,
    pub dist_weak: Vec<f64>,
}

/// Fictitious-play effort behind the sampled spending distributions.
const FP_GRID: usize = 60;
const FP_ROUNDS: u64 = 100_000;

impl PreparedScenario {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, SimError> {
        let spec = cfg.game_spec()?;
        let benchmark = solve_benchmark(&spec)?;
        let schedule = cfg.effective_schedule();
        let policy = cfg.message_policy();

        let protocol = match cfg.protocol {
            ProtocolMode::None => None,
            _ => Some(prepare_protocol(&spec, &cfg, &policy)?),
        };

        let contest = match cfg.contest_spec() {
            None => None,
            Some(cspec) => {
                let solution = solve_contest(&cspec)?;
                let stage = commitment_stage(&cspec)?;
                let (grid, dist_strong, dist_weak) =
                    if solution.regime == ContestRegime::MixedOverlap {
                        let fp = fictitious_play(&cspec, FP_GRID, FP_ROUNDS)?;
                        (fp.grid, fp.strategy_strong, fp.strategy_weak)
                    } else {
                        (Vec::new(), Vec::new(), Vec::new())
                    };
                Some(PreparedContest {
                    spec: cspec,
                    solution,
                    stage,
                    grid,
                    dist_strong,
                    dist_weak,
                })
            }
        };

        Ok(Self {
            cfg,
            spec,
            benchmark,
            protocol,
            contest,
            schedule,
            policy,
        })
    }
}

fn prepare_protocol(
    spec: &GameSpec,
    cfg: &ScenarioConfig,
    policy: &MessagePolicy,
) -> Result<PreparedProtocol, SimError> {
    let (regime, played, n_equilibria) = match solve_protocol_equilibrium(spec) {
        Ok(eq) => {
            let n = eq.profiles.len();
            (Some(eq.regime), eq.profiles.into_iter().next(), n)
        }
        Err(AnalysisError::NoParticipation) => (None, None, 0),
        Err(e) => return Err(e.into()),
    };
    // Restricted guess for partial protection: the observer commits within
    // the protected set only.
    let restricted = match policy {
        MessagePolicy::Subset(labels) => {
            let allowed: Vec<usize> = labels
                .iter()
                .filter_map(|l| spec.message_index(l))
                .collect();
            if allowed.is_empty() {
                None
            } else {
                match guessing_regime_restricted(spec, &allowed) {
                    Ok(r) => Some(r),
                    Err(AnalysisError::NoParticipation) => None,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        _ => None,
    };
    let _ = cfg;
    Ok(PreparedProtocol {
        regime,
        played,
        n_equilibria,
        restricted,
    })
}

/// Summary of one episode. Per-attacker vectors hold one entry without a
/// contest section and two with one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeResult {
    pub episode: u64,
    pub state: usize,
    pub a_action: Option<usize>,
    pub b_action: Option<usize>,
    /// An attacker initiated the costly scheme: a fast counter-message in
    /// the baseline, a commitment under the protocol.
    pub attack: bool,
    /// An attacker's message executed ahead of the honest one.
    pub front_run: bool,
    pub payoff_a: f64,
    pub payoff_b: f64,
    pub fees_a: f64,
    pub fees_b: f64,
    pub attacker_payoffs: Vec<f64>,
    pub attacker_fees: Vec<f64>,
    pub realized_tau: Option<f64>,
}

/// An episode plus its event log and the role-to-address mapping needed to
/// re-derive payoffs from the log alone.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub result: EpisodeResult,
    pub events: Vec<LogEvent>,
    pub honest: String,
    pub attackers: Vec<String>,
}

/// Run episode `index` of a scenario from scratch.
pub fn run_episode(cfg: &ScenarioConfig, index: u64) -> Result<EpisodeResult, SimError> {
    let prepared = PreparedScenario::new(cfg.clone())?;
    Ok(run_prepared(&prepared, index))
}

/// Run one episode against prepared strategies.
pub fn run_prepared(prep: &PreparedScenario, index: u64) -> EpisodeResult {
    run_prepared_traced(prep, index).result
}

pub fn run_prepared_traced(prep: &PreparedScenario, index: u64) -> EpisodeTrace {
    let seed = episode_seed(prep.cfg.seed, index);
    let mut agents = SimRng::new(episode_seed(seed, 0));
    let chain_seed = episode_seed(seed, 1);
    let chain = ChainState::new(prep.schedule, prep.cfg.delay_prob, chain_seed);

    let prior: Vec<f64> = (0..prep.spec.n_states())
        .map(|s| prep.spec.prior(s))
        .collect();
    let state = agents.categorical(&prior);

    let ep = Episode {
        prep,
        state,
        agents,
        chain,
        index,
    };
    match (&prep.cfg.protocol, &prep.contest) {
        (ProtocolMode::None, None) => ep.benchmark(),
        (ProtocolMode::None, Some(_)) => ep.contest_unprotected(),
        (ProtocolMode::Plain, None) => ep.plain_protocol(),
        (ProtocolMode::Plain, Some(_)) => ep.contest_protected(),
        (
            ProtocolMode::Obfuscated {
                replicas,
                observation_prob,
            },
            _,
        ) => {
            let (replicas, observation_prob) = (*replicas, *observation_prob);
            ep.obfuscated(replicas, observation_prob)
        }
    }
}

/// Per-actor discounted accounting. The reference block is the actor's
/// first inclusion; a fee or benefit landing `k` blocks later is scaled by
/// `beta^k`.
struct Ledger {
    addr: Address,
    first_block: Option<u64>,
    entries: Vec<(u64, f64)>,
}

impl Ledger {
    fn new(addr: Address) -> Self {
        Self {
            addr,
            first_block: None,
            entries: Vec::new(),
        }
    }

    fn charge(&mut self, block: u64, fee: f64) {
        if self.first_block.is_none() {
            self.first_block = Some(block);
        }
        self.entries.push((block, -fee));
    }

    fn credit(&mut self, block: u64, amount: f64) {
        self.entries.push((block, amount));
    }

    fn settle(&self, beta: f64) -> f64 {
        let Some(first) = self.first_block else {
            return 0.0;
        };
        self.entries
            .iter()
            .map(|(block, amount)| amount * beta.powi((block - first) as i32))
            .fold(0.0, |acc, x| acc + x)
    }

    fn fees(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(_, a)| *a < 0.0)
            .map(|(_, a)| -a)
            .fold(0.0, |acc, x| acc + x)
    }
}

/// Scan the chain and charge each actor's included transactions.
fn charge_from_chain(chain: &ChainState, ledgers: &mut [&mut Ledger]) {
    for block in chain.blocks() {
        for tx in &block.txs {
            for ledger in ledgers.iter_mut() {
                if tx.sender == ledger.addr {
                    ledger.charge(block.number, tx.fee);
                }
            }
        }
    }
}

struct Episode<'a> {
    prep: &'a PreparedScenario,
    state: usize,
    agents: SimRng,
    chain: ChainState,
    index: u64,
}

const BLOCK_CAP: u64 = 10_000;

impl Episode<'_> {
    fn label(&self, m: usize) -> String {
        self.prep.spec.message_label(m).to_string()
    }

    /// Build blocks until the mempool drains.
    fn run_chain(&mut self) {
        let mut built = 0u64;
        while !self.chain.mempool().is_empty() {
            self.chain.build_block();
            built += 1;
            assert!(built < BLOCK_CAP, "episode did not settle; delay too high");
        }
    }

    fn executed_by(&self, target: &Address, addr: &Address) -> Option<u64> {
        self.chain
            .executed(target)
            .filter(|e| e.sender == *addr)
            .map(|e| e.block)
    }

    fn finish(
        self,
        target: Address,
        honest: Ledger,
        attackers: Vec<Ledger>,
        a_action: Option<usize>,
        b_action: Option<usize>,
        attack: bool,
        realized_tau: Option<f64>,
    ) -> EpisodeTrace {
        let beta = self.prep.spec.costs.beta;
        let front_run = attackers
            .iter()
            .any(|l| self.executed_by(&target, &l.addr).is_some());
        let attacker_payoffs: Vec<f64> = attackers.iter().map(|l| l.settle(beta)).collect();
        let attacker_fees: Vec<f64> = attackers.iter().map(|l| l.fees()).collect();
        let result = EpisodeResult {
            episode: self.index,
            state: self.state,
            a_action,
            b_action,
            attack,
            front_run,
            payoff_a: honest.settle(beta),
            payoff_b: attacker_payoffs.iter().fold(0.0, |acc, x| acc + x),
            fees_a: honest.fees(),
            fees_b: attacker_fees.iter().fold(0.0, |acc, x| acc + x),
            attacker_payoffs,
            attacker_fees,
            realized_tau,
        };
        EpisodeTrace {
            result,
            events: self.chain.events().to_vec(),
            honest: honest.addr.to_hex(),
            attackers: attackers.iter().map(|l| l.addr.to_hex()).collect(),
        }
    }

    // ---------------------------------------------------------------
    // Baseline: direct messages, single attacker
    // ---------------------------------------------------------------

    fn benchmark(mut self) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let attacker_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut attacker = Ledger::new(attacker_addr);

        let a_action = self.prep.benchmark.a_action[s];
        let b_action = self.prep.benchmark.b_action[s];

        let mut victim_tx: Option<TxId> = None;
        if let Some(am) = a_action {
            victim_tx = Some(
                self.chain
                    .submit_direct(target, self.label(am), honest_addr, costs.c, None)
                    .expect("benchmark direct submit"),
            );
        }
        if let (Some(bm), Some(victim)) = (b_action, victim_tx) {
            self.chain
                .submit_direct(
                    target,
                    self.label(bm),
                    attacker_addr,
                    costs.f,
                    Some(FastInfo {
                        victim,
                        success_prob: costs.q,
                    }),
                )
                .expect("benchmark fast submit");
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut attacker]);
        if let Some(am) = a_action {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
        }
        if let (Some(bm), Some(am)) = (b_action, a_action) {
            if let Some(block) = self.executed_by(&target, &attacker_addr) {
                attacker.credit(block, spec.payoff_b(bm, am, s));
            }
        }

        let attack = b_action.is_some();
        self.finish(
            target,
            honest,
            vec![attacker],
            a_action,
            b_action,
            attack,
            None,
        )
    }

    // ---------------------------------------------------------------
    // Plain commit-reveal, single attacker
    // ---------------------------------------------------------------

    fn plain_protocol(mut self) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let s = self.state;
        let am = spec.best_message(s).expect("validated spec");
        let a_protected = self.prep.policy.requires_protocol(spec.message_label(am));
        if !a_protected {
            return self.partial_direct_side(am);
        }

        let costs = spec.costs;
        let counter = spec.best_counter(s).expect("validated spec");
        let counter_protected = self
            .prep
            .policy
            .requires_protocol(spec.message_label(counter));
        if !counter_protected {
            // The honest message needs two phases but the counter does not:
            // the attacker just waits for the reveal and races it directly.
            return self.partial_exposed_reveal(am, counter);
        }

        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let attacker_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut attacker = Ledger::new(attacker_addr);

        // Fully protected interaction: play the solved two-phase profile,
        // or the restricted guess when only a subset is protected.
        let (a_prob, b_commit): (f64, Vec<f64>) = match &self.prep.policy {
            MessagePolicy::Subset(_) => {
                let p = self.prep.protocol.as_ref().expect("protocol prepared");
                match &p.restricted {
                    Some(r) if r.regime == Regime::GuessingEasy => {
                        let mut x = vec![0.0; spec.n_messages()];
                        x[r.best_commit] = 1.0;
                        (self.partial_protocol_participation(am, r.best_commit), x)
                    }
                    _ => (
                        if analysis::honest_protocol_payoff(spec, s).expect("valid state") > 0.0 {
                            1.0
                        } else {
                            0.0
                        },
                        vec![0.0; spec.n_messages()],
                    ),
                }
            }
            _ => {
                let p = self.prep.protocol.as_ref().expect("protocol prepared");
                match &p.played {
                    Some(profile) => (profile.a_participation[s], profile.b_commit.clone()),
                    None => (0.0, vec![0.0; spec.n_messages()]),
                }
            }
        };

        let a_in = a_prob > 0.0 && (a_prob >= 1.0 || self.agents.bernoulli(a_prob));
        let mut b_msg: Option<usize> = None;

        if a_in {
            let digest = commit_digest(&honest_addr, spec.message_label(am), None);
            self.chain
                .submit_commit(target, digest, honest_addr, costs.c, None)
                .expect("commit window open at episode start");

            // The observer sees the pending commitment and may pay for a
            // blind guess of his own in the same window.
            let commit_prob: f64 = b_commit.iter().sum();
            if commit_prob > 0.0 && (commit_prob >= 1.0 || self.agents.bernoulli(commit_prob)) {
                let conditional: Vec<f64> = b_commit.iter().map(|p| p / commit_prob).collect();
                let guess = self.agents.categorical(&conditional);
                b_msg = Some(guess);
                let digest = commit_digest(&attacker_addr, spec.message_label(guess), None);
                self.chain
                    .submit_commit(target, digest, attacker_addr, costs.c, None)
                    .expect("commit window open at episode start");
            }

            // Wait for the commitment to land, then reveal.
            let mut built = 0u64;
            while self
                .chain
                .target(&target)
                .map(|t| t.commits.is_empty())
                .unwrap_or(true)
            {
                self.chain.build_block();
                built += 1;
                assert!(built < BLOCK_CAP, "commit never included");
            }
            let a_reveal = self
                .chain
                .submit_reveal(target, self.label(am), honest_addr, None, costs.c, None)
                .expect("reveal submit");

            // The attacker reads the pending reveal and front-runs exactly
            // when his committed guess is worth the fast fee.
            if let Some(guess) = b_msg {
                if costs.q * spec.payoff_b(guess, am, s) > costs.f {
                    self.chain
                        .submit_reveal(
                            target,
                            self.label(guess),
                            attacker_addr,
                            None,
                            costs.f,
                            Some(FastInfo {
                                victim: a_reveal,
                                success_prob: costs.q,
                            }),
                        )
                        .expect("fast reveal submit");
                }
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut attacker]);
        if a_in {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            if let Some(guess) = b_msg {
                if let Some(block) = self.executed_by(&target, &attacker_addr) {
                    attacker.credit(block, spec.payoff_b(guess, am, s));
                }
            }
        }

        let attack = b_msg.is_some();
        self.finish(
            target,
            honest,
            vec![attacker],
            a_in.then_some(am),
            b_msg,
            attack,
            None,
        )
    }

    /// Participation rule for a protected honest message facing a restricted
    /// blind guess: enter when the expected two-phase value is positive.
    fn partial_protocol_participation(&self, am: usize, guess: usize) -> f64 {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let pa = spec.payoff_a(am, s);
        let attacked = costs.q * spec.payoff_b(guess, am, s) > costs.f;
        let keep = if attacked { 1.0 - costs.q } else { 1.0 };
        if -costs.c + costs.beta * (keep * pa - costs.c) > 0.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Partial protection, honest message outside the protected set: the
    /// interaction is the plain baseline for this state (the attacker's
    /// best counter may or may not be gated).
    fn partial_direct_side(mut self, am: usize) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let counter = spec.best_counter(s).expect("validated spec");
        let counter_protected = self
            .prep
            .policy
            .requires_protocol(spec.message_label(counter));

        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let attacker_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut attacker = Ledger::new(attacker_addr);

        // A counter gated behind the protocol cannot chase an observed
        // direct message: it would need a commitment in an earlier block.
        let b_would = !counter_protected && costs.q * spec.benefit_b(s).expect("valid") > costs.f;
        let a_sends = if b_would {
            (1.0 - costs.q) * spec.payoff_a(am, s) > costs.c
        } else {
            spec.payoff_a(am, s) > costs.c
        };

        if a_sends {
            // Direct traffic needs an open block.
            let mut built = 0u64;
            while !self
                .prep
                .schedule
                .accepts_direct(self.chain.pending_block())
            {
                self.chain.build_block();
                built += 1;
                assert!(built < BLOCK_CAP, "no open block for direct traffic");
            }
            let victim = self
                .chain
                .submit_direct(target, self.label(am), honest_addr, costs.c, None)
                .expect("direct submit");
            if b_would {
                self.chain
                    .submit_direct(
                        target,
                        self.label(counter),
                        attacker_addr,
                        costs.f,
                        Some(FastInfo {
                            victim,
                            success_prob: costs.q,
                        }),
                    )
                    .expect("fast submit");
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut attacker]);
        if a_sends {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            if b_would {
                if let Some(block) = self.executed_by(&target, &attacker_addr) {
                    attacker.credit(block, spec.payoff_b(counter, am, s));
                }
            }
        }
        let b_action = (a_sends && b_would).then_some(counter);
        self.finish(
            target,
            honest,
            vec![attacker],
            a_sends.then_some(am),
            b_action,
            b_action.is_some(),
            None,
        )
    }

    /// Partial protection, honest message gated but the best counter free:
    /// two phases and a delay for the honest side, after which the reveal
    /// gets raced exactly as in the baseline.
    fn partial_exposed_reveal(mut self, am: usize, counter: usize) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let attacker_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut attacker = Ledger::new(attacker_addr);

        let b_would = costs.q * spec.payoff_b(counter, am, s) > costs.f;
        let keep = if b_would { 1.0 - costs.q } else { 1.0 };
        let a_in = -costs.c + costs.beta * (keep * spec.payoff_a(am, s) - costs.c) > 0.0;

        if a_in {
            let digest = commit_digest(&honest_addr, spec.message_label(am), None);
            self.chain
                .submit_commit(target, digest, honest_addr, costs.c, None)
                .expect("commit submit");
            let mut built = 0u64;
            while self
                .chain
                .target(&target)
                .map(|t| t.commits.is_empty())
                .unwrap_or(true)
            {
                self.chain.build_block();
                built += 1;
                assert!(built < BLOCK_CAP, "commit never included");
            }
            let reveal = self
                .chain
                .submit_reveal(target, self.label(am), honest_addr, None, costs.c, None)
                .expect("reveal submit");
            if b_would {
                // The un-gated counter races the reveal directly. It needs a
                // block accepting direct traffic; under a strict schedule the
                // attack is structurally impossible and the submission is
                // skipped.
                if self
                    .prep
                    .schedule
                    .accepts_direct(self.chain.pending_block())
                {
                    self.chain
                        .submit_direct(
                            target,
                            self.label(counter),
                            attacker_addr,
                            costs.f,
                            Some(FastInfo {
                                victim: reveal,
                                success_prob: costs.q,
                            }),
                        )
                        .expect("fast submit");
                }
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut attacker]);
        if a_in {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            if let Some(block) = self.executed_by(&target, &attacker_addr) {
                attacker.credit(block, spec.payoff_b(counter, am, s));
            }
        }
        let attacked = a_in
            && self
                .chain
                .blocks()
                .iter()
                .any(|b| b.txs.iter().any(|t| t.sender == attacker_addr));
        self.finish(
            target,
            honest,
            vec![attacker],
            a_in.then_some(am),
            attacked.then_some(counter),
            attacked,
            None,
        )
    }

    // ---------------------------------------------------------------
    // Obfuscated containers across replicas
    // ---------------------------------------------------------------

    fn obfuscated(mut self, replicas: u64, observation_prob: f64) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let regime = self.prep.protocol.as_ref().and_then(|p| p.regime.clone());

        // Replica 0 is the tracked interaction; the rest only contribute
        // container traffic.
        let mut targets = Vec::with_capacity(replicas as usize);
        for _ in 0..replicas {
            targets.push(
                self.chain
                    .register_target(self.prep.policy.clone(), self.prep.schedule),
            );
        }
        let tracked_target = targets[0];
        let honest_addr = self.chain.new_address();
        let attacker_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut attacker = Ledger::new(attacker_addr);

        let mut tracked_active = false;
        let mut tracked_msg = None;
        let mut containers_created = 0u64;
        for (r, target) in targets.iter().enumerate() {
            let s_r = if r == 0 {
                s
            } else {
                let prior: Vec<f64> = (0..spec.n_states()).map(|i| spec.prior(i)).collect();
                self.agents.categorical(&prior)
            };
            let observes = self.agents.bernoulli(observation_prob);
            let am = spec.best_message(s_r).expect("validated spec");
            let worthwhile = -costs.c + costs.beta * (spec.payoff_a(am, s_r) - costs.c) > 0.0;
            if !(observes && worthwhile) {
                continue;
            }
            containers_created += 1;
            let sender = if r == 0 {
                honest_addr
            } else {
                self.chain.new_address()
            };
            if r == 0 {
                tracked_active = true;
                tracked_msg = Some(am);
            }
            let digest = commit_digest(&sender, spec.message_label(am), Some(target));
            self.chain
                .submit_container_commit(digest, sender, costs.c)
                .expect("container commit window");
        }

        let tau = containers_created as f64 / replicas as f64;

        // The observer counts pending containers (senders and targets are
        // hidden) and attacks the tracked replica only when the diluted
        // guess still clears the commitment hurdle.
        let observed = self
            .chain
            .mempool()
            .iter()
            .filter(|tx| matches!(tx.kind, crate::engine::TxKind::ContainerCommit { .. }))
            .count() as u64;
        let observed_tau = observed as f64 / replicas as f64;
        let mut b_msg = None;
        if let Some(regime) = &regime {
            if observed_tau * regime.guess_value > regime.threshold {
                let guess = regime.best_commit;
                b_msg = Some(guess);
                let digest = commit_digest(
                    &attacker_addr,
                    spec.message_label(guess),
                    Some(&tracked_target),
                );
                self.chain
                    .submit_container_commit(digest, attacker_addr, costs.c)
                    .expect("container commit window");
            }
        }

        // Land the commitments.
        let mut built = 0u64;
        while self
            .chain
            .mempool()
            .iter()
            .any(|tx| matches!(tx.kind, crate::engine::TxKind::ContainerCommit { .. }))
        {
            self.chain.build_block();
            built += 1;
            assert!(built < BLOCK_CAP, "containers never included");
        }

        // Reveals: the tracked honest player points at her container.
        if tracked_active {
            let am = tracked_msg.expect("tracked message set");
            // Container ids are assigned in inclusion order; recover ours by
            // matching the stored digest.
            let digest = commit_digest(&honest_addr, spec.message_label(am), Some(&tracked_target));
            let cid = (0..)
                .map(crate::engine::ContainerId)
                .take_while(|id| self.chain.container(*id).is_some())
                .find(|id| {
                    self.chain
                        .container(*id)
                        .map(|c| c.stored_digest == digest)
                        .unwrap_or(false)
                });
            let reveal = self
                .chain
                .submit_reveal(
                    tracked_target,
                    self.label(am),
                    honest_addr,
                    cid,
                    costs.c,
                    None,
                )
                .expect("tracked reveal");

            if let Some(guess) = b_msg {
                if costs.q * spec.payoff_b(guess, am, s) > costs.f {
                    let bdigest = commit_digest(
                        &attacker_addr,
                        spec.message_label(guess),
                        Some(&tracked_target),
                    );
                    let bcid = (0..)
                        .map(crate::engine::ContainerId)
                        .take_while(|id| self.chain.container(*id).is_some())
                        .find(|id| {
                            self.chain
                                .container(*id)
                                .map(|c| c.stored_digest == bdigest)
                                .unwrap_or(false)
                        });
                    self.chain
                        .submit_reveal(
                            tracked_target,
                            self.label(guess),
                            attacker_addr,
                            bcid,
                            costs.f,
                            Some(FastInfo {
                                victim: reveal,
                                success_prob: costs.q,
                            }),
                        )
                        .expect("attacker reveal");
                }
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut attacker]);
        if tracked_active {
            let am = tracked_msg.expect("tracked message set");
            if let Some(block) = self.executed_by(&tracked_target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            if let Some(guess) = b_msg {
                if let Some(block) = self.executed_by(&tracked_target, &attacker_addr) {
                    attacker.credit(block, spec.payoff_b(guess, am, s));
                }
            }
        }

        let attack = b_msg.is_some();
        self.finish(
            tracked_target,
            honest,
            vec![attacker],
            tracked_active.then_some(tracked_msg.unwrap_or_default()),
            b_msg,
            attack,
            Some(tau),
        )
    }

    // ---------------------------------------------------------------
    // Two-attacker contest, unprotected
    // ---------------------------------------------------------------

    fn sample_spend(&mut self, who: Attacker) -> f64 {
        let contest = self.prep.contest.as_ref().expect("contest prepared");
        match contest.solution.regime {
            ContestRegime::PureStrong => match who {
                Attacker::Strong => contest.solution.solo_spend[0],
                Attacker::Weak => 0.0,
            },
            ContestRegime::MixedOverlap => {
                let dist = match who {
                    Attacker::Strong => &contest.dist_strong,
                    Attacker::Weak => &contest.dist_weak,
                };
                contest.grid[self.agents.categorical(dist)]
            }
        }
    }

    fn contest_unprotected(mut self) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let contest_spec = self.prep.contest.as_ref().expect("contest prepared").spec;
        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let strong_addr = self.chain.new_address();
        let weak_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut strong = Ledger::new(strong_addr);
        let mut weak = Ledger::new(weak_addr);

        let am = spec.unthreatened_action(s).expect("validated spec");
        let counter = spec.best_counter(s).expect("validated spec");
        let informed_value = am.map(|a| spec.payoff_b(counter, a, s)).unwrap_or(0.0);

        let mut engaged = [false, false];
        if let Some(am) = am {
            let victim = self
                .chain
                .submit_direct(target, self.label(am), honest_addr, costs.c, None)
                .expect("direct submit");
            if informed_value > 0.0 {
                // Spends drawn first (strong then weak) so the stream is
                // stable, then submitted in the same order.
                let spend_strong = self.sample_spend(Attacker::Strong);
                let spend_weak = self.sample_spend(Attacker::Weak);
                for (addr, spend, who, slot) in [
                    (strong_addr, spend_strong, Attacker::Strong, 0usize),
                    (weak_addr, spend_weak, Attacker::Weak, 1usize),
                ] {
                    if spend <= 0.0 {
                        continue;
                    }
                    engaged[slot] = true;
                    let p = contest_spec.gamma(who) * contest_spec.curve.value(spend);
                    self.chain
                        .submit_direct(
                            target,
                            self.label(counter),
                            addr,
                            spend,
                            Some(FastInfo {
                                victim,
                                success_prob: p,
                            }),
                        )
                        .expect("contest fast submit");
                }
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut strong, &mut weak]);
        if let Some(am) = am {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            for (addr, ledger) in [(strong_addr, &mut strong), (weak_addr, &mut weak)] {
                if let Some(block) = self.executed_by(&target, &addr) {
                    ledger.credit(block, contest_spec.prize);
                }
            }
        }
        let attack = engaged[0] || engaged[1];
        self.finish(
            target,
            honest,
            vec![strong, weak],
            am,
            attack.then_some(counter),
            attack,
            None,
        )
    }

    // ---------------------------------------------------------------
    // Two-attacker contest under the protocol
    // ---------------------------------------------------------------

    fn contest_protected(mut self) -> EpisodeTrace {
        let spec = &self.prep.spec;
        let costs = spec.costs;
        let s = self.state;
        let prep_contest = self.prep.contest.as_ref().expect("contest prepared");
        let contest_spec = prep_contest.spec;
        let stage_eq = prep_contest.stage.equilibria.first().cloned();
        let guess = self
            .prep
            .protocol
            .as_ref()
            .and_then(|p| p.regime.as_ref())
            .map(|r| r.best_commit)
            .unwrap_or(0);

        let target = self
            .chain
            .register_target(self.prep.policy.clone(), self.prep.schedule);
        let honest_addr = self.chain.new_address();
        let strong_addr = self.chain.new_address();
        let weak_addr = self.chain.new_address();
        let mut honest = Ledger::new(honest_addr);
        let mut strong = Ledger::new(strong_addr);
        let mut weak = Ledger::new(weak_addr);

        let am = spec.best_message(s).expect("validated spec");
        let a_in = -costs.c + costs.beta * (spec.payoff_a(am, s) - costs.c) > 0.0;

        let mut commits = [false, false];
        if a_in {
            let digest = commit_digest(&honest_addr, spec.message_label(am), None);
            self.chain
                .submit_commit(target, digest, honest_addr, costs.c, None)
                .expect("commit submit");

            // Attackers observe the commitment and play the stage
            // equilibrium; draws are consumed strong-first.
            commits = match stage_eq {
                Some(StageEquilibrium::Pure { committer }) => match committer {
                    Attacker::Strong => [true, false],
                    Attacker::Weak => [false, true],
                },
                Some(StageEquilibrium::Mixed {
                    alpha_strong,
                    alpha_weak,
                }) => {
                    let s_draw = self.agents.bernoulli(alpha_strong);
                    let w_draw = self.agents.bernoulli(alpha_weak);
                    [s_draw, w_draw]
                }
                Some(StageEquilibrium::NoCommitment) | None => [false, false],
            };
            for (addr, committed) in [(strong_addr, commits[0]), (weak_addr, commits[1])] {
                if committed {
                    let digest = commit_digest(&addr, spec.message_label(guess), None);
                    self.chain
                        .submit_commit(target, digest, addr, costs.c, None)
                        .expect("attacker commit");
                }
            }

            let mut built = 0u64;
            while self
                .chain
                .target(&target)
                .map(|t| t.commits.is_empty())
                .unwrap_or(true)
            {
                self.chain.build_block();
                built += 1;
                assert!(built < BLOCK_CAP, "commit never included");
            }
            let reveal = self
                .chain
                .submit_reveal(target, self.label(am), honest_addr, None, costs.c, None)
                .expect("reveal submit");

            // Reveal-stage spending: informed now, and each committer knows
            // whether the other entered.
            let worthwhile = spec.payoff_b(guess, am, s) > 0.0;
            if worthwhile {
                let both = commits[0] && commits[1];
                let spends = if both {
                    [
                        self.sample_spend(Attacker::Strong),
                        self.sample_spend(Attacker::Weak),
                    ]
                } else {
                    [
                        if commits[0] {
                            prep_contest.solution.solo_spend[0]
                        } else {
                            0.0
                        },
                        if commits[1] {
                            prep_contest.solution.solo_spend[1]
                        } else {
                            0.0
                        },
                    ]
                };
                for (addr, spend, who) in [
                    (strong_addr, spends[0], Attacker::Strong),
                    (weak_addr, spends[1], Attacker::Weak),
                ] {
                    if spend <= 0.0 {
                        continue;
                    }
                    let p = contest_spec.gamma(who) * contest_spec.curve.value(spend);
                    self.chain
                        .submit_reveal(
                            target,
                            self.label(guess),
                            addr,
                            None,
                            spend,
                            Some(FastInfo {
                                victim: reveal,
                                success_prob: p,
                            }),
                        )
                        .expect("attacker reveal");
                }
            }
        }
        self.run_chain();

        charge_from_chain(&self.chain, &mut [&mut honest, &mut strong, &mut weak]);
        if a_in {
            if let Some(block) = self.executed_by(&target, &honest_addr) {
                honest.credit(block, spec.payoff_a(am, s));
            }
            for (addr, ledger) in [(strong_addr, &mut strong), (weak_addr, &mut weak)] {
                if let Some(block) = self.executed_by(&target, &addr) {
                    ledger.credit(block, contest_spec.prize);
                }
            }
        }
        let attack = commits[0] || commits[1];
        self.finish(
            target,
            honest,
            vec![strong, weak],
            a_in.then_some(am),
            attack.then_some(guess),
            attack,
            None,
        )
    }
}
