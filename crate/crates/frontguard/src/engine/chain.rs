//! Chain state: mempool, block building, commitment storage, execution.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use super::commit::{
    commit_digest, Address, ContainerContract, ContainerId, Digest32, TemplateId, ADDRESS_LEN,
};
use super::schedule::{BlockPhase, PeriodSchedule};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TxId(pub u64);

/// What a transaction does when included.
#[derive(Debug, Clone, PartialEq)]
pub enum TxKind {
    /// Store a digest directly at a target contract.
    Commit { target: Address, digest: Digest32 },
    /// Deploy a container from a template and store a digest in it.
    ContainerCommit {
        template: TemplateId,
        digest: Digest32,
    },
    /// Reveal a payload at a target, optionally pointing at a container.
    Reveal {
        target: Address,
        payload: String,
        container: Option<ContainerId>,
    },
    /// Plain message straight to the target.
    Direct { target: Address, payload: String },
}

/// Fast-lane ordering info: which pending transaction this one races, and
/// the probability of landing in front of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastInfo {
    pub victim: TxId,
    pub success_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PendingTx {
    pub id: TxId,
    pub sender: Address,
    pub fee: f64,
    pub kind: TxKind,
    pub fast: Option<FastInfo>,
    pub submitted_block: u64,
}

/// Which payloads a target accepts only through the commit-reveal path.
#[derive(Debug, Clone, PartialEq)]
pub enum MessagePolicy {
    AllDirect,
    AllProtocol,
    Subset(BTreeSet<String>),
}

impl MessagePolicy {
    pub fn requires_protocol(&self, payload: &str) -> bool {
        match self {
            Self::AllDirect => false,
            Self::AllProtocol => true,
            Self::Subset(set) => set.contains(payload),
        }
    }
}

/// A digest stored at a target contract.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitRecord {
    pub digest: Digest32,
    pub received_block: u64,
    /// Who submitted the commit transaction. Diagnostic only: validity is
    /// decided by the digest preimage, never by this field.
    pub submitter: Address,
}

/// The single execution a target ever performs.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub payload: String,
    pub sender: Address,
    pub block: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetContract {
    pub address: Address,
    pub protocol_messages: MessagePolicy,
    pub schedule: PeriodSchedule,
    pub commits: Vec<CommitRecord>,
    pub executed: Option<Execution>,
}

/// Why a reveal or direct message did not execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RejectReason {
    NoCommit,
    DigestMismatch,
    /// A stored digest matches this payload under a different sender.
    WrongSender,
    /// Container commit not strictly older than the executing block.
    TimestampNotPrior,
    TemplateMismatch,
    AlreadyExecuted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RevealCheck {
    Valid,
    Invalid(RejectReason),
}

/// A reveal as the verifier sees it.
#[derive(Debug, Clone, PartialEq)]
pub struct RevealMessage {
    pub payload: String,
    pub sender: Address,
    pub container_pointer: Option<ContainerId>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecutionStatus {
    /// Commit stored; nothing to execute.
    Recorded,
    Executed,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncludedTx {
    pub id: TxId,
    pub sender: Address,
    pub fee: f64,
    pub kind: TxKind,
    pub status: ExecutionStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub number: u64,
    pub txs: Vec<IncludedTx>,
}

/// One line of the episode event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEvent {
    pub block: u64,
    pub kind: String,
    pub actor: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
    pub fee: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("block {block} is in {phase:?}, commit not accepted")]
    PeriodViolation { block: u64, phase: BlockPhase },
    #[error("unknown target contract {0}")]
    UnknownTarget(Address),
}

/// The simulated ledger an episode mutates.
///
/// Deterministic given its seed: mempool scan order, delay draws, and
/// ordering draws all consume the RNG in a fixed sequence.
#[derive(Debug, Clone)]
pub struct ChainState {
    current_block: u64,
    /// Governs container commits, which have no target to consult.
    chain_schedule: PeriodSchedule,
    delay_prob: f64,
    rng: SimRng,
    next_tx: u64,
    next_container: u64,
    mempool: Vec<PendingTx>,
    blocks: Vec<Block>,
    targets: BTreeMap<Address, TargetContract>,
    containers: BTreeMap<ContainerId, ContainerContract>,
    known_addresses: BTreeSet<Address>,
    canonical_template: TemplateId,
    events: Vec<LogEvent>,
    fees: BTreeMap<Address, f64>,
}

/// The template every honest container deployment uses.
pub const CANONICAL_TEMPLATE: TemplateId = TemplateId(1);

impl ChainState {
    pub fn new(schedule: PeriodSchedule, delay_prob: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&delay_prob), "delay_prob in [0, 1]");
        Self {
            current_block: 0,
            chain_schedule: schedule,
            delay_prob,
            rng: SimRng::new(seed),
            next_tx: 0,
            next_container: 0,
            mempool: Vec::new(),
            blocks: Vec::new(),
            targets: BTreeMap::new(),
            containers: BTreeMap::new(),
            known_addresses: BTreeSet::new(),
            canonical_template: CANONICAL_TEMPLATE,
            events: Vec::new(),
            fees: BTreeMap::new(),
        }
    }

    pub fn current_block(&self) -> u64 {
        self.current_block
    }

    /// The block number the next `build_block` call will produce.
    pub fn pending_block(&self) -> u64 {
        self.current_block + 1
    }

    pub fn canonical_template(&self) -> TemplateId {
        self.canonical_template
    }

    /// Sample a fresh address. A collision within an episode is an engine
    /// fault, not a recoverable condition.
    pub fn new_address(&mut self) -> Address {
        let addr = Address::from_bytes(self.rng.bytes::<ADDRESS_LEN>());
        assert!(
            self.known_addresses.insert(addr),
            "address collision within an episode"
        );
        addr
    }

    /// Register an externally chosen address (test vectors, replays).
    pub fn adopt_address(&mut self, addr: Address) {
        self.known_addresses.insert(addr);
    }

    pub fn register_target(
        &mut self,
        protocol_messages: MessagePolicy,
        schedule: PeriodSchedule,
    ) -> Address {
        let address = self.new_address();
        self.targets.insert(
            address,
            TargetContract {
                address,
                protocol_messages,
                schedule,
                commits: Vec::new(),
                executed: None,
            },
        );
        address
    }

    pub fn target(&self, address: &Address) -> Option<&TargetContract> {
        self.targets.get(address)
    }

    pub fn executed(&self, address: &Address) -> Option<&Execution> {
        self.targets.get(address).and_then(|t| t.executed.as_ref())
    }

    pub fn container(&self, id: ContainerId) -> Option<&ContainerContract> {
        self.containers.get(&id)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn mempool(&self) -> &[PendingTx] {
        &self.mempool
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    /// Total fees debited from `addr` so far.
    pub fn fees_paid(&self, addr: &Address) -> f64 {
        self.fees.get(addr).copied().unwrap_or(0.0)
    }

    pub fn total_fees(&self) -> f64 {
        self.fees.values().sum()
    }

    /// Line-delimited JSON rendering of the event log.
    pub fn event_log_json(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    fn alloc_tx(&mut self) -> TxId {
        let id = TxId(self.next_tx);
        self.next_tx += 1;
        id
    }

    /// Queue a commit aimed straight at a target contract. Rejected when
    /// the upcoming block does not accept commits.
    pub fn submit_commit(
        &mut self,
        target: Address,
        digest: Digest32,
        sender: Address,
        fee: f64,
        fast: Option<FastInfo>,
    ) -> Result<TxId, EngineError> {
        let schedule = self
            .targets
            .get(&target)
            .ok_or(EngineError::UnknownTarget(target))?
            .schedule;
        let block = self.pending_block();
        if !schedule.accepts_commit(block) {
            return Err(EngineError::PeriodViolation {
                block,
                phase: schedule.phase(block),
            });
        }
        Ok(self.push_tx(sender, fee, TxKind::Commit { target, digest }, fast))
    }

    /// Queue a container deployment carrying a commit, using the canonical
    /// template.
    pub fn submit_container_commit(
        &mut self,
        digest: Digest32,
        sender: Address,
        fee: f64,
    ) -> Result<TxId, EngineError> {
        self.submit_container_commit_with_template(digest, sender, fee, self.canonical_template)
    }

    /// Same, but with an attacker-chosen template.
    pub fn submit_container_commit_with_template(
        &mut self,
        digest: Digest32,
        sender: Address,
        fee: f64,
        template: TemplateId,
    ) -> Result<TxId, EngineError> {
        let block = self.pending_block();
        if !self.chain_schedule.accepts_commit(block) {
            return Err(EngineError::PeriodViolation {
                block,
                phase: self.chain_schedule.phase(block),
            });
        }
        Ok(self.push_tx(
            sender,
            fee,
            TxKind::ContainerCommit { template, digest },
            None,
        ))
    }

    /// Queue a reveal. Reveals wait in the mempool until a block that
    /// accepts them.
    pub fn submit_reveal(
        &mut self,
        target: Address,
        payload: String,
        sender: Address,
        container: Option<ContainerId>,
        fee: f64,
        fast: Option<FastInfo>,
    ) -> Result<TxId, EngineError> {
        if !self.targets.contains_key(&target) {
            return Err(EngineError::UnknownTarget(target));
        }
        Ok(self.push_tx(
            sender,
            fee,
            TxKind::Reveal {
                target,
                payload,
                container,
            },
            fast,
        ))
    }

    /// Queue a plain message. Included only in blocks that accept direct
    /// traffic.
    pub fn submit_direct(
        &mut self,
        target: Address,
        payload: String,
        sender: Address,
        fee: f64,
        fast: Option<FastInfo>,
    ) -> Result<TxId, EngineError> {
        if !self.targets.contains_key(&target) {
            return Err(EngineError::UnknownTarget(target));
        }
        Ok(self.push_tx(sender, fee, TxKind::Direct { target, payload }, fast))
    }

    fn push_tx(&mut self, sender: Address, fee: f64, kind: TxKind, fast: Option<FastInfo>) -> TxId {
        self.known_addresses.insert(sender);
        let id = self.alloc_tx();
        let submitted_block = self.pending_block();
        self.mempool.push(PendingTx {
            id,
            sender,
            fee,
            kind,
            fast,
            submitted_block,
        });
        id
    }

    fn schedule_for(&self, kind: &TxKind) -> PeriodSchedule {
        match kind {
            TxKind::Commit { target, .. }
            | TxKind::Reveal { target, .. }
            | TxKind::Direct { target, .. } => self
                .targets
                .get(target)
                .map(|t| t.schedule)
                .unwrap_or(self.chain_schedule),
            TxKind::ContainerCommit { .. } => self.chain_schedule,
        }
    }

    fn eligible(&self, tx: &PendingTx, block: u64) -> bool {
        let schedule = self.schedule_for(&tx.kind);
        match tx.kind {
            TxKind::Commit { .. } | TxKind::ContainerCommit { .. } => {
                schedule.accepts_commit(block)
            }
            TxKind::Reveal { .. } => schedule.accepts_reveal(block),
            TxKind::Direct { .. } => schedule.accepts_direct(block),
        }
    }

    /// Build the next block.
    ///
    /// Selection: pending transactions are scanned in submission order;
    /// phase-ineligible ones wait, and each eligible regular transaction
    /// independently stays behind one more block with probability
    /// `delay_prob` (fast transactions are never delayed). Ordering: base
    /// order is submission order; for each group of fast transactions racing
    /// the same victim, the biggest spender is the contender and one draw
    /// against its success probability places it just before or just after
    /// the victim; the rest file in behind. One draw is consumed per fast
    /// transaction, in transaction order, so the stream is reproducible.
    pub fn build_block(&mut self) -> &Block {
        self.current_block += 1;
        let number = self.current_block;

        // Selection pass.
        let mut selected: Vec<PendingTx> = Vec::new();
        let mut remaining: Vec<PendingTx> = Vec::new();
        for tx in std::mem::take(&mut self.mempool) {
            if !self.eligible(&tx, number) {
                remaining.push(tx);
                continue;
            }
            if tx.fast.is_none() && self.delay_prob > 0.0 && self.rng.bernoulli(self.delay_prob) {
                remaining.push(tx);
                continue;
            }
            selected.push(tx);
        }
        self.mempool = remaining;

        // Ordering pass: draw once per fast transaction, in tx order.
        let mut success: BTreeMap<TxId, bool> = BTreeMap::new();
        for tx in &selected {
            if let Some(fast) = &tx.fast {
                success.insert(tx.id, self.rng.bernoulli(fast.success_prob));
            }
        }
        let order = order_block(&selected, &success);

        // Execution pass.
        let mut included = Vec::with_capacity(order.len());
        for idx in order {
            let tx = selected[idx].clone();
            let status = self.apply_tx(&tx, number);
            *self.fees.entry(tx.sender).or_insert(0.0) += tx.fee;
            self.log_inclusion(&tx, number, &status);
            included.push(IncludedTx {
                id: tx.id,
                sender: tx.sender,
                fee: tx.fee,
                kind: tx.kind,
                status,
            });
        }

        self.blocks.push(Block {
            number,
            txs: included,
        });
        self.blocks.last().expect("just pushed")
    }

    fn apply_tx(&mut self, tx: &PendingTx, block: u64) -> ExecutionStatus {
        match &tx.kind {
            TxKind::Commit { target, digest } => {
                let t = self.targets.get_mut(target).expect("checked at submit");
                t.commits.push(CommitRecord {
                    digest: *digest,
                    received_block: block,
                    submitter: tx.sender,
                });
                ExecutionStatus::Recorded
            }
            TxKind::ContainerCommit { template, digest } => {
                let id = ContainerId(self.next_container);
                self.next_container += 1;
                self.containers.insert(
                    id,
                    ContainerContract {
                        id,
                        code_template_id: *template,
                        stored_digest: *digest,
                        timestamp_block: block,
                    },
                );
                ExecutionStatus::Recorded
            }
            TxKind::Reveal {
                target,
                payload,
                container,
            } => {
                let reveal = RevealMessage {
                    payload: payload.clone(),
                    sender: tx.sender,
                    container_pointer: *container,
                };
                self.try_execute(target, &reveal, block)
            }
            TxKind::Direct { target, payload } => {
                let requires = self
                    .targets
                    .get(target)
                    .expect("checked at submit")
                    .protocol_messages
                    .requires_protocol(payload);
                if requires {
                    // Protocol-gated payload arriving without any commit
                    // context can never execute.
                    ExecutionStatus::Rejected(RejectReason::NoCommit)
                } else {
                    self.execute_at(target, payload, tx.sender, block)
                }
            }
        }
    }

    fn try_execute(
        &mut self,
        target_addr: &Address,
        reveal: &RevealMessage,
        block: u64,
    ) -> ExecutionStatus {
        let target = self.targets.get(target_addr).expect("checked at submit");
        if target.protocol_messages.requires_protocol(&reveal.payload) {
            match self.verify_reveal_at(target_addr, reveal, block) {
                RevealCheck::Valid => {
                    self.execute_at(target_addr, &reveal.payload.clone(), reveal.sender, block)
                }
                RevealCheck::Invalid(reason) => ExecutionStatus::Rejected(reason),
            }
        } else {
            // Outside the protected set the payload executes on arrival.
            self.execute_at(target_addr, &reveal.payload.clone(), reveal.sender, block)
        }
    }

    fn execute_at(
        &mut self,
        target_addr: &Address,
        payload: &str,
        sender: Address,
        block: u64,
    ) -> ExecutionStatus {
        let target = self
            .targets
            .get_mut(target_addr)
            .expect("checked at submit");
        if target.executed.is_some() {
            return ExecutionStatus::Rejected(RejectReason::AlreadyExecuted);
        }
        target.executed = Some(Execution {
            payload: payload.to_string(),
            sender,
            block,
        });
        self.events.push(LogEvent {
            block,
            kind: "execute".to_string(),
            actor: sender.to_hex(),
            target: Some(target_addr.to_hex()),
            digest: None,
            payload: Some(payload.to_string()),
            fee: 0.0,
        });
        ExecutionStatus::Executed
    }

    /// Check a reveal against the chain as of `pending_block`.
    pub fn verify_reveal(&self, target: &Address, reveal: &RevealMessage) -> RevealCheck {
        self.verify_reveal_at(target, reveal, self.pending_block())
    }

    /// Validity conditions: the stored digest must equal the digest of
    /// (reveal sender, payload[, target]), and the commitment must sit in a
    /// strictly earlier block than the executing one: a commit and its
    /// reveal can never share a block, which is what defeats post-hoc
    /// commitments crafted after seeing a victim's pending message.
    /// Containerized commits must additionally come from the canonical
    /// template.
    pub fn verify_reveal_at(
        &self,
        target_addr: &Address,
        reveal: &RevealMessage,
        at_block: u64,
    ) -> RevealCheck {
        let Some(target) = self.targets.get(target_addr) else {
            return RevealCheck::Invalid(RejectReason::NoCommit);
        };
        match reveal.container_pointer {
            Some(cid) => {
                let Some(container) = self.containers.get(&cid) else {
                    return RevealCheck::Invalid(RejectReason::NoCommit);
                };
                if container.code_template_id != self.canonical_template {
                    return RevealCheck::Invalid(RejectReason::TemplateMismatch);
                }
                let expected = commit_digest(&reveal.sender, &reveal.payload, Some(target_addr));
                if container.stored_digest != expected {
                    return RevealCheck::Invalid(self.diagnose_mismatch(
                        &[container.stored_digest],
                        &reveal.payload,
                        &reveal.sender,
                        Some(target_addr),
                    ));
                }
                if container.timestamp_block >= at_block {
                    return RevealCheck::Invalid(RejectReason::TimestampNotPrior);
                }
                RevealCheck::Valid
            }
            None => {
                if target.commits.is_empty() {
                    return RevealCheck::Invalid(RejectReason::NoCommit);
                }
                let expected = commit_digest(&reveal.sender, &reveal.payload, None);
                let matching: Vec<&CommitRecord> = target
                    .commits
                    .iter()
                    .filter(|r| r.digest == expected)
                    .collect();
                if matching.is_empty() {
                    let stored: Vec<Digest32> = target.commits.iter().map(|r| r.digest).collect();
                    return RevealCheck::Invalid(self.diagnose_mismatch(
                        &stored,
                        &reveal.payload,
                        &reveal.sender,
                        None,
                    ));
                }
                if matching.iter().any(|r| r.received_block < at_block) {
                    RevealCheck::Valid
                } else {
                    RevealCheck::Invalid(RejectReason::TimestampNotPrior)
                }
            }
        }
    }

    /// Distinguish a replayed digest (bound to someone else's address) from
    /// a plain mismatch. Diagnostic detail only; both are invalid.
    fn diagnose_mismatch(
        &self,
        stored: &[Digest32],
        payload: &str,
        sender: &Address,
        target: Option<&Address>,
    ) -> RejectReason {
        for other in &self.known_addresses {
            if other == sender {
                continue;
            }
            let candidate = commit_digest(other, payload, target);
            if stored.iter().any(|d| *d == candidate) {
                return RejectReason::WrongSender;
            }
        }
        RejectReason::DigestMismatch
    }

    fn log_inclusion(&mut self, tx: &PendingTx, block: u64, status: &ExecutionStatus) {
        let (kind, target, digest, payload) = match &tx.kind {
            TxKind::Commit { target, digest } => (
                "commit",
                Some(target.to_hex()),
                Some(hex::encode(digest)),
                None,
            ),
            TxKind::ContainerCommit { digest, .. } => {
                ("container_commit", None, Some(hex::encode(digest)), None)
            }
            TxKind::Reveal {
                target, payload, ..
            } => ("reveal", Some(target.to_hex()), None, Some(payload.clone())),
            TxKind::Direct { target, payload } => {
                ("direct", Some(target.to_hex()), None, Some(payload.clone()))
            }
        };
        let kind = match status {
            ExecutionStatus::Rejected(_) => format!("{kind}_rejected"),
            _ => kind.to_string(),
        };
        self.events.push(LogEvent {
            block,
            kind,
            actor: tx.sender.to_hex(),
            target,
            digest,
            payload,
            fee: tx.fee,
        });
    }
}

/// Final in-block order. Base order is submission order; each fast group's
/// biggest spender moves directly before its victim on a successful draw,
/// directly after on a failure; remaining group members file in after.
fn order_block(selected: &[PendingTx], success: &BTreeMap<TxId, bool>) -> Vec<usize> {
    let present: BTreeMap<TxId, usize> = selected
        .iter()
        .enumerate()
        .map(|(i, tx)| (tx.id, i))
        .collect();

    // Victim tx -> racing fast tx indices, in submission order.
    let mut races: BTreeMap<TxId, Vec<usize>> = BTreeMap::new();
    for (i, tx) in selected.iter().enumerate() {
        if let Some(fast) = &tx.fast {
            if present.contains_key(&fast.victim) {
                races.entry(fast.victim).or_default().push(i);
            }
        }
    }

    let mut racing: BTreeSet<usize> = BTreeSet::new();
    for group in races.values() {
        racing.extend(group.iter().copied());
    }

    let mut order = Vec::with_capacity(selected.len());
    for (i, tx) in selected.iter().enumerate() {
        if racing.contains(&i) {
            continue; // placed relative to its victim below
        }
        if let Some(group) = races.get(&tx.id) {
            // Biggest spender contends; submission order breaks fee ties.
            let winner = *group
                .iter()
                .max_by(|&&a, &&b| {
                    selected[a]
                        .fee
                        .partial_cmp(&selected[b].fee)
                        .expect("finite fees")
                        .then(b.cmp(&a))
                })
                .expect("non-empty race group");
            let won = success.get(&selected[winner].id).copied().unwrap_or(false);
            if won {
                order.push(winner);
            }
            order.push(i);
            if !won {
                order.push(winner);
            }
            for &loser in group {
                if loser != winner {
                    order.push(loser);
                }
            }
        } else {
            order.push(i);
        }
    }
    // A racer can itself be raced; the chained attacker's placement slot
    // never comes up in the loop above, so anything unplaced files in at
    // the back in submission order.
    let placed: BTreeSet<usize> = order.iter().copied().collect();
    for i in 0..selected.len() {
        if !placed.contains(&i) {
            order.push(i);
        }
    }
    debug_assert_eq!(order.len(), selected.len());
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_chain(seed: u64) -> (ChainState, Address) {
        let mut chain = ChainState::new(PeriodSchedule::AlwaysOpen, 0.0, seed);
        let target = chain.register_target(MessagePolicy::AllDirect, PeriodSchedule::AlwaysOpen);
        (chain, target)
    }

    #[test]
    fn direct_message_executes_first_wins() {
        let (mut chain, target) = open_chain(1);
        let alice = chain.new_address();
        let bob = chain.new_address();
        chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(target, "m1".into(), bob, 1.0, None)
            .unwrap();
        chain.build_block();
        let exec = chain.executed(&target).unwrap();
        assert_eq!(exec.sender, alice);
        let block = &chain.blocks()[0];
        assert_eq!(
            block.txs[1].status,
            ExecutionStatus::Rejected(RejectReason::AlreadyExecuted)
        );
    }

    #[test]
    fn fast_always_wins_at_probability_one() {
        let (mut chain, target) = open_chain(2);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let victim = chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                bob,
                2.0,
                Some(FastInfo {
                    victim,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        chain.build_block();
        assert_eq!(chain.executed(&target).unwrap().sender, bob);
    }

    #[test]
    fn fast_never_wins_at_probability_zero() {
        let (mut chain, target) = open_chain(3);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let victim = chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                bob,
                2.0,
                Some(FastInfo {
                    victim,
                    success_prob: 0.0,
                }),
            )
            .unwrap();
        chain.build_block();
        assert_eq!(chain.executed(&target).unwrap().sender, alice);
    }

    #[test]
    fn strongest_spender_contends() {
        let (mut chain, target) = open_chain(4);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let carol = chain.new_address();
        let victim = chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                bob,
                2.0,
                Some(FastInfo {
                    victim,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                carol,
                5.0,
                Some(FastInfo {
                    victim,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        chain.build_block();
        // carol outspends bob and her draw succeeds
        assert_eq!(chain.executed(&target).unwrap().sender, carol);
    }

    #[test]
    fn commit_rejected_in_reveal_period() {
        let schedule = PeriodSchedule::Alternating {
            commit_blocks: 1,
            reveal_blocks: 1,
        };
        let mut chain = ChainState::new(schedule, 0.0, 5);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let alice = chain.new_address();
        let digest = commit_digest(&alice, "m1", None);
        chain
            .submit_commit(target, digest, alice, 1.0, None)
            .unwrap();
        chain.build_block(); // block 1: commit period, commit included
        assert_eq!(
            chain.submit_commit(target, digest, alice, 1.0, None),
            Err(EngineError::PeriodViolation {
                block: 2,
                phase: BlockPhase::Reveal
            })
        );
    }

    #[test]
    fn honest_commit_reveal_round_trip() {
        let schedule = PeriodSchedule::Alternating {
            commit_blocks: 1,
            reveal_blocks: 1,
        };
        let mut chain = ChainState::new(schedule, 0.0, 6);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let alice = chain.new_address();
        let digest = commit_digest(&alice, "m1", None);
        chain
            .submit_commit(target, digest, alice, 1.0, None)
            .unwrap();
        chain.build_block();
        chain
            .submit_reveal(target, "m1".into(), alice, None, 1.0, None)
            .unwrap();
        chain.build_block();
        let exec = chain.executed(&target).unwrap();
        assert_eq!(exec.sender, alice);
        assert_eq!(exec.payload, "m1");
        assert_eq!(exec.block, 2);
    }

    #[test]
    fn copied_digest_fails_as_wrong_sender() {
        let schedule = PeriodSchedule::Alternating {
            commit_blocks: 1,
            reveal_blocks: 1,
        };
        let mut chain = ChainState::new(schedule, 0.0, 7);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let digest = commit_digest(&alice, "m1", None);
        chain
            .submit_commit(target, digest, alice, 1.0, None)
            .unwrap();
        // bob replays the very same digest from his own account
        chain.submit_commit(target, digest, bob, 1.0, None).unwrap();
        chain.build_block();
        let reveal = RevealMessage {
            payload: "m1".into(),
            sender: bob,
            container_pointer: None,
        };
        assert_eq!(
            chain.verify_reveal(&target, &reveal),
            RevealCheck::Invalid(RejectReason::WrongSender)
        );
        // alice's own reveal is still valid
        let honest = RevealMessage {
            payload: "m1".into(),
            sender: alice,
            container_pointer: None,
        };
        assert_eq!(chain.verify_reveal(&target, &honest), RevealCheck::Valid);
    }

    #[test]
    fn reveal_without_any_commit_is_no_commit() {
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 8);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let alice = chain.new_address();
        let reveal = RevealMessage {
            payload: "m1".into(),
            sender: alice,
            container_pointer: None,
        };
        assert_eq!(
            chain.verify_reveal(&target, &reveal),
            RevealCheck::Invalid(RejectReason::NoCommit)
        );
    }

    #[test]
    fn container_round_trip_and_same_block_forgery() {
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 9);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let alice = chain.new_address();
        let digest = commit_digest(&alice, "m1", Some(&target));
        chain.submit_container_commit(digest, alice, 1.0).unwrap();
        chain.build_block();
        let container = chain.container(ContainerId(0)).unwrap();
        assert_eq!(container.timestamp_block, 1);

        // Old enough: valid in block 2.
        let reveal = RevealMessage {
            payload: "m1".into(),
            sender: alice,
            container_pointer: Some(ContainerId(0)),
        };
        assert_eq!(chain.verify_reveal(&target, &reveal), RevealCheck::Valid);

        // Forgery: create + commit + reveal within one block. The container
        // lands in block 2, and a reveal executing in block 2 sees an equal
        // timestamp.
        let eve = chain.new_address();
        let forged = commit_digest(&eve, "m1", Some(&target));
        chain.submit_container_commit(forged, eve, 1.0).unwrap();
        let fr = RevealMessage {
            payload: "m1".into(),
            sender: eve,
            container_pointer: Some(ContainerId(1)),
        };
        chain
            .submit_reveal(target, "m1".into(), eve, Some(ContainerId(1)), 2.0, None)
            .unwrap();
        let block = chain.build_block();
        let reveal_status = block
            .txs
            .iter()
            .find(|tx| matches!(tx.kind, TxKind::Reveal { .. }))
            .map(|tx| tx.status.clone())
            .unwrap();
        assert_eq!(
            reveal_status,
            ExecutionStatus::Rejected(RejectReason::TimestampNotPrior)
        );
        // and verify agrees at block 2's height
        assert_eq!(
            chain.verify_reveal_at(&target, &fr, 2),
            RevealCheck::Invalid(RejectReason::TimestampNotPrior)
        );
    }

    #[test]
    fn non_canonical_template_is_rejected() {
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 10);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let eve = chain.new_address();
        let digest = commit_digest(&eve, "m1", Some(&target));
        chain
            .submit_container_commit_with_template(digest, eve, 1.0, TemplateId(99))
            .unwrap();
        chain.build_block();
        let reveal = RevealMessage {
            payload: "m1".into(),
            sender: eve,
            container_pointer: Some(ContainerId(0)),
        };
        assert_eq!(
            chain.verify_reveal(&target, &reveal),
            RevealCheck::Invalid(RejectReason::TemplateMismatch)
        );
    }

    #[test]
    fn protocol_gated_payload_cannot_go_direct() {
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 11);
        let mut gated = BTreeSet::new();
        gated.insert("m1".to_string());
        let target = chain.register_target(MessagePolicy::Subset(gated), schedule);
        let alice = chain.new_address();
        chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(target, "m2".into(), alice, 1.0, None)
            .unwrap();
        chain.build_block();
        // m1 needs the protocol and is rejected; m2 executes directly.
        let exec = chain.executed(&target).unwrap();
        assert_eq!(exec.payload, "m2");
        assert_eq!(
            chain.blocks()[0].txs[0].status,
            ExecutionStatus::Rejected(RejectReason::NoCommit)
        );
    }

    #[test]
    fn delay_holds_regular_transactions_back() {
        let (mut chain, target) = open_chain(12);
        let alice = chain.new_address();
        let mut delayed = ChainState::new(PeriodSchedule::AlwaysOpen, 1.0, 12);
        let t2 = delayed.register_target(MessagePolicy::AllDirect, PeriodSchedule::AlwaysOpen);
        let a2 = delayed.new_address();

        chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain.build_block();
        assert!(chain.executed(&target).is_some());

        delayed
            .submit_direct(t2, "m1".into(), a2, 1.0, None)
            .unwrap();
        delayed.build_block();
        // with delay probability one the message never leaves the mempool
        assert!(delayed.executed(&t2).is_none());
        assert_eq!(delayed.mempool().len(), 1);
    }

    #[test]
    fn fees_are_debited_exactly_once() {
        let (mut chain, target) = open_chain(13);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let victim = chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                bob,
                2.0,
                Some(FastInfo {
                    victim,
                    success_prob: 0.5,
                }),
            )
            .unwrap();
        chain.build_block();
        chain.build_block();
        assert_eq!(chain.fees_paid(&alice), 1.0);
        assert_eq!(chain.fees_paid(&bob), 2.0);
        assert_eq!(chain.total_fees(), 3.0);
    }

    #[test]
    fn executed_never_changes() {
        let (mut chain, target) = open_chain(14);
        let alice = chain.new_address();
        let bob = chain.new_address();
        chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        chain.build_block();
        let first = chain.executed(&target).unwrap().clone();
        chain
            .submit_direct(target, "m2".into(), bob, 1.0, None)
            .unwrap();
        chain.build_block();
        assert_eq!(chain.executed(&target).unwrap(), &first);
    }

    #[test]
    fn same_block_commit_cannot_back_a_reveal() {
        // Attack crafted entirely after seeing a victim's pending message:
        // commit plus fast reveal in the same open block. The racing reveal
        // orders ahead of the attacker's own commit, so it finds nothing;
        // the victim executes.
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 15);
        let mut gated = BTreeSet::new();
        gated.insert("steal".to_string());
        let target = chain.register_target(MessagePolicy::Subset(gated), schedule);
        let alice = chain.new_address();
        let eve = chain.new_address();
        let victim = chain
            .submit_direct(target, "claim".into(), alice, 1.0, None)
            .unwrap();
        let digest = commit_digest(&eve, "steal", None);
        chain.submit_commit(target, digest, eve, 1.0, None).unwrap();
        chain
            .submit_reveal(
                target,
                "steal".into(),
                eve,
                None,
                5.0,
                Some(FastInfo {
                    victim,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        let block = chain.build_block();
        let reveal_status = block
            .txs
            .iter()
            .find(|tx| matches!(tx.kind, TxKind::Reveal { .. }))
            .map(|tx| tx.status.clone())
            .unwrap();
        assert_eq!(
            reveal_status,
            ExecutionStatus::Rejected(RejectReason::NoCommit)
        );
        assert_eq!(chain.executed(&target).unwrap().sender, alice);
    }

    #[test]
    fn commitment_must_be_older_than_its_reveal() {
        // Even ordered after the commit, a same-block reveal is too young.
        let schedule = PeriodSchedule::AlwaysOpen;
        let mut chain = ChainState::new(schedule, 0.0, 16);
        let target = chain.register_target(MessagePolicy::AllProtocol, schedule);
        let eve = chain.new_address();
        let digest = commit_digest(&eve, "steal", None);
        chain.submit_commit(target, digest, eve, 1.0, None).unwrap();
        chain
            .submit_reveal(target, "steal".into(), eve, None, 1.0, None)
            .unwrap();
        let block = chain.build_block();
        let reveal_status = block
            .txs
            .iter()
            .find(|tx| matches!(tx.kind, TxKind::Reveal { .. }))
            .map(|tx| tx.status.clone())
            .unwrap();
        assert_eq!(
            reveal_status,
            ExecutionStatus::Rejected(RejectReason::TimestampNotPrior)
        );
        // One block later the reveal goes through.
        chain
            .submit_reveal(target, "steal".into(), eve, None, 1.0, None)
            .unwrap();
        chain.build_block();
        assert_eq!(chain.executed(&target).unwrap().sender, eve);
    }

    #[test]
    fn chained_fast_transactions_all_land() {
        // F1 races a regular message, F2 races F1: nobody falls out of the
        // block and fees are charged for all three.
        let (mut chain, target) = open_chain(19);
        let alice = chain.new_address();
        let bob = chain.new_address();
        let carol = chain.new_address();
        let victim = chain
            .submit_direct(target, "m1".into(), alice, 1.0, None)
            .unwrap();
        let f1 = chain
            .submit_direct(
                target,
                "m1".into(),
                bob,
                2.0,
                Some(FastInfo {
                    victim,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        chain
            .submit_direct(
                target,
                "m1".into(),
                carol,
                3.0,
                Some(FastInfo {
                    victim: f1,
                    success_prob: 1.0,
                }),
            )
            .unwrap();
        let block = chain.build_block();
        assert_eq!(block.txs.len(), 3);
        assert_eq!(chain.total_fees(), 6.0);
    }

    #[test]
    fn same_seed_replays_identically() {
        let run = |seed: u64| -> Vec<String> {
            let (mut chain, target) = open_chain(seed);
            let alice = chain.new_address();
            let bob = chain.new_address();
            let victim = chain
                .submit_direct(target, "m1".into(), alice, 1.0, None)
                .unwrap();
            chain
                .submit_direct(
                    target,
                    "m1".into(),
                    bob,
                    2.0,
                    Some(FastInfo {
                        victim,
                        success_prob: 0.5,
                    }),
                )
                .unwrap();
            chain.build_block();
            chain.events().iter().map(|e| format!("{e:?}")).collect()
        };
        assert_eq!(run(77), run(77));
        assert_ne!(run(77), run(78));
    }
}
