//! What an outside observer can see.
//!
//! Redaction follows the commitment's route, not a global switch: a commit
//! sent straight to a target exposes sender, target, and digest, while a
//! containerized commit exposes only that some container with a given
//! template received something. Reveals and direct messages are always
//! public in full.

use serde::Serialize;

use super::chain::{ChainState, TxKind};
use super::commit::TemplateId;

/// One observable event, in chain order; mempool entries carry no block.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ObservableEvent {
    CommitSeen {
        block: Option<u64>,
        sender: String,
        target: String,
        digest: String,
    },
    /// A container was created from `template` and received a digest. The
    /// digest value, sender, and eventual target are withheld.
    ContainerSeen {
        block: Option<u64>,
        template: TemplateId,
    },
    RevealSeen {
        block: Option<u64>,
        sender: String,
        target: String,
        payload: String,
        via_container: bool,
    },
    DirectSeen {
        block: Option<u64>,
        sender: String,
        target: String,
        payload: String,
    },
}

impl ChainState {
    /// Everything visible to an observer: included transactions in block
    /// order, then the pending mempool in submission order.
    pub fn attacker_view(&self) -> Vec<ObservableEvent> {
        let mut out = Vec::new();
        for block in self.blocks() {
            for tx in &block.txs {
                out.push(observe(&tx.kind, &tx.sender.to_hex(), Some(block.number)));
            }
        }
        for tx in self.mempool() {
            out.push(observe(&tx.kind, &tx.sender.to_hex(), None));
        }
        out
    }
}

fn observe(kind: &TxKind, sender: &str, block: Option<u64>) -> ObservableEvent {
    match kind {
        TxKind::Commit { target, digest } => ObservableEvent::CommitSeen {
            block,
            sender: sender.to_string(),
            target: target.to_hex(),
            digest: hex::encode(digest),
        },
        TxKind::ContainerCommit { template, .. } => ObservableEvent::ContainerSeen {
            block,
            template: *template,
        },
        TxKind::Reveal {
            target,
            payload,
            container,
        } => ObservableEvent::RevealSeen {
            block,
            sender: sender.to_string(),
            target: target.to_hex(),
            payload: payload.clone(),
            via_container: container.is_some(),
        },
        TxKind::Direct { target, payload } => ObservableEvent::DirectSeen {
            block,
            sender: sender.to_string(),
            target: target.to_hex(),
            payload: payload.clone(),
        },
    }
}
