//! Executable chain model: mempool, block building with fast-message
//! ordering races, commit records (direct and containerized), reveal
//! verification, and schedule enforcement.
//!
//! Episodes own their chain; chains own their RNG. Nothing here knows about
//! equilibrium strategies: agents submit transactions and the chain orders,
//! includes, and executes them.

mod chain;
mod commit;
mod schedule;
mod view;

pub use chain::{
    Block, ChainState, EngineError, Execution, ExecutionStatus, FastInfo, IncludedTx, LogEvent,
    MessagePolicy, PendingTx, RejectReason, RevealCheck, RevealMessage, TargetContract, TxId,
    TxKind,
};
pub use commit::{commit_digest, Address, ContainerContract, ContainerId, Digest32, TemplateId};
pub use schedule::{BlockPhase, PeriodSchedule};
pub use view::ObservableEvent;
