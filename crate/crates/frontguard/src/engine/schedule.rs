//! Commit/reveal period schedules over block numbers.

use serde::{Deserialize, Serialize};

/// What a block accepts. `Open` blocks take anything, including direct
/// messages, the fast-but-risky path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockPhase {
    Commit,
    Reveal,
    Open,
}

/// Total classification of block numbers into phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodSchedule {
    /// Every block accepts everything.
    AlwaysOpen,
    /// Strict cycle starting with a commit window at block 1.
    Alternating {
        commit_blocks: u64,
        reveal_blocks: u64,
    },
    /// All blocks before `commit_until` are commit blocks, the rest reveal
    /// blocks. Fits applications with a natural deadline.
    Deadline { commit_until: u64 },
    /// Cycle of open and reveal windows: commitments and direct messages
    /// both land in the open window, reveals in the reveal window.
    OpenCommit {
        open_blocks: u64,
        reveal_blocks: u64,
    },
}

impl PeriodSchedule {
    pub fn phase(&self, block: u64) -> BlockPhase {
        match *self {
            Self::AlwaysOpen => BlockPhase::Open,
            Self::Alternating {
                commit_blocks,
                reveal_blocks,
            } => {
                let cycle = commit_blocks + reveal_blocks;
                debug_assert!(cycle > 0, "degenerate alternating schedule");
                let pos = block.saturating_sub(1) % cycle;
                if pos < commit_blocks {
                    BlockPhase::Commit
                } else {
                    BlockPhase::Reveal
                }
            }
            Self::Deadline { commit_until } => {
                if block < commit_until {
                    BlockPhase::Commit
                } else {
                    BlockPhase::Reveal
                }
            }
            Self::OpenCommit {
                open_blocks,
                reveal_blocks,
            } => {
                let cycle = open_blocks + reveal_blocks;
                debug_assert!(cycle > 0, "degenerate open-commit schedule");
                let pos = block.saturating_sub(1) % cycle;
                if pos < open_blocks {
                    BlockPhase::Open
                } else {
                    BlockPhase::Reveal
                }
            }
        }
    }

    /// Does this block accept commit transactions?
    pub fn accepts_commit(&self, block: u64) -> bool {
        matches!(self.phase(block), BlockPhase::Commit | BlockPhase::Open)
    }

    /// Does this block accept reveal transactions?
    pub fn accepts_reveal(&self, block: u64) -> bool {
        matches!(self.phase(block), BlockPhase::Reveal | BlockPhase::Open)
    }

    /// Does this block accept direct (non-protocol) messages?
    pub fn accepts_direct(&self, block: u64) -> bool {
        matches!(self.phase(block), BlockPhase::Open)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_starts_with_commit() {
        let s = PeriodSchedule::Alternating {
            commit_blocks: 1,
            reveal_blocks: 1,
        };
        assert_eq!(s.phase(1), BlockPhase::Commit);
        assert_eq!(s.phase(2), BlockPhase::Reveal);
        assert_eq!(s.phase(3), BlockPhase::Commit);
        assert_eq!(s.phase(4), BlockPhase::Reveal);
    }

    #[test]
    fn classification_is_total() {
        let schedules = [
            PeriodSchedule::AlwaysOpen,
            PeriodSchedule::Alternating {
                commit_blocks: 2,
                reveal_blocks: 3,
            },
            PeriodSchedule::Deadline { commit_until: 10 },
            PeriodSchedule::OpenCommit {
                open_blocks: 1,
                reveal_blocks: 1,
            },
        ];
        for s in schedules {
            for block in 0..100 {
                let _ = s.phase(block);
            }
        }
    }

    #[test]
    fn deadline_splits_before_and_after() {
        let s = PeriodSchedule::Deadline { commit_until: 5 };
        assert_eq!(s.phase(4), BlockPhase::Commit);
        assert_eq!(s.phase(5), BlockPhase::Reveal);
        assert!(!s.accepts_commit(5));
        assert!(s.accepts_reveal(5));
    }

    #[test]
    fn open_blocks_accept_everything() {
        let s = PeriodSchedule::AlwaysOpen;
        assert!(s.accepts_commit(7));
        assert!(s.accepts_reveal(7));
        assert!(s.accepts_direct(7));
    }
}
