//! Shared operation-count ceiling for every enumeration and quadrature.

use core::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_LIMIT: u64 = 1_000_000_000;

/// Counts elementary steps across all callers holding a reference.
/// Exceeding the limit is reported as an error; work is never truncated.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget { limit, used: AtomicU64::new(0) }
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used())
    }

    /// Reserve `steps` units. Fails without consuming anything if the
    /// reservation would cross the limit.
    pub fn charge(&self, steps: u64) -> Result<()> {
        let mut current = self.used.load(Ordering::Relaxed);
        loop {
            let next = current.saturating_add(steps);
            if next > self.limit {
                return Err(Error::Budget { requested: steps, used: current, limit: self.limit });
            }
            match self.used.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return Ok(()),
                Err(actual) => current = actual,
            }
        }
    }

    /// Check that `steps` more units would fit without reserving them.
    pub fn check(&self, steps: u64) -> Result<()> {
        let used = self.used();
        if used.saturating_add(steps) > self.limit {
            return Err(Error::Budget { requested: steps, used, limit: self.limit });
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(DEFAULT_LIMIT)
    }
}
