//! Request-id allocation and response matching for one session.

use std::collections::HashMap;

/// Outcome of [`PendingTable::complete`].
#[derive(Debug, PartialEq, Eq)]
pub enum Completion<W> {
    /// The waiter registered for this id.
    Completed(W),
    /// The id was issued and already completed.
    Duplicate,
    /// The id was never issued on this session.
    Unknown,
}

/// Outstanding requests keyed by id. Ids start at 1 and strictly increase.
///
/// Not internally synchronized; callers serialize access per session.
#[derive(Debug)]
pub struct PendingTable<W> {
    next_id: u64,
    waiters: HashMap<u64, W>,
}

impl<W> Default for PendingTable<W> {
    fn default() -> Self {
        Self::new()
    }
}

impl<W> PendingTable<W> {
    pub fn new() -> Self {
        Self {
            next_id: 1,
            waiters: HashMap::new(),
        }
    }

    /// Allocates the next id and parks `waiter` under it.
    pub fn issue(&mut self, waiter: W) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.waiters.insert(id, waiter);
        id
    }

    /// Hands back the waiter for `id`. Duplicate and unknown ids are logged and discarded.
    pub fn complete(&mut self, id: u64) -> Completion<W> {
        match self.waiters.remove(&id) {
            Some(w) => Completion::Completed(w),
            None if id != 0 && id < self.next_id => {
                log::warn!("duplicate response for request {id}; discarded");
                Completion::Duplicate
            }
            None => {
                log::warn!("response for never-issued request {id}; discarded");
                Completion::Unknown
            }
        }
    }

    /// Removes a waiter without completing it (e.g. after a timeout).
    pub fn cancel(&mut self, id: u64) -> Option<W> {
        self.waiters.remove(&id)
    }

    /// Removes every waiter, e.g. when the connection drops.
    pub fn drain(&mut self) -> Vec<(u64, W)> {
        self.waiters.drain().collect()
    }

    pub fn is_pending(&self, id: u64) -> bool {
        self.waiters.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.waiters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waiters.is_empty()
    }

    /// The id the next [`issue`](Self::issue) will return.
    pub fn next_id(&self) -> u64 {
        self.next_id
    }
}

/// Completes the waiter matching `id` in `pending`.
pub fn match_response<W>(pending: &mut PendingTable<W>, id: u64) -> Completion<W> {
    pending.complete(id)
}
