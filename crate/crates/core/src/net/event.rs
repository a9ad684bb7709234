//! Deterministic event queue: ordered by timestamp, ties broken FIFO.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug)]
struct Entry<E> {
    time_ms: f64,
    order: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time_ms
            .total_cmp(&other.time_ms)
            .then(self.order.cmp(&other.order))
    }
}

/// Pending events keyed by `(timestamp_ms, insertion counter)`.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    next_order: u64,
    now_ms: f64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_order: 0,
            now_ms: 0.0,
        }
    }

    /// Current queue clock: the horizon of the last `run_until`.
    pub fn now_ms(&self) -> f64 {
        self.now_ms
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn peek_time_ms(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(e)| e.time_ms)
    }

    /// Schedules `event` at `time_ms`; the past is off limits.
    pub fn schedule(&mut self, time_ms: f64, event: E) -> Result<()> {
        if !time_ms.is_finite() || time_ms < self.now_ms {
            return Err(Error::invalid(format!(
                "cannot schedule at {time_ms} ms, queue clock is {} ms",
                self.now_ms
            )));
        }
        let order = self.next_order;
        self.next_order += 1;
        self.heap.push(Reverse(Entry { time_ms, order, event }));
        Ok(())
    }

    /// Pops every event with timestamp `<= t_end_ms` in order and moves the
    /// clock to `t_end_ms`.
    pub fn run_until(&mut self, t_end_ms: f64) -> Result<Vec<(f64, E)>> {
        if !t_end_ms.is_finite() || t_end_ms < self.now_ms {
            return Err(Error::invalid(format!(
                "run_until({t_end_ms}) is behind the queue clock {}",
                self.now_ms
            )));
        }
        let mut out = Vec::new();
        while self.peek_time_ms().is_some_and(|t| t <= t_end_ms) {
            let Reverse(e) = self.heap.pop().expect("peeked");
            out.push((e.time_ms, e.event));
        }
        self.now_ms = t_end_ms;
        Ok(out)
    }
}
