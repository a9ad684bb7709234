use std::sync::Arc;

use crate::error::{Error, Result};
use crate::physics::AgentId;
use crate::sync::DelayComponents;

/// One network transmission unit. Delay components accumulate over every
/// transmission the packet experiences, across retries and hops.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub seq: u64,
    pub size_bytes: u32,
    pub src: AgentId,
    pub dst: AgentId,
    pub topic: Arc<str>,
    pub enqueue_time_ms: f64,
    pub deliver_time_ms: Option<f64>,
    pub delay: DelayComponents<f64>,
    /// Number of times this packet went on air, summed over hops.
    pub transmissions: u32,
}

impl Packet {
    pub fn new(seq: u64, size_bytes: u32) -> Result<Self> {
        if size_bytes == 0 {
            return Err(Error::invalid("packet size must be positive"));
        }
        Ok(Self {
            seq,
            size_bytes,
            src: AgentId::new(""),
            dst: AgentId::new(""),
            topic: Arc::from(""),
            enqueue_time_ms: 0.0,
            deliver_time_ms: None,
            delay: DelayComponents::zero(),
            transmissions: 0,
        })
    }

    pub fn addressed(mut self, src: AgentId, dst: AgentId, topic: Arc<str>) -> Self {
        self.src = src;
        self.dst = dst;
        self.topic = topic;
        self
    }

    /// Total accumulated delay, seconds: the four-term sum.
    pub fn total_delay_s(&self) -> f64 {
        self.delay.total()
    }
}

/// Splits a payload into `ceil(total / segment)` packets numbered from 0.
/// All packets are `segment_bytes` long except possibly the last.
pub fn chunk_payload(total_bytes: u64, segment_bytes: u32) -> Result<Vec<Packet>> {
    if total_bytes == 0 || segment_bytes == 0 {
        return Err(Error::invalid("payload and segment sizes must be positive"));
    }
    let seg = u64::from(segment_bytes);
    let count = total_bytes.div_ceil(seg);
    (0..count)
        .map(|i| {
            let size = seg.min(total_bytes - i * seg);
            Packet::new(i, size as u32)
        })
        .collect()
}
