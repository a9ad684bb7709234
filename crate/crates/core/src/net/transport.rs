//! UDP (fire and forget) and TCP (go-back-N with bounded retries) over one
//! link hop.
//!
//! Both transports are written as senders that can be stepped with a
//! per-window transmission budget; the one-shot [`transmit_udp`] and
//! [`transmit_tcp`] run a sender with an unbounded budget.

use std::collections::VecDeque;

use super::channel::{delay_components, per_packet_loss_probability, LinkModel};
use super::packet::Packet;
use super::rng::{KeyedUniform, MAX_ATTEMPTS};
use crate::error::{Error, Result};

/// Decides the fate of one evaluated transmission attempt.
pub trait LossSource {
    fn is_lost(&mut self, seq: u64, attempt: u32) -> bool;
}

/// Independent losses with probability `p`, keyed by `(seq, attempt)`.
#[derive(Debug, Clone)]
pub struct BernoulliLoss {
    p: f64,
    draws: KeyedUniform,
}

impl BernoulliLoss {
    pub fn new(p: f64, seed: u64, stream: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("loss probability must lie in [0, 1], got {p}")));
        }
        Ok(Self {
            p,
            draws: KeyedUniform::new(seed, stream),
        })
    }

    pub fn probability(&self) -> f64 {
        self.p
    }
}

impl LossSource for BernoulliLoss {
    fn is_lost(&mut self, seq: u64, attempt: u32) -> bool {
        self.draws.draw(seq, attempt) < self.p
    }
}

/// Geometry of one hop as seen by the channel model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopChannel {
    pub distance_m: f64,
    pub attenuation_db: f64,
}

impl HopChannel {
    pub fn new(distance_m: f64, attenuation_db: f64) -> Result<Self> {
        if !distance_m.is_finite() || distance_m < 0.0 {
            return Err(Error::invalid(format!("hop distance must be >= 0, got {distance_m}")));
        }
        if !attenuation_db.is_finite() || attenuation_db < 0.0 {
            return Err(Error::invalid(format!(
                "hop attenuation must be >= 0, got {attenuation_db}"
            )));
        }
        Ok(Self {
            distance_m,
            attenuation_db,
        })
    }

    pub fn loss_probability(&self, model: &LinkModel<f64>) -> f64 {
        per_packet_loss_probability(model, self.distance_m, self.attenuation_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transport {
    Udp,
    Tcp { window_packets: u32, max_retries: u32 },
}

impl Transport {
    pub fn validate(&self) -> Result<()> {
        if let Transport::Tcp {
            window_packets,
            max_retries,
        } = *self
        {
            if window_packets == 0 {
                return Err(Error::invalid("TCP window must hold at least one packet"));
            }
            if max_retries >= MAX_ATTEMPTS {
                return Err(Error::invalid(format!("max_retries must be below {MAX_ATTEMPTS}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransmissionOutcome {
    pub delivered: Vec<Packet>,
    pub lost: Vec<Packet>,
    /// Go-back events: a head-of-window loss that leads to a resend.
    pub retransmission_count: u64,
    /// Frames put on air, including discarded go-back-N frames.
    pub transmissions: u64,
    /// Delay of every frame put on air, summed, seconds.
    pub airtime_delay_s: f64,
}

impl TransmissionOutcome {
    pub fn absorb(&mut self, other: TransmissionOutcome) {
        self.delivered.extend(other.delivered);
        self.lost.extend(other.lost);
        self.retransmission_count += other.retransmission_count;
        self.transmissions += other.transmissions;
        self.airtime_delay_s += other.airtime_delay_s;
    }
}

/// A link hop ready to carry frames: model plus geometry.
#[derive(Debug, Clone, Copy)]
pub struct Link<'a> {
    pub model: &'a LinkModel<f64>,
    pub channel: HopChannel,
}

impl Link<'_> {
    /// Puts one frame on air at FIFO position `depth`.
    fn transmit(&self, packet: &mut Packet, depth: u64, out: &mut TransmissionOutcome) -> Result<()> {
        let c = delay_components(self.model, packet.size_bytes, self.channel.distance_m, depth)?;
        packet.delay += c;
        packet.transmissions += 1;
        out.transmissions += 1;
        out.airtime_delay_s += c.total();
        Ok(())
    }
}

fn mark_delivered(mut p: Packet) -> Packet {
    p.deliver_time_ms = Some(p.enqueue_time_ms + p.total_delay_s() * 1000.0);
    p
}

/// Stateful sender for one hop. Keeps go-back-N progress between windows.
#[derive(Debug, Clone)]
pub struct Sender {
    transport: Transport,
    /// Pending packets with their failed-attempt counts, head first.
    queue: VecDeque<(Packet, u32)>,
}

impl Sender {
    pub fn new(transport: Transport) -> Result<Self> {
        transport.validate()?;
        Ok(Self {
            transport,
            queue: VecDeque::new(),
        })
    }

    pub fn enqueue(&mut self, packet: Packet) {
        self.queue.push_back((packet, 0));
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    /// Transmits at most `budget` frames; the FIFO depth of the first frame
    /// is 0. Returns what was resolved (delivered or given up) in this step.
    pub fn step<L: LossSource>(&mut self, budget: u64, link: &Link<'_>, loss: &mut L) -> Result<TransmissionOutcome> {
        let mut out = TransmissionOutcome::default();
        match self.transport {
            Transport::Udp => self.step_udp(budget, link, loss, &mut out)?,
            Transport::Tcp {
                window_packets,
                max_retries,
            } => self.step_tcp(budget, window_packets, max_retries, link, loss, &mut out)?,
        }
        Ok(out)
    }

    fn step_udp<L: LossSource>(
        &mut self,
        budget: u64,
        link: &Link<'_>,
        loss: &mut L,
        out: &mut TransmissionOutcome,
    ) -> Result<()> {
        let mut depth = 0;
        while depth < budget {
            let Some((mut p, _)) = self.queue.pop_front() else {
                break;
            };
            link.transmit(&mut p, depth, out)?;
            depth += 1;
            if loss.is_lost(p.seq, 0) {
                out.lost.push(p);
            } else {
                out.delivered.push(mark_delivered(p));
            }
        }
        Ok(())
    }

    fn step_tcp<L: LossSource>(
        &mut self,
        budget: u64,
        window: u32,
        max_retries: u32,
        link: &Link<'_>,
        loss: &mut L,
        out: &mut TransmissionOutcome,
    ) -> Result<()> {
        let mut depth = 0;
        while depth < budget && !self.queue.is_empty() {
            let round = (window as usize).min(self.queue.len()).min((budget - depth) as usize);
            // Frames are evaluated in order up to the first loss; the rest of
            // the round is on air but discarded by the receiver.
            let mut acked = 0;
            let mut failed = false;
            for i in 0..round {
                let (p, tries) = &mut self.queue[i];
                link.transmit(p, depth, out)?;
                depth += 1;
                if failed {
                    continue;
                }
                if loss.is_lost(p.seq, *tries) {
                    failed = true;
                    *tries += 1;
                } else {
                    acked += 1;
                }
            }
            for _ in 0..acked {
                let (p, _) = self.queue.pop_front().expect("acked frame present");
                out.delivered.push(mark_delivered(p));
            }
            if failed {
                let (_, tries) = self.queue.front().expect("failed frame present");
                if *tries > max_retries {
                    let (p, _) = self.queue.pop_front().expect("failed frame present");
                    out.lost.push(p);
                } else {
                    out.retransmission_count += 1;
                }
            }
        }
        Ok(())
    }
}

fn one_shot<L: LossSource>(
    packets: Vec<Packet>,
    transport: Transport,
    link: &Link<'_>,
    loss: &mut L,
) -> Result<TransmissionOutcome> {
    link.model.validate()?;
    let mut sender = Sender::new(transport)?;
    for p in packets {
        sender.enqueue(p);
    }
    let out = sender.step(u64::MAX, link, loss)?;
    debug_assert!(sender.is_idle());
    Ok(out)
}

/// UDP over one hop with an explicit loss source.
pub fn transmit_udp_with<L: LossSource>(
    packets: Vec<Packet>,
    link: &Link<'_>,
    loss: &mut L,
) -> Result<TransmissionOutcome> {
    one_shot(packets, Transport::Udp, link, loss)
}

/// Go-back-N TCP over one hop with an explicit loss source.
pub fn transmit_tcp_with<L: LossSource>(
    packets: Vec<Packet>,
    link: &Link<'_>,
    window_packets: u32,
    max_retries: u32,
    loss: &mut L,
) -> Result<TransmissionOutcome> {
    one_shot(
        packets,
        Transport::Tcp {
            window_packets,
            max_retries,
        },
        link,
        loss,
    )
}

/// Each packet is dropped independently with the channel's loss probability.
pub fn transmit_udp(
    packets: Vec<Packet>,
    model: &LinkModel<f64>,
    channel: HopChannel,
    seed: u64,
) -> Result<TransmissionOutcome> {
    let mut loss = BernoulliLoss::new(channel.loss_probability(model), seed, 0)?;
    transmit_udp_with(packets, &Link { model, channel }, &mut loss)
}

/// Go-back-N: a lost frame is resent together with everything after it;
/// after `max_retries` resends the frame is given up as lost.
pub fn transmit_tcp(
    packets: Vec<Packet>,
    model: &LinkModel<f64>,
    channel: HopChannel,
    window_packets: u32,
    max_retries: u32,
    seed: u64,
) -> Result<TransmissionOutcome> {
    let mut loss = BernoulliLoss::new(channel.loss_probability(model), seed, 0)?;
    transmit_tcp_with(
        packets,
        &Link { model, channel },
        window_packets,
        max_retries,
        &mut loss,
    )
}
