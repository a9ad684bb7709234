//! The synchronizing middleware: runs physics and network in lockstep, one
//! adapted window at a time.
//!
//! Each window:
//! 1. snapshots the world and routes every match over it,
//! 2. adapts the window to the largest publisher/subscriber speed gap,
//! 3. budgets `max(1, floor(w_a / D_t))` frames per hop and runs the transport,
//! 4. computes loss and delay for the window,
//! 5. doubles the velocity term of the next window if loss broke the threshold,
//! 6. advances the world, the window and the event queue by `w_a` and checks
//!    that all three clocks agree exactly.

use std::collections::VecDeque;

use crate::config::{ScenarioConfig, WindowAdaptation};
use crate::error::{Error, Result};
use crate::net::event::EventQueue;
use crate::net::profile::Profile;
use crate::net::transport::Transport;
use crate::net::{chunk_payload, Packet};
use crate::physics::{AgentId, World};
use crate::pubsub::{route, Architecture, FabricConfig, Match, PathSender};
use crate::sync::{
    adapt_window_with, advance_timestamp, packet_loss_probability, DelayComponents, SyncWindow, VelocityPair,
    WindowMetrics,
};

/// Loss draws for match `i`, hop `h` use stream `i * STREAMS_PER_MATCH + h`.
pub const STREAMS_PER_MATCH: u64 = 16;

/// Run parameters not tied to the world layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub transport: Transport,
    pub adaptation: WindowAdaptation,
    pub base_window_ms: f64,
    pub loss_threshold: f64,
    pub payload_bytes: u64,
    pub segment_bytes: u32,
    pub max_windows: u64,
    pub seed: u64,
}

impl RunOptions {
    pub fn from_config(config: &ScenarioConfig) -> Self {
        Self {
            transport: config.transport_mode(),
            adaptation: config.window_adaptation,
            base_window_ms: config.base_window_ms,
            loss_threshold: config.loss_threshold,
            payload_bytes: config.payload_bytes,
            segment_bytes: config.segment_bytes,
            max_windows: config.max_windows,
            seed: config.seed,
        }
    }
}

/// Progress of one publisher/subscriber match.
#[derive(Debug, Clone)]
struct Flow {
    matched: Match,
    stream_base: u64,
    unsent: VecDeque<Packet>,
    path: PathSender,
    published: u64,
    delivered: u64,
    delivered_delay: DelayComponents<f64>,
    airtime_delay_s: f64,
    retransmissions: u64,
    transmissions: u64,
}

impl Flow {
    fn is_done(&self) -> bool {
        self.unsent.is_empty() && self.path.is_idle()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub index: u64,
    pub start_time_ms: f64,
    pub adapted_ms: f64,
    /// Frames each hop may put on air in this window.
    pub budget: u64,
    /// Packets handed to the transport for the first time.
    pub admitted: u64,
    /// `packets_published` counts packets resolved (delivered or given up)
    /// in this window; `packets_delivered` the delivered ones.
    pub metrics: WindowMetrics<f64>,
    pub retransmissions: u64,
    pub transmissions: u64,
    pub threshold_exceeded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub publisher: AgentId,
    pub subscriber: AgentId,
    pub topic: String,
    pub published: u64,
    pub delivered: u64,
    pub loss_probability: f64,
    /// Mean end-to-end delay of delivered packets, seconds.
    pub pd_a_mean_s: f64,
    /// Delay of every frame put on air for this transfer, summed, seconds.
    pub pd_a_sum_s: f64,
    pub retransmissions: u64,
    pub transmissions: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub architecture: Architecture,
    pub transport: Transport,
    pub windows: Vec<WindowRecord>,
    pub pairs: Vec<PairReport>,
    /// Mean of the per-pair loss probabilities.
    pub loss_probability: f64,
    /// Mean of the per-pair mean packet delays, seconds.
    pub pd_a_mean_s: f64,
    /// Mean of the per-pair transfer delay sums, seconds.
    pub pd_a_sum_s: f64,
    pub total_windows: u64,
    pub total_retransmissions: u64,
    pub final_window_ms: f64,
    pub sim_time_ms: f64,
    pub threshold_breaches: u64,
    /// The run stopped at `max_windows` with payload still pending.
    pub cap_hit: bool,
}

/// Live co-simulation state.
#[derive(Debug)]
pub struct CosimState {
    window: SyncWindow<f64>,
    world: World<f64>,
    fabric: FabricConfig,
    profile: Profile,
    options: RunOptions,
    flows: Vec<Flow>,
    network: EventQueue<(usize, u64)>,
    observed_deliveries: u64,
    boost_next: bool,
    history: Vec<WindowRecord>,
}

impl CosimState {
    pub fn new(
        world: World<f64>,
        fabric: FabricConfig,
        matches: Vec<Match>,
        profile: Profile,
        options: RunOptions,
    ) -> Result<Self> {
        options.transport.validate()?;
        if !(options.loss_threshold > 0.0 && options.loss_threshold <= 1.0) {
            return Err(Error::invalid("loss_threshold must lie in (0, 1]"));
        }
        let hop_count = match fabric.architecture {
            Architecture::Masterless => 1,
            Architecture::Master => 2,
        };
        let mut flows = Vec::with_capacity(matches.len());
        for (i, m) in matches.into_iter().enumerate() {
            let mut unsent = VecDeque::new();
            for p in chunk_payload(options.payload_bytes, options.segment_bytes)? {
                unsent.push_back(p.addressed(m.publisher.clone(), m.subscriber.clone(), m.topic.clone()));
            }
            flows.push(Flow {
                matched: m,
                stream_base: i as u64 * STREAMS_PER_MATCH,
                unsent,
                path: PathSender::new(options.transport, hop_count)?,
                published: 0,
                delivered: 0,
                delivered_delay: DelayComponents::zero(),
                airtime_delay_s: 0.0,
                retransmissions: 0,
                transmissions: 0,
            });
        }
        let window = SyncWindow::starting_at(options.base_window_ms, world.sim_time_ms())?;
        let mut network = EventQueue::new();
        network.run_until(window.start_time_ms)?;
        Ok(Self {
            window,
            world,
            fabric,
            profile,
            options,
            flows,
            network,
            observed_deliveries: 0,
            boost_next: false,
            history: Vec::new(),
        })
    }

    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        let s = config.build()?;
        Self::new(s.world, s.fabric, s.matches, s.profile, RunOptions::from_config(config))
    }

    pub fn window(&self) -> &SyncWindow<f64> {
        &self.window
    }

    pub fn world(&self) -> &World<f64> {
        &self.world
    }

    pub fn network_time_ms(&self) -> f64 {
        self.network.now_ms()
    }

    pub fn history(&self) -> &[WindowRecord] {
        &self.history
    }

    /// Delivery events scheduled but not yet reached by the network clock.
    pub fn pending_events(&self) -> usize {
        self.network.len()
    }

    /// Deliveries processed by the network event queue so far.
    pub fn observed_deliveries(&self) -> u64 {
        self.observed_deliveries
    }

    /// Advances the physics clock on its own, breaking lockstep. Exists so
    /// the divergence check can be exercised end to end.
    #[doc(hidden)]
    pub fn inject_physics_drift(&mut self, dt_ms: f64) -> Result<()> {
        self.world.step_in_place(dt_ms)
    }

    pub fn is_done(&self) -> bool {
        self.flows.iter().all(Flow::is_done)
    }

    fn adapted_window(&self) -> Result<SyncWindow<f64>> {
        let Some(term) = self.options.adaptation.velocity_term() else {
            return Ok(self.window);
        };
        let gain = if self.boost_next { 2.0 } else { 1.0 };
        let mut best = None::<SyncWindow<f64>>;
        for f in self.flows.iter().filter(|f| !f.is_done()) {
            let speed = |id: &AgentId| {
                self.world
                    .agent(id)
                    .map(|a| a.speed())
                    .ok_or_else(|| Error::Routing(format!("agent `{id}` is not in the world")))
            };
            let v = VelocityPair::new(speed(&f.matched.publisher)?, speed(&f.matched.subscriber)?)?;
            let w = adapt_window_with(self.window, v, term, gain)?;
            if best.is_none_or(|b| w.adapted_ms > b.adapted_ms) {
                best = Some(w);
            }
        }
        Ok(best.unwrap_or(self.window))
    }

    /// Frames per hop that fit in the window at the first hop's bitrate.
    fn budget(&self, route: &crate::pubsub::Route, adapted_ms: f64) -> u64 {
        let model = &self.profile.link(route.hops[0].class).model;
        let per_frame_ms = model.transmission_delay_s(self.options.segment_bytes) * 1000.0;
        ((adapted_ms / per_frame_ms).floor() as u64).max(1)
    }

    /// One synchronization window. Idle windows still advance the clocks.
    pub fn run_window(&mut self) -> Result<WindowMetrics<f64>> {
        let window = self.adapted_window()?;
        let mut resolved = 0;
        let mut delivered = 0;
        let mut delay_sum = DelayComponents::zero();
        let mut admitted = 0;
        let mut retransmissions = 0;
        let mut transmissions = 0;
        let mut budget_seen = 0;
        for i in 0..self.flows.len() {
            if self.flows[i].is_done() {
                continue;
            }
            let r = route(&self.flows[i].matched, &self.world, &self.fabric, &self.profile)?;
            let budget = self.budget(&r, window.adapted_ms);
            budget_seen = budget_seen.max(budget);
            let flow = &mut self.flows[i];
            while flow.path.pending() < budget as usize {
                let Some(mut p) = flow.unsent.pop_front() else { break };
                p.enqueue_time_ms = window.start_time_ms;
                flow.path.enqueue(p);
                admitted += 1;
            }
            let out = flow
                .path
                .step(&r, &self.profile, budget, self.options.seed, flow.stream_base)?;
            let n_resolved = (out.delivered.len() + out.lost.len()) as u64;
            flow.published += n_resolved;
            flow.delivered += out.delivered.len() as u64;
            flow.airtime_delay_s += out.airtime_delay_s;
            flow.retransmissions += out.retransmission_count;
            flow.transmissions += out.transmissions;
            resolved += n_resolved;
            delivered += out.delivered.len() as u64;
            retransmissions += out.retransmission_count;
            transmissions += out.transmissions;
            for p in &out.delivered {
                flow.delivered_delay += p.delay;
                delay_sum += p.delay;
                let at = p
                    .deliver_time_ms
                    .unwrap_or(window.start_time_ms)
                    .max(self.network.now_ms());
                self.network.schedule(at, (i, p.seq))?;
            }
        }
        let metrics = WindowMetrics::from_counts(resolved, delivered, delay_sum)?;
        let recomputed: f64 = packet_loss_probability(delivered, resolved)?;
        if recomputed != metrics.loss_probability {
            return Err(Error::Consistency("window loss does not match its raw counts".into()));
        }
        let breached = resolved > 0 && metrics.loss_probability > self.options.loss_threshold;
        self.boost_next = breached && self.options.adaptation != WindowAdaptation::Fixed;
        self.history.push(WindowRecord {
            index: self.history.len() as u64,
            start_time_ms: window.start_time_ms,
            adapted_ms: window.adapted_ms,
            budget: budget_seen,
            admitted,
            metrics,
            retransmissions,
            transmissions,
            threshold_exceeded: breached,
        });

        // Lockstep advance.
        self.world.step_in_place(window.adapted_ms)?;
        self.window = advance_timestamp(window);
        self.observed_deliveries += self.network.run_until(self.window.start_time_ms)?.len() as u64;
        let (physics, network, sync) = (
            self.world.sim_time_ms(),
            self.network.now_ms(),
            self.window.start_time_ms,
        );
        if physics != sync || network != sync {
            return Err(Error::Consistency(format!(
                "clock divergence after window {}: physics {physics} ms, network {network} ms, window {sync} ms",
                self.history.len()
            )));
        }
        Ok(metrics)
    }

    /// Runs windows until every match has resolved its payload or the cap hits.
    pub fn run_to_completion(mut self) -> Result<RunReport> {
        while !self.is_done() && (self.history.len() as u64) < self.options.max_windows {
            self.run_window()?;
        }
        Ok(self.report())
    }

    pub fn report(&self) -> RunReport {
        let pairs: Vec<PairReport> = self
            .flows
            .iter()
            .map(|f| {
                let total = f.published + f.unsent.len() as u64 + f.path.pending() as u64;
                let mean = if f.delivered == 0 {
                    0.0
                } else {
                    f.delivered_delay.total() / f.delivered as f64
                };
                PairReport {
                    publisher: f.matched.publisher.clone(),
                    subscriber: f.matched.subscriber.clone(),
                    topic: f.matched.topic.to_string(),
                    published: total,
                    delivered: f.delivered,
                    loss_probability: packet_loss_probability(f.delivered, total).unwrap_or(1.0),
                    pd_a_mean_s: mean,
                    pd_a_sum_s: f.airtime_delay_s,
                    retransmissions: f.retransmissions,
                    transmissions: f.transmissions,
                }
            })
            .collect();
        let mean = |g: fn(&PairReport) -> f64| {
            if pairs.is_empty() {
                0.0
            } else {
                pairs.iter().map(g).sum::<f64>() / pairs.len() as f64
            }
        };
        RunReport {
            architecture: self.fabric.architecture,
            transport: self.options.transport,
            loss_probability: mean(|p| p.loss_probability),
            pd_a_mean_s: mean(|p| p.pd_a_mean_s),
            pd_a_sum_s: mean(|p| p.pd_a_sum_s),
            total_windows: self.history.len() as u64,
            total_retransmissions: self.flows.iter().map(|f| f.retransmissions).sum(),
            final_window_ms: self.history.last().map_or(self.window.adapted_ms, |w| w.adapted_ms),
            sim_time_ms: self.window.start_time_ms,
            threshold_breaches: self.history.iter().filter(|w| w.threshold_exceeded).count() as u64,
            cap_hit: !self.is_done(),
            windows: self.history.clone(),
            pairs,
        }
    }
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunReport> {
    CosimState::from_config(config)?.run_to_completion()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub masterless: RunReport,
    pub master: RunReport,
}

/// Masterless with adaptive windows against master relay with a fixed window,
/// same seed, geometry, payload and transport.
pub fn compare_architectures(config: &ScenarioConfig) -> Result<Comparison> {
    if config.master.is_none() {
        return Err(Error::config("compare needs `master` set to an agent id"));
    }
    let mut masterless = config.clone();
    masterless.architecture = Architecture::Masterless;
    if masterless.window_adaptation == WindowAdaptation::Fixed {
        masterless.window_adaptation = WindowAdaptation::Absolute;
    }
    let mut master = config.clone();
    master.architecture = Architecture::Master;
    master.window_adaptation = WindowAdaptation::Fixed;
    Ok(Comparison {
        masterless: run_scenario(&masterless)?,
        master: run_scenario(&master)?,
    })
}
