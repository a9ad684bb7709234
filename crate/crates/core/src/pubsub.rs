//! Topic-based publish/subscribe over the simulated network.
//!
//! Masterless fabrics route every match over the direct
//! publisher-subscriber link. Master fabrics relay payload through the
//! master node, which costs a second hop and one extra processing delay.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::net::profile::{LinkClass, Profile};
use crate::net::transport::{BernoulliLoss, HopChannel, Link, Sender, TransmissionOutcome, Transport};
use crate::net::Packet;
use crate::physics::{distance, AgentId, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Publisher,
    Subscriber,
    Both,
    /// Carries no topics of its own; idle unless it is the master.
    Relay,
}

impl Role {
    pub fn publishes(&self) -> bool {
        matches!(self, Role::Publisher | Role::Both)
    }

    pub fn subscribes(&self) -> bool {
        matches!(self, Role::Subscriber | Role::Both)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Publisher => "publisher",
            Role::Subscriber => "subscriber",
            Role::Both => "both",
            Role::Relay => "relay",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub agent_id: AgentId,
    pub role: Role,
    pub topics: BTreeSet<String>,
    pub address: String,
}

impl Endpoint {
    pub fn new<I, S>(agent_id: impl Into<AgentId>, role: Role, topics: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let agent_id = agent_id.into();
        Self {
            address: agent_id.as_str().to_string(),
            agent_id,
            role,
            topics: topics.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Architecture {
    #[default]
    Masterless,
    Master,
}

impl Architecture {
    pub fn as_str(&self) -> &'static str {
        match self {
            Architecture::Masterless => "masterless",
            Architecture::Master => "master",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FabricConfig {
    pub architecture: Architecture,
    pub master_id: Option<AgentId>,
    /// Discovery is modelled as instantaneous; the flag is carried for
    /// completeness and does not alter routing.
    pub discovery_announce: bool,
}

impl FabricConfig {
    pub fn masterless() -> Self {
        Self {
            architecture: Architecture::Masterless,
            master_id: None,
            discovery_announce: true,
        }
    }

    pub fn master(master_id: impl Into<AgentId>) -> Self {
        Self {
            architecture: Architecture::Master,
            master_id: Some(master_id.into()),
            discovery_announce: true,
        }
    }
}

/// One publisher-subscriber pairing on a shared topic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub publisher: AgentId,
    pub subscriber: AgentId,
    pub topic: Arc<str>,
}

/// Matches every publisher with every subscriber sharing a topic, sorted by
/// `(publisher, subscriber, topic)`. Self-matches are skipped.
pub fn discover(endpoints: &[Endpoint], config: &FabricConfig) -> Result<Vec<Match>> {
    let mut by_id: BTreeMap<&AgentId, &Endpoint> = BTreeMap::new();
    for e in endpoints {
        if by_id.insert(&e.agent_id, e).is_some() {
            return Err(Error::config(format!("duplicate endpoint `{}`", e.agent_id)));
        }
    }
    match (config.architecture, &config.master_id) {
        (Architecture::Master, None) => {
            return Err(Error::config("master architecture requires a master_id"));
        }
        (Architecture::Master, Some(id)) if !by_id.contains_key(id) => {
            return Err(Error::config(format!("master `{id}` is not a known endpoint")));
        }
        _ => {}
    }
    for e in endpoints {
        if e.role != Role::Relay && e.topics.is_empty() {
            return Err(Error::config(format!("endpoint `{}` has no topics", e.agent_id)));
        }
    }
    let mut out = Vec::new();
    for p in endpoints.iter().filter(|e| e.role.publishes()) {
        for s in endpoints.iter().filter(|e| e.role.subscribes()) {
            if p.agent_id == s.agent_id {
                continue;
            }
            for topic in p.topics.intersection(&s.topics) {
                out.push(Match {
                    publisher: p.agent_id.clone(),
                    subscriber: s.agent_id.clone(),
                    topic: Arc::from(topic.as_str()),
                });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// One link segment of a route with its geometry at routing time.
#[derive(Debug, Clone, PartialEq)]
pub struct Hop {
    pub from: AgentId,
    pub to: AgentId,
    pub class: LinkClass,
    pub channel: HopChannel,
    pub is_los: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub src: AgentId,
    pub dst: AgentId,
    pub hops: Vec<Hop>,
}

impl Route {
    pub fn path_length_m(&self) -> f64 {
        self.hops.iter().map(|h| h.channel.distance_m).sum()
    }
}

fn hop(world: &World<f64>, profile: &Profile, from: &AgentId, to: &AgentId) -> Result<Hop> {
    let missing = |id: &AgentId| Error::Routing(format!("agent `{id}` is not in the world"));
    let a = world.agent(from).ok_or_else(|| missing(from))?;
    let b = world.agent(to).ok_or_else(|| missing(to))?;
    let class = LinkClass::between(a.kind, b.kind);
    let link = profile.link(class);
    let mut is_los = true;
    let mut attenuation = 0.0;
    for o in world.blocking_obstacles(a, b) {
        is_los = false;
        attenuation += link.obstacle_db(o);
    }
    Ok(Hop {
        from: from.clone(),
        to: to.clone(),
        class,
        channel: HopChannel::new(distance(a, b), attenuation)?,
        is_los,
    })
}

/// Direct hop (masterless) or publisher -> master -> subscriber (master).
pub fn route(m: &Match, world: &World<f64>, config: &FabricConfig, profile: &Profile) -> Result<Route> {
    if m.publisher == m.subscriber {
        return Err(Error::Routing(format!("self-route on `{}`", m.publisher)));
    }
    let hops = match config.architecture {
        Architecture::Masterless => vec![hop(world, profile, &m.publisher, &m.subscriber)?],
        Architecture::Master => {
            let master = config
                .master_id
                .as_ref()
                .ok_or_else(|| Error::Routing("master architecture without a master".into()))?;
            vec![
                hop(world, profile, &m.publisher, master)?,
                hop(world, profile, master, &m.subscriber)?,
            ]
        }
    };
    Ok(Route {
        src: m.publisher.clone(),
        dst: m.subscriber.clone(),
        hops,
    })
}

/// Per-hop senders for one route, carried across synchronization windows.
#[derive(Debug, Clone)]
pub struct PathSender {
    senders: Vec<Sender>,
}

impl PathSender {
    pub fn new(transport: Transport, hop_count: usize) -> Result<Self> {
        if hop_count == 0 {
            return Err(Error::invalid("a path needs at least one hop"));
        }
        let senders = (0..hop_count).map(|_| Sender::new(transport)).collect::<Result<_>>()?;
        Ok(Self { senders })
    }

    pub fn enqueue(&mut self, packet: Packet) {
        self.senders[0].enqueue(packet);
    }

    /// Packets waiting at any hop.
    pub fn pending(&self) -> usize {
        self.senders.iter().map(Sender::pending).sum()
    }

    pub fn is_idle(&self) -> bool {
        self.senders.iter().all(Sender::is_idle)
    }

    /// Runs every hop once with `budget` frames each, in path order. Frames
    /// delivered on one hop are forwarded to the next within the same step,
    /// picking up the relay's processing delay. Loss draws use stream
    /// `stream_base + hop index`.
    pub fn step(
        &mut self,
        route: &Route,
        profile: &Profile,
        budget: u64,
        seed: u64,
        stream_base: u64,
    ) -> Result<TransmissionOutcome> {
        if route.hops.len() != self.senders.len() {
            return Err(Error::Consistency(format!(
                "route has {} hops, sender expects {}",
                route.hops.len(),
                self.senders.len()
            )));
        }
        let mut total = TransmissionOutcome::default();
        let last = route.hops.len() - 1;
        for (i, h) in route.hops.iter().enumerate() {
            let model = &profile.link(h.class).model;
            let link = Link {
                model,
                channel: h.channel,
            };
            let mut loss = BernoulliLoss::new(h.channel.loss_probability(model), seed, stream_base + i as u64)?;
            let mut out = self.senders[i].step(budget, &link, &mut loss)?;
            total.lost.append(&mut out.lost);
            total.retransmission_count += out.retransmission_count;
            total.transmissions += out.transmissions;
            total.airtime_delay_s += out.airtime_delay_s;
            if i == last {
                total.delivered.append(&mut out.delivered);
            } else {
                let relay = &profile.link(route.hops[i + 1].class).model;
                for mut p in out.delivered {
                    p.delay.processing += relay.processing_delay_s;
                    total.airtime_delay_s += relay.processing_delay_s;
                    p.deliver_time_ms = None;
                    self.senders[i + 1].enqueue(p);
                }
            }
        }
        Ok(total)
    }
}

/// Sends `packets` over every hop of `route` to completion. A packet is
/// delivered end to end iff it is delivered on every hop.
pub fn end_to_end_outcome(
    route: &Route,
    packets: Vec<Packet>,
    transport: Transport,
    profile: &Profile,
    seed: u64,
) -> Result<TransmissionOutcome> {
    let mut path = PathSender::new(transport, route.hops.len())?;
    for p in packets {
        path.enqueue(p);
    }
    let out = path.step(route, profile, u64::MAX, seed, 0)?;
    if !path.is_idle() {
        return Err(Error::Consistency("unbounded path step left packets behind".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::profile::{builtin_profile, IDEAL};
    use crate::net::{chunk_payload, LinkModel};
    use crate::physics::{AgentKind, AgentState, Vec3};

    fn world(points: &[(&str, AgentKind, [f64; 3])]) -> World<f64> {
        let mut w = World::new(World::default_bounds());
        for (id, kind, p) in points {
            let a = AgentState::new(AgentId::new(id), *kind, Vec3::new(p[0], p[1], p[2]), Vec3::zero(), *id).unwrap();
            w.add_agent(a).unwrap();
        }
        w
    }

    fn m(p: &str, s: &str) -> Match {
        Match {
            publisher: p.into(),
            subscriber: s.into(),
            topic: Arc::from("/scan"),
        }
    }

    #[test]
    fn discovery_examples() {
        let fc = FabricConfig::masterless();
        let one = [
            Endpoint::new("p", Role::Publisher, ["/scan"]),
            Endpoint::new("s", Role::Subscriber, ["/scan"]),
        ];
        assert_eq!(discover(&one, &fc).unwrap(), vec![m("p", "s")]);
        let disjoint = [
            Endpoint::new("p", Role::Publisher, ["/scan"]),
            Endpoint::new("s", Role::Subscriber, ["/imu"]),
        ];
        assert!(discover(&disjoint, &fc).unwrap().is_empty());
        let two = [
            Endpoint::new("s2", Role::Subscriber, ["/scan"]),
            Endpoint::new("p", Role::Publisher, ["/scan"]),
            Endpoint::new("s1", Role::Subscriber, ["/scan"]),
        ];
        assert_eq!(discover(&two, &fc).unwrap(), vec![m("p", "s1"), m("p", "s2")]);
    }

    #[test]
    fn master_is_relay_not_subscriber() {
        let eps = [
            Endpoint::new("p", Role::Publisher, ["/scan"]),
            Endpoint::new("s", Role::Subscriber, ["/scan"]),
            Endpoint::new("hub", Role::Relay, Vec::<String>::new()),
        ];
        assert_eq!(discover(&eps, &FabricConfig::master("hub")).unwrap(), vec![m("p", "s")]);
        assert!(discover(&eps, &FabricConfig::master("nobody"))
            .unwrap_err()
            .is_config_error());
        let no_master = FabricConfig {
            master_id: None,
            ..FabricConfig::master("x")
        };
        assert!(discover(&eps, &no_master).is_err());
        // Without a master the relay simply sits idle.
        assert_eq!(discover(&eps, &FabricConfig::masterless()).unwrap(), vec![m("p", "s")]);
    }

    #[test]
    fn discovery_rejects_duplicates_and_empty_topics() {
        let fc = FabricConfig::masterless();
        let dup = [
            Endpoint::new("p", Role::Publisher, ["/a"]),
            Endpoint::new("p", Role::Subscriber, ["/a"]),
        ];
        assert!(discover(&dup, &fc).is_err());
        assert!(discover(&[Endpoint::new("p", Role::Publisher, Vec::<String>::new())], &fc).is_err());
    }

    #[test]
    fn route_examples() {
        let p = builtin_profile(IDEAL).unwrap();
        let w = world(&[
            ("a", AgentKind::Ugv, [10.0, 10.0, 0.0]),
            ("b", AgentKind::Ugv, [40.0, 10.0, 0.0]),
            ("hub", AgentKind::Ugv, [20.0, 10.0, 0.0]),
            ("c", AgentKind::Ugv, [20.0, 25.0, 0.0]),
        ]);
        let r = route(&m("a", "b"), &w, &FabricConfig::masterless(), &p).unwrap();
        assert_eq!(r.hops.len(), 1);
        assert_eq!(r.hops[0].channel.distance_m, 30.0);
        let r = route(&m("a", "c"), &w, &FabricConfig::master("hub"), &p).unwrap();
        let d: Vec<f64> = r.hops.iter().map(|h| h.channel.distance_m).collect();
        assert_eq!(d, vec![10.0, 15.0]);
        assert!(route(&m("a", "a"), &w, &FabricConfig::masterless(), &p).is_err());
        assert!(matches!(
            route(&m("a", "ghost"), &w, &FabricConfig::masterless(), &p),
            Err(Error::Routing(_))
        ));
    }

    #[test]
    fn link_class_follows_endpoint_kinds() {
        let p = builtin_profile(IDEAL).unwrap();
        let w = world(&[
            ("g", AgentKind::Ugv, [0.0, 0.0, 0.0]),
            ("u", AgentKind::Uav, [10.0, 0.0, 10.0]),
            ("g2", AgentKind::Ugv, [20.0, 0.0, 0.0]),
        ]);
        let r = route(&m("g", "g2"), &w, &FabricConfig::master("u"), &p).unwrap();
        assert_eq!(r.hops[0].class, LinkClass::UgvUav);
        assert_eq!(r.hops[1].class, LinkClass::UgvUav);
        let r = route(&m("g", "g2"), &w, &FabricConfig::masterless(), &p).unwrap();
        assert_eq!(r.hops[0].class, LinkClass::UgvUgv);
    }

    fn lossy_profile(p_hop: f64) -> Profile {
        // Pick the reference loss so that a 50 m hop loses with `p_hop`.
        let mut prof = builtin_profile(IDEAL).unwrap();
        for link in prof.links.values_mut() {
            let mut model = LinkModel {
                tx_power_dbm: 20.0,
                path_loss_exponent: 2.0,
                processing_delay_s: 1e-4,
                ..Default::default()
            };
            let logit = (p_hop / (1.0 - p_hop)).ln();
            // p = logistic(-(snr - thr)) with k = 1  =>  snr = thr - logit.
            let snr = model.snr_threshold_db - logit;
            model.reference_loss_db = model.tx_power_dbm - model.noise_floor_dbm - snr - 20.0 * 50f64.log10();
            link.model = model;
        }
        prof
    }

    #[test]
    fn single_hop_matches_plain_transmit() {
        let prof = builtin_profile(IDEAL).unwrap();
        let w = world(&[
            ("a", AgentKind::Ugv, [0.0, 0.0, 0.0]),
            ("b", AgentKind::Ugv, [30.0, 0.0, 0.0]),
        ]);
        let r = route(&m("a", "b"), &w, &FabricConfig::masterless(), &prof).unwrap();
        let pk = chunk_payload(5000, 500).unwrap();
        let e2e = end_to_end_outcome(&r, pk.clone(), Transport::Udp, &prof, 3).unwrap();
        let direct = crate::net::transmit_udp(pk, &prof.link(LinkClass::UgvUgv).model, r.hops[0].channel, 3).unwrap();
        assert_eq!(e2e, direct);
    }

    #[test]
    fn two_hop_delivery_is_product_of_hops() {
        let prof = lossy_profile(0.3);
        let w = world(&[
            ("a", AgentKind::Ugv, [0.0, 0.0, 0.0]),
            ("hub", AgentKind::Ugv, [50.0, 0.0, 0.0]),
            ("b", AgentKind::Ugv, [100.0, 0.0, 0.0]),
        ]);
        let r = route(&m("a", "b"), &w, &FabricConfig::master("hub"), &prof).unwrap();
        let n = 10_000;
        let out = end_to_end_outcome(&r, chunk_payload(n, 1).unwrap(), Transport::Udp, &prof, 11).unwrap();
        let frac = out.delivered.len() as f64 / n as f64;
        assert!((frac - 0.49).abs() <= 0.02, "{frac}");
        assert_eq!(out.delivered.len() + out.lost.len(), n as usize);
    }

    #[test]
    fn two_hop_delay_adds_per_packet() {
        let prof = builtin_profile(IDEAL).unwrap();
        let w = world(&[
            ("a", AgentKind::Ugv, [0.0, 0.0, 0.0]),
            ("hub", AgentKind::Ugv, [30.0, 40.0, 0.0]),
            ("b", AgentKind::Ugv, [60.0, 0.0, 0.0]),
        ]);
        let r = route(&m("a", "b"), &w, &FabricConfig::master("hub"), &prof).unwrap();
        let model = prof.link(LinkClass::UgvUgv).model;
        let pk = chunk_payload(5, 1).unwrap();
        let out = end_to_end_outcome(&r, pk.clone(), Transport::Udp, &prof, 0).unwrap();
        let h1 = crate::net::transmit_udp(pk.clone(), &model, r.hops[0].channel, 0).unwrap();
        let h2 = crate::net::transmit_udp(pk, &model, r.hops[1].channel, 0).unwrap();
        for ((e, a), b) in out.delivered.iter().zip(&h1.delivered).zip(&h2.delivered) {
            let expected = a.total_delay_s() + b.total_delay_s() + model.processing_delay_s;
            assert!((e.total_delay_s() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn end_to_end_set_is_intersection_of_hops() {
        let prof = lossy_profile(0.4);
        let w = world(&[
            ("a", AgentKind::Ugv, [0.0, 0.0, 0.0]),
            ("hub", AgentKind::Ugv, [50.0, 0.0, 0.0]),
            ("b", AgentKind::Ugv, [100.0, 0.0, 0.0]),
        ]);
        let r = route(&m("a", "b"), &w, &FabricConfig::master("hub"), &prof).unwrap();
        let model = prof.link(LinkClass::UgvUgv).model;
        let pk = chunk_payload(500, 1).unwrap();
        let out = end_to_end_outcome(&r, pk.clone(), Transport::Udp, &prof, 5).unwrap();
        let mut l0 = BernoulliLoss::new(r.hops[0].channel.loss_probability(&model), 5, 0).unwrap();
        let mut l1 = BernoulliLoss::new(r.hops[1].channel.loss_probability(&model), 5, 1).unwrap();
        use crate::net::LossSource;
        let expected: Vec<u64> = (0..500).filter(|&s| !l0.is_lost(s, 0) && !l1.is_lost(s, 0)).collect();
        let got: Vec<u64> = out.delivered.iter().map(|p| p.seq).collect();
        assert_eq!(got, expected);
    }
}
