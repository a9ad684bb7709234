//! Scenario configuration: parsing, validation, emission and world layout.
//!
//! # Grammar
//!
//! A config is UTF-8 text, one `key = value` per line. `#` starts a comment
//! (at line start, or after whitespace). Top-level keys come first; each
//! agent and obstacle then gets its own section:
//!
//! ```text
//! name = ugv-ugv
//! transport = tcp                # tcp | udp
//! architecture = masterless      # masterless | master
//! master = hub                   # required for master, used by compare
//! channel = los                  # los | nlos
//! profile = paper-v1             # built-in name or path to a profile file
//! payload_bytes = 293797
//! segment_bytes = 502
//! tcp_window_bytes = 2048        # TCP window = max(1, bytes / segment)
//! max_retries = 5
//! base_window_ms = 1
//! window_adaptation = absolute   # absolute | signed | fixed
//! loss_threshold = 0.3
//! seed = 1
//! seeds_per_cell = 1             # grid: seeds seed, seed+1, ...
//! distances = 20, 40, 60, 80, 100
//! max_windows = 100000
//! discovery_announce = true
//!
//! [agent ugv1]
//! kind = ugv                     # ugv | uav
//! position = 0, 5, 0
//! velocity = 1, 0, 0
//! role = publisher               # publisher | subscriber | both | relay
//! topics = /imu
//! address = 10.0.0.1             # defaults to the agent id
//!
//! [obstacle tree]
//! min = 0, 0, 0
//! max = 4, 100, 30
//! material = foliage             # looked up per link class in the profile
//! attenuation_db = 6             # used when the profile lacks the material
//! placement = midway             # midway | fixed
//! ```
//!
//! LOS runs ignore every obstacle. NLOS runs use all of them; `midway`
//! boxes are re-centred along x between the first matched publisher and
//! subscriber, `fixed` boxes stay where they are.

use std::fmt::{self, Write as _};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ini::{self, Reader};
use crate::net::profile::{load_profile, Profile};
use crate::net::transport::Transport;
use crate::physics::{Aabb, AgentId, AgentKind, AgentState, Obstacle, Vec3, World};
use crate::pubsub::{discover, Architecture, Endpoint, FabricConfig, Match, Role};
use crate::sync::VelocityTerm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Channel {
    #[default]
    Los,
    Nlos,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Los => "los",
            Channel::Nlos => "nlos",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum TransportKind {
    #[default]
    Tcp,
    Udp,
}

impl TransportKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TransportKind::Tcp => "tcp",
            TransportKind::Udp => "udp",
        }
    }
}

impl fmt::Display for TransportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowAdaptation {
    #[default]
    Absolute,
    Signed,
    /// Window stays at its base and loss breaches are not acted on.
    Fixed,
}

impl WindowAdaptation {
    pub fn as_str(&self) -> &'static str {
        match self {
            WindowAdaptation::Absolute => "absolute",
            WindowAdaptation::Signed => "signed",
            WindowAdaptation::Fixed => "fixed",
        }
    }

    pub fn velocity_term(&self) -> Option<VelocityTerm> {
        match self {
            WindowAdaptation::Absolute => Some(VelocityTerm::Absolute),
            WindowAdaptation::Signed => Some(VelocityTerm::Signed),
            WindowAdaptation::Fixed => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    #[default]
    Fixed,
    Midway,
}

impl Placement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Placement::Fixed => "fixed",
            Placement::Midway => "midway",
        }
    }
}

const CHANNELS: &[(&str, Channel)] = &[("los", Channel::Los), ("nlos", Channel::Nlos)];
const TRANSPORTS: &[(&str, TransportKind)] = &[("tcp", TransportKind::Tcp), ("udp", TransportKind::Udp)];
const ARCHITECTURES: &[(&str, Architecture)] = &[
    ("masterless", Architecture::Masterless),
    ("master", Architecture::Master),
];
const ADAPTATIONS: &[(&str, WindowAdaptation)] = &[
    ("absolute", WindowAdaptation::Absolute),
    ("signed", WindowAdaptation::Signed),
    ("fixed", WindowAdaptation::Fixed),
];
const KINDS: &[(&str, AgentKind)] = &[("ugv", AgentKind::Ugv), ("uav", AgentKind::Uav)];
const ROLES: &[(&str, Role)] = &[
    ("publisher", Role::Publisher),
    ("subscriber", Role::Subscriber),
    ("both", Role::Both),
    ("relay", Role::Relay),
];
const PLACEMENTS: &[(&str, Placement)] = &[("fixed", Placement::Fixed), ("midway", Placement::Midway)];
const BOOLS: &[(&str, bool)] = &[("true", true), ("false", false)];

pub fn parse_channel(s: &str) -> Option<Channel> {
    lookup(CHANNELS, s)
}

pub fn parse_transport(s: &str) -> Option<TransportKind> {
    lookup(TRANSPORTS, s)
}

pub fn parse_architecture(s: &str) -> Option<Architecture> {
    lookup(ARCHITECTURES, s)
}

fn lookup<T: Copy>(table: &[(&str, T)], s: &str) -> Option<T> {
    let s = s.to_ascii_lowercase();
    table.iter().find(|(n, _)| *n == s).map(|(_, t)| *t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub role: Role,
    pub topics: Vec<String>,
    pub address: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSpec {
    pub name: String,
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub attenuation_db: Option<f64>,
    pub material: Option<String>,
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub agents: Vec<AgentSpec>,
    pub obstacles: Vec<ObstacleSpec>,
    pub channel: Channel,
    pub transport: TransportKind,
    pub architecture: Architecture,
    pub master: Option<String>,
    pub profile: String,
    pub payload_bytes: u64,
    pub segment_bytes: u32,
    pub tcp_window_bytes: u32,
    pub max_retries: u32,
    pub base_window_ms: f64,
    pub window_adaptation: WindowAdaptation,
    pub loss_threshold: f64,
    pub seed: u64,
    pub seeds_per_cell: u32,
    pub distances: Vec<f64>,
    pub max_windows: u64,
    pub discovery_announce: bool,
}

pub const DEFAULT_PAYLOAD_BYTES: u64 = 293_797;
pub const DEFAULT_SEGMENT_BYTES: u32 = 502;
pub const DEFAULT_TCP_WINDOW_BYTES: u32 = 2048;
pub const DEFAULT_MAX_RETRIES: u32 = 5;
pub const DEFAULT_BASE_WINDOW_MS: f64 = 1.0;
pub const DEFAULT_LOSS_THRESHOLD: f64 = 0.3;
pub const DEFAULT_MAX_WINDOWS: u64 = 100_000;
pub const DEFAULT_DISTANCES: [f64; 5] = [20.0, 40.0, 60.0, 80.0, 100.0];

impl Default for ScenarioConfig {
    /// Two ground vehicles 20 m apart exchanging `/imu` over LOS.
    fn default() -> Self {
        Self {
            name: "default".into(),
            agents: vec![
                AgentSpec {
                    id: "ugv1".into(),
                    kind: AgentKind::Ugv,
                    position: [0.0, 5.0, 0.0],
                    velocity: [0.0; 3],
                    role: Role::Publisher,
                    topics: vec!["/imu".into()],
                    address: "ugv1".into(),
                },
                AgentSpec {
                    id: "ugv2".into(),
                    kind: AgentKind::Ugv,
                    position: [20.0, 5.0, 0.0],
                    velocity: [0.0; 3],
                    role: Role::Subscriber,
                    topics: vec!["/imu".into()],
                    address: "ugv2".into(),
                },
            ],
            obstacles: Vec::new(),
            channel: Channel::Los,
            transport: TransportKind::Tcp,
            architecture: Architecture::Masterless,
            master: None,
            profile: crate::net::profile::PAPER_V1.into(),
            payload_bytes: DEFAULT_PAYLOAD_BYTES,
            segment_bytes: DEFAULT_SEGMENT_BYTES,
            tcp_window_bytes: DEFAULT_TCP_WINDOW_BYTES,
            max_retries: DEFAULT_MAX_RETRIES,
            base_window_ms: DEFAULT_BASE_WINDOW_MS,
            window_adaptation: WindowAdaptation::Absolute,
            loss_threshold: DEFAULT_LOSS_THRESHOLD,
            seed: 0,
            seeds_per_cell: 1,
            distances: DEFAULT_DISTANCES.to_vec(),
            max_windows: DEFAULT_MAX_WINDOWS,
            discovery_announce: true,
        }
    }
}

/// A validation failure tied to a field, optionally inside a section.
struct FieldError {
    section: Option<(&'static str, String)>,
    field: &'static str,
    message: String,
}

fn field_err(field: &'static str, message: impl Into<String>) -> FieldError {
    FieldError {
        section: None,
        field,
        message: message.into(),
    }
}

/// Everything needed to start a run: positioned world, fabric and profile.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: World<f64>,
    pub endpoints: Vec<Endpoint>,
    pub fabric: FabricConfig,
    pub matches: Vec<Match>,
    pub profile: Profile,
}

impl ScenarioConfig {
    /// Frames per go-back-N window: `max(1, tcp_window_bytes / segment_bytes)`.
    pub fn tcp_window_packets(&self) -> u32 {
        (self.tcp_window_bytes / self.segment_bytes.max(1)).max(1)
    }

    pub fn transport_mode(&self) -> Transport {
        match self.transport {
            TransportKind::Udp => Transport::Udp,
            TransportKind::Tcp => Transport::Tcp {
                window_packets: self.tcp_window_packets(),
                max_retries: self.max_retries,
            },
        }
    }

    pub fn fabric(&self) -> FabricConfig {
        FabricConfig {
            architecture: self.architecture,
            master_id: match self.architecture {
                Architecture::Master => self.master.as_deref().map(AgentId::new),
                Architecture::Masterless => None,
            },
            discovery_announce: self.discovery_announce,
        }
    }

    pub fn endpoints(&self) -> Vec<Endpoint> {
        self.agents
            .iter()
            .map(|a| Endpoint {
                agent_id: AgentId::new(&a.id),
                role: a.role,
                topics: a.topics.iter().cloned().collect(),
                address: a.address.clone(),
            })
            .collect()
    }

    /// The seeds a grid cell averages over.
    pub fn cell_seeds(&self) -> impl Iterator<Item = u64> {
        let base = self.seed;
        (0..u64::from(self.seeds_per_cell)).map(move |i| base.wrapping_add(i))
    }

    fn check(&self) -> std::result::Result<(), FieldError> {
        if self.payload_bytes == 0 {
            return Err(field_err("payload_bytes", "must be > 0"));
        }
        if self.segment_bytes == 0 {
            return Err(field_err("segment_bytes", "must be > 0"));
        }
        if self.tcp_window_bytes == 0 {
            return Err(field_err("tcp_window_bytes", "must be > 0"));
        }
        if self.max_retries >= crate::net::rng::MAX_ATTEMPTS {
            return Err(field_err("max_retries", "must be below 256"));
        }
        if !(self.base_window_ms.is_finite() && self.base_window_ms > 0.0) {
            return Err(field_err("base_window_ms", "must be > 0"));
        }
        if !(self.loss_threshold > 0.0 && self.loss_threshold <= 1.0) {
            return Err(field_err("loss_threshold", "must lie in (0, 1]"));
        }
        if self.seeds_per_cell == 0 {
            return Err(field_err("seeds_per_cell", "must be >= 1"));
        }
        if self.max_windows == 0 {
            return Err(field_err("max_windows", "must be >= 1"));
        }
        if let Some(d) = self.distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(field_err("distances", format!("distances must be positive, got {d}")));
        }
        let bounds = World::<f64>::default_bounds();
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.agents {
            let at = |field: &'static str, message: String| FieldError {
                section: Some(("agent", a.id.clone())),
                field,
                message,
            };
            if !seen.insert(a.id.as_str()) {
                return Err(at("section", format!("duplicate agent `{}`", a.id)));
            }
            let p = Vec3::new(a.position[0], a.position[1], a.position[2]);
            if !p.is_finite() || !bounds.contains(p) {
                return Err(at(
                    "position",
                    "must lie inside [0, 100] x [0, 100] x [0, 100] m".into(),
                ));
            }
            if a.kind == AgentKind::Ugv && (a.position[2] != 0.0 || a.velocity[2] != 0.0) {
                return Err(at("position", "ground vehicles have z = 0 and vz = 0".into()));
            }
            if a.velocity.iter().any(|v| !v.is_finite()) {
                return Err(at("velocity", "must be finite".into()));
            }
            if a.role != Role::Relay && a.topics.is_empty() {
                return Err(at(
                    "topics",
                    "publishers and subscribers need at least one topic".into(),
                ));
            }
        }
        for o in &self.obstacles {
            let at = |field: &'static str, message: String| FieldError {
                section: Some(("obstacle", o.name.clone())),
                field,
                message,
            };
            if (0..3).any(|i| !(o.min[i] < o.max[i])) {
                return Err(at("max", "each max coordinate must exceed its min".into()));
            }
            match o.attenuation_db {
                Some(db) if !(db.is_finite() && db >= 0.0) => {
                    return Err(at("attenuation_db", "must be >= 0".into()));
                }
                None if o.material.is_none() => {
                    return Err(at("attenuation_db", "give attenuation_db, material, or both".into()));
                }
                _ => {}
            }
        }
        match (&self.master, self.architecture) {
            (None, Architecture::Master) => return Err(field_err("master", "required for the master architecture")),
            (Some(m), _) if !self.agents.iter().any(|a| &a.id == m) => {
                return Err(field_err("master", format!("`{m}` is not a configured agent")));
            }
            _ => {}
        }
        Ok(())
    }

    /// Semantic validation; reports the offending field.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| {
            let place = match &e.section {
                Some((kind, name)) => format!("[{kind} {name}] "),
                None => String::new(),
            };
            Error::config(format!("{place}field `{}`: {}", e.field, e.message))
        })
    }

    pub fn load_profile(&self) -> Result<Profile> {
        load_profile(&self.profile)
    }

    /// First publisher/subscriber match.
    pub fn primary_pair(&self) -> Result<(AgentId, AgentId)> {
        let matches = discover(&self.endpoints(), &FabricConfig::masterless())?;
        let m = matches
            .first()
            .ok_or_else(|| Error::config("no publisher/subscriber pair shares a topic"))?;
        Ok((m.publisher.clone(), m.subscriber.clone()))
    }

    /// Copy with the primary subscriber placed `distance_m` along +x from the
    /// primary publisher (same y, own altitude) and the given channel.
    pub fn with_cell(&self, distance_m: f64, channel: Channel) -> Result<Self> {
        if !(distance_m.is_finite() && distance_m > 0.0) {
            return Err(Error::config(format!("distance must be positive, got {distance_m}")));
        }
        let (p, s) = self.primary_pair()?;
        let mut out = self.clone();
        let pub_pos = self
            .agents
            .iter()
            .find(|a| a.id == p.as_str())
            .expect("matched")
            .position;
        let sub = out.agents.iter_mut().find(|a| a.id == s.as_str()).expect("matched");
        let x = pub_pos[0] + distance_m;
        if x > 100.0 {
            return Err(Error::config(format!(
                "publisher at x = {} leaves no room for a {distance_m} m separation",
                pub_pos[0]
            )));
        }
        sub.position = [x, pub_pos[1], sub.position[2]];
        out.channel = channel;
        Ok(out)
    }

    /// Builds the world, endpoints, matches and profile for a run.
    pub fn build(&self) -> Result<Scenario> {
        self.validate()?;
        let profile = self.load_profile()?;
        let mut world = World::new(World::default_bounds());
        for a in &self.agents {
            let v = |x: [f64; 3]| Vec3::new(x[0], x[1], x[2]);
            world.add_agent(AgentState::new(
                AgentId::new(&a.id),
                a.kind,
                v(a.position),
                v(a.velocity),
                a.address.clone(),
            )?)?;
        }
        let endpoints = self.endpoints();
        let fabric = self.fabric();
        let matches = discover(&endpoints, &fabric)?;
        if matches.is_empty() {
            return Err(Error::config("no publisher/subscriber pair shares a topic"));
        }
        if self.channel == Channel::Nlos {
            let (p, s) = (&matches[0].publisher, &matches[0].subscriber);
            let mid_x = {
                let a = world.agent(p).expect("matched agents exist");
                let b = world.agent(s).expect("matched agents exist");
                0.5 * (a.position.x + b.position.x)
            };
            for o in &self.obstacles {
                let v = |x: [f64; 3]| Vec3::new(x[0], x[1], x[2]);
                let mut footprint = Aabb::new(v(o.min), v(o.max))?;
                if o.placement == Placement::Midway {
                    footprint = footprint.recentered_x(mid_x);
                }
                let mut obstacle = Obstacle::new(o.name.clone(), footprint, o.attenuation_db.unwrap_or(0.0))?;
                if let Some(m) = &o.material {
                    obstacle = obstacle.with_material(m.clone());
                }
                world.add_obstacle(obstacle);
            }
        }
        Ok(Scenario {
            world,
            endpoints,
            fabric,
            matches,
            profile,
        })
    }

    /// Config text in the documented grammar; parses back to an equal value.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let triple = |v: [f64; 3]| format!("{}, {}, {}", v[0], v[1], v[2]);
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "channel = {}", self.channel.as_str());
        let _ = writeln!(s, "transport = {}", self.transport.as_str());
        let _ = writeln!(s, "architecture = {}", self.architecture.as_str());
        if let Some(m) = &self.master {
            let _ = writeln!(s, "master = {m}");
        }
        let _ = writeln!(s, "profile = {}", self.profile);
        let _ = writeln!(s, "payload_bytes = {}", self.payload_bytes);
        let _ = writeln!(s, "segment_bytes = {}", self.segment_bytes);
        let _ = writeln!(s, "tcp_window_bytes = {}", self.tcp_window_bytes);
        let _ = writeln!(s, "max_retries = {}", self.max_retries);
        let _ = writeln!(s, "base_window_ms = {}", self.base_window_ms);
        let _ = writeln!(s, "window_adaptation = {}", self.window_adaptation.as_str());
        let _ = writeln!(s, "loss_threshold = {}", self.loss_threshold);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "seeds_per_cell = {}", self.seeds_per_cell);
        if !self.distances.is_empty() {
            let d: Vec<String> = self.distances.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(s, "distances = {}", d.join(", "));
        }
        let _ = writeln!(s, "max_windows = {}", self.max_windows);
        let _ = writeln!(s, "discovery_announce = {}", self.discovery_announce);
        for a in &self.agents {
            let _ = writeln!(s, "\n[agent {}]", a.id);
            let _ = writeln!(s, "kind = {}", a.kind.as_str());
            let _ = writeln!(s, "position = {}", triple(a.position));
            let _ = writeln!(s, "velocity = {}", triple(a.velocity));
            let _ = writeln!(s, "role = {}", a.role.as_str());
            if !a.topics.is_empty() {
                let _ = writeln!(s, "topics = {}", a.topics.join(", "));
            }
            let _ = writeln!(s, "address = {}", a.address);
        }
        for o in &self.obstacles {
            let _ = writeln!(s, "\n[obstacle {}]", o.name);
            let _ = writeln!(s, "min = {}", triple(o.min));
            let _ = writeln!(s, "max = {}", triple(o.max));
            if let Some(db) = o.attenuation_db {
                let _ = writeln!(s, "attenuation_db = {db}");
            }
            if let Some(m) = &o.material {
                let _ = writeln!(s, "material = {m}");
            }
            let _ = writeln!(s, "placement = {}", o.placement.as_str());
        }
        s
    }
}

/// Parses config text. `origin` names the source in diagnostics; relative
/// profile paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, origin: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig> {
    let doc = ini::parse(text, origin)?;
    let d = ScenarioConfig::default();
    let mut r = Reader::new(&doc, &doc.root);
    let mut cfg = ScenarioConfig {
        name: r.string("name").unwrap_or(d.name),
        agents: Vec::new(),
        obstacles: Vec::new(),
        channel: r.choice("channel", CHANNELS)?.unwrap_or(d.channel),
        transport: r.choice("transport", TRANSPORTS)?.unwrap_or(d.transport),
        architecture: r.choice("architecture", ARCHITECTURES)?.unwrap_or(d.architecture),
        master: r.string("master"),
        profile: r.string("profile").unwrap_or(d.profile),
        payload_bytes: r.count("payload_bytes")?.unwrap_or(d.payload_bytes),
        segment_bytes: to_u32(&mut r, "segment_bytes")?.unwrap_or(d.segment_bytes),
        tcp_window_bytes: to_u32(&mut r, "tcp_window_bytes")?.unwrap_or(d.tcp_window_bytes),
        max_retries: to_u32(&mut r, "max_retries")?.unwrap_or(d.max_retries),
        base_window_ms: r.positive("base_window_ms")?.unwrap_or(d.base_window_ms),
        window_adaptation: r
            .choice("window_adaptation", ADAPTATIONS)?
            .unwrap_or(d.window_adaptation),
        loss_threshold: r.positive("loss_threshold")?.unwrap_or(d.loss_threshold),
        seed: r.count("seed")?.unwrap_or(d.seed),
        seeds_per_cell: to_u32(&mut r, "seeds_per_cell")?.unwrap_or(d.seeds_per_cell),
        distances: r.numbers("distances")?.unwrap_or(d.distances),
        max_windows: r.count("max_windows")?.unwrap_or(d.max_windows),
        discovery_announce: r.choice("discovery_announce", BOOLS)?.unwrap_or(d.discovery_announce),
    };
    let profile_line = r.line_of("profile");
    r.finish()?;

    for sec in &doc.sections {
        let mut r = Reader::new(&doc, sec);
        match sec.kind.as_str() {
            "agent" => {
                let kind_line = r.line_of("kind");
                let kind = r
                    .choice("kind", KINDS)?
                    .ok_or_else(|| r.error(kind_line, "kind", "missing required field"))?;
                let pos_line = r.line_of("position");
                let position = r
                    .triple("position")?
                    .ok_or_else(|| r.error(pos_line, "position", "missing required field"))?;
                let role_line = r.line_of("role");
                let role = r
                    .choice("role", ROLES)?
                    .ok_or_else(|| r.error(role_line, "role", "missing required field"))?;
                let topics = r
                    .string("topics")
                    .map(|t| {
                        t.split(',')
                            .map(|x| x.trim().to_string())
                            .filter(|x| !x.is_empty())
                            .collect()
                    })
                    .unwrap_or_default();
                cfg.agents.push(AgentSpec {
                    id: sec.name.clone(),
                    kind,
                    position,
                    velocity: r.triple("velocity")?.unwrap_or([0.0; 3]),
                    role,
                    topics,
                    address: r.string("address").unwrap_or_else(|| sec.name.clone()),
                });
            }
            "obstacle" => {
                let min_line = r.line_of("min");
                let min = r
                    .triple("min")?
                    .ok_or_else(|| r.error(min_line, "min", "missing required field"))?;
                let max_line = r.line_of("max");
                let max = r
                    .triple("max")?
                    .ok_or_else(|| r.error(max_line, "max", "missing required field"))?;
                cfg.obstacles.push(ObstacleSpec {
                    name: sec.name.clone(),
                    min,
                    max,
                    attenuation_db: r.non_negative("attenuation_db")?,
                    material: r.string("material"),
                    placement: r.choice("placement", PLACEMENTS)?.unwrap_or_default(),
                });
            }
            other => {
                return Err(r.error(
                    sec.line,
                    "section",
                    format!("unknown section kind `{other}`, allowed: agent, obstacle"),
                ));
            }
        }
        r.finish()?;
    }

    if let Err(e) = cfg.check() {
        let line = match &e.section {
            None => doc.root.entries.iter().find(|x| x.key == e.field).map_or(0, |x| x.line),
            Some((kind, name)) => doc
                .sections
                .iter()
                .find(|s| s.kind == *kind && &s.name == name)
                .map_or(0, |s| {
                    s.entries.iter().find(|x| x.key == e.field).map_or(s.line, |x| x.line)
                }),
        };
        return Err(Error::Parse {
            path: origin.to_string(),
            line,
            field: e.field.to_string(),
            message: e.message,
        });
    }

    // Profiles: built-in names first, then files relative to the config.
    if crate::net::profile::builtin_profile(&cfg.profile).is_none() {
        let candidate = match base_dir {
            Some(dir) if Path::new(&cfg.profile).is_relative() => dir.join(&cfg.profile),
            _ => Path::new(&cfg.profile).to_path_buf(),
        };
        let resolved = std::fs::canonicalize(&candidate)
            .ok()
            .filter(|p| p.is_file())
            .ok_or_else(|| Error::Parse {
                path: origin.to_string(),
                line: profile_line,
                field: "profile".into(),
                message: format!(
                    "`{}` is neither a built-in profile ({}) nor a readable file",
                    cfg.profile,
                    crate::net::profile::builtin_profile_names().join(", ")
                ),
            })?;
        cfg.profile = resolved.display().to_string();
        load_profile(&cfg.profile)?;
    }
    Ok(cfg)
}

fn to_u32(r: &mut Reader<'_>, key: &'static str) -> Result<Option<u32>> {
    let line = r.line_of(key);
    match r.count(key)? {
        None => Ok(None),
        Some(v) => u32::try_from(v)
            .map(Some)
            .map_err(|_| r.error(line, key, format!("{v} is too large"))),
    }
}

/// Reads and validates a scenario file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string(), path.parent())
}
