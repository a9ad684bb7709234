//! Time-stepped kinematic world: agents on a bounded terrain, obstacle
//! boxes for line-of-sight checks, explicit Euler stepping.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Opaque agent identifier. Cheap to clone; ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentId(Arc<str>);

impl AgentId {
    pub fn new(id: impl AsRef<str>) -> Self {
        Self(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AgentId {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn norm(&self) -> T {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    fn component(&self, axis: usize) -> T {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Axis-aligned box with closed faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb<T> {
    pub min: Vec3<T>,
    pub max: Vec3<T>,
}

impl<T: Scalar> Aabb<T> {
    pub fn new(min: Vec3<T>, max: Vec3<T>) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::invalid("box corners must be finite"));
        }
        if !(min.x < max.x && min.y < max.y && min.z < max.z) {
            return Err(Error::invalid(format!("box ranges must be nonempty: {min:?}..{max:?}")));
        }
        Ok(Self { min, max })
    }

    pub fn center(&self) -> Vec3<T> {
        (self.min + self.max) * T::lit(0.5)
    }

    pub fn contains(&self, p: Vec3<T>) -> bool {
        (0..3).all(|a| p.component(a) >= self.min.component(a) && p.component(a) <= self.max.component(a))
    }

    /// Same extents, translated so that its x-centre sits at `x`.
    pub fn recentered_x(&self, x: T) -> Self {
        let shift = x - self.center().x;
        let d = Vec3::new(shift, T::zero(), T::zero());
        Self {
            min: self.min + d,
            max: self.max + d,
        }
    }

    /// Slab test for the closed segment `a`-`b`. Touching a face counts.
    pub fn intersects_segment(&self, a: Vec3<T>, b: Vec3<T>) -> bool {
        let dir = b - a;
        let mut t0 = T::zero();
        let mut t1 = T::one();
        for axis in 0..3 {
            let o = a.component(axis);
            let d = dir.component(axis);
            let lo = self.min.component(axis);
            let hi = self.max.component(axis);
            if d == T::zero() {
                if o < lo || o > hi {
                    return false;
                }
                continue;
            }
            let (mut near, mut far) = ((lo - o) / d, (hi - o) / d);
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentKind {
    Ugv,
    Uav,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::Ugv => "ugv",
            AgentKind::Uav => "uav",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<T> {
    pub agent_id: AgentId,
    pub kind: AgentKind,
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
    pub network_address: String,
}

impl<T: Scalar> AgentState<T> {
    /// Validates finiteness and pins ground vehicles to `z = 0, vz = 0`.
    pub fn new(
        agent_id: AgentId,
        kind: AgentKind,
        position: Vec3<T>,
        velocity: Vec3<T>,
        network_address: impl Into<String>,
    ) -> Result<Self> {
        if !position.is_finite() || !velocity.is_finite() {
            return Err(Error::invalid(format!(
                "agent {agent_id}: position and velocity must be finite"
            )));
        }
        let (position, velocity) = match kind {
            AgentKind::Ugv => (
                Vec3::new(position.x, position.y, T::zero()),
                Vec3::new(velocity.x, velocity.y, T::zero()),
            ),
            AgentKind::Uav => (position, velocity),
        };
        Ok(Self {
            agent_id,
            kind,
            position,
            velocity,
            network_address: network_address.into(),
        })
    }

    pub fn speed(&self) -> T {
        self.velocity.norm()
    }
}

/// Euclidean 3-D distance between two agents, metres.
pub fn distance<T: Scalar>(a: &AgentState<T>, b: &AgentState<T>) -> T {
    (a.position - b.position).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle<T> {
    pub name: String,
    pub footprint: Aabb<T>,
    /// Attenuation added when the box cuts a sight line, dB.
    pub attenuation_db: T,
    /// Optional material tag; link profiles may carry a per-material dB value
    /// that takes precedence over `attenuation_db`.
    pub material: Option<String>,
}

impl<T: Scalar> Obstacle<T> {
    pub fn new(name: impl Into<String>, footprint: Aabb<T>, attenuation_db: T) -> Result<Self> {
        if !attenuation_db.is_finite() || attenuation_db < T::zero() {
            return Err(Error::invalid(format!(
                "obstacle attenuation must be >= 0, got {attenuation_db:?}"
            )));
        }
        Ok(Self {
            name: name.into(),
            footprint,
            attenuation_db,
            material: None,
        })
    }

    pub fn with_material(mut self, material: impl Into<String>) -> Self {
        self.material = Some(material.into());
        self
    }
}

/// Read-only projection of one agent handed to the network side each window.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSnapshot<T> {
    pub agent_id: AgentId,
    pub kind: AgentKind,
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World<T> {
    agents: BTreeMap<AgentId, AgentState<T>>,
    obstacles: Vec<Obstacle<T>>,
    bounds: Aabb<T>,
    sim_time_ms: T,
}

impl<T: Scalar> World<T> {
    /// The 100 m x 100 m terrain with a 100 m altitude ceiling.
    pub fn default_bounds() -> Aabb<T> {
        Aabb {
            min: Vec3::zero(),
            max: Vec3::new(T::lit(100.0), T::lit(100.0), T::lit(100.0)),
        }
    }

    pub fn new(bounds: Aabb<T>) -> Self {
        Self {
            agents: BTreeMap::new(),
            obstacles: Vec::new(),
            bounds,
            sim_time_ms: T::zero(),
        }
    }

    pub fn add_agent(&mut self, agent: AgentState<T>) -> Result<()> {
        if self.agents.contains_key(&agent.agent_id) {
            return Err(Error::config(format!("duplicate agent id `{}`", agent.agent_id)));
        }
        if !self.bounds.contains(agent.position) {
            return Err(Error::config(format!(
                "agent `{}` at {:?} lies outside the world bounds",
                agent.agent_id, agent.position
            )));
        }
        self.agents.insert(agent.agent_id.clone(), agent);
        Ok(())
    }

    pub fn add_obstacle(&mut self, obstacle: Obstacle<T>) {
        self.obstacles.push(obstacle);
    }

    pub fn agent(&self, id: &AgentId) -> Option<&AgentState<T>> {
        self.agents.get(id)
    }

    pub fn agent_mut(&mut self, id: &AgentId) -> Option<&mut AgentState<T>> {
        self.agents.get_mut(id)
    }

    pub fn agents(&self) -> impl Iterator<Item = &AgentState<T>> {
        self.agents.values()
    }

    pub fn obstacles(&self) -> &[Obstacle<T>] {
        &self.obstacles
    }

    pub fn bounds(&self) -> &Aabb<T> {
        &self.bounds
    }

    pub fn sim_time_ms(&self) -> T {
        self.sim_time_ms
    }

    /// Places an agent, clamping into the bounds. Used by grid sweeps.
    pub fn set_position(&mut self, id: &AgentId, position: Vec3<T>) -> Result<()> {
        let bounds = self.bounds;
        let agent = self
            .agents
            .get_mut(id)
            .ok_or_else(|| Error::config(format!("unknown agent `{id}`")))?;
        let z = if agent.kind == AgentKind::Ugv {
            T::zero()
        } else {
            position.z
        };
        agent.position = clamp_into(&bounds, Vec3::new(position.x, position.y, z));
        Ok(())
    }

    /// Advances every agent by `velocity * dt` (explicit Euler), clamped to the
    /// bounds, and moves the physics clock forward by `dt_ms`.
    pub fn step_in_place(&mut self, dt_ms: T) -> Result<()> {
        if !dt_ms.is_finite() || dt_ms <= T::zero() {
            return Err(Error::invalid(format!("step length must be positive, got {dt_ms:?}")));
        }
        let dt_s = dt_ms / T::lit(1000.0);
        for agent in self.agents.values_mut() {
            let next = agent.position + agent.velocity * dt_s;
            agent.position = clamp_into(&self.bounds, next);
            if agent.kind == AgentKind::Ugv {
                agent.position.z = T::zero();
            }
        }
        self.sim_time_ms = self.sim_time_ms + dt_ms;
        Ok(())
    }

    pub fn step(&self, dt_ms: T) -> Result<Self> {
        let mut next = self.clone();
        next.step_in_place(dt_ms)?;
        Ok(next)
    }

    /// Obstacles whose box cuts the sight line between `a` and `b`.
    pub fn blocking_obstacles<'w>(
        &'w self,
        a: &AgentState<T>,
        b: &AgentState<T>,
    ) -> impl Iterator<Item = &'w Obstacle<T>> + 'w {
        let (pa, pb) = (a.position, b.position);
        self.obstacles
            .iter()
            .filter(move |o| o.footprint.intersects_segment(pa, pb))
    }

    /// `(is_los, total_attenuation_db)` for the segment between two agents.
    pub fn line_of_sight(&self, a: &AgentState<T>, b: &AgentState<T>) -> (bool, T) {
        let mut blocked = false;
        let mut total = T::zero();
        for o in self.blocking_obstacles(a, b) {
            blocked = true;
            total = total + o.attenuation_db;
        }
        (!blocked, total)
    }

    /// Agents sorted by id with their current kinematics.
    pub fn snapshot(&self) -> Vec<AgentSnapshot<T>> {
        self.agents
            .values()
            .map(|a| AgentSnapshot {
                agent_id: a.agent_id.clone(),
                kind: a.kind,
                position: a.position,
                velocity: a.velocity,
            })
            .collect()
    }
}

fn clamp_into<T: Scalar>(b: &Aabb<T>, p: Vec3<T>) -> Vec3<T> {
    Vec3::new(
        p.x.max(b.min.x).min(b.max.x),
        p.y.max(b.min.y).min(b.max.y),
        p.z.max(b.min.z).min(b.max.z),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn agent(id: &str, kind: AgentKind, p: Vec3<f64>, vel: Vec3<f64>) -> AgentState<f64> {
        AgentState::new(AgentId::new(id), kind, p, vel, id).unwrap()
    }

    fn world_with(agents: Vec<AgentState<f64>>) -> World<f64> {
        let mut w = World::new(World::default_bounds());
        for a in agents {
            w.add_agent(a).unwrap();
        }
        w
    }

    #[test]
    fn euler_step_moves_agent() {
        let w = world_with(vec![agent("a", AgentKind::Uav, v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0))]);
        let w = w.step(1000.0).unwrap();
        assert_eq!(w.agent(&"a".into()).unwrap().position, v(1.0, 0.0, 0.0));
        assert_eq!(w.sim_time_ms(), 1000.0);
    }

    #[test]
    fn step_clamps_at_boundary() {
        let w = world_with(vec![agent("a", AgentKind::Ugv, v(100.0, 0.0, 0.0), v(1.0, 0.0, 0.0))]);
        let w = w.step(1000.0).unwrap();
        assert_eq!(w.agent(&"a".into()).unwrap().position, v(100.0, 0.0, 0.0));
    }

    #[test]
    fn stationary_agent_stays_put() {
        let w = world_with(vec![agent("a", AgentKind::Uav, v(3.0, 4.0, 5.0), Vec3::zero())]);
        let w = w.step(12.5).unwrap().step(0.3).unwrap();
        assert_eq!(w.agent(&"a".into()).unwrap().position, v(3.0, 4.0, 5.0));
    }

    #[test]
    fn rejects_non_positive_step() {
        let w = world_with(vec![]);
        assert!(w.step(0.0).is_err());
        assert!(w.step(-1.0).is_err());
    }

    #[test]
    fn ugv_is_pinned_to_ground() {
        let a = agent("g", AgentKind::Ugv, v(1.0, 1.0, 5.0), v(0.0, 0.0, 3.0));
        assert_eq!(a.position.z, 0.0);
        assert_eq!(a.velocity.z, 0.0);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut w = world_with(vec![agent("a", AgentKind::Ugv, Vec3::zero(), Vec3::zero())]);
        assert!(w
            .add_agent(agent("a", AgentKind::Uav, Vec3::zero(), Vec3::zero()))
            .is_err());
    }

    #[test]
    fn distance_examples() {
        let o = agent("o", AgentKind::Uav, Vec3::zero(), Vec3::zero());
        assert_eq!(distance(&o, &o), 0.0);
        let b = agent("b", AgentKind::Uav, v(3.0, 4.0, 0.0), Vec3::zero());
        assert_relative_eq!(distance(&o, &b), 5.0, max_relative = 1e-12);
        let c = agent("c", AgentKind::Uav, v(20.0, 0.0, 10.0), Vec3::zero());
        assert_relative_eq!(distance(&o, &c), 500f64.sqrt(), max_relative = 1e-12);
        assert!((distance(&o, &c) - 22.3607).abs() < 1e-4);
    }

    #[test]
    fn line_of_sight_examples() {
        let a = agent("a", AgentKind::Ugv, v(10.0, 50.0, 0.0), Vec3::zero());
        let b = agent("b", AgentKind::Ugv, v(50.0, 50.0, 0.0), Vec3::zero());
        let mut w = world_with(vec![a.clone(), b.clone()]);
        assert_eq!(w.line_of_sight(&a, &b), (true, 0.0));

        // Box centred on the segment midpoint.
        let house = Aabb::new(v(28.0, 48.0, 0.0), v(32.0, 52.0, 5.0)).unwrap();
        w.add_obstacle(Obstacle::new("house", house, 12.0).unwrap());
        assert_eq!(w.line_of_sight(&a, &b), (false, 12.0));

        // Box hovering above a ground-level segment.
        let mut w2 = world_with(vec![a.clone(), b.clone()]);
        let cloud = Aabb::new(v(28.0, 48.0, 3.0), v(32.0, 52.0, 8.0)).unwrap();
        w2.add_obstacle(Obstacle::new("cloud", cloud, 7.0).unwrap());
        assert_eq!(w2.line_of_sight(&a, &b), (true, 0.0));
    }

    #[test]
    fn attenuation_sums_over_blocking_boxes() {
        let a = agent("a", AgentKind::Ugv, v(0.0, 5.0, 0.0), Vec3::zero());
        let b = agent("b", AgentKind::Uav, v(100.0, 5.0, 10.0), Vec3::zero());
        let mut w = world_with(vec![a.clone(), b.clone()]);
        for (i, x) in [20.0, 70.0, 90.0].into_iter().enumerate() {
            let bx = Aabb::new(v(x - 2.0, 0.0, 0.0), v(x + 2.0, 100.0, 30.0)).unwrap();
            w.add_obstacle(Obstacle::new(format!("o{i}"), bx, 4.0 + i as f64).unwrap());
        }
        assert_eq!(w.line_of_sight(&a, &b), (false, 15.0));
    }

    #[test]
    fn snapshot_is_sorted_and_tracks_steps() {
        assert!(World::<f64>::new(World::default_bounds()).snapshot().is_empty());
        let w = world_with(vec![
            agent("zeta", AgentKind::Uav, v(1.0, 1.0, 1.0), v(1.0, 0.0, 0.0)),
            agent("alpha", AgentKind::Ugv, v(2.0, 2.0, 0.0), Vec3::zero()),
        ]);
        let snap = w.snapshot();
        assert_eq!(snap.len(), 2);
        assert_eq!(snap[0].agent_id.as_str(), "alpha");
        assert_eq!(snap[1].agent_id.as_str(), "zeta");
        let snap = w.step(500.0).unwrap().snapshot();
        assert_eq!(snap[1].position, v(1.5, 1.0, 1.0));
    }

    #[test]
    fn recentering_keeps_extents() {
        let bx = Aabb::new(v(0.0, 0.0, 0.0), v(6.0, 100.0, 30.0)).unwrap();
        let r = bx.recentered_x(40.0);
        assert_eq!(r.min, v(37.0, 0.0, 0.0));
        assert_eq!(r.max, v(43.0, 100.0, 30.0));
    }

    fn arb_point() -> impl Strategy<Value = Vec3<f64>> {
        (0.0f64..100.0, 0.0f64..100.0, 0.0f64..50.0).prop_map(|(x, y, z)| v(x, y, z))
    }

    proptest! {
        #[test]
        fn flow_composition_without_clamping(
            vel in (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
            a in 1.0f64..1000.0,
            b in 1.0f64..1000.0,
        ) {
            // Start centrally; two seconds at <= 1 m/s cannot reach a wall.
            let start = v(50.0, 50.0, 50.0);
            let w = world_with(vec![agent("u", AgentKind::Uav, start, v(vel.0, vel.1, vel.2))]);
            let two = w.step(a).unwrap().step(b).unwrap();
            let one = w.step(a + b).unwrap();
            let p2 = two.agent(&"u".into()).unwrap().position;
            let p1 = one.agent(&"u".into()).unwrap().position;
            prop_assert!((p2 - p1).norm() < 1e-9);
        }

        #[test]
        fn distance_is_a_metric(p in arb_point(), q in arb_point(), r in arb_point()) {
            let a = agent("a", AgentKind::Uav, p, Vec3::zero());
            let b = agent("b", AgentKind::Uav, q, Vec3::zero());
            let c = agent("c", AgentKind::Uav, r, Vec3::zero());
            prop_assert_eq!(distance(&a, &b), distance(&b, &a));
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-9);
        }

        #[test]
        fn line_of_sight_is_symmetric(
            p in arb_point(), q in arb_point(),
            lo in (0.0f64..90.0, 0.0f64..90.0, 0.0f64..40.0),
            size in (0.5f64..20.0, 0.5f64..20.0, 0.5f64..20.0),
            db in 0.0f64..30.0,
        ) {
            let a = agent("a", AgentKind::Uav, p, Vec3::zero());
            let b = agent("b", AgentKind::Uav, q, Vec3::zero());
            let mut w = world_with(vec![a.clone(), b.clone()]);
            let min = v(lo.0, lo.1, lo.2);
            let bx = Aabb::new(min, min + v(size.0, size.1, size.2)).unwrap();
            w.add_obstacle(Obstacle::new("box", bx, db).unwrap());
            prop_assert_eq!(w.line_of_sight(&a, &b), w.line_of_sight(&b, &a));
        }

        #[test]
        fn ugv_altitude_stays_zero(
            steps in proptest::collection::vec(0.1f64..5000.0, 1..40),
            vel in (-30.0f64..30.0, -30.0f64..30.0, -30.0f64..30.0),
        ) {
            let mut w = world_with(vec![agent("g", AgentKind::Ugv, v(50.0, 50.0, 0.0), v(vel.0, vel.1, vel.2))]);
            for dt in steps {
                w.step_in_place(dt).unwrap();
                prop_assert_eq!(w.agent(&"g".into()).unwrap().position.z, 0.0);
            }
        }
    }
}
