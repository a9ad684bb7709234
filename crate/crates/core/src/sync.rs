//! Synchronization math: velocity-aware window adaptation, packet loss
//! probability and the four-term packet delay decomposition.
//!
//! Windows are measured in milliseconds, speeds in metres per second and
//! delays in seconds. Everything here is a pure function on `Copy` values.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest window the adaptation may produce, in milliseconds.
pub const W_MIN_MS: f64 = 0.1;
/// Largest window the adaptation may produce, in milliseconds.
pub const W_MAX_MS: f64 = 100.0;
/// Divisor turning a speed difference in m/s into a window increment in ms.
pub const VELOCITY_DIVISOR: f64 = 1000.0;

/// How the publisher/subscriber speed difference enters the adaptation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VelocityTerm {
    /// `|V_p - V_s|`; the window never shrinks below its base.
    #[default]
    Absolute,
    /// `V_p - V_s` as printed; a faster subscriber shrinks the window.
    Signed,
}

/// One synchronization window: the configured base length, the length after
/// adaptation, and the co-simulation timestamp at which it starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncWindow<T> {
    pub base_ms: T,
    pub adapted_ms: T,
    pub start_time_ms: T,
}

impl<T: Scalar> SyncWindow<T> {
    /// A fresh window at `t = 0` whose adapted length equals the base.
    pub fn new(base_ms: T) -> Result<Self> {
        Self::starting_at(base_ms, T::zero())
    }

    pub fn starting_at(base_ms: T, start_time_ms: T) -> Result<Self> {
        if !base_ms.is_finite() || base_ms <= T::zero() {
            return Err(Error::invalid(format!(
                "window base must be positive and finite, got {base_ms:?}"
            )));
        }
        if !start_time_ms.is_finite() || start_time_ms < T::zero() {
            return Err(Error::invalid(format!(
                "window start must be non-negative and finite, got {start_time_ms:?}"
            )));
        }
        Ok(Self {
            base_ms,
            adapted_ms: clamp_window(base_ms),
            start_time_ms,
        })
    }

    /// End of the window in co-simulation time.
    pub fn end_time_ms(&self) -> T {
        self.start_time_ms + self.adapted_ms
    }
}

/// Speeds of the publisher and the subscriber of one communication event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityPair<T> {
    pub publisher_speed: T,
    pub subscriber_speed: T,
}

impl<T: Scalar> VelocityPair<T> {
    pub fn new(publisher_speed: T, subscriber_speed: T) -> Result<Self> {
        let pair = Self {
            publisher_speed,
            subscriber_speed,
        };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("publisher", self.publisher_speed),
            ("subscriber", self.subscriber_speed),
        ] {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(format!(
                    "{name} speed must be finite and >= 0, got {v:?}"
                )));
            }
        }
        Ok(())
    }

    /// Speed difference as used by the adaptation rule, in m/s.
    pub fn difference(&self, term: VelocityTerm) -> T {
        let d = self.publisher_speed - self.subscriber_speed;
        match term {
            VelocityTerm::Absolute => d.abs(),
            VelocityTerm::Signed => d,
        }
    }
}

fn clamp_window<T: Scalar>(w: T) -> T {
    w.max(T::lit(W_MIN_MS)).min(T::lit(W_MAX_MS))
}

/// Adapts the window to the speed difference of a publisher/subscriber pair:
/// `w_a = clamp(w + |V_p - V_s| / 1000, W_MIN, W_MAX)`.
///
/// The base and start time are carried over unchanged, so repeated
/// application with the same speeds is idempotent.
pub fn adapt_window<T: Scalar>(window: SyncWindow<T>, velocities: VelocityPair<T>) -> Result<SyncWindow<T>> {
    adapt_window_with(window, velocities, VelocityTerm::Absolute, T::one())
}

/// General form of [`adapt_window`]: chooses signed or absolute velocity
/// difference and scales the velocity term by `gain` (the orchestrator uses
/// a gain of 2 for the window following a loss-threshold breach).
pub fn adapt_window_with<T: Scalar>(
    window: SyncWindow<T>,
    velocities: VelocityPair<T>,
    term: VelocityTerm,
    gain: T,
) -> Result<SyncWindow<T>> {
    velocities.validate()?;
    if !gain.is_finite() || gain < T::zero() {
        return Err(Error::invalid(format!(
            "velocity gain must be finite and >= 0, got {gain:?}"
        )));
    }
    let increment = gain * velocities.difference(term) / T::lit(VELOCITY_DIVISOR);
    Ok(SyncWindow {
        adapted_ms: clamp_window(window.base_ms + increment),
        ..window
    })
}

/// Moves the window start forward by its adapted length: `t = t + w_a`.
pub fn advance_timestamp<T: Scalar>(window: SyncWindow<T>) -> SyncWindow<T> {
    SyncWindow {
        start_time_ms: window.start_time_ms + window.adapted_ms,
        ..window
    }
}

/// `L_p = 1 - D_s / D_p`. An idle window (`published == 0`) is lossless.
pub fn packet_loss_probability<T: Scalar>(delivered: u64, published: u64) -> Result<T> {
    if delivered > published {
        return Err(Error::Invariant(format!(
            "delivered ({delivered}) exceeds published ({published})"
        )));
    }
    if published == 0 {
        return Ok(T::zero());
    }
    Ok(T::one() - T::from_count(delivered) / T::from_count(published))
}

/// `PD_a = D_pr + D_t + D_pg + D_q`, all in seconds.
pub fn average_delay<T: Scalar>(processing: T, transmission: T, propagation: T, queuing: T) -> Result<T> {
    DelayComponents::new(processing, transmission, propagation, queuing).map(|c| c.total())
}

/// The four delay terms of one packet (or an average over packets), seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DelayComponents<T> {
    pub processing: T,
    pub transmission: T,
    pub propagation: T,
    pub queuing: T,
}

impl<T: Scalar> DelayComponents<T> {
    pub fn new(processing: T, transmission: T, propagation: T, queuing: T) -> Result<Self> {
        let c = Self {
            processing,
            transmission,
            propagation,
            queuing,
        };
        for (name, v) in c.named() {
            if !v.is_finite() || v < T::zero() {
                return Err(Error::invalid(format!(
                    "{name} delay must be finite and >= 0, got {v:?}"
                )));
            }
        }
        Ok(c)
    }

    pub fn zero() -> Self {
        Self {
            processing: T::zero(),
            transmission: T::zero(),
            propagation: T::zero(),
            queuing: T::zero(),
        }
    }

    fn named(&self) -> [(&'static str, T); 4] {
        [
            ("processing", self.processing),
            ("transmission", self.transmission),
            ("propagation", self.propagation),
            ("queuing", self.queuing),
        ]
    }

    /// Left-to-right four-term sum.
    pub fn total(&self) -> T {
        self.processing + self.transmission + self.propagation + self.queuing
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            processing: self.processing * k,
            transmission: self.transmission * k,
            propagation: self.propagation * k,
            queuing: self.queuing * k,
        }
    }
}

impl<T: Scalar> std::ops::Add for DelayComponents<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            processing: self.processing + o.processing,
            transmission: self.transmission + o.transmission,
            propagation: self.propagation + o.propagation,
            queuing: self.queuing + o.queuing,
        }
    }
}

impl<T: Scalar> std::ops::AddAssign for DelayComponents<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Counts and delays observed during one synchronization window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMetrics<T> {
    /// Packets handed to the transport (`D_p`).
    pub packets_published: u64,
    /// Packets delivered end to end (`D_s`).
    pub packets_delivered: u64,
    pub loss_probability: T,
    /// Mean per-packet delay components over delivered packets.
    pub delay_processing_s: T,
    pub delay_transmission_s: T,
    pub delay_propagation_s: T,
    pub delay_queuing_s: T,
    /// Sum of the four components above.
    pub delay_average_s: T,
}

impl<T: Scalar> WindowMetrics<T> {
    /// Builds metrics from raw counts and the summed delay components of the
    /// delivered packets. Components are averaged per delivered packet.
    pub fn from_counts(published: u64, delivered: u64, delivered_delay_sum: DelayComponents<T>) -> Result<Self> {
        let loss_probability = packet_loss_probability(delivered, published)?;
        let mean = if delivered == 0 {
            DelayComponents::zero()
        } else {
            delivered_delay_sum.scaled(T::one() / T::from_count(delivered))
        };
        let delay_average_s = average_delay(mean.processing, mean.transmission, mean.propagation, mean.queuing)?;
        Ok(Self {
            packets_published: published,
            packets_delivered: delivered,
            loss_probability,
            delay_processing_s: mean.processing,
            delay_transmission_s: mean.transmission,
            delay_propagation_s: mean.propagation,
            delay_queuing_s: mean.queuing,
            delay_average_s,
        })
    }

    pub fn idle() -> Self {
        Self {
            packets_published: 0,
            packets_delivered: 0,
            loss_probability: T::zero(),
            delay_processing_s: T::zero(),
            delay_transmission_s: T::zero(),
            delay_propagation_s: T::zero(),
            delay_queuing_s: T::zero(),
            delay_average_s: T::zero(),
        }
    }

    pub fn components(&self) -> DelayComponents<T> {
        DelayComponents {
            processing: self.delay_processing_s,
            transmission: self.delay_transmission_s,
            propagation: self.delay_propagation_s,
            queuing: self.delay_queuing_s,
        }
    }
}
