//! Log-distance path loss with a logistic SNR-to-loss mapping, and the
//! per-transmission delay decomposition.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sync::DelayComponents;

/// Radio and queueing parameters of one link class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel<T> {
    pub tx_power_dbm: T,
    pub path_loss_exponent: T,
    /// Path loss at the 1 m reference distance.
    pub reference_loss_db: T,
    pub noise_floor_dbm: T,
    /// SNR at which a transmission is lost with probability one half.
    pub snr_threshold_db: T,
    pub bitrate_bps: T,
    pub propagation_speed_mps: T,
    pub processing_delay_s: T,
    pub queue_service_rate_pps: T,
    /// Slope of the logistic loss curve per dB of SNR margin.
    pub loss_steepness: T,
}

pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

impl<T: Scalar> Default for LinkModel<T> {
    /// A generic 802.11g-like link: 20 dBm, free-space exponent, 54 Mbps.
    fn default() -> Self {
        Self {
            tx_power_dbm: T::lit(20.0),
            path_loss_exponent: T::lit(2.0),
            reference_loss_db: T::lit(40.0),
            noise_floor_dbm: T::lit(-90.0),
            snr_threshold_db: T::lit(10.0),
            bitrate_bps: T::lit(54.0e6),
            propagation_speed_mps: T::lit(SPEED_OF_LIGHT_MPS),
            processing_delay_s: T::zero(),
            queue_service_rate_pps: T::lit(1.0e6),
            loss_steepness: T::one(),
        }
    }
}

impl<T: Scalar> LinkModel<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("path_loss_exponent", self.path_loss_exponent),
            ("reference_loss_db", self.reference_loss_db),
            ("noise_floor_dbm", self.noise_floor_dbm),
            ("snr_threshold_db", self.snr_threshold_db),
            ("bitrate_bps", self.bitrate_bps),
            ("propagation_speed_mps", self.propagation_speed_mps),
            ("processing_delay_s", self.processing_delay_s),
            ("queue_service_rate_pps", self.queue_service_rate_pps),
            ("loss_steepness", self.loss_steepness),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        if self.path_loss_exponent < T::lit(1.6) || self.path_loss_exponent > T::lit(6.0) {
            return Err(Error::invalid(format!(
                "path_loss_exponent must lie in [1.6, 6], got {:?}",
                self.path_loss_exponent
            )));
        }
        if self.bitrate_bps <= T::zero() {
            return Err(Error::invalid("bitrate_bps must be positive"));
        }
        let c = T::lit(SPEED_OF_LIGHT_MPS);
        if (self.propagation_speed_mps - c).abs() > c * T::lit(0.05) {
            return Err(Error::invalid(format!(
                "propagation_speed_mps must be within 5% of the speed of light, got {:?}",
                self.propagation_speed_mps
            )));
        }
        if self.processing_delay_s < T::zero() {
            return Err(Error::invalid("processing_delay_s must be >= 0"));
        }
        if self.queue_service_rate_pps <= T::zero() {
            return Err(Error::invalid("queue_service_rate_pps must be positive"));
        }
        if self.loss_steepness <= T::zero() {
            return Err(Error::invalid("loss_steepness must be positive"));
        }
        Ok(())
    }

    /// `tx - (PL(1 m) + 10 n log10(max(d, 1))) - extra`, dBm.
    pub fn received_power_dbm(&self, distance_m: T, extra_attenuation_db: T) -> T {
        let d = distance_m.max(T::one());
        let path_loss = self.reference_loss_db + T::lit(10.0) * self.path_loss_exponent * d.log10();
        self.tx_power_dbm - path_loss - extra_attenuation_db
    }

    pub fn snr_db(&self, distance_m: T, extra_attenuation_db: T) -> T {
        self.received_power_dbm(distance_m, extra_attenuation_db) - self.noise_floor_dbm
    }

    /// Transmission time of one frame, seconds.
    pub fn transmission_delay_s(&self, size_bytes: u32) -> T {
        T::lit(8.0) * T::from_count(u64::from(size_bytes)) / self.bitrate_bps
    }
}

/// Numerically stable `1 / (1 + e^-z)`.
pub fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Probability that a single transmission over the link is lost.
pub fn per_packet_loss_probability<T: Scalar>(model: &LinkModel<T>, distance_m: T, extra_attenuation_db: T) -> T {
    let snr = model.snr_db(distance_m, extra_attenuation_db);
    logistic(-model.loss_steepness * (snr - model.snr_threshold_db))
}

/// `(D_pr, D_t, D_pg, D_q)` for one transmission of `packet_size_bytes` over
/// `distance_m` with `queue_depth` frames ahead of it in the link FIFO.
pub fn delay_components<T: Scalar>(
    model: &LinkModel<T>,
    packet_size_bytes: u32,
    distance_m: T,
    queue_depth: u64,
) -> Result<DelayComponents<T>> {
    if !distance_m.is_finite() || distance_m < T::zero() {
        return Err(Error::invalid(format!("distance must be >= 0, got {distance_m:?}")));
    }
    DelayComponents::new(
        model.processing_delay_s,
        model.transmission_delay_s(packet_size_bytes),
        distance_m / model.propagation_speed_mps,
        T::from_count(queue_depth) / model.queue_service_rate_pps,
    )
}
