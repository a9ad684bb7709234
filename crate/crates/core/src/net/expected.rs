//! Closed-form expectations for the transports under i.i.d. loss.
//!
//! Written against `num_traits::Num` so they can be evaluated exactly over
//! rationals as well as over floats.

use num_traits::{pow, FromPrimitive, Num};

/// Probability that a packet survives some attempt out of `max_retries + 1`
/// independent ones: `1 - p^(R+1)`.
pub fn tcp_delivery_probability<T: Num + Clone>(loss: T, max_retries: u32) -> T {
    T::one() - pow(loss, max_retries as usize + 1)
}

/// `E[delivered] = n (1 - p^(R+1))`. Go-back-N resends discarded frames
/// without evaluating them, so every packet sees exactly its own sequence of
/// evaluated attempts regardless of the window size.
pub fn expected_tcp_delivered<T: Num + Clone + FromPrimitive>(packets: u64, loss: T, max_retries: u32) -> T {
    T::from_u64(packets).expect("packet count representable") * tcp_delivery_probability(loss, max_retries)
}

/// `E[delivered] = n (1 - p)` for a single attempt per packet.
pub fn expected_udp_delivered<T: Num + Clone + FromPrimitive>(packets: u64, loss: T) -> T {
    T::from_u64(packets).expect("packet count representable") * (T::one() - loss)
}

/// Expected end-to-end loss fraction over independent hops.
pub fn expected_path_loss<T: Num + Clone>(per_hop_delivery: &[T]) -> T {
    T::one() - per_hop_delivery.iter().cloned().fold(T::one(), |a, b| a * b)
}
