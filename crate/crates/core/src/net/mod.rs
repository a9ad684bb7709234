//! Packet-level network simulator: channel model, packets, event queue,
//! keyed randomness and the two transports.

pub mod channel;
pub mod event;
pub mod expected;
pub mod packet;
pub mod profile;
pub mod rng;
pub mod transport;

pub use channel::{delay_components, logistic, per_packet_loss_probability, LinkModel};
pub use event::EventQueue;
pub use packet::{chunk_payload, Packet};
pub use profile::{builtin_profile, load_profile, LinkClass, LinkProfile, Profile};
pub use rng::KeyedUniform;
pub use transport::{
    transmit_tcp, transmit_tcp_with, transmit_udp, transmit_udp_with, BernoulliLoss, HopChannel, Link, LossSource,
    Sender, TransmissionOutcome, Transport,
};
