//! Link-level algorithm library for IRS-assisted terahertz industrial IoT
//! networks.
//!
//! The crate models an access point that serves uplink and downlink IIoT
//! devices through passive reflecting surfaces, and provides the pieces a
//! simulator needs to evaluate one coherence interval end to end:
//!
//! - [`scenario`]: 3D geometry, device placement, and group mobility
//!   (random-waypoint head, reference-point group members).
//! - [`channel`]: THz pathloss with molecular absorption, per-element
//!   cascaded channels, channel-estimation-error statistics, and the
//!   coherent phase-shift configuration.
//! - [`linproc`]: MMSE receive combining and transmit beamforming, SINR
//!   evaluation under imperfect CSI, and rate accounting.
//! - [`power`]: downlink water-filling power allocation with a bisected
//!   budget multiplier.
//! - [`assoc`]: uplink-IRS to downlink-IRS association strategies
//!   (deferred acceptance, exhaustive search, greedy, random) with
//!   stability checking and overhead accounting.
//!
//! Everything is deterministic given the caller's RNG stream, and the crate
//! is `no_std`-compatible (requires `alloc`); IO, configuration, and the
//! experiment harness live in the companion `irslink-harness` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assoc;
pub mod channel;
pub mod linalg;
pub mod linproc;
pub mod power;
pub mod scenario;

pub use num_complex::Complex64;
